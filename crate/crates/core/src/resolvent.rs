//! Resolvent solves `L_{nk}(ω^{(n,ν)}) u = h` on the line: staggered-grid
//! finite differences and closed-form variation of constants.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::banded::BandMatrix;
use crate::numeric::linear_exp_weights;
use crate::pencil::{PencilContext, SpectralQuantities};
use crate::{c, Error, Result, Scaled, C64, I};

/// Grid on `[-d, d]` with `N` intervals; integer nodes `x_j`, half nodes `x̃_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StaggeredGrid {
    pub d: f64,
    pub n: usize,
}

impl StaggeredGrid {
    pub fn new(d: f64, n: usize) -> Result<Self> {
        if n % 2 != 0 || n < 8 {
            return Err(Error::Grid(alloc::format!("N = {n} must be even and at least 8")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Grid("d must be positive".into()));
        }
        Ok(StaggeredGrid { d, n })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.d / self.n as f64
    }

    /// Interface index `N/2`.
    pub fn mid(&self) -> usize {
        self.n / 2
    }

    pub fn x_int(&self, j: usize) -> f64 {
        if j == self.mid() {
            return 0.0;
        }
        -self.d + j as f64 * self.h()
    }

    pub fn x_half(&self, j: usize) -> f64 {
        -self.d + (j as f64 + 0.5) * self.h()
    }
}

/// Two active components sampled on both node families. At the interface
/// node `int[N/2]` holds the left limit and `right` the right limit.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub int: Vec<[C64; 2]>,
    pub half: Vec<[C64; 2]>,
    pub right: [C64; 2],
}

impl NodalField {
    pub fn zeros(grid: &StaggeredGrid) -> Self {
        let z = [C64::new(0.0, 0.0); 2];
        NodalField { int: alloc::vec![z; grid.n + 1], half: alloc::vec![z; grid.n], right: z }
    }

    /// Samples `f(x, minus)`; the interface is sampled from both sides.
    pub fn sample<F: Fn(f64, bool) -> [C64; 2]>(grid: &StaggeredGrid, f: F) -> Self {
        let m = grid.mid();
        let int = (0..=grid.n).map(|j| f(grid.x_int(j), j <= m)).collect();
        let half = (0..grid.n).map(|j| f(grid.x_half(j), j < m)).collect();
        NodalField { int, half, right: f(0.0, false) }
    }

    pub fn conj(&self) -> Self {
        let cj = |a: &[C64; 2]| [a[0].conj(), a[1].conj()];
        NodalField {
            int: self.int.iter().map(cj).collect(),
            half: self.half.iter().map(cj).collect(),
            right: cj(&self.right),
        }
    }

    pub fn is_zero(&self) -> bool {
        let z = |a: &[C64; 2]| a[0] == C64::new(0.0, 0.0) && a[1] == C64::new(0.0, 0.0);
        self.int.iter().all(z) && self.half.iter().all(z) && z(&self.right)
    }

    /// `sqrt(h Σ |u₁(x_j)|² + h Σ |u₂(x̃_j)|²)`.
    pub fn l2_norm(&self, grid: &StaggeredGrid) -> f64 {
        let h = grid.h();
        let s1: f64 = self.int.iter().map(|a| a[0].norm_sqr()).sum();
        let s2: f64 = self.half.iter().map(|a| a[1].norm_sqr()).sum();
        (h * (s1 + s2)).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let m = |a: &[C64; 2]| a[0].norm().max(a[1].norm());
        self.int.iter().chain(self.half.iter()).chain(core::iter::once(&self.right)).map(m).fold(0.0, f64::max)
    }
}

/// Finite-difference unknowns: `U` at integer nodes (left limit at `N/2`),
/// `V` at half nodes followed by `V_N = u₂(0)`, and the eliminated `u₁(0⁺)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub u_right: C64,
}

impl GridFunction {
    /// Collocates both components on both node families. `u₁` at half nodes
    /// and `u₂` at integer nodes are two-point averages of same-side values.
    pub fn to_nodal(&self, grid: &StaggeredGrid) -> NodalField {
        let n = grid.n;
        let m = grid.mid();
        let z = C64::new(0.0, 0.0);
        let mut int = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let u2 = if j == 0 || j == n {
                z
            } else if j == m {
                self.v[n]
            } else {
                0.5 * (self.v[j - 1] + self.v[j])
            };
            int.push([self.u[j], u2]);
        }
        let mut half = Vec::with_capacity(n);
        for j in 0..n {
            let left = if j == m { self.u_right } else { self.u[j] };
            half.push([0.5 * (left + self.u[j + 1]), self.v[j]]);
        }
        NodalField { int, half, right: [self.u_right, self.v[n]] }
    }
}

#[inline]
fn iu(j: usize, m: usize) -> usize {
    if j <= m {
        2 * j
    } else {
        2 * j + 1
    }
}

#[inline]
fn iv(j: usize, m: usize) -> usize {
    if j < m {
        2 * j + 1
    } else {
        2 * j + 2
    }
}

/// One equation with scaled coefficients before equilibration.
struct Row {
    cols: Vec<(usize, Scaled)>,
    rhs: Scaled,
}

impl Row {
    fn new() -> Self {
        Row { cols: Vec::with_capacity(10), rhs: Scaled::ZERO }
    }

    fn add(&mut self, col: usize, v: Scaled) {
        if let Some(e) = self.cols.iter_mut().find(|e| e.0 == col) {
            e.1 = e.1 + v;
        } else {
            self.cols.push((col, v));
        }
    }

    fn addr(&mut self, col: usize, v: f64) {
        self.add(col, Scaled::from_real(v));
    }

    /// Divides by the largest coefficient.
    fn equilibrate(self) -> (Vec<(usize, C64)>, C64) {
        let m = self.cols.iter().map(|e| e.1.log_abs()).fold(f64::NEG_INFINITY, f64::max);
        let s = Scaled::exp(c(-m, 0.0));
        let cols = self.cols.into_iter().map(|(j, v)| (j, (v * s).to_complex())).collect();
        (cols, (self.rhs * s).to_complex())
    }
}

/// Assembled, equilibrated finite-difference system.
#[derive(Debug, Clone)]
pub struct FdSystem {
    pub grid: StaggeredGrid,
    pub nk: f64,
    pub matrix: BandMatrix,
    pub rhs: Vec<C64>,
    omega: C64,
    v_plus: Scaled,
    v_minus: Scaled,
    h1_right: C64,
    h1: Vec<C64>,
}

const KL: usize = 5;
const KU: usize = 4;

/// Builds the staggered-grid system for `L u = h`; `h` is only read at the
/// nodes the scheme collocates (`h₁` at integer nodes, `h₂` at half nodes).
pub fn assemble_fd(q: &SpectralQuantities, k: f64, rhs: &NodalField, grid: &StaggeredGrid) -> Result<FdSystem> {
    let n = grid.n;
    let m = grid.mid();
    let h = grid.h();
    let nk = q.n as f64 * k;
    let w = q.omega;
    if w.norm() == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let side_v = |minus: bool| if minus { q.v_minus } else { q.v_plus };
    // r = i h
    let r1 = |j: usize| I * rhs.int[j][0];
    let r2 = |j: usize| I * rhs.half[j][1];
    let mut rows: Vec<(usize, Row)> = Vec::new();
    let big_n;
    if nk == 0.0 {
        // unknowns V_0..V_{N-1}, V_N in position order
        big_n = n + 1;
        let ivz = |j: usize| if j < m { j } else { j + 1 };
        let iface = m;
        let inv_h2 = 1.0 / (h * h);
        for j in 0..n {
            let mut row = Row::new();
            let wv = side_v(j < m) * w;
            row.add(ivz(j), wv);
            if j == m - 1 || j == m {
                let nb = if j == m - 1 { j - 1 } else { j + 1 };
                let f = inv_h2 / 3.0;
                row.addr(iface, -8.0 * f);
                row.addr(ivz(j), 12.0 * f);
                row.addr(ivz(nb), -4.0 * f);
            } else {
                row.addr(ivz(j), 2.0 * inv_h2);
                if j == 0 {
                    row.addr(ivz(0), inv_h2);
                } else {
                    row.addr(ivz(j - 1), -inv_h2);
                }
                if j == n - 1 {
                    row.addr(ivz(n - 1), inv_h2);
                } else {
                    row.addr(ivz(j + 1), -inv_h2);
                }
            }
            row.rhs = Scaled::from(I * w * r2(j));
            rows.push((ivz(j), row));
        }
        let mut row = Row::new();
        let f = 1.0 / (3.0 * h);
        // u2'(0+) - u2'(0-) = 0
        row.addr(iface, -16.0 * f);
        row.addr(ivz(m), 9.0 * f);
        row.addr(ivz(m + 1), -f);
        row.addr(ivz(m - 1), 9.0 * f);
        row.addr(ivz(m - 2), -f);
        rows.push((iface, row));
    } else {
        big_n = 2 * n + 2;
        let iface = n + 1;
        let inv_h = 1.0 / h;
        let wn = |minus: bool| side_v(minus) * (w / nk) + c(nk, 0.0);
        let kap = I / (nk * 3.0 * h);
        // u1(0+) = U_{m} + kap * (V_{m-2} - 9V_{m-1} + 16V_N - 9V_m + V_{m+1})
        let u0p: [(usize, C64); 6] = [
            (iu(m, m), c(1.0, 0.0)),
            (iv(m - 2, m), kap),
            (iv(m - 1, m), -9.0 * kap),
            (iface, 16.0 * kap),
            (iv(m, m), -9.0 * kap),
            (iv(m + 1, m), kap),
        ];
        // eq 1 at integer nodes
        for j in 0..=n {
            let minus = j <= m;
            let mut row = Row::new();
            if j == 0 {
                row.addr(iv(0, m), 2.0 * inv_h);
            } else if j == n {
                row.addr(iv(n - 1, m), -2.0 * inv_h);
            } else if j == m {
                let f = inv_h / 3.0;
                row.addr(iface, 8.0 * f);
                row.addr(iv(m - 1, m), -9.0 * f);
                row.addr(iv(m - 2, m), f);
            } else {
                row.addr(iv(j, m), inv_h);
                row.addr(iv(j - 1, m), -inv_h);
            }
            row.add(iu(j, m), wn(minus).scale_by(-I));
            row.rhs = Scaled::from(w / nk * r1(j));
            rows.push((iu(j, m), row));
        }
        // eq 1 at 0+
        {
            let mut row = Row::new();
            let f = inv_h / 3.0;
            row.addr(iface, -8.0 * f);
            row.addr(iv(m, m), 9.0 * f);
            row.addr(iv(m + 1, m), -f);
            let wp = wn(false).scale_by(-I);
            for (col, cf) in u0p {
                row.add(col, wp.scale_by(cf));
            }
            row.rhs = Scaled::from(w / nk * (I * rhs.right[0]));
            rows.push((iface, row));
        }
        // eq 2 at half nodes
        let inv_h2 = inv_h * inv_h;
        for j in 0..n {
            let minus = j < m;
            let mut row = Row::new();
            row.add(iv(j, m), side_v(minus) * w);
            if j == m - 1 || j == m {
                let nb = if j == m - 1 { j - 1 } else { j + 1 };
                let f = inv_h2 / 3.0;
                row.addr(iface, -8.0 * f);
                row.addr(iv(j, m), 12.0 * f);
                row.addr(iv(nb, m), -4.0 * f);
            } else {
                row.addr(iv(j, m), 2.0 * inv_h2);
                if j == 0 {
                    row.addr(iv(0, m), inv_h2);
                } else {
                    row.addr(iv(j - 1, m), -inv_h2);
                }
                if j == n - 1 {
                    row.addr(iv(n - 1, m), inv_h2);
                } else {
                    row.addr(iv(j + 1, m), -inv_h2);
                }
            }
            let g = I * nk * inv_h;
            row.add(iu(j + 1, m), Scaled::from(g));
            if j == m {
                for (col, cf) in u0p {
                    row.add(col, Scaled::from(-g * cf));
                }
            } else {
                row.add(iu(j, m), Scaled::from(-g));
            }
            row.rhs = Scaled::from(I * w * r2(j));
            rows.push((iv(j, m), row));
        }
    }
    let mut mat = BandMatrix::zeros(big_n, KL, KU);
    let mut b = alloc::vec![C64::new(0.0, 0.0); big_n];
    for (r, row) in rows {
        let (cols, rr) = row.equilibrate();
        for (col, v) in cols {
            mat.add(r, col, v);
        }
        b[r] = rr;
    }
    Ok(FdSystem {
        grid: *grid,
        nk,
        matrix: mat,
        rhs: b,
        omega: w,
        v_plus: q.v_plus,
        v_minus: q.v_minus,
        h1_right: rhs.right[0],
        h1: rhs.int.iter().map(|a| a[0]).collect(),
    })
}

impl FdSystem {
    /// Direct banded solve; fails with `SingularSystem` on a vanishing pivot.
    pub fn solve(&self) -> Result<Vec<C64>> {
        let lu = self.matrix.clone().factor(1e-14)?;
        let mut x = self.rhs.clone();
        lu.solve(&mut x);
        Ok(x)
    }

    /// `‖Ax − b‖ / max(‖b‖, floor)` in the equilibrated rows.
    pub fn residual(&self, x: &[C64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let num: f64 = ax.iter().zip(&self.rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = self.rhs.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
        num / den.max(1e-300)
    }

    /// Maps the unknown vector back to grid values.
    pub fn unpack(&self, x: &[C64]) -> GridFunction {
        let n = self.grid.n;
        let m = self.grid.mid();
        let h = self.grid.h();
        if self.nk == 0.0 {
            let ivz = |j: usize| if j < m { j } else { j + 1 };
            let mut v: Vec<C64> = (0..n).map(|j| x[ivz(j)]).collect();
            v.push(x[m]);
            let inv = |s: Scaled| s.recip();
            let (vm, vp) = (inv(self.v_minus), inv(self.v_plus));
            // u1 = -h1 / V
            let u = (0..=n).map(|j| -(if j <= m { vm } else { vp }).scale_by(self.h1[j]).to_complex()).collect();
            let u_right = -vp.scale_by(self.h1_right).to_complex();
            return GridFunction { u, v, u_right };
        }
        let u: Vec<C64> = (0..=n).map(|j| x[iu(j, m)]).collect();
        let mut v: Vec<C64> = (0..n).map(|j| x[iv(j, m)]).collect();
        v.push(x[n + 1]);
        let kap = I / (self.nk * 3.0 * h);
        let u_right = u[m] + kap * (v[m - 2] - 9.0 * v[m - 1] + 16.0 * v[n] - 9.0 * v[m] + v[m + 1]);
        let _ = self.omega;
        GridFunction { u, v, u_right }
    }
}

/// Finite-difference solution with its discrete residual.
#[derive(Debug, Clone)]
pub struct FdSolution {
    pub field: GridFunction,
    pub residual: f64,
}

pub fn solve_fd(ctx: &PencilContext, n: i32, nu: u32, rhs: &NodalField, grid: &StaggeredGrid) -> Result<FdSolution> {
    let q = ctx.spectral_quantities(n, nu)?;
    solve_fd_with(&q, ctx.k, rhs, grid)
}

pub fn solve_fd_with(q: &SpectralQuantities, k: f64, rhs: &NodalField, grid: &StaggeredGrid) -> Result<FdSolution> {
    let sys = assemble_fd(q, k, rhs, grid)?;
    let x = sys.solve()?;
    let residual = sys.residual(&x);
    Ok(FdSolution { field: sys.unpack(&x), residual })
}

/// `u₃ = (u₂′ − i nk u₁)/(iω)` at integer nodes (left limit at `N/2`) and
/// at `0⁺`, with the scheme's one-sided stencils at the interface.
pub fn reconstruct_u3(omega: C64, nk: f64, gf: &GridFunction, grid: &StaggeredGrid) -> Result<(Vec<C64>, C64)> {
    if omega.norm() == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let n = grid.n;
    let m = grid.mid();
    let h = grid.h();
    let v = &gf.v;
    let d2 = |j: usize| -> C64 {
        if j == 0 {
            2.0 * v[0] / h
        } else if j == n {
            -2.0 * v[n - 1] / h
        } else if j == m {
            (8.0 * v[n] - 9.0 * v[m - 1] + v[m - 2]) / (3.0 * h)
        } else {
            (v[j] - v[j - 1]) / h
        }
    };
    let iw = I * omega;
    let out = (0..=n).map(|j| (d2(j) - I * nk * gf.u[j]) / iw).collect();
    let dp = (-8.0 * v[n] + 9.0 * v[m] - v[m + 1]) / (3.0 * h);
    Ok((out, (dp - I * nk * gf.u_right) / iw))
}

/// Constants and source terms of the closed-form solution.
#[derive(Debug, Clone)]
pub struct ResolventPieces {
    pub c_plus: Scaled,
    pub c_minus: Scaled,
    /// `ρ₁, ρ₂` on the union grid of each side (spacing `h/2`), minus side
    /// ordered from `-d` to `0`, plus side from `0` to `d`.
    pub rho_minus: Vec<[C64; 2]>,
    pub rho_plus: Vec<[C64; 2]>,
}

/// Closed-form solution sampled on the grid.
#[derive(Debug, Clone)]
pub struct AnalyticSolution {
    pub field: NodalField,
    pub u3_int: Vec<C64>,
    pub u3_half: Vec<C64>,
    pub u3_right: C64,
    pub pieces: ResolventPieces,
}

impl AnalyticSolution {
    pub fn grid_function(&self) -> GridFunction {
        let n = self.field.half.len();
        let mut v: Vec<C64> = self.field.half.iter().map(|a| a[1]).collect();
        v.push(self.field.right[1]);
        debug_assert_eq!(v.len(), n + 1);
        GridFunction { u: self.field.int.iter().map(|a| a[0]).collect(), v, u_right: self.field.right[0] }
    }
}

fn z_weights(z: Scaled) -> (C64, C64, Scaled) {
    // (z w0(z), z w1(z), e^{-z}) with w from linear_exp_weights
    if z.log_abs() > 12.0 {
        let zi = z.recip().to_complex();
        let em = Scaled::exp(-z.clamped(690.0));
        let e = em.to_complex();
        (C64::new(1.0, 0.0) - zi * (C64::new(1.0, 0.0) - e), zi * (C64::new(1.0, 0.0) - e) - e, em)
    } else {
        let zc = z.to_complex();
        let (w0, w1) = linear_exp_weights(zc);
        (zc * w0, zc * w1, Scaled::exp(-zc))
    }
}

/// Variation-of-constants solution for homogeneous layers.
///
/// Source integrals use product integration of the piecewise-linear
/// interpolant of `ρ` against `e^{−μ|x−s|}` on the union grid.
pub fn solve_analytic(
    ctx: &PencilContext,
    n: i32,
    nu: u32,
    rhs: &NodalField,
    grid: &StaggeredGrid,
) -> Result<AnalyticSolution> {
    let q = ctx.spectral_quantities(n, nu)?;
    solve_analytic_with(&q, ctx.k, rhs, grid)
}

pub fn solve_analytic_with(
    q: &SpectralQuantities,
    k: f64,
    rhs: &NodalField,
    grid: &StaggeredGrid,
) -> Result<AnalyticSolution> {
    let nn = grid.n;
    let m = grid.mid();
    let dlt = 0.5 * grid.h();
    let nk = q.n as f64 * k;
    if q.dispersion_normalized() < 1e-12 {
        return Err(Error::EssentialSpectrum { n: q.n, nu: 0 });
    }
    for s in [q.mu_minus, q.mu_plus] {
        let re = s.clamped(690.0).re;
        if re.is_nan() || re <= 0.0 {
            return Err(Error::EssentialSpectrum { n: q.n, nu: 0 });
        }
    }
    // union points per side: minus from -d to 0 (2m+1 points), plus from 0 to d
    let mut h_minus: Vec<[C64; 2]> = Vec::with_capacity(2 * m + 1);
    for j in 0..m {
        h_minus.push(rhs.int[j]);
        h_minus.push(rhs.half[j]);
    }
    h_minus.push(rhs.int[m]);
    let mut h_plus: Vec<[C64; 2]> = Vec::with_capacity(2 * m + 1);
    h_plus.push(rhs.right);
    for j in m..nn {
        h_plus.push(rhs.half[j]);
        h_plus.push(rhs.int[j + 1]);
    }
    // σ = Vρ:  σ₁ = nk h₁/μ + i h₂,  σ₂ = −nk h₁/μ + i h₂
    let sigma = |hh: &[[C64; 2]], mu: Scaled| -> Vec<[C64; 2]> {
        let nkmu = mu.recip().scale_by(c(nk, 0.0)).to_complex();
        hh.iter().map(|a| [nkmu * a[0] + I * a[1], -nkmu * a[0] + I * a[1]]).collect()
    };
    let sig_m = sigma(&h_minus, q.mu_minus);
    let sig_p = sigma(&h_plus, q.mu_plus);

    // SA(x) = μ ∫_x^{end} σ₁ e^{−μ(s−x)} ds,  SB(x) = μ ∫_{start}^x σ₂ e^{−μ(x−s)} ds
    let sweep = |sig: &[[C64; 2]], mu: Scaled| -> (Vec<C64>, Vec<C64>) {
        let len = sig.len();
        let (a0, a1, em) = z_weights(mu * dlt);
        let e = em.to_complex();
        let mut sa = alloc::vec![C64::new(0.0, 0.0); len];
        let mut sb = alloc::vec![C64::new(0.0, 0.0); len];
        for i in (0..len - 1).rev() {
            sa[i] = e * sa[i + 1] + a0 * sig[i][0] + a1 * sig[i + 1][0];
        }
        for i in 0..len - 1 {
            sb[i + 1] = e * sb[i] + a0 * sig[i + 1][1] + a1 * sig[i][1];
        }
        (sa, sb)
    };
    let (sa_m, sb_m) = sweep(&sig_m, q.mu_minus);
    let (sa_p, sb_p) = sweep(&sig_p, q.mu_plus);

    let (mum, mup, vm, vp) = (q.mu_minus, q.mu_plus, q.v_minus, q.v_plus);
    // a₊ = (i/2) A₊(0),  b₋ = (i/2) B₋(0),  with A = SA/(μV)
    let a_p = (mup * vp).recip().scale_by(0.5 * I * sa_p[0]);
    let b_m = (mum * vm).recip().scale_by(0.5 * I * sb_m[2 * m]);
    let delta = mup * vm + mum * vp;
    let c_p = (mum * vm * b_m * 2.0 + a_p * (mum * vp - mup * vm)) / delta;
    let c_m = (b_m * (mup * vm - mum * vp) + mup * vp * a_p * 2.0) / delta;

    // u₂ = (i/2V)(SA + SB) + μC e^{∓μx},  u₃ = (1/2μ)(SA − SB) ± iVC e^{∓μx}
    let eval = |minus: bool, sa: C64, sb: C64, x: f64| -> (C64, C64) {
        let (mu, v, cc) = if minus { (mum, vm, c_m) } else { (mup, vp, c_p) };
        let ex = if minus { Scaled::exp(mu.clamped(690.0) * x) } else { Scaled::exp(-mu.clamped(690.0) * x) };
        let hom2 = (mu * cc * ex).to_complex();
        let hom3 = (v * cc * ex).scale_by(if minus { -I } else { I }).to_complex();
        let u2 = v.recip().scale_by(0.5 * I * (sa + sb)).to_complex() + hom2;
        let u3 = mu.recip().scale_by(0.5 * (sa - sb)).to_complex() + hom3;
        (u2, u3)
    };
    let u1_of = |minus: bool, u3: C64, h1: C64| -> C64 {
        let v = if minus { vm } else { vp };
        v.recip().scale_by(nk * u3 - h1).to_complex()
    };

    let mut int = alloc::vec![[C64::new(0.0, 0.0); 2]; nn + 1];
    let mut half = alloc::vec![[C64::new(0.0, 0.0); 2]; nn];
    let mut u3_int = alloc::vec![C64::new(0.0, 0.0); nn + 1];
    let mut u3_half = alloc::vec![C64::new(0.0, 0.0); nn];
    for i in 0..=2 * m {
        let x = -grid.d + i as f64 * dlt;
        let x = if i == 2 * m { 0.0 } else { x };
        let (u2, u3) = eval(true, sa_m[i], sb_m[i], x);
        let u1 = u1_of(true, u3, h_minus[i][0]);
        if i % 2 == 0 {
            int[i / 2] = [u1, u2];
            u3_int[i / 2] = u3;
        } else {
            half[i / 2] = [u1, u2];
            u3_half[i / 2] = u3;
        }
    }
    let mut right = [C64::new(0.0, 0.0); 2];
    let mut u3_right = C64::new(0.0, 0.0);
    for i in 0..=2 * m {
        let x = i as f64 * dlt;
        let (u2, u3) = eval(false, sa_p[i], sb_p[i], x);
        let u1 = u1_of(false, u3, h_plus[i][0]);
        if i == 0 {
            right = [u1, u2];
            u3_right = u3;
        } else if i % 2 == 1 {
            half[m + i / 2] = [u1, u2];
            u3_half[m + i / 2] = u3;
        } else {
            int[m + i / 2] = [u1, u2];
            u3_int[m + i / 2] = u3;
        }
    }
    let vr = |sig: &[[C64; 2]], v: Scaled| -> Vec<[C64; 2]> {
        let vi = v.recip();
        sig.iter().map(|s| [vi.scale_by(s[0]).to_complex(), vi.scale_by(s[1]).to_complex()]).collect()
    };
    Ok(AnalyticSolution {
        field: NodalField { int, half, right },
        u3_int,
        u3_half,
        u3_right,
        pieces: ResolventPieces { c_plus: c_p, c_minus: c_m, rho_minus: vr(&sig_m, vm), rho_plus: vr(&sig_p, vp) },
    })
}

/// Relative discrete L² distance between two solutions on the same grid,
/// `u₁` at integer nodes and `u₂` at half nodes.
pub fn relative_gap(a: &GridFunction, b: &GridFunction) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.u.iter().zip(&b.u) {
        num += (x - y).norm_sqr();
        den += y.norm_sqr();
    }
    let nh = a.v.len() - 1;
    for (x, y) in a.v[..nh].iter().zip(&b.v[..nh]) {
        num += (x - y).norm_sqr();
        den += y.norm_sqr();
    }
    (num / den.max(1e-300)).sqrt()
}

/// Row of a refinement study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub error: f64,
}

/// Refinement table with least-squares slope of `log err` against `log N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub reference_n: usize,
    pub slope: Option<f64>,
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let s = sxy / sxx;
    (s, my - s * mx)
}

/// Coefficient of determination of the linear fit.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let (s, b) = linear_fit(x, y);
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, v)| (v - (s * a + b)).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// Errors of FD solves on `n_list` against a solve on `reference_n`
/// (a multiple of each `N` by an even factor). `rhs` samples the source on
/// a given grid.
pub fn fd_convergence_study<R: Fn(&StaggeredGrid) -> NodalField>(
    ctx: &PencilContext,
    n: i32,
    nu: u32,
    rhs: R,
    d: f64,
    n_list: &[usize],
    reference_n: usize,
) -> Result<ConvergenceTable> {
    let q = ctx.spectral_quantities(n, nu)?;
    let gref = StaggeredGrid::new(d, reference_n)?;
    let uref = solve_fd_with(&q, ctx.k, &rhs(&gref), &gref)?.field;
    let mut rows = Vec::new();
    for &nc in n_list {
        if reference_n % nc != 0 || (reference_n / nc) % 2 != 0 && reference_n != nc {
            return Err(Error::Grid(alloc::format!("reference N {reference_n} is not an even multiple of {nc}")));
        }
        let g = StaggeredGrid::new(d, nc)?;
        let u = solve_fd_with(&q, ctx.k, &rhs(&g), &g)?.field;
        let r = reference_n / nc;
        // sample the reference on the coarse nodes
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..=nc {
            let y = uref.u[j * r];
            num += (u.u[j] - y).norm_sqr();
            den += y.norm_sqr();
        }
        for j in 0..nc {
            let y = if r == 1 {
                uref.v[j]
            } else {
                let jf = j * r + r / 2;
                0.5 * (uref.v[jf - 1] + uref.v[jf])
            };
            num += (u.v[j] - y).norm_sqr();
            den += y.norm_sqr();
        }
        rows.push(ConvergenceRow { n: nc, h: g.h(), error: (num / den.max(1e-300)).sqrt() });
    }
    let used: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.error > 0.0).collect();
    let slope = if used.len() >= 2 {
        let x: Vec<f64> = used.iter().map(|r| (r.n as f64).ln()).collect();
        let y: Vec<f64> = used.iter().map(|r| r.error.ln()).collect();
        Some(linear_fit(&x, &y).0)
    } else {
        None
    };
    Ok(ConvergenceTable { rows, reference_n, slope })
}
