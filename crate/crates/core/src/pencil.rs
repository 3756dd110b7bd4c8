//! TM interface pencil `L_{nk}(ω)`: spectral quantities, dispersion functions
//! and eigenvalue location.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::poly::Poly;
use crate::quad::gk15;
use crate::susceptibility::{LinearSusceptibility, MaterialInterface};
use crate::{c, Error, Result, Scaled, C64, I};

/// Interface, wavenumber and base eigenvalue `ω₀ = ω_R + iω_I`.
#[derive(Debug, Clone)]
pub struct PencilContext {
    pub interface: MaterialInterface,
    pub k: f64,
    pub omega0: C64,
}

/// `V±`, `μ±` at one frequency, kept in scaled form.
#[derive(Debug, Clone, Copy)]
pub struct SpectralQuantities {
    pub n: i32,
    pub omega: C64,
    pub v_plus: Scaled,
    pub v_minus: Scaled,
    pub mu_plus: Scaled,
    pub mu_minus: Scaled,
}

impl SpectralQuantities {
    pub fn v(&self, minus: bool) -> Scaled {
        if minus {
            self.v_minus
        } else {
            self.v_plus
        }
    }

    pub fn mu(&self, minus: bool) -> Scaled {
        if minus {
            self.mu_minus
        } else {
            self.mu_plus
        }
    }

    /// `μ₋V₊ + μ₊V₋`; vanishes exactly on the point spectrum.
    pub fn dispersion(&self) -> Scaled {
        self.mu_minus * self.v_plus + self.mu_plus * self.v_minus
    }

    /// `|μ₋V₊ + μ₊V₋| / (|μ₋V₊| + |μ₊V₋|)`.
    pub fn dispersion_normalized(&self) -> f64 {
        let a = self.mu_minus * self.v_plus;
        let b = self.mu_plus * self.v_minus;
        let (la, lb) = (a.log_abs(), b.log_abs());
        let m = la.max(lb);
        if m == f64::NEG_INFINITY {
            return 0.0;
        }
        ((a + b).log_abs() - m).exp() / ((la - m).exp() + (lb - m).exp())
    }
}

impl PencilContext {
    pub fn new(interface: MaterialInterface, k: f64, omega0: C64) -> Result<Self> {
        interface.validate()?;
        if !k.is_finite() {
            return Err(Error::Config("k must be finite".into()));
        }
        Ok(PencilContext { interface, k, omega0 })
    }

    /// `ω^{(n,ν)} = nω_R + iνω_I`.
    pub fn omega_nnu(&self, n: i32, nu: u32) -> C64 {
        c(n as f64 * self.omega0.re, nu as f64 * self.omega0.im)
    }

    /// `ω_I ≤ 0`, the regime where the series is physical.
    pub fn physical(&self) -> bool {
        self.omega0.im <= 0.0
    }

    pub fn spectral_quantities(&self, n: i32, nu: u32) -> Result<SpectralQuantities> {
        self.quantities_at(n, self.omega_nnu(n, nu))
    }

    /// Quantities at wavenumber `nk` and an arbitrary frequency.
    pub fn quantities_at(&self, n: i32, omega: C64) -> Result<SpectralQuantities> {
        let mi = &self.interface;
        let nk2 = (n as f64 * self.k).powi(2);
        let side = |m: &LinearSusceptibility| -> Result<(Scaled, Scaled)> {
            let v = m.permittivity_scaled(mi.eps0, omega)? * (-omega * mi.mu0);
            let mu2 = v * omega + c(nk2, 0.0);
            Ok((v, mu2.sqrt()))
        };
        let (v_plus, mu_plus) = side(&mi.plus)?;
        let (v_minus, mu_minus) = side(&mi.minus)?;
        Ok(SpectralQuantities { n, omega, v_plus, v_minus, mu_plus, mu_minus })
    }
}

/// Index cone `|n| ≤ ν ≤ ν_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexCone {
    pub nu_max: u32,
}

impl IndexCone {
    pub fn contains(&self, n: i32, nu: u32) -> bool {
        nu >= 1 && nu <= self.nu_max && n.unsigned_abs() <= nu
    }

    pub fn members(&self) -> Vec<(i32, u32)> {
        let mut v = Vec::new();
        for nu in 1..=self.nu_max {
            for n in -(nu as i32)..=(nu as i32) {
                v.push((n, nu));
            }
        }
        v
    }

    pub fn frequencies(&self, omega0: C64) -> Vec<C64> {
        self.members().into_iter().map(|(n, nu)| c(n as f64 * omega0.re, nu as f64 * omega0.im)).collect()
    }
}

/// Dielectric over a Lorentz half-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzDispersion {
    pub eps0: f64,
    pub mu0: f64,
    pub eps_plus: f64,
    pub c_l: f64,
    pub gamma: f64,
    pub omega_star: f64,
    pub k: f64,
}

fn constant_plus(mi: &MaterialInterface) -> Result<f64> {
    match mi.plus {
        LinearSusceptibility::Constant { alpha } => Ok(mi.eps0 * (1.0 + alpha)),
        _ => Err(Error::Unsupported("dispersion functions need a constant plus side".into())),
    }
}

impl LorentzDispersion {
    pub fn from_interface(mi: &MaterialInterface, k: f64) -> Result<Self> {
        let eps_plus = constant_plus(mi)?;
        match mi.minus {
            LinearSusceptibility::TruncatedLorentz { c_l, gamma, omega_star, .. }
            | LinearSusceptibility::UntruncatedLorentz { c_l, gamma, omega_star } => {
                Ok(LorentzDispersion { eps0: mi.eps0, mu0: mi.mu0, eps_plus, c_l, gamma, omega_star, k })
            }
            _ => Err(Error::Unsupported("minus side must be a Lorentz model".into())),
        }
    }

    pub fn c_star(&self) -> f64 {
        (self.omega_star * self.omega_star - self.gamma * self.gamma).sqrt()
    }

    /// `T_j = jπ/c*`.
    pub fn t_j(&self, j: u32) -> f64 {
        j as f64 * PI / self.c_star()
    }

    fn parts(&self, n: i32, w: C64) -> [C64; 6] {
        let s = (n as f64 * self.k).powi(2);
        let a1 = (s / self.eps0 - w * w * self.mu0) * self.eps_plus + s;
        let a1d = -2.0 * w * self.mu0 * self.eps_plus;
        let p = w * w + 2.0 * I * self.gamma * w - self.omega_star * self.omega_star;
        let pd = 2.0 * w + 2.0 * I * self.gamma;
        let q = s - w * w * self.mu0 * self.eps_plus;
        let qd = -2.0 * w * self.mu0 * self.eps_plus;
        [a1, a1d, p, pd, q, qd]
    }

    /// `G_n^∞(ω)` and its derivative.
    pub fn g_inf(&self, n: i32, w: C64) -> (C64, C64) {
        let [a1, a1d, p, pd, q, qd] = self.parts(n, w);
        (a1 * p - self.c_l * q, a1d * p + a1 * pd - self.c_l * qd)
    }

    /// `G_n(ω, T)` and `∂_ω G_n`.
    pub fn g(&self, n: i32, w: C64, t: f64) -> (C64, C64) {
        let [_, _, _, _, q, qd] = self.parts(n, w);
        let (g0, g0d) = self.g_inf(n, w);
        let cs = self.c_star();
        let (sn, cn) = (cs * t).sin_cos();
        let z = I * w - self.gamma;
        let e = (z * t).exp();
        let b = z / cs * sn - cn;
        let bd = I / cs * sn;
        let g = g0 - self.c_l * e * q * b;
        let gd = g0d - self.c_l * e * (I * t * q * b + qd * b + q * bd);
        (g, gd)
    }

    /// Coefficient magnitude used to normalise residuals of `G_n`.
    pub fn scale(&self, n: i32, w: C64) -> f64 {
        let [a1, _, p, _, q, _] = self.parts(n, w);
        (a1 * p).norm() + (self.c_l * q).norm()
    }

    /// `G_n^∞` as a quartic in `ω`.
    pub fn g_inf_poly(&self, n: i32) -> Poly {
        let s = (n as f64 * self.k).powi(2);
        let a1 = Poly::real(&[s / self.eps0 * self.eps_plus + s, 0.0, -self.mu0 * self.eps_plus]);
        let p =
            Poly::new(alloc::vec![c(-self.omega_star * self.omega_star, 0.0), c(0.0, 2.0 * self.gamma), c(1.0, 0.0)]);
        let q = Poly::real(&[s, 0.0, -self.mu0 * self.eps_plus]);
        a1.mul(&p).sub(&q.scale(c(self.c_l, 0.0)))
    }

    /// `ω²ε±(ω)` with the rational (untruncated) minus permittivity.
    fn omega0_set_values(&self, w: C64) -> (C64, C64) {
        let chi = -self.c_l / (w * w + 2.0 * I * self.gamma * w - self.omega_star * self.omega_star);
        (w * w * self.eps_plus, w * w * self.eps0 * (1.0 + chi))
    }

    /// Roots of `G_n^∞` outside `Ω₀`.
    pub fn untruncated_eigenvalues(&self, n: i32) -> Result<Vec<C64>> {
        let p = self.g_inf_poly(n);
        if p.degree() == 0 {
            return Err(Error::Unsupported("degenerate dispersion polynomial".into()));
        }
        let mut roots = p.roots()?;
        roots.retain(|&w| {
            let (a, b) = self.omega0_set_values(w);
            a.norm() > 1e-10 && b.norm() > 1e-10
        });
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        Ok(roots)
    }
}

/// Dielectric over a Drude half-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeDispersion {
    pub eps0: f64,
    pub mu0: f64,
    pub eps_plus: f64,
    pub c_d: f64,
    pub gamma: f64,
    pub k: f64,
}

impl DrudeDispersion {
    pub fn from_interface(mi: &MaterialInterface, k: f64) -> Result<Self> {
        let eps_plus = constant_plus(mi)?;
        match mi.minus {
            LinearSusceptibility::TruncatedDrude { c_d, gamma, .. }
            | LinearSusceptibility::UntruncatedDrude { c_d, gamma } => {
                Ok(DrudeDispersion { eps0: mi.eps0, mu0: mi.mu0, eps_plus, c_d, gamma, k })
            }
            _ => Err(Error::Unsupported("minus side must be a Drude model".into())),
        }
    }

    fn parts(&self, n: i32, w: C64) -> [C64; 6] {
        let s = (n as f64 * self.k).powi(2);
        let a1 = (s / self.eps0 - w * w * self.mu0) * self.eps_plus + s;
        let a1d = -2.0 * w * self.mu0 * self.eps_plus;
        let p = w * w + I * self.gamma * w;
        let pd = 2.0 * w + I * self.gamma;
        let q = s - w * w * self.mu0 * self.eps_plus;
        let qd = -2.0 * w * self.mu0 * self.eps_plus;
        [a1, a1d, p, pd, q, qd]
    }

    /// Untruncated dispersion polynomial `(ω² + iγω)A(ω) − c_D Q(ω)` and derivative.
    pub fn f_inf(&self, n: i32, w: C64) -> (C64, C64) {
        let [a1, a1d, p, pd, q, qd] = self.parts(n, w);
        (p * a1 - self.c_d * q, pd * a1 + p * a1d - self.c_d * qd)
    }

    /// `F_T(ω)` and derivative.
    pub fn f_t(&self, n: i32, w: C64, t: f64) -> (C64, C64) {
        let [_, _, _, _, q, qd] = self.parts(n, w);
        let (f0, f0d) = self.f_inf(n, w);
        let e = (-I * w * t).exp();
        let g = -(-self.gamma * t).exp_m1() / self.gamma;
        let lin = C64::new(1.0, 0.0) - I * w * g;
        let f = f0 * e + self.c_d * lin * q;
        let fd = (f0d - I * t * f0) * e + self.c_d * (-I * g * q + lin * qd);
        (f, fd)
    }

    pub fn f_inf_poly(&self, n: i32) -> Poly {
        let s = (n as f64 * self.k).powi(2);
        let a1 = Poly::real(&[s / self.eps0 * self.eps_plus + s, 0.0, -self.mu0 * self.eps_plus]);
        let p = Poly::new(alloc::vec![c(0.0, 0.0), c(0.0, self.gamma), c(1.0, 0.0)]);
        let q = Poly::real(&[s, 0.0, -self.mu0 * self.eps_plus]);
        p.mul(&a1).sub(&q.scale(c(self.c_d, 0.0)))
    }

    /// Untruncated eigenvalues outside `Ω₀`.
    pub fn untruncated_eigenvalues(&self, n: i32) -> Result<Vec<C64>> {
        let mut roots = self.f_inf_poly(n).roots()?;
        roots.retain(|&w| {
            let chi = -self.c_d / (w * w + I * self.gamma * w);
            (w * w * self.eps_plus).norm() > 1e-10 && (w * w * (1.0 + chi)).norm() > 1e-10
        });
        Ok(roots)
    }
}

/// Newton's method on a function returning `(f, f′)`. Stops when the step is
/// below `tol` relative to `|ω|`.
pub fn newton<F: Fn(C64) -> (C64, C64)>(f: F, guess: C64, tol: f64, max_iter: usize) -> Result<C64> {
    let mut w = guess;
    for _ in 0..max_iter {
        let (g, gd) = f(w);
        if gd.norm() == 0.0 || !gd.norm().is_finite() {
            return Err(Error::Convergence { iterations: 0, residual: g.norm() });
        }
        let step = g / gd;
        w -= step;
        if step.norm() <= tol * (1.0 + w.norm()) {
            // one more step to reach the rounding floor
            let (g, gd) = f(w);
            if gd.norm() > 0.0 {
                let s2 = g / gd;
                if s2.norm() < step.norm() {
                    w -= s2;
                }
            }
            return Ok(w);
        }
    }
    Err(Error::Convergence { iterations: max_iter, residual: f(w).0.norm() })
}

/// One point of a Newton continuation in `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationPoint {
    pub t: f64,
    pub omega: C64,
    pub residual: f64,
}

/// Tracks the eigenvalue through `t_list`, taken from the largest `T` down,
/// starting from the untruncated `seed`.
pub fn eigen_continuation(
    disp: &LorentzDispersion,
    n: i32,
    t_list: &[f64],
    seed: C64,
) -> Result<Vec<ContinuationPoint>> {
    let mut ts: Vec<f64> = t_list.to_vec();
    ts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut guess = seed;
    let mut out = Vec::with_capacity(ts.len());
    for &t in &ts {
        let w = newton(|w| disp.g(n, w, t), guess, 1e-15, 100)?;
        out.push(ContinuationPoint { t, omega: w, residual: disp.g(n, w, t).0.norm() });
        guess = w;
    }
    out.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    Ok(out)
}

/// Axis-aligned rectangle `[-a, a] × [y_bottom, y_top]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourRectangle {
    pub x_left: f64,
    pub x_right: f64,
    pub y_bottom: f64,
    pub y_top: f64,
    /// Maximal bisection depth per edge.
    pub budget: u32,
    /// Bisection depth reached on every edge before a panel is accepted.
    pub min_depth: u32,
}

impl ContourRectangle {
    /// The rectangle with vertices `±a`, `±a + i(−γ + δ)`.
    pub fn strip(a: f64, gamma: f64, delta: f64) -> Self {
        ContourRectangle {
            x_left: -a,
            x_right: a,
            y_bottom: -gamma + delta,
            y_top: 0.0,
            budget: 40,
            min_depth: MIN_DEPTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_right > self.x_left && self.y_top > self.y_bottom) {
            return Err(Error::Config("degenerate contour rectangle".into()));
        }
        Ok(())
    }

    /// Counter-clockwise corners.
    pub fn corners(&self) -> [C64; 4] {
        [
            c(self.x_left, self.y_bottom),
            c(self.x_right, self.y_bottom),
            c(self.x_right, self.y_top),
            c(self.x_left, self.y_top),
        ]
    }
}

/// Default subdivision levels applied before any edge panel may be accepted.
pub const MIN_DEPTH: u32 = 6;

/// Zero count of `f` inside `rect` by the argument principle.
///
/// The contour integral of `f′/f` is computed by adaptive Gauss–Kronrod per
/// edge and cross-checked against the accumulated argument increment.
pub fn winding_count<F: Fn(C64) -> (C64, C64)>(f: F, rect: &ContourRectangle) -> Result<i64> {
    rect.validate()?;
    let cs = rect.corners();
    let mut total = C64::new(0.0, 0.0);
    let mut arg_total = 0.0;
    for e in 0..4 {
        let (a, b) = (cs[e], cs[(e + 1) % 4]);
        let dz = b - a;
        let mut bad: Option<C64> = None;
        let integrand = |s: f64| {
            let z = a + dz * s;
            let (g, gd) = f(z);
            gd / g * dz
        };
        // adaptive on [0,1] with depth bound
        let mut stack = alloc::vec![(0.0f64, 1.0f64, 0u32)];
        let mut acc = C64::new(0.0, 0.0);
        let mut fi = integrand;
        while let Some((lo, hi, depth)) = stack.pop() {
            let (v, err) = gk15(lo, hi, &mut fi);
            let ok = err <= 1e-10 * (hi - lo).max(1e-3) + 1e-12;
            if !v.re.is_finite() || !v.im.is_finite() {
                bad = Some(a + dz * (0.5 * (lo + hi)));
                break;
            }
            if (ok && depth >= rect.min_depth) || depth >= rect.budget.max(rect.min_depth) {
                if !ok {
                    return Err(Error::Quadrature("winding edge integral not converged".into()));
                }
                acc += v;
            } else {
                let mid = 0.5 * (lo + hi);
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
        if let Some(z) = bad {
            return Err(Error::ZeroOnContour { re: z.re, im: z.im });
        }
        total += acc;
        arg_total += arg_increment(&f, a, b, rect.min_depth)?;
    }
    let wind = total / (2.0 * PI * I);
    let r = wind.re.round();
    if (wind.re - r).abs() > 0.25 || wind.im.abs() > 0.25 {
        return Err(Error::Quadrature("winding integral not near an integer".into()));
    }
    let by_arg = (arg_total / (2.0 * PI)).round();
    if by_arg != r {
        return Err(Error::Quadrature("argument increment disagrees with winding integral".into()));
    }
    Ok(r as i64)
}

/// Argument increment of `f` along the segment `a → b`, refined until
/// consecutive phase steps are below π/4.
fn arg_increment<F: Fn(C64) -> (C64, C64)>(f: &F, a: C64, b: C64, min_depth: u32) -> Result<f64> {
    let mut total = 0.0;
    let mut stack = alloc::vec![(0.0f64, 1.0f64, 0u32)];
    let val = |s: f64| f(a + (b - a) * s).0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (fa, fb) = (val(lo), val(hi));
        if fa.norm() == 0.0 || fb.norm() == 0.0 {
            let z = a + (b - a) * lo;
            return Err(Error::ZeroOnContour { re: z.re, im: z.im });
        }
        let d = (fb / fa).arg();
        if (d.abs() < PI / 4.0 && depth >= min_depth) || depth > 60 {
            if depth > 60 {
                let z = a + (b - a) * lo;
                return Err(Error::ZeroOnContour { re: z.re, im: z.im });
            }
            let fm = val(0.5 * (lo + hi));
            let d1 = (fm / fa).arg();
            let d2 = (fb / fm).arg();
            if (d1 + d2 - d).abs() < 1e-9 {
                total += d;
                continue;
            }
        }
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi, depth + 1));
        stack.push((lo, mid, depth + 1));
    }
    Ok(total)
}

/// Search settings for [`delta0_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta0Options {
    /// Expected eigenvalue count.
    pub target: i64,
    pub delta_min: f64,
    pub delta_max: f64,
    /// Relative bisection tolerance in `δ`.
    pub rel_tol: f64,
    pub budget: u32,
}

impl Default for Delta0Options {
    fn default() -> Self {
        Delta0Options { target: 4, delta_min: 1e-4, delta_max: 0.12, rel_tol: 1e-3, budget: 40 }
    }
}

/// Depth giving about one panel per oscillation of `e^{iωT}` along an edge
/// of length `len`.
pub fn oscillation_depth(t: f64, len: f64) -> u32 {
    let panels = (t * len / (2.0 * PI)).max(1.0);
    MIN_DEPTH.max(panels.log2().ceil() as u32 + 1)
}

/// Smallest `δ` with `I_T = target` on `∂R_{a,δ}`, by bisection.
pub fn delta0_search(disp: &LorentzDispersion, n: i32, t: f64, a: f64, opts: &Delta0Options) -> Result<f64> {
    let count = |delta: f64| -> Result<i64> {
        let mut d = delta;
        let mut last = Err(Error::Quadrature("no attempt".into()));
        for _ in 0..4 {
            let mut rect = ContourRectangle::strip(a, disp.gamma, d);
            rect.budget = opts.budget;
            rect.min_depth = oscillation_depth(t, 2.0 * a);
            last = winding_count(|w| disp.g(n, w, t), &rect);
            if last.is_ok() {
                return last;
            }
            d *= 1.0 + 3e-4;
        }
        last
    };
    let hi_count = count(opts.delta_max)?;
    if hi_count != opts.target {
        return Err(Error::Convergence { iterations: 0, residual: hi_count as f64 });
    }
    if count(opts.delta_min)? == opts.target {
        return Ok(opts.delta_min);
    }
    let (mut lo, mut hi) = (opts.delta_min, opts.delta_max);
    // geometric bisection: δ₀ spans decades
    while hi / lo - 1.0 > opts.rel_tol {
        let mid = (lo * hi).sqrt();
        if count(mid)? == opts.target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Which essential-spectrum branch a frequency lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EssentialBranch {
    None,
    Plus,
    Minus,
    Both,
}

fn on_branch(val: Scaled, nk2: f64, k_zero: bool, tol_im: f64) -> bool {
    let z = val.to_complex();
    if !z.re.is_finite() {
        return false;
    }
    let mag = z.norm().max(1.0);
    if z.im.abs() > tol_im * mag {
        return false;
    }
    if k_zero {
        z.re > 0.0
    } else {
        z.re >= nk2 * (1.0 - 1e-14)
    }
}

/// Tests `ω²μ₀ε±(ω) ∈ [n²k², ∞)` (or `(0, ∞)` when `nk = 0`).
pub fn essential_spectrum_membership(ctx: &PencilContext, n: i32, omega: C64, tol_im: f64) -> Result<EssentialBranch> {
    let q = ctx.quantities_at(n, omega)?;
    let nk2 = (n as f64 * ctx.k).powi(2);
    let k_zero = nk2 == 0.0;
    // ω²μ₀ε = −ωV
    let plus = on_branch(-(q.v_plus * omega), nk2, k_zero, tol_im);
    let minus = on_branch(-(q.v_minus * omega), nk2, k_zero, tol_im);
    Ok(match (plus, minus) {
        (true, true) => EssentialBranch::Both,
        (true, false) => EssentialBranch::Plus,
        (false, true) => EssentialBranch::Minus,
        _ => EssentialBranch::None,
    })
}

/// `|ω²ε₊(ω)| < tol` or `|ω²ε₋(ω)| < tol`.
pub fn in_omega0(ctx: &PencilContext, omega: C64, tol: f64) -> Result<bool> {
    Ok(omega0_margin(ctx, omega)? < tol)
}

/// `min(|ω²ε₊|, |ω²ε₋|)`.
pub fn omega0_margin(ctx: &PencilContext, omega: C64) -> Result<f64> {
    let mi = &ctx.interface;
    let w2 = omega * omega;
    let p = (mi.plus.permittivity_scaled(mi.eps0, omega)? * w2).abs();
    let m = (mi.minus.permittivity_scaled(mi.eps0, omega)? * w2).abs();
    Ok(p.min(m))
}

/// Classification of a cone frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Resolvent,
    PointSpec,
    Essential,
    Omega0Set,
}

/// Thresholds for [`resolvent_membership`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Normalised dispersion below this counts as an eigenvalue.
    pub point: f64,
    pub essential_im: f64,
    pub omega0: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { point: 1e-8, essential_im: 1e-8, omega0: 1e-10 }
    }
}

pub fn resolvent_membership(ctx: &PencilContext, n: i32, nu: u32, tol: &Tolerances) -> Result<Membership> {
    let w = ctx.omega_nnu(n, nu);
    if in_omega0(ctx, w, tol.omega0)? {
        return Ok(Membership::Omega0Set);
    }
    if essential_spectrum_membership(ctx, n, w, tol.essential_im)? != EssentialBranch::None {
        return Ok(Membership::Essential);
    }
    let q = ctx.spectral_quantities(n, nu)?;
    if q.dispersion_normalized() < tol.point {
        return Ok(Membership::PointSpec);
    }
    Ok(Membership::Resolvent)
}

/// Closed-form eigenfunction at `(1,1)`.
#[derive(Debug, Clone, Copy)]
pub struct Eigenfunction {
    pub k: f64,
    pub mu_minus: C64,
    pub mu_plus: C64,
    pub v_minus: C64,
    pub v_plus: C64,
}

impl Eigenfunction {
    /// Field on the given side (`minus` selects `x ≤ 0` formulas).
    pub fn eval_side(&self, x: f64, minus: bool) -> [C64; 3] {
        if minus {
            let e = (self.mu_minus * x).exp();
            [-I * self.k * e, self.mu_minus * e, -I * self.v_minus * e]
        } else {
            let e = (-self.mu_plus * x).exp();
            let r = self.mu_minus / self.mu_plus;
            [I * self.k * r * e, self.mu_minus * e, I * r * self.v_plus * e]
        }
    }

    pub fn eval(&self, x: f64) -> [C64; 3] {
        self.eval_side(x, x < 0.0)
    }

    /// `∂_x` of the field.
    pub fn eval_dx(&self, x: f64, minus: bool) -> [C64; 3] {
        let f = self.eval_side(x, minus);
        let r = if minus { self.mu_minus } else { -self.mu_plus };
        [f[0] * r, f[1] * r, f[2] * r]
    }

    /// `∫ |φ₁|² + |φ₂|²` over the line.
    pub fn l2_norm_sq_12(&self) -> f64 {
        let m = (self.k * self.k + self.mu_minus.norm_sqr()) / (2.0 * self.mu_minus.re);
        let r2 = (self.mu_minus / self.mu_plus).norm_sqr();
        let p = (self.k * self.k * r2 + self.mu_minus.norm_sqr()) / (2.0 * self.mu_plus.re);
        m + p
    }
}

pub fn eigenfunction(ctx: &PencilContext) -> Result<Eigenfunction> {
    let q = ctx.spectral_quantities(1, 1)?;
    let (mm, mp) = (q.mu_minus.to_complex(), q.mu_plus.to_complex());
    if mm.norm() == 0.0 || mp.norm() == 0.0 || !mm.re.is_finite() {
        return Err(Error::Unsupported("degenerate decay exponent at (1,1)".into()));
    }
    Ok(Eigenfunction {
        k: ctx.k,
        mu_minus: mm,
        mu_plus: mp,
        v_minus: q.v_minus.to_complex(),
        v_plus: q.v_plus.to_complex(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_disp() -> LorentzDispersion {
        LorentzDispersion { eps0: 1.0, mu0: 1.0, eps_plus: 3.0, c_l: 20.0, gamma: 0.5, omega_star: 2.0, k: 3.0 }
    }

    #[test]
    fn newton_scalar() {
        let r = newton(|w| (w * w - 1.0, 2.0 * w), c(1.1, 0.0), 1e-15, 50).unwrap();
        assert!((r - 1.0).norm() < 1e-14);
    }

    #[test]
    fn quartic_roots_and_derivative() {
        let d = example_disp();
        let roots = d.untruncated_eigenvalues(1).unwrap();
        assert_eq!(roots.len(), 4);
        assert!(roots.iter().any(|r| (r - c(1.8179, -0.1488)).norm() < 5e-4));
        let w = c(0.7, -0.2);
        let h = 1e-6;
        let fd = (d.g_inf(1, w + h).0 - d.g_inf(1, w - h).0) / (2.0 * h);
        assert!((fd - d.g_inf(1, w).1).norm() < 1e-6 * fd.norm());
        let t = d.t_j(11);
        let fd = (d.g(1, w + h, t).0 - d.g(1, w - h, t).0) / (2.0 * h);
        assert!((fd - d.g(1, w, t).1).norm() < 1e-6 * fd.norm());
    }

    #[test]
    fn winding_simple() {
        let rect = ContourRectangle {
            x_left: -1.0,
            x_right: 1.0,
            y_bottom: -1.0,
            y_top: 1.0,
            budget: 30,
            min_depth: MIN_DEPTH,
        };
        let wc = c(0.3, 0.2);
        assert_eq!(winding_count(|w| (w - wc, c(1.0, 0.0)), &rect).unwrap(), 1);
        let wc = c(3.0, 0.2);
        assert_eq!(winding_count(|w| (w - wc, c(1.0, 0.0)), &rect).unwrap(), 0);
    }

    #[test]
    fn cone_membership() {
        let cone = IndexCone { nu_max: 3 };
        assert_eq!(cone.members().len(), 3 + 5 + 7);
        assert!(cone.contains(-2, 2) && !cone.contains(3, 2));
    }
}
