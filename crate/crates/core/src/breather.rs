//! Recursive construction of the polychromatic series `u^{n,ν}` over the
//! cone, nonlinear right-hand sides, field synthesis and diagnostics.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::pencil::{eigenfunction, resolvent_membership, Membership, PencilContext, Tolerances};
use crate::resolvent::{
    assemble_fd, linear_fit, reconstruct_u3, solve_analytic_with, ConvergenceRow, ConvergenceTable, NodalField,
    StaggeredGrid,
};
use crate::susceptibility::NonlinearSusceptibility;
use crate::{c, Error, Result, C64, I};

/// Resolvent used at every cone point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SolverKind {
    Fd,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub grid: StaggeredGrid,
    pub eps: f64,
    pub nu_max: u32,
    pub solver: SolverKind,
    pub tol: Tolerances,
}

/// Dense index of cone point `(m, μ)`, `|m| ≤ μ`.
#[inline]
pub fn cone_slot(m: i32, mu: u32) -> usize {
    (mu * mu) as usize - 1 + (m + mu as i32) as usize
}

/// Number of cone points with `ν ≤ nu_max`.
#[inline]
pub fn cone_len(nu_max: u32) -> usize {
    (nu_max * nu_max + 2 * nu_max) as usize
}

/// Flattened node layout: integer nodes, half nodes, then the right limit at 0.
pub fn flatten(f: &NodalField) -> Vec<[C64; 2]> {
    let mut v = Vec::with_capacity(f.int.len() + f.half.len() + 1);
    v.extend_from_slice(&f.int);
    v.extend_from_slice(&f.half);
    v.push(f.right);
    v
}

pub fn unflatten(v: &[[C64; 2]], grid: &StaggeredGrid) -> NodalField {
    let n = grid.n;
    NodalField { int: v[..=n].to_vec(), half: v[n + 1..2 * n + 1].to_vec(), right: v[2 * n + 1] }
}

/// Whether flattened node `f` lies on the minus side.
#[inline]
pub fn flat_is_minus(f: usize, grid: &StaggeredGrid) -> bool {
    let n = grid.n;
    let m = grid.mid();
    if f <= n {
        f <= m
    } else if f < 2 * n + 1 {
        f - n - 1 < m
    } else {
        false
    }
}

fn flat_ranges(grid: &StaggeredGrid, minus: bool) -> [core::ops::Range<usize>; 2] {
    let n = grid.n;
    let m = grid.mid();
    if minus {
        [0..m + 1, n + 1..n + 1 + m]
    } else {
        [m + 1..n + 1, n + 1 + m..2 * n + 2]
    }
}

/// One coefficient of the series. Zero entries carry empty vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// `(u₁, u₂)` on the flattened nodes.
    pub u: Vec<[C64; 2]>,
    /// `u₃` at integer nodes followed by the value at `0⁺`.
    pub u3: Vec<C64>,
    /// Right-hand side `h^{n,ν}` on the flattened nodes.
    pub h: Vec<[C64; 2]>,
    /// Relative discrete residual of the solve (FD only).
    pub residual: Option<f64>,
    pub zero: bool,
}

impl Entry {
    pub fn zero() -> Self {
        Entry { u: Vec::new(), u3: Vec::new(), h: Vec::new(), residual: None, zero: true }
    }

    /// Entry at `−n`: `u ↦ ū`, `h ↦ −h̄`.
    pub fn conj(&self) -> Self {
        let cj = |a: &[C64; 2]| [a[0].conj(), a[1].conj()];
        Entry {
            u: self.u.iter().map(cj).collect(),
            u3: self.u3.iter().map(|z| z.conj()).collect(),
            h: self.h.iter().map(|a| [-a[0].conj(), -a[1].conj()]).collect(),
            residual: self.residual,
            zero: self.zero,
        }
    }

    #[inline]
    pub fn value(&self, f: usize) -> [C64; 2] {
        if self.zero {
            [C64::new(0.0, 0.0); 2]
        } else {
            self.u[f]
        }
    }

    #[inline]
    pub fn rhs(&self, f: usize) -> [C64; 2] {
        if self.h.is_empty() {
            [C64::new(0.0, 0.0); 2]
        } else {
            self.h[f]
        }
    }

    #[inline]
    pub fn u3_at(&self, j: usize) -> C64 {
        if self.zero {
            C64::new(0.0, 0.0)
        } else {
            self.u3[j]
        }
    }
}

/// Per-ν norm growth flag raised after three consecutive increases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceWarning {
    pub nu: u32,
    pub norm: f64,
}

/// Coefficients `u^{n,ν}` for the whole cone up to `ν_max`, both signs of `n`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub grid: StaggeredGrid,
    pub eps: f64,
    pub nu_max: u32,
    pub omega0: C64,
    pub k: f64,
    pub solver: SolverKind,
    slots: Vec<Entry>,
    /// `‖u^ν‖` with period `2π/|k|`, index `ν − 1`.
    pub norms: Vec<f64>,
    pub warnings: Vec<DivergenceWarning>,
}

impl CoefficientTable {
    pub fn entry(&self, n: i32, nu: u32) -> Option<&Entry> {
        if nu == 0 || nu > self.nu_max || n.unsigned_abs() > nu {
            return None;
        }
        self.slots.get(cone_slot(n, nu))
    }

    /// Entry as grid field; zero outside the cone.
    pub fn nodal(&self, n: i32, nu: u32) -> NodalField {
        match self.entry(n, nu) {
            Some(e) if !e.zero => unflatten(&e.u, &self.grid),
            _ => NodalField::zeros(&self.grid),
        }
    }

    /// Table from stored entries; missing cone points are zero. Level norms
    /// and divergence warnings are recomputed.
    #[allow(clippy::too_many_arguments)]
    pub fn from_entries<I: IntoIterator<Item = ((i32, u32), Entry)>>(
        grid: StaggeredGrid,
        eps: f64,
        nu_max: u32,
        omega0: C64,
        k: f64,
        solver: SolverKind,
        entries: I,
    ) -> Result<Self> {
        if nu_max == 0 {
            return Err(Error::Config("nu_max must be at least 1".into()));
        }
        let mut table = CoefficientTable {
            grid,
            eps,
            nu_max,
            omega0,
            k,
            solver,
            slots: alloc::vec![Entry::zero(); cone_len(nu_max)],
            norms: Vec::new(),
            warnings: Vec::new(),
        };
        let len = 2 * grid.n + 2;
        for ((n, nu), e) in entries {
            if nu == 0 || nu > nu_max || n.unsigned_abs() > nu {
                return Err(Error::Grid(alloc::format!("entry ({n},{nu}) outside the cone")));
            }
            if !e.zero && (e.u.len() != len || e.u3.len() != grid.n + 2 || !(e.h.is_empty() || e.h.len() == len)) {
                return Err(Error::Grid(alloc::format!("entry ({n},{nu}) does not match the grid")));
            }
            table.slots[cone_slot(n, nu)] = e;
        }
        for nu in 1..=nu_max {
            table.push_level_norm(nu);
        }
        Ok(table)
    }

    fn push_level_norm(&mut self, nu: u32) {
        let norm = level_norm(self, nu, 2.0 * PI / self.k.abs());
        let rising = |w: &[f64]| w[1] > w[0];
        self.norms.push(norm);
        let n = self.norms.len();
        if n >= 4 && self.norms[n - 4..].windows(2).all(rising) {
            self.warnings.push(DivergenceWarning { nu, norm });
        }
    }

    pub fn members(&self) -> impl Iterator<Item = (i32, u32)> + '_ {
        (1..=self.nu_max).flat_map(|nu| (-(nu as i32)..=nu as i32).map(move |n| (n, nu)))
    }

    #[inline]
    fn value(&self, n: i32, nu: u32, f: usize) -> [C64; 2] {
        match self.entry(n, nu) {
            Some(e) => e.value(f),
            None => [C64::new(0.0, 0.0); 2],
        }
    }

    fn is_zero(&self, n: i32, nu: u32) -> bool {
        self.entry(n, nu).map(|e| e.zero).unwrap_or(true)
    }
}

/// `β^{n,m,ν,μ}_{j,p,q}` on one side (zero indices).
#[allow(clippy::too_many_arguments)]
pub fn beta_coeff(
    ctx: &PencilContext,
    minus: bool,
    n: i32,
    m: i32,
    nu: u32,
    mu: u32,
    j: usize,
    p: usize,
    q: usize,
) -> Result<C64> {
    let Some(nl) = ctx.interface.nonlinear(minus) else {
        return Ok(C64::new(0.0, 0.0));
    };
    let mi = &ctx.interface;
    let w = ctx.omega_nnu(n, nu);
    let x = nl.ft_chi2(j, p, q, ctx.omega_nnu(m, mu), ctx.omega_nnu(n - m, nu - mu))?;
    Ok(-w * mi.eps0 * mi.mu0 * mi.mu0 * x)
}

/// `γ^{n,m,l,ν,μ,λ}_{j,p,q,r}` on one side (zero indices).
#[allow(clippy::too_many_arguments)]
pub fn gamma_coeff(
    ctx: &PencilContext,
    minus: bool,
    n: i32,
    m: i32,
    l: i32,
    nu: u32,
    mu: u32,
    lambda: u32,
    idx: [usize; 4],
) -> Result<C64> {
    let Some(nl) = ctx.interface.nonlinear(minus) else {
        return Ok(C64::new(0.0, 0.0));
    };
    let mi = &ctx.interface;
    let w = ctx.omega_nnu(n, nu);
    let [j, p, q, r] = idx;
    let x = nl.ft_chi3(
        j,
        p,
        q,
        r,
        ctx.omega_nnu(m, mu),
        ctx.omega_nnu(l, lambda),
        ctx.omega_nnu(n - m - l, nu - mu - lambda),
    )?;
    Ok(-w * mi.eps0 * mi.mu0 * mi.mu0 * mi.mu0 * x)
}

/// Scalar kernel values memoised on the sorted frequency-index tuple.
#[derive(Debug, Default)]
pub struct KernelCache {
    k2: BTreeMap<[(i32, u32); 2], C64>,
    k3: BTreeMap<[(i32, u32); 3], C64>,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn k2(
        &mut self,
        ctx: &PencilContext,
        nl: &NonlinearSusceptibility,
        a: (i32, u32),
        b: (i32, u32),
    ) -> Result<C64> {
        let mut key = [a, b];
        key.sort_unstable();
        if let Some(v) = self.k2.get(&key) {
            return Ok(*v);
        }
        let v = nl.k2(ctx.omega_nnu(a.0, a.1), ctx.omega_nnu(b.0, b.1))?;
        self.k2.insert(key, v);
        Ok(v)
    }

    pub fn k3(
        &mut self,
        ctx: &PencilContext,
        nl: &NonlinearSusceptibility,
        a: (i32, u32),
        b: (i32, u32),
        cc: (i32, u32),
    ) -> Result<C64> {
        let mut key = [a, b, cc];
        key.sort_unstable();
        if let Some(v) = self.k3.get(&key) {
            return Ok(*v);
        }
        let v = nl.k3(ctx.omega_nnu(a.0, a.1), ctx.omega_nnu(b.0, b.1), ctx.omega_nnu(cc.0, cc.1))?;
        self.k3.insert(key, v);
        Ok(v)
    }
}

struct QuadTerm {
    a: (i32, u32),
    b: (i32, u32),
    coef: Vec<(usize, usize, usize, C64)>,
}

struct CubeTerm {
    a: (i32, u32),
    b: (i32, u32),
    c: (i32, u32),
    coef: Vec<(usize, usize, usize, usize, C64)>,
}

/// Nonzero product terms of `h^{n,ν}` on one side, reading only entries with
/// level at most `cap`.
struct RhsPlan {
    quad: Vec<QuadTerm>,
    cube: Vec<CubeTerm>,
}

fn in_cone(m: i32, mu: u32) -> bool {
    mu >= 1 && m.unsigned_abs() <= mu
}

fn build_plan(
    ctx: &PencilContext,
    table: &CoefficientTable,
    minus: bool,
    n: i32,
    nu: u32,
    cap: u32,
    cache: &mut KernelCache,
) -> Result<RhsPlan> {
    let mut plan = RhsPlan { quad: Vec::new(), cube: Vec::new() };
    let Some(nl) = ctx.interface.nonlinear(minus) else {
        return Ok(plan);
    };
    let mi = &ctx.interface;
    let w = ctx.omega_nnu(n, nu);
    let nz2 = nl.nonzero2();
    let nz3 = nl.nonzero3();
    let live = |m: i32, mu: u32| mu <= cap && in_cone(m, mu) && !table.is_zero(m, mu);
    if nu >= 2 && !nz2.is_empty() {
        let f2 = -w * mi.eps0 * mi.mu0 * mi.mu0;
        for mu in 1..nu {
            for m in -(mu as i32)..=mu as i32 {
                let (m2, mu2) = (n - m, nu - mu);
                if !live(m, mu) || !live(m2, mu2) {
                    continue;
                }
                let kv = cache.k2(ctx, nl, (m, mu), (m2, mu2))?;
                let coef = nz2.iter().map(|&(j, p, q, cc)| (j, p, q, f2 * cc * kv)).collect();
                plan.quad.push(QuadTerm { a: (m, mu), b: (m2, mu2), coef });
            }
        }
    }
    if nu >= 3 && !nz3.is_empty() {
        let f3 = -w * mi.eps0 * mi.mu0 * mi.mu0 * mi.mu0;
        for mu in 1..=nu - 2 {
            for lam in 1..=nu - mu - 1 {
                let rho = nu - mu - lam;
                for m in -(mu as i32)..=mu as i32 {
                    if !live(m, mu) {
                        continue;
                    }
                    for l in -(lam as i32)..=lam as i32 {
                        let r = n - m - l;
                        if !live(l, lam) || !live(r, rho) {
                            continue;
                        }
                        let kv = cache.k3(ctx, nl, (m, mu), (l, lam), (r, rho))?;
                        let coef = nz3.iter().map(|&(j, p, q, s, cc)| (j, p, q, s, f3 * cc * kv)).collect();
                        plan.cube.push(CubeTerm { a: (m, mu), b: (l, lam), c: (r, rho), coef });
                    }
                }
            }
        }
    }
    Ok(plan)
}

fn apply_plan(
    plan: &RhsPlan,
    table: &CoefficientTable,
    nodes: &mut dyn Iterator<Item = usize>,
    out: &mut [[C64; 2]],
    pos: &dyn Fn(usize) -> usize,
) {
    let nodes: Vec<usize> = nodes.collect();
    for t in &plan.quad {
        let (ea, eb) = (table.entry(t.a.0, t.a.1).unwrap(), table.entry(t.b.0, t.b.1).unwrap());
        for &f in &nodes {
            let (va, vb) = (ea.u[f], eb.u[f]);
            let o = &mut out[pos(f)];
            for &(j, p, q, cf) in &t.coef {
                o[j] += cf * va[p] * vb[q];
            }
        }
    }
    for t in &plan.cube {
        let ea = table.entry(t.a.0, t.a.1).unwrap();
        let eb = table.entry(t.b.0, t.b.1).unwrap();
        let ec = table.entry(t.c.0, t.c.1).unwrap();
        for &f in &nodes {
            let (va, vb, vc) = (ea.u[f], eb.u[f], ec.u[f]);
            let o = &mut out[pos(f)];
            for &(j, p, q, r, cf) in &t.coef {
                o[j] += cf * va[p] * vb[q] * vc[r];
            }
        }
    }
}

/// `h^{n,ν}` from entries of level at most `cap`, at the given flattened nodes.
pub fn assemble_h_at(
    ctx: &PencilContext,
    table: &CoefficientTable,
    n: i32,
    nu: u32,
    cap: u32,
    nodes: &[usize],
) -> Result<Vec<[C64; 2]>> {
    let mut out = alloc::vec![[C64::new(0.0, 0.0); 2]; nodes.len()];
    if nu < 2 {
        return Ok(out);
    }
    let mut cache = KernelCache::new();
    for minus in [true, false] {
        let plan = build_plan(ctx, table, minus, n, nu, cap, &mut cache)?;
        if plan.quad.is_empty() && plan.cube.is_empty() {
            continue;
        }
        let idx: Vec<usize> = (0..nodes.len()).filter(|&i| flat_is_minus(nodes[i], &table.grid) == minus).collect();
        let mut it = idx.iter().map(|&i| nodes[i]);
        let mut tmp = alloc::vec![[C64::new(0.0, 0.0); 2]; 2 * table.grid.n + 2];
        apply_plan(&plan, table, &mut it, &mut tmp, &|f| f);
        for i in idx {
            out[i] = tmp[nodes[i]];
        }
    }
    Ok(out)
}

/// `h^{n,ν}` on all nodes, reading entries with level below `ν`.
pub fn assemble_h(ctx: &PencilContext, table: &CoefficientTable, n: i32, nu: u32) -> Result<Vec<[C64; 2]>> {
    let len = 2 * table.grid.n + 2;
    let mut out = alloc::vec![[C64::new(0.0, 0.0); 2]; len];
    if nu < 2 || n.unsigned_abs() > nu {
        return Ok(out);
    }
    let mut cache = KernelCache::new();
    for minus in [true, false] {
        let plan = build_plan(ctx, table, minus, n, nu, nu - 1, &mut cache)?;
        if plan.quad.is_empty() && plan.cube.is_empty() {
            continue;
        }
        let [r1, r2] = flat_ranges(&table.grid, minus);
        let mut it = r1.chain(r2);
        apply_plan(&plan, table, &mut it, &mut out, &|f| f);
    }
    Ok(out)
}

/// Runs independent per-`n` jobs of one level.
pub trait Executor {
    fn run(&self, jobs: &[i32], f: &(dyn Fn(i32) -> Result<Entry> + Sync)) -> Vec<Result<Entry>>;
}

/// In-order execution on the calling thread.
pub struct Serial;

impl Executor for Serial {
    fn run(&self, jobs: &[i32], f: &(dyn Fn(i32) -> Result<Entry> + Sync)) -> Vec<Result<Entry>> {
        jobs.iter().map(|&n| f(n)).collect()
    }
}

fn seed_entry(ctx: &PencilContext, grid: &StaggeredGrid, eps: f64) -> Result<Entry> {
    if eps == 0.0 {
        return Ok(Entry::zero());
    }
    let phi = eigenfunction(ctx)?;
    let field = NodalField::sample(grid, |x, minus| {
        let v = phi.eval_side(x, minus);
        [eps * v[0], eps * v[1]]
    });
    let mut u3: Vec<C64> = (0..=grid.n).map(|j| eps * phi.eval_side(grid.x_int(j), j <= grid.mid())[2]).collect();
    u3.push(eps * phi.eval_side(0.0, false)[2]);
    let len = 2 * grid.n + 2;
    Ok(Entry { u: flatten(&field), u3, h: alloc::vec![[C64::new(0.0, 0.0); 2]; len], residual: None, zero: false })
}

/// Solves one cone point from the completed lower levels.
pub fn compute_entry(
    ctx: &PencilContext,
    table: &CoefficientTable,
    opts: &SeriesOptions,
    n: i32,
    nu: u32,
) -> Result<Entry> {
    if n.unsigned_abs() > nu {
        return Ok(Entry::zero());
    }
    match resolvent_membership(ctx, n, nu, &opts.tol)? {
        Membership::Resolvent => {}
        Membership::PointSpec => return Err(Error::ResolventViolation { n, nu, kind: "point spectrum" }),
        Membership::Essential => return Err(Error::ResolventViolation { n, nu, kind: "essential spectrum" }),
        Membership::Omega0Set => return Err(Error::ResolventViolation { n, nu, kind: "singular set" }),
    }
    let h = assemble_h(ctx, table, n, nu)?;
    let all_zero = h.iter().all(|a| a[0] == C64::new(0.0, 0.0) && a[1] == C64::new(0.0, 0.0));
    if all_zero {
        return Ok(Entry::zero());
    }
    let grid = &opts.grid;
    let rhs = unflatten(&h, grid);
    let q = ctx.spectral_quantities(n, nu)?;
    let nk = n as f64 * ctx.k;
    match opts.solver {
        SolverKind::Fd => {
            let sys = assemble_fd(&q, ctx.k, &rhs, grid)?;
            let x = sys.solve()?;
            let residual = sys.residual(&x);
            let gf = sys.unpack(&x);
            let (mut u3, u3r) = reconstruct_u3(q.omega, nk, &gf, grid)?;
            u3.push(u3r);
            Ok(Entry { u: flatten(&gf.to_nodal(grid)), u3, h, residual: Some(residual), zero: false })
        }
        SolverKind::Analytic => {
            let sol = solve_analytic_with(&q, ctx.k, &rhs, grid)?;
            let mut u3 = sol.u3_int.clone();
            u3.push(sol.u3_right);
            Ok(Entry { u: flatten(&sol.field), u3, h, residual: None, zero: false })
        }
    }
}

/// Builds the table level by level; negative `n` filled by conjugation.
pub fn build_series(ctx: &PencilContext, opts: &SeriesOptions) -> Result<CoefficientTable> {
    build_series_with(ctx, opts, &Serial)
}

pub fn build_series_with(ctx: &PencilContext, opts: &SeriesOptions, exec: &dyn Executor) -> Result<CoefficientTable> {
    if opts.nu_max == 0 {
        return Err(Error::Config("nu_max must be at least 1".into()));
    }
    let grid = opts.grid;
    let mut table = CoefficientTable {
        grid,
        eps: opts.eps,
        nu_max: opts.nu_max,
        omega0: ctx.omega0,
        k: ctx.k,
        solver: opts.solver,
        slots: alloc::vec![Entry::zero(); cone_len(opts.nu_max)],
        norms: Vec::new(),
        warnings: Vec::new(),
    };
    if resolvent_membership(ctx, 0, 1, &opts.tol)? != Membership::Resolvent {
        return Err(Error::ResolventViolation { n: 0, nu: 1, kind: "level one" });
    }
    let seed = seed_entry(ctx, &grid, opts.eps)?;
    table.slots[cone_slot(-1, 1)] = seed.conj();
    table.slots[cone_slot(1, 1)] = seed;
    table.push_level_norm(1);
    for nu in 2..=opts.nu_max {
        let jobs: Vec<i32> = (0..=nu as i32).collect();
        let t = &table;
        let res = exec.run(&jobs, &|n| compute_entry(ctx, t, opts, n, nu));
        for (n, r) in jobs.iter().zip(res) {
            let e = r?;
            if *n != 0 {
                table.slots[cone_slot(-n, nu)] = e.conj();
            }
            table.slots[cone_slot(*n, nu)] = e;
        }
        table.push_level_norm(nu);
    }
    Ok(table)
}

fn entry_max(e: &Entry, grid: &StaggeredGrid) -> f64 {
    if e.zero {
        return 0.0;
    }
    let n = grid.n;
    let a = e.u[..=n].iter().map(|a| a[0].norm()).fold(0.0, f64::max);
    e.u[n + 1..2 * n + 1].iter().map(|a| a[1].norm()).fold(a, f64::max)
}

// squared norm divided by s², safe from underflow for tiny entries
fn entry_l2_sq_scaled(e: &Entry, grid: &StaggeredGrid, s: f64) -> f64 {
    if e.zero || s == 0.0 {
        return 0.0;
    }
    let n = grid.n;
    let s1: f64 = e.u[..=n].iter().map(|a| (a[0] / s).norm_sqr()).sum();
    let s2: f64 = e.u[n + 1..2 * n + 1].iter().map(|a| (a[1] / s).norm_sqr()).sum();
    grid.h() * (s1 + s2)
}

fn entry_l2(e: &Entry, grid: &StaggeredGrid) -> f64 {
    let s = entry_max(e, grid);
    s * entry_l2_sq_scaled(e, grid, s).sqrt()
}

fn level_norm(table: &CoefficientTable, nu: u32, period: f64) -> f64 {
    let entries: Vec<&Entry> = (-(nu as i32)..=nu as i32).filter_map(|n| table.entry(n, nu)).collect();
    let s = entries.iter().map(|e| entry_max(e, &table.grid)).fold(0.0, f64::max);
    if s == 0.0 {
        return 0.0;
    }
    let q: f64 = entries.iter().map(|e| entry_l2_sq_scaled(e, &table.grid, s)).sum();
    s * (period * q).sqrt()
}

/// y-period used in the per-level norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period {
    /// `2π/|k|`.
    Natural,
    /// `2π`.
    TwoPi,
}

/// `(ν, ‖Σ_n u^{n,ν} e^{inky}‖_{L²(ℝ×period)})` by Parseval.
pub fn decay_profile(table: &CoefficientTable, period: Period) -> Vec<(u32, f64)> {
    let p = match period {
        Period::Natural => 2.0 * PI / table.k.abs(),
        Period::TwoPi => 2.0 * PI,
    };
    (1..=table.nu_max).map(|nu| (nu, level_norm(table, nu, p))).collect()
}

fn phase(table: &CoefficientTable, n: i32, nu: u32, y: f64, t: f64) -> C64 {
    let w = c(n as f64 * table.omega0.re, nu as f64 * table.omega0.im);
    (I * (n as f64 * table.k * y) - I * w * t).exp()
}

/// Partial sum `Σ_{ν≤M} Σ_n u^{n,ν}(x) e^{i(nky − ω^{(n,ν)}t)}`; returns the
/// real field and the largest imaginary part relative to the magnitude.
pub fn synthesize(table: &CoefficientTable, x: f64, y: f64, t: f64, m: u32) -> ([f64; 3], f64) {
    let g = &table.grid;
    let n = g.n;
    let mid = g.mid();
    let h = g.h();
    // same-side linear interpolation between integer nodes
    let (j0, j1, th) = if x <= 0.0 {
        let s = ((x + g.d) / h).clamp(0.0, mid as f64);
        let j = (s.floor() as usize).min(mid.saturating_sub(1));
        (j, j + 1, s - j as f64)
    } else {
        let s = ((x + g.d) / h).clamp(mid as f64, n as f64);
        let j = (s.floor() as usize).clamp(mid, n - 1);
        (j, j + 1, s - j as f64)
    };
    let right = x > 0.0 && j0 == mid;
    let mut acc = [C64::new(0.0, 0.0); 3];
    let mut mag = 0.0f64;
    for (nn, nu) in table.members() {
        if nu > m {
            break;
        }
        let e = table.entry(nn, nu).unwrap();
        if e.zero {
            continue;
        }
        let a = if right { e.u[2 * n + 1] } else { e.u[j0] };
        let a3 = if right { e.u3[n + 1] } else { e.u3[j0] };
        let b = e.u[j1];
        let b3 = e.u3[j1];
        let v = [a[0] * (1.0 - th) + b[0] * th, a[1] * (1.0 - th) + b[1] * th, a3 * (1.0 - th) + b3 * th];
        let ph = phase(table, nn, nu, y, t);
        for i in 0..3 {
            let z = v[i] * ph;
            acc[i] += z;
            mag = mag.max(z.norm());
        }
    }
    let im = acc.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    ([acc[0].re, acc[1].re, acc[2].re], if mag > 0.0 { im / mag } else { 0.0 })
}

/// Real `E`, `H` and two independent `D` assemblies at integer node `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub e: [f64; 3],
    pub h: [f64; 3],
    /// `D` from `−(B u + h)/ω` per mode.
    pub d: [f64; 3],
    /// `D = ε₀E + P` with `P` summed term by term from the transforms.
    pub d_direct: [f64; 3],
    pub imag_residue: f64,
}

/// Direct quadratic and cubic polarisation coefficient at a node, summed
/// over every index in `|m| ≤ bound` without cone clipping.
pub fn polarization_direct(
    ctx: &PencilContext,
    table: &CoefficientTable,
    n: i32,
    nu: u32,
    f: usize,
    bound: i32,
) -> Result<[C64; 2]> {
    let minus = flat_is_minus(f, &table.grid);
    let mut out = [C64::new(0.0, 0.0); 2];
    let Some(nl) = ctx.interface.nonlinear(minus) else {
        return Ok(out);
    };
    let mi = &ctx.interface;
    let w = |m: i32, mu: u32| ctx.omega_nnu(m, mu);
    for mu in 1..nu {
        for m in -bound..=bound {
            let (a, b) = (table.value(m, mu, f), table.value(n - m, nu - mu, f));
            if a == [C64::new(0.0, 0.0); 2] || b == [C64::new(0.0, 0.0); 2] {
                continue;
            }
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        let x = nl.ft_chi2(j, p, q, w(m, mu), w(n - m, nu - mu))?;
                        out[j] += mi.eps0 * mi.mu0 * mi.mu0 * x * a[p] * b[q];
                    }
                }
            }
        }
    }
    for mu in 1..nu.saturating_sub(1) {
        for lam in 1..nu - mu {
            let rho = nu - mu - lam;
            for m in -bound..=bound {
                let a = table.value(m, mu, f);
                if a == [C64::new(0.0, 0.0); 2] {
                    continue;
                }
                for l in -bound..=bound {
                    let (b, cc) = (table.value(l, lam, f), table.value(n - m - l, rho, f));
                    if b == [C64::new(0.0, 0.0); 2] || cc == [C64::new(0.0, 0.0); 2] {
                        continue;
                    }
                    for j in 0..2 {
                        for p in 0..2 {
                            for q in 0..2 {
                                for r in 0..2 {
                                    if nl.c3[j][p][q][r] == 0.0 {
                                        continue;
                                    }
                                    let x = nl.ft_chi3(j, p, q, r, w(m, mu), w(l, lam), w(n - m - l, rho))?;
                                    out[j] += mi.eps0 * mi.mu0 * mi.mu0 * mi.mu0 * x * a[p] * b[q] * cc[r];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `E = μ₀(ψ₁, ψ₂, 0)`, `H = (0, 0, ψ₃)` and `D` at integer node `j`.
pub fn reconstruct_fields(
    ctx: &PencilContext,
    table: &CoefficientTable,
    j: usize,
    y: f64,
    t: f64,
    m: u32,
) -> Result<FieldSample> {
    let g = &table.grid;
    let minus = j <= g.mid();
    let mi = &ctx.interface;
    let mut e = [C64::new(0.0, 0.0); 2];
    let mut h3 = C64::new(0.0, 0.0);
    let mut d = [C64::new(0.0, 0.0); 2];
    let mut dd = [C64::new(0.0, 0.0); 2];
    let mut mag = 0.0f64;
    for (n, nu) in table.members() {
        if nu > m {
            break;
        }
        let en = table.entry(n, nu).unwrap();
        if en.zero {
            continue;
        }
        let ph = phase(table, n, nu, y, t);
        let w = ctx.omega_nnu(n, nu);
        if w.norm() == 0.0 {
            return Err(Error::ZeroFrequency);
        }
        let u = en.u[j];
        let hh = en.rhs(j);
        let q = ctx.spectral_quantities(n, nu)?;
        let v = q.v(minus);
        let chi = mi.side(minus).ft_chi1_scaled(w)? + C64::new(1.0, 0.0);
        let pol = polarization_direct(ctx, table, n, nu, j, nu as i32)?;
        for i in 0..2 {
            let di = -(v.scale_by(u[i]).to_complex() + hh[i]) / w;
            let ddi = (chi * (mi.eps0 * mi.mu0)).scale_by(u[i]).to_complex() + pol[i];
            e[i] += mi.mu0 * u[i] * ph;
            d[i] += di * ph;
            dd[i] += ddi * ph;
            mag = mag.max((u[i] * ph).norm());
        }
        h3 += en.u3[j] * ph;
        mag = mag.max((en.u3[j] * ph).norm());
    }
    let im = [e[0], e[1], h3].iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(FieldSample {
        e: [e[0].re, e[1].re, 0.0],
        h: [0.0, 0.0, h3.re],
        d: [d[0].re, d[1].re, 0.0],
        d_direct: [dd[0].re, dd[1].re, 0.0],
        imag_residue: if mag > 0.0 { im / mag } else { 0.0 },
    })
}

/// Discrete `‖∂ₓD₁ + i nk D₂‖` over half nodes with `D = −(Vu + h)/ω`.
pub fn divergence_residual(ctx: &PencilContext, table: &CoefficientTable, n: i32, nu: u32) -> Result<f64> {
    let Some(e) = table.entry(n, nu) else {
        return Err(Error::Grid("entry outside the table".into()));
    };
    if e.zero {
        return Ok(0.0);
    }
    let w = ctx.omega_nnu(n, nu);
    if w.norm() == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let g = &table.grid;
    let nn = g.n;
    let mid = g.mid();
    let h = g.h();
    let q = ctx.spectral_quantities(n, nu)?;
    let nk = n as f64 * ctx.k;
    let dcomp = |f: usize, i: usize| -> C64 {
        let v = q.v(flat_is_minus(f, g));
        -(v.scale_by(e.u[f][i]).to_complex() + e.rhs(f)[i]) / w
    };
    let mut s = 0.0;
    for j in 0..nn {
        let left = if j == mid { 2 * nn + 1 } else { j };
        let div = (dcomp(j + 1, 0) - dcomp(left, 0)) / h + I * nk * dcomp(nn + 1 + j, 1);
        s += div.norm_sqr();
    }
    Ok((h * s).sqrt())
}

/// Relative `L²` norm of entry `(n,ν)`.
pub fn entry_norm(table: &CoefficientTable, n: i32, nu: u32) -> f64 {
    table.entry(n, nu).map(|e| entry_l2(e, &table.grid)).unwrap_or(0.0)
}

/// `(n, ν, residual rows per node, magnitudes per node)`.
type ModeRows = (i32, u32, Vec<[C64; 3]>, Vec<f64>);

/// Largest relative TM residual of the partial sum of order `M` at
/// `(integer node, y, t)` samples, including the levels `M < ν ≤ 3M` that the
/// truncation drops.
pub fn maxwell_residual(
    ctx: &PencilContext,
    table: &CoefficientTable,
    samples: &[(usize, f64, f64)],
    m: u32,
) -> Result<f64> {
    let g = &table.grid;
    let nn = g.n;
    let mid = g.mid();
    let h = g.h();
    let m = m.min(table.nu_max);
    let mut nodes: Vec<usize> = samples.iter().map(|s| s.0).collect();
    nodes.sort_unstable();
    nodes.dedup();
    for &j in &nodes {
        if j == 0 || j >= nn || j == mid {
            return Err(Error::Grid("sample nodes must be interior and off the interface".into()));
        }
    }
    // per mode: residual rows at each node and a magnitude for scaling
    let mut modes: Vec<ModeRows> = Vec::new();
    for nu in 1..=3 * m {
        for n in -(nu as i32)..=nu as i32 {
            let q = ctx.spectral_quantities(n, nu)?;
            let w = q.omega;
            let nk = n as f64 * ctx.k;
            let mut rows = Vec::with_capacity(nodes.len());
            let mut mags = Vec::with_capacity(nodes.len());
            if nu <= m {
                let e = table.entry(n, nu).unwrap();
                if e.zero {
                    continue;
                }
                for &j in &nodes {
                    let minus = j < mid;
                    let v = q.v(minus);
                    let u = e.u[j];
                    let hh = e.rhs(j);
                    let vu1 = v.scale_by(u[0]).to_complex();
                    let vu2 = v.scale_by(u[1]).to_complex();
                    let u3 = e.u3[j];
                    let du3 = (e.u3[j + 1] - e.u3[j - 1]) / (2.0 * h);
                    let u2p = (e.u[nn + 1 + j][1] - e.u[nn + j][1]) / h;
                    let r1 = nk * u3 - vu1 - hh[0];
                    let r2 = I * du3 - vu2 - hh[1];
                    let r3 = nk * u[0] + I * u2p + w * u3;
                    rows.push([r1, r2, r3]);
                    mags.push(
                        (nk * u3).norm()
                            + vu1.norm()
                            + hh[0].norm()
                            + du3.norm()
                            + vu2.norm()
                            + hh[1].norm()
                            + (w * u3).norm(),
                    );
                }
            } else {
                let flat: Vec<usize> = nodes.clone();
                let hv = assemble_h_at(ctx, table, n, nu, m, &flat)?;
                if hv.iter().all(|a| a[0] == C64::new(0.0, 0.0) && a[1] == C64::new(0.0, 0.0)) {
                    continue;
                }
                for a in hv {
                    rows.push([-a[0], -a[1], C64::new(0.0, 0.0)]);
                    mags.push(a[0].norm() + a[1].norm());
                }
            }
            modes.push((n, nu, rows, mags));
        }
    }
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for &(j, y, t) in samples {
        let idx = nodes.binary_search(&j).unwrap();
        let mut acc = [C64::new(0.0, 0.0); 3];
        let mut mag = 0.0;
        for (n, nu, rows, mags) in &modes {
            let ph = phase(table, *n, *nu, y, t);
            for i in 0..3 {
                acc[i] += rows[idx][i] * ph;
            }
            mag += mags[idx] * ph.norm();
        }
        worst = worst.max(acc.iter().map(|z| z.norm()).fold(0.0, f64::max));
        scale = scale.max(mag);
    }
    Ok(if scale > 0.0 { worst / scale } else { 0.0 })
}

// (u₁ at integer nodes, u₂ at half nodes) of Σ_{ν≤M} u^{n,ν} for one n
fn partial_sum_n(table: &CoefficientTable, n: i32, m: u32) -> (Vec<C64>, Vec<C64>) {
    let g = &table.grid;
    let mut a = alloc::vec![C64::new(0.0, 0.0); g.n + 1];
    let mut b = alloc::vec![C64::new(0.0, 0.0); g.n];
    for nu in n.unsigned_abs().max(1)..=m.min(table.nu_max) {
        let Some(e) = table.entry(n, nu) else { continue };
        if e.zero {
            continue;
        }
        for j in 0..=g.n {
            a[j] += e.u[j][0];
        }
        for j in 0..g.n {
            b[j] += e.u[g.n + 1 + j][1];
        }
    }
    (a, b)
}

/// Refinement study of the partial sum of order `m` at `t = 0`: relative
/// `L²(ℝ×period)` error of `(u₁, u₂)` of series built on each `N` in `n_list`
/// against one built on `reference_n`. Grid and solver come from `base`.
pub fn series_convergence_study(
    ctx: &PencilContext,
    base: &SeriesOptions,
    n_list: &[usize],
    reference_n: usize,
    m: u32,
) -> Result<ConvergenceTable> {
    let d = base.grid.d;
    let build = |nn: usize| -> Result<CoefficientTable> {
        let opts = SeriesOptions { grid: StaggeredGrid::new(d, nn)?, ..*base };
        build_series(ctx, &opts)
    };
    let reference = build(reference_n)?;
    let mut rows = Vec::new();
    for &nc in n_list {
        if reference_n % nc != 0 || (reference_n / nc) % 2 != 0 {
            return Err(Error::Grid(alloc::format!("reference N {reference_n} is not an even multiple of {nc}")));
        }
        let r = reference_n / nc;
        let coarse = build(nc)?;
        let (mut num, mut den) = (0.0, 0.0);
        for n in -(m as i32)..=m as i32 {
            let (a, b) = partial_sum_n(&coarse, n, m);
            let (ra, rb) = partial_sum_n(&reference, n, m);
            for j in 0..=nc {
                num += (a[j] - ra[j * r]).norm_sqr();
                den += ra[j * r].norm_sqr();
            }
            for j in 0..nc {
                let jf = j * r + r / 2;
                let y = 0.5 * (rb[jf - 1] + rb[jf]);
                num += (b[j] - y).norm_sqr();
                den += y.norm_sqr();
            }
        }
        rows.push(ConvergenceRow { n: nc, h: coarse.grid.h(), error: (num / den.max(1e-300)).sqrt() });
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
