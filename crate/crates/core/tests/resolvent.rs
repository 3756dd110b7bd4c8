mod common;

use breather_core::pencil::{eigenfunction, PencilContext};
use breather_core::resolvent::{
    fd_convergence_study, reconstruct_u3, relative_gap, solve_analytic, solve_fd, GridFunction, NodalField,
    StaggeredGrid,
};
use breather_core::C64;
use common::*;

fn neg_conj(f: &NodalField) -> NodalField {
    let nc = |a: &[C64; 2]| [-a[0].conj(), -a[1].conj()];
    NodalField { int: f.int.iter().map(nc).collect(), half: f.half.iter().map(nc).collect(), right: nc(&f.right) }
}

fn bump(grid: &StaggeredGrid, x0: f64) -> NodalField {
    NodalField::sample(grid, |x, _| {
        let g = (-(x - x0).powi(2)).exp();
        [c(g, 0.3 * g), c(-0.5 * g, g)]
    })
}

/// Smooth `w` and `r = L(ω) w` from
/// `i nk w₃ − iV w₁ = r₁`, `−w₃′ − iV w₂ = r₂`, `w₂′ − i nk w₁ − iω w₃ = 0`.
struct Manufactured {
    nk: f64,
    omega: C64,
    v_minus: C64,
    v_plus: C64,
    x0: f64,
    a: C64,
    b: C64,
}

impl Manufactured {
    fn new(ctx: &PencilContext, n: i32, nu: u32, x0: f64) -> Self {
        let q = ctx.spectral_quantities(n, nu).unwrap();
        Manufactured {
            nk: n as f64 * ctx.k,
            omega: ctx.omega_nnu(n, nu),
            v_minus: q.v_minus.to_complex(),
            v_plus: q.v_plus.to_complex(),
            x0,
            a: c(1.0, 0.5),
            b: c(-0.3, 1.0),
        }
    }

    fn w(&self, x: f64) -> [C64; 3] {
        let s = x - self.x0;
        let g = (-s * s).exp();
        let gp = -2.0 * s * g;
        let i = c(0.0, 1.0);
        let w3 = (self.b * gp - i * self.nk * self.a * g) / (i * self.omega);
        [self.a * g, self.b * g, w3]
    }

    fn r(&self, x: f64, minus: bool) -> [C64; 2] {
        let s = x - self.x0;
        let g = (-s * s).exp();
        let gp = -2.0 * s * g;
        let gpp = (4.0 * s * s - 2.0) * g;
        let i = c(0.0, 1.0);
        let v = if minus { self.v_minus } else { self.v_plus };
        let w = self.w(x);
        let w3p = (self.b * gpp - i * self.nk * self.a * gp) / (i * self.omega);
        [i * self.nk * w[2] - i * v * w[0], -w3p - i * v * w[1]]
    }

    /// Solver input `h` with `r = i h`.
    fn h(&self, x: f64, minus: bool) -> [C64; 2] {
        let r = self.r(x, minus);
        [-c(0.0, 1.0) * r[0], -c(0.0, 1.0) * r[1]]
    }

    fn exact(&self, grid: &StaggeredGrid) -> GridFunction {
        let n = grid.n;
        let u = (0..=n).map(|j| self.w(grid.x_int(j))[0]).collect();
        let mut v: Vec<C64> = (0..n).map(|j| self.w(grid.x_half(j))[1]).collect();
        v.push(self.w(0.0)[1]);
        GridFunction { u, v, u_right: self.w(0.0)[0] }
    }
}

#[test]
fn zero_rhs_gives_zero_solution() {
    let ctx = example_ctx();
    let g = StaggeredGrid::new(20.0, 200).unwrap();
    let z = NodalField::zeros(&g);
    let fd = solve_fd(&ctx, 1, 2, &z, &g).unwrap();
    assert!(fd.field.u.iter().chain(&fd.field.v).all(|a| a.norm() == 0.0));
    let an = solve_analytic(&ctx, 1, 2, &z, &g).unwrap();
    assert!(an.field.is_zero());
}

fn manufactured_gap(n: i32, nu: u32, x0: f64, nn: usize, analytic: bool) -> f64 {
    let ctx = example_ctx();
    let m = Manufactured::new(&ctx, n, nu, x0);
    let g = StaggeredGrid::new(20.0, nn).unwrap();
    let rhs = NodalField::sample(&g, |x, minus| m.h(x, minus));
    let got = if analytic {
        solve_analytic(&ctx, n, nu, &rhs, &g).unwrap().grid_function()
    } else {
        solve_fd(&ctx, n, nu, &rhs, &g).unwrap().field
    };
    relative_gap(&got, &m.exact(&g))
}

#[test]
fn analytic_recovers_manufactured_solution() {
    for (n, nu, x0) in [(1, 2, 5.0), (2, 3, 6.0), (0, 2, 5.0), (1, 2, -5.0)] {
        let e1 = manufactured_gap(n, nu, x0, 1000, true);
        let e2 = manufactured_gap(n, nu, x0, 2000, true);
        assert!(e2 < 1e-3, "({n},{nu}) x0={x0}: {e2:e}");
        assert!(e1 / e2 > 3.0, "({n},{nu}) x0={x0}: {e1:e} {e2:e}");
    }
}

#[test]
fn fd_recovers_manufactured_solution() {
    for (n, nu, x0) in [(1, 2, 5.0), (0, 2, -5.0)] {
        let e1 = manufactured_gap(n, nu, x0, 1000, false);
        let e2 = manufactured_gap(n, nu, x0, 2000, false);
        assert!(e2 < 1e-3, "({n},{nu}): {e2:e}");
        let rate = (e1 / e2).log2();
        assert!((rate - 2.0).abs() < 0.3, "({n},{nu}): rate {rate}");
    }
}

#[test]
fn solvers_agree_at_second_order() {
    let ctx = example_ctx();
    let mut gaps = Vec::new();
    for nn in [1000, 2000, 4000] {
        let g = StaggeredGrid::new(40.0, 2 * nn).unwrap();
        let rhs = bump(&g, 2.0);
        let a = solve_analytic(&ctx, 0, 2, &rhs, &g).unwrap().grid_function();
        let f = solve_fd(&ctx, 0, 2, &rhs, &g).unwrap().field;
        gaps.push(relative_gap(&f, &a));
    }
    for w in gaps.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!(rate > 1.7, "{gaps:?}");
    }
}

#[test]
fn fd_refinement_slope_is_second_order() {
    let ctx = example_ctx();
    let tab = fd_convergence_study(&ctx, 1, 2, |g| bump(g, 2.0), 20.0, &[2000, 4000, 8000], 64000).unwrap();
    let s = tab.slope.unwrap();
    assert!(s < -1.8, "{tab:?}");
    let r = &tab.rows;
    let finest = (r[1].error / r[2].error).log2();
    assert!((1.8..=2.2).contains(&finest), "{tab:?}");
}

#[test]
fn identical_reference_gives_zero_error() {
    let ctx = example_ctx();
    let tab = fd_convergence_study(&ctx, 1, 2, |g| bump(g, 2.0), 20.0, &[400], 400).unwrap();
    assert_eq!(tab.rows[0].error, 0.0);
    assert!(tab.slope.is_none());
}

#[test]
fn reference_must_be_even_multiple() {
    let ctx = example_ctx();
    assert!(fd_convergence_study(&ctx, 1, 2, |g| bump(g, 2.0), 20.0, &[400], 1200).is_err());
}

#[test]
fn n_zero_u1_is_algebraic() {
    let ctx = example_ctx();
    let g = StaggeredGrid::new(20.0, 400).unwrap();
    let rhs = bump(&g, -3.0);
    let sol = solve_fd(&ctx, 0, 2, &rhs, &g).unwrap().field;
    let q = ctx.spectral_quantities(0, 2).unwrap();
    let i = c(0.0, 1.0);
    for j in 0..=g.n {
        let v = q.v(j <= g.mid()).to_complex();
        let lhs = -i * v * sol.u[j];
        assert!((lhs - i * rhs.int[j][0]).norm() < 1e-12 * rhs.int[j][0].norm().max(1e-300) + 1e-300, "{j}");
    }
}

#[test]
fn reconstruct_u3_matches_eigenfunction() {
    let ctx = example_ctx();
    let ef = eigenfunction(&ctx).unwrap();
    let mut errs = Vec::new();
    for nn in [1000, 2000] {
        let g = StaggeredGrid::new(20.0, nn).unwrap();
        let m = g.mid();
        let u = (0..=nn).map(|j| ef.eval_side(g.x_int(j), j <= m)[0]).collect();
        let mut v: Vec<C64> = (0..nn).map(|j| ef.eval(g.x_half(j))[1]).collect();
        v.push(ef.eval_side(0.0, true)[1]);
        let gf = GridFunction { u, v, u_right: ef.eval_side(0.0, false)[0] };
        let (u3, u3r) = reconstruct_u3(ctx.omega0, ctx.k, &gf, &g).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 1..nn {
            let e = ef.eval_side(g.x_int(j), j <= m)[2];
            num += (u3[j] - e).norm_sqr();
            den += e.norm_sqr();
        }
        let e0 = ef.eval_side(0.0, false)[2];
        assert!((u3r - e0).norm() < 1e-2 * e0.norm());
        errs.push((num / den).sqrt());
    }
    assert!(errs[1] < 1e-3, "{errs:?}");
    assert!((errs[0] / errs[1]).log2() > 1.7, "{errs:?}");
}

#[test]
fn reconstruct_u3_zero_frequency_is_error() {
    let g = StaggeredGrid::new(20.0, 40).unwrap();
    let gf = GridFunction { u: vec![c(0.0, 0.0); 41], v: vec![c(0.0, 0.0); 41], u_right: c(0.0, 0.0) };
    assert!(reconstruct_u3(c(0.0, 0.0), 3.0, &gf, &g).is_err());
}

#[test]
fn conjugated_source_gives_conjugate_solution() {
    let ctx = example_ctx();
    let g = StaggeredGrid::new(20.0, 400).unwrap();
    let rhs = bump(&g, 1.5);
    for (n, nu) in [(1, 2), (2, 3)] {
        let a = solve_fd(&ctx, n, nu, &rhs, &g).unwrap().field;
        let b = solve_fd(&ctx, -n, nu, &neg_conj(&rhs), &g).unwrap().field;
        let ac = GridFunction {
            u: a.u.iter().map(|z| z.conj()).collect(),
            v: a.v.iter().map(|z| z.conj()).collect(),
            u_right: a.u_right.conj(),
        };
        assert!(relative_gap(&b, &ac) < 1e-12, "({n},{nu})");
        let aa = solve_analytic(&ctx, n, nu, &rhs, &g).unwrap().grid_function();
        let ab = solve_analytic(&ctx, -n, nu, &neg_conj(&rhs), &g).unwrap().grid_function();
        let aac = GridFunction {
            u: aa.u.iter().map(|z| z.conj()).collect(),
            v: aa.v.iter().map(|z| z.conj()).collect(),
            u_right: aa.u_right.conj(),
        };
        assert!(relative_gap(&ab, &aac) < 1e-12, "analytic ({n},{nu})");
    }
}

#[test]
fn discrete_residual_is_small_across_cone() {
    let ctx = example_ctx();
    let g = StaggeredGrid::new(20.0, 1000).unwrap();
    let rhs = bump(&g, 1.0);
    for (n, nu) in [(0, 2), (1, 2), (2, 2), (3, 4), (-4, 6), (5, 8), (0, 10)] {
        let sol = solve_fd(&ctx, n, nu, &rhs, &g).unwrap();
        assert!(sol.residual < 1e-10, "({n},{nu}): {:e}", sol.residual);
    }
}

#[test]
fn linear_context_solves_match() {
    let g = StaggeredGrid::new(20.0, 400).unwrap();
    let rhs = bump(&g, 1.0);
    let a = solve_fd(&example_ctx(), 1, 3, &rhs, &g).unwrap().field;
    let b = solve_fd(&linear_ctx(), 1, 3, &rhs, &g).unwrap().field;
    assert_eq!(relative_gap(&a, &b), 0.0);
}
