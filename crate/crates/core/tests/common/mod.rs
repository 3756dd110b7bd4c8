#![allow(dead_code)]

pub mod oracles;

use breather_core::pencil::{newton, LorentzDispersion, PencilContext};
use breather_core::susceptibility::{LinearSusceptibility, MaterialInterface, NonlinearSusceptibility};
use breather_core::C64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn example_dispersion() -> LorentzDispersion {
    LorentzDispersion { eps0: 1.0, mu0: 1.0, eps_plus: 3.0, c_l: 20.0, gamma: 0.5, omega_star: 2.0, k: 3.0 }
}

pub fn example_t() -> f64 {
    example_dispersion().t_j(1001)
}

pub fn example_interface(t: f64) -> MaterialInterface {
    MaterialInterface {
        eps0: 1.0,
        mu0: 1.0,
        minus: LinearSusceptibility::TruncatedLorentz { c_l: 20.0, gamma: 0.5, omega_star: 2.0, t_cut: t },
        plus: LinearSusceptibility::Constant { alpha: 2.0 },
        nl_minus: Some(NonlinearSusceptibility::diagonal(2000.0, 1000.0, 1.0, 3.0, Some(1.0))),
        nl_plus: None,
    }
}

/// Untruncated root near 1.8179 − 0.1488i.
pub fn example_omega_inf() -> C64 {
    let roots = example_dispersion().untruncated_eigenvalues(1).unwrap();
    *roots.iter().find(|r| r.re > 0.0 && r.im > -0.2).unwrap()
}

pub fn example_omega0() -> C64 {
    let d = example_dispersion();
    let t = example_t();
    newton(|w| d.g(1, w, t), example_omega_inf(), 1e-15, 50).unwrap()
}

pub fn example_ctx() -> PencilContext {
    PencilContext::new(example_interface(example_t()), 3.0, example_omega0()).unwrap()
}

/// Linear (no χ², χ³) version of the example interface.
pub fn linear_ctx() -> PencilContext {
    let mut mi = example_interface(example_t());
    mi.nl_minus = None;
    PencilContext::new(mi, 3.0, example_omega0()).unwrap()
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre points on `[a, b]`.
pub fn panel_points(rule: &[(f64, f64)], a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(rule.len() * panels);
    let w = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + p as f64 * w;
        for &(x, wt) in rule {
            pts.push((lo + 0.5 * w * (x + 1.0), 0.5 * w * wt));
        }
    }
    pts
}

pub fn integrate<F: FnMut(f64) -> C64>(rule: &[(f64, f64)], a: f64, b: f64, panels: usize, mut f: F) -> C64 {
    panel_points(rule, a, b, panels).into_iter().map(|(x, w)| f(x) * w).sum()
}
