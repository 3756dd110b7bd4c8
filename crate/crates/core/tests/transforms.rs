mod common;

use breather_core::breather::beta_coeff;
use breather_core::checks::gamma_bound_sweep;
use breather_core::susceptibility::{paley_wiener_exponent, LinearSusceptibility, NonlinearSusceptibility};
use breather_core::C64;
use common::oracles::*;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn chi1_lorentz_sweep_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t_cut = rng.gen_range(0.5..30.0);
        let w = c(rng.gen_range(-6.0..6.0), rng.gen_range(-1.0..0.5));
        let m = LinearSusceptibility::TruncatedLorentz { c_l: 20.0, gamma: 0.5, omega_star: 2.0, t_cut };
        worst = worst.max(rel(m.ft_chi1(w).unwrap(), chi1_oracle(&m, w)));
    }
    assert!(worst < 1e-10, "worst {worst:e}");
}

#[test]
fn chi1_drude_sweep_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t_cut = rng.gen_range(0.5..30.0);
        let w = c(rng.gen_range(-6.0..6.0), rng.gen_range(-1.0..0.5));
        let m = LinearSusceptibility::TruncatedDrude { c_d: 20.0, gamma: 0.5, t_cut };
        worst = worst.max(rel(m.ft_chi1(w).unwrap(), chi1_oracle(&m, w)));
    }
    assert!(worst < 1e-10, "worst {worst:e}");
}

#[test]
fn scaled_chi1_agrees_with_plain_at_long_truncation() {
    let t = example_t();
    let m = LinearSusceptibility::TruncatedLorentz { c_l: 20.0, gamma: 0.5, omega_star: 2.0, t_cut: t };
    for w in [c(1.8, -0.1), c(3.6, -0.3), c(-5.4, -0.45)] {
        let a = m.ft_chi1(w).unwrap();
        let b = m.ft_chi1_scaled(w).unwrap().to_complex();
        assert!(rel(b, a) < 1e-12, "{a} {b}");
    }
}

#[test]
fn chi2_sweep_matches_quadrature() {
    let nl = NonlinearSusceptibility::diagonal(2000.0, 1000.0, 1.0, 3.0, Some(1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (w1, w2) = (sample_w(&mut rng), sample_w(&mut rng));
        let got = nl.ft_chi2(0, 0, 0, w1, w2).unwrap();
        worst = worst.max(rel(got, 2000.0 * chi2_oracle(w1, w2, 1.0)));
    }
    assert!(worst < 1e-8, "worst {worst:e}");
}

#[test]
fn chi3_sweep_matches_quadrature() {
    let nl = NonlinearSusceptibility::diagonal(2000.0, 1000.0, 1.0, 3.0, Some(1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let w = [sample_w(&mut rng), sample_w(&mut rng), sample_w(&mut rng)];
        let got = nl.ft_chi3(1, 1, 1, 1, w[0], w[1], w[2]).unwrap();
        worst = worst.max(rel(got, 1000.0 * chi3_oracle(w, 1.0)));
    }
    assert!(worst < 1e-6, "worst {worst:e}");
}

#[test]
fn truncated_kernels_approach_untruncated() {
    let full = NonlinearSusceptibility::diagonal(1.0, 1.0, 1.0, 3.0, None);
    let (w1, w2, w3) = (c(1.2, -0.3), c(-2.0, -0.1), c(0.4, -0.2));
    let mut last2 = f64::INFINITY;
    let mut last3 = f64::INFINITY;
    let mut first = (0.0, 0.0);
    for t_n in [5.0, 10.0, 20.0] {
        let nl = NonlinearSusceptibility { t_n: Some(t_n), ..full.clone() };
        let g2 = rel(nl.k2(w1, w2).unwrap(), full.k2(w1, w2).unwrap());
        let g3 = rel(nl.k3(w1, w2, w3).unwrap(), full.k3(w1, w2, w3).unwrap());
        assert!(g2 < last2 && g3 < last3, "{t_n} {g2:e} {g3:e}");
        if t_n == 5.0 {
            first = (g2, g3);
        }
        last2 = g2;
        last3 = g3;
    }
    assert!(last2 < 1e-2 * first.0 && last3 < 1e-2 * first.1);
}

#[test]
fn conjugation_symmetry_of_transforms() {
    let nl = NonlinearSusceptibility::diagonal(2000.0, 1000.0, 1.0, 3.0, Some(1.0));
    let m = LinearSusceptibility::TruncatedLorentz { c_l: 20.0, gamma: 0.5, omega_star: 2.0, t_cut: 12.0 };
    let (w1, w2, w3) = (c(1.1, -0.4), c(2.3, -0.2), c(-0.6, -0.1));
    let r = |w: C64| -w.conj();
    assert!(rel(m.ft_chi1(r(w1)).unwrap(), m.ft_chi1(w1).unwrap().conj()) < 1e-13);
    assert!(rel(nl.k2(r(w1), r(w2)).unwrap(), nl.k2(w1, w2).unwrap().conj()) < 1e-12);
    assert!(rel(nl.k3(r(w1), r(w2), r(w3)).unwrap(), nl.k3(w1, w2, w3).unwrap().conj()) < 1e-12);
}

#[test]
fn plus_side_coefficients_vanish() {
    let ctx = example_ctx();
    assert_eq!(beta_coeff(&ctx, false, 2, 1, 2, 1, 0, 0, 0).unwrap(), c(0.0, 0.0));
    assert_ne!(beta_coeff(&ctx, true, 2, 1, 2, 1, 0, 0, 0).unwrap(), c(0.0, 0.0));
}

fn pw_ratios(seed: u64) -> Vec<f64> {
    let nl = NonlinearSusceptibility::diagonal(1.0, 1.0, 1.0, 3.0, Some(1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..100)
        .map(|_| {
            let w = [sample_w(&mut rng), sample_w(&mut rng), sample_w(&mut rng)];
            nl.k3(w[0], w[1], w[2]).unwrap().norm() / paley_wiener_exponent(&w, 1.0).exp()
        })
        .collect()
}

#[test]
fn paley_wiener_bound_holds_after_fitting() {
    let fit = pw_ratios(41).into_iter().fold(0.0, f64::max);
    let check = pw_ratios(42);
    let worst = check.into_iter().fold(0.0, f64::max);
    assert!(worst <= fit, "fitted {fit:e}, fresh sweep {worst:e}");
}

#[test]
fn cone_coefficient_bounds_hold_after_fitting() {
    let rep = gamma_bound_sweep(&example_ctx(), 6).unwrap();
    assert!(rep.samples_beta > 0 && rep.samples_gamma > 0);
    assert_eq!(rep.violations, 0, "{rep:?}");
}
