//! Time-domain quadrature oracles for the susceptibility transforms.

use breather_core::susceptibility::LinearSusceptibility;
use breather_core::C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{c, gauss_legendre, integrate};

pub fn lorentz_time(c_l: f64, gamma: f64, omega_star: f64, t: f64) -> f64 {
    let cs = (omega_star * omega_star - gamma * gamma).sqrt();
    c_l / cs * (-gamma * t).exp() * (cs * t).sin()
}

pub fn chi1_oracle(model: &LinearSusceptibility, w: C64) -> C64 {
    let rule = gauss_legendre(20);
    let i = c(0.0, 1.0);
    match *model {
        LinearSusceptibility::TruncatedLorentz { c_l, gamma, omega_star, t_cut } => {
            let panels = (t_cut * (w.norm() + omega_star + 1.0)).ceil() as usize + 4;
            integrate(&rule, 0.0, t_cut, panels, |t| lorentz_time(c_l, gamma, omega_star, t) * (i * w * t).exp())
        }
        LinearSusceptibility::TruncatedDrude { c_d, gamma, t_cut } => {
            let panels = (t_cut * (w.norm() + 1.0)).ceil() as usize + 4;
            integrate(&rule, 0.0, t_cut, panels, |t| c_d / gamma * (1.0 - (-gamma * t).exp()) * (i * w * t).exp())
        }
        _ => unreachable!(),
    }
}

pub fn osc(t: f64) -> f64 {
    // γ̃ = 1, ω̃* = 3
    let ct = 8.0f64.sqrt();
    (-t).exp() * (ct * t).sin() / ct
}

pub fn chi2_oracle(w1: C64, w2: C64, t_n: f64) -> C64 {
    let rule = gauss_legendre(16);
    let i = c(0.0, 1.0);
    integrate(&rule, 0.0, t_n, 3, |t1| {
        let inner = |t2: f64| {
            let m = t1.min(t2);
            let s = integrate(&rule, 0.0, m, 1, |s| c(osc(s) * osc(t1 - s) * osc(t2 - s), 0.0));
            s * (i * (w1 * t1 + w2 * t2)).exp()
        };
        integrate(&rule, 0.0, t1, 2, inner) + integrate(&rule, t1, t_n, 2, inner)
    })
}

pub fn chi3_oracle(w: [C64; 3], t_n: f64) -> C64 {
    let rule = gauss_legendre(10);
    let i = c(0.0, 1.0);
    integrate(&rule, 0.0, t_n, 2, |t1| {
        let over_t2 = |t2: f64| {
            let over_t3 = |t3: f64| {
                let m = t1.min(t2).min(t3);
                let s = integrate(&rule, 0.0, m, 1, |s| c(osc(s) * osc(t1 - s) * osc(t2 - s) * osc(t3 - s), 0.0));
                s * (i * (w[0] * t1 + w[1] * t2 + w[2] * t3)).exp()
            };
            let (a, b) = (t1.min(t2), t1.max(t2));
            integrate(&rule, 0.0, a, 1, over_t3)
                + integrate(&rule, a, b, 1, over_t3)
                + integrate(&rule, b, t_n, 1, over_t3)
        };
        integrate(&rule, 0.0, t1, 2, over_t2) + integrate(&rule, t1, t_n, 2, over_t2)
    })
}

pub fn sample_w(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..0.0))
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}
