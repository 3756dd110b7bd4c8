//! Small complex special functions used by the kernels and solvers.

#[allow(unused_imports)]
use num_traits::Float;

use crate::{c, C64};

/// `e^z − 1` without cancellation near zero.
pub fn expm1(z: C64) -> C64 {
    if z.norm() < 1e-5 {
        return z * (C64::new(1.0, 0.0) + z * (0.5 + z / 6.0));
    }
    let em1 = z.re.exp_m1();
    let (s, co) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    // e^x cos y − 1 = expm1(x) cos y − 2 sin²(y/2)
    c(em1 * co - 2.0 * half * half, (em1 + 1.0) * s)
}

/// `(e^w − 1)/w`, entire.
pub fn phi1(w: C64) -> C64 {
    if w.norm() < 0.5 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..30 {
            term = term * w / k as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        expm1(w) / w
    }
}

/// `∫₀ᵗ e^{z s} ds`.
#[inline]
pub fn e_int(z: C64, t: f64) -> C64 {
    phi1(z * t) * t
}

/// Weights `(∫₀¹ (1−θ) e^{−zθ} dθ, ∫₀¹ θ e^{−zθ} dθ)` for product integration
/// of a linear interpolant against a decaying exponential.
pub fn linear_exp_weights(z: C64) -> (C64, C64) {
    if z.norm() < 0.1 {
        // series in z
        let mut w0 = C64::new(0.0, 0.0);
        let mut w1 = C64::new(0.0, 0.0);
        let mut p = C64::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 0..20 {
            if k > 0 {
                p *= -z;
                fact *= k as f64;
            }
            let kf = k as f64;
            // ∫ θ^k (1−θ) = 1/((k+1)(k+2)), ∫ θ^{k+1} = 1/(k+2)
            w0 += p / (fact * (kf + 1.0) * (kf + 2.0));
            w1 += p / (fact * (kf + 2.0));
        }
        return (w0, w1);
    }
    let em = (-z).exp();
    let one_m = -expm1(-z);
    let z2 = z * z;
    (C64::new(1.0, 0.0) / z - one_m / z2, one_m / z2 - em / z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm1_small_and_large() {
        let z = c(1e-9, -2e-9);
        assert!((expm1(z) - z).norm() < 1e-17);
        let z = c(0.7, 2.0);
        assert!((expm1(z) - (z.exp() - 1.0)).norm() < 1e-14);
    }

    #[test]
    fn e_int_matches_quadrature() {
        let z = c(-0.3, 2.5);
        let t = 3.0;
        let exact = (z * t).exp() / z - C64::new(1.0, 0.0) / z;
        assert!((e_int(z, t) - exact).norm() < 1e-13);
        assert!((e_int(c(0.0, 0.0), t) - t).norm() < 1e-15);
    }

    #[test]
    fn weights_continuous_across_switch() {
        let a = linear_exp_weights(c(0.0999, 0.0));
        let b = linear_exp_weights(c(0.1001, 0.0));
        assert!((a.0 - b.0).norm() < 1e-4 && (a.1 - b.1).norm() < 1e-4);
        let z0 = linear_exp_weights(c(0.0, 0.0));
        assert!((z0.0 - 0.5).norm() < 1e-15 && (z0.1 - 0.5).norm() < 1e-15);
    }
}
