//! Linear and nonlinear susceptibilities with their Fourier–Laplace transforms
//! `χ̂(ω) = ∫ χ(t) e^{iωt} dt`.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::numeric::e_int;
use crate::quad::GaussLegendre;
use crate::{c, Error, Result, Scaled, C64, I};

/// Finite sum `Σ a_j e^{λ_j t}` on `[0, cutoff]` (or `[0, ∞)`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSumKernel {
    /// `(amplitude, rate)` pairs.
    pub terms: Vec<(C64, C64)>,
    pub cutoff: Option<f64>,
}

impl ExpSumKernel {
    pub fn eval(&self, t: f64) -> C64 {
        if t < 0.0 || self.cutoff.is_some_and(|tc| t > tc) {
            return C64::new(0.0, 0.0);
        }
        self.terms.iter().map(|(a, l)| a * (l * t).exp()).sum()
    }

    /// Fourier–Laplace transform. Untruncated sums are only defined where every
    /// exponential decays.
    pub fn transform(&self, omega: C64) -> Result<C64> {
        match self.cutoff {
            Some(tc) => Ok(self.terms.iter().map(|(a, l)| a * e_int(I * omega + l, tc)).sum()),
            None => {
                let mut s = C64::new(0.0, 0.0);
                for (a, l) in &self.terms {
                    let z = I * omega + l;
                    if z.re >= 0.0 {
                        return Err(Error::Domain { omega_re: omega.re, omega_im: omega.im, bound: l.re });
                    }
                    s -= a / z;
                }
                Ok(s)
            }
        }
    }
}

/// Linear susceptibility `χ⁽¹⁾` of one half-space.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LinearSusceptibility {
    /// Non-dispersive: `χ̂ = α`.
    Constant {
        alpha: f64,
    },
    /// `χ(t) = (c_L/c*) e^{−γt} sin(c* t)` for `t ≥ 0`.
    UntruncatedLorentz {
        c_l: f64,
        gamma: f64,
        omega_star: f64,
    },
    /// Lorentz memory cut at `t = t_cut`.
    TruncatedLorentz {
        c_l: f64,
        gamma: f64,
        omega_star: f64,
        t_cut: f64,
    },
    /// `χ(t) = (c_D/γ)(1 − e^{−γt})` for `t ≥ 0`.
    UntruncatedDrude {
        c_d: f64,
        gamma: f64,
    },
    TruncatedDrude {
        c_d: f64,
        gamma: f64,
        t_cut: f64,
    },
}

impl LinearSusceptibility {
    pub fn validate(&self) -> Result<()> {
        use LinearSusceptibility::*;
        let bad = |m: &str| Err(Error::Config(m.into()));
        match *self {
            Constant { alpha } if !alpha.is_finite() => bad("alpha must be finite"),
            UntruncatedLorentz { gamma, omega_star, .. } | TruncatedLorentz { gamma, omega_star, .. }
                if !(gamma > 0.0 && omega_star > gamma) =>
            {
                bad("Lorentz model needs omega_star > gamma > 0")
            }
            UntruncatedDrude { gamma, .. } | TruncatedDrude { gamma, .. } if gamma <= 0.0 => {
                bad("Drude model needs gamma > 0")
            }
            TruncatedLorentz { t_cut, .. } | TruncatedDrude { t_cut, .. } if !(t_cut > 0.0 && t_cut.is_finite()) => {
                bad("truncation time must be positive")
            }
            _ => Ok(()),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        use LinearSusceptibility::*;
        match *self {
            Constant { .. } => None,
            UntruncatedLorentz { gamma, .. }
            | TruncatedLorentz { gamma, .. }
            | UntruncatedDrude { gamma, .. }
            | TruncatedDrude { gamma, .. } => Some(gamma),
        }
    }

    /// `c* = sqrt(ω*² − γ²)` for Lorentz models.
    pub fn c_star(&self) -> Option<f64> {
        use LinearSusceptibility::*;
        match *self {
            UntruncatedLorentz { gamma, omega_star, .. } | TruncatedLorentz { gamma, omega_star, .. } => {
                Some((omega_star * omega_star - gamma * gamma).sqrt())
            }
            _ => None,
        }
    }

    pub fn truncation(&self) -> Option<f64> {
        match *self {
            LinearSusceptibility::TruncatedLorentz { t_cut, .. }
            | LinearSusceptibility::TruncatedDrude { t_cut, .. } => Some(t_cut),
            _ => None,
        }
    }

    /// Same material with the memory cut removed.
    pub fn untruncated(&self) -> Self {
        use LinearSusceptibility::*;
        match *self {
            TruncatedLorentz { c_l, gamma, omega_star, .. } => UntruncatedLorentz { c_l, gamma, omega_star },
            TruncatedDrude { c_d, gamma, .. } => UntruncatedDrude { c_d, gamma },
            m => m,
        }
    }

    /// Same material with memory cut at `t`.
    pub fn with_truncation(&self, t: f64) -> Self {
        use LinearSusceptibility::*;
        match *self {
            TruncatedLorentz { c_l, gamma, omega_star, .. } | UntruncatedLorentz { c_l, gamma, omega_star } => {
                TruncatedLorentz { c_l, gamma, omega_star, t_cut: t }
            }
            TruncatedDrude { c_d, gamma, .. } | UntruncatedDrude { c_d, gamma } => {
                TruncatedDrude { c_d, gamma, t_cut: t }
            }
            m => m,
        }
    }

    /// Time-domain kernel, `None` for the instantaneous constant model.
    pub fn kernel(&self) -> Option<ExpSumKernel> {
        use LinearSusceptibility::*;
        let lorentz = |c_l: f64, gamma: f64, omega_star: f64, cutoff| {
            let cs = (omega_star * omega_star - gamma * gamma).sqrt();
            let a = C64::new(c_l, 0.0) / (2.0 * I * cs);
            ExpSumKernel { terms: alloc::vec![(a, c(-gamma, cs)), (-a, c(-gamma, -cs))], cutoff }
        };
        let drude = |c_d: f64, gamma: f64, cutoff| ExpSumKernel {
            terms: alloc::vec![(c(c_d / gamma, 0.0), c(0.0, 0.0)), (c(-c_d / gamma, 0.0), c(-gamma, 0.0))],
            cutoff,
        };
        match *self {
            Constant { .. } => None,
            UntruncatedLorentz { c_l, gamma, omega_star } => Some(lorentz(c_l, gamma, omega_star, None)),
            TruncatedLorentz { c_l, gamma, omega_star, t_cut } => Some(lorentz(c_l, gamma, omega_star, Some(t_cut))),
            UntruncatedDrude { c_d, gamma } => Some(drude(c_d, gamma, None)),
            TruncatedDrude { c_d, gamma, t_cut } => Some(drude(c_d, gamma, Some(t_cut))),
        }
    }

    /// `χ̂⁽¹⁾(ω)`. Untruncated models are rejected outside their half-plane of
    /// convergence; use [`continued`](Self::continued) for the rational extension.
    pub fn ft_chi1(&self, omega: C64) -> Result<C64> {
        use LinearSusceptibility::*;
        match *self {
            UntruncatedLorentz { gamma, .. } if omega.im <= -gamma => {
                Err(Error::Domain { omega_re: omega.re, omega_im: omega.im, bound: -gamma })
            }
            UntruncatedDrude { .. } if omega.im <= 0.0 => {
                Err(Error::Domain { omega_re: omega.re, omega_im: omega.im, bound: 0.0 })
            }
            _ => {
                let v = self.ft_chi1_scaled(omega)?.to_complex();
                if v.re.is_finite() && v.im.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Overflow("chi1 transform".into()))
                }
            }
        }
    }

    /// Analytic continuation of the untruncated transform (rational in `ω`).
    pub fn continued(&self, omega: C64) -> C64 {
        use LinearSusceptibility::*;
        match *self {
            Constant { alpha } => c(alpha, 0.0),
            UntruncatedLorentz { c_l, gamma, omega_star } | TruncatedLorentz { c_l, gamma, omega_star, .. } => {
                -c_l / (omega * omega + 2.0 * I * gamma * omega - omega_star * omega_star)
            }
            UntruncatedDrude { c_d, gamma } | TruncatedDrude { c_d, gamma, .. } => {
                -c_d / (omega * omega + I * gamma * omega)
            }
        }
    }

    /// `χ̂⁽¹⁾(ω)` in scaled form; untruncated models use the continuation.
    pub fn ft_chi1_scaled(&self, omega: C64) -> Result<Scaled> {
        use LinearSusceptibility::*;
        match *self {
            Constant { .. } | UntruncatedLorentz { .. } | UntruncatedDrude { .. } => {
                Ok(Scaled::from(self.continued(omega)))
            }
            TruncatedLorentz { c_l, gamma, omega_star, t_cut } => {
                let p = omega * omega + 2.0 * I * gamma * omega - omega_star * omega_star;
                let z = I * omega - gamma;
                if p.norm() < 1e-3 * (1.0 + omega.norm_sqr()) {
                    return Ok(Scaled::from(self.kernel().unwrap().transform(omega)?));
                }
                let cs = (omega_star * omega_star - gamma * gamma).sqrt();
                let (s, co) = (cs * t_cut).sin_cos();
                let b = z / cs * s - co;
                let bracket = Scaled::exp(z * t_cut) * b + c(1.0, 0.0);
                Ok(bracket * (-c_l / p))
            }
            TruncatedDrude { c_d, gamma, t_cut } => {
                let q = omega * omega + I * gamma * omega;
                let z = I * omega;
                if q.norm() < 1e-3 * (1.0 + omega.norm_sqr()) {
                    return Ok(Scaled::from(self.kernel().unwrap().transform(omega)?));
                }
                let inner = C64::new(1.0, 0.0) - I * omega / gamma * (-(-gamma * t_cut).exp_m1());
                let bracket = -(Scaled::exp(z * t_cut) * inner) + c(1.0, 0.0);
                Ok(bracket * (-c_d / q))
            }
        }
    }

    /// `ε(ω) = ε₀(1 + χ̂(ω))`.
    pub fn permittivity(&self, eps0: f64, omega: C64) -> Result<C64> {
        Ok(eps0 * (1.0 + self.ft_chi1(omega)?))
    }

    /// Scaled permittivity, using the continuation for untruncated models.
    pub fn permittivity_scaled(&self, eps0: f64, omega: C64) -> Result<Scaled> {
        Ok((self.ft_chi1_scaled(omega)? + c(1.0, 0.0)) * eps0)
    }
}

/// Nonlinear susceptibility `χ⁽²⁾`, `χ⁽³⁾` built from the damped oscillator
/// `D(t) = e^{−γ̃t} sin(c̃ t)/c̃`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NonlinearSusceptibility {
    /// `c⁽²⁾_{jpq}`, zero-based indices.
    pub c2: [[[f64; 3]; 3]; 3],
    pub c3: [[[[f64; 3]; 3]; 3]; 3],
    pub gamma_t: f64,
    pub omega_star_t: f64,
    /// Memory cut `T_N`; `None` keeps the full oscillator memory.
    pub t_n: Option<f64>,
}

impl NonlinearSusceptibility {
    /// Diagonal tensors `c2 δ_{jpq}`, `c3 δ_{jpqr}` on the in-plane components.
    pub fn diagonal(c2: f64, c3: f64, gamma_t: f64, omega_star_t: f64, t_n: Option<f64>) -> Self {
        let mut t2 = [[[0.0; 3]; 3]; 3];
        let mut t3 = [[[[0.0; 3]; 3]; 3]; 3];
        for j in 0..2 {
            t2[j][j][j] = c2;
            t3[j][j][j][j] = c3;
        }
        NonlinearSusceptibility { c2: t2, c3: t3, gamma_t, omega_star_t, t_n }
    }

    /// TM compatibility and oscillator parameters.
    pub fn validate(&self) -> Result<()> {
        for p in 0..2 {
            for q in 0..2 {
                if self.c2[2][p][q] != 0.0 {
                    return Err(Error::Config("c2[3][p][q] must vanish for p,q in {1,2}".into()));
                }
                for r in 0..2 {
                    if self.c3[2][p][q][r] != 0.0 {
                        return Err(Error::Config("c3[3][p][q][r] must vanish for p,q,r in {1,2}".into()));
                    }
                }
            }
        }
        if !(self.gamma_t > 0.0 && self.omega_star_t > self.gamma_t) {
            return Err(Error::Config("nonlinear oscillator needs omega_star_tilde > gamma_tilde > 0".into()));
        }
        if let Some(t) = self.t_n {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config("T_N must be positive".into()));
            }
        }
        Ok(())
    }

    fn c_tilde(&self) -> f64 {
        (self.omega_star_t * self.omega_star_t - self.gamma_t * self.gamma_t).sqrt()
    }

    /// Oscillator of the kernel as two exponentials.
    pub fn oscillator(&self) -> ExpSumKernel {
        let ct = self.c_tilde();
        let a = C64::new(1.0, 0.0) / (2.0 * I * ct);
        ExpSumKernel { terms: alloc::vec![(a, c(-self.gamma_t, ct)), (-a, c(-self.gamma_t, -ct))], cutoff: None }
    }

    /// `D̂(ω) = −1/(ω² + 2iγ̃ω − ω̃*²)`.
    pub fn d_hat(&self, omega: C64) -> C64 {
        -C64::new(1.0, 0.0) / (omega * omega + 2.0 * I * self.gamma_t * omega - self.omega_star_t * self.omega_star_t)
    }

    fn check_untruncated(&self, omegas: &[C64]) -> Result<()> {
        let total: C64 = omegas.iter().sum();
        for w in omegas.iter().chain(core::iter::once(&total)) {
            if w.im <= -self.gamma_t {
                return Err(Error::Domain { omega_re: w.re, omega_im: w.im, bound: -self.gamma_t });
            }
        }
        Ok(())
    }

    /// Scalar quadratic kernel transform (the tensor is `c⁽²⁾_{jpq}` times this).
    pub fn k2(&self, w1: C64, w2: C64) -> Result<C64> {
        match self.t_n {
            None => {
                self.check_untruncated(&[w1, w2])?;
                Ok(self.d_hat(w1) * self.d_hat(w2) * self.d_hat(w1 + w2))
            }
            Some(t) => Ok(self.truncated_kernel(&[w1, w2], t)),
        }
    }

    /// Scalar cubic kernel transform.
    pub fn k3(&self, w1: C64, w2: C64, w3: C64) -> Result<C64> {
        match self.t_n {
            None => {
                self.check_untruncated(&[w1, w2, w3])?;
                Ok(self.d_hat(w1) * self.d_hat(w2) * self.d_hat(w3) * self.d_hat(w1 + w2 + w3))
            }
            Some(t) => Ok(self.truncated_kernel(&[w1, w2, w3], t)),
        }
    }

    pub fn ft_chi2(&self, j: usize, p: usize, q: usize, w1: C64, w2: C64) -> Result<C64> {
        Ok(self.c2[j][p][q] * self.k2(w1, w2)?)
    }

    pub fn ft_chi3(&self, j: usize, p: usize, q: usize, r: usize, w1: C64, w2: C64, w3: C64) -> Result<C64> {
        Ok(self.c3[j][p][q][r] * self.k3(w1, w2, w3)?)
    }

    /// Nonzero in-plane entries `(j, p, q, c)`.
    pub fn nonzero2(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut v = Vec::new();
        for j in 0..2 {
            for p in 0..2 {
                for q in 0..2 {
                    if self.c2[j][p][q] != 0.0 {
                        v.push((j, p, q, self.c2[j][p][q]));
                    }
                }
            }
        }
        v
    }

    pub fn nonzero3(&self) -> Vec<(usize, usize, usize, usize, f64)> {
        let mut v = Vec::new();
        for j in 0..2 {
            for p in 0..2 {
                for q in 0..2 {
                    for r in 0..2 {
                        if self.c3[j][p][q][r] != 0.0 {
                            v.push((j, p, q, r, self.c3[j][p][q][r]));
                        }
                    }
                }
            }
        }
        v
    }

    /// `∫_{[0,T]^m} e^{iω·t} ∫₀^{min t} D(s) Π D(t_i − s) ds dt` by expanding `D`
    /// into exponentials.
    fn truncated_kernel(&self, omegas: &[C64], t: f64) -> C64 {
        let osc = self.oscillator();
        let m = omegas.len();
        let mut total = C64::new(0.0, 0.0);
        // outer index picks the exponential of D(s), the rest those of D(t_i − s)
        let combos = 1usize << (m + 1);
        let mut p = [C64::new(0.0, 0.0); 3];
        for mask in 0..combos {
            let (aa, la) = osc.terms[mask & 1];
            let mut amp = aa;
            let mut kappa = la;
            for i in 0..m {
                let (ab, lb) = osc.terms[(mask >> (i + 1)) & 1];
                amp *= ab;
                kappa -= lb;
                p[i] = I * omegas[i] + lb;
            }
            total += amp * min_kernel_integral(&p[..m], kappa, t);
        }
        total
    }
}

/// `∫_{[0,T]^m} e^{p·t} E(κ, min t) dt` with `E(κ, s) = ∫₀ˢ e^{κσ} dσ`.
pub fn min_kernel_integral(p: &[C64], kappa: C64, t: f64) -> C64 {
    const THRESH: f64 = 0.25;
    if kappa.norm() * t < THRESH || p.iter().any(|q| q.norm() * t < THRESH) {
        return min_kernel_quadrature(p, kappa, t);
    }
    let m = p.len();
    let mut total = C64::new(0.0, 0.0);
    for i in 0..m {
        let others: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        let denom: C64 = others.iter().map(|&j| p[j]).product();
        for mask in 0..(1usize << others.len()) {
            let mut q = p[i];
            let mut outer = C64::new(0.0, 0.0);
            let mut sign = 1.0;
            for (b, &j) in others.iter().enumerate() {
                if (mask >> b) & 1 == 1 {
                    q += p[j];
                    sign = -sign;
                } else {
                    outer += p[j];
                }
            }
            let val = (e_int(kappa + q, t) - e_int(q, t)) / kappa;
            total += sign * (outer * t).exp() * val / denom;
        }
    }
    total
}

fn min_kernel_quadrature(p: &[C64], kappa: C64, t: f64) -> C64 {
    let rate = kappa.norm() + p.iter().map(|q| q.norm()).sum::<f64>();
    let panels = ((rate * t / 2.0).ceil() as usize).max(1) + 1;
    let g = GaussLegendre::new(20);
    g.composite(0.0, t, panels, |s| {
        let tail = |q: C64| (q * s).exp() * e_int(q, t - s);
        let mut sum = C64::new(0.0, 0.0);
        for i in 0..p.len() {
            let mut term = (p[i] * s).exp();
            for (j, &q) in p.iter().enumerate() {
                if j != i {
                    term *= tail(q);
                }
            }
            sum += term;
        }
        e_int(kappa, s) * sum
    })
}

/// Exponent of the Paley–Wiener growth bound `c·e^{√m T_N Σ|Im ω_i|}`.
pub fn paley_wiener_exponent(omegas: &[C64], t_n: f64) -> f64 {
    let m = omegas.len() as f64;
    m.sqrt() * t_n * omegas.iter().map(|w| w.im.abs()).sum::<f64>()
}

/// Two half-spaces joined at `x = 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaterialInterface {
    pub eps0: f64,
    pub mu0: f64,
    pub minus: LinearSusceptibility,
    pub plus: LinearSusceptibility,
    pub nl_minus: Option<NonlinearSusceptibility>,
    pub nl_plus: Option<NonlinearSusceptibility>,
}

impl MaterialInterface {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.mu0 > 0.0) {
            return Err(Error::Config("eps0 and mu0 must be positive".into()));
        }
        self.minus.validate()?;
        self.plus.validate()?;
        for nl in [&self.nl_minus, &self.nl_plus].into_iter().flatten() {
            nl.validate()?;
        }
        Ok(())
    }

    /// `c₀ = 1/sqrt(ε₀μ₀)`.
    pub fn c0(&self) -> f64 {
        1.0 / (self.eps0 * self.mu0).sqrt()
    }

    pub fn side(&self, minus: bool) -> &LinearSusceptibility {
        if minus {
            &self.minus
        } else {
            &self.plus
        }
    }

    pub fn nonlinear(&self, minus: bool) -> Option<&NonlinearSusceptibility> {
        if minus {
            self.nl_minus.as_ref()
        } else {
            self.nl_plus.as_ref()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_and_integral_forms_agree() {
        let m = LinearSusceptibility::TruncatedLorentz { c_l: 20.0, gamma: 0.5, omega_star: 2.0, t_cut: 7.3 };
        let k = m.kernel().unwrap();
        for w in [c(1.3, -0.2), c(-4.0, -0.45), c(0.1, 0.3)] {
            let a = m.ft_chi1(w).unwrap();
            let b = k.transform(w).unwrap();
            assert!((a - b).norm() < 1e-11 * b.norm(), "{a} {b}");
        }
    }

    #[test]
    fn drude_closed_form_matches_exponentials() {
        let m = LinearSusceptibility::TruncatedDrude { c_d: 20.0, gamma: 0.5, t_cut: 3.0 };
        let w = c(1.7, -0.1);
        let closed = {
            let (c_d, g, t) = (20.0, 0.5, 3.0);
            -c_d / (w * w + I * g * w)
                * (C64::new(1.0, 0.0) - (I * w * t).exp() * (C64::new(1.0, 0.0) - I * w / g * (1.0 - (-g * t).exp())))
        };
        assert!((m.kernel().unwrap().transform(w).unwrap() - closed).norm() < 1e-12 * closed.norm());
    }

    #[test]
    fn untruncated_domain_enforced() {
        let m = LinearSusceptibility::UntruncatedLorentz { c_l: 20.0, gamma: 0.5, omega_star: 2.0 };
        assert!(matches!(m.ft_chi1(c(1.0, -0.6)), Err(Error::Domain { .. })));
        assert!(m.ft_chi1(c(1.0, -0.4)).is_ok());
    }

    #[test]
    fn tm_violation_rejected() {
        let mut nl = NonlinearSusceptibility::diagonal(1.0, 1.0, 1.0, 3.0, Some(1.0));
        assert!(nl.validate().is_ok());
        nl.c2[2][0][1] = 0.5;
        assert!(nl.validate().is_err());
    }

    #[test]
    fn long_truncation_tends_to_untruncated_kernel() {
        let nl = NonlinearSusceptibility::diagonal(1.0, 1.0, 1.0, 3.0, Some(40.0));
        let full = NonlinearSusceptibility { t_n: None, ..nl.clone() };
        let (w1, w2, w3) = (c(1.2, -0.1), c(-0.7, 0.05), c(2.1, -0.2));
        let a = nl.k2(w1, w2).unwrap();
        let b = full.k2(w1, w2).unwrap();
        assert!((a - b).norm() < 1e-9 * b.norm());
        let a = nl.k3(w1, w2, w3).unwrap();
        let b = full.k3(w1, w2, w3).unwrap();
        assert!((a - b).norm() < 1e-9 * b.norm());
    }
}
