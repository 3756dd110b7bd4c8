//! Dense complex polynomials in ascending-coefficient form.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::{c, Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<C64>);

impl Poly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut p = Poly(coeffs);
        p.trim();
        p
    }

    pub fn constant(a: C64) -> Self {
        Poly::new(alloc::vec![a])
    }

    pub fn real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&x| c(x, 0.0)).collect())
    }

    fn trim(&mut self) {
        while self.0.len() > 1 && *self.0.last().unwrap() == C64::new(0.0, 0.0) {
            self.0.pop();
        }
        if self.0.is_empty() {
            self.0.push(C64::new(0.0, 0.0));
        }
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.0.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a)
    }

    /// Value and first derivative by Horner.
    pub fn eval_d(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut d = C64::new(0.0, 0.0);
        for &a in self.0.iter().rev() {
            d = d * z + p;
            p = p * z + a;
        }
        (p, d)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        let mut v = alloc::vec![C64::new(0.0, 0.0); n];
        for (i, a) in self.0.iter().enumerate() {
            v[i] += a;
        }
        for (i, a) in o.0.iter().enumerate() {
            v[i] += a;
        }
        Poly::new(v)
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly::new(self.0.iter().map(|a| a * s).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(c(-1.0, 0.0)))
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut v = alloc::vec![C64::new(0.0, 0.0); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Poly::new(v)
    }

    /// All roots by Aberth–Ehrlich iteration followed by Newton polishing.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.0[n];
        let monic: Vec<C64> = self.0.iter().map(|a| a / lead).collect();
        let mp = Poly(monic);
        let radius = 1.0 + mp.0[..n].iter().map(|a| a.norm()).fold(0.0, f64::max);
        let mut z: Vec<C64> = (0..n)
            .map(|k| {
                let th = 2.0 * core::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
                C64::from_polar(0.5 * radius, th)
            })
            .collect();
        let abs_coeffs: Vec<f64> = mp.0.iter().map(|a| a.norm()).collect();
        // |p(z)| against the rounding level of Horner's rule at |z|
        let backward = |z: C64, p: C64| {
            let r = z.norm();
            let bound = abs_coeffs.iter().rev().fold(0.0, |acc, a| acc * r + a);
            p.norm() / bound
        };
        let mut converged = false;
        let mut worst = f64::NAN;
        for _ in 0..500 {
            let mut max_step = 0.0f64;
            let mut max_back = 0.0f64;
            for i in 0..n {
                let (p, d) = mp.eval_d(z[i]);
                if p == C64::new(0.0, 0.0) {
                    continue;
                }
                max_back = max_back.max(backward(z[i], p));
                let ratio = p / d;
                let mut s = C64::new(0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        s += C64::new(1.0, 0.0) / (z[i] - z[j]);
                    }
                }
                let w = ratio / (C64::new(1.0, 0.0) - ratio * s);
                z[i] -= w;
                max_step = max_step.max(w.norm() / (1.0 + z[i].norm()));
            }
            worst = max_back;
            if max_step < 1e-15 || max_back < 1e-14 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence { iterations: 500, residual: worst });
        }
        for zi in z.iter_mut() {
            for _ in 0..3 {
                let (p, d) = self.eval_d(*zi);
                if d.norm() == 0.0 {
                    break;
                }
                *zi -= p / d;
            }
        }
        Ok(z)
    }
}
