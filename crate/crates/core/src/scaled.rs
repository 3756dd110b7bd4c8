//! Complex numbers stored as `mantissa · e^scale`.
//!
//! On the metal side, large mixed multiples make `e^{(iω−γ)T}` leave the
//! `f64` range long before the quantities built from it stop being useful.

#[allow(unused_imports)]
use num_traits::Float;

use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::C64;

/// `mant · e^{scale}` with `|mant|` kept near one.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scaled {
    mant: C64,
    scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mant: C64::new(0.0, 0.0), scale: 0.0 };
    pub const ONE: Scaled = Scaled { mant: C64::new(1.0, 0.0), scale: 0.0 };

    fn normalized(mant: C64, scale: f64) -> Self {
        let a = mant.norm();
        if a == 0.0 || !a.is_finite() {
            return if a == 0.0 { Self::ZERO } else { Scaled { mant, scale } };
        }
        let l = a.ln();
        if l.abs() < 4.0 {
            return Scaled { mant, scale };
        }
        Scaled { mant: mant / a, scale: scale + l }
    }

    pub fn from_complex(z: C64) -> Self {
        Self::normalized(z, 0.0)
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(C64::new(x, 0.0))
    }

    /// `e^z` without forming it.
    pub fn exp(z: C64) -> Self {
        Scaled { mant: C64::new(z.im.cos(), z.im.sin()), scale: z.re }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.re == 0.0 && self.mant.im == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.mant.re.is_finite() && self.mant.im.is_finite() && self.scale.is_finite()
    }

    /// Natural log of the modulus; `-inf` for zero.
    pub fn log_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mant.norm().ln() + self.scale
        }
    }

    /// Phase in radians.
    pub fn arg(&self) -> f64 {
        self.mant.arg()
    }

    /// Value in ordinary precision; overflows to infinity and underflows to zero.
    pub fn to_complex(&self) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        if self.scale > 709.0 {
            let a = self.mant.norm();
            let l = a.ln() + self.scale;
            if l > 709.7 {
                return C64::new(f64::INFINITY, f64::INFINITY);
            }
            return self.mant / a * l.exp();
        }
        if self.scale < -700.0 {
            let a = self.mant.norm();
            let l = a.ln() + self.scale;
            if l < -745.0 {
                return C64::new(0.0, 0.0);
            }
            return self.mant / a * l.exp();
        }
        self.mant * self.scale.exp()
    }

    /// Ordinary value with the modulus capped at `e^{max_log}`, phase kept.
    pub fn clamped(&self, max_log: f64) -> C64 {
        if self.log_abs() > max_log {
            return self.mant / self.mant.norm() * max_log.exp();
        }
        self.to_complex()
    }

    pub fn abs(&self) -> f64 {
        self.log_abs().exp()
    }

    pub fn conj(&self) -> Self {
        Scaled { mant: self.mant.conj(), scale: self.scale }
    }

    /// Principal square root; the real part stays non-negative.
    pub fn sqrt(&self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::normalized(self.mant.sqrt(), 0.5 * self.scale)
    }

    pub fn recip(&self) -> Self {
        Self::normalized(self.mant.inv(), -self.scale)
    }

    pub fn scale_by(&self, z: C64) -> Self {
        Self::normalized(self.mant * z, self.scale)
    }

    /// `self / other` in ordinary precision, exact when both are huge.
    pub fn ratio(&self, other: &Scaled) -> C64 {
        (*self / *other).to_complex()
    }
}

impl From<C64> for Scaled {
    fn from(z: C64) -> Self {
        Scaled::from_complex(z)
    }
}

impl Add for Scaled {
    type Output = Scaled;
    fn add(self, rhs: Scaled) -> Scaled {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.scale >= rhs.scale { (self, rhs) } else { (rhs, self) };
        let d = small.scale - big.scale;
        let m = if d < -745.0 { big.mant } else { big.mant + small.mant * d.exp() };
        Scaled::normalized(m, big.scale)
    }
}

impl Sub for Scaled {
    type Output = Scaled;
    fn sub(self, rhs: Scaled) -> Scaled {
        self + (-rhs)
    }
}

impl Neg for Scaled {
    type Output = Scaled;
    fn neg(self) -> Scaled {
        Scaled { mant: -self.mant, scale: self.scale }
    }
}

impl Mul for Scaled {
    type Output = Scaled;
    fn mul(self, rhs: Scaled) -> Scaled {
        Scaled::normalized(self.mant * rhs.mant, self.scale + rhs.scale)
    }
}

impl Mul<C64> for Scaled {
    type Output = Scaled;
    fn mul(self, rhs: C64) -> Scaled {
        self.scale_by(rhs)
    }
}

impl Mul<f64> for Scaled {
    type Output = Scaled;
    fn mul(self, rhs: f64) -> Scaled {
        self.scale_by(C64::new(rhs, 0.0))
    }
}

impl Div for Scaled {
    type Output = Scaled;
    fn div(self, rhs: Scaled) -> Scaled {
        Scaled::normalized(self.mant / rhs.mant, self.scale - rhs.scale)
    }
}

impl Add<C64> for Scaled {
    type Output = Scaled;
    fn add(self, rhs: C64) -> Scaled {
        self + Scaled::from_complex(rhs)
    }
}
