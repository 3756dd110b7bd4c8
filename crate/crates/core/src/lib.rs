//! Numerical core for polychromatic surface-plasmon solutions of the
//! nonlinear TM Maxwell interface problem with time-truncated material laws.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and parallel drivers live in the companion `breather` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod banded;
pub mod breather;
pub mod checks;
mod error;
pub mod numeric;
pub mod pencil;
pub mod poly;
pub mod quad;
pub mod resolvent;
pub mod scaled;
pub mod susceptibility;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use scaled::Scaled;

/// Shorthand used throughout the crate.
pub type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
