use alloc::string::String;
use core::fmt;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter set that cannot describe a valid model or run.
    Config(String),
    /// An untruncated transform was requested outside its half-plane of validity.
    Domain { omega_re: f64, omega_im: f64, bound: f64 },
    /// Confluent exponential rates that the closed form cannot separate.
    DegenerateRate(String),
    /// The frequency lies on a contour or in a set where the quantity is undefined.
    ZeroOnContour { re: f64, im: f64 },
    /// Contour quadrature could not be resolved to an integer.
    Quadrature(String),
    /// Newton iteration failed to converge.
    Convergence { iterations: usize, residual: f64 },
    /// Requested frequency lies in the essential spectrum.
    EssentialSpectrum { n: i32, nu: u32 },
    /// The linear system is singular to working precision.
    SingularSystem { row: usize },
    /// A scaled quantity could not be brought back into `f64` range.
    Overflow(String),
    /// Node-family or grid mismatch between inputs.
    Grid(String),
    /// A cone frequency outside the resolvent set was hit during the recursion.
    ResolventViolation { n: i32, nu: u32, kind: &'static str },
    /// Division by a vanishing frequency.
    ZeroFrequency,
    /// A rhs was passed to a solver that cannot represent it.
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(m) => write!(f, "invalid configuration: {m}"),
            Error::Domain { omega_re, omega_im, bound } => {
                write!(f, "frequency {omega_re}{omega_im:+}i outside the half-plane Im > {bound}")
            }
            Error::DegenerateRate(m) => write!(f, "degenerate exponential rates: {m}"),
            Error::ZeroOnContour { re, im } => write!(f, "zero of the dispersion function near {re}{im:+}i"),
            Error::Quadrature(m) => write!(f, "contour quadrature failed: {m}"),
            Error::Convergence { iterations, residual } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
            Error::EssentialSpectrum { n, nu } => write!(f, "cone point ({n},{nu}) lies in the essential spectrum"),
            Error::SingularSystem { row } => write!(f, "singular system at row {row}"),
            Error::Overflow(m) => write!(f, "overflow: {m}"),
            Error::Grid(m) => write!(f, "grid mismatch: {m}"),
            Error::ResolventViolation { n, nu, kind } => {
                write!(f, "cone point ({n},{nu}) is not in the resolvent set ({kind})")
            }
            Error::ZeroFrequency => write!(f, "zero frequency"),
            Error::Unsupported(m) => write!(f, "unsupported input: {m}"),
        }
    }
}

impl core::error::Error for Error {}
