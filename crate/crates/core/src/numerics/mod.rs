//! Special functions, extended-range arithmetic and Fourier transforms.

mod dft;
mod extended;
mod special;

pub use dft::{dft, ComplexVector, Direction, DftPlan};
pub use extended::ExtendedReal;
pub use special::{
    bell_touchard, bernoulli_number, bernoulli_poly, e_pow_inv_e, stirling2, zeta, MAX_BERNOULLI_DEGREE,
};

pub use rustfft::num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("unsupported Bernoulli degree {0} (even degrees 2..=16 only)")]
    UnsupportedDegree(u32),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("value 2^{log2:.1} is outside the f64 range")]
    OutOfRange { log2: f64 },
    #[error("cannot parse extended real from {0:?}")]
    Parse(String),
}
