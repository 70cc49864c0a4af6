//! Kernel interpolation at rank-1 lattice points for periodic functions of
//! many variables, with an elliptic PDE surrogate application.
//!
//! The pieces, bottom up:
//!
//! - [`numerics`]: Bernoulli polynomials, `ζ`, Stirling numbers, extended-range
//!   reals and FFTs.
//! - [`weights`]: product, POD and SPOD weight families and the rules that pick
//!   them from PDE decay data.
//! - [`kernel`]: `η_α` and the reproducing kernel with `O(s)`, `O(s²)` and
//!   `O(s²σ²)` evaluation paths.
//! - [`lattice`]: rank-1 lattices, the CBC criterion and construction.
//! - [`interpolant`]: the FFT circulant solve and shifted-lattice evaluation.
//! - [`fem`]: P1 finite elements for the parametric diffusion problem.
//! - [`experiments`]: Sobol′ points, study drivers and rate fits.

pub mod experiments;
pub mod fem;
pub mod interpolant;
pub mod kernel;
pub mod lattice;
pub mod numerics;
pub mod weights;

pub use interpolant::{Interpolant, TrigPolynomial};
pub use kernel::KernelSpec;
pub use lattice::{CbcReport, Lattice};
pub use numerics::ExtendedReal;
pub use weights::{DerivedParams, WeightKind, WeightScheme};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
    #[error(transparent)]
    Weights(#[from] weights::WeightsError),
    #[error(transparent)]
    Kernel(#[from] kernel::KernelError),
    #[error(transparent)]
    Lattice(#[from] lattice::LatticeError),
    #[error(transparent)]
    Interpolant(#[from] interpolant::InterpolantError),
    #[error(transparent)]
    Fem(#[from] fem::FemError),
    #[error(transparent)]
    Sobol(#[from] experiments::sobol::SobolError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// `true` for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        use interpolant::InterpolantError as I;
        use kernel::KernelError as K;
        use lattice::LatticeError as L;
        let kernel_numerical = |k: &K| matches!(k, K::Overflow { .. } | K::Numerics(_));
        match self {
            Error::Numerics(numerics::NumericsError::OutOfRange { .. }) => true,
            Error::Kernel(k) => kernel_numerical(k),
            Error::Lattice(L::Kernel(k)) => kernel_numerical(k),
            Error::Interpolant(I::NearSingular { .. }) => true,
            Error::Interpolant(I::Kernel(k)) => kernel_numerical(k),
            Error::Fem(fem::FemError::NotConverged { .. }) => true,
            _ => false,
        }
    }

    /// Process exit status: 1 for invalid input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
