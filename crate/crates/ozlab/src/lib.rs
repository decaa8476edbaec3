//! Pipeline glue for the Ornstein-Zernike laboratory: irreducible-path
//! alphabets built from Ising data or closed-form toy walks, Wulff-boundary
//! tracing through ρ(s) = 1, curvature and duality, the OZ prefactor
//! assembly and decay fits, and the strict triangle inequality check.

pub mod alphabet_build;
pub mod ozfit;
pub mod pipeline;
pub mod toys;
pub mod wulff;

pub use ozfit::{oz_fit, oz_prefactor, strict_triangle_check, BoundaryPair, OzFit};
pub use wulff::{trace_boundary, BoundaryCurvature, WulffBoundary};

#[derive(Debug)]
pub enum LabError {
    Core(oz_core::CoreError),
    Ruelle(oz_ruelle::RuelleError),
    Invalid(String),
    Numerical(String),
}

impl From<oz_core::CoreError> for LabError {
    fn from(e: oz_core::CoreError) -> Self {
        LabError::Core(e)
    }
}

impl From<oz_ruelle::RuelleError> for LabError {
    fn from(e: oz_ruelle::RuelleError) -> Self {
        LabError::Ruelle(e)
    }
}

impl std::fmt::Display for LabError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabError::Core(e) => write!(f, "{e}"),
            LabError::Ruelle(e) => write!(f, "{e}"),
            LabError::Invalid(m) => write!(f, "{m}"),
            LabError::Numerical(m) => write!(f, "numerical: {m}"),
        }
    }
}

impl std::error::Error for LabError {}

pub type Result<T> = std::result::Result<T, LabError>;
