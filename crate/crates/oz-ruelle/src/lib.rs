//! Ruelle transfer operators over a finite truncation of a countable alphabet
//! with an absorbing empty symbol, realised as nonnegative matrices on
//! depth-m cylinder contexts, together with the spectral data (Perron root,
//! eigenfunction, gap), tilting, Fourier symbols, and the local limit
//! machinery for the displacement observable V.

pub mod alphabet;
pub mod llt;
pub mod operator;

pub use alphabet::{Alphabet, ContextSet, Potential};
pub use llt::{DisplacementDistribution, GaussianModel};
pub use operator::{RuelleOperator, SpectralData};

#[derive(Debug, Clone, PartialEq)]
pub enum RuelleError {
    Invalid(String),
    NoConvergence { residual: f64, iterations: usize },
    Degenerate(String),
}

impl std::fmt::Display for RuelleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RuelleError::Invalid(m) => write!(f, "{m}"),
            RuelleError::NoConvergence { residual, iterations } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:.3e})")
            }
            RuelleError::Degenerate(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for RuelleError {}

pub type Result<T> = std::result::Result<T, RuelleError>;
