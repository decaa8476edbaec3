//! Statistical-mechanics core: finite-range ferromagnetic Ising models on
//! finite pieces of Z^d, exact two-point oracles (spin sums, transfer matrices,
//! cluster Monte Carlo), the random-line representation of correlations, the
//! K-skeleton surcharge calculus and the irreducible path decomposition.
//!
//! Conventions used throughout:
//!   * Gibbs weight exp{+β Σ J(x−y) σ_x σ_y} with J ≥ 0 (ferromagnetic).
//!   * Partition functions appear only through even-subgraph polynomials
//!     Z̃(B) = Σ_{D ⊆ B, ∂D = ∅} Π_{e∈D} tanh βJ(e), so that a line weight is
//!     q(λ) = w(λ) Z̃(B∖Δ(λ)) / Z̃(B).
//!   * All edge orderings are lexicographic in the other endpoint, which makes
//!     line extraction and everything downstream deterministic.

pub mod config;
pub mod decomp;
pub mod gibbs;
pub mod lattice;
pub mod line;
pub mod norm;
pub mod skeleton;
pub mod strip;
pub mod wolff;
pub mod xi;

pub use config::ModelConfig;
pub use gibbs::{CorrelationTable, Method};
pub use lattice::{CouplingField, LatticeGraph, Point};
pub use norm::{DualVector, NormModel};

/// Errors shared by the core operations.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Empty or malformed region of Z^d.
    EmptyRegion,
    /// Instance too large for the requested exact method.
    TooLarge(String),
    /// Violated precondition (boundary mismatch, incompatible line, ...).
    Invalid(String),
    /// Config file syntax or semantics.
    Config(String),
    /// A numerical procedure failed to converge or produced nonsense.
    Numerical(String),
}

impl std::fmt::Display for CoreError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoreError::EmptyRegion => write!(f, "empty region"),
            CoreError::TooLarge(m) => write!(f, "{m}"),
            CoreError::Invalid(m) => write!(f, "{m}"),
            CoreError::Config(m) => write!(f, "config: {m}"),
            CoreError::Numerical(m) => write!(f, "numerical: {m}"),
        }
    }
}

impl std::error::Error for CoreError {}

pub type Result<T> = std::result::Result<T, CoreError>;
