//! Closed forms and exact classification for structured chain families:
//! level-homogeneous chains on uniform posets, spatially homogeneous chains
//! on positive semigroups, and the grid `ℕ^k`.

pub mod grid;
pub mod level;
pub mod semigroup;

use thiserror::Error;

use crate::invariant::KernelError;
use crate::poset::PosetError;

pub use grid::{grid_closed_forms, grid_downward, grid_marginal, GridClosedForms, MarginalReport};
pub use level::{
    decompose_level_homogeneous, level_homogeneous_kernel, level_invariant_f,
    level_reversed_kernel, success_runs, LevelParams, SuccessRuns, Tail, UpwardDecomposition,
};
pub use semigroup::{FactoredInvariant, FreeSemigroup, GridSemigroup, Semigroup, SpatialChain};

#[derive(Debug, Error)]
pub enum FamiliesError {
    #[error("invalid tail descriptor: {0}")]
    InvalidTail(String),
    #[error("level {level} is not homogeneous: `{a}` and `{b}` escape with different mass")]
    NotLevelHomogeneous { level: u32, a: String, b: String },
    #[error("poset is not uniform: `{0}` has paths of two lengths")]
    NotUniform(String),
    #[error("rates sum to {0}, which is not below 1")]
    RatesSumExceedsOne(f64),
    #[error("downward probabilities are undefined at the origin")]
    ZeroPoint,
    #[error("integer overflow: {0}")]
    Overflow(String),
    #[error("chain is not recurrent under the given parameters")]
    NotRecurrent,
    #[error("semigroup axiom violated: {0}")]
    AxiomViolation(String),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("ascent kernel puts no mass on `{0}`")]
    ZeroAscent(String),
    #[error("cannot parse `{0}` as a grid point")]
    BadPoint(String),
    #[error("expected {want} coordinates/rates, got {got}")]
    DimensionMismatch { got: usize, want: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Poset(#[from] PosetError),
}

/// `∏ rates[i]^counts[i]`, evaluated in a fixed index order so that every
/// caller computing the invariant of the same exponent profile lands on the
/// same float.
pub(crate) fn power_product(rates: &[f64], counts: &[u64]) -> f64 {
    rates
        .iter()
        .zip(counts)
        .fold(1.0, |acc, (&r, &c)| acc * r.powi(c as i32))
}
