//! Upward and downward run Markov chains on discrete partially ordered sets.
//!
//! A discrete poset with minimum element `e` and finite chains from `e` is
//! represented by its covering graph. An *upward run* chain moves from a
//! state to one of its upper covers or resets to `e`; a *downward run* chain
//! descends one cover at a time and jumps anywhere from `e`. This crate
//! builds and validates such chains, computes their standard invariant
//! functions `F` and `G` by level recursion, classifies recurrence, reverses
//! chains in time, evaluates closed forms for structured families
//! (success-runs parameters, spatially homogeneous semigroup chains, the
//! `ℕ^k` grid), and cross-checks everything with seeded Monte Carlo
//! simulation.
//!
//! Modules mirror the layers of the construction:
//!
//! * [`poset`] — covering graphs, validation, levels, paths, path space
//! * [`gen`] — built-in lazily enumerated posets (grid, free words, trees)
//! * [`dist`] — densities, upper probability functions, rate functions
//! * [`upward`] / [`downward`] — run kernels and their invariant functions
//! * [`reversal`] — time reversal between the two kinds of chains
//! * [`families`] — closed forms for level-homogeneous, semigroup and grid chains
//! * [`simulate`] — reproducible excursion and occupancy estimation
//! * [`io`] — JSON/CSV file formats shared with the CLI

pub mod dist;
pub mod downward;
pub mod families;
pub mod gen;
pub mod invariant;
pub mod io;
pub mod poset;
pub mod reversal;
pub mod simulate;
pub mod upward;

pub use dist::{Pdf, RateFunction, Upf};
pub use downward::DownwardKernel;
pub use invariant::{Classification, InvariantFunction, KernelError, Verdict};
pub use poset::{Budget, ElementId, LevelIndex, Path, PathSpace, Poset};
pub use upward::UpwardKernel;
