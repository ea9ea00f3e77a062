//! Types shared by the upward and downward chain analyses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, Pdf};
use crate::families::level::LevelParams;

/// Row-sum tolerance for validated kernels.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Row-sum defect above which time reversal reports a wrong invariant
/// function instead of producing a kernel.
pub const REVERSAL_DEFECT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("row of `{element}` sums to {sum}")]
    RowSum { element: String, sum: f64 },
    #[error("row of `{from}` puts mass on `{to}`, which is not a legal target")]
    Support { from: String, to: String },
    #[error("row of `{from}` puts zero mass on the cover `{to}` (strict support)")]
    ZeroOnCover { from: String, to: String },
    #[error("`{0}` has more than one lower cover; the poset is not a tree")]
    NotATree(String),
    #[error("upper probability function is not strictly positive at `{0}`")]
    NonPositiveUpf(String),
    #[error("invariant function vanishes at `{0}`")]
    ZeroInvariant(String),
    #[error("chain is not known to be recurrent; pass the override to reverse anyway")]
    NotRecurrent,
    #[error("truncation tail {tail} exceeds the requested accuracy {accuracy}")]
    TailTooLarge { tail: f64, accuracy: f64 },
    #[error("enumeration budget exceeded: {0}")]
    EnumerationBudgetExceeded(String),
    #[error("operation requires a fully enumerated poset: {0}")]
    Truncated(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("no row given for element `{0}`")]
    MissingRow(String),
    #[error("invariant function has {got} values, poset has {want} elements")]
    LengthMismatch { got: usize, want: usize },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// The standard invariant function of a run chain, normalized to 1 at `e`.
///
/// For upward chains the values are exact on the enumerated region. For
/// downward chains on truncated posets they are lower bounds and
/// `upper_slack` bounds the possible contribution of unenumerated mass.
#[derive(Clone, Debug)]
pub struct InvariantFunction {
    pub values: Vec<f64>,
    /// Enumeration depth the values were computed at (`None` = complete).
    pub depth: Option<u32>,
    /// Additive upper uncertainty per value (0 when complete).
    pub upper_slack: f64,
}

impl InvariantFunction {
    pub fn exact(values: Vec<f64>, depth: Option<u32>) -> Self {
        InvariantFunction {
            values,
            depth,
            upper_slack: 0.0,
        }
    }

    pub fn value(&self, x: crate::poset::ElementId) -> f64 {
        self.values[x.index()]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// The downward chain's invariant function `G` has the same shape as `F`.
pub type GFunction = InvariantFunction;

/// Recurrence classification verdicts.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Transient,
    NullRecurrent,
    PositiveRecurrent,
    Undetermined,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Transient => "transient",
            Verdict::NullRecurrent => "null-recurrent",
            Verdict::PositiveRecurrent => "positive-recurrent",
            Verdict::Undetermined => "undetermined",
        };
        f.write_str(s)
    }
}

/// Recurrence classification with the numeric evidence that produced it.
///
/// Undetermined is a value, not an error: finite evidence on a truncated
/// poset cannot settle a limit unless the kernel carries a structural tail
/// certificate.
#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: Verdict,
    /// `μ(e)` (upward) or `ν(e)` (downward) when positive recurrent.
    pub mu_e: Option<f64>,
    /// Partial sum of the invariant function over the enumerated region.
    pub partial_sum: f64,
    /// Certified bound on the invariant mass beyond the region, if any.
    pub tail_bound: Option<f64>,
    /// `Pr_e(T_e > n)` (upward) or `Pr_e(U_e > n)` (downward, uniform
    /// posets) for `n = 0..` as far as the enumeration allows.
    pub survival: Vec<f64>,
    pub depth: Option<u32>,
    /// Invariant density `F/μ(e)` when positive recurrent.
    pub invariant_pdf: Option<Pdf>,
    /// Expected return times `μ(x) = μ(e)/F(x)` when positive recurrent.
    pub mean_return: Option<Vec<f64>>,
}

impl Classification {
    pub(crate) fn undetermined(partial_sum: f64, survival: Vec<f64>, depth: Option<u32>) -> Self {
        Classification {
            verdict: Verdict::Undetermined,
            mu_e: None,
            partial_sum,
            tail_bound: None,
            survival,
            depth,
            invariant_pdf: None,
            mean_return: None,
        }
    }
}

/// Structural guarantee a kernel constructor can attach so classification
/// may reach beyond the enumerated region.
#[derive(Clone, Debug)]
pub enum TailCertificate {
    /// Every state, enumerated or not, resets to `e` with at least this
    /// probability, so survival decays geometrically.
    ResetFloor(f64),
    /// The kernel is level homogeneous with these level-advance parameters.
    Level(LevelParams),
}

/// Defects of the left-invariance identity `F P = F`.
#[derive(Clone, Copy, Debug)]
pub struct InvarianceReport {
    /// `max_{y ≠ e} |(FP)(y) − F(y)|`.
    pub max_defect: f64,
    /// `|(FP)(e) − F(e)|`; small only for recurrent chains on fully
    /// enumerated posets.
    pub root_defect: f64,
}
