//! Time reversal between recurrent upward run chains and downward run
//! chains.
//!
//! With `F` the standard invariant function of an upward kernel `P`, the
//! reversed kernel is `Q(y, x) = F(x) P(x, y) / F(y)` for `y ≠ e` and
//! `Q(e, x) = F(x) P(x, e)`; conversely `P(x, y) = G(y) Q(y, x) / G(x)` and
//! `P(x, e) = Q(e, x) / G(x)`. The two chains share the invariant function
//! (`F = G`), and reversing twice is the identity.
//!
//! Rows are never renormalized: a row-sum defect beyond
//! [`crate::invariant::REVERSAL_DEFECT_TOL`] means the supplied function is
//! not actually invariant, and is surfaced as an error rather than patched.

use std::sync::Arc;

use crate::downward::DownwardKernel;
use crate::invariant::{
    InvariantFunction, KernelError, TailCertificate, Verdict, REVERSAL_DEFECT_TOL,
};
use crate::upward::UpwardKernel;

/// Diagnostics of one reversal.
#[derive(Clone, Copy, Debug)]
pub struct ReversalReport {
    /// Largest row-sum defect among the constrained rows.
    pub max_row_defect: f64,
    /// Mass of the produced free `e`-row (1 for recurrent chains on fully
    /// enumerated posets; the shortfall is the truncation tail).
    pub root_row_sum: f64,
    pub depth: Option<u32>,
}

/// Whether reversal insists on a recurrence proof.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ReversalMode {
    /// Reverse only chains that are recurrent by construction: a fully
    /// enumerated poset, or a tail certificate implying recurrence.
    RequireRecurrent,
    /// Reverse anyway; the `e`-row may be sub-stochastic and its shortfall
    /// is reported, not hidden.
    Force,
}

fn upward_known_recurrent(kernel: &UpwardKernel) -> bool {
    if kernel.poset().is_complete() {
        return true;
    }
    match kernel.certificate() {
        Some(TailCertificate::ResetFloor(delta)) => *delta > 0.0,
        Some(TailCertificate::Level(params)) => !matches!(
            params.classify_closed().verdict,
            Verdict::Transient | Verdict::Undetermined
        ),
        None => false,
    }
}

/// Reverse a recurrent upward run chain into a downward run chain.
pub fn reverse_upward(
    kernel: &UpwardKernel,
    f: &InvariantFunction,
    mode: ReversalMode,
) -> Result<(DownwardKernel, ReversalReport), KernelError> {
    let poset = kernel.poset();
    if f.values.len() != poset.len() {
        return Err(KernelError::LengthMismatch {
            got: f.values.len(),
            want: poset.len(),
        });
    }
    if mode == ReversalMode::RequireRecurrent && !upward_known_recurrent(kernel) {
        return Err(KernelError::NotRecurrent);
    }
    for x in poset.elements() {
        if f.values[x.index()] <= 0.0 {
            return Err(KernelError::ZeroInvariant(poset.label(x).to_owned()));
        }
    }
    let root = poset.root();
    let mut root_row = vec![0.0; poset.len()];
    for x in poset.elements() {
        root_row[x.index()] = f.values[x.index()] * kernel.reset(x);
    }
    let root_sum: f64 = root_row.iter().sum();
    let root_tail = (1.0 - root_sum).max(0.0);

    let mut max_row_defect = 0.0f64;
    let mut down_probs: Vec<Vec<f64>> = vec![Vec::new(); poset.len()];
    for y in poset.elements() {
        if y == root {
            continue;
        }
        let fy = f.values[y.index()];
        let probs: Vec<f64> = poset
            .down_covers(y)
            .iter()
            .map(|&x| f.values[x.index()] * kernel.prob(x, y) / fy)
            .collect();
        let sum: f64 = probs.iter().sum();
        max_row_defect = max_row_defect.max((sum - 1.0).abs());
        down_probs[y.index()] = probs;
    }
    if max_row_defect > REVERSAL_DEFECT_TOL {
        // The recursion F(y) = Σ F(x)P(x,y) failed: F is not invariant.
        return Err(KernelError::RowSum {
            element: "reversal".to_owned(),
            sum: 1.0 + max_row_defect,
        });
    }
    let reversed = DownwardKernel::from_parts(
        Arc::clone(poset),
        root_row,
        root_tail,
        down_probs,
        kernel.is_strict(),
        REVERSAL_DEFECT_TOL,
    )?;
    let reversed = match kernel.certificate() {
        Some(cert) => reversed.with_certificate(cert.clone()),
        None => reversed,
    };
    Ok((
        reversed,
        ReversalReport {
            max_row_defect,
            root_row_sum: root_sum,
            depth: poset.depth_used(),
        },
    ))
}

/// Reverse a downward run chain into an upward run chain.
pub fn reverse_downward(
    kernel: &DownwardKernel,
    g: &InvariantFunction,
) -> Result<(UpwardKernel, ReversalReport), KernelError> {
    let poset = kernel.poset();
    if g.values.len() != poset.len() {
        return Err(KernelError::LengthMismatch {
            got: g.values.len(),
            want: poset.len(),
        });
    }
    for x in poset.elements() {
        if g.values[x.index()] <= 0.0 {
            return Err(KernelError::ZeroInvariant(poset.label(x).to_owned()));
        }
    }
    let mut max_row_defect = 0.0f64;
    let mut cover_probs: Vec<Vec<f64>> = Vec::with_capacity(poset.len());
    let mut reset = Vec::with_capacity(poset.len());
    for x in poset.elements() {
        let gx = g.values[x.index()];
        let probs: Vec<f64> = poset
            .up_covers(x)
            .iter()
            .map(|&y| g.values[y.index()] * kernel.prob(y, x) / gx)
            .collect();
        let r = kernel.root_prob(x) / gx;
        let sum: f64 = probs.iter().sum::<f64>() + r;
        if !poset.is_frontier(x) {
            max_row_defect = max_row_defect.max((sum - 1.0).abs());
        }
        cover_probs.push(probs);
        reset.push(r);
    }
    if max_row_defect > REVERSAL_DEFECT_TOL {
        return Err(KernelError::RowSum {
            element: "reversal".to_owned(),
            sum: 1.0 + max_row_defect,
        });
    }
    let reversed = UpwardKernel::from_parts(
        Arc::clone(poset),
        cover_probs,
        reset,
        kernel.is_strict(),
        REVERSAL_DEFECT_TOL,
    )?;
    let reversed = match kernel.certificate() {
        Some(cert) => reversed.with_certificate(cert.clone()),
        None => reversed,
    };
    let root_sum: f64 = poset.elements().map(|x| kernel.root_prob(x)).sum();
    Ok((
        reversed,
        ReversalReport {
            max_row_defect,
            root_row_sum: root_sum,
            depth: poset.depth_used(),
        },
    ))
}
