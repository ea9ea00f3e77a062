//! Probability densities, upper probability functions and rate functions on
//! a poset.
//!
//! The upper probability function (UPF) of a random element `X` is
//! `F(x) = Pr(X ⪰ x)`; the rate function is `r(x) = f(x)/F(x)`. On rooted
//! trees the UPF determines the density through the node-by-node inversion
//! `f(x) = F(x) − Σ_{y ∈ A_x} F(y)`. Densities on truncated posets carry an
//! explicit tail bound for the mass sitting beyond the enumerated region,
//! and operations propagate that bound instead of silently dropping it.

use thiserror::Error;

use crate::poset::Poset;

/// Slack allowed when checking that declared mass accounts for everything.
pub const MASS_EPS: f64 = 1e-9;

/// Relative tolerance under which a rate function counts as constant.
pub const CONSTANT_RATE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("weight of `{element}` is negative ({weight})")]
    NegativeWeight { element: String, weight: f64 },
    #[error("declared tail {tail} is negative")]
    NegativeTail { tail: f64 },
    #[error("mass {mass} plus tail {tail} is not within {eps} of 1")]
    MassMismatch { mass: f64, tail: f64, eps: f64 },
    #[error("truncation tail {tail} exceeds the requested accuracy {accuracy}")]
    TailTooLarge { tail: f64, accuracy: f64 },
    #[error("`{0}` has more than one lower cover; the poset is not a tree")]
    NotATree(String),
    #[error("tree inversion yields negative mass {mass} at `{element}`")]
    NegativeMass { element: String, mass: f64 },
    #[error("upper probability function vanishes at `{0}`")]
    ZeroUpf(String),
    #[error("operation requires a fully enumerated poset (truncated at depth {0})")]
    Truncated(u32),
    #[error("value vector has length {got}, poset has {want} elements")]
    LengthMismatch { got: usize, want: usize },
}

/// A probability density on the enumerated region, with the unenumerated
/// mass bounded by `tail`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pdf {
    pub weights: Vec<f64>,
    pub tail: f64,
}

impl Pdf {
    /// Validate nonnegativity and the mass account `Σ weights + tail ≈ 1`.
    /// Rounding dust as low as `−1e-12` is clamped to zero.
    pub fn new(weights: Vec<f64>, tail: f64) -> Result<Pdf, DistError> {
        if tail < -1e-12 {
            return Err(DistError::NegativeTail { tail });
        }
        let mut cleaned = weights;
        for (i, w) in cleaned.iter_mut().enumerate() {
            if *w < 0.0 {
                if *w < -1e-12 {
                    return Err(DistError::NegativeWeight {
                        element: format!("#{i}"),
                        weight: *w,
                    });
                }
                *w = 0.0;
            }
        }
        let mass: f64 = cleaned.iter().sum();
        let tail = tail.max(0.0);
        if (mass + tail - 1.0).abs() > MASS_EPS {
            return Err(DistError::MassMismatch {
                mass,
                tail,
                eps: MASS_EPS,
            });
        }
        Ok(Pdf {
            weights: cleaned,
            tail,
        })
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Whether every enumerated element carries positive mass.
    pub fn is_full_support(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Total variation distance to another density on the same poset
    /// (tails contribute their worst case).
    pub fn total_variation(&self, other: &Pdf) -> f64 {
        let pointwise: f64 = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum();
        0.5 * (pointwise + self.tail + other.tail)
    }
}

/// An upper probability function: `values[x] = Pr(X ⪰ x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Upf {
    pub values: Vec<f64>,
}

impl Upf {
    /// Monotonicity along cover edges (equivalent to monotonicity in the
    /// order, by transitivity).
    pub fn is_monotone(&self, poset: &Poset) -> bool {
        poset.elements().all(|x| {
            poset
                .up_covers(x)
                .iter()
                .all(|&y| self.values[x.index()] >= self.values[y.index()] - 1e-12)
        })
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }
}

/// A rate function together with its constancy report.
#[derive(Clone, Debug)]
pub struct RateFunction {
    pub values: Vec<f64>,
    /// `Some(r)` when all values agree within [`CONSTANT_RATE_TOL`] relative.
    pub constant: Option<f64>,
}

/// Compute the UPF `F(x) = Σ_{y ⪰ x} f(y)` over the enumerated region.
///
/// Every value carries an additive uncertainty of at most `pdf.tail`;
/// the call is rejected when that exceeds `accuracy`.
pub fn upf_from_pdf(pdf: &Pdf, poset: &Poset, accuracy: f64) -> Result<Upf, DistError> {
    check_len(pdf.weights.len(), poset)?;
    if pdf.tail > accuracy {
        return Err(DistError::TailTooLarge {
            tail: pdf.tail,
            accuracy,
        });
    }
    let mut values = vec![0.0; poset.len()];
    for x in poset.elements() {
        values[x.index()] = poset
            .up_set(x)
            .iter()
            .map(|&y| pdf.weights[y.index()])
            .sum();
    }
    Ok(Upf { values })
}

/// Invert a UPF on a rooted tree: `f(x) = F(x) − Σ_{y ∈ A_x} F(y)`.
///
/// Requires a fully enumerated tree; on success the round trip through
/// [`upf_from_pdf`] reproduces the input.
pub fn pdf_from_upf_tree(upf: &Upf, poset: &Poset) -> Result<Pdf, DistError> {
    check_len(upf.values.len(), poset)?;
    if let Some(depth) = poset.depth_used() {
        if !poset.is_complete() {
            return Err(DistError::Truncated(depth));
        }
    }
    for x in poset.elements() {
        if x != poset.root() && poset.down_covers(x).len() != 1 {
            return Err(DistError::NotATree(poset.label(x).to_owned()));
        }
    }
    let mut weights = vec![0.0; poset.len()];
    for x in poset.elements() {
        let above: f64 = poset
            .up_covers(x)
            .iter()
            .map(|&y| upf.values[y.index()])
            .sum();
        let w = upf.values[x.index()] - above;
        if w < -1e-12 {
            return Err(DistError::NegativeMass {
                element: poset.label(x).to_owned(),
                mass: w,
            });
        }
        weights[x.index()] = w.max(0.0);
    }
    let mass: f64 = weights.iter().sum();
    // The telescoping sum reproduces F(e) up to rounding; dust is not a tail.
    let residual = 1.0 - mass;
    let tail = if residual.abs() <= 1e-12 {
        0.0
    } else {
        residual
    };
    Pdf::new(weights, tail)
}

/// Pointwise rate `r(x) = f(x)/F(x)`, with a constancy report.
///
/// A truncation tail makes `F(x)`, and so `r(x)`, uncertain by a relative
/// `tail/F(x)`; the constancy scan keeps only elements where that
/// uncertainty stays below the tolerance, otherwise a geometric density on
/// a truncated chain could never report its constant rate (the last
/// enumerated element always computes rate 1).
pub fn rate_function(pdf: &Pdf, poset: &Poset) -> Result<RateFunction, DistError> {
    let upf = upf_from_pdf(pdf, poset, 1.0)?;
    let mut values = vec![0.0; poset.len()];
    for x in poset.elements() {
        let f = pdf.weights[x.index()];
        let big_f = upf.values[x.index()];
        if big_f <= 0.0 {
            if f == 0.0 {
                // Outside the support; rate undefined, reported as 0.
                continue;
            }
            return Err(DistError::ZeroUpf(poset.label(x).to_owned()));
        }
        values[x.index()] = f / big_f;
    }
    let identifiable: Vec<f64> = poset
        .elements()
        .filter(|&x| {
            let big_f = upf.values[x.index()];
            big_f > 0.0 && pdf.tail <= CONSTANT_RATE_TOL * big_f
        })
        .map(|x| values[x.index()])
        .collect();
    let constant = match (
        identifiable.iter().cloned().reduce(f64::min),
        identifiable.iter().cloned().reduce(f64::max),
    ) {
        (Some(lo), Some(hi)) if hi - lo <= CONSTANT_RATE_TOL * hi.max(1e-300) => {
            Some(0.5 * (lo + hi))
        }
        _ => None,
    };
    Ok(RateFunction { values, constant })
}

/// Both sides of the expected down-set identity `Σ_x F(x) = E[#D[X]]`.
#[derive(Clone, Copy, Debug)]
pub struct DownsetCheck {
    /// `Σ_x F(x)` over the enumerated region.
    pub lhs: f64,
    /// `E[#(D[X])] = Σ_x f(x)·#D[x]` over the enumerated region.
    pub rhs: f64,
    pub difference: f64,
    /// Worst-case truncation contribution: max down-set size times the tail.
    pub bound: f64,
}

pub fn check_expected_downset(
    pdf: &Pdf,
    poset: &Poset,
    accuracy: f64,
) -> Result<DownsetCheck, DistError> {
    if pdf.tail > accuracy {
        return Err(DistError::TailTooLarge {
            tail: pdf.tail,
            accuracy,
        });
    }
    let upf = upf_from_pdf(pdf, poset, accuracy)?;
    let lhs: f64 = upf.values.iter().sum();
    let mut rhs = 0.0;
    let mut max_downset = 0usize;
    for x in poset.elements() {
        let size = poset.down_set_count(x);
        max_downset = max_downset.max(size);
        rhs += pdf.weights[x.index()] * size as f64;
    }
    Ok(DownsetCheck {
        lhs,
        rhs,
        difference: lhs - rhs,
        bound: pdf.tail * max_downset as f64,
    })
}

fn check_len(got: usize, poset: &Poset) -> Result<(), DistError> {
    if got != poset.len() {
        return Err(DistError::LengthMismatch {
            got,
            want: poset.len(),
        });
    }
    Ok(())
}
