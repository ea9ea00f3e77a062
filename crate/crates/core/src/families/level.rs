//! Success-runs parameters and level-homogeneous chains on uniform posets.
//!
//! A level-homogeneous upward kernel escapes level `n` with probability
//! `α_n` and distributes the escape through a strictly ascending kernel
//! `P₊`: `P(x, y) = α_n P₊(x, y)` and `P(x, e) = 1 − α_n` for `x ∈ S_n`.
//! Projecting onto levels gives the classical success-runs chain on `ℕ`
//! with `F̂(n) = α_0 ⋯ α_{n−1}`, and every classification question reduces
//! to the tail behaviour of the `α` sequence: recurrent iff `∏ α_k = 0`,
//! positive recurrent iff `μ(0) = Σ F̂(n) < ∞`.

use std::sync::Arc;

use crate::dist::Pdf;
use crate::downward::DownwardKernel;
use crate::invariant::{Classification, InvariantFunction, TailCertificate, Verdict, ROW_SUM_TOL};
use crate::poset::{ElementId, LevelIndex, Poset};
use crate::upward::UpwardKernel;

use super::FamiliesError;

/// Tail behaviour of the level-advance sequence beyond the explicit prefix.
#[derive(Clone, Debug, PartialEq)]
pub enum Tail {
    /// `α_n = c` for all `n` past the prefix.
    Constant(f64),
    /// `α_n = 1 − c/(n+2)^p` (absolute index `n`), `p ≥ 1`.
    Power { c: f64, p: f64 },
    /// Nothing is claimed past the prefix; classification stays numeric.
    Undetermined,
}

/// Level-advance probabilities: an explicit prefix plus a tail descriptor.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelParams {
    pub prefix: Vec<f64>,
    pub tail: Tail,
}

/// Closed-form verdict extracted from a tail descriptor.
#[derive(Clone, Copy, Debug)]
pub struct ClosedClassification {
    pub verdict: Verdict,
    /// Exact `μ(0) = Σ_n F̂(n)` when positive recurrent.
    pub mu0: Option<f64>,
}

impl LevelParams {
    pub fn new(prefix: Vec<f64>, tail: Tail) -> Result<LevelParams, FamiliesError> {
        let params = LevelParams { prefix, tail };
        params.check()?;
        Ok(params)
    }

    pub fn constant(c: f64) -> Result<LevelParams, FamiliesError> {
        LevelParams::new(Vec::new(), Tail::Constant(c))
    }

    pub fn power(c: f64, p: f64) -> Result<LevelParams, FamiliesError> {
        LevelParams::new(Vec::new(), Tail::Power { c, p })
    }

    fn check(&self) -> Result<(), FamiliesError> {
        for (n, &a) in self.prefix.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                return Err(FamiliesError::InvalidTail(format!(
                    "prefix α_{n} = {a} is outside (0,1)"
                )));
            }
        }
        let first_tail_index = self.prefix.len() as f64;
        match self.tail {
            Tail::Constant(c) => {
                if !(c > 0.0 && c < 1.0) {
                    return Err(FamiliesError::InvalidTail(format!(
                        "constant tail {c} is outside (0,1)"
                    )));
                }
            }
            Tail::Power { c, p } => {
                if p < 1.0 {
                    return Err(FamiliesError::InvalidTail(format!(
                        "power tail exponent {p} must be at least 1"
                    )));
                }
                let least = (first_tail_index + 2.0).powf(p);
                if !(c > 0.0 && c < least) {
                    return Err(FamiliesError::InvalidTail(format!(
                        "power tail needs 0 < c < {least}, got {c}"
                    )));
                }
            }
            Tail::Undetermined => {}
        }
        Ok(())
    }

    /// `α_n`; `None` past the prefix of an undetermined tail.
    pub fn alpha(&self, n: usize) -> Option<f64> {
        if n < self.prefix.len() {
            return Some(self.prefix[n]);
        }
        match self.tail {
            Tail::Constant(c) => Some(c),
            Tail::Power { c, p } => Some(1.0 - c / (n as f64 + 2.0).powf(p)),
            Tail::Undetermined => None,
        }
    }

    /// Largest `n` for which `F̂(n)` can be evaluated.
    pub fn max_known_level(&self) -> Option<usize> {
        match self.tail {
            Tail::Undetermined => Some(self.prefix.len()),
            _ => None,
        }
    }

    /// `F̂(n) = α_0 ⋯ α_{n−1}` for `n = 0..=up_to`.
    pub fn f_hat_series(&self, up_to: usize) -> Result<Vec<f64>, FamiliesError> {
        if let Some(max) = self.max_known_level() {
            if up_to > max {
                return Err(FamiliesError::InvalidTail(format!(
                    "α_{max} is undetermined; F̂ is only known up to level {max}"
                )));
            }
        }
        let mut series = Vec::with_capacity(up_to + 1);
        let mut product = 1.0;
        series.push(product);
        for n in 0..up_to {
            product *= self.alpha(n).expect("checked against max_known_level");
            series.push(product);
        }
        Ok(series)
    }

    /// Verdict and exact `μ(0)` from the tail descriptor alone.
    ///
    /// * constant `c`: positive recurrent, `μ(0) = Σ_{n<L} F̂(n) + F̂(L)/(1−c)`;
    /// * power `p > 1`: transient, since `Σ (1−α_n) < ∞` keeps `∏ α_n > 0`;
    /// * power `p = 1`: recurrent; `F̂(n)` decays like `n^{−c}`, so positive
    ///   recurrent iff `c > 1`, where the tail sums exactly to
    ///   `F̂(L)·(L+1)/(c−1)`;
    /// * undetermined: no claim.
    pub fn classify_closed(&self) -> ClosedClassification {
        let len = self.prefix.len();
        let prefix_products = self
            .f_hat_series(len)
            .expect("prefix products never need tail values");
        let prefix_sum: f64 = prefix_products[..len].iter().sum();
        let f_hat_l = prefix_products[len];
        match self.tail {
            Tail::Constant(c) => ClosedClassification {
                verdict: Verdict::PositiveRecurrent,
                mu0: Some(prefix_sum + f_hat_l / (1.0 - c)),
            },
            Tail::Power { p, .. } if p > 1.0 => ClosedClassification {
                verdict: Verdict::Transient,
                mu0: None,
            },
            Tail::Power { c, .. } if c > 1.0 => ClosedClassification {
                verdict: Verdict::PositiveRecurrent,
                mu0: Some(prefix_sum + f_hat_l * (len as f64 + 1.0) / (c - 1.0)),
            },
            Tail::Power { .. } => ClosedClassification {
                verdict: Verdict::NullRecurrent,
                mu0: None,
            },
            Tail::Undetermined => ClosedClassification {
                verdict: Verdict::Undetermined,
                mu0: None,
            },
        }
    }

    /// For a transient power tail, a certified lower bound on
    /// `lim_n F̂(n) = ∏ α_k`, anchored at the partial product `F̂(n)`:
    /// `∏_{k ≥ n} (1 − x_k) ≥ 1 − Σ_{k ≥ n} x_k` and
    /// `Σ_{k ≥ n} c/(k+2)^p ≤ c (n+1)^{1−p}/(p−1)`.
    pub fn persistent_mass_lower_bound(&self, n: usize) -> Option<f64> {
        match self.tail {
            Tail::Power { c, p } if p > 1.0 && n >= self.prefix.len() => {
                let f_hat = self.f_hat_series(n).ok()?[n];
                let remainder = c * (n as f64 + 1.0).powf(1.0 - p) / (p - 1.0);
                Some(f_hat * (1.0 - remainder).max(0.0))
            }
            _ => None,
        }
    }
}

/// Exact success-runs analysis: `F̂` values up to level `n`, the closed-form
/// classification, and `μ(0)` when finite.
#[derive(Clone, Debug)]
pub struct SuccessRuns {
    pub f_hat: Vec<f64>,
    pub classification: Classification,
    pub mu0: Option<f64>,
}

/// Analyze the success-runs chain on `ℕ` with the given level parameters.
pub fn success_runs(params: &LevelParams, n: usize) -> Result<SuccessRuns, FamiliesError> {
    params.check()?;
    let horizon = match params.max_known_level() {
        Some(max) => n.min(max),
        None => n,
    };
    let f_hat = params.f_hat_series(horizon)?;
    let closed = params.classify_closed();
    let partial: f64 = f_hat.iter().sum();
    let mu0 = closed.mu0;
    let (invariant_pdf, mean_return) = match mu0 {
        Some(mu) => {
            let weights: Vec<f64> = f_hat.iter().map(|v| v / mu).collect();
            let mass: f64 = weights.iter().sum();
            let pdf = Pdf::new(weights, (1.0 - mass).max(0.0)).ok();
            let mean = f_hat
                .iter()
                .map(|&v| if v > 0.0 { mu / v } else { f64::INFINITY })
                .collect();
            (pdf, Some(mean))
        }
        None => (None, None),
    };
    Ok(SuccessRuns {
        // Survival of the success-runs chain is F̂ itself: a single path
        // climbs each level.
        classification: Classification {
            verdict: closed.verdict,
            mu_e: mu0,
            partial_sum: partial,
            tail_bound: mu0.map(|mu| (mu - partial).max(0.0)),
            survival: f_hat.clone(),
            depth: Some(horizon as u32),
            invariant_pdf,
            mean_return,
        },
        f_hat,
        mu0,
    })
}

/// A level-homogeneous kernel split into its parameters and ascent part.
#[derive(Clone, Debug)]
pub struct UpwardDecomposition {
    pub params: LevelParams,
    /// `P₊` rows aligned with [`Poset::up_covers`]; rows of maximal
    /// elements are empty.
    pub ascent: Vec<Vec<f64>>,
    poset: Arc<Poset>,
    levels: LevelIndex,
}

impl UpwardDecomposition {
    pub fn poset(&self) -> &Arc<Poset> {
        &self.poset
    }

    pub fn levels(&self) -> &LevelIndex {
        &self.levels
    }

    /// Strictly ascending mass `P₊ⁿ(e, ·)` for `n = 0..=horizon`.
    fn ascent_mass(&self, horizon: usize) -> Vec<Vec<f64>> {
        let poset = &self.poset;
        let mut all = Vec::with_capacity(horizon + 1);
        let mut current = vec![0.0; poset.len()];
        current[poset.root().index()] = 1.0;
        all.push(current.clone());
        for _ in 0..horizon {
            let mut next = vec![0.0; poset.len()];
            for x in poset.elements() {
                let v = current[x.index()];
                if v == 0.0 {
                    continue;
                }
                for (k, &y) in poset.up_covers(x).iter().enumerate() {
                    next[y.index()] += v * self.ascent[x.index()][k];
                }
            }
            all.push(next.clone());
            current = next;
        }
        all
    }

    fn enumerated_height(&self) -> usize {
        self.levels.height()
    }

    /// Effective `α_n` used by reconstruction: the descriptor value, or 0
    /// for a level consisting entirely of maximal elements (the top of a
    /// finite poset, which always resets).
    fn alpha_effective(&self, n: usize) -> Result<f64, FamiliesError> {
        let set = self.levels.set(n);
        let all_maximal = !set.is_empty()
            && set
                .iter()
                .all(|&x| self.poset.up_covers(x).is_empty() && !self.poset.is_frontier(x));
        if all_maximal {
            return Ok(0.0);
        }
        self.params.alpha(n).ok_or_else(|| {
            FamiliesError::InvalidTail(format!("α_{n} is undetermined but level {n} advances"))
        })
    }
}

/// Assemble `P(x, y) = α_n P₊(x, y)`, `P(x, e) = 1 − α_n` on a uniform
/// poset. Levels made up entirely of maximal elements reset with
/// probability 1; a level mixing maximal and advancing elements cannot be
/// level homogeneous.
pub fn level_homogeneous_kernel(
    params: &LevelParams,
    ascent: &[Vec<f64>],
    poset: &Arc<Poset>,
) -> Result<UpwardKernel, FamiliesError> {
    params.check()?;
    let levels = poset
        .check_uniform()
        .map_err(|w| FamiliesError::NotUniform(poset.label(w.element).to_owned()))?;
    if ascent.len() != poset.len() {
        return Err(FamiliesError::DimensionMismatch {
            got: ascent.len(),
            want: poset.len(),
        });
    }
    let mut cover_probs = vec![Vec::new(); poset.len()];
    let mut reset = vec![0.0; poset.len()];
    for (n, set) in levels.sets.iter().enumerate() {
        let maximal: Vec<ElementId> = set
            .iter()
            .copied()
            .filter(|&x| poset.up_covers(x).is_empty() && !poset.is_frontier(x))
            .collect();
        if maximal.len() == set.len() {
            for &x in set {
                reset[x.index()] = 1.0;
            }
            continue;
        }
        if let (Some(&m), Some(&adv)) = (
            maximal.first(),
            set.iter().find(|&&x| !maximal.contains(&x)),
        ) {
            return Err(FamiliesError::NotLevelHomogeneous {
                level: n as u32,
                a: poset.label(m).to_owned(),
                b: poset.label(adv).to_owned(),
            });
        }
        let alpha = params.alpha(n).ok_or_else(|| {
            FamiliesError::InvalidTail(format!("α_{n} is undetermined but level {n} advances"))
        })?;
        for &x in set {
            cover_probs[x.index()] = ascent[x.index()].iter().map(|p| p * alpha).collect();
            reset[x.index()] = 1.0 - alpha;
        }
    }
    let kernel =
        UpwardKernel::from_parts(Arc::clone(poset), cover_probs, reset, false, ROW_SUM_TOL)?;
    Ok(kernel.with_certificate(TailCertificate::Level(params.clone())))
}

/// Recover `(α, P₊)` from a level-homogeneous kernel, or name two
/// same-level states with different escape mass.
pub fn decompose_level_homogeneous(
    kernel: &UpwardKernel,
) -> Result<UpwardDecomposition, FamiliesError> {
    let poset = kernel.poset();
    let levels = poset
        .check_uniform()
        .map_err(|w| FamiliesError::NotUniform(poset.label(w.element).to_owned()))?;
    let mut prefix = Vec::new();
    let mut ascent = vec![Vec::new(); poset.len()];
    for (n, set) in levels.sets.iter().enumerate() {
        let advancing: Vec<ElementId> = set
            .iter()
            .copied()
            .filter(|&x| !poset.up_covers(x).is_empty() || poset.is_frontier(x))
            .collect();
        if advancing.is_empty() {
            continue;
        }
        if advancing.len() != set.len() {
            let maximal = set
                .iter()
                .copied()
                .find(|x| !advancing.contains(x))
                .expect("level has both kinds");
            return Err(FamiliesError::NotLevelHomogeneous {
                level: n as u32,
                a: poset.label(maximal).to_owned(),
                b: poset.label(advancing[0]).to_owned(),
            });
        }
        let alpha = 1.0 - kernel.reset(advancing[0]);
        for &x in &advancing[1..] {
            let escape = 1.0 - kernel.reset(x);
            if (escape - alpha).abs() > 1e-12 {
                return Err(FamiliesError::NotLevelHomogeneous {
                    level: n as u32,
                    a: poset.label(advancing[0]).to_owned(),
                    b: poset.label(x).to_owned(),
                });
            }
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(FamiliesError::InvalidTail(format!(
                "level {n} escapes with probability {alpha}, outside (0,1)"
            )));
        }
        for &x in &advancing {
            ascent[x.index()] = kernel.cover_probs(x).iter().map(|p| p / alpha).collect();
        }
        prefix.push(alpha);
    }
    // Reuse the constructor's own tail descriptor when one is attached and
    // extends the observed prefix; finite evidence alone claims nothing.
    let params = match kernel.certificate() {
        Some(TailCertificate::Level(p)) => p.clone(),
        _ => LevelParams::new(prefix, Tail::Undetermined)?,
    };
    Ok(UpwardDecomposition {
        params,
        ascent,
        poset: Arc::clone(poset),
        levels,
    })
}

/// `F(x) = F̂(n) P₊ⁿ(e, x)` for `x ∈ S_n`.
pub fn level_invariant_f(
    decomposition: &UpwardDecomposition,
) -> Result<InvariantFunction, FamiliesError> {
    let poset = decomposition.poset();
    let height = decomposition.enumerated_height();
    let mass = decomposition.ascent_mass(height);
    let mut f_hat = vec![1.0];
    for n in 0..height {
        let alpha = decomposition.alpha_effective(n)?;
        f_hat.push(f_hat[n] * alpha);
    }
    let mut values = vec![0.0; poset.len()];
    for (n, set) in decomposition.levels.sets.iter().enumerate() {
        for &x in set {
            values[x.index()] = f_hat[n] * mass[n][x.index()];
        }
    }
    Ok(InvariantFunction::exact(values, poset.depth_used()))
}

/// The reversal of a level-homogeneous chain in closed form:
/// `Q(y, x) = P₊ⁿ(e, x) P₊(x, y) / P₊ⁿ⁺¹(e, y)` — independent of `α` — and
/// `Q(e, x) = F̂(n)(1 − α_n) P₊ⁿ(e, x)`.
pub fn level_reversed_kernel(
    decomposition: &UpwardDecomposition,
) -> Result<DownwardKernel, FamiliesError> {
    if matches!(
        decomposition.params.classify_closed().verdict,
        Verdict::Transient
    ) && !decomposition.poset().is_complete()
    {
        return Err(FamiliesError::NotRecurrent);
    }
    let poset = decomposition.poset();
    let levels = &decomposition.levels;
    let height = decomposition.enumerated_height();
    let mass = decomposition.ascent_mass(height);

    let mut f_hat = vec![1.0];
    for n in 0..=height {
        let alpha = decomposition.alpha_effective(n)?;
        f_hat.push(f_hat[n] * alpha);
    }

    let mut root_row = vec![0.0; poset.len()];
    for (n, set) in levels.sets.iter().enumerate() {
        let alpha = decomposition.alpha_effective(n)?;
        let jump = f_hat[n] * (1.0 - alpha);
        for &x in set {
            root_row[x.index()] = jump * mass[n][x.index()];
        }
    }
    // Mass of the level chain escaping past the enumerated region.
    let root_tail = if poset.is_complete() {
        0.0
    } else {
        f_hat[height + 1]
    };

    let mut down_probs: Vec<Vec<f64>> = vec![Vec::new(); poset.len()];
    for y in poset.elements() {
        if y == poset.root() {
            continue;
        }
        let n1 = levels.level_of(y) as usize;
        let denominator = mass[n1][y.index()];
        if denominator <= 0.0 {
            return Err(FamiliesError::ZeroAscent(poset.label(y).to_owned()));
        }
        down_probs[y.index()] = poset
            .down_covers(y)
            .iter()
            .map(|&x| {
                let k = poset
                    .up_covers(x)
                    .iter()
                    .position(|&c| c == y)
                    .expect("cover duality");
                mass[n1 - 1][x.index()] * decomposition.ascent[x.index()][k] / denominator
            })
            .collect();
    }
    let kernel = DownwardKernel::from_parts(
        Arc::clone(poset),
        root_row,
        root_tail,
        down_probs,
        false,
        1e-9,
    )?;
    Ok(kernel.with_certificate(TailCertificate::Level(decomposition.params.clone())))
}
