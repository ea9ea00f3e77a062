//! Spatially homogeneous chains on positive semigroups.
//!
//! A positive semigroup (identity, no nontrivial inverses, left
//! cancellation) orders itself by left divisibility, and its covering graph
//! is `A_x = {x·i : i irreducible}`. A spatially homogeneous upward chain
//! moves `x → x·i` with rate `r_i` independent of `x` and resets with the
//! constant probability `1 − Σ r_i`, so it is positive recurrent outright.
//! On the free semigroup of words the invariant function is the letter
//! product `F*(i₁ ⋯ i_n) = r_{i₁} ⋯ r_{i_n}`; on the semigroup itself it is
//! the sum of `F*` over all factorings of an element.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::gen::{parse_grid_point, render_grid_point, PosetGenerator};
use crate::invariant::{TailCertificate, ROW_SUM_TOL};
use crate::poset::{Budget, Poset};
use crate::upward::UpwardKernel;

use super::{power_product, FamiliesError};

/// A positive semigroup presented through canonical element labels.
///
/// Canonical forms decide equality: two products are the same element
/// exactly when their labels agree.
pub trait Semigroup: Sync {
    fn identity(&self) -> String;
    fn mul(&self, x: &str, y: &str) -> String;
    /// The irreducible elements, in a fixed order.
    fn irreducibles(&self) -> Vec<String>;
    /// The unique `t` with `i·t = x`, when `i` left-divides `x`.
    fn left_divide(&self, i: &str, x: &str) -> Option<String>;
}

/// Finite words over an alphabet under concatenation.
#[derive(Clone, Debug)]
pub struct FreeSemigroup {
    pub alphabet: Vec<char>,
}

impl Semigroup for FreeSemigroup {
    fn identity(&self) -> String {
        String::new()
    }

    fn mul(&self, x: &str, y: &str) -> String {
        let mut out = x.to_owned();
        out.push_str(y);
        out
    }

    fn irreducibles(&self) -> Vec<String> {
        self.alphabet.iter().map(|c| c.to_string()).collect()
    }

    fn left_divide(&self, i: &str, x: &str) -> Option<String> {
        x.strip_prefix(i).map(str::to_owned)
    }
}

/// `(ℕ^k, +)` with coordinate labels (`"2,1"`); irreducibles are the unit
/// vectors.
#[derive(Clone, Debug)]
pub struct GridSemigroup {
    pub k: usize,
}

impl Semigroup for GridSemigroup {
    fn identity(&self) -> String {
        render_grid_point(&vec![0; self.k])
    }

    fn mul(&self, x: &str, y: &str) -> String {
        let a = parse_grid_point(x, self.k).expect("left operand is a grid point");
        let b = parse_grid_point(y, self.k).expect("right operand is a grid point");
        let sum: Vec<u64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
        render_grid_point(&sum)
    }

    fn irreducibles(&self) -> Vec<String> {
        (0..self.k)
            .map(|i| {
                let mut unit = vec![0; self.k];
                unit[i] = 1;
                render_grid_point(&unit)
            })
            .collect()
    }

    fn left_divide(&self, i: &str, x: &str) -> Option<String> {
        let unit = parse_grid_point(i, self.k)?;
        let point = parse_grid_point(x, self.k)?;
        let mut rest = Vec::with_capacity(self.k);
        for (p, u) in point.iter().zip(&unit) {
            if p < u {
                return None;
            }
            rest.push(p - u);
        }
        Some(render_grid_point(&rest))
    }
}

struct SemigroupGenerator<'a, S: Semigroup>(&'a S);

impl<S: Semigroup> PosetGenerator for SemigroupGenerator<'_, S> {
    fn root(&self) -> String {
        self.0.identity()
    }

    fn up_covers(&self, label: &str) -> Vec<String> {
        self.0
            .irreducibles()
            .iter()
            .map(|i| self.0.mul(label, i))
            .collect()
    }
}

/// `Σ F*` over the factorings of one element, with the exact enumeration
/// evidence: the total number of factorings and the count per exponent
/// profile (occurrences of each irreducible).
#[derive(Clone, Debug)]
pub struct FactoredInvariant {
    pub value: f64,
    pub count: u64,
    /// (letter-occurrence profile, number of factorings with it), sorted.
    pub profiles: Vec<(Vec<u64>, u64)>,
}

/// A spatially homogeneous upward chain: the semigroup plus one rate per
/// irreducible, summing below 1.
#[derive(Clone, Debug)]
pub struct SpatialChain<S: Semigroup> {
    pub semigroup: S,
    pub rates: Vec<f64>,
}

impl<S: Semigroup> SpatialChain<S> {
    /// Validate rates and spot-check the semigroup axioms on products of
    /// irreducibles (left cancellation, no nontrivial inverses).
    pub fn new(semigroup: S, rates: Vec<f64>) -> Result<Self, FamiliesError> {
        let irreducibles = semigroup.irreducibles();
        if rates.len() != irreducibles.len() {
            return Err(FamiliesError::DimensionMismatch {
                got: rates.len(),
                want: irreducibles.len(),
            });
        }
        if rates.iter().any(|&r| r <= 0.0) {
            return Err(FamiliesError::InvalidTail(
                "every rate must be positive".to_owned(),
            ));
        }
        let total: f64 = rates.iter().sum();
        if total >= 1.0 {
            return Err(FamiliesError::RatesSumExceedsOne(total));
        }
        let chain = SpatialChain { semigroup, rates };
        chain.check_axioms()?;
        Ok(chain)
    }

    fn check_axioms(&self) -> Result<(), FamiliesError> {
        let sg = &self.semigroup;
        let e = sg.identity();
        let mut samples = vec![e.clone()];
        let irreducibles = sg.irreducibles();
        for i in &irreducibles {
            samples.push(i.clone());
        }
        for i in &irreducibles {
            for j in &irreducibles {
                samples.push(sg.mul(i, j));
                if samples.len() > 40 {
                    break;
                }
            }
        }
        samples.dedup();
        for x in &samples {
            let left = sg.mul(&e, x);
            let right = sg.mul(x, &e);
            if left != *x || right != *x {
                return Err(FamiliesError::AxiomViolation(format!(
                    "`{e}` is not an identity on `{x}`"
                )));
            }
            for y in &samples {
                if sg.mul(x, y) == e && (*x != e || *y != e) {
                    return Err(FamiliesError::AxiomViolation(format!(
                        "`{x}`·`{y}` = identity: nontrivial inverse"
                    )));
                }
                for z in &samples {
                    if sg.mul(x, y) == sg.mul(x, z) && y != z {
                        return Err(FamiliesError::AxiomViolation(format!(
                            "left cancellation fails at `{x}`: `{y}` vs `{z}`"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// Materialize the covering graph up to the budget.
    pub fn poset(&self, budget: Budget) -> Result<Arc<Poset>, FamiliesError> {
        let generator = SemigroupGenerator(&self.semigroup);
        Ok(Arc::new(Poset::from_generator(&generator, budget)?))
    }

    /// The kernel `P(x, x·i) = r_i`, `P(x, e) = 1 − r`, carrying its
    /// constant-reset certificate (hence classified positive recurrent).
    pub fn kernel(&self, budget: Budget) -> Result<(UpwardKernel, Arc<Poset>), FamiliesError> {
        let poset = self.poset(budget)?;
        let reset_floor = 1.0 - self.total_rate();
        let mut cover_probs = Vec::with_capacity(poset.len());
        let mut reset = Vec::with_capacity(poset.len());
        for x in poset.elements() {
            if poset.up_covers(x).is_empty() {
                // Frontier rows keep the reset; the ascending mass is the
                // declared row tail.
                cover_probs.push(Vec::new());
            } else {
                cover_probs.push(self.rates.clone());
            }
            reset.push(reset_floor);
        }
        let kernel =
            UpwardKernel::from_parts(Arc::clone(&poset), cover_probs, reset, true, ROW_SUM_TOL)?
                .with_certificate(TailCertificate::ResetFloor(reset_floor));
        Ok((kernel, poset))
    }

    /// `F*` of a word over the irreducibles, via its exponent profile.
    pub fn word_invariant(&self, letters: &[usize]) -> f64 {
        let mut counts = vec![0u64; self.rates.len()];
        for &l in letters {
            counts[l] += 1;
        }
        power_product(&self.rates, &counts)
    }

    /// All factorings of `x` over the irreducibles, as letter index
    /// sequences, found by left division.
    pub fn factorings(&self, x: &str, cap: usize) -> Result<Vec<Vec<usize>>, FamiliesError> {
        let mut out = Vec::new();
        let mut current = Vec::new();
        self.factorings_into(x, &mut current, &mut out, cap)?;
        Ok(out)
    }

    fn factorings_into(
        &self,
        x: &str,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<(), FamiliesError> {
        if *x == self.semigroup.identity() {
            if out.len() >= cap {
                return Err(FamiliesError::BudgetExceeded(format!(
                    "more than {cap} factorings"
                )));
            }
            out.push(current.clone());
            return Ok(());
        }
        for (idx, i) in self.semigroup.irreducibles().iter().enumerate() {
            if let Some(rest) = self.semigroup.left_divide(i, x) {
                current.push(idx);
                self.factorings_into(&rest, current, out, cap)?;
                current.pop();
            }
        }
        Ok(())
    }

    /// `F(x) = Σ_{i₁⋯i_n = x} F*(i₁ ⋯ i_n)`, summed as
    /// `Σ_profile count · ∏ r^profile` so that equal-profile factorings
    /// contribute one exactly-weighted term.
    pub fn invariant_f(&self, x: &str, cap: usize) -> Result<FactoredInvariant, FamiliesError> {
        let factorings = self.factorings(x, cap)?;
        let mut by_profile: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
        for word in &factorings {
            let mut counts = vec![0u64; self.rates.len()];
            for &l in word {
                counts[l] += 1;
            }
            *by_profile.entry(counts).or_insert(0) += 1;
        }
        let value = by_profile
            .iter()
            .map(|(profile, &count)| count as f64 * power_product(&self.rates, profile))
            .sum();
        Ok(FactoredInvariant {
            value,
            count: factorings.len() as u64,
            profiles: by_profile.into_iter().collect(),
        })
    }
}
