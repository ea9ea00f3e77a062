//! Closed forms on the grid `(ℕ^k, +)`.
//!
//! With homogeneous rates `r_i` and `r = Σ r_i < 1`, the number of
//! factorings of a point `x` is the multinomial coefficient
//! `C(x) = (Σ x_i)! / ∏ x_i!`, the invariant function is
//! `F(x) = C(x) ∏ r_i^{x_i}`, the invariant density `f = (1 − r) F`, the
//! reversed chain descends with `Q(x, x − u_i) = x_i / Σ x_j` independent
//! of the rates, and each marginal of the invariant distribution is
//! geometric.
//!
//! The geometric success parameter reported here is derived from the
//! invariant density itself, `(1 − r)/(1 − r + r_i)`; a differently printed
//! expression `1 − r_i / Σ_{j≠i} r_j` circulates and is reported alongside,
//! flagged whenever the two disagree (they almost always do).

use super::{power_product, FamiliesError};

/// Parse a comma-separated grid point.
pub fn parse_point(text: &str) -> Result<Vec<u64>, FamiliesError> {
    text.split(',')
        .map(|c| c.trim().parse::<u64>().ok())
        .collect::<Option<Vec<u64>>>()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| FamiliesError::BadPoint(text.to_owned()))
}

/// The multinomial coefficient `(Σ x_i)! / ∏ x_i!`, exactly.
pub fn multinomial(coords: &[u64]) -> Result<u128, FamiliesError> {
    let mut result: u128 = 1;
    let mut seen: u64 = 0;
    for &x in coords {
        for j in 1..=x {
            seen += 1;
            result = result
                .checked_mul(seen as u128)
                .ok_or_else(|| FamiliesError::Overflow(format!("multinomial of {coords:?}")))?
                / j as u128;
        }
    }
    Ok(result)
}

/// All three closed forms at one point.
#[derive(Clone, Copy, Debug)]
pub struct GridClosedForms {
    /// Number of factorings `C(x)`.
    pub count: u128,
    /// `F(x) = C(x) ∏ r_i^{x_i}`.
    pub upf: f64,
    /// `f(x) = (1 − r) F(x)`.
    pub pdf: f64,
}

fn check_rates(rates: &[f64]) -> Result<f64, FamiliesError> {
    if rates.iter().any(|&r| r <= 0.0) {
        return Err(FamiliesError::InvalidTail(
            "every rate must be positive".to_owned(),
        ));
    }
    let total: f64 = rates.iter().sum();
    if total >= 1.0 {
        return Err(FamiliesError::RatesSumExceedsOne(total));
    }
    Ok(total)
}

pub fn grid_closed_forms(rates: &[f64], coords: &[u64]) -> Result<GridClosedForms, FamiliesError> {
    let total = check_rates(rates)?;
    if rates.len() != coords.len() {
        return Err(FamiliesError::DimensionMismatch {
            got: coords.len(),
            want: rates.len(),
        });
    }
    let count = multinomial(coords)?;
    let upf = count as f64 * power_product(rates, coords);
    Ok(GridClosedForms {
        count,
        upf,
        pdf: (1.0 - total) * upf,
    })
}

/// Downward probability of the reversed homogeneous chain:
/// `Q(x, x − u_i) = x_i / Σ_j x_j`, independent of the rates.
pub fn grid_downward(coords: &[u64], i: usize) -> Result<f64, FamiliesError> {
    if i >= coords.len() {
        return Err(FamiliesError::DimensionMismatch {
            got: i + 1,
            want: coords.len(),
        });
    }
    let level: u64 = coords.iter().sum();
    if level == 0 {
        return Err(FamiliesError::ZeroPoint);
    }
    Ok(coords[i] as f64 / level as f64)
}

/// Geometric marginal parameter of coordinate `i`, both ways.
#[derive(Clone, Copy, Debug)]
pub struct MarginalReport {
    pub index: usize,
    /// Success parameter derived from the invariant density:
    /// `(1 − r)/(1 − r + r_i)`, i.e. `1 − r_i/(1 − Σ_{j≠i} r_j)`.
    pub oracle: f64,
    /// The alternative expression `1 − r_i / Σ_{j≠i} r_j`
    /// (`None` when the denominator vanishes, e.g. `k = 1`).
    pub printed: Option<f64>,
    /// Whether the two expressions disagree beyond 1e-12.
    pub mismatch: bool,
}

pub fn grid_marginal(rates: &[f64], i: usize) -> Result<MarginalReport, FamiliesError> {
    check_rates(rates)?;
    if i >= rates.len() {
        return Err(FamiliesError::DimensionMismatch {
            got: i + 1,
            want: rates.len(),
        });
    }
    let others: f64 = rates
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &r)| r)
        .sum();
    let oracle = 1.0 - rates[i] / (1.0 - others);
    let printed = (others > 0.0).then(|| 1.0 - rates[i] / others);
    let mismatch = printed.is_none_or(|p| (p - oracle).abs() > 1e-12);
    Ok(MarginalReport {
        index: i,
        oracle,
        printed,
        mismatch,
    })
}

/// Brute-force marginal mass `Pr(Z_i = m)` by summing the invariant density
/// over every grid point with `x_i = m` up to `level_cap`.
pub fn marginal_pdf_oracle(
    rates: &[f64],
    i: usize,
    m: u64,
    level_cap: u64,
) -> Result<f64, FamiliesError> {
    check_rates(rates)?;
    if i >= rates.len() {
        return Err(FamiliesError::DimensionMismatch {
            got: i + 1,
            want: rates.len(),
        });
    }
    if m > level_cap {
        return Ok(0.0);
    }
    let mut coords = vec![0u64; rates.len()];
    coords[i] = m;
    let mut sum = 0.0;
    sum_marginal(rates, i, &mut coords, 0, level_cap - m, &mut sum)?;
    Ok(sum)
}

fn sum_marginal(
    rates: &[f64],
    fixed: usize,
    coords: &mut Vec<u64>,
    position: usize,
    remaining: u64,
    sum: &mut f64,
) -> Result<(), FamiliesError> {
    if position == coords.len() {
        *sum += grid_closed_forms(rates, coords)?.pdf;
        return Ok(());
    }
    if position == fixed {
        return sum_marginal(rates, fixed, coords, position + 1, remaining, sum);
    }
    for v in 0..=remaining {
        coords[position] = v;
        sum_marginal(rates, fixed, coords, position + 1, remaining - v, sum)?;
    }
    coords[position] = 0;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(&[2, 1]).unwrap(), 3);
        assert_eq!(multinomial(&[0, 0]).unwrap(), 1);
        assert_eq!(multinomial(&[3, 3]).unwrap(), 20);
        assert_eq!(multinomial(&[30, 30]).unwrap(), 118264581564861424);
        assert_eq!(multinomial(&[2, 2, 2]).unwrap(), 90);
    }

    #[test]
    fn closed_forms_at_2_1() {
        let forms = grid_closed_forms(&[0.3, 0.3], &[2, 1]).unwrap();
        assert_eq!(forms.count, 3);
        assert!((forms.upf - 0.081).abs() < 1e-15);
        assert!((forms.pdf - 0.0324).abs() < 1e-15);
    }

    #[test]
    fn downward_probabilities() {
        assert!((grid_downward(&[2, 1], 0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((grid_downward(&[2, 1], 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            grid_downward(&[0, 0], 0),
            Err(FamiliesError::ZeroPoint)
        ));
    }

    #[test]
    fn marginal_parameter_disagrees_with_printed_formula() {
        let report = grid_marginal(&[0.3, 0.3], 0).unwrap();
        assert!((report.oracle - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(report.printed, Some(0.0));
        assert!(report.mismatch);
    }

    #[test]
    fn marginal_oracle_sums_to_a_geometric() {
        let rates = [0.3, 0.3];
        let report = grid_marginal(&rates, 0).unwrap();
        let success = report.oracle;
        for m in 0..12u64 {
            let brute = marginal_pdf_oracle(&rates, 0, m, 120).unwrap();
            let geometric = success * (1.0 - success).powi(m as i32);
            assert!(
                (brute - geometric).abs() < 1e-12,
                "m={m}: {brute} vs {geometric}"
            );
        }
    }

    #[test]
    fn rate_checks() {
        assert!(matches!(
            grid_closed_forms(&[0.7, 0.4], &[1, 1]),
            Err(FamiliesError::RatesSumExceedsOne(_))
        ));
        assert!(matches!(
            grid_closed_forms(&[0.3], &[1, 1]),
            Err(FamiliesError::DimensionMismatch { .. })
        ));
    }
}
