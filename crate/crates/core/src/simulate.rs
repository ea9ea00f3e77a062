//! Seeded trajectory simulation for cross-checking the exact analyses.
//!
//! Reproducibility contract: the random source is ChaCha8 and excursion
//! `i` draws from stream `i` of the seed, so results are independent of
//! scheduling; all per-excursion statistics accumulate in integers, making
//! the parallel merge associative and bit-identical to the sequential run.
//! Categorical sampling walks cumulative sums with a strictly-less
//! comparison.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::dist::Pdf;
use crate::downward::DownwardKernel;
use crate::poset::{ElementId, Poset};
use crate::upward::UpwardKernel;

/// Identifier of the random source written into every output.
pub const GENERATOR_ID: &str = "chacha8/stream-per-excursion/v1";

const PAR_CHUNK: u64 = 4096;

/// Excursion simulation parameters.
#[derive(Clone, Copy, Debug)]
pub struct SimulationConfig {
    pub seed: u64,
    pub excursions: u64,
    /// Excursions still away from `e` after this many steps are counted
    /// truncated rather than run forever.
    pub max_steps: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            seed: 0,
            excursions: 10_000,
            max_steps: 1_000_000,
        }
    }
}

/// Either kind of run chain, for simulation entry points.
#[derive(Copy, Clone)]
pub enum KernelRef<'a> {
    Up(&'a UpwardKernel),
    Down(&'a DownwardKernel),
}

impl<'a> KernelRef<'a> {
    fn poset(&self) -> &'a Poset {
        match self {
            KernelRef::Up(k) => k.poset(),
            KernelRef::Down(k) => k.poset(),
        }
    }

    fn renormalization(&self) -> Option<f64> {
        match self {
            KernelRef::Up(_) => None,
            KernelRef::Down(k) => Some(1.0 / (1.0 - k.root_tail())),
        }
    }
}

/// Aggregated excursion statistics. All counters are integers so merging
/// worker results is exact and order independent.
#[derive(Clone, Debug)]
pub struct ExcursionStats {
    pub excursions: u64,
    /// Per element: excursions that hit it strictly before returning to `e`
    /// (for `e` itself: completed excursions).
    pub hits: Vec<u64>,
    pub completed: u64,
    /// Hit the step limit before returning.
    pub truncated: u64,
    /// Stepped past the enumerated region (counts as truncated too).
    pub out_of_region: u64,
    pub return_time_sum: u128,
    pub return_time_sq_sum: u128,
    pub seed: u64,
    pub generator: &'static str,
    /// Renormalization applied to a truncated downward `e`-row.
    pub renormalization: Option<f64>,
}

impl ExcursionStats {
    fn empty(elements: usize, seed: u64, renormalization: Option<f64>) -> Self {
        ExcursionStats {
            excursions: 0,
            hits: vec![0; elements],
            completed: 0,
            truncated: 0,
            out_of_region: 0,
            return_time_sum: 0,
            return_time_sq_sum: 0,
            seed,
            generator: GENERATOR_ID,
            renormalization,
        }
    }

    fn merge(mut self, other: ExcursionStats) -> ExcursionStats {
        self.excursions += other.excursions;
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
        self.completed += other.completed;
        self.truncated += other.truncated;
        self.out_of_region += other.out_of_region;
        self.return_time_sum += other.return_time_sum;
        self.return_time_sq_sum += other.return_time_sq_sum;
        self
    }

    /// Empirical `Pr_e(T_x ≤ T_e)`.
    pub fn hit_fraction(&self, x: ElementId) -> f64 {
        self.hits[x.index()] as f64 / self.excursions as f64
    }

    /// Mean return time over completed excursions.
    pub fn mean_return_time(&self) -> Option<f64> {
        (self.completed > 0).then(|| self.return_time_sum as f64 / self.completed as f64)
    }

    /// Standard error of the mean return time.
    pub fn return_time_stderr(&self) -> Option<f64> {
        if self.completed < 2 {
            return None;
        }
        let n = self.completed as f64;
        let mean = self.return_time_sum as f64 / n;
        let var = (self.return_time_sq_sum as f64 / n - mean * mean).max(0.0) * n / (n - 1.0);
        Some((var / n).sqrt())
    }
}

/// Empirical hitting probability with a 4σ half-width.
#[derive(Clone, Copy, Debug)]
pub struct HittingEstimate {
    pub probability: f64,
    pub half_width: f64,
    pub excursions: u64,
}

/// Long-trajectory occupancy parameters.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryConfig {
    pub seed: u64,
    pub steps: u64,
    pub burn_in: u64,
}

/// Occupancy counts of one long trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryStats {
    pub occupancy: Vec<u64>,
    pub counted_steps: u64,
    /// Steps that tried to leave the enumerated region and were restarted
    /// at `e` instead (they bias the estimate; keep them rare).
    pub forced_resets: u64,
    pub seed: u64,
    pub generator: &'static str,
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

enum Step {
    To(ElementId),
    Reset,
    OutOfRegion,
}

fn sample_up(kernel: &UpwardKernel, x: ElementId, u: f64) -> Step {
    let poset = kernel.poset();
    let mut cum = 0.0;
    for (k, &y) in poset.up_covers(x).iter().enumerate() {
        cum += kernel.cover_probs(x)[k];
        if u < cum {
            return Step::To(y);
        }
    }
    cum += kernel.reset(x);
    if u < cum {
        return Step::Reset;
    }
    if kernel.row_tail(x) > 0.0 {
        Step::OutOfRegion
    } else {
        // Rounding dust at the top of a complete row resolves to the reset.
        Step::Reset
    }
}

fn sample_down(kernel: &DownwardKernel, x: ElementId, u: f64) -> Step {
    let poset = kernel.poset();
    let root = poset.root();
    if x == root {
        let renorm = 1.0 / (1.0 - kernel.root_tail());
        let mut cum = 0.0;
        let mut last = root;
        for y in poset.elements() {
            let q = kernel.root_prob(y) * renorm;
            if q > 0.0 {
                last = y;
            }
            cum += q;
            if u < cum {
                return if y == root { Step::Reset } else { Step::To(y) };
            }
        }
        return if last == root {
            Step::Reset
        } else {
            Step::To(last)
        };
    }
    let mut cum = 0.0;
    let covers = poset.down_covers(x);
    for (k, &y) in covers.iter().enumerate() {
        cum += kernel.down_probs(x)[k];
        if u < cum {
            return if y == root { Step::Reset } else { Step::To(y) };
        }
    }
    // Rounding dust: take the last cover.
    let &y = covers.last().expect("non-root elements have lower covers");
    if y == root {
        Step::Reset
    } else {
        Step::To(y)
    }
}

fn one_excursion(
    kernel: KernelRef<'_>,
    rng: &mut ChaCha8Rng,
    max_steps: u64,
    stamp: &mut [u64],
    excursion_id: u64,
    stats: &mut ExcursionStats,
) {
    let poset = kernel.poset();
    let root = poset.root();
    let mut current = root;
    let mut steps: u64 = 0;
    stats.excursions += 1;
    loop {
        if steps >= max_steps {
            stats.truncated += 1;
            return;
        }
        let u = unit_f64(rng);
        let step = match kernel {
            KernelRef::Up(k) => sample_up(k, current, u),
            KernelRef::Down(k) => sample_down(k, current, u),
        };
        steps += 1;
        match step {
            Step::Reset => {
                stats.completed += 1;
                stats.hits[root.index()] += 1;
                stats.return_time_sum += steps as u128;
                stats.return_time_sq_sum += (steps as u128) * (steps as u128);
                return;
            }
            Step::To(y) => {
                debug_assert!(
                    match kernel {
                        KernelRef::Up(_) => poset.down_covers(y).contains(&current),
                        KernelRef::Down(_) =>
                            current == root || poset.up_covers(y).contains(&current),
                    },
                    "trajectory stepped outside the covering graph"
                );
                if stamp[y.index()] != excursion_id {
                    stamp[y.index()] = excursion_id;
                    stats.hits[y.index()] += 1;
                }
                current = y;
            }
            Step::OutOfRegion => {
                stats.out_of_region += 1;
                stats.truncated += 1;
                return;
            }
        }
    }
}

/// Run seeded excursions from `e` until return (or the step limit).
///
/// Deterministic in `(kernel, config)`; excursions may run in parallel
/// without changing a single bit of the result.
pub fn simulate_excursions(kernel: KernelRef<'_>, config: &SimulationConfig) -> ExcursionStats {
    let poset = kernel.poset();
    let n = poset.len();
    let renorm = kernel.renormalization();
    let chunks: Vec<(u64, u64)> = (0..config.excursions)
        .step_by(PAR_CHUNK as usize)
        .map(|start| (start, (start + PAR_CHUNK).min(config.excursions)))
        .collect();
    chunks
        .into_par_iter()
        .map(|(start, end)| {
            let mut stats = ExcursionStats::empty(n, config.seed, renorm);
            let mut stamp = vec![u64::MAX; n];
            for i in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(i);
                one_excursion(
                    kernel,
                    &mut rng,
                    config.max_steps,
                    &mut stamp,
                    i,
                    &mut stats,
                );
            }
            stats
        })
        .reduce(
            || ExcursionStats::empty(n, config.seed, renorm),
            ExcursionStats::merge,
        )
}

/// Empirical hitting probability `Pr_e(T_x ≤ T_e)` with its 4σ half-width.
pub fn estimate_hitting(
    kernel: KernelRef<'_>,
    x: ElementId,
    config: &SimulationConfig,
) -> HittingEstimate {
    let stats = simulate_excursions(kernel, config);
    let p = stats.hit_fraction(x);
    let n = stats.excursions as f64;
    HittingEstimate {
        probability: p,
        half_width: 4.0 * (p * (1.0 - p) / n).sqrt(),
        excursions: stats.excursions,
    }
}

/// Long-run occupancy frequencies of one trajectory started at `e`.
///
/// Attempts to climb past the enumerated region restart the trajectory at
/// `e` and are counted; they are the only bias of the estimate.
pub fn estimate_invariant(
    kernel: KernelRef<'_>,
    config: &TrajectoryConfig,
) -> (Pdf, TrajectoryStats) {
    let poset = kernel.poset();
    let root = poset.root();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::MAX);
    let mut occupancy = vec![0u64; poset.len()];
    let mut forced_resets = 0u64;
    let mut counted = 0u64;
    let mut current = root;
    for step in 0..config.steps {
        let u = unit_f64(&mut rng);
        let next = match kernel {
            KernelRef::Up(k) => sample_up(k, current, u),
            KernelRef::Down(k) => sample_down(k, current, u),
        };
        current = match next {
            Step::To(y) => y,
            Step::Reset => root,
            Step::OutOfRegion => {
                forced_resets += 1;
                root
            }
        };
        if step >= config.burn_in {
            occupancy[current.index()] += 1;
            counted += 1;
        }
    }
    let weights: Vec<f64> = occupancy
        .iter()
        .map(|&c| c as f64 / counted as f64)
        .collect();
    let pdf = Pdf::new(weights, 0.0).expect("occupancy frequencies sum to 1");
    (
        pdf,
        TrajectoryStats {
            occupancy,
            counted_steps: counted,
            forced_resets,
            seed: config.seed,
            generator: GENERATOR_ID,
        },
    )
}
