//! Random fixtures shared by the property and acceptance suites. Not every
//! suite uses every helper.
#![allow(dead_code)]

//!
//! Construction is seeded and deterministic: posets grow by giving each new
//! element one or more earlier parents and then reducing to genuine covers,
//! so every sample passes validation by construction.

use std::collections::HashSet;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use runchain::dist::{upf_from_pdf, Pdf, Upf};
use runchain::downward::DownwardKernel;
use runchain::invariant::ROW_SUM_TOL;
use runchain::poset::Poset;
use runchain::upward::UpwardKernel;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn pick(rng: &mut ChaCha8Rng, bound: usize) -> usize {
    (rng.next_u64() % bound as u64) as usize
}

/// A random finite poset with `n` elements: element 0 is the minimum, every
/// later element picks 1–3 earlier parents, and implied edges are dropped
/// so only covers remain.
pub fn random_poset(rng: &mut ChaCha8Rng, n: usize) -> Poset {
    assert!(n >= 1);
    let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for child in 1..n {
        let parents = 1 + pick(rng, 3.min(child));
        for _ in 0..parents {
            edges.insert((pick(rng, child), child));
        }
    }
    // Reachability closure over the raw edges.
    let mut reach = vec![vec![false; n]; n];
    for &(x, y) in &edges {
        reach[x][y] = true;
    }
    for mid in 0..n {
        for x in 0..n {
            if reach[x][mid] {
                let row = reach[mid].clone();
                for (y, step) in row.iter().enumerate() {
                    if *step {
                        reach[x][y] = true;
                    }
                }
            }
        }
    }
    let cover_edges: Vec<(String, String)> = edges
        .iter()
        .filter(|&&(x, y)| !(0..n).any(|w| w != x && w != y && reach[x][w] && reach[w][y]))
        .map(|&(x, y)| (labels[x].clone(), labels[y].clone()))
        .collect();
    Poset::validate(labels, &cover_edges).expect("construction yields a valid poset")
}

/// A random rooted tree with `n` nodes (each node's parent is earlier).
pub fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> Arc<Poset> {
    let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let edges: Vec<(String, String)> = (1..n)
        .map(|child| (labels[pick(rng, child)].clone(), labels[child].clone()))
        .collect();
    Arc::new(Poset::validate(labels, &edges).expect("trees are valid posets"))
}

/// A random strict upward kernel: positive mass on every cover and on the
/// reset, rows normalized exactly.
pub fn random_upward_kernel(rng: &mut ChaCha8Rng, poset: &Arc<Poset>) -> UpwardKernel {
    let mut cover_probs = Vec::with_capacity(poset.len());
    let mut reset = Vec::with_capacity(poset.len());
    for x in poset.elements() {
        let covers = poset.up_covers(x).len();
        if covers == 0 {
            cover_probs.push(Vec::new());
            reset.push(1.0);
            continue;
        }
        let mut weights: Vec<f64> = (0..=covers).map(|_| 0.1 + unit(rng)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        reset.push(weights.pop().expect("reset weight"));
        cover_probs.push(weights);
    }
    UpwardKernel::from_parts(Arc::clone(poset), cover_probs, reset, true, ROW_SUM_TOL)
        .expect("normalized rows validate")
}

/// A random strict downward kernel: a positive free row from the minimum,
/// positive rows over the lower covers elsewhere.
pub fn random_downward_kernel(rng: &mut ChaCha8Rng, poset: &Arc<Poset>) -> DownwardKernel {
    let mut root_row: Vec<f64> = (0..poset.len()).map(|_| 0.1 + unit(rng)).collect();
    let total: f64 = root_row.iter().sum();
    for w in &mut root_row {
        *w /= total;
    }
    let mut down_probs = Vec::with_capacity(poset.len());
    for x in poset.elements() {
        let covers = poset.down_covers(x).len();
        if covers == 0 {
            down_probs.push(Vec::new());
            continue;
        }
        let mut weights: Vec<f64> = (0..covers).map(|_| 0.1 + unit(rng)).collect();
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        down_probs.push(weights);
    }
    DownwardKernel::from_parts(
        Arc::clone(poset),
        root_row,
        0.0,
        down_probs,
        true,
        ROW_SUM_TOL,
    )
    .expect("normalized rows validate")
}

/// A random full-support density and its UPF on a fully enumerated poset.
pub fn random_pdf_and_upf(rng: &mut ChaCha8Rng, poset: &Poset) -> (Pdf, Upf) {
    let mut weights: Vec<f64> = (0..poset.len()).map(|_| 0.05 + unit(rng)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let pdf = Pdf::new(weights, 0.0).expect("normalized weights");
    let upf = upf_from_pdf(&pdf, poset, 0.0).expect("no tail");
    (pdf, upf)
}

/// The 4-element diamond and its running upward kernel.
pub fn diamond() -> Arc<Poset> {
    Arc::new(
        Poset::validate(
            vec!["e".into(), "a".into(), "b".into(), "t".into()],
            &[
                ("e".into(), "a".into()),
                ("e".into(), "b".into()),
                ("a".into(), "t".into()),
                ("b".into(), "t".into()),
            ],
        )
        .unwrap(),
    )
}

pub fn diamond_kernel(poset: &Arc<Poset>) -> UpwardKernel {
    UpwardKernel::from_parts(
        Arc::clone(poset),
        vec![vec![0.4, 0.4], vec![0.5], vec![0.3], vec![]],
        vec![0.2, 0.5, 0.7, 1.0],
        true,
        ROW_SUM_TOL,
    )
    .unwrap()
}

/// The 5-element non-uniform fixture (two routes of different length to
/// the top) and an upward kernel on it.
pub fn hexagon() -> Arc<Poset> {
    Arc::new(
        Poset::validate(
            vec!["e".into(), "a".into(), "b".into(), "c".into(), "t".into()],
            &[
                ("e".into(), "a".into()),
                ("e".into(), "b".into()),
                ("a".into(), "c".into()),
                ("c".into(), "t".into()),
                ("b".into(), "t".into()),
            ],
        )
        .unwrap(),
    )
}

pub fn hexagon_kernel(poset: &Arc<Poset>) -> UpwardKernel {
    UpwardKernel::from_parts(
        Arc::clone(poset),
        vec![vec![0.3, 0.3], vec![0.6], vec![0.5], vec![0.7], vec![]],
        vec![0.4, 0.4, 0.5, 0.3, 1.0],
        true,
        ROW_SUM_TOL,
    )
    .unwrap()
}
