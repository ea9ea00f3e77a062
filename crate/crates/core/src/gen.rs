//! Built-in lazily enumerated posets.
//!
//! A generator names elements by a canonical text form and lists the upper
//! covers of any element on demand; [`crate::poset::Poset::from_generator`]
//! materializes the graph breadth-first under a budget. Generators must be
//! pure functions of the element label and graded (covers advance the level
//! by exactly one), which all generators here are.

use std::collections::HashMap;

/// A lazily described poset: a root plus an upper-cover function.
pub trait PosetGenerator: Sync {
    /// Canonical label of the minimum element.
    fn root(&self) -> String;
    /// Canonical labels of the upper covers of `label`, in a fixed order.
    fn up_covers(&self, label: &str) -> Vec<String>;
}

/// The grid `ℕ^k` under coordinatewise order. Points render as
/// comma-separated coordinates (`"2,1"`); covers add one to a coordinate.
#[derive(Clone, Debug)]
pub struct GridGenerator {
    pub k: usize,
}

pub(crate) fn parse_grid_point(label: &str, k: usize) -> Option<Vec<u64>> {
    let coords: Vec<u64> = label
        .split(',')
        .map(|c| c.trim().parse::<u64>().ok())
        .collect::<Option<Vec<_>>>()?;
    (coords.len() == k).then_some(coords)
}

pub(crate) fn render_grid_point(coords: &[u64]) -> String {
    coords
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl PosetGenerator for GridGenerator {
    fn root(&self) -> String {
        render_grid_point(&vec![0; self.k])
    }

    fn up_covers(&self, label: &str) -> Vec<String> {
        let coords = parse_grid_point(label, self.k)
            .unwrap_or_else(|| panic!("`{label}` is not a point of ℕ^{}", self.k));
        (0..self.k)
            .map(|i| {
                let mut next = coords.clone();
                next[i] += 1;
                render_grid_point(&next)
            })
            .collect()
    }
}

/// The free semigroup of finite words over an alphabet, ordered by left
/// divisibility: `x ⪯ y` iff `y = x·t`. Covers append one letter. The empty
/// word is the identity and renders as `""`.
#[derive(Clone, Debug)]
pub struct FreeWordGenerator {
    pub alphabet: Vec<char>,
}

impl PosetGenerator for FreeWordGenerator {
    fn root(&self) -> String {
        String::new()
    }

    fn up_covers(&self, label: &str) -> Vec<String> {
        self.alphabet
            .iter()
            .map(|&c| {
                let mut word = label.to_owned();
                word.push(c);
                word
            })
            .collect()
    }
}

/// An explicit rooted tree given by child lists.
#[derive(Clone, Debug)]
pub struct TreeGenerator {
    pub root: String,
    pub children: HashMap<String, Vec<String>>,
}

impl PosetGenerator for TreeGenerator {
    fn root(&self) -> String {
        self.root.clone()
    }

    fn up_covers(&self, label: &str) -> Vec<String> {
        self.children.get(label).cloned().unwrap_or_default()
    }
}
