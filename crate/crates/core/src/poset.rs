//! Covering graphs of discrete partially ordered sets.
//!
//! A poset here always comes with a minimum element `e` and the guarantee
//! that every chain from `e` to any element is finite, so the covering
//! (Hasse) graph is a rooted DAG in which every element is reachable from
//! `e`. Finite posets are validated explicitly from an element/edge list.
//! Infinite posets are materialized from a [`crate::gen::PosetGenerator`] up
//! to an explicit enumeration budget; elements whose upper covers were cut
//! off by the budget are marked as *frontier* elements and every analysis
//! result carries the truncation depth used.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::gen::PosetGenerator;

/// Opaque handle to one element of a [`Poset`].
///
/// Ids are dense indices assigned at construction; they are only meaningful
/// together with the poset that issued them.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct ElementId(u32);

impl ElementId {
    /// Dense index of the element, usable to address per-element vectors.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn new(index: usize) -> Self {
        ElementId(index as u32)
    }
}

/// Errors raised while validating or enumerating a poset.
#[derive(Debug, Error)]
pub enum PosetError {
    #[error("element list is empty")]
    Empty,
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("no unique minimum: found {0} elements without lower covers")]
    NoUniqueMinimum(usize),
    #[error("cycle detected through element `{0}`")]
    Cycle(String),
    #[error("edge ({0}, {1}) is not a covering edge: a longer path from `{0}` to `{1}` exists")]
    NonCoverEdge(String, String),
    #[error("element `{0}` is unreachable from the minimum")]
    Unreachable(String),
    #[error("enumeration budget exceeded: {0}")]
    EnumerationBudgetExceeded(String),
    #[error("generator is not graded: cover ({0} -> {1}) skips a level")]
    NonGraded(String, String),
}

/// Enumeration budget for lazily generated posets.
#[derive(Copy, Clone, Debug)]
pub struct Budget {
    /// Levels `0..=max_depth` are materialized.
    pub max_depth: u32,
    /// Hard cap on the number of materialized elements.
    pub max_elements: usize,
}

impl Budget {
    pub fn depth(max_depth: u32) -> Self {
        Budget {
            max_depth,
            max_elements: 1_000_000,
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_depth: 32,
            max_elements: 1_000_000,
        }
    }
}

/// Level structure of a uniform poset: `level[x]` is the common length of
/// all paths from `e` to `x`, and `sets[n]` lists the level set `S_n`.
#[derive(Clone, Debug)]
pub struct LevelIndex {
    pub level: Vec<u32>,
    pub sets: Vec<Vec<ElementId>>,
}

impl LevelIndex {
    pub fn level_of(&self, x: ElementId) -> u32 {
        self.level[x.index()]
    }

    pub fn set(&self, n: usize) -> &[ElementId] {
        self.sets.get(n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn height(&self) -> usize {
        self.sets.len().saturating_sub(1)
    }
}

/// Witness that a poset is not uniform: an element admitting paths from `e`
/// of two different lengths.
#[derive(Clone, Debug)]
pub struct NonUniformWitness {
    pub element: ElementId,
    pub lengths: [u32; 2],
}

/// Materialized covering graph.
///
/// Immutable after construction; all analyses treat it as shared read-only
/// state. `up[x]` is the enumerated part of `A_x` and `down[x]` is all of
/// `B_x` (graded generators guarantee lower covers are never cut off).
#[derive(Clone)]
pub struct Poset {
    labels: Vec<String>,
    index: HashMap<String, ElementId>,
    up: Vec<Vec<ElementId>>,
    down: Vec<Vec<ElementId>>,
    root: ElementId,
    frontier: Vec<bool>,
    depth_used: Option<u32>,
    topo: Vec<ElementId>,
}

impl std::fmt::Debug for Poset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Poset")
            .field("elements", &self.labels.len())
            .field("root", &self.labels[self.root.index()])
            .field("depth_used", &self.depth_used)
            .finish()
    }
}

impl Poset {
    /// Validate an explicit finite poset given by labels and cover edges.
    ///
    /// Checks, in order: label uniqueness, edge endpoints, acyclicity, a
    /// unique minimum, reachability of every element from the minimum, and
    /// that every edge is a genuine cover (no directed path of length >= 2
    /// joins its endpoints).
    pub fn validate(
        elements: Vec<String>,
        edges: &[(String, String)],
    ) -> Result<Poset, PosetError> {
        if elements.is_empty() {
            return Err(PosetError::Empty);
        }
        let mut index = HashMap::with_capacity(elements.len());
        for (i, label) in elements.iter().enumerate() {
            if index.insert(label.clone(), ElementId::new(i)).is_some() {
                return Err(PosetError::DuplicateElement(label.clone()));
            }
        }
        let n = elements.len();
        let mut up = vec![Vec::new(); n];
        let mut down = vec![Vec::new(); n];
        for (from, to) in edges {
            let x = *index
                .get(from)
                .ok_or_else(|| PosetError::UnknownElement(from.clone()))?;
            let y = *index
                .get(to)
                .ok_or_else(|| PosetError::UnknownElement(to.clone()))?;
            if x == y {
                return Err(PosetError::Cycle(from.clone()));
            }
            if !up[x.index()].contains(&y) {
                up[x.index()].push(y);
                down[y.index()].push(x);
            }
        }

        // Kahn topological sort; leftovers witness a cycle. Runs before the
        // minimum check so a cycle with no sources reports as a cycle.
        let mut indegree: Vec<usize> = down.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            topo.push(ElementId::new(i));
            for &y in &up[i] {
                indegree[y.index()] -= 1;
                if indegree[y.index()] == 0 {
                    queue.push_back(y.index());
                }
            }
        }
        if topo.len() != n {
            let stuck = (0..n)
                .find(|&i| indegree[i] > 0)
                .expect("cycle must leave an element with positive indegree");
            return Err(PosetError::Cycle(elements[stuck].clone()));
        }

        // Unique minimum: exactly one element without lower covers.
        let minima: Vec<usize> = (0..n).filter(|&i| down[i].is_empty()).collect();
        if minima.len() != 1 {
            return Err(PosetError::NoUniqueMinimum(minima.len()));
        }
        let root = ElementId::new(minima[0]);

        // Reachability from the minimum.
        let mut seen = vec![false; n];
        seen[root.index()] = true;
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            for &y in &up[x.index()] {
                if !seen[y.index()] {
                    seen[y.index()] = true;
                    stack.push(y);
                }
            }
        }
        if let Some(i) = (0..n).find(|&i| !seen[i]) {
            return Err(PosetError::Unreachable(elements[i].clone()));
        }

        // Cover check by longest paths: an edge (x, y) is genuine iff the
        // longest directed path from x to y has length exactly 1.
        let topo_pos: Vec<usize> = {
            let mut pos = vec![0usize; n];
            for (p, id) in topo.iter().enumerate() {
                pos[id.index()] = p;
            }
            pos
        };
        for i in 0..n {
            if up[i].is_empty() {
                continue;
            }
            let mut longest = vec![i64::MIN; n];
            longest[i] = 0;
            for &z in &topo[topo_pos[i]..] {
                if longest[z.index()] == i64::MIN {
                    continue;
                }
                for &w in &up[z.index()] {
                    longest[w.index()] = longest[w.index()].max(longest[z.index()] + 1);
                }
            }
            for &y in &up[i] {
                if longest[y.index()] >= 2 {
                    return Err(PosetError::NonCoverEdge(
                        elements[i].clone(),
                        elements[y.index()].clone(),
                    ));
                }
            }
        }

        Ok(Poset {
            labels: elements,
            index,
            up,
            down,
            root,
            frontier: vec![false; n],
            depth_used: None,
            topo,
        })
    }

    /// Materialize a generated poset breadth-first up to `budget.max_depth`.
    ///
    /// Generators must be graded: every upper cover of a level-`d` element
    /// sits at level `d + 1`. All built-in generators are. Elements at the
    /// cutoff depth keep their discovered lower covers but an empty upper
    /// cover list, and are marked frontier.
    pub fn from_generator(
        generator: &dyn PosetGenerator,
        budget: Budget,
    ) -> Result<Poset, PosetError> {
        let root_label = generator.root();
        let mut labels = vec![root_label.clone()];
        let mut index = HashMap::new();
        index.insert(root_label, ElementId::new(0));
        let mut up: Vec<Vec<ElementId>> = vec![Vec::new()];
        let mut down: Vec<Vec<ElementId>> = vec![Vec::new()];
        let mut depth = vec![0u32];

        let mut queue = VecDeque::new();
        queue.push_back(ElementId::new(0));
        while let Some(x) = queue.pop_front() {
            let d = depth[x.index()];
            if d == budget.max_depth {
                continue;
            }
            for child_label in generator.up_covers(&labels[x.index()]) {
                let y = match index.get(&child_label) {
                    Some(&y) => {
                        if depth[y.index()] != d + 1 {
                            return Err(PosetError::NonGraded(
                                labels[x.index()].clone(),
                                child_label,
                            ));
                        }
                        y
                    }
                    None => {
                        let y = ElementId::new(labels.len());
                        if labels.len() + 1 > budget.max_elements {
                            return Err(PosetError::EnumerationBudgetExceeded(format!(
                                "more than {} elements at depth {}",
                                budget.max_elements,
                                d + 1
                            )));
                        }
                        index.insert(child_label.clone(), y);
                        labels.push(child_label);
                        up.push(Vec::new());
                        down.push(Vec::new());
                        depth.push(d + 1);
                        queue.push_back(y);
                        y
                    }
                };
                if !up[x.index()].contains(&y) {
                    up[x.index()].push(y);
                    down[y.index()].push(x);
                }
            }
        }

        let n = labels.len();
        let frontier: Vec<bool> = (0..n).map(|i| depth[i] == budget.max_depth).collect();
        // Breadth-first discovery order is topological for graded covers.
        let topo = (0..n).map(ElementId::new).collect();
        Ok(Poset {
            labels,
            index,
            up,
            down,
            root: ElementId::new(0),
            frontier,
            depth_used: Some(budget.max_depth),
            topo,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The minimum element `e`.
    pub fn root(&self) -> ElementId {
        self.root
    }

    pub fn label(&self, x: ElementId) -> &str {
        &self.labels[x.index()]
    }

    pub fn id(&self, label: &str) -> Result<ElementId, PosetError> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| PosetError::UnknownElement(label.to_owned()))
    }

    pub fn elements(&self) -> impl Iterator<Item = ElementId> + '_ {
        (0..self.len()).map(ElementId::new)
    }

    /// Enumerated upper covers `A_x` (possibly cut off for frontier elements).
    pub fn up_covers(&self, x: ElementId) -> &[ElementId] {
        &self.up[x.index()]
    }

    /// Lower covers `B_x`; empty exactly for the root.
    pub fn down_covers(&self, x: ElementId) -> &[ElementId] {
        &self.down[x.index()]
    }

    /// True when `x` may have upper covers beyond the enumeration budget.
    pub fn is_frontier(&self, x: ElementId) -> bool {
        self.frontier[x.index()]
    }

    /// True when every `A_x` is fully enumerated (validated finite posets).
    pub fn is_complete(&self) -> bool {
        !self.frontier.iter().any(|&f| f)
    }

    /// Truncation depth for generated posets; `None` for finite ones.
    pub fn depth_used(&self) -> Option<u32> {
        self.depth_used
    }

    /// A topological order with the root first.
    pub fn topo_order(&self) -> &[ElementId] {
        &self.topo
    }

    /// Length of the longest enumerated path from the root.
    pub fn height(&self) -> u32 {
        let mut h = vec![0u32; self.len()];
        let mut best = 0;
        for &x in &self.topo {
            for &y in &self.up[x.index()] {
                h[y.index()] = h[y.index()].max(h[x.index()] + 1);
                best = best.max(h[y.index()]);
            }
        }
        best
    }

    fn shortest_depths(&self) -> Vec<u32> {
        let mut d = vec![u32::MAX; self.len()];
        d[self.root.index()] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(self.root);
        while let Some(x) = queue.pop_front() {
            for &y in &self.up[x.index()] {
                if d[y.index()] == u32::MAX {
                    d[y.index()] = d[x.index()] + 1;
                    queue.push_back(y);
                }
            }
        }
        d
    }

    /// Check uniformity: every element has a single path length from `e`.
    ///
    /// On success returns the level structure; on failure, an element with
    /// two distinct path lengths.
    pub fn check_uniform(&self) -> Result<LevelIndex, NonUniformWitness> {
        let d = self.shortest_depths();
        for x in self.elements() {
            for &y in &self.up[x.index()] {
                if d[y.index()] != d[x.index()] + 1 {
                    let mut lengths = [d[y.index()], d[x.index()] + 1];
                    lengths.sort_unstable();
                    return Err(NonUniformWitness {
                        element: y,
                        lengths,
                    });
                }
            }
        }
        let max = d.iter().copied().max().unwrap_or(0) as usize;
        let mut sets = vec![Vec::new(); max + 1];
        for x in self.elements() {
            sets[d[x.index()] as usize].push(x);
        }
        Ok(LevelIndex { level: d, sets })
    }

    /// All directed paths from `e` to `x` in the covering graph.
    pub fn paths_to(&self, x: ElementId) -> Vec<Path> {
        if x == self.root {
            return vec![Path {
                verts: vec![self.root],
            }];
        }
        let mut out = Vec::new();
        for &w in &self.down[x.index()] {
            for mut path in self.paths_to(w) {
                path.verts.push(x);
                out.push(path);
            }
        }
        out
    }

    /// The down set `D[x] = { t : t ⪯ x }`, sorted by element id.
    pub fn down_set(&self, x: ElementId) -> Vec<ElementId> {
        let mut seen = vec![false; self.len()];
        seen[x.index()] = true;
        let mut stack = vec![x];
        while let Some(z) = stack.pop() {
            for &w in &self.down[z.index()] {
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    stack.push(w);
                }
            }
        }
        (0..self.len())
            .filter(|&i| seen[i])
            .map(ElementId::new)
            .collect()
    }

    pub fn down_set_count(&self, x: ElementId) -> usize {
        self.down_set(x).len()
    }

    /// The up set `{ y : y ⪰ x }` within the enumerated region.
    pub fn up_set(&self, x: ElementId) -> Vec<ElementId> {
        let mut seen = vec![false; self.len()];
        seen[x.index()] = true;
        let mut stack = vec![x];
        while let Some(z) = stack.pop() {
            for &y in &self.up[z.index()] {
                if !seen[y.index()] {
                    seen[y.index()] = true;
                    stack.push(y);
                }
            }
        }
        (0..self.len())
            .filter(|&i| seen[i])
            .map(ElementId::new)
            .collect()
    }

    /// Expand the rooted tree of paths from `e`, up to paths of `max_len`
    /// covering steps, capped at `max_nodes` path nodes.
    pub fn path_space(&self, max_len: u32, max_nodes: usize) -> Result<PathSpace, PosetError> {
        let root_path = Path {
            verts: vec![self.root],
        };
        let mut paths = vec![root_path.clone()];
        let mut labels = vec![root_path.render(self)];
        let mut endpoints = vec![self.root];
        let mut up: Vec<Vec<ElementId>> = vec![Vec::new()];
        let mut down: Vec<Vec<ElementId>> = vec![Vec::new()];
        let mut frontier = vec![self.frontier[self.root.index()] || max_len == 0];
        let mut index = HashMap::new();
        index.insert(labels[0].clone(), ElementId::new(0));

        let mut queue = VecDeque::new();
        queue.push_back(ElementId::new(0));
        while let Some(node) = queue.pop_front() {
            let len = paths[node.index()].len() as u32;
            if len == max_len {
                continue;
            }
            let end = endpoints[node.index()];
            for &y in &self.up[end.index()] {
                let mut verts = paths[node.index()].verts.clone();
                verts.push(y);
                let path = Path { verts };
                if paths.len() + 1 > max_nodes {
                    return Err(PosetError::EnumerationBudgetExceeded(format!(
                        "path space exceeds {max_nodes} nodes at length {}",
                        len + 1
                    )));
                }
                let child = ElementId::new(paths.len());
                labels.push(path.render(self));
                index.insert(labels[child.index()].clone(), child);
                endpoints.push(y);
                frontier.push(len + 1 == max_len || self.frontier[y.index()]);
                up.push(Vec::new());
                down.push(vec![node]);
                up[node.index()].push(child);
                paths.push(path);
                queue.push_back(child);
            }
        }

        let n = paths.len();
        let poset = Poset {
            labels,
            index,
            up,
            down,
            root: ElementId::new(0),
            frontier,
            depth_used: Some(max_len),
            topo: (0..n).map(ElementId::new).collect(),
        };
        Ok(PathSpace {
            poset: Arc::new(poset),
            endpoints,
            paths,
        })
    }

    /// Export labels and cover edges, e.g. to re-validate or serialize.
    pub fn export(&self) -> (Vec<String>, Vec<(String, String)>) {
        let mut edges = Vec::new();
        for x in self.elements() {
            for &y in &self.up[x.index()] {
                edges.push((
                    self.labels[x.index()].clone(),
                    self.labels[y.index()].clone(),
                ));
            }
        }
        (self.labels.clone(), edges)
    }
}

/// A finite directed path in the covering graph, starting at the root.
///
/// Paths are identified by their full vertex sequence, not by their
/// endpoint: distinct routes to the same element are distinct paths.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Path {
    verts: Vec<ElementId>,
}

impl Path {
    /// Number of covering steps (0 for the degenerate root path).
    pub fn len(&self) -> usize {
        self.verts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Endpoint map `m(a)`: the last vertex.
    pub fn endpoint(&self) -> ElementId {
        *self.verts.last().expect("paths are never empty")
    }

    /// Parent path `a⁻` (drop the endpoint); `None` for the root path.
    pub fn parent(&self) -> Option<Path> {
        if self.verts.len() == 1 {
            None
        } else {
            Some(Path {
                verts: self.verts[..self.verts.len() - 1].to_vec(),
            })
        }
    }

    pub fn vertices(&self) -> &[ElementId] {
        &self.verts
    }

    /// Canonical text rendering: vertex labels joined by `·`.
    pub fn render(&self, poset: &Poset) -> String {
        self.verts
            .iter()
            .map(|&v| poset.label(v))
            .collect::<Vec<_>>()
            .join("\u{b7}")
    }
}

/// The rooted tree of paths of a poset, with the endpoint map.
#[derive(Clone, Debug)]
pub struct PathSpace {
    /// The tree as a poset in its own right (prefix order).
    pub poset: Arc<Poset>,
    /// `endpoints[a]` is `m(a)` as an id of the base poset.
    pub endpoints: Vec<ElementId>,
    /// Vertex sequences of each path node, in node id order.
    pub paths: Vec<Path>,
}

impl PathSpace {
    /// Path nodes ending at base element `x` (the fiber `Ŝ(x)`).
    pub fn fiber(&self, x: ElementId) -> Vec<ElementId> {
        (0..self.endpoints.len())
            .filter(|&i| self.endpoints[i] == x)
            .map(ElementId::new)
            .collect()
    }

    /// Push a per-path-node vector down to base elements by endpoint sum.
    pub fn push_to_base(&self, base_len: usize, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; base_len];
        for (i, &v) in values.iter().enumerate() {
            out[self.endpoints[i].index()] += v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::GridGenerator;

    pub(crate) fn diamond() -> Poset {
        let elements = vec!["e".into(), "a".into(), "b".into(), "t".into()];
        let edges = [
            ("e".into(), "a".into()),
            ("e".into(), "b".into()),
            ("a".into(), "t".into()),
            ("b".into(), "t".into()),
        ];
        Poset::validate(elements, &edges).unwrap()
    }

    pub(crate) fn hexagon() -> Poset {
        let elements = vec!["e".into(), "a".into(), "b".into(), "c".into(), "t".into()];
        let edges = [
            ("e".into(), "a".into()),
            ("e".into(), "b".into()),
            ("a".into(), "c".into()),
            ("c".into(), "t".into()),
            ("b".into(), "t".into()),
        ];
        Poset::validate(elements, &edges).unwrap()
    }

    #[test]
    fn diamond_is_valid() {
        let d = diamond();
        assert_eq!(d.len(), 4);
        assert_eq!(d.label(d.root()), "e");
        let a = d.id("a").unwrap();
        let t = d.id("t").unwrap();
        let e = d.root();
        assert_eq!(d.up_covers(e).len(), 2);
        assert_eq!(d.down_covers(t).len(), 2);
        assert!(d.up_covers(t).is_empty());
        assert!(d.down_covers(e).is_empty());
        assert_eq!(d.down_covers(a), &[e]);
        assert!(d.is_complete());
    }

    #[test]
    fn two_cycle_is_rejected() {
        let err = Poset::validate(
            vec!["e".into(), "a".into()],
            &[("e".into(), "a".into()), ("a".into(), "e".into())],
        )
        .unwrap_err();
        assert!(matches!(err, PosetError::Cycle(_)), "{err}");
    }

    #[test]
    fn implied_edge_is_not_a_cover() {
        // e→a→t plus the shortcut e→t: the shortcut is not a cover.
        let err = Poset::validate(
            vec!["e".into(), "a".into(), "t".into()],
            &[
                ("e".into(), "a".into()),
                ("a".into(), "t".into()),
                ("e".into(), "t".into()),
            ],
        )
        .unwrap_err();
        match err {
            PosetError::NonCoverEdge(x, y) => {
                assert_eq!((x.as_str(), y.as_str()), ("e", "t"));
            }
            other => panic!("expected NonCoverEdge, got {other}"),
        }
    }

    #[test]
    fn unreachable_and_no_minimum() {
        let err = Poset::validate(
            vec!["e".into(), "a".into(), "b".into()],
            &[("e".into(), "a".into()), ("b".into(), "a".into())],
        )
        .unwrap_err();
        assert!(matches!(err, PosetError::NoUniqueMinimum(2)), "{err}");

        // A second component hanging off its own minimum is caught by the
        // unique-minimum check; an isolated island shows up the same way.
        let err = Poset::validate(
            vec!["e".into(), "a".into(), "x".into(), "y".into()],
            &[("e".into(), "a".into()), ("x".into(), "y".into())],
        )
        .unwrap_err();
        assert!(matches!(err, PosetError::NoUniqueMinimum(2)), "{err}");
    }

    #[test]
    fn unknown_edge_label() {
        let err = Poset::validate(vec!["e".into()], &[("e".into(), "z".into())]).unwrap_err();
        assert!(matches!(err, PosetError::UnknownElement(l) if l == "z"));
    }

    #[test]
    fn diamond_levels() {
        let d = diamond();
        let levels = d.check_uniform().unwrap();
        assert_eq!(levels.set(0), &[d.root()]);
        assert_eq!(levels.set(1).len(), 2);
        assert_eq!(levels.set(2), &[d.id("t").unwrap()]);
    }

    #[test]
    fn hexagon_is_not_uniform() {
        let h = hexagon();
        let witness = h.check_uniform().unwrap_err();
        assert_eq!(h.label(witness.element), "t");
        assert_eq!(witness.lengths, [2, 3]);
    }

    #[test]
    fn grid_levels_match_coordinate_sums() {
        let p = Poset::from_generator(&GridGenerator { k: 2 }, Budget::depth(3)).unwrap();
        let levels = p.check_uniform().unwrap();
        for (n, set) in levels.sets.iter().enumerate() {
            assert_eq!(set.len(), n + 1, "S_{n} of ℕ² has n+1 points");
            for &x in set {
                let sum: u64 = p
                    .label(x)
                    .split(',')
                    .map(|c| c.parse::<u64>().unwrap())
                    .sum();
                assert_eq!(sum as usize, n);
            }
        }
        assert!(!p.is_complete());
        assert_eq!(p.depth_used(), Some(3));
    }

    #[test]
    fn paths_to_endpoints() {
        let d = diamond();
        let t = d.id("t").unwrap();
        let paths = d.paths_to(t);
        let rendered: Vec<String> = paths.iter().map(|p| p.render(&d)).collect();
        assert_eq!(paths.len(), 2);
        assert!(rendered.contains(&"e·a·t".to_string()));
        assert!(rendered.contains(&"e·b·t".to_string()));

        let h = hexagon();
        let t = h.id("t").unwrap();
        let rendered: Vec<String> = h.paths_to(t).iter().map(|p| p.render(&h)).collect();
        assert_eq!(rendered.len(), 2);
        assert!(rendered.contains(&"e·b·t".to_string()));
        assert!(rendered.contains(&"e·a·c·t".to_string()));

        let root_paths = d.paths_to(d.root());
        assert_eq!(root_paths.len(), 1);
        assert_eq!(root_paths[0].len(), 0);
    }

    #[test]
    fn path_space_of_diamond() {
        let d = diamond();
        let ps = d.path_space(2, 10_000).unwrap();
        let labels: Vec<&str> = ps.poset.elements().map(|x| ps.poset.label(x)).collect();
        assert_eq!(labels, vec!["e", "e·a", "e·b", "e·a·t", "e·b·t"]);
        // Each non-root node has exactly one lower cover, and the exported
        // tree re-validates as a finite poset.
        for x in ps.poset.elements() {
            if x != ps.poset.root() {
                assert_eq!(ps.poset.down_covers(x).len(), 1);
            }
        }
        let (elements, edges) = ps.poset.export();
        Poset::validate(elements, &edges).unwrap();
    }

    #[test]
    fn path_space_fibers_partition_levels() {
        let h = hexagon();
        let ps = h.path_space(3, 10_000).unwrap();
        let levels = ps.poset.check_uniform().unwrap();
        // Paths of length 2 in the hexagon: e·a·c and e·b·t.
        let s2: Vec<&str> = levels.set(2).iter().map(|&x| ps.poset.label(x)).collect();
        assert_eq!(s2, vec!["e·a·c", "e·b·t"]);
        // Fibers partition each level set by endpoint.
        for n in 0..=3usize {
            let total: usize = h
                .elements()
                .map(|x| {
                    ps.fiber(x)
                        .iter()
                        .filter(|&&a| ps.paths[a.index()].len() == n)
                        .count()
                })
                .sum();
            assert_eq!(total, levels.set(n).len());
        }
    }

    #[test]
    fn path_space_of_tree_is_isomorphic() {
        let tree = Poset::validate(
            vec!["e".into(), "a".into(), "b".into(), "c".into()],
            &[
                ("e".into(), "a".into()),
                ("e".into(), "b".into()),
                ("a".into(), "c".into()),
            ],
        )
        .unwrap();
        let ps = tree.path_space(8, 10_000).unwrap();
        assert_eq!(ps.poset.len(), tree.len());
        // Endpoint map is a bijection on trees.
        let mut seen = vec![false; tree.len()];
        for &m in &ps.endpoints {
            assert!(!seen[m.index()]);
            seen[m.index()] = true;
        }
    }

    #[test]
    fn down_sets() {
        let d = diamond();
        let t = d.id("t").unwrap();
        let a = d.id("a").unwrap();
        assert_eq!(d.down_set_count(t), 4);
        assert_eq!(d.down_set_count(a), 2);
        assert_eq!(d.down_set_count(d.root()), 1);
        // On a rooted tree the count is 1 + depth.
        let chain = Poset::from_generator(&GridGenerator { k: 1 }, Budget::depth(5)).unwrap();
        let three = chain.id("3").unwrap();
        assert_eq!(chain.down_set_count(three), 4);
    }

    #[test]
    fn duality_of_cover_maps() {
        for p in [diamond(), hexagon()] {
            for x in p.elements() {
                for y in p.elements() {
                    let forward = p.up_covers(x).contains(&y);
                    let backward = p.down_covers(y).contains(&x);
                    assert_eq!(forward, backward);
                }
            }
        }
    }
}
