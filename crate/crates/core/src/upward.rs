//! Upward run chains.
//!
//! An upward run kernel moves from `x` to one of its upper covers or resets
//! to the minimum `e`; support is exactly `A_x ∪ {e}` (strict mode enforces
//! positive mass on every legal target). The standard invariant function
//! `F(x) = Pr_e(T_x ≤ T_e)` satisfies `F(e) = 1` and the level recursion
//! `F(y) = Σ_{x ∈ B_y} F(x) P(x, y)`, which is also how it is computed:
//! level by level in topological order, never by a global linear solve.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dist::{pdf_from_upf_tree, Pdf, Upf};
use crate::invariant::{
    Classification, InvarianceReport, InvariantFunction, KernelError, TailCertificate, Verdict,
    ROW_SUM_TOL,
};
use crate::poset::{ElementId, PathSpace, Poset};

/// A validated upward run kernel bound to its poset.
#[derive(Clone, Debug)]
pub struct UpwardKernel {
    poset: Arc<Poset>,
    /// `cover_probs[x][k]` is `P(x, y)` for the k-th enumerated cover `y`.
    cover_probs: Vec<Vec<f64>>,
    /// `reset[x]` is `P(x, e)`.
    reset: Vec<f64>,
    /// Mass a frontier row sends to unenumerated covers.
    row_tail: Vec<f64>,
    strict: bool,
    certificate: Option<TailCertificate>,
}

impl UpwardKernel {
    /// Validate dense rows.
    ///
    /// Complete rows must sum to 1 within `row_tol`; rows of frontier
    /// elements may fall short, the deficit being mass bound for covers
    /// beyond the enumeration budget. Strict mode additionally requires
    /// positive mass on every enumerated cover and on the reset.
    pub fn from_parts(
        poset: Arc<Poset>,
        cover_probs: Vec<Vec<f64>>,
        reset: Vec<f64>,
        strict: bool,
        row_tol: f64,
    ) -> Result<UpwardKernel, KernelError> {
        let n = poset.len();
        if cover_probs.len() != n || reset.len() != n {
            return Err(KernelError::LengthMismatch {
                got: cover_probs.len().min(reset.len()),
                want: n,
            });
        }
        let mut row_tail = vec![0.0; n];
        for x in poset.elements() {
            let covers = poset.up_covers(x);
            let probs = &cover_probs[x.index()];
            if probs.len() != covers.len() {
                return Err(KernelError::LengthMismatch {
                    got: probs.len(),
                    want: covers.len(),
                });
            }
            let mut sum = reset[x.index()];
            if reset[x.index()] < 0.0 {
                return Err(KernelError::RowSum {
                    element: poset.label(x).to_owned(),
                    sum: reset[x.index()],
                });
            }
            for (k, &p) in probs.iter().enumerate() {
                if p < 0.0 {
                    return Err(KernelError::RowSum {
                        element: poset.label(x).to_owned(),
                        sum: p,
                    });
                }
                if strict && p <= 0.0 {
                    return Err(KernelError::ZeroOnCover {
                        from: poset.label(x).to_owned(),
                        to: poset.label(covers[k]).to_owned(),
                    });
                }
                sum += p;
            }
            if strict && reset[x.index()] <= 0.0 {
                return Err(KernelError::ZeroOnCover {
                    from: poset.label(x).to_owned(),
                    to: poset.label(poset.root()).to_owned(),
                });
            }
            let deficit = 1.0 - sum;
            if deficit.abs() <= row_tol {
                row_tail[x.index()] = 0.0;
            } else if deficit > 0.0 && poset.is_frontier(x) {
                row_tail[x.index()] = deficit;
            } else {
                return Err(KernelError::RowSum {
                    element: poset.label(x).to_owned(),
                    sum,
                });
            }
        }
        Ok(UpwardKernel {
            poset,
            cover_probs,
            reset,
            row_tail,
            strict,
            certificate: None,
        })
    }

    /// Validate rows given as a label → {target label: probability} map.
    ///
    /// Every enumerated element needs a row. Mass on a target outside
    /// `A_x ∪ {e}` is a support violation; explicit zeros off the support
    /// are ignored.
    pub fn from_rows(
        poset: Arc<Poset>,
        rows: &BTreeMap<String, BTreeMap<String, f64>>,
        strict: bool,
    ) -> Result<UpwardKernel, KernelError> {
        let n = poset.len();
        let mut cover_probs: Vec<Vec<f64>> = poset
            .elements()
            .map(|x| vec![0.0; poset.up_covers(x).len()])
            .collect();
        let mut reset = vec![0.0; n];
        for x in poset.elements() {
            let label = poset.label(x);
            let row = rows
                .get(label)
                .ok_or_else(|| KernelError::MissingRow(label.to_owned()))?;
            for (target, &p) in row {
                let y = self_id(&poset, target)?;
                if y == poset.root() {
                    reset[x.index()] = p;
                } else if let Some(k) = poset.up_covers(x).iter().position(|&c| c == y) {
                    cover_probs[x.index()][k] = p;
                } else if p > 0.0 {
                    return Err(KernelError::Support {
                        from: label.to_owned(),
                        to: target.clone(),
                    });
                }
            }
        }
        UpwardKernel::from_parts(poset, cover_probs, reset, strict, ROW_SUM_TOL)
    }

    pub(crate) fn with_certificate(mut self, certificate: TailCertificate) -> Self {
        self.certificate = Some(certificate);
        self
    }

    pub fn certificate(&self) -> Option<&TailCertificate> {
        self.certificate.as_ref()
    }

    pub fn poset(&self) -> &Arc<Poset> {
        &self.poset
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// A single-element poset leaves the chain stuck at `e`.
    pub fn is_degenerate(&self) -> bool {
        self.poset.len() == 1
    }

    /// `P(x, e)`.
    pub fn reset(&self, x: ElementId) -> f64 {
        self.reset[x.index()]
    }

    /// Probabilities to the enumerated covers, aligned with
    /// [`Poset::up_covers`].
    pub fn cover_probs(&self, x: ElementId) -> &[f64] {
        &self.cover_probs[x.index()]
    }

    /// Mass of `x`'s row bound for covers beyond the enumeration budget.
    pub fn row_tail(&self, x: ElementId) -> f64 {
        self.row_tail[x.index()]
    }

    /// `P(x, y)` for arbitrary targets (0 off the support).
    pub fn prob(&self, x: ElementId, y: ElementId) -> f64 {
        if y == self.poset.root() {
            return self.reset[x.index()];
        }
        self.poset
            .up_covers(x)
            .iter()
            .position(|&c| c == y)
            .map_or(0.0, |k| self.cover_probs[x.index()][k])
    }

    /// The standard invariant function, by forward level recursion.
    ///
    /// Exact on the enumerated region: every path from `e` to an enumerated
    /// element stays inside the region.
    pub fn invariant_function(&self) -> InvariantFunction {
        let poset = &self.poset;
        let mut values = vec![0.0; poset.len()];
        values[poset.root().index()] = 1.0;
        for &x in poset.topo_order() {
            let fx = values[x.index()];
            if fx == 0.0 {
                continue;
            }
            for (k, &y) in poset.up_covers(x).iter().enumerate() {
                values[y.index()] += fx * self.cover_probs[x.index()][k];
            }
        }
        InvariantFunction::exact(values, poset.depth_used())
    }

    /// `Pr_e(T_e > n)` for `n = 0..=up_to`.
    ///
    /// Computed by propagating strictly upward mass, which sums the path
    /// products of every length-`n` path; on uniform posets this equals the
    /// level sum `Σ_{x ∈ S_n} F(x)`.
    pub fn survival_series(&self, up_to: usize) -> Result<Vec<f64>, KernelError> {
        if let Some(depth) = self.poset.depth_used() {
            if up_to > depth as usize {
                return Err(KernelError::EnumerationBudgetExceeded(format!(
                    "survival({up_to}) needs levels beyond the enumeration depth {depth}"
                )));
            }
        }
        let n = self.poset.len();
        let mut series = Vec::with_capacity(up_to + 1);
        series.push(1.0);
        let mut current = vec![0.0; n];
        current[self.poset.root().index()] = 1.0;
        for _ in 1..=up_to {
            let mut next = vec![0.0; n];
            for x in self.poset.elements() {
                let v = current[x.index()];
                if v == 0.0 {
                    continue;
                }
                for (k, &y) in self.poset.up_covers(x).iter().enumerate() {
                    next[y.index()] += v * self.cover_probs[x.index()][k];
                }
            }
            series.push(next.iter().sum());
            current = next;
        }
        Ok(series)
    }

    /// `Pr_e(T_e > n)`.
    pub fn survival(&self, n: usize) -> Result<f64, KernelError> {
        Ok(*self
            .survival_series(n)?
            .last()
            .expect("series contains n = 0"))
    }

    /// Classify recurrence.
    ///
    /// Fully enumerated posets give an exact verdict. On truncated posets
    /// the verdict comes only from the kernel's tail certificate; plain
    /// numeric evidence yields `Undetermined` with both partial quantities,
    /// since finitely many terms settle no limit.
    pub fn classify(&self, tol: f64) -> Classification {
        let f = self.invariant_function();
        let partial = f.sum();
        let depth = self.poset.depth_used();
        let horizon = match depth {
            Some(d) => d as usize,
            None => self.poset.height() as usize + 1,
        };
        let survival = self
            .survival_series(horizon)
            .expect("horizon is within the enumerated depth");

        if self.poset.is_complete() {
            return self.positive_classification(f, partial, 0.0, survival, depth);
        }

        match &self.certificate {
            Some(TailCertificate::ResetFloor(delta)) if *delta > 0.0 => {
                let d = depth.expect("truncated posets carry a depth") as i32;
                let tail = (1.0 - delta).powi(d + 1) / delta;
                if tail <= tol {
                    self.positive_classification(f, partial, tail, survival, depth)
                } else {
                    let mut c = Classification::undetermined(partial, survival, depth);
                    c.tail_bound = Some(tail);
                    c
                }
            }
            Some(TailCertificate::Level(params)) => {
                let closed = params.classify_closed();
                match closed.verdict {
                    Verdict::PositiveRecurrent => {
                        let mu = closed.mu0.expect("positive recurrent closed form has μ(0)");
                        let tail = (mu - partial).max(0.0);
                        let mut c =
                            self.positive_classification_with_mu(f, mu, tail, survival, depth);
                        c.partial_sum = partial;
                        c
                    }
                    verdict => Classification {
                        verdict,
                        mu_e: None,
                        partial_sum: partial,
                        tail_bound: None,
                        survival,
                        depth,
                        invariant_pdf: None,
                        mean_return: None,
                    },
                }
            }
            _ => Classification::undetermined(partial, survival, depth),
        }
    }

    fn positive_classification(
        &self,
        f: InvariantFunction,
        mu: f64,
        tail_bound: f64,
        survival: Vec<f64>,
        depth: Option<u32>,
    ) -> Classification {
        self.positive_classification_with_mu(f, mu, tail_bound, survival, depth)
    }

    fn positive_classification_with_mu(
        &self,
        f: InvariantFunction,
        mu: f64,
        tail_bound: f64,
        survival: Vec<f64>,
        depth: Option<u32>,
    ) -> Classification {
        let weights: Vec<f64> = f.values.iter().map(|v| v / mu).collect();
        let mass: f64 = weights.iter().sum();
        let pdf = Pdf::new(weights, (1.0 - mass).max(0.0)).ok();
        let mean_return = f
            .values
            .iter()
            .map(|&v| if v > 0.0 { mu / v } else { f64::INFINITY })
            .collect();
        Classification {
            verdict: Verdict::PositiveRecurrent,
            mu_e: Some(mu),
            partial_sum: f.sum(),
            tail_bound: Some(tail_bound),
            survival,
            depth,
            invariant_pdf: pdf,
            mean_return: Some(mean_return),
        }
    }

    /// Recompute `(FP)` against `F` and report the defects.
    pub fn check_left_invariance(&self, f: &InvariantFunction) -> InvarianceReport {
        let poset = &self.poset;
        let root = poset.root();
        let mut acc = vec![0.0; poset.len()];
        for x in poset.elements() {
            let fx = f.values[x.index()];
            acc[root.index()] += fx * self.reset[x.index()];
            for (k, &y) in poset.up_covers(x).iter().enumerate() {
                acc[y.index()] += fx * self.cover_probs[x.index()][k];
            }
        }
        let mut max_defect = 0.0f64;
        for y in poset.elements() {
            if y == root {
                continue;
            }
            max_defect = max_defect.max((acc[y.index()] - f.values[y.index()]).abs());
        }
        InvarianceReport {
            max_defect,
            root_defect: (acc[root.index()] - f.values[root.index()]).abs(),
        }
    }

    /// Distribution of `X_n` started at `e` (sub-stochastic on truncated
    /// posets: mass that climbs past the frontier leaks out).
    pub fn n_step_distribution(&self, n: usize) -> Vec<f64> {
        let len = self.poset.len();
        let root = self.poset.root();
        let mut current = vec![0.0; len];
        current[root.index()] = 1.0;
        for _ in 0..n {
            let mut next = vec![0.0; len];
            for x in self.poset.elements() {
                let v = current[x.index()];
                if v == 0.0 {
                    continue;
                }
                next[root.index()] += v * self.reset[x.index()];
                for (k, &y) in self.poset.up_covers(x).iter().enumerate() {
                    next[y.index()] += v * self.cover_probs[x.index()][k];
                }
            }
            current = next;
        }
        current
    }

    /// Lift the kernel to the rooted tree of paths:
    /// `P̂(a, a·y) = P(m(a), y)` and `P̂(a, e) = P(m(a), e)`.
    ///
    /// The endpoint process of the lifted chain started at `e` is the base
    /// chain started at `e`.
    pub fn lift_to_path_space(
        &self,
        max_len: u32,
        max_nodes: usize,
    ) -> Result<(UpwardKernel, PathSpace), KernelError> {
        let space = self
            .poset
            .path_space(max_len, max_nodes)
            .map_err(|e| KernelError::EnumerationBudgetExceeded(e.to_string()))?;
        let tree = &space.poset;
        let mut cover_probs = Vec::with_capacity(tree.len());
        let mut reset = Vec::with_capacity(tree.len());
        for node in tree.elements() {
            let x = space.endpoints[node.index()];
            let probs: Vec<f64> = tree
                .up_covers(node)
                .iter()
                .map(|&child| {
                    let y = space.endpoints[child.index()];
                    self.prob(x, y)
                })
                .collect();
            cover_probs.push(probs);
            reset.push(self.reset[x.index()]);
        }
        let mut kernel = UpwardKernel::from_parts(
            Arc::clone(tree),
            cover_probs,
            reset,
            self.strict,
            ROW_SUM_TOL,
        )?;
        if let Some(cert) = &self.certificate {
            kernel = kernel.with_certificate(cert.clone());
        }
        Ok((kernel, space))
    }

    /// Distribution of the last state visited before returning to `e`:
    /// `x ↦ F(x) P(x, e)`. Sums to 1 when the chain is recurrent and the
    /// poset fully enumerated; otherwise the shortfall becomes the tail.
    pub fn last_state_distribution(
        &self,
        f: &InvariantFunction,
        accuracy: f64,
    ) -> Result<Pdf, KernelError> {
        if f.values.len() != self.poset.len() {
            return Err(KernelError::LengthMismatch {
                got: f.values.len(),
                want: self.poset.len(),
            });
        }
        let weights: Vec<f64> = self
            .poset
            .elements()
            .map(|x| f.values[x.index()] * self.reset[x.index()])
            .collect();
        let mass: f64 = weights.iter().sum();
        let tail = (1.0 - mass).max(0.0);
        if tail > accuracy {
            return Err(KernelError::TailTooLarge { tail, accuracy });
        }
        Ok(Pdf::new(weights, tail)?)
    }

    /// Export rows as a label → {target: probability} map (file schema).
    pub fn rows_map(&self) -> BTreeMap<String, BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        for x in self.poset.elements() {
            let mut row = BTreeMap::new();
            if self.reset[x.index()] > 0.0 {
                row.insert(
                    self.poset.label(self.poset.root()).to_owned(),
                    self.reset[x.index()],
                );
            }
            for (k, &y) in self.poset.up_covers(x).iter().enumerate() {
                let p = self.cover_probs[x.index()][k];
                if p > 0.0 {
                    row.insert(self.poset.label(y).to_owned(), p);
                }
            }
            out.insert(self.poset.label(x).to_owned(), row);
        }
        out
    }

    /// Largest entrywise difference to another kernel on the same poset.
    pub fn max_difference(&self, other: &UpwardKernel) -> f64 {
        let mut max = 0.0f64;
        for x in self.poset.elements() {
            max = max.max((self.reset[x.index()] - other.reset[x.index()]).abs());
            for (a, b) in self.cover_probs[x.index()]
                .iter()
                .zip(&other.cover_probs[x.index()])
            {
                max = max.max((a - b).abs());
            }
        }
        max
    }
}

/// Build the recurrent upward run chain with a prescribed invariant
/// function on a fully enumerated rooted tree:
/// `P(x, y) = F(y)/F(x)` for covers and `P(x, e) = f(x)/F(x)` (the rate
/// function of the underlying distribution).
pub fn chain_from_upf_tree(upf: &Upf, poset: &Arc<Poset>) -> Result<UpwardKernel, KernelError> {
    for x in poset.elements() {
        if upf.values[x.index()] <= 0.0 {
            return Err(KernelError::NonPositiveUpf(poset.label(x).to_owned()));
        }
    }
    let pdf = pdf_from_upf_tree(upf, poset).map_err(|e| match e {
        crate::dist::DistError::NotATree(l) => KernelError::NotATree(l),
        other => KernelError::Dist(other),
    })?;
    let mut cover_probs = Vec::with_capacity(poset.len());
    let mut reset = Vec::with_capacity(poset.len());
    for x in poset.elements() {
        let fx = upf.values[x.index()];
        cover_probs.push(
            poset
                .up_covers(x)
                .iter()
                .map(|&y| upf.values[y.index()] / fx)
                .collect(),
        );
        reset.push(pdf.weights[x.index()] / fx);
    }
    let strict = pdf.is_full_support();
    UpwardKernel::from_parts(Arc::clone(poset), cover_probs, reset, strict, 1e-9)
}

fn self_id(poset: &Poset, label: &str) -> Result<ElementId, KernelError> {
    poset
        .id(label)
        .map_err(|_| KernelError::UnknownElement(label.to_owned()))
}
