//! Property suite: structural invariants that must hold on arbitrary
//! posets, kernels and densities, not just the worked fixtures.

mod common;

use proptest::prelude::*;

use runchain::dist::{pdf_from_upf_tree, upf_from_pdf};
use runchain::poset::Poset;
use runchain::reversal::{reverse_downward, reverse_upward, ReversalMode};

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Cover duality and re-validation of the exported graph.
    #[test]
    fn poset_duality_and_export(seed in any::<u64>(), n in 1usize..24) {
        let poset = random_poset(&mut rng(seed), n);
        for x in poset.elements() {
            if x != poset.root() {
                prop_assert!(!poset.down_covers(x).is_empty());
            }
            for y in poset.elements() {
                prop_assert_eq!(
                    poset.up_covers(x).contains(&y),
                    poset.down_covers(y).contains(&x)
                );
            }
        }
        let (elements, edges) = poset.export();
        let back = Poset::validate(elements, &edges);
        prop_assert!(back.is_ok());
    }

    /// Paths partition by endpoint: summing fiber sizes per length matches
    /// the level sets of the path tree.
    #[test]
    fn paths_partition_by_endpoint(seed in any::<u64>(), n in 1usize..12) {
        let poset = random_poset(&mut rng(seed), n);
        let space = poset.path_space(6, 100_000).unwrap();
        let levels = space.poset.check_uniform().expect("path space is a tree");
        for len in 0..levels.sets.len() {
            let by_fiber: usize = poset
                .elements()
                .map(|x| {
                    space
                        .fiber(x)
                        .iter()
                        .filter(|&&a| space.paths[a.index()].len() == len)
                        .count()
                })
                .sum();
            prop_assert_eq!(by_fiber, levels.set(len).len());
        }
        // Each non-root path node has exactly one lower cover.
        for a in space.poset.elements() {
            if a != space.poset.root() {
                prop_assert_eq!(space.poset.down_covers(a).len(), 1);
            }
        }
    }

    /// On trees, UPF → density → UPF is the identity, the density is the
    /// node-by-node inversion, and every computed UPF is monotone.
    #[test]
    fn tree_upf_round_trip(seed in any::<u64>(), n in 1usize..24) {
        let tree = random_tree(&mut rng(seed), n);
        let (pdf, upf) = random_pdf_and_upf(&mut rng(seed ^ 0x5eed), &tree);
        prop_assert!(upf.is_monotone(&tree));
        let inverted = pdf_from_upf_tree(&upf, &tree).unwrap();
        for (a, b) in inverted.weights.iter().zip(&pdf.weights) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let back = upf_from_pdf(&inverted, &tree, 0.0).unwrap();
        for (a, b) in back.values.iter().zip(&upf.values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    /// The invariant function satisfies its defining recursion, survival is
    /// nonincreasing, and on uniform posets survival equals the level sums
    /// of F.
    #[test]
    fn upward_invariants(seed in any::<u64>(), n in 1usize..24) {
        let poset = std::sync::Arc::new(random_poset(&mut rng(seed), n));
        let kernel = random_upward_kernel(&mut rng(seed ^ 0xabcd), &poset);
        let f = kernel.invariant_function();
        prop_assert_eq!(f.values[poset.root().index()], 1.0);
        let report = kernel.check_left_invariance(&f);
        prop_assert!(report.max_defect < 1e-12);
        prop_assert!(report.root_defect < 1e-9);

        let horizon = poset.height() as usize + 1;
        let survival = kernel.survival_series(horizon).unwrap();
        for w in survival.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15);
        }
        prop_assert_eq!(survival[0], 1.0);
        prop_assert_eq!(*survival.last().unwrap(), 0.0);
        if let Ok(levels) = poset.check_uniform() {
            for (s_n, set) in survival.iter().zip(&levels.sets) {
                let level_sum: f64 = set.iter().map(|&x| f.values[x.index()]).sum();
                prop_assert!((s_n - level_sum).abs() < 1e-12);
            }
        }
        // The last state before returning is a genuine distribution.
        let last = kernel.last_state_distribution(&f, 1e-9).unwrap();
        prop_assert!((last.mass() - 1.0).abs() < 1e-9);
    }

    /// G satisfies its recursion and classification agrees with the level
    /// formula for ν(e) on uniform posets.
    #[test]
    fn downward_invariants(seed in any::<u64>(), n in 1usize..24) {
        let poset = std::sync::Arc::new(random_poset(&mut rng(seed), n));
        let kernel = random_downward_kernel(&mut rng(seed ^ 0x1234), &poset);
        let g = kernel.invariant_function();
        prop_assert_eq!(g.values[poset.root().index()], 1.0);
        let report = kernel.check_left_invariance(&g);
        prop_assert!(report.max_defect < 1e-12);
        prop_assert!(report.root_defect < 1e-9);
        let c = kernel.classify(1e-9);
        let nu = c.mu_e.expect("finite posets are positive recurrent");
        prop_assert!((nu - g.sum()).abs() < 1e-12);
        if let Some(by_levels) = kernel.nu_by_level_sum() {
            prop_assert!((nu - by_levels).abs() < 1e-9);
        }
    }

    /// Reversal is an involution and the invariant function transfers.
    #[test]
    fn reversal_involution(seed in any::<u64>(), n in 1usize..24) {
        let poset = std::sync::Arc::new(random_poset(&mut rng(seed), n));
        let p = random_upward_kernel(&mut rng(seed ^ 0x77), &poset);
        let f = p.invariant_function();
        let (q, _) = reverse_upward(&p, &f, ReversalMode::RequireRecurrent).unwrap();
        let g = q.invariant_function();
        for (a, b) in f.values.iter().zip(&g.values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let (p2, _) = reverse_downward(&q, &f).unwrap();
        prop_assert!(p.max_difference(&p2) < 1e-12);
    }

    /// Factoring sums on the grid agree with the multinomial closed form.
    #[test]
    fn grid_factorings_match_multinomial(
        x in 0u64..5,
        y in 0u64..5,
        r1 in 0.05f64..0.45,
        r2 in 0.05f64..0.45,
    ) {
        use runchain::families::{grid, semigroup::{GridSemigroup, SpatialChain}};
        let chain = SpatialChain::new(GridSemigroup { k: 2 }, vec![r1, r2]).unwrap();
        let label = format!("{x},{y}");
        let fact = chain.invariant_f(&label, 500_000).unwrap();
        let forms = grid::grid_closed_forms(&[r1, r2], &[x, y]).unwrap();
        prop_assert_eq!(fact.count as u128, forms.count);
        prop_assert_eq!(fact.value, forms.upf);
    }
}
