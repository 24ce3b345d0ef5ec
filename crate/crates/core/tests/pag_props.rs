mod common;

use common::{arb_connected, permutation, relabel};
use datalab_core::augment::{AugmentationSpec, Family};
use datalab_core::pag::{
    build_pag, conductance, count_pairs, detect_inconsistent, partition_dissimilarity, CoOccurrence, GedIntervals,
    IdentityPolicy, PairDistance, PartitionAssignment, PartitionSource, ProbabilityMode,
};
use datalab_core::ged::{ged_exact, CostModel};
use datalab_core::LabeledGraph;
use proptest::prelude::*;
use std::collections::BTreeSet;

fn dataset(graphs: Vec<datalab_core::AttributedGraph>, labels: &[usize]) -> Vec<LabeledGraph> {
    graphs
        .into_iter()
        .enumerate()
        .map(|(i, g)| LabeledGraph::new(g.with_id(format!("p{i}")), labels[i % labels.len()], BTreeSet::new(), 0).unwrap())
        .collect()
}

fn arb_relation() -> impl Strategy<Value = (CoOccurrence, PartitionAssignment)> {
    (2usize..12).prop_flat_map(|n| {
        (prop::collection::vec((0..n, 0..n), 0..30), prop::collection::vec(0usize..3, n))
            .prop_map(move |(pairs, part)| (CoOccurrence::from_pairs(n, pairs), PartitionAssignment::new(part, 3, PartitionSource::TrueLabels)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weights_are_symmetric_and_sum_to_degree(graphs in prop::collection::vec(arb_connected(2, 6, 2), 1..5), f in prop::sample::select(Family::GENERIC.to_vec()), gamma in 0.1f64..0.5) {
        let ds = dataset(graphs, &[0, 1]);
        let spec = AugmentationSpec::new(f, gamma).unwrap();
        let pag = build_pag(&ds, &spec, ProbabilityMode::UniformExact { cap: 100_000 }, 0, IdentityPolicy::Labeled).unwrap();
        let mut rows = vec![0.0; pag.len()];
        for (a, b, w) in pag.weights() {
            prop_assert!(w > 0.0);
            prop_assert!((pag.weight(a, b) - pag.weight(b, a)).abs() < 1e-15);
            rows[a] += w;
            if a != b {
                rows[b] += w;
            }
        }
        for (a, r) in rows.iter().enumerate() {
            prop_assert!((r - pag.degree(a)).abs() < 1e-12);
        }
        let total: f64 = (0..pag.len()).map(|a| pag.degree(a)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_counts_and_ratios((rel, part) in arb_relation()) {
        let (lambda, mu) = count_pairs(&rel, &part).unwrap();
        prop_assert_eq!(lambda + mu, rel.ordered_pairs());
        prop_assert_eq!(mu % 2, 0);
        for i in 0..part.r {
            let phi = partition_dissimilarity(&rel, &part, i).unwrap();
            prop_assert!((0.0..=1.0).contains(&phi));
            let c = conductance(&rel, &part, i).unwrap();
            prop_assert!((0.0..=1.0).contains(&c.value));
        }
        let flagged = detect_inconsistent(&rel, &part, None).unwrap();
        prop_assert_eq!(flagged.is_empty(), mu == 0);
    }

    #[test]
    fn mu_grows_with_threshold(graphs in prop::collection::vec(arb_connected(2, 5, 2), 2..7), cut in 1usize..6) {
        let part = PartitionAssignment::new((0..graphs.len()).map(|i| i % 2).collect(), 2, PartitionSource::TrueLabels);
        let dist = GedIntervals::compute(&graphs, 6.0);
        let mut last = 0;
        for t in 0..=6 {
            let (_, mu) = count_pairs(&dist.relation(|_, _| t as f64, |a, b| (a + b) % 3 == 0), &part).unwrap();
            prop_assert!(mu >= last);
            last = mu;
        }
        let (l_all, m_all) = count_pairs(&dist.relation(|_, _| 6.0, |a, b| (a + b) % 3 == 0), &part).unwrap();
        let (l_cut, m_cut) = count_pairs(&dist.relation(|_, _| cut as f64, |a, b| (a + b) % 3 == 0), &part).unwrap();
        prop_assert!(l_cut <= l_all && m_cut <= m_all);
    }

    #[test]
    fn intervals_match_pairwise_exact(
        graphs in prop::collection::vec(arb_connected(1, 5, 2), 2..6),
        perm in permutation(5),
        cap in 1usize..6,
    ) {
        // A relabeled copy shares an isomorphism class with its source.
        let mut pool = graphs.clone();
        let p: Vec<usize> = perm.into_iter().filter(|&v| v < graphs[0].node_count()).collect();
        pool.push(relabel(&graphs[0], &p));
        let d = GedIntervals::compute(&pool, cap as f64);
        for a in 0..pool.len() {
            for b in a + 1..pool.len() {
                let exact = ged_exact(&pool[a], &pool[b], &CostModel::default()).unwrap().distance;
                let expected = if exact <= cap as f64 { PairDistance::Exact(exact) } else { PairDistance::Above };
                prop_assert_eq!(d.dist[&(a, b)], expected);
            }
        }
    }
}
