mod common;

use std::collections::BTreeSet;

use common::{arb_connected, arb_graph};
use datalab_core::augment::{
    allowable_budget, apply, count_augmentations_upper_bound, enumerate_augmentations, replay, AugmentationSpec, Family,
};
use datalab_core::ged::{ged_within, CostModel, Decision};
use datalab_core::{AttributedGraph, LabeledGraph};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

fn labeled(g: AttributedGraph, mask_bits: u16) -> LabeledGraph {
    let mask: BTreeSet<usize> = (0..g.node_count()).filter(|v| mask_bits >> v & 1 == 1).collect();
    LabeledGraph::new(g.with_id("p"), 0, mask, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn child_within_budget(g in arb_connected(1, 8, 2), mask in any::<u16>(), f in family(), gamma in 0.0f64..=1.0, seed in any::<u64>()) {
        let parent = labeled(g, mask);
        let spec = AugmentationSpec::new(f, gamma).unwrap();
        let rec = apply(&parent, &spec, seed).unwrap();
        prop_assert_eq!(rec.delta, allowable_budget(&parent.graph, &spec));
        prop_assert!(rec.edit_path.len() <= rec.delta);
        prop_assert_eq!(replay(&parent.graph, &rec.edit_path).unwrap().with_id(rec.graph.id()), rec.graph.clone());
        let decision = ged_within(&parent.graph, &rec.graph, rec.delta as f64, &CostModel::default());
        prop_assert_eq!(decision, Decision::Within);
    }

    #[test]
    fn content_aware_keeps_content(g in arb_connected(2, 8, 2), mask in any::<u16>(), gamma in 0.0f64..=1.0, seed in any::<u64>()) {
        let parent = labeled(g, mask);
        let spec = AugmentationSpec::new(Family::ContentAwareEdgeDrop, gamma).unwrap();
        let rec = apply(&parent, &spec, seed).unwrap();
        prop_assert_eq!(&rec.content_mask, &parent.content_mask);
        for (u, v) in parent.graph.edges() {
            if parent.content_mask.contains(&u) && parent.content_mask.contains(&v) {
                prop_assert!(rec.graph.has_edge(u, v));
            }
        }
    }

    #[test]
    fn counts_match_enumeration(g in arb_graph(1, 8, 3), gamma in prop::sample::select(vec![0.2, 0.4]), node_drop in any::<bool>()) {
        let f = if node_drop { Family::NodeDrop } else { Family::AttrMask };
        let spec = AugmentationSpec::new(f, gamma).unwrap();
        let all = enumerate_augmentations(&g, &spec, 1 << 20).unwrap();
        let bound = count_augmentations_upper_bound(&g, &spec);
        let expected = if all.is_empty() { 1u32.into() } else { num_bigint::BigUint::from(all.len()) };
        prop_assert_eq!(bound, expected);
    }

    #[test]
    fn sampled_outcomes_lie_in_enumeration(g in arb_connected(1, 6, 2), f in prop::sample::select(Family::GENERIC.to_vec()), gamma in 0.1f64..0.6) {
        let spec = AugmentationSpec::new(f, gamma).unwrap();
        let delta = allowable_budget(&g, &spec);
        prop_assume!(delta > 0);
        let all = enumerate_augmentations(&g, &spec, 1 << 20).unwrap();
        let top: Vec<&AttributedGraph> = all.iter().filter(|r| r.edit_path.len() == delta).map(|r| &r.graph).collect();
        for seed in 0..20 {
            let child = apply(&g, &spec, seed).unwrap();
            prop_assert!(top.iter().any(|h| h.same_content(&child.graph)), "seed {} outside the size-{} stratum", seed, delta);
        }
    }

    #[test]
    fn enumerated_children_are_distinct_and_replayable(g in arb_connected(1, 6, 2), f in prop::sample::select(Family::GENERIC.to_vec()), gamma in 0.1f64..0.5) {
        let spec = AugmentationSpec::new(f, gamma).unwrap();
        let all = enumerate_augmentations(&g, &spec, 1 << 20).unwrap();
        let edit_sets: BTreeSet<String> = all.iter().map(|r| format!("{:?}", r.edit_path)).collect();
        prop_assert_eq!(edit_sets.len(), all.len());
        for r in &all {
            prop_assert!(!r.edit_path.is_empty() && r.edit_path.len() <= r.delta);
            prop_assert_eq!(replay(&g, &r.edit_path).unwrap().with_id(r.graph.id()), r.graph.clone());
        }
    }
}
