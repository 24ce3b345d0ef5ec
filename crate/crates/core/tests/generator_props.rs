use datalab_core::io::write_jsonl;
use datalab_core::iso::find_subgraph;
use datalab_core::synthgen::{default_motifs, generate_dataset, matching_classes, validate_motif_set, GenerationConfig};
use datalab_core::AttributedGraph;
use proptest::prelude::*;

#[test]
fn default_motifs_are_distinguishable() {
    assert!(validate_motif_set(&default_motifs()).is_valid());
}

#[test]
fn generation_is_byte_deterministic() {
    let cfg = GenerationConfig { samples_per_class: 5, master_seed: 11, ..GenerationConfig::default() };
    let a = write_jsonl(&generate_dataset(&cfg).unwrap().samples);
    let b = write_jsonl(&generate_dataset(&cfg).unwrap().samples);
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 30);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn samples_carry_their_motif(seed in any::<u64>(), ratio in 0.0f64..4.0, noise in 0.0f64..0.3) {
        let cfg = GenerationConfig { samples_per_class: 2, style_ratio: ratio, edge_noise_fraction: noise, master_seed: seed, ..GenerationConfig::default() };
        let motifs = cfg.motifs.clone();
        let ds = generate_dataset(&cfg).unwrap();
        prop_assert_eq!(ds.samples.len(), 12);
        for s in &ds.samples {
            prop_assert!(s.graph.is_connected());
            prop_assert!(s.graph.attrs().iter().all(|a| a.len() == cfg.feature_dim));
            // The class motif sits on content nodes only.
            let mask = s.content_mask.clone();
            let m = &motifs[s.label];
            let pattern = AttributedGraph::uniform("m", m.node_count(), s.graph.attr(0), m.edges()).unwrap();
            let hit = find_subgraph(&s.graph, &pattern, false, |v| mask.contains(&v));
            prop_assert!(hit.is_some(), "sample {} lacks its motif", s.id());
            prop_assert!(matching_classes(&s.graph, &motifs).contains(&s.label));
            // Content nodes are a whole number of motif copies.
            prop_assert_eq!(mask.len() % motifs[s.label].node_count(), 0);
            let copies = mask.len() / motifs[s.label].node_count();
            prop_assert!((cfg.motif_copies_range.0..=cfg.motif_copies_range.1).contains(&copies));
        }
    }
}
