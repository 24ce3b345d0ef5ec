//! Acceptance run: one PASS or FAIL line per criterion, then a nonzero exit
//! if any criterion failed.

#[path = "../../core/tests/common/edit_search.rs"]
mod edit_search;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;
use std::path::Path;
use std::time::{Duration, Instant};

use datalab_core::augment::{
    apply, count_augmentations_upper_bound, enumerate_augmentations, AugmentationRecord, AugmentationSpec, Family,
};
use datalab_core::ged::{ged_exact, ged_within, provenance_co_occurring, CostModel, Decision};
use datalab_core::metrics::{knn_evaluate, stratified_split, ScoreTable, DEFAULT_K_GRID};
use datalab_core::pag::{build_pag, generalization_bound, IdentityPolicy, ProbabilityMode};
use datalab_core::spectral::{
    fit_linear_spectral, spectral_embed, Solver, WlFeatureMap, DEFAULT_FEATURES, DEFAULT_RIDGE, DEFAULT_TOL,
    DEFAULT_WL_ROUNDS,
};
use datalab_core::synthgen::{generate_dataset, GenerationConfig};
use datalab_core::{seed, AttributedGraph, LabeledGraph};
use gcl_datalab::analyze::{analyze_samples, AnalyzeJob};
use gcl_datalab::args::{AnalyzeArgs, EmbedEvalArgs, GenerateArgs, Globals};
use gcl_datalab::evaluate::{self, EvalJob, SummaryRow};
use nalgebra::DMatrix;
use rand::Rng;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timed(limit: Duration, start: Instant, ok: bool, detail: String) -> Verdict {
    let t = start.elapsed();
    check(ok && t <= limit, format!("{detail}; {:.1}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

/// Graph with a node count drawn from `sizes`, binary attributes and each
/// pair an edge with probability `p`.
fn random_graph(rng: &mut impl Rng, sizes: RangeInclusive<usize>, p: f64, id: &str) -> AttributedGraph {
    let n = rng.gen_range(sizes);
    let attrs = (0..n).map(|_| vec![rng.gen_range(0..2)]).collect();
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|_| rng.gen_bool(p)).collect::<Vec<_>>();
    AttributedGraph::new(id, attrs, edges).unwrap()
}

/// Random connected graph: a random tree plus extra edges.
fn random_connected(rng: &mut impl Rng, sizes: RangeInclusive<usize>, p: f64, id: &str) -> AttributedGraph {
    let g = random_graph(rng, sizes, p, id);
    let n = g.node_count();
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    edges.extend((1..n).map(|v| (rng.gen_range(0..v), v)));
    edges.sort_unstable();
    edges.dedup();
    AttributedGraph::new(id, g.attrs().to_vec(), edges).unwrap()
}

fn globals(seed: u64, out_dir: &Path) -> Globals {
    Globals { seed, threads: None, out_dir: out_dir.to_path_buf() }
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = seed::rng(101);
    // Sparse and dense graphs side by side, so some pairs lie beyond cost 4.
    let pool: Vec<AttributedGraph> =
        (0..40).map(|i| random_graph(&mut rng, 2..=5, if i % 2 == 0 { 0.05 } else { 0.95 }, &format!("g{i}"))).collect();
    let alphabet = vec![vec![0], vec![1]];
    let balls: Vec<edit_search::Ball> = pool.iter().map(|g| edit_search::Ball::new(g, 2, &alphabet)).collect();
    let mut pairs = BTreeSet::new();
    while pairs.len() < 200 {
        let (a, b) = (rng.gen_range(0..pool.len()), rng.gen_range(0..pool.len()));
        pairs.insert((a.min(b), a.max(b)));
    }
    let mut mismatches = 0;
    let mut within = 0;
    for &(a, b) in &pairs {
        let exact = ged_exact(&pool[a], &pool[b], &CostModel::default()).unwrap().distance;
        let searched = balls[b].members().filter_map(|(h, d2)| balls[a].distance_to(h).map(|d1| d1 + d2)).min();
        let agree = match searched {
            Some(d) => {
                within += 1;
                exact == d as f64
            }
            None => exact > 4.0,
        };
        mismatches += usize::from(!agree);
    }
    timed(
        Duration::from_secs(60),
        start,
        mismatches == 0,
        format!("{} pairs, {within} within cost 4, {mismatches} mismatches", pairs.len()),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = seed::rng(202);
    let graphs: Vec<AttributedGraph> =
        (0..50).map(|i| random_graph(&mut rng, 1..=8, 0.4, &format!("g{i}"))).collect();
    let mut mismatches = 0;
    let mut checked = 0;
    for g in &graphs {
        for family in [Family::NodeDrop, Family::AttrMask] {
            for gamma in [0.2, 0.4] {
                let spec = AugmentationSpec::new(family, gamma).unwrap();
                let listed = enumerate_augmentations(g, &spec, 1 << 20).unwrap().len();
                // The identity is the only member when the budget is zero.
                let expected = num_bigint::BigUint::from(listed.max(1));
                mismatches += usize::from(count_augmentations_upper_bound(g, &spec) != expected);
                checked += 1;
            }
        }
    }
    check(mismatches == 0, format!("{checked} counts, {mismatches} mismatches"))
}

fn criterion_3() -> Verdict {
    let mut rng = seed::rng(303);
    let gammas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
    let mut records: Vec<AugmentationRecord> = Vec::new();
    for p in 0..100 {
        let g = random_connected(&mut rng, 2..=8, 0.3, &format!("p{p}"));
        let mask: BTreeSet<usize> = (0..g.node_count()).filter(|_| rng.gen_bool(0.5)).collect();
        let parent = LabeledGraph::new(g, 0, mask, 0).unwrap();
        let family = Family::ALL[rng.gen_range(0..Family::ALL.len())];
        let spec = AugmentationSpec::new(family, gammas[rng.gen_range(0..gammas.len())]).unwrap();
        for i in 0..10 {
            let rec = apply(&parent, &spec, seed::derive(p, i)).unwrap();
            records.push(rec);
        }
        let start = records.len() - 10;
        for rec in &records[start..] {
            if ged_within(&parent.graph, &rec.graph, rec.delta as f64, &CostModel::default()) != Decision::Within {
                return Err(format!("child {} farther than its budget {}", rec.graph.id(), rec.delta));
            }
        }
    }
    let mut pairs = 0;
    let mut violations = 0;
    for (i, a) in records.iter().enumerate() {
        for b in &records[i + 1..] {
            if provenance_co_occurring(a, b, a.delta) {
                pairs += 1;
                let d = ged_within(&a.graph, &b.graph, 2.0 * a.delta as f64, &CostModel::default());
                violations += usize::from(d != Decision::Within);
            }
        }
    }
    check(violations == 0, format!("{} records, {pairs} co-occurring pairs, {violations} violations", records.len()))
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let cfg = GenerationConfig {
        samples_per_class: 20,
        style_ratio: 0.5,
        motif_copies_range: (1, 1),
        background_jitter: 1,
        master_seed: 4,
        ..GenerationConfig::default()
    };
    let samples = generate_dataset(&cfg).unwrap().samples;
    let dir = tempfile::tempdir().unwrap();
    let families: Vec<String> = Family::ALL.iter().filter(|f| !f.content_aware()).map(|f| f.name().into()).collect();
    let args = AnalyzeArgs { families: Some(families), ..AnalyzeArgs::default() };
    let job = AnalyzeJob::resolve(args, &globals(4, dir.path())).unwrap();
    let rows = analyze_samples(&samples, &job).unwrap();
    let mut by_family: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for row in &rows {
        by_family.entry(row.family.name()).or_default().push(row.report.mu);
    }
    let monotone = by_family.values().all(|mu| mu.len() == 6 && mu.windows(2).all(|w| w[0] <= w[1]));
    let summary: Vec<String> = by_family.iter().map(|(f, mu)| format!("{f} {mu:?}")).collect();
    timed(Duration::from_secs(600), start, monotone, format!("mu by family: {}", summary.join(", ")))
}

fn criterion_5() -> Verdict {
    let zero = generalization_bound(7, 0, 3, 50);
    let hand = generalization_bound(4, 2, 2, 10);
    check(zero == 0.0 && hand == 3.6, format!("mu = 0 gives {zero}; (r 2, |X| 10, lambda 4, mu 2) gives {hand}"))
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let cfg = GenerationConfig { style_ratio: 2.0, master_seed: 6, ..GenerationConfig::default() };
    let samples = generate_dataset(&cfg).unwrap().samples;
    let spec = AugmentationSpec::new(Family::ContentAwareEdgeDrop, 0.2).unwrap();
    let pag = build_pag(&samples, &spec, ProbabilityMode::Sampled { k: 10 }, 6, IdentityPolicy::Labeled).unwrap();

    // Connected components of the positive-weight graph.
    let n = pag.len();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], mut a: usize) -> usize {
        while root[a] != a {
            root[a] = root[root[a]];
            a = root[a];
        }
        a
    }
    for (a, b, _) in pag.weights() {
        let (ra, rb) = (find(&mut root, a), find(&mut root, b));
        root[ra] = rb;
    }
    let mut classes: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for a in 0..n {
        let r = find(&mut root, a);
        classes.entry(r).or_default().extend(pag.label_set(a));
    }
    let components = classes.len();
    let pure = classes.values().all(|ls| ls.len() == 1);

    let emb = spectral_embed(&pag, components, DEFAULT_TOL).unwrap();
    let top_ones = emb.eigenvalues[..6].iter().all(|l| (l - 1.0).abs() <= 1e-6);
    let labels: Vec<usize> = (0..n).map(|a| *pag.label_set(a).iter().next().unwrap()).collect();
    let split = stratified_split(&labels, 0.8, 0.1, 6);
    let knn = knn_evaluate(&emb.embedding, &labels, &split, &DEFAULT_K_GRID).unwrap();
    let solver = match emb.solver {
        Solver::Dense => "dense".to_string(),
        Solver::BlockPower { iterations } => format!("block power, {iterations} iterations"),
    };
    timed(
        Duration::from_secs(300),
        start,
        pure && top_ones && knn.accuracy == 1.0,
        format!(
            "|X| {n}, {components} components, class-pure {pure}, top-6 eigenvalues {:?}, {solver}, knn {:.3}",
            &emb.eigenvalues[..6],
            knn.accuracy
        ),
    )
}

/// Evaluation rows for generated datasets at each style ratio.
fn evaluate_grid(
    master: u64,
    per_class: usize,
    ratios: &[f64],
    family: Family,
    gamma: f64,
    augmentations: usize,
) -> Vec<SummaryRow> {
    let dir = tempfile::tempdir().unwrap();
    let eval = EmbedEvalArgs {
        style_ratios: Some(ratios.to_vec()),
        families: Some(vec![family.name().into()]),
        gammas: Some(vec![gamma]),
        augmentations: Some(augmentations),
        ..EmbedEvalArgs::default()
    };
    let gen = GenerateArgs { per_class: Some(per_class), ..GenerateArgs::default() };
    let job = EvalJob::resolve(eval, gen, &globals(master, dir.path())).unwrap();
    evaluate::run(&job).unwrap().rows
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let ratios = [0.5, 1.0, 2.0, 4.0];
    let mut ok = true;
    let mut lines = Vec::new();
    for master in [1u64, 2, 3] {
        let caa: Vec<f64> = evaluate_grid(master, 200, &ratios, Family::ContentAwareEdgeDrop, 0.2, 1)
            .iter()
            .map(|r| r.knn_acc)
            .collect();
        let gga: Vec<f64> =
            evaluate_grid(master, 200, &ratios, Family::EdgePerturb, 0.6, 1).iter().map(|r| r.knn_acc).collect();
        let spread = caa.iter().cloned().fold(f64::MIN, f64::max) - caa.iter().cloned().fold(f64::MAX, f64::min);
        let drop = gga[0] - gga[gga.len() - 1];
        // Accuracies are ratios of small integers; compare with a hair of slack.
        ok &= spread <= 0.05 + 1e-9 && drop >= 0.15 - 1e-9;
        lines.push(format!(
            "seed {master}: caa {caa:.3?} spread {:.1} pts, gga {gga:.3?} drop {:.1} pts",
            100.0 * spread,
            100.0 * drop
        ));
    }
    timed(Duration::from_secs(1800), start, ok, lines.join("; "))
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut lines = Vec::new();
    for master in [1u64, 2, 3] {
        let caa = &evaluate_grid(master, 50, &[6.0], Family::ContentAwareEdgeDrop, 0.2, 30)[0];
        let gga = &evaluate_grid(master, 50, &[6.0], Family::EdgeDrop, 0.2, 30)[0];
        let sep_ok = caa.separability_median >= 2.0 * gga.separability_median;
        let inv_ok = caa.invariance_median >= gga.invariance_median - 0.15;
        ok &= sep_ok && inv_ok;
        lines.push(format!(
            "seed {master}: separability caa {:.4} gga {:.4} ({}), invariance caa {:.3} gga {:.3} ({})",
            caa.separability_median,
            gga.separability_median,
            if sep_ok { "ok" } else { "below 2x" },
            caa.invariance_median,
            gga.invariance_median,
            if inv_ok { "ok" } else { "below" },
        ));
    }
    timed(Duration::from_secs(1800), start, ok, lines.join("; "))
}

fn criterion_9() -> Verdict {
    let cfg = GenerationConfig { samples_per_class: 10, master_seed: 9, ..GenerationConfig::default() };
    let samples = generate_dataset(&cfg).unwrap().samples;
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let spec = AugmentationSpec::new(Family::ContentAwareEdgeDrop, 0.2).unwrap();
    let pag = build_pag(&samples, &spec, ProbabilityMode::Sampled { k: 5 }, 9, IdentityPolicy::Labeled).unwrap();
    let map = WlFeatureMap::fit(pag.vertices.iter().map(|v| &v.graph), DEFAULT_WL_ROUNDS, DEFAULT_FEATURES);
    let model = fit_linear_spectral(&pag, map, 12, DEFAULT_RIDGE).unwrap();
    let graphs: Vec<&AttributedGraph> = samples.iter().map(|s| &s.graph).collect();
    let base = model.embed_all(graphs.clone());
    let split = stratified_split(&labels, 0.6, 0.2, 9);
    let base_knn = knn_evaluate(&base, &labels, &split, &DEFAULT_K_GRID).unwrap();
    let base_scores = ScoreTable::compute(&samples, |g| model.embed(g), 10, &spec, 9).unwrap();

    let mut rng = seed::rng(909);
    let mut worst = 0.0f64;
    let mut label_changes = 0;
    for _ in 0..20 {
        let q = DMatrix::from_fn(12, 12, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
        let rotated = base.transform(&q);
        let knn = knn_evaluate(&rotated, &labels, &split, &DEFAULT_K_GRID).unwrap();
        label_changes += usize::from(knn.predictions != base_knn.predictions || knn.chosen_k != base_knn.chosen_k);
        let scores = ScoreTable::compute(
            &samples,
            |g| (q.transpose() * nalgebra::DVector::from_vec(model.embed(g))).iter().copied().collect(),
            10,
            &spec,
            9,
        )
        .unwrap();
        for (a, b) in base_scores.rows.iter().zip(&scores.rows) {
            worst = worst.max((a.invariance.value - b.invariance.value).abs());
            worst = worst.max((a.separability.value - b.separability.value).abs());
        }
    }
    check(
        worst <= 1e-9 && label_changes == 0,
        format!("20 rotations, largest score change {worst:.2e}, {label_changes} runs with changed kNN labels"),
    )
}

/// Runs one command line through the same entry points as the binary.
fn run_command(argv: &[&str]) -> Result<(), String> {
    let cli = gcl_datalab::parse(std::iter::once("gcl-datalab").chain(argv.iter().copied()))
        .map_err(|e| e.to_string())?
        .map_err(|text| format!("unexpected help output: {text}"))?;
    gcl_datalab::execute(cli).map(|_| ()).map_err(|e| e.to_string())
}

fn criterion_10() -> Verdict {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let d = dir.path().to_str().unwrap();
        let steps: [&[&str]; 3] = [
            &["generate", "--per-class", "8", "--copies-max", "1", "--jitter", "1"],
            &["analyze", "--families", "node_drop,edge_drop,content_aware_edge_drop", "--gammas", "0.2,0.4"],
            &["embed-eval", "--per-class", "8", "--style-ratios", "0.5,2", "--samples", "4", "--augmentations", "3"],
        ];
        for step in steps {
            let argv: Vec<&str> = ["--seed", "10", "--out-dir", d].into_iter().chain(step.iter().copied()).collect();
            run_command(&argv).map_err(|e| format!("{step:?} failed: {e}"))?;
        }
    }
    let files = ["dataset.jsonl", "dataset.config.json", "analysis.csv", "summary.csv", "summary.json"];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| std::fs::read(dirs[0].path().join(f)).unwrap() != std::fs::read(dirs[1].path().join(f)).unwrap())
        .collect();
    check(differing.is_empty(), format!("compared {}; differing {differing:?}", files.join(", ")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("GED matches exhaustive edit search", criterion_1),
        ("augmentation counts match enumeration", criterion_2),
        ("children within budget, co-occurrence within twice the budget", criterion_3),
        ("mu non-decreasing in the budget", criterion_4),
        ("bound degeneracy and hand instance", criterion_5),
        ("spectral sanity on a content-aware PAG", criterion_6),
        ("accuracy trend across style ratios", criterion_7),
        ("separability and invariance trend", criterion_8),
        ("metrics invariant under rotation", criterion_9),
        ("byte-identical pipeline reruns", criterion_10),
    ];
    // Optional criterion numbers after `--` select a subset.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let verdict = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match verdict {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
