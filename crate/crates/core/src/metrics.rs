//! Evaluation of representations: per-sample invariance and separability
//! scores, cosine kNN with a validated `k`, and a softmax linear probe.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::augment::{apply, augmentation_seed, AugmentError, AugmentationSpec};
use crate::graph::{AttributedGraph, LabeledGraph};
use crate::seed;
use crate::spectral::EmbeddingMatrix;

pub const DEFAULT_AUGMENTATIONS: usize = 30;
pub const DEFAULT_K_GRID: [usize; 4] = [5, 10, 15, 20];
/// Cross-class similarity at or below this is treated as zero.
pub const SEPARABILITY_EPS: f64 = 1e-6;
/// Reported separability when the cross-class similarity vanishes.
pub const SCORE_CAP: f64 = 1e6;
/// Cosine similarities closer than this count as tied in kNN ranking.
pub const SIMILARITY_RESOLUTION: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("need at least two classes")]
    SingleClass,
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("zero-dimensional embedding")]
    ZeroDimension,
    #[error("loss diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("label count {labels} does not match {rows} rows")]
    Shape { labels: usize, rows: usize },
    #[error("sample index {0} out of range")]
    Index(usize),
    #[error(transparent)]
    Augment(#[from] AugmentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScoreFlag {
    /// A zero-norm embedding made some cosine undefined.
    ZeroNorm,
    /// Cross-class similarity vanished; the score is the cap.
    Capped,
    /// No other sample of the same class.
    NoSameClass,
}

impl ScoreFlag {
    pub fn name(self) -> &'static str {
        match self {
            ScoreFlag::ZeroNorm => "zero_norm",
            ScoreFlag::Capped => "capped",
            ScoreFlag::NoSameClass => "no_same_class",
        }
    }
}

/// A score with an optional flag; `value` is NaN when undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub flag: Option<ScoreFlag>,
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity, `None` when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

/// Mean cosine between a sample's representation and those of `n_augs`
/// augmentations drawn with seeds derived from `seed`. Augmentations with a
/// zero-norm representation are skipped and flagged.
pub fn invariance_score<F>(
    embed: F,
    sample: &LabeledGraph,
    n_augs: usize,
    spec: &AugmentationSpec,
    seed: u64,
) -> Result<Score, MetricsError>
where
    F: Fn(&AttributedGraph) -> Vec<f64>,
{
    let anchor = embed(&sample.graph);
    let mut sims = Vec::with_capacity(n_augs);
    let mut flag = None;
    for i in 0..n_augs {
        let rec = apply(sample, spec, augmentation_seed(seed, sample.id(), spec.family, i))?;
        match cosine(&anchor, &embed(&rec.graph)) {
            Some(c) => sims.push(c),
            None => flag = Some(ScoreFlag::ZeroNorm),
        }
    }
    let value = if sims.is_empty() { f64::NAN } else { sims.iter().sum::<f64>() / sims.len() as f64 };
    Ok(Score { value, flag })
}

/// Largest cosine to another sample of the same class over the largest
/// cosine to a sample of another class.
pub fn separability_score(e: &EmbeddingMatrix, labels: &[usize], i: usize) -> Result<Score, MetricsError> {
    check_shape(e, labels)?;
    if i >= e.rows() {
        return Err(MetricsError::Index(i));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(MetricsError::SingleClass);
    }
    let mut same = f64::NEG_INFINITY;
    let mut cross = f64::NEG_INFINITY;
    let mut zero = false;
    for j in 0..e.rows() {
        if j == i {
            continue;
        }
        match cosine(e.row(i), e.row(j)) {
            Some(c) if labels[j] == labels[i] => same = same.max(c),
            Some(c) => cross = cross.max(c),
            None => zero = true,
        }
    }
    if same == f64::NEG_INFINITY {
        let flag = if zero { ScoreFlag::ZeroNorm } else { ScoreFlag::NoSameClass };
        return Ok(Score { value: f64::NAN, flag: Some(flag) });
    }
    if cross == f64::NEG_INFINITY && zero {
        return Ok(Score { value: f64::NAN, flag: Some(ScoreFlag::ZeroNorm) });
    }
    if cross <= SEPARABILITY_EPS {
        return Ok(Score { value: SCORE_CAP, flag: Some(ScoreFlag::Capped) });
    }
    Ok(Score { value: same / cross, flag: zero.then_some(ScoreFlag::ZeroNorm) })
}

fn check_shape(e: &EmbeddingMatrix, labels: &[usize]) -> Result<(), MetricsError> {
    if e.rows() != labels.len() {
        return Err(MetricsError::Shape { labels: labels.len(), rows: e.rows() });
    }
    Ok(())
}

/// Median of the finite values; NaN when there are none.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolated quantile of the finite values.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub id: String,
    pub label: usize,
    pub invariance: Score,
    pub separability: Score,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

impl Quantiles {
    fn of(values: &[f64]) -> Self {
        Self { q25: quantile(values, 0.25), median: median(values), q75: quantile(values, 0.75) }
    }
}

impl ScoreTable {
    /// Scores every sample: invariance through `embed`, separability over
    /// the embeddings of all samples.
    pub fn compute<F>(samples: &[LabeledGraph], embed: F, n_augs: usize, spec: &AugmentationSpec, seed: u64) -> Result<Self, MetricsError>
    where
        F: Fn(&AttributedGraph) -> Vec<f64> + Sync,
    {
        let rows: Vec<Vec<f64>> = samples.par_iter().map(|s| embed(&s.graph)).collect();
        let e = EmbeddingMatrix::from_rows(samples.iter().map(|s| s.id().to_string()).collect(), &rows);
        let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
        let rows = samples
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(ScoreRow {
                    id: s.id().to_string(),
                    label: s.label,
                    invariance: invariance_score(&embed, s, n_augs, spec, seed)?,
                    separability: separability_score(&e, &labels, i)?,
                })
            })
            .collect::<Result<_, MetricsError>>()?;
        Ok(Self { rows })
    }

    pub fn invariance(&self) -> Quantiles {
        Quantiles::of(&self.rows.iter().map(|r| r.invariance.value).collect::<Vec<_>>())
    }

    pub fn separability(&self) -> Quantiles {
        Quantiles::of(&self.rows.iter().map(|r| r.separability.value).collect::<Vec<_>>())
    }

    /// `id,label,invariance,separability,flags`; flags joined by `;`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "id,label,invariance,separability,flags")?;
        for r in &self.rows {
            let flags: Vec<&str> = [r.invariance.flag, r.separability.flag].into_iter().flatten().map(ScoreFlag::name).collect();
            writeln!(w, "{},{},{},{},{}", r.id, r.label, r.invariance.value, r.separability.value, flags.join(";"))?;
        }
        Ok(())
    }

    /// Counts on a `bins x bins` grid over invariance in `[-1, 1]` and
    /// log10 separability in `[lo, hi]`; values outside are clamped.
    pub fn histogram(&self, bins: usize, lo: f64, hi: f64) -> Vec<Vec<usize>> {
        let mut grid = vec![vec![0; bins]; bins];
        let bin = |x: f64, a: f64, b: f64| (((x - a) / (b - a) * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        for r in &self.rows {
            let (inv, sep) = (r.invariance.value, r.separability.value);
            if inv.is_finite() && sep.is_finite() && sep > 0.0 {
                grid[bin(inv, -1.0, 1.0)][bin(sep.log10(), lo, hi)] += 1;
            }
        }
        grid
    }
}

/// Disjoint index lists over dataset samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class shuffled split with `train` and `val` fractions; the remainder
/// is test. Every class with a sample keeps at least one in train.
pub fn stratified_split(labels: &[usize], train: f64, val: f64, seed: u64) -> EvalSplit {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = seed::rng(seed::derive_named(seed, "split"));
    let mut split = EvalSplit { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for (_, mut idx) in by_class {
        idx.shuffle(&mut rng);
        let n = idx.len() as f64;
        let n_train = ((n * train).round() as usize).clamp(1, idx.len());
        let n_val = ((n * val).round() as usize).min(idx.len() - n_train);
        split.train.extend(&idx[..n_train]);
        split.val.extend(&idx[n_train..n_train + n_val]);
        split.test.extend(&idx[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    split
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnResult {
    pub accuracy: f64,
    pub chosen_k: usize,
    /// Validation accuracy per evaluated `k`.
    pub val_accuracy: Vec<(usize, f64)>,
    /// Grid values larger than the training set.
    pub skipped: Vec<usize>,
    pub predictions: Vec<usize>,
}

/// Training indices ranked by cosine similarity to `q`, most similar first;
/// near-equal similarities fall back to index order.
fn ranked(e: &EmbeddingMatrix, train: &[usize], q: usize) -> Vec<usize> {
    let mut sims: Vec<(i64, usize)> = train
        .iter()
        .map(|&t| {
            let c = cosine(e.row(q), e.row(t)).unwrap_or(0.0);
            ((c / SIMILARITY_RESOLUTION).round() as i64, t)
        })
        .collect();
    sims.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    sims.into_iter().map(|(_, t)| t).collect()
}

/// Majority label among the first `k`; ties go to the tied label seen first.
fn vote(order: &[usize], labels: &[usize], k: usize) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &t in &order[..k] {
        *counts.entry(labels[t]).or_insert(0) += 1;
    }
    let best = *counts.values().max().expect("k > 0");
    order[..k].iter().map(|&t| labels[t]).find(|l| counts[l] == best).expect("a label attains the max")
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

/// Cosine kNN: `k` chosen on validation (ties to the smallest), accuracy on test.
pub fn knn_evaluate(e: &EmbeddingMatrix, labels: &[usize], split: &EvalSplit, k_grid: &[usize]) -> Result<KnnResult, MetricsError> {
    check_shape(e, labels)?;
    if split.train.is_empty() {
        return Err(MetricsError::EmptySplit("train"));
    }
    if split.test.is_empty() {
        return Err(MetricsError::EmptySplit("test"));
    }
    let (usable, skipped): (Vec<usize>, Vec<usize>) = k_grid.iter().partition(|&&k| k >= 1 && k <= split.train.len());
    let ks = if usable.is_empty() { vec![split.train.len()] } else { usable };
    let predict = |queries: &[usize]| -> Vec<Vec<usize>> {
        queries
            .par_iter()
            .map(|&q| {
                let order = ranked(e, &split.train, q);
                ks.iter().map(|&k| vote(&order, labels, k)).collect()
            })
            .collect()
    };
    let val_pred = predict(&split.val);
    let val_truth: Vec<usize> = split.val.iter().map(|&i| labels[i]).collect();
    let val_accuracy: Vec<(usize, f64)> = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let p: Vec<usize> = val_pred.iter().map(|row| row[j]).collect();
            (k, if val_truth.is_empty() { 0.0 } else { accuracy(&p, &val_truth) })
        })
        .collect();
    let (best_j, _) = val_accuracy
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bj, ba), (j, &(_, a))| if a > ba { (j, a) } else { (bj, ba) });
    let chosen_k = ks[best_j];
    let test_pred: Vec<usize> = predict(&split.test).into_iter().map(|row| row[best_j]).collect();
    let test_truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
    Ok(KnnResult { accuracy: accuracy(&test_pred, &test_truth), chosen_k, val_accuracy, skipped, predictions: test_pred })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { epochs: 200, lr: 0.01, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub accuracy: f64,
    pub train_accuracy: f64,
    pub final_loss: f64,
}

/// Softmax regression on train-standardized features, trained full batch
/// with Adam; accuracy on the test split.
pub fn linear_probe(e: &EmbeddingMatrix, labels: &[usize], split: &EvalSplit, cfg: &ProbeConfig) -> Result<ProbeResult, MetricsError> {
    check_shape(e, labels)?;
    if e.dim == 0 {
        return Err(MetricsError::ZeroDimension);
    }
    if split.train.is_empty() {
        return Err(MetricsError::EmptySplit("train"));
    }
    if split.test.is_empty() {
        return Err(MetricsError::EmptySplit("test"));
    }
    let d = e.dim;
    let c = labels.iter().copied().max().unwrap_or(0) + 1;
    let n = split.train.len() as f64;
    let mut mean = vec![0.0; d];
    let mut sd = vec![0.0; d];
    for &i in &split.train {
        for (j, x) in e.row(i).iter().enumerate() {
            mean[j] += x / n;
        }
    }
    for &i in &split.train {
        for (j, x) in e.row(i).iter().enumerate() {
            sd[j] += (x - mean[j]).powi(2) / n;
        }
    }
    let sd: Vec<f64> = sd.iter().map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 }).collect();
    let feature = |i: usize| -> Vec<f64> { e.row(i).iter().enumerate().map(|(j, x)| (x - mean[j]) / sd[j]).collect() };
    let train_x: Vec<Vec<f64>> = split.train.iter().map(|&i| feature(i)).collect();

    // Parameters: c x (d + 1), bias last.
    let p = d + 1;
    let mut rng = seed::rng(seed::derive_named(cfg.seed, "probe"));
    let mut w: Vec<f64> = (0..c * p).map(|_| rng.gen_range(-0.01..0.01)).collect();
    let (mut m, mut v) = (vec![0.0; c * p], vec![0.0; c * p]);
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let logits = |w: &[f64], x: &[f64]| -> Vec<f64> {
        (0..c).map(|k| w[k * p + d] + x.iter().enumerate().map(|(j, xj)| w[k * p + j] * xj).sum::<f64>()).collect()
    };
    let softmax = |z: Vec<f64>| -> Vec<f64> {
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ex: Vec<f64> = z.iter().map(|x| (x - max).exp()).collect();
        let s: f64 = ex.iter().sum();
        ex.into_iter().map(|x| x / s).collect()
    };
    let mut loss = f64::NAN;
    for epoch in 1..=cfg.epochs {
        let mut grad = vec![0.0; c * p];
        loss = 0.0;
        for (x, &i) in train_x.iter().zip(&split.train) {
            let prob = softmax(logits(&w, x));
            loss -= prob[labels[i]].max(f64::MIN_POSITIVE).ln() / n;
            for k in 0..c {
                let g = (prob[k] - f64::from(u8::from(k == labels[i]))) / n;
                for (j, xj) in x.iter().enumerate() {
                    grad[k * p + j] += g * xj;
                }
                grad[k * p + d] += g;
            }
        }
        if !loss.is_finite() {
            return Err(MetricsError::Divergence { epoch });
        }
        let t = epoch as i32;
        for q in 0..c * p {
            m[q] = b1 * m[q] + (1.0 - b1) * grad[q];
            v[q] = b2 * v[q] + (1.0 - b2) * grad[q] * grad[q];
            let mh = m[q] / (1.0 - b1.powi(t));
            let vh = v[q] / (1.0 - b2.powi(t));
            w[q] -= cfg.lr * mh / (vh.sqrt() + eps);
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(MetricsError::Divergence { epoch });
        }
    }
    let predict = |x: &[f64]| -> usize {
        let z = logits(&w, x);
        (0..c).fold(0, |best, k| if z[k] > z[best] { k } else { best })
    };
    let train_pred: Vec<usize> = train_x.iter().map(|x| predict(x)).collect();
    let test_pred: Vec<usize> = split.test.iter().map(|&i| predict(&feature(i))).collect();
    let truth = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
    Ok(ProbeResult {
        accuracy: accuracy(&test_pred, &truth(&split.test)),
        train_accuracy: accuracy(&train_pred, &truth(&split.train)),
        final_loss: loss,
    })
}
