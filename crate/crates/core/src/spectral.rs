//! Spectral minimizer of the spectral contrastive loss.
//!
//! Over PAG vertices the minimizer is the top eigenspace of the normalized
//! similarity `M = D^{-1/2} W D^{-1/2}`. For graphs outside the PAG (natural
//! samples, fresh augmentations) a linear map over Weisfeiler-Lehman colour
//! counts is fitted to minimize the same loss; with one-hot features it
//! reduces to the vertex embedding.

use std::collections::HashMap;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::AttributedGraph;
use crate::pag::PopulationAugmentationGraph;
use crate::seed;
use crate::wl::wl_colours;

/// Above this many vertices the block iterative solver replaces the dense one.
pub const DENSE_LIMIT: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 5000;
const START_SEED: u64 = 0x005e_ed0f_b10c;
const BINARY_MAGIC: &[u8; 8] = b"GCLEMB01";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("empty input")]
    Empty,
    #[error("all similarity weights are zero")]
    ZeroWeights,
    #[error("invalid weight {w} on ({a}, {b})")]
    InvalidWeight { a: usize, b: usize, w: f64 },
    #[error("k = {k} exceeds {n} vertices")]
    TooManyComponents { k: usize, n: usize },
    #[error("tolerance must be positive")]
    InvalidTolerance,
    #[error("no convergence after {iterations} iterations, residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("empty pair list")]
    EmptyPairs,
    #[error("pair ({0}, {1}) out of range")]
    PairOutOfRange(usize, usize),
    #[error("covariance is not positive definite")]
    Singular,
    #[error("malformed embedding file: {0}")]
    Format(String),
}

/// One real vector per row, with ids aligned to rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub ids: Vec<String>,
    pub dim: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(ids.len() * dim, data.len(), "embedding shape");
        Self { ids, dim, data }
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        Self::new(ids, dim, rows.iter().flatten().copied().collect())
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Right-multiplies every row by `q` (`dim x dim`).
    pub fn transform(&self, q: &DMatrix<f64>) -> Self {
        let rows: Vec<Vec<f64>> = (0..self.rows())
            .map(|i| {
                let r = DVector::from_column_slice(self.row(i));
                (q.transpose() * r).iter().copied().collect()
            })
            .collect();
        Self::from_rows(self.ids.clone(), &rows)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv_lite::Result {
        csv_lite::write(self, w)
    }

    /// Column-major `f64` blob after a 16-byte header: 8-byte magic, rows and
    /// columns as little-endian `u32`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.rows() as u32).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        for c in 0..self.dim {
            for r in 0..self.rows() {
                w.write_all(&self.data[r * self.dim + c].to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a blob written by `write_binary`; ids become row indices.
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, SpectralError> {
        let io = |e: std::io::Error| SpectralError::Format(e.to_string());
        let mut header = [0u8; 16];
        r.read_exact(&mut header).map_err(io)?;
        if &header[..8] != BINARY_MAGIC {
            return Err(SpectralError::Format("bad magic".into()));
        }
        let rows = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
        let cols = u32::from_le_bytes(header[12..16].try_into().expect("4 bytes")) as usize;
        let mut data = vec![0.0; rows * cols];
        let mut buf = [0u8; 8];
        for c in 0..cols {
            for row in 0..rows {
                r.read_exact(&mut buf).map_err(io)?;
                data[row * cols + c] = f64::from_le_bytes(buf);
            }
        }
        Ok(Self::new((0..rows).map(|i| i.to_string()).collect(), cols, data))
    }
}

/// Plain CSV writer for embeddings: `vertex_id, x0, .., x{k-1}`.
mod csv_lite {
    use std::io::Write;

    pub type Result = std::io::Result<()>;

    pub fn write<W: Write>(e: &super::EmbeddingMatrix, mut w: W) -> Result {
        write!(w, "vertex_id")?;
        for c in 0..e.dim {
            write!(w, ",x{c}")?;
        }
        writeln!(w)?;
        for (i, id) in e.ids.iter().enumerate() {
            write!(w, "{id}")?;
            for x in e.row(i) {
                write!(w, ",{x:e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Normalized entries per row.
    Rows(Vec<Vec<(usize, f64)>>),
    /// `M = C^T C`; `rows[p]` holds row `p` of `C`, `cols[v]` column `v`.
    Factor { rows: Vec<Vec<(usize, f64)>>, cols: Vec<Vec<(usize, f64)>> },
}

/// The normalized similarity `D^{-1/2} W D^{-1/2}` as a symmetric operator.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSimilarity {
    n: usize,
    inv_sqrt_degree: Vec<f64>,
    /// Vertices with zero degree; their rows and columns are zero.
    pub zero_degree: Vec<usize>,
    repr: Repr,
}

fn inv_sqrt(d: f64) -> f64 {
    if d > 0.0 {
        1.0 / d.sqrt()
    } else {
        0.0
    }
}

/// Normalized similarity of a PAG, kept in the factored form `W = B^T B`.
pub fn normalized_similarity(pag: &PopulationAugmentationGraph) -> Result<NormalizedSimilarity, SpectralError> {
    let n = pag.len();
    if n == 0 {
        return Err(SpectralError::Empty);
    }
    let degree: Vec<f64> = (0..n).map(|v| pag.degree(v)).collect();
    if degree.iter().all(|&d| d == 0.0) {
        return Err(SpectralError::ZeroWeights);
    }
    let inv: Vec<f64> = degree.iter().map(|&d| inv_sqrt(d)).collect();
    let scale = 1.0 / (pag.natural_count as f64).sqrt();
    let rows: Vec<Vec<(usize, f64)>> =
        pag.parent_members().into_iter().map(|m| m.into_iter().map(|(v, p)| (v, p * scale * inv[v])).collect()).collect();
    let mut cols = vec![Vec::new(); n];
    for (p, row) in rows.iter().enumerate() {
        for &(v, c) in row {
            cols[v].push((p, c));
        }
    }
    Ok(NormalizedSimilarity {
        n,
        zero_degree: (0..n).filter(|&v| degree[v] == 0.0).collect(),
        inv_sqrt_degree: inv,
        repr: Repr::Factor { rows, cols },
    })
}

impl NormalizedSimilarity {
    /// From explicit symmetric weights `(a, b, w)`; each unordered pair once.
    pub fn from_weights(n: usize, weights: &[(usize, usize, f64)]) -> Result<Self, SpectralError> {
        if n == 0 {
            return Err(SpectralError::Empty);
        }
        let mut degree = vec![0.0; n];
        for &(a, b, w) in weights {
            if a >= n || b >= n || !w.is_finite() || w < 0.0 {
                return Err(SpectralError::InvalidWeight { a, b, w });
            }
            degree[a] += w;
            if a != b {
                degree[b] += w;
            }
        }
        if degree.iter().all(|&d| d == 0.0) {
            return Err(SpectralError::ZeroWeights);
        }
        let inv: Vec<f64> = degree.iter().map(|&d| inv_sqrt(d)).collect();
        let mut rows = vec![Vec::new(); n];
        for &(a, b, w) in weights {
            if w == 0.0 {
                continue;
            }
            let m = if degree[a] > 0.0 && degree[b] > 0.0 { w / (degree[a] * degree[b]).sqrt() } else { 0.0 };
            rows[a].push((b, m));
            if a != b {
                rows[b].push((a, m));
            }
        }
        for r in &mut rows {
            r.sort_by_key(|&(b, _)| b);
        }
        Ok(Self {
            n,
            zero_degree: (0..n).filter(|&v| degree[v] == 0.0).collect(),
            inv_sqrt_degree: inv,
            repr: Repr::Rows(rows),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn inv_sqrt_degree(&self) -> &[f64] {
        &self.inv_sqrt_degree
    }

    /// `M X` for an `n x b` block, summed in a fixed order.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let b = x.ncols();
        let gather = |entries: &Vec<(usize, f64)>, src: &DMatrix<f64>| -> Vec<f64> {
            let mut out = vec![0.0; b];
            for &(j, m) in entries {
                for (c, o) in out.iter_mut().enumerate() {
                    *o += m * src[(j, c)];
                }
            }
            out
        };
        let stack = |rows: Vec<Vec<f64>>| DMatrix::from_fn(rows.len(), b, |r, c| rows[r][c]);
        match &self.repr {
            Repr::Rows(rows) => stack(rows.par_iter().map(|r| gather(r, x)).collect()),
            Repr::Factor { rows, cols } => {
                let z = stack(rows.par_iter().map(|r| gather(r, x)).collect());
                stack(cols.par_iter().map(|c| gather(c, &z)).collect())
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        match &self.repr {
            Repr::Rows(rows) => {
                for (a, r) in rows.iter().enumerate() {
                    for &(b, v) in r {
                        m[(a, b)] = v;
                    }
                }
            }
            Repr::Factor { rows, .. } => {
                for r in rows {
                    for &(a, ca) in r {
                        for &(b, cb) in r {
                            m[(a, b)] += ca * cb;
                        }
                    }
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Dense,
    BlockPower { iterations: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    /// Rows are eigenvector entries scaled by `d_v^{-1/2}` (zero for
    /// zero-degree vertices).
    pub embedding: EmbeddingMatrix,
    /// Orthonormal eigenvectors, `n x k`, before row scaling.
    pub vectors: DMatrix<f64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub zero_degree: Vec<usize>,
    pub solver: Solver,
}

/// Top-`k` eigenpairs of a PAG's normalized similarity.
pub fn spectral_embed(pag: &PopulationAugmentationGraph, k: usize, tol: f64) -> Result<SpectralEmbedding, SpectralError> {
    let m = normalized_similarity(pag)?;
    let ids = pag.vertices.iter().map(|v| v.record.graph.id().to_string()).collect();
    spectral_embed_operator(&m, ids, k, tol)
}

pub fn spectral_embed_operator(
    m: &NormalizedSimilarity,
    ids: Vec<String>,
    k: usize,
    tol: f64,
) -> Result<SpectralEmbedding, SpectralError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(SpectralError::InvalidTolerance);
    }
    if k > m.len() {
        return Err(SpectralError::TooManyComponents { k, n: m.len() });
    }
    let (values, vectors, solver) = if m.len() <= DENSE_LIMIT { dense_top(m, k) } else { block_power(m, k, tol)? };
    let mv = m.apply(&vectors);
    let residuals: Vec<f64> = (0..k).map(|i| (mv.column(i) - vectors.column(i) * values[i]).norm()).collect();
    if let Some((_, &r)) = residuals.iter().enumerate().find(|&(i, &r)| r > tol * values[i].abs().max(1.0)) {
        let iterations = match solver {
            Solver::Dense => 0,
            Solver::BlockPower { iterations } => iterations,
        };
        return Err(SpectralError::NoConvergence { iterations, residual: r });
    }
    let n = m.len();
    let inv = m.inv_sqrt_degree();
    let data = (0..n).flat_map(|v| (0..k).map(move |c| (v, c))).map(|(v, c)| vectors[(v, c)] * inv[v]).collect();
    Ok(SpectralEmbedding {
        embedding: EmbeddingMatrix::new(ids, k, data),
        vectors,
        eigenvalues: values,
        residuals,
        zero_degree: m.zero_degree.clone(),
        solver,
    })
}

/// Eigenpairs sorted by descending eigenvalue, ties by original index.
fn sorted_eigen(matrix: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn dense_top(m: &NormalizedSimilarity, k: usize) -> (Vec<f64>, DMatrix<f64>, Solver) {
    let (values, vectors) = sorted_eigen(m.to_dense());
    (values[..k].to_vec(), vectors.columns(0, k).into_owned(), Solver::Dense)
}

fn orthonormalize(x: DMatrix<f64>) -> DMatrix<f64> {
    x.qr().q()
}

/// Subspace iteration on `(M + I) / 2`, which has the same eigenvectors and
/// a spectrum in `[0, 1]`, with a Rayleigh-Ritz projection each step.
fn block_power(m: &NormalizedSimilarity, k: usize, tol: f64) -> Result<(Vec<f64>, DMatrix<f64>, Solver), SpectralError> {
    let n = m.len();
    let b = (2 * k).max(k + 8).min(n);
    let mut rng = seed::rng(START_SEED);
    let mut x = orthonormalize(DMatrix::from_fn(n, b, |_, _| rng.gen_range(-1.0..1.0)));
    let mut worst = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let mx = m.apply(&x);
        let t = x.transpose() * &mx;
        let t = (&t + t.transpose()) * 0.5;
        let (values, u) = sorted_eigen(t);
        let v = &x * &u;
        let mv = &mx * &u;
        worst = (0..k)
            .map(|i| (mv.column(i) - v.column(i) * values[i]).norm() / values[i].abs().max(1.0))
            .fold(0.0, f64::max);
        if worst <= tol * 0.5 {
            return Ok((values[..k].to_vec(), v.columns(0, k).into_owned(), Solver::BlockPower { iterations: it }));
        }
        x = orthonormalize((mv + v) * 0.5);
    }
    Err(SpectralError::NoConvergence { iterations: MAX_ITERATIONS, residual: worst })
}

fn check_pairs(e: &EmbeddingMatrix, pairs: &[(usize, usize)]) -> Result<(), SpectralError> {
    if pairs.is_empty() {
        return Err(SpectralError::EmptyPairs);
    }
    match pairs.iter().find(|&&(a, b)| a >= e.rows() || b >= e.rows()) {
        Some(&(a, b)) => Err(SpectralError::PairOutOfRange(a, b)),
        None => Ok(()),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-2 E[f(g)^T f(g+)] + E[(f(g)^T f(g-))^2]` over the given pairs.
pub fn specloss(e: &EmbeddingMatrix, positive: &[(usize, usize)], negative: &[(usize, usize)]) -> Result<f64, SpectralError> {
    check_pairs(e, positive)?;
    check_pairs(e, negative)?;
    let pos = positive.iter().map(|&(a, b)| dot(e.row(a), e.row(b))).sum::<f64>() / positive.len() as f64;
    let neg = negative.iter().map(|&(a, b)| dot(e.row(a), e.row(b)).powi(2)).sum::<f64>() / negative.len() as f64;
    Ok(-2.0 * pos + neg)
}

/// Mean squared Euclidean distance over positive pairs.
pub fn alignment(e: &EmbeddingMatrix, positive: &[(usize, usize)]) -> Result<f64, SpectralError> {
    check_pairs(e, positive)?;
    let total: f64 = positive
        .iter()
        .map(|&(a, b)| e.row(a).iter().zip(e.row(b)).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
        .sum();
    Ok(total / positive.len() as f64)
}

/// Counts of Weisfeiler-Lehman colours from a fixed vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct WlFeatureMap {
    pub rounds: usize,
    pub colours: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl WlFeatureMap {
    /// Keeps the `max_features` most frequent colours over rounds
    /// `0..=rounds`, ties by colour value.
    pub fn fit<'a>(graphs: impl IntoIterator<Item = &'a AttributedGraph>, rounds: usize, max_features: usize) -> Self {
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for g in graphs {
            for round in wl_colours(g, rounds) {
                for c in round {
                    *counts.entry(c).or_insert(0) += 1;
                }
            }
        }
        let mut ranked: Vec<(u64, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let colours: Vec<u64> = ranked.into_iter().take(max_features).map(|(c, _)| c).collect();
        let index = colours.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Self { rounds, colours, index }
    }

    pub fn dim(&self) -> usize {
        self.colours.len()
    }

    pub fn features(&self, g: &AttributedGraph) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for round in wl_colours(g, self.rounds) {
            for c in round {
                if let Some(&i) = self.index.get(&c) {
                    out[i] += 1.0;
                }
            }
        }
        out
    }
}

/// Linear map `f(g) = A^T phi(g)` minimizing the spectral contrastive loss
/// over the PAG's positive-pair and marginal distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSpectral {
    pub map: WlFeatureMap,
    /// `features x k`.
    pub projection: DMatrix<f64>,
    /// Descending generalized eigenvalues.
    pub eigenvalues: Vec<f64>,
}

/// Relative ridge added to the feature covariance.
pub const DEFAULT_RIDGE: f64 = 1e-2;

/// Refinement rounds for the default feature map.
pub const DEFAULT_WL_ROUNDS: usize = 5;

/// Feature budget for the default feature map.
pub const DEFAULT_FEATURES: usize = 512;

/// Fits the linear minimizer. With `M+ = (1/N) sum_p m_p m_p^T` (`m_p` the
/// expected features of parent `p`'s augmentations) and the marginal second
/// moment `S`, the loss is `-2 tr(A^T M+ A) + ||A^T S A||_F^2`, minimized by
/// the top generalized eigenvectors of `(M+, S)` scaled by the square root of
/// their eigenvalues.
pub fn fit_linear_spectral(
    pag: &PopulationAugmentationGraph,
    map: WlFeatureMap,
    k: usize,
    ridge: f64,
) -> Result<LinearSpectral, SpectralError> {
    let phi: Vec<Vec<f64>> = pag.vertices.par_iter().map(|v| map.features(&v.graph)).collect();
    let (projection, eigenvalues) = fit_linear_features(pag, &phi, k, ridge)?;
    Ok(LinearSpectral { map, projection, eigenvalues })
}

/// The same fit for arbitrary per-vertex features `phi` (rows aligned with
/// PAG vertices). Returns the `features x k` projection and its eigenvalues.
pub fn fit_linear_features(
    pag: &PopulationAugmentationGraph,
    phi: &[Vec<f64>],
    k: usize,
    ridge: f64,
) -> Result<(DMatrix<f64>, Vec<f64>), SpectralError> {
    let f = phi.first().map_or(0, Vec::len);
    if pag.is_empty() || f == 0 {
        return Err(SpectralError::Empty);
    }
    if k > f {
        return Err(SpectralError::TooManyComponents { k, n: f });
    }
    let mut means = DMatrix::zeros(pag.natural_count, f);
    for (v, vert) in pag.vertices.iter().enumerate() {
        for &(p, q) in &vert.memberships {
            for (j, x) in phi[v].iter().enumerate() {
                means[(p, j)] += q * x;
            }
        }
    }
    let m_plus = means.transpose() * &means / pag.natural_count as f64;
    let weighted = DMatrix::from_fn(pag.len(), f, |v, j| phi[v][j] * pag.degree(v).sqrt());
    let mut second = weighted.transpose() * &weighted;
    let scale = second.trace() / f as f64;
    for j in 0..f {
        second[(j, j)] += ridge * scale.max(f64::MIN_POSITIVE);
    }
    let l_inv = second.cholesky().ok_or(SpectralError::Singular)?.l().try_inverse().ok_or(SpectralError::Singular)?;
    let s = &l_inv * m_plus * l_inv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let (values, u) = sorted_eigen(s);
    let mut projection = l_inv.transpose() * u.columns(0, k);
    for (c, &lambda) in values.iter().take(k).enumerate() {
        projection.column_mut(c).scale_mut(lambda.max(0.0).sqrt());
    }
    Ok((projection, values[..k].to_vec()))
}

impl LinearSpectral {
    pub fn dim(&self) -> usize {
        self.projection.ncols()
    }

    pub fn embed(&self, g: &AttributedGraph) -> Vec<f64> {
        let phi = DVector::from_vec(self.map.features(g));
        (self.projection.transpose() * phi).iter().copied().collect()
    }

    pub fn embed_all<'a>(&self, graphs: impl IntoParallelIterator<Item = &'a AttributedGraph>) -> EmbeddingMatrix {
        let (ids, rows): (Vec<String>, Vec<Vec<f64>>) =
            graphs.into_par_iter().map(|g| (g.id().to_string(), self.embed(g))).unzip();
        EmbeddingMatrix::new(ids, self.dim(), rows.into_iter().flatten().collect())
    }
}
