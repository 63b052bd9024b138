//! Truncated weighted spectral embedding of adjacency matrices.
//!
//! The adjacency matrix is split as `A = Σ λ̂_j â_j â_jᵀ - Σ γ̂_j b̂_j b̂_jᵀ`;
//! node `i` is embedded as `(λ̂_1^{1/2} â_{1i}, …; γ̂_1^{1/2} b̂_{1i}, …)`
//! using the top `p₁` positive and `p₂` negative components.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{GrdError, Result};
use crate::krein::{fmt17, DiscreteGrd, KreinVector};
use crate::linalg;
use crate::sampling::AdjacencyMatrix;

/// Relative cutoff (times the operator norm) under which an eigenvalue of an
/// adjacency matrix counts as zero.
pub const ZERO_EIGEN_RTOL: f64 = 1e-12;

/// Eigenvalues split by sign with paired orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SignedSpectrum {
    /// Positive eigenvalues, descending.
    pub pos_vals: Vec<f64>,
    /// Magnitudes of the negative eigenvalues, descending.
    pub neg_vals: Vec<f64>,
    /// `n × pos_vals.len()`, column `j` pairs with `pos_vals[j]`.
    pub pos_vecs: DMatrix<f64>,
    /// `n × neg_vals.len()`.
    pub neg_vecs: DMatrix<f64>,
}

impl SignedSpectrum {
    pub fn dim(&self) -> usize {
        self.pos_vecs.nrows()
    }

    /// `Σ λ a aᵀ - Σ γ b bᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for (j, &l) in self.pos_vals.iter().enumerate() {
            let v = self.pos_vecs.column(j);
            out.ger(l, &v, &v, 1.0);
        }
        for (j, &g) in self.neg_vals.iter().enumerate() {
            let v = self.neg_vecs.column(j);
            out.ger(-g, &v, &v, 1.0);
        }
        out
    }

    /// `(abs_eigenvalue, is_positive)` sorted by magnitude descending; ties
    /// list the positive value first.
    pub fn scree(&self) -> Vec<(f64, bool)> {
        let mut all: Vec<(f64, bool)> = self
            .pos_vals
            .iter()
            .map(|&v| (v, true))
            .chain(self.neg_vals.iter().map(|&v| (v, false)))
            .collect();
        all.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
        all
    }

    /// Scree CSV: `rank,abs_eigenvalue,sign`.
    pub fn scree_csv(&self) -> String {
        let mut out = String::from("rank,abs_eigenvalue,sign\n");
        for (r, (v, positive)) in self.scree().into_iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", r + 1, fmt17(v), if positive { '+' } else { '-' });
        }
        out
    }
}

/// Split sorted eigenpairs by sign. Values with `|λ| <= cutoff` are dropped.
/// Each eigenvector is flipped so its largest-magnitude entry is
/// nonnegative (ties to the lower index).
pub(crate) fn split_by_sign(values: &[f64], vectors: &DMatrix<f64>, cutoff: f64) -> SignedSpectrum {
    let n = vectors.nrows();
    let pos_idx: Vec<usize> = (0..values.len()).rev().filter(|&k| values[k] > cutoff).collect();
    let neg_idx: Vec<usize> = (0..values.len()).filter(|&k| values[k] < -cutoff).collect();
    let mut pos_vecs = DMatrix::from_fn(n, pos_idx.len(), |r, c| vectors[(r, pos_idx[c])]);
    let mut neg_vecs = DMatrix::from_fn(n, neg_idx.len(), |r, c| vectors[(r, neg_idx[c])]);
    for c in 0..pos_idx.len() {
        linalg::fix_column_sign(&mut pos_vecs, c);
    }
    for c in 0..neg_idx.len() {
        linalg::fix_column_sign(&mut neg_vecs, c);
    }
    SignedSpectrum {
        pos_vals: pos_idx.iter().map(|&k| values[k]).collect(),
        neg_vals: neg_idx.iter().map(|&k| -values[k]).collect(),
        pos_vecs,
        neg_vecs,
    }
}

/// Full signed eigendecomposition of a symmetric matrix.
///
/// Eigenvalues with `|λ| < 1e-12 · ‖A‖_op` are treated as zero and left out
/// of both lists.
pub fn signed_eigendecompose(a: &DMatrix<f64>) -> Result<SignedSpectrum> {
    if a.nrows() == 0 {
        return Err(GrdError::Empty("matrix has no rows"));
    }
    linalg::check_symmetric(a, 1e-12)?;
    let (values, vectors) = linalg::sym_eigen(a)?;
    let op_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // the exact zero matrix has no nonzero eigenvalue at any cutoff
    let cutoff = if op_norm == 0.0 { 0.0 } else { ZERO_EIGEN_RTOL * op_norm };
    Ok(split_by_sign(&values, &vectors, cutoff))
}

/// Decompose an adjacency matrix.
pub fn decompose_adjacency(a: &AdjacencyMatrix) -> Result<SignedSpectrum> {
    signed_eigendecompose(&a.to_dense())
}

/// Node embedding in the Kreĭn space.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub rows: Vec<KreinVector>,
    pub dims: (usize, usize),
    /// Sparsity scale whose inverse square root was applied (1 if none).
    pub rho_used: f64,
}

impl Embedding {
    /// Empirical distribution putting `1/n` on each row.
    pub fn empirical_grd(&self) -> Result<DiscreteGrd> {
        DiscreteGrd::uniform(self.rows.clone())
    }

    /// Embedding CSV: `node_id,x1..xp1,y1..yp2`, optionally with a trailing
    /// `label` column.
    pub fn to_csv(&self, labels: Option<&[Option<String>]>) -> String {
        let (p1, p2) = self.dims;
        let mut out = String::from("node_id");
        for j in 1..=p1 {
            let _ = write!(out, ",x{j}");
        }
        for j in 1..=p2 {
            let _ = write!(out, ",y{j}");
        }
        if labels.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{i}");
            for v in row.pos().iter().chain(row.neg()) {
                out.push(',');
                out.push_str(&fmt17(*v));
            }
            if let Some(l) = labels {
                out.push(',');
                if let Some(Some(s)) = l.get(i) {
                    out.push_str(s);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Weighted embedding with the top `p1` positive and `p2` negative
/// components, every coordinate multiplied by `rho^{-1/2}`.
pub fn embed(spec: &SignedSpectrum, p1: usize, p2: usize, rho: f64) -> Result<Embedding> {
    if p1 > spec.pos_vals.len() || p2 > spec.neg_vals.len() {
        return Err(GrdError::DimensionOverflow {
            p1,
            p2,
            avail_pos: spec.pos_vals.len(),
            avail_neg: spec.neg_vals.len(),
        });
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(GrdError::InvalidParameter(format!("rho must lie in (0, 1], got {rho}")));
    }
    let scale = rho.powf(-0.5);
    let pos_w: Vec<f64> = spec.pos_vals[..p1].iter().map(|l| l.sqrt() * scale).collect();
    let neg_w: Vec<f64> = spec.neg_vals[..p2].iter().map(|g| g.sqrt() * scale).collect();
    let rows = (0..spec.dim())
        .map(|i| {
            KreinVector::from_parts(
                (0..p1).map(|j| pos_w[j] * spec.pos_vecs[(i, j)]).collect(),
                (0..p2).map(|j| neg_w[j] * spec.neg_vecs[(i, j)]).collect(),
            )
        })
        .collect();
    Ok(Embedding { rows, dims: (p1, p2), rho_used: rho })
}

/// Threshold rule for the embedding dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Keep components with `|eigenvalue| > c · sqrt(n)`.
    Dense { c: f64 },
    /// Keep components with `|eigenvalue| > 2.01 · sqrt(n ρ̂ (1 - ρ̂))`,
    /// `ρ̂` the observed edge density. An extension for sparse graphs.
    Sparse { density: f64 },
}

impl ThresholdMode {
    pub fn threshold(&self, n: usize) -> f64 {
        match *self {
            ThresholdMode::Dense { c } => c * (n as f64).sqrt(),
            ThresholdMode::Sparse { density } => 2.01 * (n as f64 * density * (1.0 - density)).sqrt(),
        }
    }
}

/// `(#{λ̂ > c√n}, #{γ̂ > c√n})`.
pub fn choose_dims(spec: &SignedSpectrum, n: usize, c: f64) -> Result<(usize, usize)> {
    if n == 0 || !(c > 0.0) {
        return Err(GrdError::InvalidParameter(format!("need n >= 1 and c > 0 (n={n}, c={c})")));
    }
    Ok(choose_dims_with(spec, n, ThresholdMode::Dense { c }))
}

pub fn choose_dims_with(spec: &SignedSpectrum, n: usize, mode: ThresholdMode) -> (usize, usize) {
    let t = mode.threshold(n);
    (
        spec.pos_vals.iter().filter(|&&v| v > t).count(),
        spec.neg_vals.iter().filter(|&&v| v > t).count(),
    )
}

/// Fitted polynomial eigen-decay diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenDecayProfile {
    /// Decay exponent: `|value_j| ≈ c j^{-alpha}`.
    pub alpha_hat: f64,
    /// Gap exponent: `|value_j| - |value_{j+1}| ≈ c j^{-beta}`; `None` when
    /// fewer than two positive gaps are available.
    pub beta_hat: Option<f64>,
    /// Ranks `1..=ranks_used` entered the fit.
    pub ranks_used: usize,
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Fit decay exponents to a sequence of magnitudes sorted descending, using
/// at most `max_rank` leading values above `floor`.
pub fn fit_decay(values: &[f64], max_rank: usize, floor: f64) -> Result<EigenDecayProfile> {
    let used: Vec<f64> = values.iter().copied().take(max_rank).take_while(|&v| v > floor).collect();
    if used.len() < 3 {
        return Err(GrdError::FitUnavailable(format!(
            "{} values above the floor {floor}, need at least 3",
            used.len()
        )));
    }
    let log_rank: Vec<f64> = (1..=used.len()).map(|j| (j as f64).ln()).collect();
    let log_val: Vec<f64> = used.iter().map(|v| v.ln()).collect();
    let alpha_hat = -ls_slope(&log_rank, &log_val);

    let mut gx = Vec::new();
    let mut gy = Vec::new();
    for j in 0..used.len() - 1 {
        let gap = used[j] - used[j + 1];
        if gap > 0.0 {
            gx.push(((j + 1) as f64).ln());
            gy.push(gap.ln());
        }
    }
    let beta_hat = (gx.len() >= 2).then(|| -ls_slope(&gx, &gy));
    Ok(EigenDecayProfile { alpha_hat, beta_hat, ranks_used: used.len() })
}

/// Fit on the merged absolute spectrum of an `n × n` adjacency matrix,
/// restricted to values above the `√n` noise floor.
pub fn fit_decay_profile(spec: &SignedSpectrum, max_rank: usize) -> Result<EigenDecayProfile> {
    let n = spec.dim();
    let mags: Vec<f64> = spec.scree().into_iter().map(|(v, _)| v).collect();
    fit_decay(&mags, max_rank, (n as f64).sqrt())
}

/// `2 · edges / (n (n - 1))`.
pub fn estimate_density(a: &AdjacencyMatrix) -> Result<f64> {
    let n = a.n();
    if n < 2 {
        return Err(GrdError::InvalidParameter(format!("density needs n >= 2, got {n}")));
    }
    Ok(2.0 * a.edge_count() as f64 / (n as f64 * (n as f64 - 1.0)))
}

/// `‖A - gram(rows)‖_F` including the diagonal.
pub fn frobenius_residual(a: &DMatrix<f64>, emb: &Embedding) -> f64 {
    let g = crate::krein::gram_matrix(&emb.rows);
    (a - g).norm()
}
