//! Kreĭn-space vectors and finitely supported graph root distributions.
//!
//! A point of the Kreĭn space is a pair `(x, y)` of square-summable sequences
//! with the indefinite inner product `<x, x'> - <y, y'>` and the Hilbert norm
//! `sqrt(|x|² + |y|²)`. Only finite prefixes are stored; missing coordinates
//! are zero, so vectors of different lengths can be combined freely.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GrdError, Result};
use crate::linalg;

/// Tolerance on the weight sum accepted (and then renormalized) on
/// construction.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A point `(x; y)` with finitely many positive and negative coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct KreinVector {
    pos: Vec<f64>,
    neg: Vec<f64>,
}

impl KreinVector {
    pub fn new(pos: Vec<f64>, neg: Vec<f64>) -> Result<Self> {
        if pos.iter().chain(&neg).any(|v| !v.is_finite()) {
            return Err(GrdError::NonFinite("Kreĭn vector coordinate".into()));
        }
        Ok(Self { pos, neg })
    }

    /// Construct without the finiteness check; callers guarantee it.
    pub(crate) fn from_parts(pos: Vec<f64>, neg: Vec<f64>) -> Self {
        Self { pos, neg }
    }

    pub fn zeros(p1: usize, p2: usize) -> Self {
        Self { pos: vec![0.0; p1], neg: vec![0.0; p2] }
    }

    pub fn pos(&self) -> &[f64] {
        &self.pos
    }

    pub fn neg(&self) -> &[f64] {
        &self.neg
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.pos.len(), self.neg.len())
    }

    /// Squared Hilbert norm `|x|² + |y|²`.
    pub fn norm_sq(&self) -> f64 {
        self.pos.iter().chain(&self.neg).map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Kreĭn inner product; shorter blocks are zero-padded.
    pub fn inner(&self, other: &Self) -> f64 {
        krein_inner(self, other)
    }

    /// Hilbert distance `|self - other|`, zero-padding shorter blocks.
    pub fn distance(&self, other: &Self) -> f64 {
        (block_dist_sq(&self.pos, &other.pos) + block_dist_sq(&self.neg, &other.neg)).sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            pos: self.pos.iter().map(|v| a * v).collect(),
            neg: self.neg.iter().map(|v| a * v).collect(),
        }
    }

    /// `a * self + other`, padding to the larger dims.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let comb = |u: &[f64], v: &[f64]| -> Vec<f64> {
            let len = u.len().max(v.len());
            (0..len)
                .map(|k| a * u.get(k).copied().unwrap_or(0.0) + v.get(k).copied().unwrap_or(0.0))
                .collect()
        };
        Self { pos: comb(&self.pos, &other.pos), neg: comb(&self.neg, &other.neg) }
    }

    /// Resize to exactly `(p1, p2)` coordinates, padding with zeros or
    /// dropping the tail.
    pub fn resized(&self, p1: usize, p2: usize) -> Self {
        let fit = |v: &[f64], p: usize| -> Vec<f64> {
            (0..p).map(|k| v.get(k).copied().unwrap_or(0.0)).collect()
        };
        Self { pos: fit(&self.pos, p1), neg: fit(&self.neg, p2) }
    }
}

fn block_dist_sq(u: &[f64], v: &[f64]) -> f64 {
    let len = u.len().max(v.len());
    (0..len)
        .map(|k| {
            let d = u.get(k).copied().unwrap_or(0.0) - v.get(k).copied().unwrap_or(0.0);
            d * d
        })
        .sum()
}

fn dot_padded(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `<a, b>_K = <pos_a, pos_b> - <neg_a, neg_b>`.
pub fn krein_inner(a: &KreinVector, b: &KreinVector) -> f64 {
    dot_padded(&a.pos, &b.pos) - dot_padded(&a.neg, &b.neg)
}

/// Clamp to `[0, 1]`.
pub fn truncate_prob(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Pairwise Kreĭn inner products `G_ij = <z_i, z_j>_K`.
pub fn gram_matrix(points: &[KreinVector]) -> DMatrix<f64> {
    let m = points.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = krein_inner(&points[i], &points[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// A pair of orthogonal matrices acting blockwise: `(x, y) -> (Q₊x, Q₋y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalPair {
    pub q_pos: DMatrix<f64>,
    pub q_neg: DMatrix<f64>,
}

impl OrthogonalPair {
    pub const ORTHOGONALITY_TOL: f64 = 1e-10;

    pub fn new(q_pos: DMatrix<f64>, q_neg: DMatrix<f64>) -> Result<Self> {
        for (name, q) in [("positive", &q_pos), ("negative", &q_neg)] {
            if q.nrows() != q.ncols() {
                return Err(GrdError::DimensionMismatch(format!("{name} block is not square")));
            }
            let defect = linalg::orthogonality_defect(q);
            if defect > Self::ORTHOGONALITY_TOL {
                return Err(GrdError::InvalidParameter(format!(
                    "{name} block is not orthogonal (defect {defect:e})"
                )));
            }
        }
        Ok(Self { q_pos, q_neg })
    }

    pub fn identity(p1: usize, p2: usize) -> Self {
        Self { q_pos: DMatrix::identity(p1, p1), q_neg: DMatrix::identity(p2, p2) }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.q_pos.nrows(), self.q_neg.nrows())
    }

    pub fn transpose(&self) -> Self {
        Self { q_pos: self.q_pos.transpose(), q_neg: self.q_neg.transpose() }
    }

    /// Apply to a vector, which is first resized to the pair's dims.
    pub fn apply(&self, z: &KreinVector) -> KreinVector {
        let (p1, p2) = self.dims();
        let z = z.resized(p1, p2);
        let mul = |q: &DMatrix<f64>, v: &[f64]| -> Vec<f64> {
            (0..q.nrows()).map(|r| (0..q.ncols()).map(|c| q[(r, c)] * v[c]).sum()).collect()
        };
        KreinVector { pos: mul(&self.q_pos, &z.pos), neg: mul(&self.q_neg, &z.neg) }
    }
}

/// A finitely supported distribution on the Kreĭn space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGrd {
    atoms: Vec<KreinVector>,
    weights: Vec<f64>,
    p1: usize,
    p2: usize,
}

/// Weighted second moments of a discrete distribution.
#[derive(Debug, Clone)]
pub struct SecondMoments {
    /// `E[X Xᵀ]`
    pub pos: DMatrix<f64>,
    /// `E[Y Yᵀ]`
    pub neg: DMatrix<f64>,
    /// `E[X Yᵀ]`
    pub cross: DMatrix<f64>,
}

impl DiscreteGrd {
    /// Build from atoms and weights. All atoms must share the same dims.
    /// Weights summing to within `1e-9` of one are renormalized; anything
    /// else is rejected.
    pub fn new(atoms: Vec<KreinVector>, weights: Vec<f64>) -> Result<Self> {
        let first = atoms.first().ok_or(GrdError::Empty("GRD needs at least one atom"))?;
        let (p1, p2) = first.dims();
        if let Some(bad) = atoms.iter().position(|a| a.dims() != (p1, p2)) {
            return Err(GrdError::DimensionMismatch(format!(
                "atom {bad} has dims {:?}, expected ({p1}, {p2})",
                atoms[bad].dims()
            )));
        }
        if atoms.len() != weights.len() {
            return Err(GrdError::DimensionMismatch(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(GrdError::InvalidWeights("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(GrdError::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { atoms, weights, p1, p2 })
    }

    /// Atoms with dims forced to `(p1, p2)` by padding or truncation.
    pub fn from_padded(atoms: &[KreinVector], weights: Vec<f64>, p1: usize, p2: usize) -> Result<Self> {
        Self::new(atoms.iter().map(|a| a.resized(p1, p2)).collect(), weights)
    }

    /// Equal weight on each atom (an empirical distribution).
    pub fn uniform(atoms: Vec<KreinVector>) -> Result<Self> {
        let m = atoms.len();
        Self::new(atoms, vec![1.0 / m.max(1) as f64; m])
    }

    pub fn point_mass(z: KreinVector) -> Self {
        let (p1, p2) = z.dims();
        Self { atoms: vec![z], weights: vec![1.0], p1, p2 }
    }

    pub fn atoms(&self) -> &[KreinVector] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.p1, self.p2)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Whether every pair (including `i == j`) has `<z_i, z_j>_K` in
    /// `[-tol, 1 + tol]`.
    pub fn is_valid_grd(&self, tol: f64) -> bool {
        let m = self.atoms.len();
        (0..m).all(|i| {
            (i..m).all(|j| {
                let v = krein_inner(&self.atoms[i], &self.atoms[j]);
                v >= -tol && v <= 1.0 + tol
            })
        })
    }

    /// `E‖Z‖`.
    pub fn mean_norm(&self) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, w)| w * a.norm()).sum()
    }

    pub fn second_moments(&self) -> SecondMoments {
        let (p1, p2) = (self.p1, self.p2);
        let mut pos = DMatrix::zeros(p1, p1);
        let mut neg = DMatrix::zeros(p2, p2);
        let mut cross = DMatrix::zeros(p1, p2);
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            for r in 0..p1 {
                for c in 0..p1 {
                    pos[(r, c)] += w * a.pos[r] * a.pos[c];
                }
                for c in 0..p2 {
                    cross[(r, c)] += w * a.pos[r] * a.neg[c];
                }
            }
            for r in 0..p2 {
                for c in 0..p2 {
                    neg[(r, c)] += w * a.neg[r] * a.neg[c];
                }
            }
        }
        SecondMoments { pos, neg, cross }
    }

    /// Same distribution with every atom resized to `(p1, p2)`.
    pub fn padded(&self, p1: usize, p2: usize) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| a.resized(p1, p2)).collect(),
            weights: self.weights.clone(),
            p1,
            p2,
        }
    }

    /// Push forward through `(x, y) -> (Q₊x, Q₋y)`.
    pub fn rotated(&self, q: &OrthogonalPair) -> Self {
        let (p1, p2) = q.dims();
        Self {
            atoms: self.atoms.iter().map(|a| q.apply(a)).collect(),
            weights: self.weights.clone(),
            p1,
            p2,
        }
    }

    /// Distribution of `a * Z`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|z| z.scaled(a)).collect(),
            weights: self.weights.clone(),
            p1: self.p1,
            p2: self.p2,
        }
    }

    /// Flip the sign of chosen coordinates.
    pub fn with_signs(&self, pos_signs: &[f64], neg_signs: &[f64]) -> Self {
        let atoms = self
            .atoms
            .iter()
            .map(|a| KreinVector {
                pos: a.pos.iter().zip(pos_signs).map(|(v, s)| v * s).collect(),
                neg: a.neg.iter().zip(neg_signs).map(|(v, s)| v * s).collect(),
            })
            .collect();
        Self { atoms, weights: self.weights.clone(), p1: self.p1, p2: self.p2 }
    }
}

/// Diagnostics of [`canonicalize`].
#[derive(Debug, Clone)]
pub struct CanonicalReport {
    /// Diagonal of `E[X Xᵀ]` after rotation (nonincreasing).
    pub pos_moments: Vec<f64>,
    /// Diagonal of `E[Y Yᵀ]` after rotation (nonincreasing).
    pub neg_moments: Vec<f64>,
    /// `max |E[X_j Y_j']|` after rotation. Blockwise rotations cannot remove
    /// this in general, so it is reported rather than forced to zero.
    pub max_cross_moment: f64,
}

/// Rotate each block so its weighted second-moment matrix is diagonal with
/// nonincreasing diagonal.
///
/// Repeated moment eigenvalues get the Gram-Schmidt basis of the projected
/// standard basis vectors; then each coordinate is flipped so that its
/// largest-magnitude value over the atoms is nonnegative (ties to the lower
/// atom index). Returns the rotated distribution and the pair `Q` with
/// `canonical = Q · F`.
pub fn canonicalize(f: &DiscreteGrd) -> (DiscreteGrd, OrthogonalPair, CanonicalReport) {
    let moments = f.second_moments();
    let q_pos = block_rotation(&moments.pos);
    let q_neg = block_rotation(&moments.neg);
    let mut q = OrthogonalPair { q_pos, q_neg };
    let rotated = f.rotated(&q);

    // sign convention on the rotated coordinates
    let (p1, p2) = f.dims();
    for j in 0..p1 {
        let col = rotated.atoms.iter().map(|a| a.pos[j]);
        if let Some(i) = linalg::dominant_index(col) {
            if rotated.atoms[i].pos[j] < 0.0 {
                q.q_pos.row_mut(j).neg_mut();
            }
        }
    }
    for j in 0..p2 {
        let col = rotated.atoms.iter().map(|a| a.neg[j]);
        if let Some(i) = linalg::dominant_index(col) {
            if rotated.atoms[i].neg[j] < 0.0 {
                q.q_neg.row_mut(j).neg_mut();
            }
        }
    }
    let canonical = f.rotated(&q);
    let m = canonical.second_moments();
    let report = CanonicalReport {
        pos_moments: m.pos.diagonal().iter().copied().collect(),
        neg_moments: m.neg.diagonal().iter().copied().collect(),
        max_cross_moment: m.cross.iter().fold(0.0f64, |a, v| a.max(v.abs())),
    };
    (canonical, q, report)
}

/// Rows of the returned matrix are the moment eigenvectors in nonincreasing
/// eigenvalue order, so `Q x` gives the coordinates in that basis.
fn block_rotation(moment: &DMatrix<f64>) -> DMatrix<f64> {
    let d = moment.nrows();
    if d == 0 {
        return DMatrix::zeros(0, 0);
    }
    // sym_eigen cannot fail on finite small input; fall back to identity
    let Ok((vals, vecs)) = linalg::sym_eigen(moment) else {
        return DMatrix::identity(d, d);
    };
    // descending order
    let order: Vec<usize> = (0..d).rev().collect();
    let desc_vals: Vec<f64> = order.iter().map(|&k| vals[k]).collect();
    let mut desc_vecs = DMatrix::from_fn(d, d, |r, c| vecs[(r, order[c])]);
    let scale = desc_vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let neg: Vec<f64> = desc_vals.iter().map(|v| -v).collect();
    linalg::resolve_degenerate(&neg, &mut desc_vecs, 1e-10 * scale);
    desc_vecs.transpose()
}

/// Keep the first `p1` positive and `p2` negative coordinates.
pub fn truncate_grd(f: &DiscreteGrd, p1: usize, p2: usize) -> Result<DiscreteGrd> {
    let (d1, d2) = f.dims();
    if p1 > d1 || p2 > d2 {
        return Err(GrdError::DimensionOverflow { p1, p2, avail_pos: d1, avail_neg: d2 });
    }
    Ok(f.padded(p1, p2))
}

/// Format with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON sidecar stored next to a GRD CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrdSidecar {
    pub p1: usize,
    pub p2: usize,
    pub canonical: bool,
}

/// CSV header `weight,x1..xp1,y1..yp2`.
pub fn grd_csv_header(p1: usize, p2: usize) -> String {
    let mut h = String::from("weight");
    for j in 1..=p1 {
        let _ = write!(h, ",x{j}");
    }
    for j in 1..=p2 {
        let _ = write!(h, ",y{j}");
    }
    h
}

impl DiscreteGrd {
    pub fn to_csv_string(&self) -> String {
        let mut out = grd_csv_header(self.p1, self.p2);
        out.push('\n');
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            out.push_str(&fmt17(*w));
            for v in a.pos.iter().chain(&a.neg) {
                out.push(',');
                out.push_str(&fmt17(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Parse the CSV form; `sidecar` supplies the block split.
    pub fn from_csv_str(text: &str, sidecar: &GrdSidecar) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(GrdError::Empty("GRD CSV has no header"))?;
        let expected = grd_csv_header(sidecar.p1, sidecar.p2);
        if header.trim() != expected {
            return Err(GrdError::Parse {
                line: 1,
                msg: format!("expected header `{expected}`, found `{}`", header.trim()),
            });
        }
        let width = 1 + sidecar.p1 + sidecar.p2;
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for (idx, line) in lines {
            let vals: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| GrdError::Parse { line: idx + 1, msg: e.to_string() })?;
            if vals.len() != width {
                return Err(GrdError::Parse {
                    line: idx + 1,
                    msg: format!("expected {width} fields, found {}", vals.len()),
                });
            }
            weights.push(vals[0]);
            atoms.push(KreinVector::new(
                vals[1..=sidecar.p1].to_vec(),
                vals[1 + sidecar.p1..].to_vec(),
            )?);
        }
        Self::new(atoms, weights)
    }

    /// Write `path` (CSV) and its sidecar (`path` with extension `json`).
    pub fn write_files(&self, path: &Path, canonical: bool) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        let sidecar = GrdSidecar { p1: self.p1, p2: self.p2, canonical };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn read_files(path: &Path) -> Result<(Self, GrdSidecar)> {
        let sidecar: GrdSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        let grd = Self::from_csv_str(&std::fs::read_to_string(path)?, &sidecar)?;
        Ok((grd, sidecar))
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}
