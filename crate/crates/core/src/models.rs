//! Block models, step graphons and their graph root distributions.
//!
//! A step graphon with block values `B` and block measures `π` factorizes as
//! `B = X Xᵀ - Y Yᵀ` through the eigendecomposition of
//! `M = diag(π)^{1/2} B diag(π)^{1/2}`; the rows of `(X, Y)` are GRD atoms.
//! Degree-corrected models put mass on segments through these atoms and
//! mixed-membership models on their convex hull.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{GrdError, Result};
use crate::krein::{truncate_grd, truncate_prob, DiscreteGrd, KreinVector};
use crate::linalg;
use crate::spectral::{split_by_sign, SignedSpectrum};

/// Eigenvalues of the weighted block matrix below this magnitude are rank
/// deficiency.
pub const BLOCK_ZERO_EIGEN_TOL: f64 = 1e-12;

fn check_unit_interval_matrix(b: &DMatrix<f64>, what: &str) -> Result<()> {
    if b.nrows() == 0 || b.nrows() != b.ncols() {
        return Err(GrdError::DimensionMismatch(format!("{what} must be a nonempty square matrix")));
    }
    linalg::check_symmetric(b, 1e-12)?;
    if b.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(GrdError::InvalidParameter(format!("{what} entries must lie in [0, 1]")));
    }
    Ok(())
}

fn check_probability_vector(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() || p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(GrdError::InvalidWeights(format!("{what} must be a nonempty nonnegative vector")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > crate::krein::WEIGHT_SUM_TOL {
        return Err(GrdError::InvalidWeights(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

/// A `k × k` symmetric step function on `[0,1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGraphon {
    values: DMatrix<f64>,
    measures: Vec<f64>,
}

impl StepGraphon {
    /// Blocks must have positive measure.
    pub fn new(values: DMatrix<f64>, measures: Vec<f64>) -> Result<Self> {
        check_unit_interval_matrix(&values, "block values")?;
        check_probability_vector(&measures, "block measures")?;
        if measures.len() != values.nrows() {
            return Err(GrdError::DimensionMismatch(format!(
                "{} block measures for a {}x{} value matrix",
                measures.len(),
                values.nrows(),
                values.ncols()
            )));
        }
        if measures.iter().any(|&m| m <= 0.0) {
            return Err(GrdError::InvalidWeights("block measures must be positive".into()));
        }
        let s: f64 = measures.iter().sum();
        Ok(Self { values, measures: measures.into_iter().map(|m| m / s).collect() })
    }

    pub fn constant(q: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, q), vec![1.0])
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn blocks(&self) -> usize {
        self.measures.len()
    }

    /// Right endpoints of the blocks.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out: Vec<f64> = self
            .measures
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        if let Some(last) = out.last_mut() {
            *last = 1.0;
        }
        out
    }

    /// Block containing `s`; blocks are `[c_{i-1}, c_i)` and `1` belongs to
    /// the last block.
    pub fn block_of(&self, s: f64) -> usize {
        let cum = self.cumulative();
        cum.iter().position(|&c| s < c).unwrap_or(cum.len() - 1)
    }

    /// `W(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        graphon_eval(self, s, t)
    }
}

/// `W(s, t)` for `s, t` in `[0, 1]`.
pub fn graphon_eval(w: &StepGraphon, s: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
        return Err(GrdError::InvalidParameter(format!("({s}, {t}) lies outside [0,1]²")));
    }
    Ok(w.values[(w.block_of(s), w.block_of(t))])
}

/// Block boundaries closer than this are treated as equal.
pub const BREAKPOINT_TOL: f64 = 1e-12;

/// Common refinement of two block partitions of `[0,1]`: cell measures and,
/// per cell, the block index in each input. Zero-width cells are dropped.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub measures: Vec<f64>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

pub fn refine(w1: &StepGraphon, w2: &StepGraphon) -> Refinement {
    let c1 = w1.cumulative();
    let c2 = w2.cumulative();
    let (mut i, mut j) = (0, 0);
    let mut prev = 0.0;
    let mut out = Refinement { measures: Vec::new(), left: Vec::new(), right: Vec::new() };
    while i < c1.len() && j < c2.len() {
        let end = c1[i].min(c2[j]);
        if end > prev {
            out.measures.push(end - prev);
            out.left.push(i);
            out.right.push(j);
        }
        prev = end;
        // advance whichever breakpoint was hit; both on a tie, so rounding in
        // the cumulative sums cannot create sliver cells
        let (hit1, hit2) = (c1[i] <= end + BREAKPOINT_TOL, c2[j] <= end + BREAKPOINT_TOL);
        if hit1 {
            i += 1;
        }
        if hit2 {
            j += 1;
        }
    }
    out
}

/// `‖W1 - W2‖_{L²([0,1]²)}` on the common refinement.
pub fn graphon_l2_distance(w1: &StepGraphon, w2: &StepGraphon) -> f64 {
    let r = refine(w1, w2);
    let k = r.measures.len();
    let mut acc = 0.0;
    for a in 0..k {
        for b in 0..k {
            let d = w1.values[(r.left[a], r.left[b])] - w2.values[(r.right[a], r.right[b])];
            acc += r.measures[a] * r.measures[b] * d * d;
        }
    }
    acc.sqrt()
}

/// The step graphon `T(<z_i, z_j>_K)` with one block per atom, block measures
/// equal to the atom weights. Zero-weight atoms are dropped.
pub fn grd_graphon(f: &DiscreteGrd) -> Result<StepGraphon> {
    let keep: Vec<usize> = (0..f.len()).filter(|&i| f.weights()[i] > 0.0).collect();
    let atoms = f.atoms();
    let values = DMatrix::from_fn(keep.len(), keep.len(), |a, b| {
        truncate_prob(atoms[keep[a]].inner(&atoms[keep[b]]))
    });
    StepGraphon::new(values, keep.iter().map(|&i| f.weights()[i]).collect())
}

/// Factor `B = X Xᵀ - Y Yᵀ` through the eigendecomposition of
/// `S^{1/2} B S^{1/2}` for a symmetric positive definite weighting `S`.
///
/// Vertex `k` gets coordinates `sqrt(λ_j) c_j[k]` with `c_j = S^{-1/2} u_j`,
/// so that `Σ_kl S_kl z_k z_lᵀ` is diagonal in both blocks. Repeated
/// eigenvalues take the lexicographic Gram-Schmidt basis, and each coordinate
/// is signed so its largest-magnitude vertex value is nonnegative (ties to the
/// lower vertex index).
fn factorize_weighted(b: &DMatrix<f64>, s_half: &DMatrix<f64>, s_inv_half: &DMatrix<f64>) -> Result<(Vec<KreinVector>, SignedSpectrum)> {
    let m = s_half * b * s_half;
    let m = (&m + m.transpose()) * 0.5;
    let (vals, mut vecs) = linalg::sym_eigen(&m)?;
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    linalg::resolve_degenerate(&vals, &mut vecs, 1e-9 * scale.max(f64::MIN_POSITIVE));
    let mut spec = split_by_sign(&vals, &vecs, BLOCK_ZERO_EIGEN_TOL);

    let k = b.nrows();
    let mut x = s_inv_half * &spec.pos_vecs;
    let mut y = s_inv_half * &spec.neg_vecs;
    for (j, l) in spec.pos_vals.iter().enumerate() {
        x.column_mut(j).scale_mut(l.sqrt());
        if linalg::fix_column_sign(&mut x, j) {
            spec.pos_vecs.column_mut(j).neg_mut();
        }
    }
    for (j, g) in spec.neg_vals.iter().enumerate() {
        y.column_mut(j).scale_mut(g.sqrt());
        if linalg::fix_column_sign(&mut y, j) {
            spec.neg_vecs.column_mut(j).neg_mut();
        }
    }
    let atoms = (0..k)
        .map(|i| {
            KreinVector::new(
                x.row(i).iter().copied().collect(),
                y.row(i).iter().copied().collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((atoms, spec))
}

fn diag_weighting(measures: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let half = DVector::from_iterator(measures.len(), measures.iter().map(|m| m.sqrt()));
    let inv = half.map(|v| 1.0 / v);
    (DMatrix::from_diagonal(&half), DMatrix::from_diagonal(&inv))
}

/// Canonical GRD of a step graphon: one atom per block, weight equal to the
/// block measure, coordinates from the eigendecomposition of
/// `diag(π)^{1/2} W diag(π)^{1/2}`. Also returns that signed spectrum.
///
/// The atoms reproduce the block values exactly through their Kreĭn inner
/// products, and the weighted second moments are diagonal in both blocks with
/// vanishing cross moments.
pub fn spectral_factorize(w: &StepGraphon) -> Result<(DiscreteGrd, SignedSpectrum)> {
    let (half, inv) = diag_weighting(&w.measures);
    let (atoms, spec) = factorize_weighted(&w.values, &half, &inv)?;
    Ok((DiscreteGrd::new(atoms, w.measures.clone())?, spec))
}

/// Stochastic block model `(π, B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    pub pi: Vec<f64>,
    pub b: DMatrix<f64>,
}

impl SbmSpec {
    pub fn new(pi: Vec<f64>, b: DMatrix<f64>) -> Result<Self> {
        check_unit_interval_matrix(&b, "B")?;
        check_probability_vector(&pi, "pi")?;
        if pi.len() != b.nrows() {
            return Err(GrdError::DimensionMismatch(format!("pi has {} entries, B is {}x{}", pi.len(), b.nrows(), b.ncols())));
        }
        Ok(Self { pi, b })
    }

    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn graphon(&self) -> Result<StepGraphon> {
        StepGraphon::new(self.b.clone(), self.pi.clone())
    }

    /// The canonical (π-weighted) GRD; see [`spectral_factorize`].
    pub fn canonical_grd(&self) -> Result<DiscreteGrd> {
        Ok(spectral_factorize(&self.graphon()?)?.0)
    }

    /// Vertex locations determined by `B` alone: the factorization of `B`
    /// under equal block weights.
    pub fn block_atoms(&self) -> Result<Vec<KreinVector>> {
        let k = self.k();
        let w = StepGraphon::new(self.b.clone(), vec![1.0 / k as f64; k])?;
        Ok(spectral_factorize(&w)?.0.atoms().to_vec())
    }
}

/// Point-mass GRD of an SBM: atoms located by `B` alone (the rows of
/// `V |Λ|^{1/2}` for the eigendecomposition `B = V Λ Vᵀ`), weights `π`.
///
/// This is the representation whose atoms for `π = (0.3, 0.3, 0.4)`,
/// `B = 1/4 + 1/4·1(i≠j)` read `(0.65; 0.41, 0)`, `(0.65; -0.20, ∓0.35)`,
/// `(0.65; -0.20, ±0.35)`. When `π` is not uniform it differs from the
/// canonical [`SbmSpec::canonical_grd`] by a Kreĭn isometry that is not a
/// blockwise rotation; both produce the same random graph.
pub fn grd_from_sbm(spec: &SbmSpec) -> Result<DiscreteGrd> {
    DiscreteGrd::new(spec.block_atoms()?, spec.pi.clone())
}

/// Distribution of the degree parameter `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Theta {
    Uniform { lo: f64, hi: f64 },
    PointMass(f64),
}

impl Theta {
    pub fn support_max(&self) -> f64 {
        match *self {
            Theta::Uniform { hi, .. } => hi,
            Theta::PointMass(v) => v,
        }
    }

    pub fn support_min(&self) -> f64 {
        match *self {
            Theta::Uniform { lo, .. } => lo,
            Theta::PointMass(v) => v,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Theta::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Theta::PointMass(v) => v,
        }
    }
}

/// Degree-corrected block model `(π, B, Θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DcbmSpec {
    pub sbm: SbmSpec,
    pub theta: Theta,
}

impl DcbmSpec {
    pub fn new(sbm: SbmSpec, theta: Theta) -> Result<Self> {
        let (lo, hi) = (theta.support_min(), theta.support_max());
        let ok = match theta {
            Theta::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi,
            Theta::PointMass(v) => v.is_finite() && v > 0.0,
        };
        if !ok {
            return Err(GrdError::InvalidParameter(format!("theta support [{lo}, {hi}] is not a valid subset of (0, ∞)")));
        }
        let bmax = sbm.b.iter().fold(0.0f64, |a, v| a.max(*v));
        if hi * hi * bmax > 1.0 + 1e-12 {
            return Err(GrdError::InvalidParameter(format!(
                "theta up to {hi} with max(B) = {bmax} gives edge probability {} > 1",
                hi * hi * bmax
            )));
        }
        Ok(Self { sbm, theta })
    }

    /// Canonical GRD sampler: canonical SBM atoms scaled by `θ`. Scaling by
    /// an independent `θ` keeps the second moments diagonal.
    pub fn canonical_sampler(&self) -> Result<GrdSampler> {
        Ok(GrdSampler::DcbmSegments { vertices: self.sbm.canonical_grd()?, theta: self.theta })
    }
}

/// `Z = θ · z_e` with `e ~ π`, `θ ~ Θ` and `z_e` the atoms of
/// [`grd_from_sbm`].
pub fn grd_sampler_from_dcbm(spec: &DcbmSpec) -> Result<GrdSampler> {
    Ok(GrdSampler::DcbmSegments { vertices: grd_from_sbm(&spec.sbm)?, theta: spec.theta })
}

/// Mixed-membership block model `(B, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MmbmSpec {
    pub b: DMatrix<f64>,
    pub a: Vec<f64>,
}

impl MmbmSpec {
    pub fn new(b: DMatrix<f64>, a: Vec<f64>) -> Result<Self> {
        check_unit_interval_matrix(&b, "B")?;
        if a.len() != b.nrows() {
            return Err(GrdError::DimensionMismatch(format!("a has {} entries, B is {}x{}", a.len(), b.nrows(), b.ncols())));
        }
        if a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(GrdError::InvalidParameter("Dirichlet concentrations must be positive".into()));
        }
        Ok(Self { b, a })
    }

    /// `E[g gᵀ]` for `g ~ Dir(a)`.
    pub fn membership_second_moment(&self) -> DMatrix<f64> {
        let a0: f64 = self.a.iter().sum();
        let k = self.a.len();
        DMatrix::from_fn(k, k, |i, j| {
            let num = if i == j { self.a[i] * (self.a[i] + 1.0) } else { self.a[i] * self.a[j] };
            num / (a0 * (a0 + 1.0))
        })
    }

    /// Canonical sampler: vertices from the factorization weighted by the
    /// membership second moment, so that `Z = Σ g_k z_k` has diagonal second
    /// moments in both blocks and no cross moment.
    pub fn canonical_sampler(&self) -> Result<GrdSampler> {
        let s = self.membership_second_moment();
        let (vals, vecs) = linalg::sym_eigen(&s)?;
        let half = &vecs * DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|v| v.sqrt()))) * vecs.transpose();
        let inv = &vecs * DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|v| 1.0 / v.sqrt()))) * vecs.transpose();
        let (vertices, _) = factorize_weighted(&self.b, &half, &inv)?;
        Ok(GrdSampler::MmbmPolytope { vertices, alpha: self.a.clone() })
    }
}

/// `Z = Σ_k g_k z_k` with `g ~ Dir(a)` and vertices from
/// `spectral_factorize(B, pi_for_vertices)`.
pub fn grd_sampler_from_mmbm(spec: &MmbmSpec, pi_for_vertices: &[f64]) -> Result<GrdSampler> {
    let w = StepGraphon::new(spec.b.clone(), pi_for_vertices.to_vec())?;
    let (grd, _) = spectral_factorize(&w)?;
    Ok(GrdSampler::MmbmPolytope { vertices: grd.atoms().to_vec(), alpha: spec.a.clone() })
}

/// Source of i.i.d. draws from a GRD.
#[derive(Debug, Clone, PartialEq)]
pub enum GrdSampler {
    /// A finitely supported GRD.
    Discrete(DiscreteGrd),
    /// `θ · z_e`, `e` drawn from the vertex weights.
    DcbmSegments { vertices: DiscreteGrd, theta: Theta },
    /// `Σ g_k z_k`, `g ~ Dir(alpha)`.
    MmbmPolytope { vertices: Vec<KreinVector>, alpha: Vec<f64> },
}

/// One draw with the block it came from (when there is one).
#[derive(Debug, Clone, PartialEq)]
pub struct GrdDraw {
    pub z: KreinVector,
    pub label: Option<usize>,
    /// Mixing coefficients for polytope draws.
    pub membership: Option<Vec<f64>>,
    /// Degree parameter for segment draws.
    pub theta: Option<f64>,
}

fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // rounding: fall back to the last atom with positive weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// `g ~ Dir(alpha)` by normalized independent `Gamma(alpha_k, 1)` draws.
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("validated positive shape").sample(rng))
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.iter().map(|d| d / total).collect()
    } else {
        // every gamma underflowed (tiny shapes): put the mass on one vertex
        let k = alpha.len();
        let i = rng.sample(Uniform::new(0, k).expect("k >= 1"));
        (0..k).map(|j| if j == i { 1.0 } else { 0.0 }).collect()
    }
}

impl GrdSampler {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            GrdSampler::Discrete(f) => f.dims(),
            GrdSampler::DcbmSegments { vertices, .. } => vertices.dims(),
            GrdSampler::MmbmPolytope { vertices, .. } => vertices.first().map_or((0, 0), |v| v.dims()),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> GrdDraw {
        match self {
            GrdSampler::Discrete(f) => {
                let i = pick(f.weights(), rng);
                GrdDraw { z: f.atoms()[i].clone(), label: Some(i), membership: None, theta: None }
            }
            GrdSampler::DcbmSegments { vertices, theta } => {
                let i = pick(vertices.weights(), rng);
                let t = theta.sample(rng);
                GrdDraw { z: vertices.atoms()[i].scaled(t), label: Some(i), membership: None, theta: Some(t) }
            }
            GrdSampler::MmbmPolytope { vertices, alpha } => {
                let g = sample_dirichlet(alpha, rng);
                let (p1, p2) = self.dims();
                let mut z = KreinVector::zeros(p1, p2);
                for (gk, v) in g.iter().zip(vertices) {
                    z = v.axpy(*gk, &z);
                }
                GrdDraw { z, label: None, membership: Some(g), theta: None }
            }
        }
    }

    /// Empirical discretization from `count` draws of stream `seed`.
    pub fn reference_grd(&self, count: usize, seed: u64) -> Result<DiscreteGrd> {
        if let GrdSampler::Discrete(f) = self {
            return Ok(f.clone());
        }
        let draws = (0..count)
            .map(|i| {
                let mut rng = crate::rng::stream(seed, crate::rng::Domain::Reference, i as u64);
                self.draw(&mut rng).z
            })
            .collect();
        DiscreteGrd::uniform(draws)
    }
}

/// `W_{F_(N,N)}`: the truncated graphon of the first `N` positive and `N`
/// negative spectral components of `w`, on the same blocks.
pub fn truncated_graphon(w: &StepGraphon, n: usize) -> Result<StepGraphon> {
    let (f, _) = spectral_factorize(w)?;
    let (p1, p2) = f.dims();
    let t = truncate_grd(&f, n.min(p1), n.min(p2))?;
    grd_graphon(&t)
}

/// `max(p1, p2)` of the canonical factorization.
pub fn numerical_rank(w: &StepGraphon) -> Result<(usize, usize)> {
    Ok(spectral_factorize(w)?.0.dims())
}

/// JSON model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: MatrixInput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sbm,
    Dcbm,
    Mmbm,
}

/// `B` given either row-major flat (`k²` numbers) or as nested rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixInput {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaConfig {
    pub kind: ThetaKind,
    pub lo: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaKind {
    Uniform,
    Point,
}

/// A validated model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Sbm(SbmSpec),
    Dcbm(DcbmSpec),
    Mmbm(MmbmSpec),
}

fn cfg_err(path: &str, msg: impl Into<String>) -> GrdError {
    GrdError::Config { path: path.to_string(), msg: msg.into() }
}

impl MatrixInput {
    fn to_matrix(&self, path: &str) -> Result<DMatrix<f64>> {
        match self {
            MatrixInput::Flat(v) => {
                let k = (v.len() as f64).sqrt().round() as usize;
                if k == 0 || k * k != v.len() {
                    return Err(cfg_err(path, format!("{} entries is not a square count", v.len())));
                }
                Ok(DMatrix::from_row_slice(k, k, v))
            }
            MatrixInput::Rows(rows) => {
                let k = rows.len();
                if k == 0 {
                    return Err(cfg_err(path, "empty matrix"));
                }
                if let Some(r) = rows.iter().position(|r| r.len() != k) {
                    return Err(cfg_err(&format!("{path}[{r}]"), format!("row has {} entries, expected {k}", rows[r].len())));
                }
                Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
            }
        }
    }
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| cfg_err("$", e.to_string()))
    }

    pub fn validate(&self) -> Result<Model> {
        let b = self.b.to_matrix("B")?;
        let with_path = |path: &'static str| move |e: GrdError| match e {
            GrdError::Config { .. } => e,
            other => cfg_err(path, other.to_string()),
        };
        let sbm = |pi: &Option<Vec<f64>>| -> Result<SbmSpec> {
            let pi = pi.clone().ok_or_else(|| cfg_err("pi", "required for this model"))?;
            SbmSpec::new(pi, b.clone()).map_err(with_path("pi/B"))
        };
        match self.model {
            ModelKind::Sbm => {
                if self.theta.is_some() {
                    return Err(cfg_err("theta", "not used by model sbm"));
                }
                if self.a.is_some() {
                    return Err(cfg_err("a", "not used by model sbm"));
                }
                Ok(Model::Sbm(sbm(&self.pi)?))
            }
            ModelKind::Dcbm => {
                if self.a.is_some() {
                    return Err(cfg_err("a", "not used by model dcbm"));
                }
                let t = self.theta.as_ref().ok_or_else(|| cfg_err("theta", "required for model dcbm"))?;
                let theta = match t.kind {
                    ThetaKind::Uniform => Theta::Uniform {
                        lo: t.lo,
                        hi: t.hi.ok_or_else(|| cfg_err("theta.hi", "required for kind uniform"))?,
                    },
                    ThetaKind::Point => {
                        if let Some(hi) = t.hi {
                            if hi != t.lo {
                                return Err(cfg_err("theta.hi", "point mass needs hi == lo or no hi"));
                            }
                        }
                        Theta::PointMass(t.lo)
                    }
                };
                Ok(Model::Dcbm(DcbmSpec::new(sbm(&self.pi)?, theta).map_err(with_path("theta"))?))
            }
            ModelKind::Mmbm => {
                if self.theta.is_some() {
                    return Err(cfg_err("theta", "not used by model mmbm"));
                }
                let a = self.a.clone().ok_or_else(|| cfg_err("a", "required for model mmbm"))?;
                Ok(Model::Mmbm(MmbmSpec::new(b, a).map_err(with_path("a/B"))?))
            }
        }
    }
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Sbm(_) => "sbm",
            Model::Dcbm(_) => "dcbm",
            Model::Mmbm(_) => "mmbm",
        }
    }

    /// Sampler of the canonical GRD.
    pub fn canonical_sampler(&self) -> Result<GrdSampler> {
        match self {
            Model::Sbm(s) => Ok(GrdSampler::Discrete(s.canonical_grd()?)),
            Model::Dcbm(d) => d.canonical_sampler(),
            Model::Mmbm(m) => m.canonical_sampler(),
        }
    }

    /// Exact model GRD for display: the point masses for SBM, the segment
    /// endpoints or polytope vertices otherwise.
    pub fn exact_grd(&self) -> Result<DiscreteGrd> {
        match self {
            Model::Sbm(s) => s.canonical_grd(),
            Model::Dcbm(d) => d.sbm.canonical_grd(),
            Model::Mmbm(m) => match m.canonical_sampler()? {
                GrdSampler::MmbmPolytope { vertices, .. } => DiscreteGrd::uniform(vertices),
                _ => unreachable!("mmbm sampler is a polytope"),
            },
        }
    }
}

/// Parameters shared by the worked examples.
pub mod presets {
    use super::*;

    /// `π = (0.3, 0.3, 0.4)`, `B = 1/4 + 1/4 · 1(j ≠ j')`.
    pub fn sbm_example() -> SbmSpec {
        let b = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.25 } else { 0.5 });
        SbmSpec::new(vec![0.3, 0.3, 0.4], b).expect("valid preset")
    }

    /// Rank-two block matrix of the simulation study.
    pub fn simulation_b() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0.25, 0.5, 0.25, 0.5, 0.25, 0.25, 0.25, 0.25, 1.0 / 6.0])
    }

    pub fn simulation_sbm() -> SbmSpec {
        SbmSpec::new(vec![0.3, 0.3, 0.4], simulation_b()).expect("valid preset")
    }

    pub fn simulation_dcbm() -> DcbmSpec {
        DcbmSpec::new(simulation_sbm(), Theta::Uniform { lo: 0.7, hi: 1.4 }).expect("valid preset")
    }

    pub fn simulation_mmbm() -> MmbmSpec {
        MmbmSpec::new(simulation_b(), vec![0.5, 0.5, 0.5]).expect("valid preset")
    }
}
