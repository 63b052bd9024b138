//! Orthogonal Wasserstein distance by alternating minimization.
//!
//! With the rotation fixed the coupling is an exact transport problem; with
//! the coupling fixed, each block's rotation is taken from the orthogonal
//! Procrustes problem for the squared cost, `Q = U Vᵀ` from the SVD of the
//! coupling-weighted cross moment. The unsquared objective is re-evaluated
//! after every step and the best iterate is kept. The search is nonconvex,
//! so the value returned is an upper bound on `d_ow`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{wasserstein, TransportPlan};
use crate::error::{GrdError, Result};
use crate::krein::{canonicalize, DiscreteGrd, OrthogonalPair};
use crate::linalg;
use crate::rng::{stream, Domain};

pub const DEFAULT_RESTARTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OwOptions {
    /// Random orthogonal starting points in addition to the identity.
    pub restarts: usize,
    /// Stop when the relative decrease of the cost falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for OwOptions {
    fn default() -> Self {
        Self { restarts: DEFAULT_RESTARTS, tol: 1e-10, max_iter: 100, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct OwResult {
    /// Upper bound on `d_ow(F1, F2)`.
    pub value: f64,
    /// Rotation applied to `F2`.
    pub rotation: OrthogonalPair,
    /// Optimal coupling of `F1` and the rotated `F2`.
    pub plan: TransportPlan,
    /// Number of starting points tried.
    pub restarts_used: usize,
}

/// `orthogonal_wasserstein_with` with default options and the given number
/// of restarts and tolerance.
pub fn orthogonal_wasserstein(f1: &DiscreteGrd, f2: &DiscreteGrd, restarts: usize, tol: f64) -> Result<OwResult> {
    orthogonal_wasserstein_with(f1, f2, &OwOptions { restarts, tol, ..OwOptions::default() })
}

/// Best of the alternating search from the identity, from the rotation that
/// aligns the canonical forms of the two inputs, from every diagonal sign
/// matrix (alone and composed with that alignment) when there are at most
/// 16 of them, and from `restarts` Haar random rotations. Starts are
/// processed in parallel; the result is the first best start in a fixed
/// order and does not depend on scheduling.
pub fn orthogonal_wasserstein_with(f1: &DiscreteGrd, f2: &DiscreteGrd, opts: &OwOptions) -> Result<OwResult> {
    if opts.restarts == 0 {
        return Err(GrdError::InvalidParameter("restarts must be at least 1".into()));
    }
    if !(opts.tol >= 0.0) {
        return Err(GrdError::InvalidParameter(format!("tol = {} must be nonnegative", opts.tol)));
    }
    let (p1, p2) = (f1.dims().0.max(f2.dims().0), f1.dims().1.max(f2.dims().1));
    let g1 = f1.padded(p1, p2);
    let g2 = f2.padded(p1, p2);

    // moment alignment: if F2 = Q F1 with distinct moment eigenvalues, the
    // canonical forms agree up to coordinate signs, so Q = C1ᵀ S C2 for the
    // canonicalizing rotations C1, C2 and a diagonal sign matrix S
    let (_, c1, _) = canonicalize(&g1);
    let (_, c2, _) = canonicalize(&g2);
    let sign_count = if p1 + p2 <= 4 { 1u32 << (p1 + p2) } else { 1 };
    let mut starts = vec![OrthogonalPair::identity(p1, p2)];
    for mask in 0..sign_count {
        let sign = |k: usize| if mask >> k & 1 == 1 { -1.0 } else { 1.0 };
        let sp = DMatrix::from_fn(p1, p1, |r, c| if r == c { sign(r) } else { 0.0 });
        let sn = DMatrix::from_fn(p2, p2, |r, c| if r == c { sign(p1 + r) } else { 0.0 });
        if mask > 0 {
            starts.push(OrthogonalPair::new(sp.clone(), sn.clone())?);
        }
        let qp = c1.q_pos.transpose() * sp * &c2.q_pos;
        let qn = c1.q_neg.transpose() * sn * &c2.q_neg;
        starts.push(OrthogonalPair::new(qp, qn)?);
    }
    for r in 0..opts.restarts {
        let mut rng = stream(opts.seed, Domain::Restarts, r as u64);
        let qp = linalg::random_orthogonal(p1, &mut rng);
        let qn = linalg::random_orthogonal(p2, &mut rng);
        starts.push(OrthogonalPair::new(qp, qn)?);
    }

    let outcomes: Vec<Result<(f64, OrthogonalPair, TransportPlan)>> =
        starts.into_par_iter().map(|q| descend(&g1, &g2, q, opts)).collect();
    let restarts_used = outcomes.len();
    let mut best: Option<(f64, OrthogonalPair, TransportPlan)> = None;
    for o in outcomes {
        let o = o?;
        if best.as_ref().is_none_or(|b| o.0 < b.0) {
            best = Some(o);
        }
    }
    let (value, rotation, plan) = best.expect("at least one start");
    Ok(OwResult { value, rotation, plan, restarts_used })
}

fn descend(f1: &DiscreteGrd, f2: &DiscreteGrd, start: OrthogonalPair, opts: &OwOptions) -> Result<(f64, OrthogonalPair, TransportPlan)> {
    let (p1, p2) = f1.dims();
    let mut q = start;
    let mut plan = wasserstein(f1, &f2.rotated(&q))?;
    let mut best = (plan.cost, q.clone(), plan.clone());
    for _ in 0..opts.max_iter {
        let mut cp = DMatrix::<f64>::zeros(p1, p1);
        let mut cn = DMatrix::<f64>::zeros(p2, p2);
        for &(i, j, mass) in &plan.entries {
            let (z1, z2) = (&f1.atoms()[i], &f2.atoms()[j]);
            for r in 0..p1 {
                for c in 0..p1 {
                    cp[(r, c)] += mass * z1.pos()[r] * z2.pos()[c];
                }
            }
            for r in 0..p2 {
                for c in 0..p2 {
                    cn[(r, c)] += mass * z1.neg()[r] * z2.neg()[c];
                }
            }
        }
        // argmax tr(Qᵀ C) = argmin Σ ν ‖z1 - Q z2‖²
        q = OrthogonalPair::new(linalg::procrustes_rotation(&cp), linalg::procrustes_rotation(&cn))?;
        plan = wasserstein(f1, &f2.rotated(&q))?;
        let prev = best.0;
        if plan.cost < best.0 {
            best = (plan.cost, q.clone(), plan.clone());
        }
        if prev - best.0 <= opts.tol * prev.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(best)
}
