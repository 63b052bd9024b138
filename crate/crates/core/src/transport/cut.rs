//! Cut norm of step functions and the Wasserstein bound on cut distance.

use serde::Serialize;

use super::{fmt12, wasserstein};
use crate::error::{GrdError, Result};
use crate::krein::DiscreteGrd;
use crate::models::{refine, StepGraphon};

/// Exhaustive search is exponential in the number of blocks.
pub const MAX_CUT_BLOCKS: usize = 20;

/// Cut norm `sup_{S,S'} |∫_{S×S'} D|` of the step function with block values
/// `diff` (symmetric or not) on blocks of measure `measures`.
///
/// For step functions the supremum is attained on unions of blocks. For
/// each row set `S` the best column set takes every column whose partial sum
/// has the favourable sign, so only `2^k` row sets are enumerated (in Gray
/// code order, updating the partial sums one block at a time).
pub fn cut_norm_blocks(diff: &[Vec<f64>], measures: &[f64]) -> Result<f64> {
    let k = measures.len();
    if k > MAX_CUT_BLOCKS {
        return Err(GrdError::SizeLimit(format!("{k} blocks exceeds the exhaustive limit of {MAX_CUT_BLOCKS}")));
    }
    if diff.len() != k || diff.iter().any(|r| r.len() != k) {
        return Err(GrdError::DimensionMismatch("block matrix does not match the measures".into()));
    }
    // weighted[a][b] = μ_a μ_b D_ab
    let weighted: Vec<Vec<f64>> =
        (0..k).map(|a| (0..k).map(|b| measures[a] * measures[b] * diff[a][b]).collect()).collect();
    let mut col = vec![0.0f64; k];
    let mut best = 0.0f64;
    let mut in_set = vec![false; k];
    for step in 1u64..(1u64 << k) {
        let flip = step.trailing_zeros() as usize;
        let sign = if in_set[flip] { -1.0 } else { 1.0 };
        in_set[flip] = !in_set[flip];
        for (c, w) in col.iter_mut().zip(&weighted[flip]) {
            *c += sign * w;
        }
        let (pos, neg) = col.iter().fold((0.0, 0.0), |(p, n), &c| if c > 0.0 { (p + c, n) } else { (p, n - c) });
        best = best.max(pos).max(neg);
    }
    Ok(best)
}

/// `‖W1 - W2‖_□` under the identity alignment.
pub fn cut_norm_step(w1: &StepGraphon, w2: &StepGraphon) -> Result<f64> {
    let r = refine(w1, w2);
    let k = r.measures.len();
    if k > MAX_CUT_BLOCKS {
        return Err(GrdError::SizeLimit(format!("common refinement has {k} blocks, limit {MAX_CUT_BLOCKS}")));
    }
    let diff: Vec<Vec<f64>> = (0..k)
        .map(|a| (0..k).map(|b| w1.values()[(r.left[a], r.left[b])] - w2.values()[(r.right[a], r.right[b])]).collect())
        .collect();
    cut_norm_blocks(&diff, &r.measures)
}

/// Both sides of `‖W_{F1} - W_{F2}‖_□ ≤ (E_{F1}‖Z‖ + E_{F2}‖Z‖) d_w(F1, F2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    pub atoms_1: usize,
    pub atoms_2: usize,
}

impl CutBoundReport {
    pub const TOL: f64 = 1e-9;

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + Self::TOL
    }

    /// JSON with distances at 12 significant digits.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"lhs\":{},\"rhs\":{},\"margin\":{},\"atoms_1\":{},\"atoms_2\":{}}}",
            fmt12(self.lhs),
            fmt12(self.rhs),
            fmt12(self.margin),
            self.atoms_1,
            self.atoms_2
        )
    }
}

/// Evaluate the cut-norm bound with the two graphons aligned by an optimal
/// coupling: each support cell `(i, j)` of the plan becomes a block of
/// measure `ν_ij` on which `W_{F1}` takes the values `<z_i, z_i'>` and
/// `W_{F2}` the values `<z'_j, z'_j'>`. The inputs are expected to be valid
/// GRDs; inner products are used without truncation.
pub fn check_cut_bound(f1: &DiscreteGrd, f2: &DiscreteGrd) -> Result<CutBoundReport> {
    if f1.len() + f2.len() > MAX_CUT_BLOCKS {
        return Err(GrdError::SizeLimit(format!(
            "{} + {} atoms exceeds the limit of {MAX_CUT_BLOCKS}",
            f1.len(),
            f2.len()
        )));
    }
    let plan = wasserstein(f1, f2)?;
    let cells = &plan.entries;
    let measures: Vec<f64> = cells.iter().map(|c| c.2).collect();
    let (a1, a2) = (f1.atoms(), f2.atoms());
    let diff: Vec<Vec<f64>> = cells
        .iter()
        .map(|&(i, j, _)| cells.iter().map(|&(i2, j2, _)| a1[i].inner(&a1[i2]) - a2[j].inner(&a2[j2])).collect())
        .collect();
    let lhs = cut_norm_blocks(&diff, &measures)?;
    let rhs = (f1.mean_norm() + f2.mean_norm()) * plan.cost;
    Ok(CutBoundReport { lhs, rhs, margin: rhs - lhs, atoms_1: f1.len(), atoms_2: f2.len() })
}
