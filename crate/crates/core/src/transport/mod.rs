//! Transport distances between discrete GRDs.
//!
//! The ground cost is the Hilbert norm `‖z - z'‖` on the Kreĭn space (both
//! blocks Euclidean), so `d_w` is the 1-Wasserstein distance on the
//! isomorphic Hilbert space. Inputs of different dimensions are zero-padded.

mod cut;
mod exact;
mod ow;
mod sinkhorn;

pub use cut::{check_cut_bound, cut_norm_blocks, cut_norm_step, CutBoundReport, MAX_CUT_BLOCKS};
pub use exact::{solve_assignment, solve_transport};
pub use ow::{orthogonal_wasserstein, orthogonal_wasserstein_with, OwOptions, OwResult, DEFAULT_RESTARTS};
pub use sinkhorn::{sinkhorn_wasserstein, sinkhorn_with, SinkhornOptions};

use crate::error::{GrdError, Result};
use crate::krein::{DiscreteGrd, KreinVector};

/// Absolute slack, relative to the largest cost, allowed in the
/// complementary-slackness certificate.
pub const CERTIFICATE_TOL: f64 = 1e-8;

/// A coupling of two discrete distributions, stored by its support.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    /// `(i, j, mass)` with `mass > 0`, sorted by `(i, j)`.
    pub entries: Vec<(usize, usize, f64)>,
    pub cost: f64,
    /// Optimal dual potentials `(u, v)` when the solver produces them.
    pub duals: Option<(Vec<f64>, Vec<f64>)>,
}

impl TransportPlan {
    pub(crate) fn from_entries(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>, costs: &CostMatrix) -> Self {
        entries.retain(|e| e.2 > 0.0);
        entries.sort_by_key(|e| (e.0, e.1));
        let cost = entries.iter().map(|&(i, j, m)| m * costs.get(i, j)).sum();
        Self { rows, cols, entries, cost, duals: None }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for &(i, _, m) in &self.entries {
            s[i] += m;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for &(_, j, m) in &self.entries {
            s[j] += m;
        }
        s
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.rows, self.cols);
        for &(i, j, m) in &self.entries {
            d[(i, j)] += m;
        }
        d
    }
}

/// Row-major `m × m'` ground costs.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// `‖a_i - b_j‖` with zero padding.
    pub fn between(a: &[KreinVector], b: &[KreinVector]) -> Self {
        use rayon::prelude::*;
        let cols = b.len();
        let data: Vec<f64> = (0..a.len())
            .into_par_iter()
            .flat_map_iter(|i| b.iter().map(move |bj| a[i].distance(bj)))
            .collect();
        debug_assert_eq!(data.len(), a.len() * cols);
        Self { rows: a.len(), cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(*v))
    }
}

/// Verify primal feasibility and complementary slackness of `plan` against
/// its duals. Returns the worst violation (relative to the cost scale).
pub fn certify(plan: &TransportPlan, a: &[f64], b: &[f64], costs: &CostMatrix) -> Result<f64> {
    let (u, v) = plan
        .duals
        .as_ref()
        .ok_or_else(|| GrdError::Solver("plan carries no dual certificate".into()))?;
    let scale = costs.max().max(1.0);
    let mut worst = 0.0f64;
    for (s, t) in plan.row_sums().iter().zip(a) {
        worst = worst.max((s - t).abs());
    }
    for (s, t) in plan.col_sums().iter().zip(b) {
        worst = worst.max((s - t).abs());
    }
    // dual feasibility everywhere
    for (i, ui) in u.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            worst = worst.max((ui + vj - costs.get(i, j)) / scale);
        }
    }
    // tightness on the support
    for &(i, j, _) in &plan.entries {
        worst = worst.max((costs.get(i, j) - u[i] - v[j]).abs() / scale);
    }
    let dual_obj: f64 = u.iter().zip(a).map(|(x, w)| x * w).sum::<f64>() + v.iter().zip(b).map(|(x, w)| x * w).sum::<f64>();
    worst = worst.max((dual_obj - plan.cost).abs() / scale);
    Ok(worst)
}

fn is_uniform(w: &[f64]) -> bool {
    let target = 1.0 / w.len() as f64;
    w.iter().all(|x| (x - target).abs() <= 1e-12 * target)
}

fn leading_coordinate(z: &KreinVector) -> f64 {
    z.pos().first().or(z.neg().first()).copied().unwrap_or(0.0)
}

/// Exact optimal coupling of `f1` and `f2` for the cost `‖z - z'‖`.
///
/// Uniform inputs with equal atom counts are solved as a linear assignment;
/// everything else as a transportation problem by the network simplex
/// method. The returned plan carries optimal duals and has been certified.
pub fn wasserstein(f1: &DiscreteGrd, f2: &DiscreteGrd) -> Result<TransportPlan> {
    if f1.is_empty() || f2.is_empty() {
        return Err(GrdError::Empty("transport needs two nonempty distributions"));
    }
    let costs = CostMatrix::between(f1.atoms(), f2.atoms());
    wasserstein_with_costs(f1, f2, &costs)
}

pub(crate) fn wasserstein_with_costs(f1: &DiscreteGrd, f2: &DiscreteGrd, costs: &CostMatrix) -> Result<TransportPlan> {
    let (a, b) = (f1.weights(), f2.weights());
    let plan = if a.len() == b.len() && is_uniform(a) && is_uniform(b) {
        solve_assignment(costs)?
    } else {
        // sorting by the leading coordinate makes the north-west corner start
        // close to optimal for clouds that are spread along one axis
        let order = |atoms: &[KreinVector]| {
            let mut idx: Vec<usize> = (0..atoms.len()).collect();
            idx.sort_by(|&x, &y| leading_coordinate(&atoms[x]).total_cmp(&leading_coordinate(&atoms[y])));
            idx
        };
        solve_transport(a, b, costs, Some((&order(f1.atoms()), &order(f2.atoms()))))?
    };
    let worst = certify(&plan, a, b, costs)?;
    if worst > CERTIFICATE_TOL {
        return Err(GrdError::Solver(format!("optimality certificate violated by {worst:e}")));
    }
    Ok(plan)
}

/// `d_w(f1, f2)`.
pub fn wasserstein_distance(f1: &DiscreteGrd, f2: &DiscreteGrd) -> Result<f64> {
    Ok(wasserstein(f1, f2)?.cost)
}

/// Format with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}
