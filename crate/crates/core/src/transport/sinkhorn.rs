//! Entropic transport in the log domain.
//!
//! The plan `P_ij = exp((f_i + g_j - C_ij) / ε)` maximizes the entropic dual;
//! its transport cost exceeds the exact optimum by at most `ε log(m m')`.

use rayon::prelude::*;

use super::{CostMatrix, TransportPlan};
use crate::error::{GrdError, Result};
use crate::krein::DiscreteGrd;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    pub epsilon: f64,
    /// Stop when the L¹ column-marginal error drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl SinkhornOptions {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, tol: 1e-9, max_iter: 10_000 }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Entropic plan with default tolerance and iteration cap (10 000).
pub fn sinkhorn_wasserstein(f1: &DiscreteGrd, f2: &DiscreteGrd, epsilon: f64) -> Result<TransportPlan> {
    sinkhorn_with(f1, f2, &SinkhornOptions::new(epsilon))
}

pub fn sinkhorn_with(f1: &DiscreteGrd, f2: &DiscreteGrd, opts: &SinkhornOptions) -> Result<TransportPlan> {
    if !(opts.epsilon > 0.0 && opts.epsilon.is_finite()) {
        return Err(GrdError::InvalidParameter(format!("epsilon = {} must be positive", opts.epsilon)));
    }
    if f1.is_empty() || f2.is_empty() {
        return Err(GrdError::Empty("transport needs two nonempty distributions"));
    }
    let costs = CostMatrix::between(f1.atoms(), f2.atoms());
    let (a, b) = (f1.weights(), f2.weights());
    let (m, n) = (a.len(), b.len());
    let eps = opts.epsilon;
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0f64; m];
    let mut g = vec![0.0f64; n];

    let update_f = |g: &[f64], eps: f64| -> Vec<f64> {
        (0..m)
            .into_par_iter()
            .map(|i| {
                let row = costs.row(i);
                eps * log_a[i] - eps * log_sum_exp((0..n).map(|j| (g[j] - row[j]) / eps))
            })
            .collect()
    };
    let update_g = |f: &[f64], eps: f64| -> Vec<f64> {
        (0..n)
            .into_par_iter()
            .map(|j| eps * log_b[j] - eps * log_sum_exp((0..m).map(|i| (f[i] - costs.get(i, j)) / eps)))
            .collect()
    };
    let row_error = |f: &[f64], g: &[f64], eps: f64| -> f64 {
        (0..m)
            .into_par_iter()
            .map(|i| {
                let row = costs.row(i);
                let s: f64 = (0..n).map(|j| ((f[i] + g[j] - row[j]) / eps).exp()).sum();
                (s - a[i]).abs()
            })
            .sum()
    };

    // ε-scaling: solve a sequence of problems with geometrically decreasing
    // regularization, warm-starting the potentials; only the last stage has
    // to reach the tolerance
    let top = costs.max().max(eps);
    let mut stages = vec![eps];
    while stages.last().copied().unwrap_or(eps) * 2.0 < top {
        let next = stages.last().copied().unwrap_or(eps) * 2.0;
        stages.push(next);
    }
    stages.reverse();
    let last = stages.len() - 1;
    let mut iterations = 0;
    for (s, &stage_eps) in stages.iter().enumerate() {
        let stage_tol = if s == last { opts.tol } else { opts.tol.max(1e-4) };
        loop {
            if iterations == opts.max_iter {
                return Err(GrdError::NotConverged(opts.max_iter));
            }
            iterations += 1;
            f = update_f(&g, stage_eps);
            g = update_g(&f, stage_eps);
            // after the g-update columns are exact; measure the row error
            if row_error(&f, &g, stage_eps) < stage_tol {
                break;
            }
        }
    }
    let entries: Vec<(usize, usize, f64)> = (0..m)
        .flat_map(|i| {
            let (f, g, costs) = (&f, &g, &costs);
            (0..n).map(move |j| (i, j, ((f[i] + g[j] - costs.get(i, j)) / eps).exp()))
        })
        .collect();
    Ok(TransportPlan::from_entries(m, n, entries, &costs))
}
