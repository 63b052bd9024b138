//! Exact solvers: shortest-augmenting-path assignment and a network simplex
//! for the transportation problem.

use super::{CostMatrix, TransportPlan};
use crate::error::{GrdError, Result};

/// Optimal assignment for a square cost matrix, returned as a plan with mass
/// `1/m` per matched pair and dual potentials scaled to the transport dual.
pub fn solve_assignment(costs: &CostMatrix) -> Result<TransportPlan> {
    let m = costs.rows;
    if m == 0 || costs.cols != m {
        return Err(GrdError::DimensionMismatch(format!("assignment needs a square matrix, got {}x{}", m, costs.cols)));
    }
    // potentials and matching, 1-based with a virtual column 0
    let mut u = vec![0.0f64; m + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut col_match = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=m {
        col_match[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = col_match[j0];
            let row = costs.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            if !delta.is_finite() {
                return Err(GrdError::Solver("assignment costs must be finite".into()));
            }
            for j in 0..=m {
                if used[j] {
                    u[col_match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_match[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_match[j0] = col_match[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mass = 1.0 / m as f64;
    let entries = (1..=m).map(|j| (col_match[j] - 1, j - 1, mass)).collect();
    let mut plan = TransportPlan::from_entries(m, m, entries, costs);
    plan.duals = Some((u[1..].to_vec(), v[1..].to_vec()));
    Ok(plan)
}

/// Spanning-tree basis of the transportation problem. Nodes `0..m` are
/// sources, `m..m+n` sinks; every basic cell is an arc source → sink.
struct Basis {
    m: usize,
    cells: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<usize>>,
}

impl Basis {
    fn add(&mut self, i: usize, j: usize, flow: f64) {
        let id = self.cells.len();
        self.cells.push((i, j, flow));
        self.adj[i].push(id);
        self.adj[self.m + j].push(id);
    }

    fn replace(&mut self, leaving: usize, i: usize, j: usize, flow: f64) {
        let (li, lj, _) = self.cells[leaving];
        self.adj[li].retain(|&c| c != leaving);
        self.adj[self.m + lj].retain(|&c| c != leaving);
        self.cells[leaving] = (i, j, flow);
        self.adj[i].push(leaving);
        self.adj[self.m + j].push(leaving);
    }
}

/// Optimal coupling of weights `a` (rows) and `b` (columns) by the network
/// simplex method on the transportation tableau.
///
/// `order` optionally gives row and column orders for the north-west corner
/// starting basis. The plan carries the optimal potentials as duals.
pub fn solve_transport(a: &[f64], b: &[f64], costs: &CostMatrix, order: Option<(&[usize], &[usize])>) -> Result<TransportPlan> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(GrdError::Empty("transport needs nonempty marginals"));
    }
    if costs.rows != m || costs.cols != n {
        return Err(GrdError::DimensionMismatch(format!("{}x{} costs for {m}x{n} marginals", costs.rows, costs.cols)));
    }
    let identity = |k: usize| (0..k).collect::<Vec<_>>();
    let (ro, co) = match order {
        Some((r, c)) => (r.to_vec(), c.to_vec()),
        None => (identity(m), identity(n)),
    };

    // north-west corner: m + n - 1 basic cells forming a staircase tree
    let mut basis = Basis { m, cells: Vec::with_capacity(m + n - 1), adj: vec![Vec::new(); m + n] };
    let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
    let (mut p, mut q) = (0, 0);
    loop {
        let (i, j) = (ro[p], co[q]);
        let x = ra[i].min(rb[j]).max(0.0);
        basis.add(i, j, x);
        ra[i] -= x;
        rb[j] -= x;
        if p == m - 1 && q == n - 1 {
            break;
        }
        if p == m - 1 {
            q += 1;
        } else if q == n - 1 || ra[i] <= rb[j] {
            p += 1;
        } else {
            q += 1;
        }
    }

    let scale = costs.max().max(f64::MIN_POSITIVE);
    let eps = 1e-13 * scale;
    let nodes = m + n;
    let mut pot = vec![0.0f64; nodes];
    let mut parent_cell = vec![usize::MAX; nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut depth = vec![0usize; nodes];
    let mut stack = Vec::with_capacity(nodes);
    let block = ((m * n) as f64).sqrt().ceil().max(32.0) as usize;
    let mut cursor = 0usize;
    let total = m * n;
    let max_pivots = 1000 * (m + n) + 100_000;

    for _ in 0..max_pivots {
        // potentials u_i + v_j = c_ij on the tree, rooted at source 0;
        // sink potentials are stored negated: pot[m+j] = -v_j
        parent[0] = usize::MAX;
        parent_cell[0] = usize::MAX;
        depth[0] = 0;
        pot[0] = 0.0;
        let mut seen = vec![false; nodes];
        seen[0] = true;
        stack.clear();
        stack.push(0);
        while let Some(x) = stack.pop() {
            for &c in &basis.adj[x] {
                let (i, j, _) = basis.cells[c];
                let y = if x < m { m + j } else { i };
                if seen[y] {
                    continue;
                }
                seen[y] = true;
                parent[y] = x;
                parent_cell[y] = c;
                depth[y] = depth[x] + 1;
                pot[y] = if y >= m { -(costs.get(i, j) - pot[i]) } else { costs.get(i, j) + pot[m + j] };
                stack.push(y);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(GrdError::Solver("transport basis is not spanning".into()));
        }

        // block pricing: most negative reduced cost in the first block that
        // has one
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -eps;
        let mut scanned = 0;
        while scanned < total {
            let end = (scanned + block).min(total);
            for _ in scanned..end {
                let (i, j) = (cursor / n, cursor % n);
                let rc = costs.get(i, j) - pot[i] + pot[m + j];
                if rc < best {
                    best = rc;
                    entering = Some((i, j));
                }
                cursor += 1;
                if cursor == total {
                    cursor = 0;
                }
            }
            scanned = end;
            if entering.is_some() {
                break;
            }
        }
        let Some((ei, ej)) = entering else {
            let u = pot[..m].to_vec();
            let v = pot[m..].iter().map(|x| -x).collect();
            let entries = basis.cells.to_vec();
            let mut plan = TransportPlan::from_entries(m, n, entries, costs);
            plan.duals = Some((u, v));
            return Ok(plan);
        };

        // cycle: entering arc (+), then the tree path from sink ej back to
        // source ei with alternating signs starting with (-)
        let (mut x, mut y) = (m + ej, ei);
        let mut from_sink = Vec::new();
        let mut from_source = Vec::new();
        while x != y {
            if depth[x] >= depth[y] {
                from_sink.push(parent_cell[x]);
                x = parent[x];
            } else {
                from_source.push(parent_cell[y]);
                y = parent[y];
            }
        }
        from_source.reverse();
        let path: Vec<usize> = from_sink.into_iter().chain(from_source).collect();
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (k, &c) in path.iter().enumerate() {
            if k % 2 == 0 && basis.cells[c].2 < theta {
                theta = basis.cells[c].2;
                leaving = c;
            }
        }
        for (k, &c) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis.cells[c].2 = (basis.cells[c].2 - theta).max(0.0);
            } else {
                basis.cells[c].2 += theta;
            }
        }
        basis.replace(leaving, ei, ej, theta);
    }
    Err(GrdError::Solver(format!("network simplex exceeded {max_pivots} pivots")))
}
