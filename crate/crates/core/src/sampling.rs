//! Exchangeable random graphs from graphons and GRD samplers.
//!
//! Node `i` draws from stream `(seed, Nodes, i)`; row `i` of the upper
//! triangle draws its Bernoulli variables for `j = i+1, …, n-1` in order from
//! stream `(seed, Edges, i)`. Rows are sampled in parallel and the result is
//! identical to a sequential run.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{GrdError, Result};
use crate::krein::{truncate_prob, KreinVector};
use crate::models::{GrdSampler, StepGraphon};
use crate::rng::{stream, Domain};

/// Symmetric binary matrix with zero diagonal, stored as the packed upper
/// triangle: row `i` holds the bits for `j > i`, word-aligned per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    rows: Vec<Vec<u64>>,
    edges: usize,
}

fn words(len: usize) -> usize {
    len.div_ceil(64)
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        Self { n, rows: (0..n).map(|i| vec![0; words(n - i - 1)]).collect(), edges: 0 }
    }

    /// Build from an edge iterator; self-loops are ignored and duplicates
    /// collapse. Returns an error for ids `>= n`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut a = Self::empty(n);
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(GrdError::InvalidParameter(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i != j {
                a.insert(i, j);
            }
        }
        Ok(a)
    }

    /// Set edge `{i, j}`; returns `false` if it was already present.
    pub fn insert(&mut self, i: usize, j: usize) -> bool {
        assert!(i != j && i < self.n && j < self.n, "invalid edge ({i}, {j})");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let k = b - a - 1;
        let (w, bit) = (k / 64, 1u64 << (k % 64));
        let present = self.rows[a][w] & bit != 0;
        if !present {
            self.rows[a][w] |= bit;
            self.edges += 1;
        }
        !present
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j || i >= self.n || j >= self.n {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let k = b - a - 1;
        self.rows[a][k / 64] >> (k % 64) & 1 == 1
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, row)| {
            row.iter().enumerate().flat_map(move |(w, &bits)| {
                let mut b = bits;
                std::iter::from_fn(move || {
                    if b == 0 {
                        return None;
                    }
                    let t = b.trailing_zeros() as usize;
                    b &= b - 1;
                    Some((i, i + 1 + w * 64 + t))
                })
            })
        })
    }

    /// `2 · edges / (n (n - 1))`.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        2.0 * self.edges as f64 / (self.n as f64 * (self.n as f64 - 1.0))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for (i, j) in self.edges() {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j) in self.edges() {
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
        }
        m
    }

    /// Full neighbourhood bitsets (`n` bits per row).
    fn full_rows(&self) -> Vec<Vec<u64>> {
        let mut full = vec![vec![0u64; words(self.n)]; self.n];
        for (i, j) in self.edges() {
            full[i][j / 64] |= 1 << (j % 64);
            full[j][i / 64] |= 1 << (i % 64);
        }
        full
    }

    /// Number of triangles.
    pub fn triangle_count(&self) -> u64 {
        let full = self.full_rows();
        // each triangle i<j<k is counted once from its lowest edge (i, j)
        self.edges()
            .map(|(i, j)| {
                let (ri, rj) = (&full[i], &full[j]);
                let first = (j + 1) / 64;
                let mut c = 0u64;
                for w in first..ri.len() {
                    let mut both = ri[w] & rj[w];
                    if w == first {
                        let shift = (j + 1) % 64;
                        both &= u64::MAX.checked_shl(shift as u32).unwrap_or(0);
                    }
                    c += both.count_ones() as u64;
                }
                c
            })
            .sum()
    }

    /// Triangles over `n choose 3`.
    pub fn triangle_density(&self) -> f64 {
        if self.n < 3 {
            return 0.0;
        }
        let n = self.n as f64;
        self.triangle_count() as f64 / (n * (n - 1.0) * (n - 2.0) / 6.0)
    }

    /// Relabel node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(GrdError::DimensionMismatch(format!("permutation of length {} for n = {}", perm.len(), self.n)));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut seen[p], true) {
                return Err(GrdError::InvalidParameter("not a permutation".into()));
            }
        }
        Self::from_edges(self.n, self.edges().map(|(i, j)| (perm[i], perm[j])))
    }

    /// Edge-list text: header `# n=<count>`, then one `i j` per line,
    /// `i < j`, sorted.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# n={}\n", self.n);
        for (i, j) in self.edges() {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}

/// Result of parsing an edge list.
#[derive(Debug, Clone)]
pub struct ParsedEdgeList {
    pub graph: AdjacencyMatrix,
    /// Repeated edges (in either orientation) that were collapsed.
    pub duplicates: usize,
    pub self_loops: usize,
}

/// Parse edge-list text. Comments (`#`), blank lines and either `i j`
/// order are accepted; self-loops are dropped. The node count comes from a
/// `# n=<count>` header, or is one more than the largest id otherwise.
pub fn parse_edge_list_str(text: &str) -> Result<ParsedEdgeList> {
    let mut declared: Option<(usize, usize)> = None;
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("n=") {
                let n = v.trim().parse::<usize>().map_err(|_| GrdError::Parse {
                    line: line_no,
                    msg: format!("invalid node count `{}`", v.trim()),
                })?;
                if declared.is_some() {
                    return Err(GrdError::Parse { line: line_no, msg: "repeated `# n=` header".into() });
                }
                declared = Some((n, line_no));
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(GrdError::Parse { line: line_no, msg: format!("expected two node ids, found {} tokens", tokens.len()) });
        }
        let id = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| GrdError::Parse { line: line_no, msg: format!("`{t}` is not a nonnegative integer node id") })
        };
        pairs.push((id(tokens[0])?, id(tokens[1])?, line_no));
    }
    let n = match declared {
        Some((n, _)) => n,
        None => pairs.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0),
    };
    let mut graph = AdjacencyMatrix::empty(n);
    let (mut duplicates, mut self_loops) = (0, 0);
    for (i, j, line) in pairs {
        if i >= n || j >= n {
            return Err(GrdError::Parse { line, msg: format!("node id {} out of range for n = {n}", i.max(j)) });
        }
        if i == j {
            self_loops += 1;
        } else if !graph.insert(i, j) {
            duplicates += 1;
        }
    }
    if self_loops > 0 {
        log::warn!("dropped {self_loops} self-loop(s)");
    }
    if duplicates > 0 {
        log::warn!("collapsed {duplicates} duplicate edge(s)");
    }
    Ok(ParsedEdgeList { graph, duplicates, self_loops })
}

pub fn parse_edge_list(path: &Path) -> Result<ParsedEdgeList> {
    parse_edge_list_str(&std::fs::read_to_string(path)?)
}

/// Node count, sparsity scale and seed of one sampled graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn new(n: usize, rho: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(GrdError::InvalidParameter("n must be at least 1".into()));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(GrdError::InvalidParameter(format!("rho = {rho} is outside (0, 1]")));
        }
        Ok(Self { n, rho, seed })
    }

    pub fn dense(n: usize, seed: u64) -> Result<Self> {
        Self::new(n, 1.0, seed)
    }
}

/// Latent node variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Positions {
    /// GRD draws `Z_i`.
    Krein(Vec<KreinVector>),
    /// Graphon uniforms `s_i`.
    Uniform(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub positions: Positions,
    pub labels: Option<Vec<usize>>,
}

impl LatentSample {
    pub fn len(&self) -> usize {
        match &self.positions {
            Positions::Krein(v) => v.len(),
            Positions::Uniform(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn krein(&self) -> Option<&[KreinVector]> {
        match &self.positions {
            Positions::Krein(v) => Some(v),
            Positions::Uniform(_) => None,
        }
    }
}

/// `n` independent draws from the sampler.
pub fn sample_nodes(sampler: &GrdSampler, cfg: &SamplingConfig) -> LatentSample {
    let draws: Vec<_> = (0..cfg.n)
        .into_par_iter()
        .map(|i| sampler.draw(&mut stream(cfg.seed, Domain::Nodes, i as u64)))
        .collect();
    let labels = draws.iter().map(|d| d.label).collect::<Option<Vec<_>>>();
    LatentSample { positions: Positions::Krein(draws.into_iter().map(|d| d.z).collect()), labels }
}

fn sample_rows(n: usize, seed: u64, prob: impl Fn(usize, usize) -> f64 + Sync) -> AdjacencyMatrix {
    let rows: Vec<(Vec<u64>, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, Domain::Edges, i as u64);
            let mut row = vec![0u64; words(n - i - 1)];
            let mut count = 0;
            for j in (i + 1)..n {
                let u: f64 = rng.random();
                if u < prob(i, j) {
                    let k = j - i - 1;
                    row[k / 64] |= 1 << (k % 64);
                    count += 1;
                }
            }
            (row, count)
        })
        .collect();
    let edges = rows.iter().map(|r| r.1).sum();
    AdjacencyMatrix { n, rows: rows.into_iter().map(|r| r.0).collect(), edges }
}

/// Edge `{i, j}` present with probability `T(ρ ⟨Z_i, Z_j⟩_K)`.
pub fn sample_adjacency(latent: &LatentSample, cfg: &SamplingConfig) -> Result<AdjacencyMatrix> {
    let z = latent
        .krein()
        .ok_or_else(|| GrdError::InvalidParameter("edge sampling from uniforms needs a graphon".into()))?;
    let rho = cfg.rho;
    Ok(sample_rows(z.len(), cfg.seed, |i, j| truncate_prob(rho * z[i].inner(&z[j]))))
}

/// Uniforms `s_i` and edges with probability `ρ W(s_i, s_j)`.
pub fn sample_from_graphon(w: &StepGraphon, cfg: &SamplingConfig) -> (LatentSample, AdjacencyMatrix) {
    let s: Vec<f64> = (0..cfg.n).map(|i| stream(cfg.seed, Domain::Nodes, i as u64).random()).collect();
    let blocks: Vec<usize> = s.iter().map(|&u| w.block_of(u)).collect();
    let (values, rho) = (w.values(), cfg.rho);
    let a = sample_rows(cfg.n, cfg.seed, |i, j| truncate_prob(rho * values[(blocks[i], blocks[j])]));
    (LatentSample { positions: Positions::Uniform(s), labels: Some(blocks) }, a)
}

/// Draw nodes and edges in one go.
pub fn sample_graph(sampler: &GrdSampler, cfg: &SamplingConfig) -> Result<(LatentSample, AdjacencyMatrix)> {
    let latent = sample_nodes(sampler, cfg);
    let a = sample_adjacency(&latent, cfg)?;
    Ok((latent, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krein::DiscreteGrd;
    use crate::models::{grd_from_sbm, presets};
    use proptest::prelude::*;
    use rand::Rng;

    fn er_sampler(q: f64) -> GrdSampler {
        GrdSampler::Discrete(DiscreteGrd::point_mass(KreinVector::new(vec![q.sqrt()], vec![]).unwrap()))
    }

    fn within_binomial(p_hat: f64, p: f64, trials: f64, z: f64) -> bool {
        (p_hat - p).abs() <= z * (p * (1.0 - p) / trials).sqrt()
    }

    #[test]
    fn point_mass_positions() {
        let z = KreinVector::new(vec![0.5], vec![0.1]).unwrap();
        let s = GrdSampler::Discrete(DiscreteGrd::point_mass(z.clone()));
        let lat = sample_nodes(&s, &SamplingConfig::dense(20, 1).unwrap());
        assert!(lat.krein().unwrap().iter().all(|p| *p == z));
    }

    #[test]
    fn sbm_block_frequencies() {
        let s = GrdSampler::Discrete(grd_from_sbm(&presets::sbm_example()).unwrap());
        let n = 10_000;
        let lat = sample_nodes(&s, &SamplingConfig::dense(n, 11).unwrap());
        let labels = lat.labels.unwrap();
        for (k, &p) in [0.3, 0.3, 0.4].iter().enumerate() {
            let freq = labels.iter().filter(|&&l| l == k).count() as f64 / n as f64;
            assert!(within_binomial(freq, p, n as f64, 3.0), "block {k}: {freq}");
        }
    }

    #[test]
    fn same_seed_same_graph() {
        let s = GrdSampler::Discrete(grd_from_sbm(&presets::sbm_example()).unwrap());
        let cfg = SamplingConfig::dense(300, 5).unwrap();
        let (l1, a1) = sample_graph(&s, &cfg).unwrap();
        let (l2, a2) = sample_graph(&s, &cfg).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(a1, a2);
        let (_, a3) = sample_graph(&s, &SamplingConfig::dense(300, 6).unwrap()).unwrap();
        assert_ne!(a1, a3);
    }

    #[test]
    fn parallel_rows_match_sequential_reference() {
        let s = GrdSampler::Discrete(grd_from_sbm(&presets::sbm_example()).unwrap());
        let cfg = SamplingConfig::dense(150, 9).unwrap();
        let (lat, a) = sample_graph(&s, &cfg).unwrap();
        let z = lat.krein().unwrap();
        let mut seq = AdjacencyMatrix::empty(cfg.n);
        for i in 0..cfg.n {
            let mut rng = stream(cfg.seed, Domain::Edges, i as u64);
            for j in (i + 1)..cfg.n {
                let u: f64 = rng.random();
                if u < truncate_prob(z[i].inner(&z[j])) {
                    seq.insert(i, j);
                }
            }
        }
        assert_eq!(a, seq);
    }

    #[test]
    fn erdos_renyi_density() {
        let n = 500;
        let a = sample_graph(&er_sampler(0.3), &SamplingConfig::dense(n, 2).unwrap()).unwrap().1;
        let pairs = (n * (n - 1) / 2) as f64;
        assert!(within_binomial(a.density(), 0.3, pairs, 3.0), "{}", a.density());
        assert_eq!(a.to_dense(), a.to_dense().transpose());
        assert!((0..n).all(|i| !a.has_edge(i, i)));
    }

    #[test]
    fn sparse_density() {
        let n = 500;
        let a = sample_graph(&er_sampler(1.0), &SamplingConfig::new(n, 0.1, 3).unwrap()).unwrap().1;
        assert!(within_binomial(a.density(), 0.1, (n * (n - 1) / 2) as f64, 3.0));
        assert!(SamplingConfig::new(n, 0.0, 3).is_err());
        assert!(SamplingConfig::new(n, 1.5, 3).is_err());
        assert!(SamplingConfig::new(0, 0.5, 3).is_err());
    }

    #[test]
    fn zero_atoms_give_empty_graph() {
        let a = sample_graph(&er_sampler(0.0), &SamplingConfig::dense(100, 4).unwrap()).unwrap().1;
        assert_eq!(a.edge_count(), 0);
    }

    #[test]
    fn constant_graphon_is_erdos_renyi() {
        let w = StepGraphon::constant(0.2).unwrap();
        let n = 400;
        let (lat, a) = sample_from_graphon(&w, &SamplingConfig::new(n, 0.5, 8).unwrap());
        assert_eq!(lat.len(), n);
        assert!(within_binomial(a.density(), 0.1, (n * (n - 1) / 2) as f64, 3.0));
    }

    #[test]
    fn triangle_count_matches_dense_trace() {
        let a = sample_graph(&er_sampler(0.2), &SamplingConfig::dense(130, 12).unwrap()).unwrap().1;
        let d = a.to_dense();
        let trace = (&d * &d * &d).trace();
        assert_eq!(a.triangle_count() as f64, trace / 6.0);
    }

    #[test]
    fn edge_list_round_trip() {
        let a = sample_graph(&er_sampler(0.1), &SamplingConfig::dense(70, 13).unwrap()).unwrap().1;
        let text = a.to_edge_list();
        assert!(text.starts_with("# n=70\n"));
        let parsed = parse_edge_list_str(&text).unwrap();
        assert_eq!(parsed.graph, a);
        assert_eq!(parsed.duplicates, 0);
    }

    #[test]
    fn edge_list_parsing_cases() {
        let p = parse_edge_list_str("# n=3\n0 1\n").unwrap();
        assert_eq!((p.graph.n(), p.graph.edge_count()), (3, 1));
        let p = parse_edge_list_str("# n=3\n0 1\n\n# comment\n1 0\n2 2\n").unwrap();
        assert_eq!((p.graph.edge_count(), p.duplicates, p.self_loops), (1, 1, 1));
        match parse_edge_list_str("a b\n") {
            Err(GrdError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_edge_list_str("# n=2\n0 1\n1 5\n"), Err(GrdError::Parse { line: 3, .. })));
        assert!(matches!(parse_edge_list_str("0 1 2\n"), Err(GrdError::Parse { line: 1, .. })));
        let p = parse_edge_list_str("# n=5\n").unwrap();
        assert_eq!((p.graph.n(), p.graph.edge_count()), (5, 0));
        assert_eq!(parse_edge_list_str("3 1\n").unwrap().graph.n(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn relabeling_preserves_invariants(seed in any::<u64>()) {
            let n = 60;
            let a = sample_graph(&er_sampler(0.3), &SamplingConfig::dense(n, seed).unwrap()).unwrap().1;
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = stream(seed, Domain::Aux, 0);
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let b = a.permuted(&perm).unwrap();
            prop_assert_eq!(a.edge_count(), b.edge_count());
            let (mut da, mut db) = (a.degrees(), b.degrees());
            da.sort();
            db.sort();
            prop_assert_eq!(da, db);
            prop_assert_eq!(a.triangle_count(), b.triangle_count());
            let ea = crate::linalg::sym_eigen(&a.to_dense()).unwrap().0;
            let eb = crate::linalg::sym_eigen(&b.to_dense()).unwrap().0;
            for (x, y) in ea.iter().zip(&eb) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
