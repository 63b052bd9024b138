//! Simulation, embedding and convergence runs behind the `grd` CLI.
//!
//! Every run writes plot-ready CSV files and a `manifest.json` recording the
//! SHA-256 of the configuration, the library version and the RNG algorithm.
//! Numbers are printed with 17 significant digits, so identical
//! configurations produce byte-identical CSV output (the `runtime_ms`
//! column of the convergence table is the one wall-clock field).

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GrdError, Result};
use crate::krein::{fmt17, DiscreteGrd};
use crate::models::{GrdSampler, Model, ModelConfig};
use crate::rng::RNG_ALGORITHM;
use crate::sampling::{parse_edge_list, sample_graph, AdjacencyMatrix, SamplingConfig};
use crate::spectral::{
    choose_dims_with, decompose_adjacency, embed, estimate_density, ls_slope, Embedding, SignedSpectrum, ThresholdMode,
};
use crate::transport::{orthogonal_wasserstein_with, wasserstein_distance, OwOptions, DEFAULT_RESTARTS};

/// Draws in the reference discretization of a continuous true GRD.
pub const DEFAULT_REFERENCE_DRAWS: usize = 2000;

/// Sparsity schedule `ρ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RhoRule {
    /// `ρ_n = 1`.
    Dense,
    /// `ρ_n = rho`.
    Constant { rho: f64 },
    /// `ρ_n = min(1, c log n / n)`.
    Log { c: f64 },
}

impl RhoRule {
    pub fn rho(&self, n: usize) -> f64 {
        match *self {
            RhoRule::Dense => 1.0,
            RhoRule::Constant { rho } => rho,
            RhoRule::Log { c } => (c * (n as f64).ln() / n as f64).min(1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RhoRule::Dense => true,
            RhoRule::Constant { rho } => rho > 0.0 && rho <= 1.0,
            RhoRule::Log { c } => c > 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(GrdError::Config { path: "rho_rule".into(), msg: format!("{self:?} is not a valid sparsity rule") })
        }
    }
}

/// How `(p1, p2)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DimsRule {
    Fixed { p1: usize, p2: usize },
    /// `|eigenvalue| > c √n`.
    Threshold {
        #[serde(default = "default_c")]
        c: f64,
    },
    /// `|eigenvalue| > 2.01 √(n ρ̂ (1 - ρ̂))` with `ρ̂` the edge density.
    Sparse,
}

fn default_c() -> f64 {
    1.0
}

impl DimsRule {
    fn validate(&self) -> Result<()> {
        match *self {
            DimsRule::Threshold { c } if !(c > 0.0 && c.is_finite()) => {
                Err(GrdError::Config { path: "dims_rule.c".into(), msg: format!("c = {c} must be positive") })
            }
            _ => Ok(()),
        }
    }

    /// Resolve to dimensions for an observed graph.
    pub fn resolve(&self, spec: &SignedSpectrum, a: &AdjacencyMatrix) -> Result<(usize, usize)> {
        let n = a.n();
        match *self {
            DimsRule::Fixed { p1, p2 } => Ok((p1, p2)),
            DimsRule::Threshold { c } => Ok(choose_dims_with(spec, n, ThresholdMode::Dense { c })),
            DimsRule::Sparse => {
                let density = if n >= 2 { estimate_density(a)? } else { 0.0 };
                Ok(choose_dims_with(spec, n, ThresholdMode::Sparse { density }))
            }
        }
    }
}

/// Which sparsity scale is undone on the embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rescale {
    /// Multiply by `ρ_n^{-1/2}` for the `ρ_n` the graph was sampled with.
    #[default]
    TrueRho,
    /// Multiply by `ρ̂^{-1/2}`, `ρ̂` the edge density over the mean true edge
    /// probability at `ρ = 1` (estimated from the truth).
    EstimatedRho,
}

/// Experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_rho_rule")]
    pub rho_rule: RhoRule,
    pub seeds: Vec<u64>,
    #[serde(default = "default_dims_rule")]
    pub dims_rule: DimsRule,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub rescale: Rescale,
    #[serde(default = "default_reference_draws")]
    pub reference_draws: usize,
    /// Seed of the reference discretization, independent of `seeds`.
    #[serde(default)]
    pub reference_seed: u64,
    #[serde(default = "default_restarts")]
    pub ow_restarts: usize,
}

fn default_rho_rule() -> RhoRule {
    RhoRule::Dense
}

fn default_dims_rule() -> DimsRule {
    DimsRule::Threshold { c: 1.0 }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_reference_draws() -> usize {
    DEFAULT_REFERENCE_DRAWS
}

fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}

impl ExperimentConfig {
    /// Parse JSON; errors carry the key path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            GrdError::Config { path, msg: e.into_inner().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GrdError::Config { path: path.display().to_string(), msg: e.to_string() })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<Model> {
        let model = self.model.validate().map_err(|e| match e {
            GrdError::Config { path, msg } => GrdError::Config { path: format!("model.{path}"), msg },
            other => GrdError::Config { path: "model".into(), msg: other.to_string() },
        })?;
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(GrdError::Config { path: "n_grid".into(), msg: "needs at least one positive node count".into() });
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GrdError::Config { path: "n_grid".into(), msg: "must be strictly ascending".into() });
        }
        if self.seeds.is_empty() {
            return Err(GrdError::Config { path: "seeds".into(), msg: "needs at least one seed".into() });
        }
        if self.reference_draws == 0 {
            return Err(GrdError::Config { path: "reference_draws".into(), msg: "must be positive".into() });
        }
        if self.ow_restarts == 0 {
            return Err(GrdError::Config { path: "ow_restarts".into(), msg: "must be positive".into() });
        }
        self.rho_rule.validate()?;
        self.dims_rule.validate()?;
        Ok(model)
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex_sha256(json.as_bytes())
    }
}

/// Hex SHA-256 of arbitrary text.
pub fn config_hash(text: &str) -> String {
    hex_sha256(text.as_bytes())
}

fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Run metadata written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub rng: String,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config_hash: String, outputs: Vec<String>) -> Self {
        Self {
            command: command.to_string(),
            config_hash,
            version: crate::VERSION.to_string(),
            rng: RNG_ALGORITHM.to_string(),
            outputs,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

/// The true GRD a run is compared against: the exact point masses for an
/// SBM, a fixed reference discretization otherwise.
pub fn truth_grd(model: &Model, reference_draws: usize, reference_seed: u64) -> Result<DiscreteGrd> {
    match model.canonical_sampler()? {
        GrdSampler::Discrete(f) => Ok(f),
        s => s.reference_grd(reference_draws, reference_seed),
    }
}

/// One sampled graph with its estimate and errors.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub model: String,
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
    pub dims: (usize, usize),
    pub d_w: f64,
    pub d_ow: f64,
    pub runtime_ms: u128,
    pub graph: AdjacencyMatrix,
    pub spectrum: SignedSpectrum,
    pub embedding: Embedding,
    pub labels: Option<Vec<usize>>,
}

/// Options of a single cell.
#[derive(Debug, Clone, Copy)]
pub struct CellOptions {
    pub dims_rule: DimsRule,
    pub rescale: Rescale,
    pub ow_restarts: usize,
}

/// Sample, embed and compare to `truth`.
pub fn run_cell(model: &Model, truth: &DiscreteGrd, n: usize, rho: f64, seed: u64, opts: &CellOptions) -> Result<CellResult> {
    let start = Instant::now();
    let sampler = model.canonical_sampler()?;
    let cfg = SamplingConfig::new(n, rho, seed)?;
    let (latent, graph) = sample_graph(&sampler, &cfg)?;
    let spectrum = decompose_adjacency(&graph)?;
    let (p1, p2) = opts.dims_rule.resolve(&spectrum, &graph)?;
    let scale = match opts.rescale {
        Rescale::TrueRho => rho,
        Rescale::EstimatedRho => estimated_rho(&graph, truth)?,
    };
    let embedding = embed(&spectrum, p1, p2, scale)?;
    let estimate = embedding.empirical_grd()?;
    let d_w = wasserstein_distance(&estimate, truth)?;
    let ow = orthogonal_wasserstein_with(&estimate, truth, &OwOptions { restarts: opts.ow_restarts, seed, ..OwOptions::default() })?;
    Ok(CellResult {
        model: model.name().to_string(),
        n,
        rho,
        seed,
        dims: (p1, p2),
        d_w,
        d_ow: ow.value.min(d_w),
        runtime_ms: start.elapsed().as_millis(),
        graph,
        spectrum,
        embedding,
        labels: latent.labels,
    })
}

/// `ρ̂ = density / E[<Z, Z'>]`, clamped to `(0, 1]`.
fn estimated_rho(graph: &AdjacencyMatrix, truth: &DiscreteGrd) -> Result<f64> {
    let density = if graph.n() >= 2 { estimate_density(graph)? } else { 0.0 };
    let (atoms, w) = (truth.atoms(), truth.weights());
    let mut mean = 0.0;
    for (a, wa) in atoms.iter().zip(w) {
        for (b, wb) in atoms.iter().zip(w) {
            mean += wa * wb * a.inner(b);
        }
    }
    if !(mean > 0.0) || !(density > 0.0) {
        return Err(GrdError::InvalidParameter("cannot estimate rho from an empty graph".into()));
    }
    Ok((density / mean).min(1.0))
}

/// Row of the simulate summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub model: String,
    pub n: usize,
    pub seed: u64,
    pub p1: usize,
    pub p2: usize,
    pub d_w_to_truth: f64,
    pub d_ow_to_truth: f64,
}

fn cell_options(cfg: &ExperimentConfig) -> CellOptions {
    CellOptions { dims_rule: cfg.dims_rule, rescale: cfg.rescale, ow_restarts: cfg.ow_restarts }
}

fn write_file(dir: &Path, name: &str, contents: &str, outputs: &mut Vec<String>) -> Result<()> {
    std::fs::write(dir.join(name), contents)?;
    outputs.push(name.to_string());
    Ok(())
}

/// For every `(n, seed)`: sample, choose dims, embed, and write the
/// embedding, scree and true-GRD CSVs plus `simulate_summary.json`.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Vec<SimulateRow>> {
    let model = cfg.validate()?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let truth = truth_grd(&model, cfg.reference_draws, cfg.reference_seed)?;
    let name = model.name();
    let mut outputs = Vec::new();
    let truth_name = format!("{name}_truth.csv");
    truth.write_files(&dir.join(&truth_name), true)?;
    outputs.push(truth_name);
    outputs.push(format!("{name}_truth.json"));

    let opts = cell_options(cfg);
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        for &seed in &cfg.seeds {
            let cell = run_cell(&model, &truth, n, cfg.rho_rule.rho(n), seed, &opts)?;
            let stem = format!("{name}_n{n}_s{seed}");
            let labels = cell.labels.as_ref().map(|l| l.iter().map(|x| Some(x.to_string())).collect::<Vec<_>>());
            write_file(dir, &format!("{stem}_embedding.csv"), &cell.embedding.to_csv(labels.as_deref()), &mut outputs)?;
            write_file(dir, &format!("{stem}_scree.csv"), &cell.spectrum.scree_csv(), &mut outputs)?;
            log::info!("{stem}: dims {:?}, d_w {:.4}, d_ow {:.4}", cell.dims, cell.d_w, cell.d_ow);
            rows.push(SimulateRow {
                model: name.to_string(),
                n,
                seed,
                p1: cell.dims.0,
                p2: cell.dims.1,
                d_w_to_truth: cell.d_w,
                d_ow_to_truth: cell.d_ow,
            });
        }
    }
    write_file(dir, "simulate_summary.json", &serde_json::to_string_pretty(&rows)?, &mut outputs)?;
    Manifest::new("simulate", cfg.hash(), outputs).write(dir)?;
    Ok(rows)
}

/// Outcome of `cmd_embed`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedSummary {
    pub n: usize,
    pub edges: usize,
    pub duplicate_edges: usize,
    pub self_loops: usize,
    pub p1: usize,
    pub p2: usize,
    pub rho_used: f64,
    pub labeled_nodes: usize,
}

/// Parse a labels file of `node_id,label` lines (`#` comments and blank
/// lines allowed).
pub fn parse_labels(text: &str, n: usize) -> Result<Vec<Option<String>>> {
    let mut labels = vec![None; n];
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, label) = line
            .split_once(',')
            .ok_or_else(|| GrdError::Parse { line: k + 1, msg: "expected `node_id,label`".into() })?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| GrdError::Parse { line: k + 1, msg: format!("`{}` is not a node id", id.trim()) })?;
        if id >= n {
            return Err(GrdError::Parse { line: k + 1, msg: format!("node id {id} out of range for n = {n}") });
        }
        labels[id] = Some(label.trim().to_string());
    }
    Ok(labels)
}

/// Embed an observed graph; writes `embedding.csv` and `scree.csv`.
pub fn cmd_embed(
    edge_list: &Path,
    dims_rule: DimsRule,
    rho: Option<f64>,
    labels: Option<&Path>,
    out: &Path,
) -> Result<EmbedSummary> {
    dims_rule.validate()?;
    let parsed = parse_edge_list(edge_list)?;
    let graph = &parsed.graph;
    if graph.n() == 0 {
        return Err(GrdError::Empty("edge list has no nodes"));
    }
    let label_col = labels.map(|p| parse_labels(&std::fs::read_to_string(p)?, graph.n())).transpose()?;
    let spectrum = decompose_adjacency(graph)?;
    let (p1, p2) = dims_rule.resolve(&spectrum, graph)?;
    let rho = rho.unwrap_or(1.0);
    let embedding = embed(&spectrum, p1, p2, rho)?;
    std::fs::create_dir_all(out)?;
    let mut outputs = Vec::new();
    write_file(out, "embedding.csv", &embedding.to_csv(label_col.as_deref()), &mut outputs)?;
    write_file(out, "scree.csv", &spectrum.scree_csv(), &mut outputs)?;
    let summary = EmbedSummary {
        n: graph.n(),
        edges: graph.edge_count(),
        duplicate_edges: parsed.duplicates,
        self_loops: parsed.self_loops,
        p1,
        p2,
        rho_used: rho,
        labeled_nodes: label_col.as_ref().map_or(0, |l| l.iter().filter(|x| x.is_some()).count()),
    };
    write_file(out, "embed_summary.json", &serde_json::to_string_pretty(&summary)?, &mut outputs)?;
    let mut hasher = Sha256::new();
    hasher.update(std::fs::read(edge_list)?);
    hasher.update(format!("{dims_rule:?}|{rho}").as_bytes());
    let hash = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Manifest::new("embed", hash, outputs).write(out)?;
    Ok(summary)
}

/// Per-`n` medians and the log-log slope of the median errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeSummary {
    pub model: String,
    pub n_grid: Vec<usize>,
    pub rho: Vec<f64>,
    pub median_d_w: Vec<f64>,
    pub median_d_ow: Vec<f64>,
    /// Least-squares slope of `log median d_w` against `log n`.
    pub slope_d_w: f64,
    pub slope_d_ow: f64,
}

/// Median (mean of the middle two for even counts).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Run every `(n, seed)` cell; writes `converge.csv` and
/// `converge_summary.json`.
pub fn cmd_converge(cfg: &ExperimentConfig) -> Result<ConvergeSummary> {
    let model = cfg.validate()?;
    if cfg.n_grid.len() < 3 {
        return Err(GrdError::Config { path: "n_grid".into(), msg: "convergence needs at least 3 node counts".into() });
    }
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let truth = truth_grd(&model, cfg.reference_draws, cfg.reference_seed)?;
    let opts = cell_options(cfg);
    let mut table = String::from("model,n,rho,seed,p1,p2,d_w,d_ow,runtime_ms\n");
    let mut by_n: HashMap<usize, (Vec<f64>, Vec<f64>)> = HashMap::new();
    for &n in &cfg.n_grid {
        let rho = cfg.rho_rule.rho(n);
        for &seed in &cfg.seeds {
            let c = run_cell(&model, &truth, n, rho, seed, &opts)?;
            table.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                c.model,
                n,
                fmt17(rho),
                seed,
                c.dims.0,
                c.dims.1,
                fmt17(c.d_w),
                fmt17(c.d_ow),
                c.runtime_ms
            ));
            let e = by_n.entry(n).or_default();
            e.0.push(c.d_w);
            e.1.push(c.d_ow);
        }
    }
    let median_d_w: Vec<f64> = cfg.n_grid.iter().map(|n| median(&by_n[n].0)).collect();
    let median_d_ow: Vec<f64> = cfg.n_grid.iter().map(|n| median(&by_n[n].1)).collect();
    let log_n: Vec<f64> = cfg.n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let logs = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
    let summary = ConvergeSummary {
        model: model.name().to_string(),
        n_grid: cfg.n_grid.clone(),
        rho: cfg.n_grid.iter().map(|&n| cfg.rho_rule.rho(n)).collect(),
        slope_d_w: ls_slope(&log_n, &logs(&median_d_w)),
        slope_d_ow: ls_slope(&log_n, &logs(&median_d_ow)),
        median_d_w,
        median_d_ow,
    };
    let mut outputs = Vec::new();
    write_file(dir, "converge.csv", &table, &mut outputs)?;
    write_file(dir, "converge_summary.json", &serde_json::to_string_pretty(&summary)?, &mut outputs)?;
    Manifest::new("converge", cfg.hash(), outputs).write(dir)?;
    Ok(summary)
}

/// The exact GRD of a model as CSV text (SBM point masses, DCBM segment
/// endpoints at `θ = 1`, MMBM polytope vertices).
pub fn cmd_grd(model: &ModelConfig) -> Result<String> {
    Ok(model.validate()?.exact_grd()?.to_csv_string())
}

/// Write the exact GRD to `path` (CSV plus JSON sidecar) and a manifest in
/// the same directory.
pub fn cmd_grd_to_file(model: &ModelConfig, path: &Path) -> Result<()> {
    model.validate()?.exact_grd()?.write_files(path, false)?;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let sidecar = Path::new(&name).with_extension("json").display().to_string();
    let hash = config_hash(&serde_json::to_string(model)?);
    Manifest::new("grd", hash, vec![name, sidecar]).write(dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sbm_config(dir: &Path) -> String {
        format!(
            r#"{{"model":{{"model":"sbm","pi":[0.3,0.3,0.4],"B":[[0.25,0.5,0.25],[0.5,0.25,0.25],[0.25,0.25,0.16666666666666666]]}},
               "n_grid":[120,160,200],"seeds":[1,2],"output_dir":{:?}}}"#,
            dir.display().to_string()
        )
    }

    #[test]
    fn config_errors_name_key_paths() {
        let err = ExperimentConfig::from_json(r#"{"model":{"model":"sbm","pi":[1.0],"B":[0.5]},"n_grid":[10],"seeds":[1],"dims_rule":{"kind":"threshold","c":"x"}}"#)
            .unwrap_err();
        match err {
            // internally tagged enums report the enclosing key
            GrdError::Config { path, .. } => assert!(path.starts_with("dims_rule"), "{path}"),
            other => panic!("{other:?}"),
        }
        let err = ExperimentConfig::from_json(r#"{"model":{"model":"mmbm","B":[0.5]},"n_grid":[10],"seeds":[1]}"#).unwrap_err();
        match err {
            GrdError::Config { path, .. } => assert_eq!(path, "model.a"),
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::from_json(r#"{"model":{"model":"sbm","pi":[1.0],"B":[0.5]},"n_grid":[10],"seeds":[1],"bogus":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"model":{"model":"sbm","pi":[1.0],"B":[0.5]},"n_grid":[],"seeds":[1]}"#).is_err());
    }

    #[test]
    fn rho_rules() {
        assert_eq!(RhoRule::Dense.rho(100), 1.0);
        assert!((RhoRule::Log { c: 4.0 }.rho(1000) - 4.0 * 1000f64.ln() / 1000.0).abs() < 1e-15);
        assert_eq!(RhoRule::Log { c: 4.0 }.rho(2), 1.0);
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn simulate_is_deterministic_and_dow_below_dw() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let c1 = ExperimentConfig::from_json(&sbm_config(d1.path())).unwrap();
        let c2 = ExperimentConfig { output_dir: d2.path().to_path_buf(), ..c1.clone() };
        let rows = cmd_simulate(&c1).unwrap();
        cmd_simulate(&c2).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert!(r.d_ow_to_truth <= r.d_w_to_truth);
            assert!(r.d_w_to_truth.is_finite());
        }
        for name in ["sbm_n120_s1_embedding.csv", "sbm_n200_s2_scree.csv", "sbm_truth.csv", "simulate_summary.json"] {
            assert_eq!(std::fs::read(d1.path().join(name)).unwrap(), std::fs::read(d2.path().join(name)).unwrap(), "{name}");
        }
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(d1.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.config_hash.len(), 64);
        assert_eq!(manifest.rng, RNG_ALGORITHM);
    }

    #[test]
    fn converge_writes_table() {
        let d = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::from_json(&sbm_config(d.path())).unwrap();
        cfg.dims_rule = DimsRule::Fixed { p1: 1, p2: 1 };
        let s = cmd_converge(&cfg).unwrap();
        assert_eq!(s.median_d_w.len(), 3);
        assert!(s.slope_d_w.is_finite());
        let table = std::fs::read_to_string(d.path().join("converge.csv")).unwrap();
        assert_eq!(table.lines().count(), 7);
        assert!(table.starts_with("model,n,rho,seed,p1,p2,d_w,d_ow,runtime_ms\n"));
        cfg.n_grid = vec![100, 200];
        assert!(matches!(cmd_converge(&cfg), Err(GrdError::Config { .. })));
    }

    #[test]
    fn embed_two_node_graph() {
        let d = tempfile::tempdir().unwrap();
        let path = d.path().join("g.txt");
        std::fs::write(&path, "# n=2\n0 1\n").unwrap();
        let s = cmd_embed(&path, DimsRule::Fixed { p1: 1, p2: 1 }, None, None, d.path()).unwrap();
        assert_eq!((s.p1, s.p2), (1, 1));
        let csv = std::fs::read_to_string(d.path().join("embedding.csv")).unwrap();
        let rows: Vec<Vec<f64>> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
            .collect();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((rows[0][0] - h).abs() < 1e-12 && (rows[1][0] - h).abs() < 1e-12);
        assert!((rows[0][1] - h).abs() < 1e-12 && (rows[1][1] + h).abs() < 1e-12);
    }

    #[test]
    fn embed_empty_graph_with_labels() {
        let d = tempfile::tempdir().unwrap();
        let path = d.path().join("g.txt");
        std::fs::write(&path, "# n=5\n").unwrap();
        let labels = d.path().join("labels.csv");
        std::fs::write(&labels, "0,a\n3,b\n").unwrap();
        let s = cmd_embed(&path, DimsRule::Threshold { c: 1.0 }, None, Some(&labels), d.path()).unwrap();
        assert_eq!((s.p1, s.p2, s.labeled_nodes), (0, 0, 2));
        let csv = std::fs::read_to_string(d.path().join("embedding.csv")).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "node_id,label");
        assert_eq!(csv.lines().nth(4).unwrap(), "3,b");
        std::fs::write(&labels, "0,a\nx,b\n").unwrap();
        assert!(matches!(
            cmd_embed(&path, DimsRule::Threshold { c: 1.0 }, None, Some(&labels), d.path()),
            Err(GrdError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn grd_verb_prints_csv() {
        let cfg = ModelConfig::from_json(r#"{"model":"sbm","pi":[0.3,0.3,0.4],"B":[0.25,0.5,0.5,0.5,0.25,0.5,0.5,0.5,0.25]}"#).unwrap();
        let csv = cmd_grd(&cfg).unwrap();
        assert!(csv.starts_with("weight,x1,y1,y2\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
