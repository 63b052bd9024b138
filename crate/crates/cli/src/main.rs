//! `grd`: simulate block-model graphs, embed observed graphs, study
//! estimation error, and print exact model GRDs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grd_core::models::ModelConfig;
use grd_core::pipeline::{self, DimsRule, ExperimentConfig, RhoRule};
use grd_core::GrdError;

#[derive(Debug, Parser)]
#[command(name = "grd", version, about = "Graph root distributions of exchangeable random graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample graphs from a model, embed them and compare to the true GRD.
    Simulate {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Embed a graph read from an edge list.
    Embed {
        /// Edge list: `# n=<count>` header, one `i j` pair per line.
        edges: PathBuf,
        #[command(flatten)]
        dims: DimsArgs,
        /// Undo a known sparsity scale: coordinates are multiplied by rho^(-1/2).
        #[arg(long)]
        rho: Option<f64>,
        /// Optional `node_id,label` file joined into the embedding CSV.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Estimation error across a grid of node counts.
    Converge {
        /// Experiment config (JSON); `n_grid` needs at least three sizes.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the exact GRD of a model as CSV.
    Grd {
        /// A model description, or an experiment config containing one.
        #[arg(long)]
        config: PathBuf,
        /// Write the CSV (and its JSON sidecar) here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    dims: DimsArgs,
    /// Constant sparsity scale for every n.
    #[arg(long)]
    rho: Option<f64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DimsArgs {
    /// Fixed embedding dimensions `p1,p2`.
    #[arg(long, value_parser = parse_dims, conflicts_with_all = ["threshold", "threshold_mode"])]
    dims: Option<(usize, usize)>,
    /// Keep components with |eigenvalue| > c * sqrt(n).
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    threshold_mode: Option<ThresholdModeArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ThresholdModeArg {
    /// c * sqrt(n).
    Dense,
    /// 2.01 * sqrt(n * d * (1 - d)) with d the edge density.
    Sparse,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `p1,p2`, got `{s}`"))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a dimension"));
    Ok((p(a)?, p(b)?))
}

impl DimsArgs {
    fn rule(&self) -> Option<DimsRule> {
        if let Some((p1, p2)) = self.dims {
            return Some(DimsRule::Fixed { p1, p2 });
        }
        match (self.threshold_mode, self.threshold) {
            (Some(ThresholdModeArg::Sparse), _) => Some(DimsRule::Sparse),
            (_, Some(c)) => Some(DimsRule::Threshold { c }),
            (Some(ThresholdModeArg::Dense), None) => Some(DimsRule::Threshold { c: 1.0 }),
            (None, None) => None,
        }
    }
}

fn load_experiment(path: &Path, run: &RunArgs) -> grd_core::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = run.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(rule) = run.dims.rule() {
        cfg.dims_rule = rule;
    }
    if let Some(rho) = run.rho {
        cfg.rho_rule = RhoRule::Constant { rho };
    }
    if let Some(out) = &run.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_model(path: &Path) -> grd_core::Result<ModelConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GrdError::Config { path: path.display().to_string(), msg: e.to_string() })?;
    match ModelConfig::from_json(&text) {
        Ok(m) => Ok(m),
        Err(model_err) => match ExperimentConfig::from_json(&text) {
            Ok(cfg) => Ok(cfg.model),
            Err(_) => Err(model_err),
        },
    }
}

fn run(cli: Cli) -> grd_core::Result<()> {
    match cli.command {
        Command::Simulate { config, run } => {
            let cfg = load_experiment(&config, &run)?;
            let rows = pipeline::cmd_simulate(&cfg)?;
            for r in &rows {
                println!(
                    "{} n={} seed={} dims=({},{}) d_w={:.6} d_ow={:.6}",
                    r.model, r.n, r.seed, r.p1, r.p2, r.d_w_to_truth, r.d_ow_to_truth
                );
            }
        }
        Command::Embed { edges, dims, rho, labels, out } => {
            if let Some(r) = rho {
                if !(r > 0.0 && r <= 1.0) {
                    return Err(GrdError::Config { path: "--rho".into(), msg: format!("{r} is outside (0, 1]") });
                }
            }
            let rule = dims.rule().unwrap_or(DimsRule::Threshold { c: 1.0 });
            let s = pipeline::cmd_embed(&edges, rule, rho, labels.as_deref(), &out)?;
            if s.duplicate_edges > 0 {
                eprintln!("warning: {} duplicate edge(s) collapsed", s.duplicate_edges);
            }
            if s.self_loops > 0 {
                eprintln!("warning: {} self-loop(s) dropped", s.self_loops);
            }
            println!("n={} edges={} dims=({},{})", s.n, s.edges, s.p1, s.p2);
        }
        Command::Converge { config, run } => {
            let cfg = load_experiment(&config, &run)?;
            let s = pipeline::cmd_converge(&cfg)?;
            for (n, (dw, dow)) in s.n_grid.iter().zip(s.median_d_w.iter().zip(&s.median_d_ow)) {
                println!("n={n} median d_w={dw:.6} median d_ow={dow:.6}");
            }
            println!("log-log slope of median d_w: {:.4}", s.slope_d_w);
        }
        Command::Grd { config, out } => {
            let model = load_model(&config)?;
            match out {
                Some(path) => pipeline::cmd_grd_to_file(&model, &path)?,
                None => print!("{}", pipeline::cmd_grd(&model)?),
            }
        }
    }
    Ok(())
}

fn exit_code(e: &GrdError) -> u8 {
    match e {
        GrdError::Config { .. } => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
