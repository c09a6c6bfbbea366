//! Command-line entry point: dataset generation, graph construction, single
//! greedy queries, and experiment sweeps with on-disk artifacts.
//!
//! All randomness flows from explicit `--seed` flags; nothing is seeded from
//! the clock. Reruns with identical arguments produce byte-identical data
//! and report files (the manifest records wall-clock timestamps and is the
//! only output that differs between reruns).

mod config;
mod manifest;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use anng::experiments::{
    run_concentration_suite, run_progress_trial, run_query_sweep, run_twosided_sweep,
};
use anng::geometry::{alpha_fn, cap_volume_exact, CapSpec, DensityParams, UnitVector};
use anng::graph::{build_graph, Dataset, EdgeModel};
use anng::io::{read_dataset, read_graph, write_dataset, write_graph};
use anng::search::{greedy_query, plant_query, GreedyStatus, QuerySpec, Start};

use config::{parse_experiment_config, parse_model, Suite};
use manifest::{unix_ms, RunManifest};

#[derive(Parser)]
#[command(name = "anng", version, about = "Greedy search on randomized near-neighbor graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a uniform unit-sphere dataset file.
    GenDataset {
        /// Number of points; log2(n)/d must exceed 1.
        #[arg(long)]
        n: usize,
        /// Dimension.
        #[arg(long)]
        d: usize,
        #[arg(long)]
        seed: u64,
        /// Output path for the dataset file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a near-neighbor graph file from a dataset file.
    BuildGraph {
        #[arg(long)]
        dataset: PathBuf,
        /// Threshold scale tau (> 1).
        #[arg(long)]
        tau: f64,
        /// exact | uniform:DELTA | adaptive | twosided:D1,D2
        #[arg(long)]
        model: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores; env ANNG_THREADS as fallback).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run one greedy query and print the outcome as JSON.
    Query {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Solve radius r in (1, 2^omega).
        #[arg(long)]
        r: f64,
        /// Plant a query at sine distance <= r * 2^(-omega) using this seed.
        #[arg(long, conflicts_with = "qfile")]
        plant: Option<u64>,
        /// Read the query vector from a JSON array file.
        #[arg(long)]
        qfile: Option<PathBuf>,
        /// random:SEED | fixed:INDEX
        #[arg(long)]
        start: String,
    },
    /// Run an experiment suite from a config file; write CSV + JSON + manifest.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if absent).
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores; env ANNG_THREADS as fallback).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let from_env = std::env::var("ANNG_THREADS")
        .ok()
        .map(|v| v.parse::<usize>())
        .transpose()
        .context("ANNG_THREADS must be an integer")?;
    if let Some(threads) = flag.or(from_env) {
        if threads == 0 {
            bail!("thread count must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("initializing the worker pool")?;
    }
    Ok(())
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::GenDataset { n, d, seed, out } => gen_dataset(n, d, seed, &out),
        Command::BuildGraph { dataset, tau, model, seed, out, threads } => {
            init_threads(threads)?;
            cmd_build_graph(&dataset, tau, &model, seed, &out)
        }
        Command::Query { dataset, graph, r, plant, qfile, start } => {
            cmd_query(&dataset, &graph, r, plant, qfile.as_deref(), &start)
        }
        Command::Experiment { config, out, threads } => {
            init_threads(threads)?;
            cmd_experiment(&config, &out)
        }
    }
}

fn gen_dataset(n: usize, d: usize, seed: u64, out: &Path) -> Result<()> {
    if d == 0 {
        bail!("d must be positive");
    }
    let omega = (n as f64).log2() / d as f64;
    if !(omega > 1.0) {
        bail!("density omega = log2(n)/d = {omega} must exceed 1; pick a smaller d or larger n");
    }
    let params = DensityParams::new(n, d)?;
    let data = Dataset::generate(params, seed);
    write_dataset(&data, out)?;
    println!("n={} d={} omega={}", params.n(), params.d(), params.omega());
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_build_graph(dataset: &Path, tau: f64, model: &str, seed: u64, out: &Path) -> Result<()> {
    let variant = parse_model(model)?;
    let data = read_dataset(dataset)
        .with_context(|| format!("reading dataset {}", dataset.display()))?;
    let model = EdgeModel::new(variant, tau)?;
    let graph = build_graph(&data, &model, seed)?;
    write_graph(&graph, out)?;

    let params = data.params();
    let alpha_tau = alpha_fn(tau, params.omega())?;
    let volc = cap_volume_exact(CapSpec::new(alpha_tau, params.d())?);
    let p = anng::experiments::pair_probability(&model, alpha_tau, params.d(), volc);
    let n = params.n() as f64;
    let stats = graph.degree_stats();
    println!(
        "edges={} mean_degree={:.4} pred_mean_degree={:.4}",
        stats.edge_count,
        stats.mean,
        (n - 1.0) * p
    );
    println!(
        "cheb_edge_band=[{:.1}, {:.1}]",
        n * (n - 1.0) * p * 0.5,
        n * (n - 1.0) * p * 1.5
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn parse_start(s: &str) -> Result<Start> {
    if let Some(rest) = s.strip_prefix("random:") {
        let seed: u64 = rest
            .parse()
            .map_err(|_| anyhow!("bad start '{s}': '{rest}' is not a seed; expected random:SEED"))?;
        return Ok(Start::RandomUniform { seed });
    }
    if let Some(rest) = s.strip_prefix("fixed:") {
        let index: usize = rest
            .parse()
            .map_err(|_| anyhow!("bad start '{s}': '{rest}' is not an index; expected fixed:INDEX"))?;
        return Ok(Start::Fixed { index });
    }
    bail!("bad start '{s}'; expected random:SEED | fixed:INDEX")
}

fn cmd_query(
    dataset: &Path,
    graph_path: &Path,
    r: f64,
    plant: Option<u64>,
    qfile: Option<&Path>,
    start: &str,
) -> Result<()> {
    let data = read_dataset(dataset)
        .with_context(|| format!("reading dataset {}", dataset.display()))?;
    let graph = read_graph(graph_path)
        .with_context(|| format!("reading graph {}", graph_path.display()))?;
    let params = data.params();
    if graph.n() != params.n() || graph.dim() != params.d() {
        bail!(
            "dimension mismatch: graph is (n={}, d={}) but dataset is (n={}, d={})",
            graph.n(),
            graph.dim(),
            params.n(),
            params.d()
        );
    }

    let upper = 2f64.powf(params.omega());
    if !(r > 1.0 && r < upper) {
        bail!("--r {r} is outside the solvable range (1, 2^omega) = (1, {upper})");
    }

    let q: UnitVector = match (plant, qfile) {
        (Some(seed), None) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let planted = plant_query(&data, &mut rng, r)?;
            eprintln!("planted near index {}", planted.planted);
            planted.q
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading query file {}", path.display()))?;
            let coords: Vec<f64> = serde_json::from_str(&text)
                .context("query file must be a JSON array of numbers")?;
            UnitVector::new(coords)?
        }
        _ => bail!("exactly one of --plant SEED or --qfile PATH is required"),
    };

    let spec = QuerySpec::new(q, r, params)?;
    let start = parse_start(start)?;
    let outcome = greedy_query(&graph, &data, &spec, start)?;
    let status = match outcome.status {
        GreedyStatus::Success => "Success",
        GreedyStatus::FailNoProgress => "FailNoProgress",
    };
    println!(
        "{}",
        serde_json::json!({
            "status": status,
            "terminal": outcome.terminal,
            "steps": outcome.steps,
            "comparisons": outcome.comparisons,
            "sin_theta_terminal": outcome.sin_theta_terminal,
        })
    );
    Ok(())
}

fn cmd_experiment(config_path: &Path, out_dir: &Path) -> Result<()> {
    let started = unix_ms();
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let request = parse_experiment_config(&text)?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let suite = request.suite.name();
    let csv_path = out_dir.join(format!("{suite}.csv"));
    let json_path = out_dir.join(format!("{suite}.json"));
    let manifest_path = out_dir.join("manifest.json");

    let result = (|| -> Result<()> {
        match request.suite {
            Suite::QuerySweep => {
                let report = run_query_sweep(&request.config)?;
                report.write(&csv_path, &json_path)?;
            }
            Suite::Progress => {
                let s = request.progress_s.expect("validated by parser");
                let eps = request.progress_eps.expect("validated by parser");
                let report = run_progress_trial(&request.config, s, eps)?;
                report.write(&csv_path, &json_path)?;
            }
            Suite::TwoSided => {
                let delta1 = request.delta1.expect("validated by parser");
                let report = run_twosided_sweep(&request.config, delta1)?;
                report.write(&csv_path, &json_path)?;
            }
            Suite::Concentration => {
                let report = run_concentration_suite(&request.config)?;
                report.write(&csv_path, &json_path)?;
            }
        }
        Ok(())
    })();

    if let Err(err) = result {
        // Remove partial outputs so a failed run leaves nothing behind.
        for path in [&csv_path, &json_path, &manifest_path] {
            let _ = std::fs::remove_file(path);
        }
        return Err(err);
    }

    let mut manifest = RunManifest::new(
        serde_json::json!({
            "suite": suite,
            "config": request.config,
            "progress_s": request.progress_s,
            "progress_eps": request.progress_eps,
            "delta1": request.delta1,
        }),
        started,
    );
    manifest.record(&csv_path)?;
    manifest.record(&json_path)?;
    manifest.write(&manifest_path)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}
