//! Monte Carlo experiment harness: estimates the quantities the graph-search
//! trade-offs predict (progress probability, end-to-end success rate, step
//! and comparison counts, degree/edge concentration) and emits structured
//! reports with the matching predictions side by side.
//!
//! Randomness policy: every trial derives its RNG from `(seed, trial_index)`,
//! so sweeps are reproducible and independent of worker count. Coins are
//! shared across the model sweep (same graph seed), which couples the
//! sweep points: a retention coin that passes at delta also passes at any
//! larger delta.

pub mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    alpha_fn, cap_volume_exact, cap_volume_lb_constant, cap_volume_mc, wedge_lb, CapSpec,
    DensityParams, GeometryError,
};
use crate::graph::{
    build_graph, edge_exists, Dataset, EdgeModel, EdgeVariant, GraphError, NeighborGraph,
};
use crate::rng::derive_seed;
use crate::search::{
    greedy_query, place_query, plant_query, tangent_direction, warm_start, GreedyOutcome,
    GreedyStatus, QuerySpec, SearchError, Start,
};

pub use report::{
    ConcentrationReport, ConcentrationRow, ProgressReport, ProgressRow, QuerySweepReport,
    QuerySweepRow, TwoSidedReport,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("report self-audit failed: {0}")]
    Audit(String),
}

/// Seeds for the three independent randomness streams of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub dataset: u64,
    pub graph: u64,
    pub query: u64,
}

/// Full description of an experiment sweep. All randomness flows from
/// `seeds`; identical configs produce byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub tau: f64,
    pub variants: Vec<EdgeVariant>,
    pub r: f64,
    pub r0: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub seeds: Seeds,
    pub mc_samples: u64,
}

impl ExperimentConfig {
    /// Check every upstream parameter constraint; returns the density
    /// parameters on success.
    pub fn validate(&self) -> Result<DensityParams, ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be >= 1".into()));
        }
        if self.variants.is_empty() {
            return Err(ExperimentError::Config("at least one model= entry is required".into()));
        }
        if self.mc_samples == 0 {
            return Err(ExperimentError::Config("mc_samples must be >= 1".into()));
        }
        let params = DensityParams::new(self.n, self.d)?;
        let upper = 2f64.powf(params.omega());
        if self.r.is_nan() || self.r <= 1.0 || self.r >= upper {
            return Err(ExperimentError::Config(format!(
                "r={} must lie in (1, 2^omega) = (1, {upper})",
                self.r
            )));
        }
        if self.r0.is_nan() || self.r0 <= self.r {
            return Err(ExperimentError::Config(format!(
                "r0={} must exceed r={}",
                self.r0, self.r
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 || self.epsilon >= self.r0 - self.r {
            return Err(ExperimentError::Config(format!(
                "epsilon={} must lie in (0, r0 - r) = (0, {})",
                self.epsilon,
                self.r0 - self.r
            )));
        }
        for &variant in &self.variants {
            EdgeModel::new(variant, self.tau)?;
        }
        Ok(params)
    }
}

// Stream tags for derive_seed, one per independent randomness role.
const STREAM_GEOMETRY_MC: u64 = 1;
const STREAM_QUERY: u64 = 2;
const STREAM_PROGRESS_DATASET: u64 = 3;
const STREAM_PROGRESS_QUERY: u64 = 4;
const STREAM_CONC_DATASET: u64 = 5;
const STREAM_CONC_GRAPH: u64 = 6;

/// Predicted per-ordered-pair edge probability for a model, given the
/// threshold and the exact cap volume at that threshold.
pub fn pair_probability(model: &EdgeModel, alpha_tau: f64, d: usize, vol_c: f64) -> f64 {
    match model.variant() {
        EdgeVariant::Exact => vol_c,
        EdgeVariant::Uniform { delta } => delta * vol_c,
        EdgeVariant::TwoSided { delta1, delta2 } => delta2 + (delta1 - delta2) * vol_c,
        EdgeVariant::Adaptive => adaptive_pair_probability(alpha_tau, d),
    }
}

/// E[(1 - theta/pi) * 1{cos(theta) >= alpha_tau}] where theta is the angle
/// between a fixed point and a uniform sphere point (density proportional to
/// sin^(d-2) theta). Simpson quadrature on both the restricted numerator and
/// the full-normalizer integral.
fn adaptive_pair_probability(alpha_tau: f64, d: usize) -> f64 {
    let theta_max = alpha_tau.clamp(-1.0, 1.0).acos();
    let k = (d - 2) as i32;
    let numerator = simpson(
        |t| (1.0 - t / std::f64::consts::PI) * t.sin().powi(k),
        0.0,
        theta_max,
        4096,
    );
    let normalizer = simpson(|t| t.sin().powi(k), 0.0, std::f64::consts::PI, 8192);
    numerator / normalizer
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    debug_assert!(intervals % 2 == 0);
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for k in 1..intervals {
        let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

struct SweepContext {
    params: DensityParams,
    data: Dataset,
    alpha_tau: f64,
    volc: f64,
    volc_mc_mean: f64,
    volc_mc_stderr: f64,
    /// (query, warm-start index) per trial, shared across all models.
    queries: Vec<(crate::search::PlantedQuery, usize)>,
}

fn prepare_sweep(config: &ExperimentConfig) -> Result<SweepContext, ExperimentError> {
    let params = config.validate()?;
    let data = Dataset::generate(params, config.seeds.dataset);
    let alpha_tau = alpha_fn(config.tau, params.omega())?;
    let cap = CapSpec::new(alpha_tau, config.d)?;
    let volc = cap_volume_exact(cap);
    let mut geom_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(config.seeds.dataset, STREAM_GEOMETRY_MC, 0));
    let volc_mc = cap_volume_mc(cap, config.mc_samples, &mut geom_rng);

    let queries: Vec<(crate::search::PlantedQuery, usize)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                config.seeds.query,
                STREAM_QUERY,
                t as u64,
            ));
            let planted = plant_query(&data, &mut rng, config.r)?;
            let start = warm_start(&data, &planted.q, config.r0)?;
            Ok((planted, start))
        })
        .collect::<Result<_, SearchError>>()?;

    Ok(SweepContext {
        params,
        data,
        alpha_tau,
        volc,
        volc_mc_mean: volc_mc.mean,
        volc_mc_stderr: volc_mc.stderr,
        queries,
    })
}

fn run_model_point(
    config: &ExperimentConfig,
    ctx: &SweepContext,
    variant: EdgeVariant,
) -> Result<QuerySweepRow, ExperimentError> {
    let model = EdgeModel::new(variant, config.tau)?;
    let graph = build_graph(&ctx.data, &model, config.seeds.graph)?;

    let outcomes: Vec<GreedyOutcome> = ctx
        .queries
        .par_iter()
        .map(|(planted, start)| {
            let spec = QuerySpec::new(planted.q.clone(), config.r, &ctx.params)?
                .with_warm_radius(config.r0)?
                .with_epsilon(config.epsilon)?;
            greedy_query(&graph, &ctx.data, &spec, Start::Fixed { index: *start })
        })
        .collect::<Result<_, SearchError>>()?;

    Ok(summarize_point(config, ctx, &model, &graph, &outcomes))
}

fn summarize_point(
    config: &ExperimentConfig,
    ctx: &SweepContext,
    model: &EdgeModel,
    graph: &NeighborGraph,
    outcomes: &[GreedyOutcome],
) -> QuerySweepRow {
    let trials = outcomes.len();
    let successes = outcomes
        .iter()
        .filter(|o| o.status == GreedyStatus::Success)
        .count() as u64;
    let success_rate = successes as f64 / trials as f64;
    let success_stderr = (success_rate * (1.0 - success_rate) / trials as f64).sqrt();

    let mut steps: Vec<usize> = outcomes.iter().map(|o| o.steps).collect();
    steps.sort_unstable();
    let steps_mean = steps.iter().sum::<usize>() as f64 / trials as f64;
    let steps_median = if trials % 2 == 1 {
        steps[trials / 2] as f64
    } else {
        (steps[trials / 2 - 1] + steps[trials / 2]) as f64 / 2.0
    };
    let steps_max = *steps.last().unwrap() as u64;
    let comparisons_total: u64 = outcomes.iter().map(|o| o.comparisons).sum();

    let degree = graph.degree_stats();
    let n = config.n as f64;
    let d = config.d as f64;
    let omega = ctx.params.omega();
    let p = pair_probability(model, ctx.alpha_tau, config.d, ctx.volc);
    let delta_eff = model.effective_delta(ctx.alpha_tau);

    let degree_sigma_mean = ((n - 1.0) * p * (1.0 - p) / n).sqrt();
    let edge_sigma = (n * (n - 1.0) * p * (1.0 - p)).sqrt();
    let pred_degree_mean = (n - 1.0) * p;
    let pred_edge_count = n * (n - 1.0) * p;

    let pred_steps = (config.r0 - config.r) * 2f64.powf(omega) / config.epsilon;
    let raw_failure = pred_steps * (-config.r.powi(config.d as i32) * delta_eff / d.sqrt()).exp();
    let pred_query_cost = 2f64.powf(omega) / config.epsilon * d.sqrt() * config.tau.powi(config.d as i32);

    QuerySweepRow {
        model: model.label(),
        n: config.n,
        d: config.d,
        omega,
        tau: config.tau,
        r: config.r,
        r0: config.r0,
        epsilon: config.epsilon,
        trials,
        dataset_seed: config.seeds.dataset,
        graph_seed: config.seeds.graph,
        query_seed: config.seeds.query,
        alpha_tau: ctx.alpha_tau,
        volc_exact: ctx.volc,
        volc_mc_mean: ctx.volc_mc_mean,
        volc_mc_stderr: ctx.volc_mc_stderr,
        mc_samples: config.mc_samples,
        cap_lb_constant: cap_volume_lb_constant(config.d),
        successes,
        fail_count: trials as u64 - successes,
        success_rate,
        success_stderr,
        steps_mean,
        steps_median,
        steps_max,
        comparisons_total,
        comparisons_mean: comparisons_total as f64 / trials as f64,
        edge_count: degree.edge_count,
        degree_mean: degree.mean,
        degree_min: degree.min,
        degree_max: degree.max,
        degree_variance: degree.variance,
        delta_eff,
        pred_pair_probability: p,
        pred_degree_mean,
        pred_degree_band_lo: pred_degree_mean - 4.0 * degree_sigma_mean,
        pred_degree_band_hi: pred_degree_mean + 4.0 * degree_sigma_mean,
        pred_edge_count,
        pred_edge_band_lo: pred_edge_count - 4.0 * edge_sigma,
        pred_edge_band_hi: pred_edge_count + 4.0 * edge_sigma,
        cheb_degree_band_lo: pred_degree_mean * 0.5,
        cheb_degree_band_hi: pred_degree_mean * 1.5,
        cheb_edge_band_lo: pred_edge_count * 0.5,
        cheb_edge_band_hi: pred_edge_count * 1.5,
        pred_steps,
        pred_failure_bound: clip01(raw_failure),
        bound_vacuous: raw_failure >= 1.0,
        pred_query_cost,
        pred_query_cost_delta: pred_query_cost * delta_eff,
    }
}

/// Planted-query sweep over the configured models: one graph per model on
/// shared coins, `trials` warm-started planted queries per graph.
pub fn run_query_sweep(config: &ExperimentConfig) -> Result<QuerySweepReport, ExperimentError> {
    let ctx = prepare_sweep(config)?;
    let rows = config
        .variants
        .iter()
        .map(|&variant| run_model_point(config, &ctx, variant))
        .collect::<Result<Vec<_>, _>>()?;
    let report = QuerySweepReport {
        suite: "query-sweep".to_string(),
        formulas: report::prediction_formulas(),
        rows,
    };
    report.self_audit()?;
    Ok(report)
}

/// One-step progress experiment. Per trial: a fresh dataset, a vertex p1
/// chosen uniformly, and a query placed at sine distance exactly
/// `(s + eps) * 2^(-omega)` from p1 in a uniform tangent direction. The
/// recorded event is whether some out-neighbor of p1 lands in the target cap
/// around the query (inner product >= alpha_s, equivalently sine distance
/// <= s * 2^(-omega) on the near side). Models share trial instances and
/// coins, so rates are coupled across the sweep.
pub fn run_progress_trial(
    config: &ExperimentConfig,
    s: f64,
    eps: f64,
) -> Result<ProgressReport, ExperimentError> {
    if config.trials == 0 {
        return Err(ExperimentError::Config("trials must be >= 1".into()));
    }
    if config.variants.is_empty() {
        return Err(ExperimentError::Config("at least one model= entry is required".into()));
    }
    let params = DensityParams::new(config.n, config.d)?;
    // Validates s > 1, eps > 0 and tau >= sqrt(2)(s+eps), naming the failed
    // inequality; the value itself is the reported prediction.
    let pred_wedge_volume_lb = wedge_lb(config.tau, s, eps, &params)?;
    let placement_sine = (s + eps) * params.sine_scale();
    if placement_sine > 1.0 {
        return Err(ExperimentError::Config(format!(
            "(s + eps) * 2^(-omega) = {placement_sine} exceeds 1; the start vertex cannot be placed"
        )));
    }
    let alpha_tau = alpha_fn(config.tau, params.omega())?;
    let alpha_s = alpha_fn(s, params.omega())?;
    let models: Vec<EdgeModel> = config
        .variants
        .iter()
        .map(|&v| EdgeModel::new(v, config.tau))
        .collect::<Result<_, _>>()?;

    let theta1 = placement_sine.asin();
    // per_trial[t][m] = did model m make progress on trial t.
    let per_trial: Vec<Vec<bool>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let data = Dataset::generate(
                params,
                derive_seed(config.seeds.dataset, STREAM_PROGRESS_DATASET, t as u64),
            );
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                config.seeds.query,
                STREAM_PROGRESS_QUERY,
                t as u64,
            ));
            let p1 = rand::Rng::random_range(&mut rng, 0..data.len());
            let tangent = tangent_direction(data.point(p1), &mut rng);
            let q = place_query(data.point(p1), theta1, &tangent);

            models
                .iter()
                .map(|model| {
                    (0..data.len()).any(|j| {
                        j != p1
                            && crate::geometry::dot(data.point(j).coords(), q.coords())
                                >= alpha_s
                            && edge_exists(
                                model,
                                alpha_tau,
                                config.seeds.graph,
                                p1,
                                j,
                                data.point(p1).dot(data.point(j)),
                            )
                    })
                })
                .collect()
        })
        .collect();

    let rows = models
        .iter()
        .enumerate()
        .map(|(m, model)| {
            let bits: Vec<bool> = per_trial.iter().map(|row| row[m]).collect();
            let successes = bits.iter().filter(|&&b| b).count() as u64;
            let rate = successes as f64 / config.trials as f64;
            let stderr = (rate * (1.0 - rate) / config.trials as f64).sqrt();
            let delta_eff = model.effective_delta(alpha_tau);
            let bound =
                clip01(1.0 - (-s.powi(config.d as i32) * delta_eff / (config.d as f64).sqrt()).exp());
            ProgressRow {
                model: model.label(),
                n: config.n,
                d: config.d,
                omega: params.omega(),
                tau: config.tau,
                s,
                eps,
                trials: config.trials,
                dataset_seed: config.seeds.dataset,
                graph_seed: config.seeds.graph,
                query_seed: config.seeds.query,
                successes,
                progress_rate: rate,
                progress_stderr: stderr,
                delta_eff,
                pred_progress_bound: bound,
                pred_wedge_volume_lb,
                per_trial: bits,
            }
        })
        .collect();

    let report = ProgressReport {
        suite: "progress".to_string(),
        formulas: report::prediction_formulas(),
        rows,
    };
    report.self_audit()?;
    Ok(report)
}

/// Two-sided sweep: runs the query sweep for `TwoSided(delta1, 0)` and
/// `TwoSided(delta1, d^(-1/2) tau^d 2^(-d omega))` on shared coins and
/// reports the comparison costs against both predicted query-time forms.
pub fn run_twosided_sweep(
    config: &ExperimentConfig,
    delta1: f64,
) -> Result<TwoSidedReport, ExperimentError> {
    let d = config.d as f64;
    let omega = DensityParams::new(config.n, config.d)?.omega();
    let delta2 = d.powf(-0.5) * config.tau.powi(config.d as i32) * 2f64.powf(-d * omega);
    if delta2 >= 1.0 {
        return Err(ExperimentError::Config(format!(
            "structured delta2 = d^(-1/2) tau^d 2^(-d omega) = {delta2} is not a probability"
        )));
    }
    if delta2 >= delta1 {
        return Err(ExperimentError::Config(format!(
            "delta1 = {delta1} must exceed the structured delta2 = {delta2}"
        )));
    }
    let mut sweep_config = config.clone();
    sweep_config.variants = vec![
        EdgeVariant::TwoSided { delta1, delta2: 0.0 },
        EdgeVariant::TwoSided { delta1, delta2 },
    ];
    let ctx = prepare_sweep(&sweep_config)?;
    let rows = sweep_config
        .variants
        .iter()
        .map(|&variant| run_model_point(&sweep_config, &ctx, variant))
        .collect::<Result<Vec<_>, _>>()?;
    let report = TwoSidedReport {
        suite: "twosided".to_string(),
        delta1,
        delta2_regime2: delta2,
        formulas: report::prediction_formulas(),
        rows,
    };
    report.self_audit()?;
    Ok(report)
}

/// Degree/edge concentration suite: `config.trials` independent
/// (dataset, coins) draws per model; per-vertex degrees and edge totals are
/// tallied against the `nb/2` tail band with its `4/(nb)` bound, alongside
/// the tighter 4-sigma binomial bands.
pub fn run_concentration_suite(
    config: &ExperimentConfig,
) -> Result<ConcentrationReport, ExperimentError> {
    if config.trials == 0 {
        return Err(ExperimentError::Config("trials must be >= 1".into()));
    }
    if config.variants.is_empty() {
        return Err(ExperimentError::Config("at least one model= entry is required".into()));
    }
    let params = DensityParams::new(config.n, config.d)?;
    let alpha_tau = alpha_fn(config.tau, params.omega())?;
    let volc = cap_volume_exact(CapSpec::new(alpha_tau, config.d)?);
    let n = config.n as f64;

    let mut rows = Vec::new();
    for &variant in &config.variants {
        let model = EdgeModel::new(variant, config.tau)?;
        let observations: Vec<(Vec<usize>, usize)> = (0..config.trials)
            .into_par_iter()
            .map(|k| {
                let data = Dataset::generate(
                    params,
                    derive_seed(config.seeds.dataset, STREAM_CONC_DATASET, k as u64),
                );
                let graph = build_graph(
                    &data,
                    &model,
                    derive_seed(config.seeds.graph, STREAM_CONC_GRAPH, k as u64),
                )?;
                let degrees = (0..graph.n())
                    .map(|i| graph.neighbors(i).len())
                    .collect::<Vec<_>>();
                let edges = graph.edge_count();
                Ok((degrees, edges))
            })
            .collect::<Result<_, GraphError>>()?;

        let b = pair_probability(&model, alpha_tau, config.d, volc);
        let pred_degree_mean = (n - 1.0) * b;
        let pred_edge_count = n * (n - 1.0) * b;
        let degree_half_band = pred_degree_mean / 2.0;
        let edge_half_band = pred_edge_count / 2.0;
        let degree_binom_sigma = ((n - 1.0) * b * (1.0 - b)).sqrt();
        let edge_binom_sigma = (n * (n - 1.0) * b * (1.0 - b)).sqrt();

        let mut degree_outside = 0u64;
        let mut degree_sum = 0u64;
        let mut edge_outside = 0u64;
        let mut edge_sum = 0u64;
        for (degrees, edges) in &observations {
            for &deg in degrees {
                degree_sum += deg as u64;
                if (deg as f64 - pred_degree_mean).abs() >= degree_half_band {
                    degree_outside += 1;
                }
            }
            edge_sum += *edges as u64;
            if (*edges as f64 - pred_edge_count).abs() >= edge_half_band {
                edge_outside += 1;
            }
        }
        let degree_obs = (config.trials * config.n) as u64;
        let edge_obs = config.trials as u64;

        rows.push(ConcentrationRow {
            model: model.label(),
            n: config.n,
            d: config.d,
            omega: params.omega(),
            tau: config.tau,
            repeats: config.trials,
            dataset_seed: config.seeds.dataset,
            graph_seed: config.seeds.graph,
            pair_probability: b,
            degree_observations: degree_obs,
            degree_outside_count: degree_outside,
            degree_outside_fraction: degree_outside as f64 / degree_obs as f64,
            degree_cheb_bound: (b > 0.0).then(|| 4.0 / ((n - 1.0) * b)),
            degree_grand_mean: degree_sum as f64 / degree_obs as f64,
            pred_degree_mean,
            degree_cheb_band_lo: pred_degree_mean - degree_half_band,
            degree_cheb_band_hi: pred_degree_mean + degree_half_band,
            degree_binom_band_lo: pred_degree_mean - 4.0 * degree_binom_sigma,
            degree_binom_band_hi: pred_degree_mean + 4.0 * degree_binom_sigma,
            edge_observations: edge_obs,
            edge_outside_count: edge_outside,
            edge_outside_fraction: edge_outside as f64 / edge_obs as f64,
            edge_cheb_bound: (b > 0.0).then(|| 4.0 / (n * (n - 1.0) * b)),
            edge_grand_mean: edge_sum as f64 / edge_obs as f64,
            pred_edge_count,
            edge_cheb_band_lo: pred_edge_count - edge_half_band,
            edge_cheb_band_hi: pred_edge_count + edge_half_band,
            edge_binom_band_lo: pred_edge_count - 4.0 * edge_binom_sigma,
            edge_binom_band_hi: pred_edge_count + 4.0 * edge_binom_sigma,
        });
    }

    let report = ConcentrationReport {
        suite: "concentration".to_string(),
        formulas: report::prediction_formulas(),
        rows,
    };
    report.self_audit()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 256,
            d: 6, // omega = 8/6 = 4/3
            tau: 2.0,
            variants: vec![EdgeVariant::Uniform { delta: 0.5 }],
            r: 1.3,
            r0: 1.8,
            epsilon: 0.2,
            trials: 64,
            seeds: Seeds { dataset: 11, graph: 22, query: 33 },
            mc_samples: 20_000,
        }
    }

    #[test]
    fn config_validation_catches_bad_parameters() {
        let mut c = base_config();
        c.trials = 0;
        assert!(matches!(c.validate(), Err(ExperimentError::Config(_))));

        let mut c = base_config();
        c.variants.clear();
        assert!(matches!(c.validate(), Err(ExperimentError::Config(_))));

        let mut c = base_config();
        c.r = 0.9;
        assert!(matches!(c.validate(), Err(ExperimentError::Config(_))));

        let mut c = base_config();
        c.r0 = 1.2;
        assert!(matches!(c.validate(), Err(ExperimentError::Config(_))));

        let mut c = base_config();
        c.epsilon = 0.7;
        assert!(matches!(c.validate(), Err(ExperimentError::Config(_))));

        assert!(base_config().validate().is_ok());
    }

    #[test]
    fn adaptive_pair_probability_limit_cases() {
        // alpha_tau = 1: empty cap, probability 0.
        assert!(adaptive_pair_probability(1.0, 5).abs() < 1e-12);
        // alpha_tau = -1: whole sphere; E[1 - theta/pi] = 1/2 by symmetry.
        let p = adaptive_pair_probability(-1.0, 5);
        assert!((p - 0.5).abs() < 1e-9, "full-sphere adaptive mean {p}");
        // d = 2: density is uniform in theta; with alpha_tau = 0 the integral
        // over [0, pi/2] of (1 - t/pi)/pi is 3/8.
        let p = adaptive_pair_probability(0.0, 2);
        assert!((p - 0.375).abs() < 1e-9, "d=2 adaptive mean {p}");
    }

    #[test]
    fn query_sweep_runs_and_audits() {
        let report = run_query_sweep(&base_config()).unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        assert_eq!(row.trials, 64);
        assert_eq!(row.successes + row.fail_count, 64);
        assert!(row.volc_exact > 0.0);
        assert!((row.volc_mc_mean - row.volc_exact).abs() <= 5.0 * row.volc_mc_stderr);
        report.self_audit().unwrap();
    }

    #[test]
    fn query_sweep_is_reproducible() {
        let a = run_query_sweep(&base_config()).unwrap();
        let b = run_query_sweep(&base_config()).unwrap();
        assert_eq!(a.csv_bytes().unwrap(), b.csv_bytes().unwrap());
        assert_eq!(a.json_bytes().unwrap(), b.json_bytes().unwrap());
    }

    #[test]
    fn exact_and_delta_one_rows_are_identical_except_label() {
        let mut config = base_config();
        config.variants = vec![EdgeVariant::Exact, EdgeVariant::Uniform { delta: 1.0 }];
        let report = run_query_sweep(&config).unwrap();
        let mut a = report.rows[0].clone();
        let mut b = report.rows[1].clone();
        // delta_eff and pair probability agree at delta = 1 by definition.
        a.model = String::new();
        b.model = String::new();
        assert_eq!(a, b);
    }

    #[test]
    fn progress_trial_rates_are_coupled_across_delta() {
        let mut config = base_config();
        config.n = 128;
        config.d = 5; // omega = 1.4
        config.tau = 2.3;
        config.trials = 200;
        config.variants = vec![
            EdgeVariant::Uniform { delta: 0.4 },
            EdgeVariant::Uniform { delta: 1.0 },
        ];
        // tau >= sqrt(2)(s+eps): sqrt(2)*1.6 = 2.263 <= 2.3.
        let report = run_progress_trial(&config, 1.4, 0.2).unwrap();
        let low = &report.rows[0];
        let high = &report.rows[1];
        for t in 0..config.trials {
            assert!(
                !low.per_trial[t] || high.per_trial[t],
                "coupling violated at trial {t}"
            );
        }
        assert!(low.progress_rate <= high.progress_rate);
    }

    #[test]
    fn progress_trial_rejects_invalid_shapes() {
        let config = base_config();
        // s <= 1.
        assert!(run_progress_trial(&config, 0.9, 0.2).is_err());
        // tau below sqrt(2)(s+eps).
        assert!(run_progress_trial(&config, 1.4, 0.2).is_err());
    }

    #[test]
    fn progress_at_saturating_tau_matches_brute_force_existence() {
        // With delta = 1 and tau just inside 2^omega the neighbor set of p1
        // is (almost) the whole near hemisphere, and every point of the
        // target cap around q lies inside it: the placement angle
        // asin(1.5/2^omega) plus the cap radius asin(1.3/2^omega) stays
        // short of the threshold angle acos(alpha_tau). The progress event
        // then coincides exactly, trial by trial, with the brute-force
        // check "some dataset point lies in the target cap".
        let params = DensityParams::new(512, 8).unwrap(); // omega = 9/8
        let tau = 0.999 * 2f64.powf(params.omega());
        let (s, eps) = (1.3, 0.2);
        let config = ExperimentConfig {
            n: 512,
            d: 8,
            tau,
            variants: vec![EdgeVariant::Uniform { delta: 1.0 }],
            r: 1.3,
            r0: 1.8,
            epsilon: 0.2,
            trials: 400,
            seeds: Seeds { dataset: 71, graph: 72, query: 73 },
            mc_samples: 1,
        };
        let report = run_progress_trial(&config, s, eps).unwrap();
        let bits = &report.rows[0].per_trial;

        // Reconstruct each trial instance from the same derived streams and
        // apply the independent existence check.
        let alpha_s = alpha_fn(s, params.omega()).unwrap();
        let theta1 = ((s + eps) * params.sine_scale()).asin();
        for t in 0..config.trials {
            let data = Dataset::generate(
                params,
                derive_seed(config.seeds.dataset, STREAM_PROGRESS_DATASET, t as u64),
            );
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                config.seeds.query,
                STREAM_PROGRESS_QUERY,
                t as u64,
            ));
            let p1 = rand::Rng::random_range(&mut rng, 0..data.len());
            let tangent = tangent_direction(data.point(p1), &mut rng);
            let q = place_query(data.point(p1), theta1, &tangent);
            let exists = (0..data.len())
                .any(|j| j != p1 && data.point(j).dot(&q) >= alpha_s);
            assert_eq!(bits[t], exists, "trial {t} disagrees with brute force");
        }
    }

    #[test]
    fn chebyshev_bound_holds_in_concentration_suite() {
        let config = ExperimentConfig {
            n: 256,
            d: 6,
            tau: 2.0,
            variants: vec![
                EdgeVariant::Uniform { delta: 0.5 },
                EdgeVariant::Exact,
                EdgeVariant::TwoSided { delta1: 0.7, delta2: 0.1 },
            ],
            r: 1.3,
            r0: 1.8,
            epsilon: 0.2,
            trials: 50,
            seeds: Seeds { dataset: 81, graph: 82, query: 83 },
            mc_samples: 1,
        };
        let report = run_concentration_suite(&config).unwrap();
        for row in &report.rows {
            let bound = row.degree_cheb_bound.unwrap();
            let f = row.degree_outside_fraction;
            let stderr = (f * (1.0 - f) / row.degree_observations as f64).sqrt();
            assert!(
                f <= bound + 3.0 * stderr,
                "{}: degree tail {f} above bound {bound}",
                row.model
            );
            let bound = row.edge_cheb_bound.unwrap();
            let f = row.edge_outside_fraction;
            let stderr = (f * (1.0 - f) / row.edge_observations as f64).sqrt();
            assert!(
                f <= bound + 3.0 * stderr,
                "{}: edge tail {f} above bound {bound}",
                row.model
            );
        }
    }

    #[test]
    fn progress_rate_is_zero_without_edges() {
        let mut config = base_config();
        config.n = 128;
        config.d = 5;
        config.tau = 2.3;
        config.trials = 50;
        config.variants = vec![EdgeVariant::Uniform { delta: 0.0 }];
        let report = run_progress_trial(&config, 1.4, 0.2).unwrap();
        assert_eq!(report.rows[0].successes, 0);
    }

    #[test]
    fn twosided_with_zero_delta2_matches_uniform() {
        let mut config = base_config();
        config.n = 128;
        config.d = 5; // omega = 1.4, delta2 = 5^-.5 * 2^5 * 2^-7 = 0.1118
        config.tau = 2.0;
        config.trials = 32;
        let two = run_twosided_sweep(&config, 0.6).unwrap();
        assert!((two.delta2_regime2 - 0.111_803_398_874_989_5).abs() < 1e-12);

        config.variants = vec![EdgeVariant::Uniform { delta: 0.6 }];
        let uni = run_query_sweep(&config).unwrap();
        let mut a = two.rows[0].clone();
        let mut b = uni.rows[0].clone();
        a.model = String::new();
        b.model = String::new();
        assert_eq!(a, b, "twosided(delta1, 0) must reproduce uniform(delta1)");
    }

    #[test]
    fn twosided_rejects_out_of_range_delta2() {
        let mut config = base_config();
        // tau^d 2^(-d omega) / sqrt(d) >= 1 when tau is close to 2^omega and
        // d is small; force it with a tiny dataset.
        config.n = 16;
        config.d = 4; // omega = 1, delta2 = 2^4 * 2^-4 / 2 = 0.5
        config.tau = 1.99;
        let err = run_twosided_sweep(&config, 0.4).unwrap_err();
        assert!(matches!(err, ExperimentError::Config(_)), "{err}");
    }

    #[test]
    fn concentration_suite_small_analytic_case() {
        // n=8, d=2: omega = 1.5, tau = 2 gives alpha = sqrt(1 - 4 * 2^-3)
        // = sqrt(0.5), and the d=2 cap volume is acos(alpha)/pi = 1/4.
        // Expected degree at delta=1 is therefore 7/4.
        let config = ExperimentConfig {
            n: 8,
            d: 2,
            tau: 2.0,
            variants: vec![EdgeVariant::Exact],
            r: 1.2,
            r0: 1.5,
            epsilon: 0.1,
            trials: 10_000,
            seeds: Seeds { dataset: 5, graph: 6, query: 7 },
            mc_samples: 1,
        };
        let report = run_concentration_suite(&config).unwrap();
        let row = &report.rows[0];
        assert!((row.pred_degree_mean - 1.75).abs() < 1e-12);
        // Grand mean over 1e4 independent graphs, 3-sigma band. The exact
        // graph is symmetric, so the edge total is twice a Binomial over the
        // 28 unordered pairs: Var(graph mean degree) = 4*28*q(1-q)/n^2 with
        // q = 1/4, giving stderr sqrt(21)/(8*100) ~ 0.0057 for the grand mean.
        let stderr = (4.0 * 28.0 * 0.25 * 0.75f64).sqrt() / (8.0 * (config.trials as f64).sqrt());
        assert!(
            (row.degree_grand_mean - 1.75).abs() <= 3.0 * stderr,
            "grand mean {} vs 1.75 (stderr {})",
            row.degree_grand_mean,
            stderr
        );
        // Chebyshev tail bound holds.
        let bound = row.degree_cheb_bound.unwrap();
        assert!(row.degree_outside_fraction <= bound + 3.0 * (bound / row.degree_observations as f64).sqrt());
    }

    #[test]
    fn concentration_suite_delta_zero_is_vacuous() {
        let mut config = base_config();
        config.variants = vec![EdgeVariant::Uniform { delta: 0.0 }];
        config.trials = 5;
        let report = run_concentration_suite(&config).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.degree_grand_mean, 0.0);
        assert!(row.degree_cheb_bound.is_none());
        assert!(row.edge_cheb_bound.is_none());
    }

    #[test]
    fn reports_write_csv_and_json_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("rows.csv");
        let json_path = dir.path().join("rows.json");
        let report = run_query_sweep(&base_config()).unwrap();
        report.write(&csv_path, &json_path).unwrap();
        let csv_text = std::fs::read_to_string(&csv_path).unwrap();
        assert!(csv_text.starts_with("model,"));
        assert_eq!(csv_text.lines().count(), 2);
        let json: serde_json::Value =
            serde_json::from_slice(&std::fs::read(&json_path).unwrap()).unwrap();
        assert_eq!(json["suite"], "query-sweep");
        assert!(json["formulas"]["pred_steps"].is_string());
    }
}
