//! Report rows, CSV/JSON emission, and the pre-emission self-audit.
//!
//! CSV columns follow struct field order: configuration columns first, then
//! empirical columns (`*_mean` / `*_stderr` suffixes), then predicted columns
//! (`pred_` prefix). Every predicted column has a formula entry in the JSON
//! report's `formulas` map. Reports contain no wall-clock fields so that
//! identical configurations produce byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::io::write_atomic;

use super::ExperimentError;

/// One sweep point of a query experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuerySweepRow {
    // Configuration.
    pub model: String,
    pub n: usize,
    pub d: usize,
    pub omega: f64,
    pub tau: f64,
    pub r: f64,
    pub r0: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub dataset_seed: u64,
    pub graph_seed: u64,
    pub query_seed: u64,
    // Geometry calibration.
    pub alpha_tau: f64,
    pub volc_exact: f64,
    pub volc_mc_mean: f64,
    pub volc_mc_stderr: f64,
    pub mc_samples: u64,
    /// Calibrated constant for the analytic cap-volume lower bound at this
    /// dimension.
    pub cap_lb_constant: f64,
    // Empirical query statistics.
    pub successes: u64,
    pub fail_count: u64,
    pub success_rate: f64,
    pub success_stderr: f64,
    pub steps_mean: f64,
    pub steps_median: f64,
    pub steps_max: u64,
    pub comparisons_total: u64,
    pub comparisons_mean: f64,
    // Empirical graph statistics.
    pub edge_count: usize,
    pub degree_mean: f64,
    pub degree_min: usize,
    pub degree_max: usize,
    pub degree_variance: f64,
    // Predictions.
    pub delta_eff: f64,
    pub pred_pair_probability: f64,
    pub pred_degree_mean: f64,
    pub pred_degree_band_lo: f64,
    pub pred_degree_band_hi: f64,
    pub pred_edge_count: f64,
    pub pred_edge_band_lo: f64,
    pub pred_edge_band_hi: f64,
    pub cheb_degree_band_lo: f64,
    pub cheb_degree_band_hi: f64,
    pub cheb_edge_band_lo: f64,
    pub cheb_edge_band_hi: f64,
    pub pred_steps: f64,
    pub pred_failure_bound: f64,
    pub bound_vacuous: bool,
    pub pred_query_cost: f64,
    pub pred_query_cost_delta: f64,
}

/// One sweep point of a progress experiment. Per-trial outcomes are kept in
/// memory for coupled comparisons but are not serialized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressRow {
    pub model: String,
    pub n: usize,
    pub d: usize,
    pub omega: f64,
    pub tau: f64,
    pub s: f64,
    pub eps: f64,
    pub trials: usize,
    pub dataset_seed: u64,
    pub graph_seed: u64,
    pub query_seed: u64,
    pub successes: u64,
    pub progress_rate: f64,
    pub progress_stderr: f64,
    pub delta_eff: f64,
    pub pred_progress_bound: f64,
    pub pred_wedge_volume_lb: f64,
    #[serde(skip)]
    pub per_trial: Vec<bool>,
}

/// One model of a concentration experiment: degree and edge-count
/// observations over repeated (dataset, coins) draws, with tail fractions
/// against the Chebyshev bound and both bands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub model: String,
    pub n: usize,
    pub d: usize,
    pub omega: f64,
    pub tau: f64,
    pub repeats: usize,
    pub dataset_seed: u64,
    pub graph_seed: u64,
    pub pair_probability: f64,
    // Per-vertex degrees: repeats * n observations of Binomial(n-1, b).
    pub degree_observations: u64,
    pub degree_outside_count: u64,
    pub degree_outside_fraction: f64,
    /// 4 / ((n-1) b); `None` when b = 0 makes the bound vacuous.
    pub degree_cheb_bound: Option<f64>,
    pub degree_grand_mean: f64,
    pub pred_degree_mean: f64,
    pub degree_cheb_band_lo: f64,
    pub degree_cheb_band_hi: f64,
    pub degree_binom_band_lo: f64,
    pub degree_binom_band_hi: f64,
    // Edge totals: repeats observations of Binomial(n(n-1), b).
    pub edge_observations: u64,
    pub edge_outside_count: u64,
    pub edge_outside_fraction: f64,
    /// 4 / (n (n-1) b); `None` when b = 0.
    pub edge_cheb_bound: Option<f64>,
    pub edge_grand_mean: f64,
    pub pred_edge_count: f64,
    pub edge_cheb_band_lo: f64,
    pub edge_cheb_band_hi: f64,
    pub edge_binom_band_lo: f64,
    pub edge_binom_band_hi: f64,
}

/// Formula identifiers for every predicted column, keyed by column name.
pub fn prediction_formulas() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("alpha_tau", "sqrt(1 - tau^2 * 2^(-2 omega))"),
        ("volc_exact", "0.5 * I_(1 - alpha_tau^2)((d-1)/2, 1/2)"),
        (
            "cap_lb_constant",
            "largest c with c * d^(-1/2) (1-gamma^2)^(d/2) <= volc_exact over gamma in [0, 0.99], per d",
        ),
        ("delta_eff", "exact: 1; uniform: delta; adaptive: 1 - acos(alpha_tau)/pi; twosided: delta1"),
        (
            "pred_pair_probability",
            "exact: volc; uniform: delta*volc; adaptive: E[(1 - theta/pi) | theta <= acos(alpha_tau)] * volc; twosided: delta2 + (delta1 - delta2)*volc",
        ),
        ("pred_degree_mean", "(n-1) * pair_probability"),
        ("pred_degree_band", "pred_degree_mean -/+ 4 * sqrt((n-1) p (1-p) / n)"),
        ("pred_edge_count", "n * (n-1) * pair_probability"),
        ("pred_edge_band", "pred_edge_count -/+ 4 * sqrt(n (n-1) p (1-p))"),
        ("cheb_degree_band", "pred_degree_mean -/+ (n-1) p / 2"),
        ("cheb_edge_band", "pred_edge_count -/+ n (n-1) p / 2"),
        ("degree_cheb_bound", "4 / ((n-1) p)"),
        ("edge_cheb_bound", "4 / (n (n-1) p)"),
        ("degree_binom_band", "(n-1) p -/+ 4 * sqrt((n-1) p (1-p)), per observation"),
        ("edge_binom_band", "n (n-1) p -/+ 4 * sqrt(n (n-1) p (1-p)), per observation"),
        ("pred_steps", "(r0 - r) * 2^omega / epsilon"),
        (
            "pred_failure_bound",
            "min(1, pred_steps * exp(-r^d * delta_eff / sqrt(d))), constant factor 1",
        ),
        ("pred_query_cost", "2^omega * epsilon^(-1) * d^(1/2) * tau^d, constant factor 1"),
        ("pred_query_cost_delta", "pred_query_cost * delta_eff"),
        ("pred_progress_bound", "1 - exp(-s^d * delta_eff / sqrt(d)), constant factor 1"),
        ("pred_wedge_volume_lb", "s^d / (n sqrt(d))"),
        ("success_stderr", "sqrt(rate (1 - rate) / trials)"),
        ("progress_stderr", "sqrt(rate (1 - rate) / trials)"),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuerySweepReport {
    pub suite: String,
    pub formulas: BTreeMap<&'static str, &'static str>,
    pub rows: Vec<QuerySweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressReport {
    pub suite: String,
    pub formulas: BTreeMap<&'static str, &'static str>,
    pub rows: Vec<ProgressRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSidedReport {
    pub suite: String,
    pub delta1: f64,
    /// The structured second regime value `d^(-1/2) tau^d 2^(-d omega)`.
    pub delta2_regime2: f64,
    pub formulas: BTreeMap<&'static str, &'static str>,
    pub rows: Vec<QuerySweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub suite: String,
    pub formulas: BTreeMap<&'static str, &'static str>,
    pub rows: Vec<ConcentrationRow>,
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, ExperimentError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    writer
        .into_inner()
        .map_err(|e| ExperimentError::Config(format!("csv buffer error: {e}")))
}

fn audit_rate(
    what: &str,
    successes: u64,
    trials: usize,
    rate: f64,
    stderr: f64,
) -> Result<(), ExperimentError> {
    let want_rate = successes as f64 / trials as f64;
    let want_stderr = (want_rate * (1.0 - want_rate) / trials as f64).sqrt();
    if rate != want_rate || stderr != want_stderr {
        return Err(ExperimentError::Audit(format!(
            "{what}: rate/stderr ({rate}, {stderr}) do not recompute from raw counts \
             ({successes}/{trials} -> {want_rate}, {want_stderr})"
        )));
    }
    Ok(())
}

impl QuerySweepRow {
    /// Recompute every derived field from the raw counts and predictions
    /// from their inputs; reject the row on any mismatch.
    pub fn self_audit(&self) -> Result<(), ExperimentError> {
        audit_rate(&self.model, self.successes, self.trials, self.success_rate, self.success_stderr)?;
        if self.successes + self.fail_count != self.trials as u64 {
            return Err(ExperimentError::Audit(format!(
                "{}: successes {} + fails {} != trials {}",
                self.model, self.successes, self.fail_count, self.trials
            )));
        }
        let want = self.comparisons_total as f64 / self.trials as f64;
        if self.comparisons_mean != want {
            return Err(ExperimentError::Audit(format!(
                "{}: comparisons_mean {} != {want}",
                self.model, self.comparisons_mean
            )));
        }
        let n = self.n as f64;
        if self.degree_mean != self.edge_count as f64 / n {
            return Err(ExperimentError::Audit(format!(
                "{}: degree_mean does not recompute from edge_count",
                self.model
            )));
        }
        let p = self.pred_pair_probability;
        let checks = [
            ("pred_degree_mean", self.pred_degree_mean, (n - 1.0) * p),
            ("pred_edge_count", self.pred_edge_count, n * (n - 1.0) * p),
            (
                "pred_degree_band_lo",
                self.pred_degree_band_lo,
                (n - 1.0) * p - 4.0 * ((n - 1.0) * p * (1.0 - p) / n).sqrt(),
            ),
            (
                "pred_degree_band_hi",
                self.pred_degree_band_hi,
                (n - 1.0) * p + 4.0 * ((n - 1.0) * p * (1.0 - p) / n).sqrt(),
            ),
            (
                "pred_edge_band_lo",
                self.pred_edge_band_lo,
                n * (n - 1.0) * p - 4.0 * (n * (n - 1.0) * p * (1.0 - p)).sqrt(),
            ),
            (
                "pred_edge_band_hi",
                self.pred_edge_band_hi,
                n * (n - 1.0) * p + 4.0 * (n * (n - 1.0) * p * (1.0 - p)).sqrt(),
            ),
            ("cheb_degree_band_lo", self.cheb_degree_band_lo, (n - 1.0) * p * 0.5),
            ("cheb_degree_band_hi", self.cheb_degree_band_hi, (n - 1.0) * p * 1.5),
            ("cheb_edge_band_lo", self.cheb_edge_band_lo, n * (n - 1.0) * p * 0.5),
            ("cheb_edge_band_hi", self.cheb_edge_band_hi, n * (n - 1.0) * p * 1.5),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(ExperimentError::Audit(format!(
                    "{}: {name} = {got} does not recompute to {want}",
                    self.model
                )));
            }
        }
        Ok(())
    }
}

impl ProgressRow {
    pub fn self_audit(&self) -> Result<(), ExperimentError> {
        audit_rate(&self.model, self.successes, self.trials, self.progress_rate, self.progress_stderr)?;
        let per_trial_successes = self.per_trial.iter().filter(|&&b| b).count() as u64;
        if per_trial_successes != self.successes {
            return Err(ExperimentError::Audit(format!(
                "{}: per-trial bits sum to {per_trial_successes}, stored {}",
                self.model, self.successes
            )));
        }
        Ok(())
    }
}

impl ConcentrationRow {
    pub fn self_audit(&self) -> Result<(), ExperimentError> {
        let fraction = self.degree_outside_count as f64 / self.degree_observations as f64;
        if self.degree_outside_fraction != fraction {
            return Err(ExperimentError::Audit(format!(
                "{}: degree_outside_fraction does not recompute",
                self.model
            )));
        }
        let fraction = self.edge_outside_count as f64 / self.edge_observations as f64;
        if self.edge_outside_fraction != fraction {
            return Err(ExperimentError::Audit(format!(
                "{}: edge_outside_fraction does not recompute",
                self.model
            )));
        }
        Ok(())
    }
}

macro_rules! report_io {
    ($ty:ty) => {
        impl $ty {
            pub fn self_audit(&self) -> Result<(), ExperimentError> {
                for row in &self.rows {
                    row.self_audit()?;
                }
                Ok(())
            }

            pub fn csv_bytes(&self) -> Result<Vec<u8>, ExperimentError> {
                self.self_audit()?;
                csv_bytes(&self.rows)
            }

            pub fn json_bytes(&self) -> Result<Vec<u8>, ExperimentError> {
                self.self_audit()?;
                let mut bytes = serde_json::to_vec_pretty(self)
                    .map_err(|e| ExperimentError::Config(format!("json encode error: {e}")))?;
                bytes.push(b'\n');
                Ok(bytes)
            }

            /// Write the CSV and JSON forms atomically.
            pub fn write(&self, csv_path: &Path, json_path: &Path) -> Result<(), ExperimentError> {
                write_atomic(csv_path, &self.csv_bytes()?)?;
                write_atomic(json_path, &self.json_bytes()?)?;
                Ok(())
            }
        }
    };
}

report_io!(QuerySweepReport);
report_io!(ProgressReport);
report_io!(TwoSidedReport);
report_io!(ConcentrationReport);
