//! Strict key=value experiment-config parsing.
//!
//! Grammar: one `key=value` per line; `#` starts a comment; blank lines are
//! ignored; `model=` may repeat, every other key may appear once. Unknown
//! keys are errors, as are missing required keys (listed per suite in the
//! error message).

use std::collections::BTreeMap;

use anng::experiments::{ExperimentConfig, Seeds};
use anng::EdgeVariant;
use anyhow::{anyhow, bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    QuerySweep,
    Progress,
    TwoSided,
    Concentration,
}

impl Suite {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "query-sweep" => Ok(Suite::QuerySweep),
            "progress" => Ok(Suite::Progress),
            "twosided" => Ok(Suite::TwoSided),
            "concentration" => Ok(Suite::Concentration),
            other => bail!(
                "unknown suite '{other}'; expected query-sweep | progress | twosided | concentration"
            ),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::QuerySweep => "query-sweep",
            Suite::Progress => "progress",
            Suite::TwoSided => "twosided",
            Suite::Concentration => "concentration",
        }
    }
}

/// A fully parsed experiment request.
#[derive(Debug, Clone)]
pub struct ExperimentRequest {
    pub suite: Suite,
    pub config: ExperimentConfig,
    /// progress suite only.
    pub progress_s: Option<f64>,
    pub progress_eps: Option<f64>,
    /// twosided suite only.
    pub delta1: Option<f64>,
}

const KNOWN_KEYS: &[&str] = &[
    "suite", "n", "d", "tau", "r", "r0", "epsilon", "trials", "dataset_seed",
    "graph_seed", "query_seed", "mc_samples", "model", "progress_s", "progress_eps",
    "delta1",
];

/// Parse a model token: `exact | uniform:DELTA | adaptive | twosided:D1,D2`.
pub fn parse_model(token: &str) -> Result<EdgeVariant> {
    if token == "exact" {
        return Ok(EdgeVariant::Exact);
    }
    if token == "adaptive" {
        return Ok(EdgeVariant::Adaptive);
    }
    if let Some(rest) = token.strip_prefix("uniform:") {
        let delta: f64 = rest.parse().map_err(|_| {
            anyhow!("bad model token '{token}': '{rest}' is not a number; expected uniform:DELTA")
        })?;
        return Ok(EdgeVariant::Uniform { delta });
    }
    if let Some(rest) = token.strip_prefix("twosided:") {
        let (a, b) = rest.split_once(',').ok_or_else(|| {
            anyhow!("bad model token '{token}': expected twosided:DELTA1,DELTA2")
        })?;
        let delta1: f64 = a.parse().map_err(|_| {
            anyhow!("bad model token '{token}': '{a}' is not a number; expected twosided:DELTA1,DELTA2")
        })?;
        let delta2: f64 = b.parse().map_err(|_| {
            anyhow!("bad model token '{token}': '{b}' is not a number; expected twosided:DELTA1,DELTA2")
        })?;
        return Ok(EdgeVariant::TwoSided { delta1, delta2 });
    }
    bail!(
        "bad model token '{token}'; expected exact | uniform:DELTA | adaptive | twosided:D1,D2"
    )
}

pub fn parse_experiment_config(text: &str) -> Result<ExperimentRequest> {
    let mut scalars: BTreeMap<String, String> = BTreeMap::new();
    let mut models: Vec<EdgeVariant> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key=value, got '{line}'", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            bail!("line {}: unknown key '{key}'", lineno + 1);
        }
        if key == "model" {
            models.push(parse_model(value)?);
        } else if scalars.insert(key.to_string(), value.to_string()).is_some() {
            bail!("line {}: duplicate key '{key}'", lineno + 1);
        }
    }

    let suite = Suite::parse(
        scalars
            .get("suite")
            .ok_or_else(|| missing_keys_error(&scalars, &models, None))?,
    )?;
    let missing = missing_for(suite, &scalars, &models);
    if !missing.is_empty() {
        bail!(
            "missing required keys for suite '{}': {}",
            suite.name(),
            missing.join(", ")
        );
    }

    let get_f64 = |k: &str| -> Result<f64> {
        scalars
            .get(k)
            .map(|v| v.parse::<f64>().map_err(|_| anyhow!("key '{k}': '{v}' is not a number")))
            .transpose()
            .map(|o| o.unwrap_or(0.0))
    };
    let get_u64 = |k: &str| -> Result<u64> {
        scalars
            .get(k)
            .map(|v| v.parse::<u64>().map_err(|_| anyhow!("key '{k}': '{v}' is not an integer")))
            .transpose()
            .map(|o| o.unwrap_or(0))
    };

    let config = ExperimentConfig {
        n: get_u64("n")? as usize,
        d: get_u64("d")? as usize,
        tau: get_f64("tau")?,
        variants: models,
        r: get_f64("r")?,
        r0: get_f64("r0")?,
        epsilon: get_f64("epsilon")?,
        trials: get_u64("trials")? as usize,
        seeds: Seeds {
            dataset: get_u64("dataset_seed")?,
            graph: get_u64("graph_seed")?,
            query: get_u64("query_seed")?,
        },
        mc_samples: get_u64("mc_samples")?,
    };

    Ok(ExperimentRequest {
        suite,
        config,
        progress_s: scalars.get("progress_s").map(|v| v.parse()).transpose()?,
        progress_eps: scalars.get("progress_eps").map(|v| v.parse()).transpose()?,
        delta1: scalars.get("delta1").map(|v| v.parse()).transpose()?,
    })
}

fn missing_for(
    suite: Suite,
    scalars: &BTreeMap<String, String>,
    models: &[EdgeVariant],
) -> Vec<&'static str> {
    let mut required: Vec<&'static str> = vec![
        "n", "d", "tau", "trials", "dataset_seed", "graph_seed", "query_seed",
    ];
    match suite {
        Suite::QuerySweep => required.extend(["r", "r0", "epsilon", "mc_samples", "model"]),
        Suite::TwoSided => required.extend(["r", "r0", "epsilon", "mc_samples", "delta1"]),
        Suite::Progress => required.extend(["progress_s", "progress_eps", "model"]),
        Suite::Concentration => required.push("model"),
    }
    required
        .into_iter()
        .filter(|&k| {
            if k == "model" {
                models.is_empty()
            } else {
                !scalars.contains_key(k)
            }
        })
        .collect()
}

fn missing_keys_error(
    scalars: &BTreeMap<String, String>,
    _models: &[EdgeVariant],
    _suite: Option<Suite>,
) -> anyhow::Error {
    let mut keys: Vec<&str> = scalars.keys().map(|s| s.as_str()).collect();
    keys.sort_unstable();
    anyhow!(
        "missing required key 'suite' (query-sweep | progress | twosided | concentration); \
         required keys: suite, n, d, tau, trials, dataset_seed, graph_seed, query_seed, \
         plus per-suite keys (r, r0, epsilon, mc_samples, model, progress_s, progress_eps, delta1); \
         got: [{}]",
        keys.join(", ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_query_sweep_config() {
        let text = "\
suite=query-sweep
n=256
d=6
tau=2.0
r=1.3            # solve radius
r0=1.8
epsilon=0.2
trials=10
dataset_seed=1
graph_seed=2
query_seed=3
mc_samples=1000
model=exact
model=uniform:0.5
";
        let req = parse_experiment_config(text).unwrap();
        assert_eq!(req.suite, Suite::QuerySweep);
        assert_eq!(req.config.variants.len(), 2);
        assert_eq!(req.config.trials, 10);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(parse_experiment_config("bogus=1").unwrap_err().to_string().contains("unknown key"));
        let text = "suite=progress\nn=8\nn=8\n";
        assert!(parse_experiment_config(text).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn empty_config_lists_required_keys() {
        let err = parse_experiment_config("").unwrap_err().to_string();
        assert!(err.contains("suite"));
        assert!(err.contains("required keys"));
    }

    #[test]
    fn missing_suite_keys_are_listed() {
        let text = "suite=query-sweep\nn=256\nd=6\n";
        let err = parse_experiment_config(text).unwrap_err().to_string();
        assert!(err.contains("missing required keys"));
        assert!(err.contains("model"));
        assert!(err.contains("epsilon"));
    }

    #[test]
    fn model_token_errors_name_the_token() {
        let err = parse_model("foo:bar").unwrap_err().to_string();
        assert!(err.contains("foo:bar"));
        let err = parse_model("uniform:x").unwrap_err().to_string();
        assert!(err.contains("'x' is not a number"));
        assert!(parse_model("twosided:0.8,0.1").is_ok());
        assert!(parse_model("twosided:0.8").is_err());
    }
}
