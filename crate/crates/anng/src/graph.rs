//! Near-neighbor graphs over unit-sphere datasets.
//!
//! An edge i -> j exists iff the pair passes the model's threshold/probability
//! rule under a per-pair coin. Coins are a pure function of
//! `(seed, i, j)`, so graphs built at different retention probabilities from
//! the same seed are nested (a coin that passes delta also passes any
//! delta' >= delta) and construction is independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    alpha_fn, sample_unit_sphere, DensityParams, GeometryError, UnitVector,
};
use crate::rng::{derive_seed, unit_f64};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("tau must exceed 1, got {0}")]
    InvalidTau(f64),
    #[error("probability {name}={value} must lie in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("two-sided model requires delta1 > delta2, got delta1={delta1}, delta2={delta2}")]
    DeltaOrder { delta1: f64, delta2: f64 },
    #[error("dataset has {points} points but params declare n={n}")]
    PointCountMismatch { points: usize, n: usize },
    #[error("point {index} has dimension {got}, expected {want}")]
    PointDimensionMismatch { index: usize, got: usize, want: usize },
}

/// An n-point dataset on S^(d-1) with its density parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<UnitVector>,
    params: DensityParams,
}

impl Dataset {
    pub fn new(points: Vec<UnitVector>, params: DensityParams) -> Result<Self, GraphError> {
        if points.len() != params.n() {
            return Err(GraphError::PointCountMismatch {
                points: points.len(),
                n: params.n(),
            });
        }
        for (index, p) in points.iter().enumerate() {
            if p.dim() != params.d() {
                return Err(GraphError::PointDimensionMismatch {
                    index,
                    got: p.dim(),
                    want: params.d(),
                });
            }
        }
        Ok(Self { points, params })
    }

    /// Generate n i.i.d. uniform sphere points from a seed.
    pub fn generate(params: DensityParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x_da7a, 0));
        let points = (0..params.n())
            .map(|_| sample_unit_sphere(params.d(), &mut rng).expect("d >= 2 by params"))
            .collect();
        Self { points, params }
    }

    pub fn params(&self) -> &DensityParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &UnitVector {
        &self.points[i]
    }

    pub fn points(&self) -> &[UnitVector] {
        &self.points
    }
}

/// Edge-retention rule applied on top of the inner-product threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EdgeVariant {
    /// Keep every edge that passes the threshold.
    Exact,
    /// Keep threshold edges independently with probability `delta`.
    Uniform { delta: f64 },
    /// Keep threshold edges with angle-dependent probability `1 - theta/pi`.
    Adaptive,
    /// Keep threshold edges with probability `delta1` and add non-threshold
    /// edges with probability `delta2 < delta1`.
    TwoSided { delta1: f64, delta2: f64 },
}

impl EdgeVariant {
    pub fn label(&self) -> String {
        match self {
            EdgeVariant::Exact => "exact".to_string(),
            EdgeVariant::Uniform { delta } => format!("uniform:{delta}"),
            EdgeVariant::Adaptive => "adaptive".to_string(),
            EdgeVariant::TwoSided { delta1, delta2 } => format!("twosided:{delta1},{delta2}"),
        }
    }
}

/// A complete edge rule: variant plus the threshold scale `tau > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeModel {
    variant: EdgeVariant,
    tau: f64,
}

impl EdgeModel {
    pub fn new(variant: EdgeVariant, tau: f64) -> Result<Self, GraphError> {
        if tau <= 1.0 || tau.is_nan() {
            return Err(GraphError::InvalidTau(tau));
        }
        let check = |name: &'static str, value: f64| {
            if (0.0..=1.0).contains(&value) && !value.is_nan() {
                Ok(())
            } else {
                Err(GraphError::InvalidProbability { name, value })
            }
        };
        match variant {
            EdgeVariant::Exact | EdgeVariant::Adaptive => {}
            EdgeVariant::Uniform { delta } => check("delta", delta)?,
            EdgeVariant::TwoSided { delta1, delta2 } => {
                check("delta1", delta1)?;
                check("delta2", delta2)?;
                if delta1 <= delta2 {
                    return Err(GraphError::DeltaOrder { delta1, delta2 });
                }
            }
        }
        Ok(Self { variant, tau })
    }

    pub fn variant(&self) -> EdgeVariant {
        self.variant
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn label(&self) -> String {
        self.variant.label()
    }

    /// Probability that the edge i -> j exists given the angle between the
    /// endpoints and the threshold `alpha_tau`.
    pub fn edge_probability(&self, theta_ij: f64, alpha_tau: f64) -> f64 {
        debug_assert!((0.0..=std::f64::consts::PI).contains(&theta_ij));
        self.probability_from_dot(theta_ij.cos(), alpha_tau)
    }

    /// Same rule expressed on the raw inner product; this is the form the
    /// builder evaluates so that threshold ties compare `dot >= alpha_tau`
    /// exactly.
    #[inline]
    pub(crate) fn probability_from_dot(&self, dot: f64, alpha_tau: f64) -> f64 {
        let passes = dot >= alpha_tau;
        match self.variant {
            EdgeVariant::Exact => {
                if passes {
                    1.0
                } else {
                    0.0
                }
            }
            EdgeVariant::Uniform { delta } => {
                if passes {
                    delta
                } else {
                    0.0
                }
            }
            EdgeVariant::Adaptive => {
                if passes {
                    1.0 - dot.clamp(-1.0, 1.0).acos() / std::f64::consts::PI
                } else {
                    0.0
                }
            }
            EdgeVariant::TwoSided { delta1, delta2 } => {
                if passes {
                    delta1
                } else {
                    delta2
                }
            }
        }
    }

    /// The retention probability that enters the failure-bound formula:
    /// 1 for exact graphs, delta for uniform, the mean in-cap retention
    /// `1 - acos(alpha_tau)/pi` for adaptive, and delta1 for two-sided.
    pub fn effective_delta(&self, alpha_tau: f64) -> f64 {
        match self.variant {
            EdgeVariant::Exact => 1.0,
            EdgeVariant::Uniform { delta } => delta,
            EdgeVariant::Adaptive => 1.0 - alpha_tau.clamp(-1.0, 1.0).acos() / std::f64::consts::PI,
            EdgeVariant::TwoSided { delta1, .. } => delta1,
        }
    }
}

/// The coin for the ordered pair (i, j): a uniform value in [0, 1) that is a
/// pure function of `(seed, i, j)`. Directed coins are distinct: (i, j) and
/// (j, i) are independent streams. Panics if `i == j` (graphs have no
/// self-loops, so that coin must never be consulted).
#[inline]
pub fn coin_flip(seed: u64, i: usize, j: usize) -> f64 {
    assert!(i != j, "coin_flip is undefined for i == j (i = {i})");
    unit_f64(derive_seed(seed, i as u64, j as u64))
}

/// Decide the edge i -> j from the pair's inner product, sharing the exact
/// rule (threshold, coin, strict `<`) with [`build_graph`].
#[inline]
pub(crate) fn edge_exists(
    model: &EdgeModel,
    alpha_tau: f64,
    seed: u64,
    i: usize,
    j: usize,
    dot: f64,
) -> bool {
    let p = model.probability_from_dot(dot, alpha_tau);
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        coin_flip(seed, i, j) < p
    }
}

/// Directed graph over dataset indices with CSR adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    n: usize,
    dim: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    model: EdgeModel,
    seed: u64,
}

impl NeighborGraph {
    pub(crate) fn from_parts(
        n: usize,
        dim: usize,
        offsets: Vec<usize>,
        targets: Vec<u32>,
        model: EdgeModel,
        seed: u64,
    ) -> Self {
        debug_assert_eq!(offsets.len(), n + 1);
        debug_assert_eq!(*offsets.last().unwrap_or(&0), targets.len());
        Self { n, dim, offsets, targets, model, seed }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> &EdgeModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn targets(&self) -> &[u32] {
        &self.targets
    }

    /// Out-neighbors of `p`, sorted ascending. O(1) lookup of the stored
    /// list. Panics if `p >= n`.
    pub fn neighbors(&self, p: usize) -> &[u32] {
        assert!(p < self.n, "vertex {p} out of range (n = {})", self.n);
        &self.targets[self.offsets[p]..self.offsets[p + 1]]
    }

    /// Exact out-degree statistics.
    pub fn degree_stats(&self) -> DegreeStats {
        if self.n == 0 {
            return DegreeStats::default();
        }
        let degrees: Vec<usize> = (0..self.n)
            .map(|i| self.offsets[i + 1] - self.offsets[i])
            .collect();
        let edge_count = self.targets.len();
        let mean = edge_count as f64 / self.n as f64;
        let variance = degrees
            .iter()
            .map(|&d| (d as f64 - mean).powi(2))
            .sum::<f64>()
            / self.n as f64;
        DegreeStats {
            mean,
            min: *degrees.iter().min().unwrap(),
            max: *degrees.iter().max().unwrap(),
            variance,
            edge_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DegreeStats {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    pub variance: f64,
    pub edge_count: usize,
}

/// Build the graph for `model` over `data`. For every ordered pair (i, j),
/// i != j, the edge exists iff `coin_flip(seed, i, j)` falls below the
/// model's probability for that pair. Deterministic in `(data, model, seed)`
/// and independent of worker count: rows are built independently.
pub fn build_graph(
    data: &Dataset,
    model: &EdgeModel,
    seed: u64,
) -> Result<NeighborGraph, GraphError> {
    let params = data.params();
    let n = params.n();
    let alpha_tau = alpha_fn(model.tau(), params.omega())?;

    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = data.point(i).coords();
            let mut row = Vec::new();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dot = crate::geometry::dot(pi, data.point(j).coords());
                if edge_exists(model, alpha_tau, seed, i, j, dot) {
                    row.push(j as u32);
                }
            }
            row
        })
        .collect();

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    let mut total = 0usize;
    for row in &rows {
        total += row.len();
        offsets.push(total);
    }
    let mut targets = Vec::with_capacity(total);
    for row in rows {
        targets.extend(row);
    }
    Ok(NeighborGraph::from_parts(n, params.d(), offsets, targets, *model, seed))
}
