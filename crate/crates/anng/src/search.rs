//! Greedy graph search and planted-query generation.
//!
//! A query succeeds at vertex p when `sin(theta_pq) <= r * 2^(-omega)` AND
//! `<p, q> > 0`. The inner-product condition disambiguates the sine, which
//! would otherwise also accept near-antipodal points; the greedy direction
//! maximizes the inner product, so only the near side is meaningful.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dot, sample_unit_sphere, DensityParams, UnitVector};
use crate::graph::{Dataset, NeighborGraph};

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("r={r} must lie in (1, 2^omega) = (1, {upper})")]
    InvalidRadius { r: f64, upper: f64 },
    #[error("warm-start radius r0={r0} must exceed r={r}")]
    InvalidWarmRadius { r0: f64, r: f64 },
    #[error("epsilon={epsilon} must lie in (0, r0 - r) = (0, {upper})")]
    InvalidEpsilon { epsilon: f64, upper: f64 },
    #[error("epsilon requires a warm-start radius r0")]
    EpsilonWithoutWarmRadius,
    #[error("query dimension {got} does not match dataset dimension {want}")]
    QueryDimensionMismatch { got: usize, want: usize },
    #[error("graph shape (n={graph_n}, d={graph_d}) does not match dataset (n={data_n}, d={data_d})")]
    GraphDataMismatch { graph_n: usize, graph_d: usize, data_n: usize, data_d: usize },
    #[error("start index {index} out of range for n={n}")]
    InvalidStart { index: usize, n: usize },
    #[error("planted radius r={r_target} gives sine distance {scale} > 1 at omega={omega}")]
    PlantRadiusTooLarge { r_target: f64, scale: f64, omega: f64 },
    #[error(
        "greedy walk exceeded the n-step cap (n={n}); strict progress makes this \
         unreachable, so this indicates an internal invariant violation"
    )]
    StepCapExceeded { n: usize },
    #[error("no dataset point lies within the warm-start radius of the query")]
    NoWarmStart,
}

/// A query point with its solve radius `r` and optional warm-start
/// parameters. `r` must lie in `(1, 2^omega)`; `r0 > r`;
/// `epsilon in (0, r0 - r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec {
    q: UnitVector,
    r: f64,
    r0: Option<f64>,
    epsilon: Option<f64>,
}

impl QuerySpec {
    pub fn new(q: UnitVector, r: f64, params: &DensityParams) -> Result<Self, SearchError> {
        if q.dim() != params.d() {
            return Err(SearchError::QueryDimensionMismatch { got: q.dim(), want: params.d() });
        }
        let upper = 2f64.powf(params.omega());
        if r.is_nan() || r <= 1.0 || r >= upper {
            return Err(SearchError::InvalidRadius { r, upper });
        }
        Ok(Self { q, r, r0: None, epsilon: None })
    }

    pub fn with_warm_radius(mut self, r0: f64) -> Result<Self, SearchError> {
        if r0.is_nan() || r0 <= self.r {
            return Err(SearchError::InvalidWarmRadius { r0, r: self.r });
        }
        self.r0 = Some(r0);
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self, SearchError> {
        let r0 = self.r0.ok_or(SearchError::EpsilonWithoutWarmRadius)?;
        let upper = r0 - self.r;
        if epsilon.is_nan() || epsilon <= 0.0 || epsilon >= upper {
            return Err(SearchError::InvalidEpsilon { epsilon, upper });
        }
        self.epsilon = Some(epsilon);
        Ok(self)
    }

    pub fn q(&self) -> &UnitVector {
        &self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn r0(&self) -> Option<f64> {
        self.r0
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }
}

/// How the walk picks its first vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Start {
    /// Uniformly random dataset index derived from the seed.
    RandomUniform { seed: u64 },
    /// A fixed dataset index (e.g. a warm start).
    Fixed { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GreedyStatus {
    Success,
    FailNoProgress,
}

/// Result of a single greedy step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Progress(usize),
    Fail,
}

/// Outcome of one full query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyOutcome {
    pub status: GreedyStatus,
    pub terminal: usize,
    pub steps: usize,
    pub comparisons: u64,
    pub path: Vec<usize>,
    pub sin_theta_terminal: f64,
}

#[inline]
fn sin_from_dot(d: f64) -> f64 {
    (1.0 - d * d).max(0.0).sqrt()
}

/// One greedy step for `q` at vertex `p`: among the out-neighbors of `p`,
/// the index maximizing the inner product with `q` wins if it strictly
/// improves on `<p, q>`; otherwise the step fails. Ties break to the lowest
/// index. Exactly `|neighbors(p)|` inner products are computed.
pub fn greedy_step(
    graph: &NeighborGraph,
    data: &Dataset,
    p: usize,
    q: &UnitVector,
) -> StepOutcome {
    let current = dot(data.point(p).coords(), q.coords());
    best_neighbor(graph, data, p, q)
        .filter(|&(_, d)| d > current)
        .map_or(StepOutcome::Fail, |(j, _)| StepOutcome::Progress(j))
}

/// Scan the adjacency row of `p` for the neighbor with maximal `<p', q>`.
/// Ascending iteration with a strict comparison keeps the lowest index on
/// ties.
fn best_neighbor(
    graph: &NeighborGraph,
    data: &Dataset,
    p: usize,
    q: &UnitVector,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &j in graph.neighbors(p) {
        let d = dot(data.point(j as usize).coords(), q.coords());
        if best.is_none_or(|(_, bd)| d > bd) {
            best = Some((j as usize, d));
        }
    }
    best
}

/// Run the full greedy walk: succeed as soon as the current vertex satisfies
/// the success condition, otherwise step greedily; a step with no strict
/// improvement ends the walk as `FailNoProgress`. Strict progress in
/// `<p, q>` bounds the walk by n-1 steps; the n-step cap converts a latent
/// bug into a loud error instead of a silent loop.
pub fn greedy_query(
    graph: &NeighborGraph,
    data: &Dataset,
    spec: &QuerySpec,
    start: Start,
) -> Result<GreedyOutcome, SearchError> {
    let n = data.len();
    if graph.n() != n || graph.dim() != data.params().d() {
        return Err(SearchError::GraphDataMismatch {
            graph_n: graph.n(),
            graph_d: graph.dim(),
            data_n: n,
            data_d: data.params().d(),
        });
    }
    let mut p = match start {
        Start::Fixed { index } => {
            if index >= n {
                return Err(SearchError::InvalidStart { index, n });
            }
            index
        }
        Start::RandomUniform { seed } => {
            ChaCha8Rng::seed_from_u64(seed).random_range(0..n)
        }
    };

    let q = spec.q();
    let sin_target = spec.r() * data.params().sine_scale();
    let mut path = vec![p];
    let mut comparisons = 0u64;

    for _ in 0..n {
        let current = dot(data.point(p).coords(), q.coords());
        let sin_theta = sin_from_dot(current);
        if sin_theta <= sin_target && current > 0.0 {
            return Ok(GreedyOutcome {
                status: GreedyStatus::Success,
                terminal: p,
                steps: path.len() - 1,
                comparisons,
                path,
                sin_theta_terminal: sin_theta,
            });
        }
        comparisons += graph.neighbors(p).len() as u64;
        match best_neighbor(graph, data, p, q) {
            Some((j, d)) if d > current => {
                debug_assert_ne!(j, p, "progress cannot revisit the current vertex");
                p = j;
                path.push(p);
            }
            _ => {
                return Ok(GreedyOutcome {
                    status: GreedyStatus::FailNoProgress,
                    terminal: p,
                    steps: path.len() - 1,
                    comparisons,
                    path,
                    sin_theta_terminal: sin_theta,
                });
            }
        }
    }
    Err(SearchError::StepCapExceeded { n })
}

/// A synthesized query with the dataset index it was planted next to.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedQuery {
    pub q: UnitVector,
    pub planted: usize,
}

/// Plant a query at controlled sine distance from a uniformly chosen dataset
/// point: the angle is `asin(u * r_target * 2^(-omega))` with `u` uniform in
/// [0, 1), in a uniform tangent direction. The planted point then satisfies
/// `sin(theta) <= r_target * 2^(-omega)` and lies on the near side
/// (`theta < pi/2`), so the search premise holds by construction.
pub fn plant_query<R: Rng + ?Sized>(
    data: &Dataset,
    rng: &mut R,
    r_target: f64,
) -> Result<PlantedQuery, SearchError> {
    let params = data.params();
    let scale = r_target * params.sine_scale();
    if scale > 1.0 {
        return Err(SearchError::PlantRadiusTooLarge {
            r_target,
            scale,
            omega: params.omega(),
        });
    }
    let planted = rng.random_range(0..data.len());
    let u: f64 = rng.random();
    let theta = (u * scale).asin();
    let tangent = tangent_direction(data.point(planted), rng);
    let q = place_query(data.point(planted), theta, &tangent);
    Ok(PlantedQuery { q, planted })
}

/// Uniform unit tangent direction at `center`: Gaussian sample projected
/// onto the tangent space and normalized.
pub(crate) fn tangent_direction<R: Rng + ?Sized>(center: &UnitVector, rng: &mut R) -> Vec<f64> {
    let d = center.dim();
    loop {
        let g = sample_unit_sphere(d, rng).expect("center dimension >= 2");
        let along = dot(g.coords(), center.coords());
        let mut t: Vec<f64> = g
            .coords()
            .iter()
            .zip(center.coords())
            .map(|(gi, ci)| gi - along * ci)
            .collect();
        let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            for x in &mut t {
                *x /= norm;
            }
            return t;
        }
    }
}

/// `cos(theta) * center + sin(theta) * tangent`. At `theta = 0` this returns
/// the center bit-exactly.
pub(crate) fn place_query(center: &UnitVector, theta: f64, tangent: &[f64]) -> UnitVector {
    let (sin_t, cos_t) = theta.sin_cos();
    let coords: Vec<f64> = center
        .coords()
        .iter()
        .zip(tangent)
        .map(|(c, t)| cos_t * c + sin_t * t)
        .collect();
    UnitVector::from_normalized(coords).expect("cos^2 + sin^2 keeps the norm at 1")
}

/// Brute-force warm start: among dataset points on the near side of `q`
/// within sine distance `r0 * 2^(-omega)`, return the farthest (largest
/// sine), ties to the lowest index. The farthest qualifying start exercises
/// the walk; the nearest would usually already satisfy the success test.
pub fn warm_start(data: &Dataset, q: &UnitVector, r0: f64) -> Result<usize, SearchError> {
    let threshold = r0 * data.params().sine_scale();
    let mut best: Option<(usize, f64)> = None;
    for i in 0..data.len() {
        let d = dot(data.point(i).coords(), q.coords());
        if d <= 0.0 {
            continue;
        }
        let sin_theta = sin_from_dot(d);
        if sin_theta <= threshold && best.is_none_or(|(_, bs)| sin_theta > bs) {
            best = Some((i, sin_theta));
        }
    }
    best.map(|(i, _)| i).ok_or(SearchError::NoWarmStart)
}
