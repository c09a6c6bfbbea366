//! Greedy nearest-neighbor search on exact and randomized near-neighbor
//! graphs over unit-sphere data.
//!
//! The crate has four layers:
//!
//! * [`geometry`] — sphere sampling, angles, the edge-threshold alpha
//!   function, and relative cap/wedge volumes with both closed forms and
//!   Monte Carlo estimators.
//! * [`graph`] — the threshold graph and its randomized variants (uniform,
//!   angle-adaptive, two-sided retention), built from coupled per-pair coins
//!   so sweeps over retention probabilities compare like with like.
//! * [`search`] — the greedy step and query loop, plus planted queries that
//!   make the search premise true by construction.
//! * [`experiments`] — a seeded Monte Carlo harness estimating success
//!   rates, step counts, and degree/edge concentration, with predictions
//!   attached, emitted as CSV and JSON.
//!
//! Binary dataset/graph formats live in [`io`]. Everything is deterministic
//! given the explicit seeds, including under parallel execution.

pub mod experiments;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod rng;
pub mod search;
mod special;

pub use geometry::{
    alpha_fn, angle, cap_volume_exact, cap_volume_lb_constant, cap_volume_lower_bound,
    cap_volume_mc, sample_unit_sphere, wedge_lb, wedge_volume_mc, CapSpec, DensityParams,
    GeometryError, McEstimate, UnitVector, WedgeSpec,
};
pub use graph::{
    build_graph, coin_flip, Dataset, DegreeStats, EdgeModel, EdgeVariant, GraphError,
    NeighborGraph,
};
pub use search::{
    greedy_query, greedy_step, plant_query, warm_start, GreedyOutcome, GreedyStatus,
    PlantedQuery, QuerySpec, SearchError, Start, StepOutcome,
};
