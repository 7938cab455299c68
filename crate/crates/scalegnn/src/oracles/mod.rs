//! Exact ground-truth generators and verification oracles.
//!
//! Everything here is deliberately independent of the learned stack: these
//! functions label the datasets and cross-check the models, so they must
//! be boring and right.

mod components;
mod grid;
mod physics;
mod shortest_path;
mod tsp;

pub use components::count_components;
pub use grid::{grid_truth, GridTruth, IMPASSABLE_HEIGHT};
pub use physics::{chain_positions, incoming_position, initial_state, newton_step, PhysicsState, BALL_RADIUS};
pub use shortest_path::{bellman_ford_k, dijkstra, DistanceResult, UNREACHED};
pub use tsp::{tsp_exact, tsp_heuristic, TSP_EXACT_MAX};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("edge weight {0} is not positive")]
    NonPositiveWeight(f64),
    #[error("edge weight {0} is negative")]
    NegativeWeight(f64),
    #[error("source {0} out of range")]
    BadSource(usize),
    #[error("exact tour solver handles at most {max} points, got {got}; use tsp_heuristic")]
    TooManyPoints { max: usize, got: usize },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("{0}")]
    InvalidInput(String),
}
