//! One step of the colliding-balls simulator.
//!
//! A chain of identical balls rests touching on a friction-free line; one
//! more ball approaches from the left at constant speed. Collisions are
//! elastic between equal masses, so an impact transfers the full speed
//! through the chain to the rightmost ball instantaneously.

use super::OracleError;

/// Ball radius in simulator units.
pub const BALL_RADIUS: f64 = 0.1;

/// Positions and speeds of the two end balls after the step. The balls in
/// between never move. Coordinates put the origin at the centre of the
/// resting chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsState {
    pub left_pos: f64,
    pub left_speed: f64,
    pub right_pos: f64,
    pub right_speed: f64,
}

/// Centre positions of the resting chain of `m` balls.
pub fn chain_positions(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| (j as f64 - (m as f64 - 1.0) / 2.0) * 2.0 * BALL_RADIUS)
        .collect()
}

/// Initial centre of the incoming ball given the surface gap to the chain.
pub fn incoming_position(m: usize, gap: f64) -> f64 {
    chain_positions(m)[0] - 2.0 * BALL_RADIUS - gap
}

/// Initial centre positions and speeds of all `n_balls` balls, incoming
/// ball first, then the resting chain.
pub fn initial_state(n_balls: usize, gap: f64, v: f64) -> (Vec<f64>, Vec<f64>) {
    let m = n_balls - 1;
    let mut positions = Vec::with_capacity(n_balls);
    positions.push(incoming_position(m, gap));
    positions.extend(chain_positions(m));
    let mut speeds = vec![0.0; n_balls];
    speeds[0] = v;
    (positions, speeds)
}

/// Advance the system by `dt`: the incoming ball either travels freely or
/// hits the chain, stopping dead while the rightmost ball leaves with the
/// incoming speed (momentum and kinetic energy carry over exactly).
pub fn newton_step(
    n_balls: usize,
    gap: f64,
    v: f64,
    dt: f64,
) -> Result<PhysicsState, OracleError> {
    if n_balls < 2 {
        return Err(OracleError::InvalidInput(format!(
            "need at least 2 balls, got {n_balls}"
        )));
    }
    if gap < 0.0 || v < 0.0 || dt < 0.0 {
        return Err(OracleError::InvalidInput(format!(
            "negative input: gap={gap}, v={v}, dt={dt}"
        )));
    }
    let m = n_balls - 1;
    let chain = chain_positions(m);
    let left0 = incoming_position(m, gap);
    let right0 = chain[m - 1];
    let travel = v * dt;
    if travel < gap {
        Ok(PhysicsState {
            left_pos: left0 + travel,
            left_speed: v,
            right_pos: right0,
            right_speed: 0.0,
        })
    } else {
        Ok(PhysicsState {
            left_pos: left0 + gap,
            left_speed: 0.0,
            right_pos: right0 + (travel - gap),
            right_speed: v,
        })
    }
}
