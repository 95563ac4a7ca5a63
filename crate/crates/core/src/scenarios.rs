//! The four-follower worked example: a rotating leader, double-integrator
//! followers with agent-dependent disturbance coupling, and a fixed graph.

use std::f64::consts::FRAC_PI_4;

use crate::controller::ControlMode;
use crate::gains::Gains;
use crate::linalg::Matrix;
use crate::sim::{InitMode, ObserverVariant, Scenario};
use crate::systems::{FollowerPlant, LeaderSystem};
use crate::topology::Digraph;

pub const REFERENCE_FOLLOWERS: usize = 4;
pub const REFERENCE_HORIZON: usize = 2000;

/// First tick from which the reference state-feedback run keeps every error
/// measure below `tol::CONVERGENCE_THRESHOLD`, recorded from the reference run.
pub const REFERENCE_CONVERGENCE_TICK: usize = 802;

/// `S` rotates by `π/4` per tick; `v(0) = (0, 2)`.
pub fn reference_leader() -> LeaderSystem {
    let (s, c) = FRAC_PI_4.sin_cos();
    let rot = Matrix::from_rows(&[[c, s], [-s, c]]).expect("finite");
    LeaderSystem::new(rot, Matrix::col(&[0.0, 2.0])).expect("valid leader")
}

/// Follower `i` (1-based).
pub fn reference_plant(i: usize) -> FollowerPlant {
    let k = 2.0 * i as f64 - 1.0;
    let m = |rows: &[&[f64]]| Matrix::from_rows(rows).expect("finite");
    FollowerPlant::new(
        m(&[&[0.0, 1.0], &[0.0, 0.0]]),
        Matrix::col(&[0.0, 1.0]),
        m(&[&[1.0, 0.0]]),
        Matrix::zeros(1, 1),
        m(&[&[0.0, k], &[0.0, 1.0]]),
        m(&[&[-1.0, 0.0]]),
        m(&[&[1.0, 0.0]]),
        Matrix::zeros(1, 1),
        m(&[&[-1.0, 0.0]]),
        None,
    )
    .expect("valid plant")
}

pub fn reference_plants() -> Vec<FollowerPlant> {
    (1..=REFERENCE_FOLLOWERS).map(reference_plant).collect()
}

/// Edges `0→1, 3→1, 1→2, 2→3, 4→3, 3→4` with unit weights.
pub fn reference_graph() -> Digraph {
    Digraph::from_edges(
        REFERENCE_FOLLOWERS,
        &[
            (0, 1, 1.0),
            (3, 1, 1.0),
            (1, 2, 1.0),
            (2, 3, 1.0),
            (4, 3, 1.0),
            (3, 4, 1.0),
        ],
    )
    .expect("valid graph")
}

/// Closed-form regulator solution `(X_i, U_i)` of follower `i` (1-based).
pub fn reference_regulator_solution(i: usize) -> (Matrix, Matrix) {
    let (s, c) = FRAC_PI_4.sin_cos();
    let k = 2.0 * i as f64 - 1.0;
    let x = Matrix::from_rows(&[[1.0, 0.0], [c, s - k]]).expect("finite");
    let row = Matrix::from_rows(&[[c, s - k]]).expect("finite");
    let u = &(&row * &reference_leader().s) - &Matrix::from_rows(&[[0.0, 1.0]]).expect("finite");
    (x, u)
}

/// `μ1 = 0.3`, `μ2 = 0.4`, `μ3 = 0.1`, `K_x = [0.2, 0]` for every follower.
pub fn reference_gains() -> Gains {
    let kx = Matrix::from_rows(&[[0.2, 0.0]]).expect("finite");
    Gains {
        mu1: 0.3,
        mu2: 0.4,
        mu3: vec![0.1; REFERENCE_FOLLOWERS],
        k_x: vec![kx; REFERENCE_FOLLOWERS],
        l: vec![None; REFERENCE_FOLLOWERS],
        overrides: false,
    }
}

/// State feedback from zero follower and observer states.
pub fn reference_scenario() -> Scenario {
    Scenario {
        leader: reference_leader(),
        plants: reference_plants(),
        graph: reference_graph(),
        gains: reference_gains(),
        mode: ControlMode::StateFeedback,
        horizon: REFERENCE_HORIZON,
        seed: 0,
        init: InitMode::Explicit,
        variant: ObserverVariant::Adaptive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;

    #[test]
    fn closed_form_solves_regulator_equations() {
        let leader = reference_leader();
        for (k, p) in reference_plants().iter().enumerate() {
            let (x, u) = reference_regulator_solution(k + 1);
            let (r1, r2) = systems::regulator_equation_residuals(p, &leader.s, &x, &u);
            assert!(r1 < 1e-14 && r2 < 1e-14, "agent {}: {r1} {r2}", k + 1);
        }
    }

    #[test]
    fn first_follower_feedforward_row() {
        let (_, u) = reference_regulator_solution(1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u[(0, 0)] - h).abs() < 1e-15);
        assert!((u[(0, 1)] + h).abs() < 1e-15);
    }
}
