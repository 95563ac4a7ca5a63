//! Cooperative output regulation of discrete-time multi-agent systems with an
//! adaptive distributed observer.
//!
//! A leader `v(t+1) = S v(t)` drives heterogeneous followers
//! `x_i(t+1) = A_i x_i + B_i u_i + E_i v`. Followers hear only their
//! neighbours, estimate `S` and `v` by consensus, solve their regulator
//! equations online by gradient iteration, and apply state or measurement
//! output feedback so that every regulated output `e_i` tends to zero.

pub mod controller;
pub mod error;
pub mod gains;
pub mod linalg;
pub mod observer;
pub mod regsolver;
pub mod scenarios;
pub mod sim;
pub mod systems;
pub mod tol;
pub mod topology;

pub use controller::{ControlMode, ControllerConfig, ControllerState, GainSide};
pub use error::{Error, Result};
pub use gains::{GainReport, Gains};
pub use linalg::{Complex64, Matrix, Spectrum};
pub use observer::ObserverState;
pub use regsolver::RegulatorIterate;
pub use sim::{InitMode, ObserverVariant, Scenario, SimTrace};
pub use systems::{AssumptionCheck, AssumptionReport, FollowerPlant, LeaderSystem};
pub use topology::{Digraph, HMatrix};
