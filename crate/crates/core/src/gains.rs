//! Gain sets for the full control law, their admissible ranges, and the
//! default selection rules used when a scenario leaves gains unspecified.

use serde::{Deserialize, Serialize};

use crate::controller::{self, GainSide};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::regsolver;
use crate::systems::{self, FollowerPlant, LeaderSystem};
use crate::topology::{self, Digraph};

/// Every tunable quantity in the closed loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub mu1: f64,
    pub mu2: f64,
    /// One step size per follower.
    pub mu3: Vec<f64>,
    /// State-feedback gains `K_x`, one per follower.
    pub k_x: Vec<Matrix>,
    /// Observer gains `L`, one per follower; `None` for state feedback.
    pub l: Vec<Option<Matrix>>,
    /// Accept values outside their admissible ranges.
    #[serde(default)]
    pub overrides: bool,
}

impl Gains {
    /// Lists every admissibility violation. Empty means all gains are strictly
    /// inside their ranges and all feedback gains are stabilizing.
    pub fn admissibility(
        &self,
        leader: &LeaderSystem,
        plants: &[FollowerPlant],
        g: &Digraph,
    ) -> Result<Vec<String>> {
        let n = plants.len();
        if self.mu3.len() != n || self.k_x.len() != n || self.l.len() != n {
            return Err(Error::Dimension(format!(
                "gain lists must have one entry per follower ({n})"
            )));
        }
        let mut issues = Vec::new();
        let h = topology::build_h(g)?;
        match topology::mu1_interval(&h) {
            Ok((lo, hi)) if self.mu1 > lo && self.mu1 < hi => {}
            Ok((lo, hi)) => issues.push(format!("mu1 = {} outside ({lo}, {hi})", self.mu1)),
            Err(e) => issues.push(format!("mu1: {e}")),
        }
        if self.mu2 <= 0.0 {
            issues.push(format!("mu2 = {} must be positive", self.mu2));
        } else if !topology::verify_mu2(&h, &leader.s, self.mu2)? {
            issues.push(format!("mu2 = {}: I⊗S - mu2 (H⊗S) is not Schur", self.mu2));
        }
        for (k, p) in plants.iter().enumerate() {
            let agent = k + 1;
            match systems::build_regulator_data(p, &leader.s) {
                Ok(data) => {
                    let bound = regsolver::mu3_bound(&data.q_mat)?;
                    let mu3 = self.mu3[k];
                    if !(mu3 > 0.0 && mu3 < bound) {
                        issues.push(format!("agent {agent}: mu3 = {mu3} outside (0, {bound})"));
                    }
                }
                Err(e) => issues.push(format!("agent {agent}: {e}")),
            }
            if self.k_x[k].shape() != (p.m(), p.n()) {
                issues.push(format!("agent {agent}: Kx has wrong shape"));
            } else if !controller::verify_gain(&p.a, &p.b, &self.k_x[k], GainSide::Input)? {
                issues.push(format!("agent {agent}: A + B Kx is not Schur"));
            }
            if let Some(l) = &self.l[k] {
                if l.shape() != (p.n(), p.p()) {
                    issues.push(format!("agent {agent}: L has wrong shape"));
                } else if !controller::verify_gain(&p.a, &p.c_m, l, GainSide::Output)? {
                    issues.push(format!("agent {agent}: A + L Cm is not Schur"));
                }
            }
        }
        if self.overrides {
            Ok(Vec::new())
        } else {
            Ok(issues)
        }
    }
}

/// Admissible ranges and the default gain choices derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub mu1_interval: (f64, f64),
    /// Closed-form interval, or the reason it could not be formed.
    pub mu2_formula: std::result::Result<(f64, f64), String>,
    /// Interval on which `I⊗S - mu2 (H⊗S)` is Schur, found by bisection.
    pub mu2_certified: Option<(f64, f64)>,
    pub mu3_bounds: Vec<f64>,
    pub defaults: Gains,
}

/// Computes admissible ranges and picks defaults: midpoint of the `μ1` range,
/// midpoint of the certified `μ2` range, `MU3_FRACTION` of each `μ3` bound,
/// and Riccati gains (observer gains only when `output_feedback` is set).
pub fn gain_report(
    leader: &LeaderSystem,
    plants: &[FollowerPlant],
    g: &Digraph,
    output_feedback: bool,
) -> Result<GainReport> {
    let h = topology::build_h(g)?;
    let mu1_interval = topology::mu1_interval(&h)?;
    let s_sp = linalg::spectrum(&leader.s)?;
    let mu2_formula = topology::mu2_interval(&h, &s_sp).map_err(|e| e.to_string());
    let mu2_certified = topology::certified_mu2_interval(&h, &leader.s)?;
    let mu2 = match mu2_certified {
        Some((lo, hi)) if hi.is_finite() => 0.5 * (lo + hi),
        Some((lo, _)) => lo + 1.0,
        None => {
            return Err(Error::EmptyInterval(
                "no mu2 makes I⊗S - mu2 (H⊗S) Schur".into(),
            ))
        }
    };
    let mut mu3_bounds = Vec::with_capacity(plants.len());
    let mut k_x = Vec::with_capacity(plants.len());
    let mut l = Vec::with_capacity(plants.len());
    for (k, p) in plants.iter().enumerate() {
        let data = systems::build_regulator_data(p, &leader.s).map_err(|e| {
            Error::RegulatorUnsolvable {
                agent: k + 1,
                reason: e.to_string(),
            }
        })?;
        mu3_bounds.push(regsolver::mu3_bound(&data.q_mat)?);
        k_x.push(controller::synthesize_gain(&p.a, &p.b)?);
        l.push(if output_feedback {
            Some(controller::synthesize_observer_gain(&p.a, &p.c_m)?)
        } else {
            None
        });
    }
    let defaults = Gains {
        mu1: 0.5 * (mu1_interval.0 + mu1_interval.1),
        mu2,
        mu3: mu3_bounds
            .iter()
            .map(|b| crate::tol::MU3_FRACTION * b)
            .collect(),
        k_x,
        l,
        overrides: false,
    };
    Ok(GainReport {
        mu1_interval,
        mu2_formula,
        mu2_certified,
        mu3_bounds,
        defaults,
    })
}
