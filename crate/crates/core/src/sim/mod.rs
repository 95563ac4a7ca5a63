//! Closed-loop simulation of the leader, the followers and their distributed
//! controllers.
//!
//! Each tick reads every time-`t` quantity, forms `K_η(t)` from the current
//! regulator iterate, evaluates the control input, records the tick, and then
//! advances plants, leader, observer, regulator iterates and Luenberger states
//! together to `t + 1`.

mod harness;
mod random;

pub use harness::{perturbed_linear_harness, HarnessReport};
pub use random::{random_orthogonal, random_scenario, random_schur, RandomScenarioOptions};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{self, ControlMode, ControllerConfig, ControllerState};
use crate::error::{Error, Result};
use crate::gains::Gains;
use crate::linalg::{vec, Matrix};
use crate::observer::{self, ObserverState};
use crate::regsolver::{self, RegulatorIterate};
use crate::systems::{self, FollowerPlant, LeaderSystem};
use crate::tol;
use crate::topology::Digraph;

/// How follower, observer, regulator and Luenberger states start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Follower states from each plant's `x0`; every estimate starts at zero.
    #[default]
    Explicit,
    /// Every state and estimate drawn uniformly from `[-1, 1]` using the seed.
    Random,
}

/// Which estimates the controllers use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ObserverVariant {
    /// Adaptive observer of `S` and `v`, online regulator iteration.
    #[default]
    Adaptive,
    /// Plain observer with the true `S` and the exact regulator solution.
    KnownExact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub leader: LeaderSystem,
    pub plants: Vec<FollowerPlant>,
    pub graph: Digraph,
    pub gains: Gains,
    pub mode: ControlMode,
    pub horizon: usize,
    pub seed: u64,
    pub init: InitMode,
    pub variant: ObserverVariant,
}

impl Scenario {
    /// Runs every assumption check and gain admissibility test.
    pub fn validate(&self) -> Result<()> {
        let report = systems::check_assumptions(&self.leader, &self.plants, &self.graph, None);
        if let Some(failed) = report.failures().next() {
            return Err(Error::AssumptionViolation(format!(
                "assumption {} ({}) failed: {}",
                failed.id,
                failed.name,
                failed.details.join("; ")
            )));
        }
        let issues = self
            .gains
            .admissibility(&self.leader, &self.plants, &self.graph)?;
        if !issues.is_empty() {
            return Err(Error::Precondition(issues.join("; ")));
        }
        if self.mode == ControlMode::OutputFeedback && self.gains.l.iter().any(Option::is_none) {
            return Err(Error::Precondition(
                "output feedback needs an observer gain for every follower".into(),
            ));
        }
        Ok(())
    }
}

/// One follower at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub e: Vec<f64>,
    pub y_m: Vec<f64>,
    pub eta: Vec<f64>,
    /// `‖η_i - v‖`
    pub err_eta: f64,
    /// `‖S_i - S‖`
    pub err_s: f64,
    /// `‖G_i(t) ζ_i(t) - b_i‖`
    pub reg_residual: f64,
    /// Luenberger state; present in output-feedback runs.
    pub xi: Option<Vec<f64>>,
}

impl AgentRecord {
    pub fn max_abs_e(&self) -> f64 {
        self.e.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `‖ξ_i - x_i‖`, zero in state-feedback runs.
    pub fn xi_error(&self) -> f64 {
        match &self.xi {
            Some(xi) => xi
                .iter()
                .zip(&self.x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: usize,
    pub v: Vec<f64>,
    pub agents: Vec<AgentRecord>,
}

/// Worst-case error measures over all followers at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickErrors {
    pub tracking: f64,
    pub eta: f64,
    pub s: f64,
    pub regulator: f64,
    pub xi: f64,
}

impl TickErrors {
    pub fn max(&self) -> f64 {
        [self.tracking, self.eta, self.s, self.regulator, self.xi]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

impl TickRecord {
    pub fn errors(&self) -> TickErrors {
        let mut out = TickErrors {
            tracking: 0.0,
            eta: 0.0,
            s: 0.0,
            regulator: 0.0,
            xi: 0.0,
        };
        for a in &self.agents {
            out.tracking = out.tracking.max(a.max_abs_e());
            out.eta = out.eta.max(a.err_eta);
            out.s = out.s.max(a.err_s);
            out.regulator = out.regulator.max(a.reg_residual);
            out.xi = out.xi.max(a.xi_error());
        }
        out
    }

    /// Largest absolute value of any recorded signal.
    pub fn max_signal(&self) -> f64 {
        let mut m = self.v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        for a in &self.agents {
            for series in [&a.x, &a.u, &a.e, &a.y_m, &a.eta] {
                m = series.iter().fold(m, |acc, x| acc.max(x.abs()));
            }
            if let Some(xi) = &a.xi {
                m = xi.iter().fold(m, |acc, x| acc.max(x.abs()));
            }
        }
        m
    }
}

/// Recorded run; `ticks[t]` holds time `t`, from `0` to the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub ticks: Vec<TickRecord>,
}

impl SimTrace {
    pub fn horizon(&self) -> usize {
        self.ticks.len().saturating_sub(1)
    }

    pub fn final_errors(&self) -> TickErrors {
        self.ticks.last().expect("trace holds tick 0").errors()
    }

    /// First tick from which every error measure stays below `threshold`
    /// through the end of the trace.
    pub fn convergence_tick(&self, threshold: f64) -> Option<usize> {
        let mut first = None;
        for rec in self.ticks.iter().rev() {
            if rec.errors().max() < threshold {
                first = Some(rec.t);
            } else {
                break;
            }
        }
        first
    }

    /// First tick from which the regulator residual of every follower stays
    /// below `threshold` for `sustain` consecutive ticks.
    pub fn regulator_settle_tick(&self, threshold: f64, sustain: usize) -> Option<usize> {
        let mut run = 0;
        for rec in &self.ticks {
            if rec.errors().regulator < threshold {
                run += 1;
                if run >= sustain {
                    return Some(rec.t + 1 - sustain);
                }
            } else {
                run = 0;
            }
        }
        None
    }

    pub fn max_signal(&self) -> f64 {
        self.ticks
            .iter()
            .map(TickRecord::max_signal)
            .fold(0.0, f64::max)
    }

    /// Per-tick series of one error measure.
    pub fn error_series(&self, pick: impl Fn(&TickErrors) -> f64) -> Vec<f64> {
        self.ticks.iter().map(|r| pick(&r.errors())).collect()
    }
}

struct AgentState {
    x: Matrix,
    reg: RegulatorIterate,
    xi: Option<Matrix>,
    cfg: ControllerConfig,
    b_vec: Matrix,
}

/// Validates the scenario and simulates it.
pub fn run(sc: &Scenario) -> Result<SimTrace> {
    sc.validate()?;
    run_unchecked(sc)
}

/// Simulates without assumption or gain checks; stops with
/// [`Error::Diverged`] when a state stops being finite.
pub fn run_unchecked(sc: &Scenario) -> Result<SimTrace> {
    let n_agents = sc.plants.len();
    if sc.graph.n_followers() != n_agents {
        return Err(Error::Dimension(format!(
            "graph has {} followers, scenario has {} plants",
            sc.graph.n_followers(),
            n_agents
        )));
    }
    let s_true = &sc.leader.s;
    let q = sc.leader.q();
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut draw = |rows: usize, cols: usize| -> Matrix {
        match sc.init {
            InitMode::Explicit => Matrix::zeros(rows, cols),
            InitMode::Random => Matrix::from_row_major(
                rows,
                cols,
                (0..rows * cols)
                    .map(|_| rng.gen_range(-1.0..=1.0))
                    .collect(),
            )
            .expect("finite draws"),
        }
    };

    let mut agents = Vec::with_capacity(n_agents);
    let mut s_est = Vec::with_capacity(n_agents);
    let mut eta = Vec::with_capacity(n_agents);
    for (k, p) in sc.plants.iter().enumerate() {
        let l_gain = match sc.mode {
            ControlMode::OutputFeedback => sc.gains.l[k].clone(),
            ControlMode::StateFeedback => None,
        };
        let cfg = ControllerConfig {
            k_x: sc.gains.k_x[k].clone(),
            l_gain,
            mode: sc.mode,
        };
        let x = match sc.init {
            InitMode::Explicit => p.x0.clone(),
            InitMode::Random => draw(p.n(), 1),
        };
        let (s0, reg) = match sc.variant {
            ObserverVariant::Adaptive => {
                let s0 = draw(q, q);
                let zeta = draw(q * (p.n() + p.m()), 1);
                let reg = RegulatorIterate::new(zeta, p.n(), p.m(), q, sc.gains.mu3[k])?;
                (s0, reg)
            }
            ObserverVariant::KnownExact => {
                let data = systems::build_regulator_data(p, s_true).map_err(|e| {
                    Error::RegulatorUnsolvable {
                        agent: k + 1,
                        reason: e.to_string(),
                    }
                })?;
                let reg =
                    RegulatorIterate::new(vec(&data.stacked()), p.n(), p.m(), q, sc.gains.mu3[k])?;
                (s_true.clone(), reg)
            }
        };
        s_est.push(s0);
        eta.push(draw(q, 1));
        let xi = match sc.mode {
            ControlMode::OutputFeedback => Some(draw(p.n(), 1)),
            ControlMode::StateFeedback => None,
        };
        agents.push(AgentState {
            x,
            reg,
            xi,
            cfg,
            b_vec: systems::regulator_rhs(p),
        });
    }
    let mut obs = ObserverState::new(s_est, eta, sc.gains.mu1, sc.gains.mu2)?;
    let mut v = sc.leader.v0.clone();
    let mut ticks = Vec::with_capacity(sc.horizon + 1);

    for t in 0..=sc.horizon {
        let (err_s, err_eta) = observer::observer_errors(&obs, s_true, &v);
        let mut records = Vec::with_capacity(n_agents);
        let mut next_states = Vec::with_capacity(n_agents);
        for (k, (p, ag)) in sc.plants.iter().zip(&agents).enumerate() {
            let eta_k = &obs.eta[k];
            let g_t = regsolver::build_g(p, &obs.s_est[k]);
            let reg_residual = regsolver::residual(&g_t, &ag.reg.zeta, &ag.b_vec);
            let st = ControllerState {
                xi: ag.xi.clone(),
                k_eta: controller::feedforward_gain(&ag.cfg.k_x, &ag.reg.x_of_t, &ag.reg.u_of_t),
            };
            let (u, xi_next) = match sc.mode {
                ControlMode::StateFeedback => (
                    controller::control_state_feedback(&ag.cfg, &st, &ag.x, eta_k),
                    None,
                ),
                ControlMode::OutputFeedback => {
                    let xi = st.xi.as_ref().expect("output feedback carries ξ");
                    // y_m depends on u only through D_m; evaluate u first from ξ
                    let u = &(&ag.cfg.k_x * xi) + &(&st.k_eta * eta_k);
                    let y_m = p.measurement(&ag.x, &u, &v);
                    let (u, xi_next) =
                        controller::control_output_feedback(&ag.cfg, p, &st, &y_m, eta_k)?;
                    (u, Some(xi_next))
                }
            };
            let step = p.step(&ag.x, &u, &v);
            records.push(AgentRecord {
                x: ag.x.as_slice().to_vec(),
                u: u.as_slice().to_vec(),
                e: step.e.as_slice().to_vec(),
                y_m: step.y_m.as_slice().to_vec(),
                eta: eta_k.as_slice().to_vec(),
                err_eta: err_eta[k],
                err_s: err_s[k],
                reg_residual,
                xi: ag.xi.as_ref().map(|m| m.as_slice().to_vec()),
            });
            let reg_next = match sc.variant {
                ObserverVariant::Adaptive => regsolver::step_regulator(&ag.reg, &g_t, &ag.b_vec),
                ObserverVariant::KnownExact => ag.reg.clone(),
            };
            next_states.push((step.x_next, reg_next, xi_next));
        }
        ticks.push(TickRecord {
            t,
            v: v.as_slice().to_vec(),
            agents: records,
        });
        if t == sc.horizon {
            break;
        }
        obs = match sc.variant {
            ObserverVariant::Adaptive => observer::step_adaptive(&obs, &sc.graph, s_true, &v),
            ObserverVariant::KnownExact => ObserverState {
                eta: observer::step_plain(&obs.eta, &sc.graph, s_true, &v, obs.mu2),
                ..obs
            },
        };
        v = sc.leader.step(&v);
        for (ag, (x, reg, xi)) in agents.iter_mut().zip(next_states) {
            if !x.is_finite() || !reg.zeta.is_finite() {
                return Err(Error::Diverged { tick: t + 1 });
            }
            ag.x = x;
            ag.reg = reg;
            ag.xi = xi;
        }
        if !obs.eta.iter().chain(&obs.s_est).all(Matrix::is_finite) {
            return Err(Error::Diverged { tick: t + 1 });
        }
    }
    Ok(SimTrace { ticks })
}

/// Least-squares slope of `ln(series)` against the tick index over the
/// trailing `tail_fraction` of the series. Values below `LOG_FLOOR` are
/// clipped.
pub fn decay_rate(series: &[f64], tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Domain(format!(
            "tail fraction {tail_fraction} outside (0, 1]"
        )));
    }
    let len = ((series.len() as f64) * tail_fraction).ceil() as usize;
    if len < 4 {
        return Err(Error::Precondition(format!(
            "decay fit needs at least 4 tail points, got {len}"
        )));
    }
    let start = series.len() - len;
    let pts: Vec<(f64, f64)> = series[start..]
        .iter()
        .enumerate()
        .map(|(k, &y)| ((start + k) as f64, y.max(tol::LOG_FLOOR).ln()))
        .collect();
    let count = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / count;
    let (mut num, mut den) = (0.0, 0.0);
    for (t, y) in &pts {
        num += (t - mean_t) * (y - mean_y);
        den += (t - mean_t) * (t - mean_t);
    }
    Ok(num / den)
}
