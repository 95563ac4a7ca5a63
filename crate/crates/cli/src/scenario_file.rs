//! JSON scenario documents: parsing, validation with key paths, and
//! conversion into a simulation scenario.

use std::path::Path;

use coreg_core::gains::{self, Gains};
use coreg_core::scenarios;
use coreg_core::sim::{InitMode, ObserverVariant, Scenario};
use coreg_core::{ControlMode, Digraph, FollowerPlant, LeaderSystem, Matrix};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub leader: LeaderSpec,
    pub followers: Vec<FollowerSpec>,
    pub graph: GraphSpec,
    #[serde(default)]
    pub gains: GainSpec,
    #[serde(default)]
    pub sim: SimSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderSpec {
    #[serde(rename = "S")]
    pub s: Rows,
    pub v0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct FollowerSpec {
    pub A: Rows,
    pub B: Rows,
    pub C: Rows,
    pub D: Rows,
    pub E: Rows,
    pub F: Rows,
    pub Cm: Rows,
    pub Dm: Rows,
    pub Fm: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    /// `adjacency[i][j] > 0` when node `i` receives from node `j`; node 0 is
    /// the leader.
    pub adjacency: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent {
    Shared(f64),
    Each(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu3: Option<PerAgent>,
    #[serde(default, rename = "Kx", skip_serializing_if = "Option::is_none")]
    pub k_x: Option<Vec<Rows>>,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<Rows>>,
    /// Ignore every supplied value and use the automatic choices.
    #[serde(default)]
    pub auto: bool,
    /// Accept values outside their admissible ranges.
    #[serde(default)]
    pub overrides: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default)]
    pub mode: ControlMode,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitMode,
    #[serde(default)]
    pub variant: ObserverVariant,
}

fn default_horizon() -> usize {
    scenarios::REFERENCE_HORIZON
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            mode: ControlMode::default(),
            horizon: default_horizon(),
            seed: 0,
            init: InitMode::default(),
            variant: ObserverVariant::default(),
        }
    }
}

/// Leader, plants and graph, before any gain is chosen.
#[derive(Debug, Clone)]
pub struct Model {
    pub leader: LeaderSystem,
    pub plants: Vec<FollowerPlant>,
    pub graph: Digraph,
}

fn matrix(rows: &Rows, path: &str) -> CliResult<Matrix> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CliError::input(
            path,
            "matrix must have at least one row and column",
        ));
    }
    let width = rows[0].len();
    if let Some(k) = rows.iter().position(|r| r.len() != width) {
        return Err(CliError::input(
            format!("{path}[{k}]"),
            format!("row has {} entries, expected {width}", rows[k].len()),
        ));
    }
    Matrix::from_rows(rows).map_err(|e| CliError::input(path, e.to_string()))
}

fn column(values: &[f64], path: &str) -> CliResult<Matrix> {
    if values.is_empty() {
        return Err(CliError::input(path, "vector must not be empty"));
    }
    Matrix::from_row_major(values.len(), 1, values.to_vec())
        .map_err(|e| CliError::input(path, e.to_string()))
}

pub fn rows_of(m: &Matrix) -> Rows {
    m.to_rows()
}

impl ScenarioFile {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| {
            CliError::input(
                format!("{origin}:{}:{}", e.line(), e.column()),
                e.to_string(),
            )
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario documents serialize") + "\n"
    }

    /// The four-follower worked example with its published gains.
    pub fn reference() -> Self {
        let sc = scenarios::reference_scenario();
        let followers = sc
            .plants
            .iter()
            .map(|p| FollowerSpec {
                A: rows_of(&p.a),
                B: rows_of(&p.b),
                C: rows_of(&p.c),
                D: rows_of(&p.d),
                E: rows_of(&p.e),
                F: rows_of(&p.f),
                Cm: rows_of(&p.c_m),
                Dm: rows_of(&p.d_m),
                Fm: rows_of(&p.f_m),
                x0: Some(p.x0.as_slice().to_vec()),
            })
            .collect();
        Self {
            leader: LeaderSpec {
                s: rows_of(&sc.leader.s),
                v0: sc.leader.v0.as_slice().to_vec(),
            },
            followers,
            graph: GraphSpec {
                adjacency: rows_of(sc.graph.adjacency()),
            },
            gains: GainSpec {
                mu1: Some(sc.gains.mu1),
                mu2: Some(sc.gains.mu2),
                mu3: Some(PerAgent::Shared(sc.gains.mu3[0])),
                k_x: Some(sc.gains.k_x.iter().map(rows_of).collect()),
                l: None,
                auto: false,
                overrides: false,
            },
            sim: SimSpec {
                mode: ControlMode::StateFeedback,
                horizon: 2 * scenarios::REFERENCE_CONVERGENCE_TICK,
                seed: 0,
                init: InitMode::Explicit,
                variant: ObserverVariant::Adaptive,
            },
        }
    }

    /// Builds and dimension-checks the leader, plants and graph.
    pub fn model(&self) -> CliResult<Model> {
        let s = matrix(&self.leader.s, "leader.S")?;
        let v0 = column(&self.leader.v0, "leader.v0")?;
        let leader =
            LeaderSystem::new(s, v0).map_err(|e| CliError::input("leader", e.to_string()))?;
        if self.followers.is_empty() {
            return Err(CliError::input(
                "followers",
                "at least one follower is required",
            ));
        }
        let mut plants = Vec::with_capacity(self.followers.len());
        for (i, f) in self.followers.iter().enumerate() {
            let at = |key: &str| format!("followers[{i}].{key}");
            let x0 = match &f.x0 {
                Some(v) => Some(column(v, &at("x0"))?),
                None => None,
            };
            let plant = FollowerPlant::new(
                matrix(&f.A, &at("A"))?,
                matrix(&f.B, &at("B"))?,
                matrix(&f.C, &at("C"))?,
                matrix(&f.D, &at("D"))?,
                matrix(&f.E, &at("E"))?,
                matrix(&f.F, &at("F"))?,
                matrix(&f.Cm, &at("Cm"))?,
                matrix(&f.Dm, &at("Dm"))?,
                matrix(&f.Fm, &at("Fm"))?,
                x0,
            )
            .map_err(|e| {
                let msg = e.to_string();
                // plant errors name the offending matrix first
                let key = msg
                    .split_whitespace()
                    .find(|w| ["A", "B", "C", "D", "E", "F", "Cm", "Dm", "Fm", "x0"].contains(w))
                    .unwrap_or("");
                CliError::input(
                    if key.is_empty() {
                        format!("followers[{i}]")
                    } else {
                        at(key)
                    },
                    msg,
                )
            })?;
            if plant.q() != leader.q() {
                return Err(CliError::input(
                    at("E"),
                    format!("E has {} columns, leader has q = {}", plant.q(), leader.q()),
                ));
            }
            plants.push(plant);
        }
        let adjacency = matrix(&self.graph.adjacency, "graph.adjacency")?;
        if adjacency.shape() != (plants.len() + 1, plants.len() + 1) {
            return Err(CliError::input(
                "graph.adjacency",
                format!(
                    "is {}x{}, expected {}x{} (leader plus {} followers)",
                    adjacency.rows(),
                    adjacency.cols(),
                    plants.len() + 1,
                    plants.len() + 1,
                    plants.len()
                ),
            ));
        }
        let graph = Digraph::new(adjacency)
            .map_err(|e| CliError::input("graph.adjacency", e.to_string()))?;
        Ok(Model {
            leader,
            plants,
            graph,
        })
    }

    /// Supplied gains, with anything missing (or everything, when `auto` is
    /// set) filled in by the automatic selection rules.
    pub fn resolve_gains(&self, model: &Model, mode: ControlMode) -> CliResult<Gains> {
        let n = model.plants.len();
        let spec = &self.gains;
        let output = mode == ControlMode::OutputFeedback;
        let complete = spec.mu1.is_some()
            && spec.mu2.is_some()
            && spec.mu3.is_some()
            && spec.k_x.is_some()
            && (!output || spec.l.is_some());
        let mut g = if spec.auto || !complete {
            gains::gain_report(&model.leader, &model.plants, &model.graph, output)?.defaults
        } else {
            Gains {
                mu1: 0.0,
                mu2: 0.0,
                mu3: vec![0.0; n],
                k_x: model
                    .plants
                    .iter()
                    .map(|p| Matrix::zeros(p.m(), p.n()))
                    .collect(),
                l: vec![None; n],
                overrides: false,
            }
        };
        g.overrides = spec.overrides;
        if spec.auto {
            return Ok(g);
        }
        if let Some(mu1) = spec.mu1 {
            g.mu1 = mu1;
        }
        if let Some(mu2) = spec.mu2 {
            g.mu2 = mu2;
        }
        match &spec.mu3 {
            Some(PerAgent::Shared(v)) => g.mu3 = vec![*v; n],
            Some(PerAgent::Each(vs)) if vs.len() == n => g.mu3 = vs.clone(),
            Some(PerAgent::Each(vs)) => {
                return Err(CliError::input(
                    "gains.mu3",
                    format!("{} values for {n} followers", vs.len()),
                ))
            }
            None => {}
        }
        if let Some(list) = &spec.k_x {
            g.k_x = per_agent_matrices(list, model, "gains.Kx", |p| (p.m(), p.n()))?;
        }
        if let Some(list) = &spec.l {
            g.l = per_agent_matrices(list, model, "gains.L", |p| (p.n(), p.p()))?
                .into_iter()
                .map(Some)
                .collect();
        }
        Ok(g)
    }

    /// Full scenario; `horizon` and `seed` override the document.
    pub fn to_scenario(&self, horizon: Option<usize>, seed: Option<u64>) -> CliResult<Scenario> {
        let model = self.model()?;
        let gains = self.resolve_gains(&model, self.sim.mode)?;
        Ok(Scenario {
            leader: model.leader,
            plants: model.plants,
            graph: model.graph,
            gains,
            mode: self.sim.mode,
            horizon: horizon.unwrap_or(self.sim.horizon),
            seed: seed.unwrap_or(self.sim.seed),
            init: self.sim.init,
            variant: self.sim.variant,
        })
    }
}

fn per_agent_matrices(
    list: &[Rows],
    model: &Model,
    key: &str,
    shape: impl Fn(&FollowerPlant) -> (usize, usize),
) -> CliResult<Vec<Matrix>> {
    if list.len() != model.plants.len() {
        return Err(CliError::input(
            key,
            format!(
                "{} matrices for {} followers",
                list.len(),
                model.plants.len()
            ),
        ));
    }
    list.iter()
        .zip(&model.plants)
        .enumerate()
        .map(|(i, (rows, p))| {
            let path = format!("{key}[{i}]");
            let m = matrix(rows, &path)?;
            let (r, c) = shape(p);
            if m.shape() != (r, c) {
                return Err(CliError::input(
                    path,
                    format!("is {}x{}, expected {r}x{c}", m.rows(), m.cols()),
                ));
            }
            Ok(m)
        })
        .collect()
}
