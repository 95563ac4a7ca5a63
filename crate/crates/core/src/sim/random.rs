use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{InitMode, ObserverVariant, Scenario};
use crate::controller::{self, ControlMode, GainSide};
use crate::error::{Error, Result};
use crate::gains;
use crate::linalg::{self, Matrix};
use crate::observer;
use crate::systems::{self, FollowerPlant, LeaderSystem};
use crate::topology::{self, Digraph};

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_row_major(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| scale * rng.gen_range(-1.0..1.0))
            .collect(),
    )
    .expect("finite draws")
}

/// Random `n x n` matrix rescaled to spectral radius `radius`.
pub fn random_schur(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Matrix {
    loop {
        let m = uniform(rng, n, n, 1.0);
        let r = linalg::spectral_radius(&m).expect("finite square matrix");
        if r > 1e-3 {
            return m.scale(radius / r);
        }
    }
}

/// Random orthogonal `q x q` matrix with eigenvalue angles bounded away from
/// zero (except the real eigenvalue forced by odd `q`).
pub fn random_orthogonal(rng: &mut ChaCha8Rng, q: usize) -> Matrix {
    let mut rot = Matrix::zeros(q, q);
    let mut k = 0;
    while k + 1 < q {
        let angle = rng.gen_range(0.2..std::f64::consts::PI - 0.2);
        let (s, c) = angle.sin_cos();
        rot[(k, k)] = c;
        rot[(k, k + 1)] = s;
        rot[(k + 1, k)] = -s;
        rot[(k + 1, k + 1)] = c;
        k += 2;
    }
    if k < q {
        rot[(k, k)] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    }
    let basis = orthonormal_basis(rng, q);
    &(&basis * &rot) * &basis.transpose()
}

fn orthonormal_basis(rng: &mut ChaCha8Rng, q: usize) -> Matrix {
    'retry: loop {
        let raw = uniform(rng, q, q, 1.0);
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(q);
        for j in 0..q {
            let mut v: Vec<f64> = (0..q).map(|i| raw[(i, j)]).collect();
            for u in &cols {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < 1e-3 {
                continue 'retry;
            }
            v.iter_mut().for_each(|a| *a /= norm);
            cols.push(v);
        }
        let mut out = Matrix::zeros(q, q);
        for (j, c) in cols.iter().enumerate() {
            for (i, &val) in c.iter().enumerate() {
                out[(i, j)] = val;
            }
        }
        return out;
    }
}

/// Limits for [`random_scenario`].
#[derive(Debug, Clone, Copy)]
pub struct RandomScenarioOptions {
    pub max_followers: usize,
    pub max_state: usize,
    pub max_q: usize,
    pub mode: ControlMode,
    /// Reject scenarios whose slowest predicted contraction factor exceeds this.
    pub max_rate: f64,
    pub horizon: usize,
    pub max_attempts: usize,
}

impl Default for RandomScenarioOptions {
    fn default() -> Self {
        Self {
            max_followers: 5,
            max_state: 3,
            max_q: 3,
            mode: ControlMode::StateFeedback,
            max_rate: 0.99,
            horizon: 4000,
            max_attempts: 10_000,
        }
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Digraph {
    let mut edges = Vec::new();
    for i in 1..=n {
        // a parent with a smaller index gives a tree rooted at the leader
        let parent = rng.gen_range(0..i);
        edges.push((parent, i, rng.gen_range(0.5..1.5)));
    }
    for i in 1..=n {
        for j in 1..=n {
            if i != j && !edges.iter().any(|&(f, t, _)| f == j && t == i) && rng.gen_bool(0.25) {
                edges.push((j, i, rng.gen_range(0.5..1.5)));
            }
        }
    }
    Digraph::from_edges(n, &edges).expect("valid random graph")
}

fn random_plant(rng: &mut ChaCha8Rng, max_state: usize, q: usize) -> Result<FollowerPlant> {
    let n = rng.gen_range(1..=max_state);
    let m = rng.gen_range(1..=n);
    let p = rng.gen_range(1..=n);
    let radius = rng.gen_range(0.6..1.2);
    FollowerPlant::new(
        random_schur(rng, n, radius),
        uniform(rng, n, m, 1.0),
        uniform(rng, m, n, 1.0),
        uniform(rng, m, m, 0.3),
        uniform(rng, n, q, 1.0),
        uniform(rng, m, q, 1.0),
        uniform(rng, p, n, 1.0),
        uniform(rng, p, m, 0.3),
        uniform(rng, p, q, 1.0),
        None,
    )
}

/// Slowest contraction factor among the observer, regulator iteration and
/// feedback loops under the given gains.
fn slowest_rate(sc: &Scenario) -> Result<f64> {
    let h = topology::build_h(&sc.graph)?;
    let q = sc.leader.q();
    let mut rate = linalg::spectral_radius(&observer::s_error_matrix(&h.h, q, sc.gains.mu1))?;
    rate = rate.max(linalg::spectral_radius(&topology::observer_error_matrix(
        &h.h,
        &sc.leader.s,
        sc.gains.mu2,
    ))?);
    for (k, p) in sc.plants.iter().enumerate() {
        let q_mat = systems::regulator_matrix(p, &sc.leader.s);
        let gram = &q_mat.transpose() * &q_mat;
        let iter = &Matrix::identity(gram.rows()) - &gram.scale(sc.gains.mu3[k]);
        rate = rate.max(linalg::spectral_radius(&iter)?);
        let a_k = controller::closed_loop(&p.a, &p.b, &sc.gains.k_x[k], GainSide::Input)?;
        rate = rate.max(linalg::spectral_radius(&a_k)?);
        if let Some(l) = &sc.gains.l[k] {
            let a_l = controller::closed_loop(&p.a, &p.c_m, l, GainSide::Output)?;
            rate = rate.max(linalg::spectral_radius(&a_l)?);
        }
    }
    Ok(rate)
}

/// Draws a scenario with an orthogonal leader, random plants and a random
/// leader-rooted graph, rejecting draws that fail any assumption check or
/// whose default gains converge slower than `opts.max_rate`.
pub fn random_scenario(seed: u64, opts: &RandomScenarioOptions) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..opts.max_attempts {
        let n_agents = rng.gen_range(1..=opts.max_followers);
        let q = rng.gen_range(1..=opts.max_q);
        let s = random_orthogonal(&mut rng, q);
        let v0 = uniform(&mut rng, q, 1, 1.0);
        let leader = LeaderSystem::new(s, v0)?;
        let plants = (0..n_agents)
            .map(|_| random_plant(&mut rng, opts.max_state, q))
            .collect::<Result<Vec<_>>>()?;
        let graph = random_graph(&mut rng, n_agents);
        if !systems::check_assumptions(&leader, &plants, &graph, None).all_passed() {
            continue;
        }
        let output = opts.mode == ControlMode::OutputFeedback;
        let Ok(report) = gains::gain_report(&leader, &plants, &graph, output) else {
            continue;
        };
        let sc = Scenario {
            leader,
            plants,
            graph,
            gains: report.defaults,
            mode: opts.mode,
            horizon: opts.horizon,
            seed,
            init: InitMode::Random,
            variant: ObserverVariant::Adaptive,
        };
        if slowest_rate(&sc)? > opts.max_rate || sc.validate().is_err() {
            continue;
        }
        return Ok(sc);
    }
    Err(Error::NoConvergence(format!(
        "no admissible random scenario in {} draws",
        opts.max_attempts
    )))
}
