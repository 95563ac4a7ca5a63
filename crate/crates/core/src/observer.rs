//! Distributed observers of the leader.
//!
//! The plain observer assumes every follower knows `S`. The adaptive observer
//! additionally estimates `S` by consensus, so only the leader's direct
//! neighbours need it. Both update synchronously: every agent reads its
//! neighbours' time-`t` values and all agents write time-`t+1` values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, Matrix};
use crate::topology::{self, Digraph, HMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverState {
    /// `S_i`, estimates of the leader matrix.
    pub s_est: Vec<Matrix>,
    /// `η_i`, estimates of the leader state.
    pub eta: Vec<Matrix>,
    pub mu1: f64,
    pub mu2: f64,
}

impl ObserverState {
    /// State with consistent dimensions; gains are not range-checked.
    pub fn new(s_est: Vec<Matrix>, eta: Vec<Matrix>, mu1: f64, mu2: f64) -> Result<Self> {
        if s_est.len() != eta.len() || s_est.is_empty() {
            return Err(Error::Dimension(format!(
                "{} matrix estimates vs {} state estimates",
                s_est.len(),
                eta.len()
            )));
        }
        let q = eta[0].rows();
        for (s, e) in s_est.iter().zip(&eta) {
            if s.shape() != (q, q) || e.shape() != (q, 1) {
                return Err(Error::Dimension("observer estimates disagree on q".into()));
            }
        }
        Ok(Self {
            s_est,
            eta,
            mu1,
            mu2,
        })
    }

    /// Like [`ObserverState::new`], additionally requiring
    /// `μ1 ∈ (0, 2/ρ(H))` and a Schur observer error matrix for `μ2`.
    pub fn checked(
        s_est: Vec<Matrix>,
        eta: Vec<Matrix>,
        mu1: f64,
        mu2: f64,
        h: &HMatrix,
        s_true: &Matrix,
    ) -> Result<Self> {
        let st = Self::new(s_est, eta, mu1, mu2)?;
        if st.n() != h.n() {
            return Err(Error::Dimension("observer size differs from graph".into()));
        }
        let (lo, hi) = topology::mu1_interval(h)?;
        if !(mu1 > lo && mu1 < hi) {
            return Err(Error::Precondition(format!(
                "mu1 = {mu1} outside ({lo}, {hi})"
            )));
        }
        if !(mu2 > 0.0 && topology::verify_mu2(h, s_true, mu2)?) {
            return Err(Error::Precondition(format!(
                "mu2 = {mu2} does not make the observer error matrix Schur"
            )));
        }
        Ok(st)
    }

    /// `S_i(0) = 0`, `η_i(0) = 0`.
    pub fn zeros(n: usize, q: usize, mu1: f64, mu2: f64) -> Self {
        Self {
            s_est: vec![Matrix::zeros(q, q); n],
            eta: vec![Matrix::zeros(q, 1); n],
            mu1,
            mu2,
        }
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    pub fn q(&self) -> usize {
        self.eta[0].rows()
    }

    pub fn step(&self, g: &Digraph, s_true: &Matrix, v: &Matrix) -> Self {
        step_adaptive(self, g, s_true, v)
    }
}

/// `Σ_j a_ij (z_j - z_i)` with `z_0` the leader's value.
fn neighbor_disagreement(g: &Digraph, i: usize, leader: &Matrix, own: &[Matrix]) -> Matrix {
    let zi = &own[i - 1];
    let mut acc = Matrix::zeros(zi.rows(), zi.cols());
    for (j, w) in g.neighbors(i) {
        let zj = if j == 0 { leader } else { &own[j - 1] };
        acc.axpy(w, &(zj - zi));
    }
    acc
}

/// `s η + μ s Σ a_ij (η_j - η_i)`, shared by both observers.
fn eta_update(s: &Matrix, eta: &Matrix, disagreement: &Matrix, mu: f64) -> Matrix {
    let mut out = s * eta;
    out.axpy(mu, &(s * disagreement));
    out
}

/// One synchronous tick of the adaptive observer. The `η` update uses the
/// time-`t` estimate `S_i(t)`.
pub fn step_adaptive(
    st: &ObserverState,
    g: &Digraph,
    s_true: &Matrix,
    v: &Matrix,
) -> ObserverState {
    let n = st.n();
    let mut s_next = Vec::with_capacity(n);
    let mut eta_next = Vec::with_capacity(n);
    for i in 1..=n {
        let s_i = &st.s_est[i - 1];
        let mut s_new = s_i.clone();
        s_new.axpy(st.mu1, &neighbor_disagreement(g, i, s_true, &st.s_est));
        s_next.push(s_new);
        let d = neighbor_disagreement(g, i, v, &st.eta);
        eta_next.push(eta_update(s_i, &st.eta[i - 1], &d, st.mu2));
    }
    ObserverState {
        s_est: s_next,
        eta: eta_next,
        mu1: st.mu1,
        mu2: st.mu2,
    }
}

/// One synchronous tick of the plain observer, every agent using the true `S`.
pub fn step_plain(
    eta: &[Matrix],
    g: &Digraph,
    s_true: &Matrix,
    v: &Matrix,
    mu: f64,
) -> Vec<Matrix> {
    (1..=eta.len())
        .map(|i| {
            let d = neighbor_disagreement(g, i, v, eta);
            eta_update(s_true, &eta[i - 1], &d, mu)
        })
        .collect()
}

/// Frobenius norms `‖S_i - S‖` and `‖η_i - v‖` per agent.
pub fn observer_errors(st: &ObserverState, s_true: &Matrix, v: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let s_err = st
        .s_est
        .iter()
        .map(|s| (s - s_true).frobenius_norm())
        .collect();
    let eta_err = st.eta.iter().map(|e| (e - v).frobenius_norm()).collect();
    (s_err, eta_err)
}

/// `I_{Nq} - μ1 (H ⊗ I_q)`, the transition matrix of the stacked
/// `S`-estimation error.
pub fn s_error_matrix(h: &Matrix, q: usize, mu1: f64) -> Matrix {
    let nq = h.rows() * q;
    &Matrix::identity(nq) - &kron(h, &Matrix::identity(q)).scale(mu1)
}

/// Stacks `S_i - S` vertically into an `Nq x q` matrix.
pub fn stacked_s_error(st: &ObserverState, s_true: &Matrix) -> Matrix {
    st.s_est
        .iter()
        .map(|s| s - s_true)
        .reduce(|acc, m| Matrix::vstack(&acc, &m).expect("equal widths"))
        .expect("at least one follower")
}

/// Stacks `η_i - v` into an `Nq`-vector.
pub fn stacked_eta_error(eta: &[Matrix], v: &Matrix) -> Matrix {
    eta.iter()
        .map(|e| e - v)
        .reduce(|acc, m| Matrix::vstack(&acc, &m).expect("column vectors"))
        .expect("at least one follower")
}
