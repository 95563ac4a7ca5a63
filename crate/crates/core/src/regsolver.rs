//! Gradient iteration for linear equations whose coefficient matrix is only
//! known through a converging sequence, and its use as an online solver of
//! the regulator equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, unvec, Matrix};
use crate::systems::{self, FollowerPlant};
use crate::tol;

/// One step of `x ← x - ε Bᵀ(B x - b)`.
pub fn iterate_perturbed(x: &Matrix, b_t: &Matrix, b_rhs: &Matrix, eps: f64) -> Matrix {
    let residual = &(b_t * x) - b_rhs;
    let mut next = x.clone();
    next.axpy(-eps, &(&b_t.transpose() * &residual));
    next
}

/// Upper end of the admissible step-size interval, `2 / λ_max(AᵀA)`.
pub fn step_bound(a: &Matrix) -> Result<f64> {
    let gram = &a.transpose() * a;
    let top = linalg::symmetric_eigenvalues(&gram)?
        .into_iter()
        .fold(0.0f64, f64::max);
    if top == 0.0 {
        return Err(Error::Singular {
            cond: f64::INFINITY,
        });
    }
    Ok(2.0 / top)
}

/// `2 / ρ(QᵀQ)` for a nonsingular regulator matrix.
pub fn mu3_bound(q_mat: &Matrix) -> Result<f64> {
    if !q_mat.is_square() {
        return Err(Error::Dimension(format!(
            "regulator matrix is {}x{}",
            q_mat.rows(),
            q_mat.cols()
        )));
    }
    let cond = linalg::condition_number(q_mat)?;
    if cond > tol::CONDITION_LIMIT {
        return Err(Error::Singular { cond });
    }
    step_bound(q_mat)
}

/// `S_iᵀ ⊗ [[I, 0], [0, 0]] - I_q ⊗ [[A, B], [C, D]]` from an estimate of `S`.
pub fn build_g(p: &FollowerPlant, s_est: &Matrix) -> Matrix {
    systems::regulator_matrix(p, s_est)
}

/// `‖G ζ - b‖`.
pub fn residual(g_t: &Matrix, zeta: &Matrix, b_vec: &Matrix) -> f64 {
    (&(g_t * zeta) - b_vec).frobenius_norm()
}

/// Running estimate `ζ_i = vec([X_i(t); U_i(t)])` of one follower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegulatorIterate {
    pub zeta: Matrix,
    pub mu3: f64,
    pub x_of_t: Matrix,
    pub u_of_t: Matrix,
}

impl RegulatorIterate {
    pub fn new(zeta: Matrix, n: usize, m: usize, q: usize, mu3: f64) -> Result<Self> {
        let stacked = unvec(&zeta, n + m, q)?;
        Ok(Self {
            x_of_t: stacked.block(0, 0, n, q),
            u_of_t: stacked.block(n, 0, m, q),
            zeta,
            mu3,
        })
    }

    pub fn zeros(n: usize, m: usize, q: usize, mu3: f64) -> Self {
        Self::new(Matrix::zeros(q * (n + m), 1), n, m, q, mu3).expect("consistent sizes")
    }

    pub fn n(&self) -> usize {
        self.x_of_t.rows()
    }

    pub fn m(&self) -> usize {
        self.u_of_t.rows()
    }

    pub fn q(&self) -> usize {
        self.x_of_t.cols()
    }
}

/// One iteration `ζ ← ζ - μ3 Gᵀ(G ζ - b)`, with `X(t)` and `U(t)` refreshed.
pub fn step_regulator(it: &RegulatorIterate, g_t: &Matrix, b_vec: &Matrix) -> RegulatorIterate {
    let zeta = iterate_perturbed(&it.zeta, g_t, b_vec, it.mu3);
    RegulatorIterate::new(zeta, it.n(), it.m(), it.q(), it.mu3).expect("shape preserved")
}
