//! Feedback gains and the two distributed control laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::systems::{self, FollowerPlant};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GainSide {
    /// `A + B K`
    Input,
    /// `A + L C`
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ControlMode {
    #[default]
    StateFeedback,
    OutputFeedback,
}

/// Schur test of `A + B K` or `A + L C`.
pub fn verify_gain(a: &Matrix, b_or_c: &Matrix, gain: &Matrix, side: GainSide) -> Result<bool> {
    let closed = closed_loop(a, b_or_c, gain, side)?;
    linalg::is_schur(&closed, tol::SCHUR_MARGIN)
}

/// `A + B K` or `A + L C`, with shape checks.
pub fn closed_loop(a: &Matrix, b_or_c: &Matrix, gain: &Matrix, side: GainSide) -> Result<Matrix> {
    let product = match side {
        GainSide::Input => b_or_c.try_mul(gain)?,
        GainSide::Output => gain.try_mul(b_or_c)?,
    };
    a.try_add(&product)
}

/// Stabilizing state-feedback gain from the discrete Riccati recursion with
/// identity weights, `K = -(R + BᵀPB)⁻¹ BᵀPA`.
pub fn synthesize_gain(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if !a.is_square() || b.rows() != a.rows() {
        return Err(Error::Dimension(format!(
            "A is {}x{}, B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let bad = systems::uncontrollable_unstable_modes(a, b)?;
    if !bad.is_empty() {
        return Err(Error::Unstabilizable(format!(
            "uncontrollable modes on or outside the unit circle: {bad:?}"
        )));
    }
    let n = a.rows();
    let m = b.cols();
    let q = Matrix::identity(n);
    let r = Matrix::identity(m);
    let at = a.transpose();
    let bt = b.transpose();
    let mut p = q.clone();
    for _ in 0..tol::RICCATI_MAX_ITERATIONS {
        let btp = &bt * &p;
        let gram = &r + &(&btp * b);
        let btpa = &btp * a;
        let k = linalg::solve_linear(&gram, &btpa)?;
        let mut next = &(&(&at * &p) * a) - &(&btpa.transpose() * &k);
        next.axpy(1.0, &q);
        // symmetrize to stop rounding from accumulating skew
        next = (&next + &next.transpose()).scale(0.5);
        let change = (&next - &p).frobenius_norm();
        let scale = next.frobenius_norm().max(1.0);
        p = next;
        if change <= tol::RICCATI_TOLERANCE * scale {
            let gram = &r + &(&(&bt * &p) * b);
            let gain = linalg::solve_linear(&gram, &(&(&bt * &p) * a))?.scale(-1.0);
            if verify_gain(a, b, &gain, GainSide::Input)? {
                return Ok(gain);
            }
            return Err(Error::NoConvergence(
                "Riccati gain does not stabilize the pair".into(),
            ));
        }
        if !p.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence(format!(
        "Riccati recursion did not settle in {} iterations",
        tol::RICCATI_MAX_ITERATIONS
    )))
}

/// Observer gain `L` with `A + L C` Schur, from the dual pair `(Aᵀ, Cᵀ)`.
pub fn synthesize_observer_gain(a: &Matrix, c: &Matrix) -> Result<Matrix> {
    match synthesize_gain(&a.transpose(), &c.transpose()) {
        Ok(k) => Ok(k.transpose()),
        Err(Error::Unstabilizable(msg)) => Err(Error::Unstabilizable(format!(
            "pair (C, A) is not detectable: {msg}"
        ))),
        Err(e) => Err(e),
    }
}

/// Time-invariant gains of one follower, validated at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub k_x: Matrix,
    pub l_gain: Option<Matrix>,
    pub mode: ControlMode,
}

impl ControllerConfig {
    pub fn new(
        plant: &FollowerPlant,
        k_x: Matrix,
        l_gain: Option<Matrix>,
        mode: ControlMode,
    ) -> Result<Self> {
        if k_x.shape() != (plant.m(), plant.n()) {
            return Err(Error::Dimension(format!(
                "Kx is {}x{}, expected {}x{}",
                k_x.rows(),
                k_x.cols(),
                plant.m(),
                plant.n()
            )));
        }
        if !verify_gain(&plant.a, &plant.b, &k_x, GainSide::Input)? {
            return Err(Error::Precondition("A + B Kx is not Schur".into()));
        }
        match (mode, &l_gain) {
            (ControlMode::OutputFeedback, None) => {
                return Err(Error::Precondition(
                    "output feedback needs an observer gain L".into(),
                ))
            }
            (ControlMode::OutputFeedback, Some(l)) => {
                if l.shape() != (plant.n(), plant.p()) {
                    return Err(Error::Dimension(format!(
                        "L is {}x{}, expected {}x{}",
                        l.rows(),
                        l.cols(),
                        plant.n(),
                        plant.p()
                    )));
                }
                if !verify_gain(&plant.a, &plant.c_m, l, GainSide::Output)? {
                    return Err(Error::Precondition("A + L Cm is not Schur".into()));
                }
            }
            (ControlMode::StateFeedback, _) => {}
        }
        Ok(Self { k_x, l_gain, mode })
    }
}

/// Per-tick controller memory: the Luenberger state and the current
/// feedforward gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub xi: Option<Matrix>,
    pub k_eta: Matrix,
}

/// `K_η(t) = U(t) - K_x X(t)`.
pub fn feedforward_gain(k_x: &Matrix, x_t: &Matrix, u_t: &Matrix) -> Matrix {
    u_t - &(k_x * x_t)
}

/// `u = K_x x + K_η η`.
pub fn control_state_feedback(
    cfg: &ControllerConfig,
    st: &ControllerState,
    x: &Matrix,
    eta: &Matrix,
) -> Matrix {
    &(&cfg.k_x * x) + &(&st.k_eta * eta)
}

/// `u = K_x ξ + K_η η`, then
/// `ξ⁺ = A ξ + B u + E η + L (C_m ξ + D_m u + F_m η - y_m)` using that `u`.
pub fn control_output_feedback(
    cfg: &ControllerConfig,
    plant: &FollowerPlant,
    st: &ControllerState,
    y_m: &Matrix,
    eta: &Matrix,
) -> Result<(Matrix, Matrix)> {
    let (xi, l) = match (&st.xi, &cfg.l_gain) {
        (Some(xi), Some(l)) => (xi, l),
        _ => return Err(Error::Precondition("output feedback needs ξ and L".into())),
    };
    let u = &(&cfg.k_x * xi) + &(&st.k_eta * eta);
    let predicted = plant.measurement(xi, &u, eta);
    let innovation = &predicted - y_m;
    let mut xi_next = plant.step(xi, &u, eta).x_next;
    xi_next.axpy(1.0, &(l * &innovation));
    Ok((u, xi_next))
}
