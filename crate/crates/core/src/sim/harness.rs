use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::decay_rate;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::tol;

/// Outcome of [`perturbed_linear_harness`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    /// Largest `‖x(horizon)‖` over all trials.
    pub max_final_norm: f64,
    /// Fitted log-decay slope of `‖x(t)‖` per trial.
    pub slopes: Vec<f64>,
    /// Both perturbations decay geometrically (factors strictly below one).
    pub hypothesis_met: bool,
    pub final_norms: Vec<f64>,
}

/// Simulates `x(t+1) = F x + F1(t) x + F2(t)` with `F1(t) = f1_decay^t R1`
/// and `F2(t) = f2_decay^t r2` for random `R1`, `r2` and `x(0)`.
pub fn perturbed_linear_harness(
    f: &Matrix,
    f1_decay: f64,
    f2_decay: f64,
    trials: usize,
    seed: u64,
    horizon: usize,
) -> Result<HarnessReport> {
    if !linalg::is_schur(f, tol::SCHUR_MARGIN)? {
        return Err(Error::Precondition("F is not Schur".into()));
    }
    for d in [f1_decay, f2_decay] {
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::Precondition(format!(
                "decay factor {d} outside [0, 1]"
            )));
        }
    }
    let n = f.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |rows: usize, cols: usize| {
        Matrix::from_row_major(
            rows,
            cols,
            (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .expect("finite draws")
    };
    let mut slopes = Vec::with_capacity(trials);
    let mut final_norms = Vec::with_capacity(trials);
    for _ in 0..trials {
        let r1 = uniform(n, n);
        let r2 = uniform(n, 1);
        let mut x = uniform(n, 1);
        let mut norms = Vec::with_capacity(horizon + 1);
        norms.push(x.frobenius_norm());
        let (mut s1, mut s2) = (1.0, 1.0);
        for _ in 0..horizon {
            let mut next = f * &x;
            next.axpy(s1, &(&r1 * &x));
            next.axpy(s2, &r2);
            x = next;
            s1 *= f1_decay;
            s2 *= f2_decay;
            norms.push(x.frobenius_norm());
        }
        slopes.push(decay_rate(&norms, 0.5)?);
        final_norms.push(*norms.last().expect("tick 0 recorded"));
    }
    Ok(HarnessReport {
        max_final_norm: final_norms.iter().copied().fold(0.0, f64::max),
        slopes,
        hypothesis_met: f1_decay < 1.0 && f2_decay < 1.0,
        final_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::random_schur;

    #[test]
    fn unperturbed_schur_decay() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let f = random_schur(&mut rng, 3, 0.9);
            let report = perturbed_linear_harness(&f, 0.0, 0.0, 5, 2, 200).unwrap();
            // 0^0 = 1: the perturbation acts only on the first step
            assert!(report.max_final_norm < 1e-8, "{report:?}");
        }
    }

    #[test]
    fn halving_perturbations_converge() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_schur(&mut rng, 4, 0.8);
        let report = perturbed_linear_harness(&f, 0.5, 0.5, 20, 4, 300).unwrap();
        assert!(report.hypothesis_met);
        assert!(report.max_final_norm < 1e-8);
        assert!(report.slopes.iter().all(|&s| s < 0.0));
    }

    #[test]
    fn constant_forcing_is_flagged() {
        let f = Matrix::diag(&[0.5, 0.2]);
        let report = perturbed_linear_harness(&f, 0.5, 1.0, 3, 5, 100).unwrap();
        assert!(!report.hypothesis_met);
        assert!(report.max_final_norm > 1e-3);
    }

    #[test]
    fn non_schur_is_rejected() {
        let f = Matrix::diag(&[1.0, 0.2]);
        assert!(matches!(
            perturbed_linear_harness(&f, 0.5, 0.5, 1, 0, 10),
            Err(Error::Precondition(_))
        ));
    }
}
