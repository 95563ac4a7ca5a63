//! Leader and follower models, regulator-equation data and assumption checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gains::Gains;
use crate::linalg::{self, kron, unvec, vec, Complex64, Matrix};
use crate::tol;
use crate::topology::{self, Digraph};

/// Exosystem `v(t+1) = S v(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderSystem {
    pub s: Matrix,
    pub v0: Matrix,
}

impl LeaderSystem {
    pub fn new(s: Matrix, v0: Matrix) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::Dimension(format!(
                "leader matrix S is {}x{}, must be square",
                s.rows(),
                s.cols()
            )));
        }
        if v0.shape() != (s.rows(), 1) {
            return Err(Error::Dimension(format!(
                "v0 has shape {:?}, expected ({}, 1)",
                v0.shape(),
                s.rows()
            )));
        }
        Ok(Self { s, v0 })
    }

    pub fn q(&self) -> usize {
        self.s.rows()
    }

    pub fn step(&self, v: &Matrix) -> Matrix {
        step_leader(self, v)
    }

    /// Largest eigenvalue modulus of `S` is at most `1 + LEADER_MODULUS_SLACK`.
    pub fn is_marginally_stable(&self) -> Result<bool> {
        Ok(linalg::spectral_radius(&self.s)? <= 1.0 + tol::LEADER_MODULUS_SLACK)
    }
}

pub fn step_leader(l: &LeaderSystem, v: &Matrix) -> Matrix {
    &l.s * v
}

/// Follower plant
///
/// ```text
/// x(t+1) = A x + B u + E v
/// e(t)   = C x + D u + F v
/// y_m(t) = Cm x + Dm u + Fm v
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerPlant {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
    pub e: Matrix,
    pub f: Matrix,
    pub c_m: Matrix,
    pub d_m: Matrix,
    pub f_m: Matrix,
    pub x0: Matrix,
}

/// Output of one plant step.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerStep {
    pub x_next: Matrix,
    pub e: Matrix,
    pub y_m: Matrix,
}

impl FollowerPlant {
    /// Checks that all nine matrices and `x0` agree on `(n, m, p, q)`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Matrix,
        b: Matrix,
        c: Matrix,
        d: Matrix,
        e: Matrix,
        f: Matrix,
        c_m: Matrix,
        d_m: Matrix,
        f_m: Matrix,
        x0: Option<Matrix>,
    ) -> Result<Self> {
        let n = a.rows();
        let m = b.cols();
        let q = e.cols();
        let p = c_m.rows();
        let x0 = x0.unwrap_or_else(|| Matrix::zeros(n, 1));
        let expect = [
            ("A", &a, (n, n)),
            ("B", &b, (n, m)),
            ("C", &c, (m, n)),
            ("D", &d, (m, m)),
            ("E", &e, (n, q)),
            ("F", &f, (m, q)),
            ("Cm", &c_m, (p, n)),
            ("Dm", &d_m, (p, m)),
            ("Fm", &f_m, (p, q)),
            ("x0", &x0, (n, 1)),
        ];
        for (name, mat, shape) in expect {
            if mat.shape() != shape {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {}x{}",
                    mat.rows(),
                    mat.cols(),
                    shape.0,
                    shape.1
                )));
            }
        }
        if n == 0 || m == 0 || q == 0 {
            return Err(Error::Dimension("plant dimensions must be positive".into()));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            e,
            f,
            c_m,
            d_m,
            f_m,
            x0,
        })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    pub fn p(&self) -> usize {
        self.c_m.rows()
    }

    pub fn q(&self) -> usize {
        self.e.cols()
    }

    pub fn step(&self, x: &Matrix, u: &Matrix, v: &Matrix) -> FollowerStep {
        step_follower(self, x, u, v)
    }

    /// Regulated output `C x + D u + F v`.
    pub fn regulated_output(&self, x: &Matrix, u: &Matrix, v: &Matrix) -> Matrix {
        affine3(&self.c, x, &self.d, u, &self.f, v)
    }

    /// Measurement `Cm x + Dm u + Fm v`.
    pub fn measurement(&self, x: &Matrix, u: &Matrix, v: &Matrix) -> Matrix {
        affine3(&self.c_m, x, &self.d_m, u, &self.f_m, v)
    }
}

fn affine3(p: &Matrix, x: &Matrix, q: &Matrix, u: &Matrix, r: &Matrix, v: &Matrix) -> Matrix {
    let mut out = p * x;
    out.axpy(1.0, &(q * u));
    out.axpy(1.0, &(r * v));
    out
}

pub fn step_follower(p: &FollowerPlant, x: &Matrix, u: &Matrix, v: &Matrix) -> FollowerStep {
    FollowerStep {
        x_next: affine3(&p.a, x, &p.b, u, &p.e, v),
        e: p.regulated_output(x, u, v),
        y_m: p.measurement(x, u, v),
    }
}

/// Vectorized regulator equations `Q vec([X; U]) = vec([E; F])` and their
/// exact solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegulatorData {
    pub q_mat: Matrix,
    pub b_vec: Matrix,
    pub exact_x: Matrix,
    pub exact_u: Matrix,
}

impl RegulatorData {
    /// `[X; U]`.
    pub fn stacked(&self) -> Matrix {
        Matrix::vstack(&self.exact_x, &self.exact_u).expect("consistent widths")
    }

    /// Residuals of `X S = A X + B U + E` and `0 = C X + D U + F` (Frobenius).
    pub fn equation_residuals(&self, p: &FollowerPlant, s: &Matrix) -> (f64, f64) {
        regulator_equation_residuals(p, s, &self.exact_x, &self.exact_u)
    }
}

pub fn regulator_equation_residuals(
    p: &FollowerPlant,
    s: &Matrix,
    x: &Matrix,
    u: &Matrix,
) -> (f64, f64) {
    let lhs = x * s;
    let mut rhs = &p.a * x;
    rhs.axpy(1.0, &(&p.b * u));
    rhs.axpy(1.0, &p.e);
    let first = (&lhs - &rhs).frobenius_norm();
    let mut second = &p.c * x;
    second.axpy(1.0, &(&p.d * u));
    second.axpy(1.0, &p.f);
    (first, second.frobenius_norm())
}

/// `Sᵀ ⊗ [[I, 0], [0, 0]] - I_q ⊗ [[A, B], [C, D]]` for a given leader matrix
/// (the true `S` or an agent's estimate of it).
pub fn regulator_matrix(p: &FollowerPlant, s: &Matrix) -> Matrix {
    let (n, m) = (p.n(), p.m());
    let mut selector = Matrix::zeros(n + m, n + m);
    for i in 0..n {
        selector[(i, i)] = 1.0;
    }
    let plant = Matrix::block2x2(&p.a, &p.b, &p.c, &p.d).expect("validated plant");
    let left = kron(&s.transpose(), &selector);
    let right = kron(&Matrix::identity(s.rows()), &plant);
    &left - &right
}

/// `vec([E; F])`.
pub fn regulator_rhs(p: &FollowerPlant) -> Matrix {
    vec(&Matrix::vstack(&p.e, &p.f).expect("validated plant"))
}

pub fn build_regulator_data(p: &FollowerPlant, s: &Matrix) -> Result<RegulatorData> {
    if s.shape() != (p.q(), p.q()) {
        return Err(Error::Dimension(format!(
            "leader is {}x{}, plant expects q = {}",
            s.rows(),
            s.cols(),
            p.q()
        )));
    }
    let q_mat = regulator_matrix(p, s);
    let b_vec = regulator_rhs(p);
    let sol = linalg::solve_linear(&q_mat, &b_vec)?;
    let xi = unvec(&sol, p.n() + p.m(), p.q())?;
    Ok(RegulatorData {
        exact_x: xi.block(0, 0, p.n(), p.q()),
        exact_u: xi.block(p.n(), 0, p.m(), p.q()),
        q_mat,
        b_vec,
    })
}

fn shifted(a: &Matrix, lambda: Complex64) -> (Matrix, Matrix) {
    let n = a.rows();
    let re = a - &Matrix::identity(n).scale(lambda.re);
    let im = Matrix::identity(n).scale(-lambda.im);
    (re, im)
}

fn modes_to_test(a: &Matrix) -> Result<Vec<Complex64>> {
    Ok(linalg::spectrum(a)?
        .eigenvalues()
        .iter()
        .copied()
        .filter(|z| z.norm() >= 1.0 - tol::UNSTABLE_MODE_SLACK)
        .collect())
}

/// PBH test: `rank [A - λI, B] = n` for every eigenvalue of `A` on or
/// outside the unit circle. Returns the failing eigenvalues.
pub fn uncontrollable_unstable_modes(a: &Matrix, b: &Matrix) -> Result<Vec<Complex64>> {
    let n = a.rows();
    let mut bad = Vec::new();
    for lambda in modes_to_test(a)? {
        let (re, im) = shifted(a, lambda);
        let re = Matrix::hstack(&re, b)?;
        let im = Matrix::hstack(&im, &Matrix::zeros(n, b.cols()))?;
        if linalg::complex_rank(&re, &im)? < n {
            bad.push(lambda);
        }
    }
    Ok(bad)
}

pub fn is_stabilizable(a: &Matrix, b: &Matrix) -> Result<bool> {
    Ok(uncontrollable_unstable_modes(a, b)?.is_empty())
}

/// Dual PBH test: `rank [A - λI; C] = n` on or outside the unit circle.
pub fn unobservable_unstable_modes(c: &Matrix, a: &Matrix) -> Result<Vec<Complex64>> {
    uncontrollable_unstable_modes(&a.transpose(), &c.transpose())
}

pub fn is_detectable(c: &Matrix, a: &Matrix) -> Result<bool> {
    Ok(unobservable_unstable_modes(c, a)?.is_empty())
}

/// Eigenvalues of `S` at which `rank [[A - λI, B], [C, D]] < n + m`.
pub fn transmission_zeros_on_leader_spectrum(
    p: &FollowerPlant,
    s: &Matrix,
) -> Result<Vec<Complex64>> {
    let (n, m) = (p.n(), p.m());
    let mut bad = Vec::new();
    for &lambda in linalg::spectrum(s)?.eigenvalues() {
        let (are, aim) = shifted(&p.a, lambda);
        let re = Matrix::block2x2(&are, &p.b, &p.c, &p.d)?;
        let im = Matrix::block2x2(
            &aim,
            &Matrix::zeros(n, m),
            &Matrix::zeros(m, n),
            &Matrix::zeros(m, m),
        )?;
        if linalg::complex_rank(&re, &im)? < n + m {
            bad.push(lambda);
        }
    }
    Ok(bad)
}

/// Outcome of one assumption check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, id: u8) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn fmt_z(z: &Complex64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

/// Runs the six solvability checks:
///
/// 1. leader eigenvalues have modulus at most one;
/// 2. every `(A_i, B_i)` is stabilizable;
/// 3. every `(Cm_i, A_i)` is detectable;
/// 4. supplied gains are admissible (passes when no gains are supplied);
/// 5. regulator equations are uniquely solvable, by `Q_i` nonsingularity and
///    by the transmission-zero rank test, which must agree;
/// 6. the graph has a spanning tree rooted at the leader.
pub fn check_assumptions(
    leader: &LeaderSystem,
    plants: &[FollowerPlant],
    g: &Digraph,
    gains: Option<&Gains>,
) -> AssumptionReport {
    let mut checks = Vec::with_capacity(6);

    // 1
    let mut details = Vec::new();
    let passed = match linalg::spectrum(&leader.s) {
        Ok(sp) => {
            let r = sp.spectral_radius();
            details.push(format!("max |λ(S)| = {r:.12}"));
            r <= 1.0 + tol::LEADER_MODULUS_SLACK
        }
        Err(e) => {
            details.push(e.to_string());
            false
        }
    };
    checks.push(AssumptionCheck {
        id: 1,
        name: "leader eigenvalues within the closed unit disc".into(),
        passed,
        details,
    });

    // 2 and 3
    let mut stab = (true, Vec::new());
    let mut det = (true, Vec::new());
    for (k, p) in plants.iter().enumerate() {
        let agent = k + 1;
        match uncontrollable_unstable_modes(&p.a, &p.b) {
            Ok(bad) if bad.is_empty() => {}
            Ok(bad) => {
                stab.0 = false;
                let modes: Vec<String> = bad.iter().map(fmt_z).collect();
                stab.1.push(format!(
                    "agent {agent}: uncontrollable modes {}",
                    modes.join(", ")
                ));
            }
            Err(e) => {
                stab.0 = false;
                stab.1.push(format!("agent {agent}: {e}"));
            }
        }
        match unobservable_unstable_modes(&p.c_m, &p.a) {
            Ok(bad) if bad.is_empty() => {}
            Ok(bad) => {
                det.0 = false;
                let modes: Vec<String> = bad.iter().map(fmt_z).collect();
                det.1.push(format!(
                    "agent {agent}: unobservable modes {}",
                    modes.join(", ")
                ));
            }
            Err(e) => {
                det.0 = false;
                det.1.push(format!("agent {agent}: {e}"));
            }
        }
    }
    checks.push(AssumptionCheck {
        id: 2,
        name: "(A_i, B_i) stabilizable".into(),
        passed: stab.0,
        details: stab.1,
    });
    checks.push(AssumptionCheck {
        id: 3,
        name: "(Cm_i, A_i) detectable".into(),
        passed: det.0,
        details: det.1,
    });

    // 4
    let (passed, details) = match gains {
        None => (true, vec!["no gains supplied".to_string()]),
        Some(gs) => match gs.admissibility(leader, plants, g) {
            Ok(issues) => (issues.is_empty(), issues),
            Err(e) => (false, vec![e.to_string()]),
        },
    };
    checks.push(AssumptionCheck {
        id: 4,
        name: "supplied gains admissible".into(),
        passed,
        details,
    });

    // 5
    let mut passed = true;
    let mut details = Vec::new();
    for (k, p) in plants.iter().enumerate() {
        let agent = k + 1;
        if p.q() != leader.q() {
            passed = false;
            details.push(format!(
                "agent {agent}: E has {} columns, leader has q = {}",
                p.q(),
                leader.q()
            ));
            continue;
        }
        let nonsingular = build_regulator_data(p, &leader.s).is_ok();
        let zeros = match transmission_zeros_on_leader_spectrum(p, &leader.s) {
            Ok(z) => z,
            Err(e) => {
                passed = false;
                details.push(format!("agent {agent}: {e}"));
                continue;
            }
        };
        let rank_ok = zeros.is_empty();
        if !nonsingular || !rank_ok {
            passed = false;
            let z: Vec<String> = zeros.iter().map(fmt_z).collect();
            details.push(format!(
                "agent {agent}: Q nonsingular = {nonsingular}, rank condition = {rank_ok}{}",
                if z.is_empty() {
                    String::new()
                } else {
                    format!(" (transmission zeros at {})", z.join(", "))
                }
            ));
        }
        if nonsingular != rank_ok {
            details.push(format!(
                "agent {agent}: Q-nonsingularity and rank tests disagree"
            ));
        }
    }
    checks.push(AssumptionCheck {
        id: 5,
        name: "regulator equations uniquely solvable".into(),
        passed,
        details,
    });

    // 6
    let unreachable = topology::unreachable_followers(g);
    let mut details = Vec::new();
    if g.n_followers() != plants.len() {
        details.push(format!(
            "graph has {} followers, scenario has {} plants",
            g.n_followers(),
            plants.len()
        ));
    }
    if !unreachable.is_empty() {
        details.push(format!(
            "followers unreachable from the leader: {unreachable:?}"
        ));
    }
    checks.push(AssumptionCheck {
        id: 6,
        name: "spanning tree rooted at the leader".into(),
        passed: details.is_empty(),
        details,
    });

    AssumptionReport { checks }
}
