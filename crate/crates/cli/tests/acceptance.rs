//! Acceptance criteria for the worked four-follower example and the
//! randomized properties. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use coreg_cli::commands;
use coreg_cli::trace_csv;
use coreg_core::controller::{self, ControlMode, GainSide};
use coreg_core::gains;
use coreg_core::linalg::{self, Complex64, Matrix};
use coreg_core::observer::{self, ObserverState};
use coreg_core::regsolver::{self, RegulatorIterate};
use coreg_core::scenarios::{self, REFERENCE_CONVERGENCE_TICK, REFERENCE_FOLLOWERS};
use coreg_core::sim::{self, InitMode, RandomScenarioOptions};
use coreg_core::tol::CONVERGENCE_THRESHOLD;
use coreg_core::{systems, topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EIGEN_TOL: f64 = 1e-3;
const GRAM_EIGEN_TOL: f64 = 0.01;
const BOUND_TOL: f64 = 1e-3;
const CLOSED_FORM_TOL: f64 = 1e-6;
const REGULATOR_RESIDUAL_TOL: f64 = 1e-9;
const PERTURBED_TOL: f64 = 1e-8;
const MATRIX_FORM_TOL: f64 = 1e-12;
const SLOPE_TOL: f64 = 0.05;
const REGULATOR_TICKS: usize = 3000;
const RANDOM_SCENARIOS: u64 = 10;

type Check = Result<String, String>;
/// Number, name, runtime budget in seconds, check.
type Criterion = (u8, &'static str, u64, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn spectral_reproduction() -> Check {
    let h = topology::build_h(&scenarios::reference_graph()).map_err(err)?;
    let dh = linalg::multiset_distance(
        h.spectrum.eigenvalues(),
        &[
            c(2.420, 0.606),
            c(2.420, -0.606),
            c(1.0, 0.0),
            c(0.161, 0.0),
        ],
    );
    ensure(dh <= EIGEN_TOL, || format!("σ(H) off by {dh:e}"))?;

    let s = scenarios::reference_leader().s;
    let ds = linalg::multiset_distance(
        linalg::spectrum(&s).map_err(err)?.eigenvalues(),
        &[c(0.707, 0.707), c(0.707, -0.707)],
    );
    ensure(ds <= EIGEN_TOL, || format!("σ(S) off by {ds:e}"))?;

    let expected_gram = [0.199, 0.199, 1.56, 1.56, 3.25, 3.25];
    let gains = scenarios::reference_gains();
    let mut worst_gram = 0.0f64;
    let mut worst_cl = 0.0f64;
    for (k, p) in scenarios::reference_plants().iter().enumerate() {
        let q = systems::regulator_matrix(p, &s);
        let mut eig = linalg::symmetric_eigenvalues(&(&q.transpose() * &q)).map_err(err)?;
        eig.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(expected_gram) {
            worst_gram = worst_gram.max((a - b).abs());
        }
        let a_cl =
            controller::closed_loop(&p.a, &p.b, &gains.k_x[k], GainSide::Input).map_err(err)?;
        let sp = linalg::spectrum(&a_cl).map_err(err)?;
        worst_cl = worst_cl.max(linalg::multiset_distance(
            sp.eigenvalues(),
            &[c(0.447, 0.0), c(-0.447, 0.0)],
        ));
    }
    ensure(worst_gram <= GRAM_EIGEN_TOL, || {
        format!("σ(QᵀQ) off by {worst_gram:e}")
    })?;
    ensure(worst_cl <= EIGEN_TOL, || {
        format!("σ(A+BKx) off by {worst_cl:e}")
    })?;
    Ok(format!(
        "max deviations: H {dh:.1e}, S {ds:.1e}, QᵀQ {worst_gram:.1e}, A+BKx {worst_cl:.1e}"
    ))
}

fn gain_bounds() -> Check {
    let h = topology::build_h(&scenarios::reference_graph()).map_err(err)?;
    let s = scenarios::reference_leader().s;
    let mu1 = topology::mu1_interval(&h).map_err(err)?.1;
    ensure((mu1 - 0.778).abs() <= BOUND_TOL, || {
        format!("2/ρ(H) = {mu1}")
    })?;
    let mut mu3 = Vec::new();
    for p in scenarios::reference_plants() {
        let b = regsolver::mu3_bound(&systems::regulator_matrix(&p, &s)).map_err(err)?;
        ensure((b - 0.615).abs() <= BOUND_TOL, || format!("2/ρ(QᵀQ) = {b}"))?;
        mu3.push(b);
    }
    ensure(topology::verify_mu2(&h, &s, 0.4).map_err(err)?, || {
        "μ2 = 0.4 not certified Schur".into()
    })?;
    let certified = topology::certified_mu2_interval(&h, &s).map_err(err)?;
    let (lo, hi) = certified.ok_or("no certified μ2 interval")?;
    ensure(lo <= 0.4 && 0.4 <= hi, || {
        format!("certified μ2 interval ({lo}, {hi}) excludes 0.4")
    })?;
    Ok(format!(
        "2/ρ(H) = {mu1:.4}, 2/ρ(QᵀQ) = {:.4}, μ2 = 0.4 Schur, certified μ2 ∈ ({lo:.4}, {hi:.4})",
        mu3[0]
    ))
}

fn closed_form_error(it: &RegulatorIterate, agent: usize) -> f64 {
    let (x, u) = scenarios::reference_regulator_solution(agent);
    (&it.x_of_t - &x)
        .frobenius_norm()
        .max((&it.u_of_t - &u).frobenius_norm())
}

fn regulator_oracle() -> Check {
    let leader = scenarios::reference_leader();
    let graph = scenarios::reference_graph();
    let plants = scenarios::reference_plants();
    let mu3 = 0.1;

    let mut worst_exact = 0.0f64;
    let mut worst_residual = 0.0f64;
    for (k, p) in plants.iter().enumerate() {
        let data = systems::build_regulator_data(p, &leader.s).map_err(err)?;
        let mut it = RegulatorIterate::zeros(p.n(), p.m(), leader.q(), mu3);
        for _ in 0..REGULATOR_TICKS {
            it = regsolver::step_regulator(&it, &data.q_mat, &data.b_vec);
        }
        worst_exact = worst_exact.max(closed_form_error(&it, k + 1));
        let (r1, r2) = systems::regulator_equation_residuals(p, &leader.s, &it.x_of_t, &it.u_of_t);
        worst_residual = worst_residual.max(r1).max(r2);
    }

    // G_i(t) built from the adaptive observer's running estimate S_i(t)
    let mut st = ObserverState::zeros(REFERENCE_FOLLOWERS, leader.q(), 0.3, 0.4);
    let mut its: Vec<_> = plants
        .iter()
        .map(|p| RegulatorIterate::zeros(p.n(), p.m(), leader.q(), mu3))
        .collect();
    let mut v = leader.v0.clone();
    for _ in 0..REGULATOR_TICKS {
        for (k, p) in plants.iter().enumerate() {
            let g = regsolver::build_g(p, &st.s_est[k]);
            its[k] = regsolver::step_regulator(&its[k], &g, &systems::regulator_rhs(p));
        }
        st = observer::step_adaptive(&st, &graph, &leader.s, &v);
        v = leader.step(&v);
    }
    let worst_adaptive = its
        .iter()
        .enumerate()
        .map(|(k, it)| closed_form_error(it, k + 1))
        .fold(0.0, f64::max);

    ensure(worst_exact <= CLOSED_FORM_TOL, || {
        format!("exact-Q error {worst_exact:e}")
    })?;
    ensure(worst_adaptive <= CLOSED_FORM_TOL, || {
        format!("adaptive error {worst_adaptive:e}")
    })?;
    ensure(worst_residual <= REGULATOR_RESIDUAL_TOL, || {
        format!("regulator equation residual {worst_residual:e}")
    })?;
    Ok(format!(
        "closed-form error: exact Q {worst_exact:.1e}, adaptive {worst_adaptive:.1e}; residual {worst_residual:.1e}"
    ))
}

fn closed_loop_convergence() -> Check {
    let mut sc = scenarios::reference_scenario();
    sc.horizon = 10 * REFERENCE_CONVERGENCE_TICK;
    let trace = sim::run(&sc).map_err(err)?;
    let t_star = trace
        .convergence_tick(CONVERGENCE_THRESHOLD)
        .ok_or("never converged")?;
    ensure(t_star == REFERENCE_CONVERGENCE_TICK, || {
        format!("T* = {t_star}, golden {REFERENCE_CONVERGENCE_TICK}")
    })?;
    let at = trace.ticks[2 * REFERENCE_CONVERGENCE_TICK].errors();
    ensure(at.tracking < CONVERGENCE_THRESHOLD, || {
        format!("|e| = {:e} at 2T*", at.tracking)
    })?;
    ensure(at.eta < CONVERGENCE_THRESHOLD, || {
        format!("‖η̃‖ = {:e} at 2T*", at.eta)
    })?;
    ensure(at.s < CONVERGENCE_THRESHOLD, || {
        format!("‖S̃‖ = {:e} at 2T*", at.s)
    })?;
    let bound = trace.max_signal();
    ensure(bound.is_finite() && bound < 1e3, || {
        format!("signal peak {bound:e}")
    })?;
    Ok(format!(
        "T* = {t_star}; at 2T* max error {:.1e}; peak signal over 10T* {bound:.3}",
        at.max()
    ))
}

fn output_feedback_convergence() -> Check {
    let mut sc = scenarios::reference_scenario();
    let report = gains::gain_report(&sc.leader, &sc.plants, &sc.graph, true).map_err(err)?;
    sc.gains.l = report.defaults.l;
    sc.mode = ControlMode::OutputFeedback;
    sc.horizon = 2 * REFERENCE_CONVERGENCE_TICK;
    let trace = sim::run(&sc).map_err(err)?;
    let fin = trace.final_errors();
    ensure(fin.max() < CONVERGENCE_THRESHOLD, || {
        format!("auto L final errors {fin:?}")
    })?;
    let peak_xi = trace.error_series(|e| e.xi).into_iter().fold(0.0, f64::max);

    // a nonzero observer gain and random initial states exercise the innovation term
    sc.gains.l = vec![Some(Matrix::col(&[0.0, 0.09])); REFERENCE_FOLLOWERS];
    sc.init = InitMode::Random;
    let tuned = sim::run(&sc).map_err(err)?.final_errors();
    ensure(tuned.max() < CONVERGENCE_THRESHOLD, || {
        format!("L = [0; 0.09] final errors {tuned:?}")
    })?;
    Ok(format!(
        "auto L: final max error {:.1e} (peak ‖ξ − x‖ {peak_xi:.2}); L = [0; 0.09], random start: {:.1e}",
        fin.max(),
        tuned.max()
    ))
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_row_major(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .expect("finite draws")
}

fn perturbed_iteration_suites() -> Check {
    // (a) geometrically vanishing perturbations of a Schur system
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let mut worst_a = 0.0f64;
    for trial in 0..50u64 {
        let n = rng.gen_range(1..=4);
        let radius = rng.gen_range(0.1..0.9);
        let f = sim::random_schur(&mut rng, n, radius);
        let rep = sim::perturbed_linear_harness(&f, 0.5, 0.5, 1, trial, 400).map_err(err)?;
        worst_a = worst_a.max(rep.max_final_norm);
    }
    ensure(worst_a < PERTURBED_TOL, || {
        format!("harness final norm {worst_a:e}")
    })?;

    // (b) gradient iteration with a vanishing matrix perturbation
    let mut worst_b = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=4);
        let a = loop {
            let a = uniform(&mut rng, n, n);
            if linalg::condition_number(&a).is_ok_and(|c| c <= 10.0) {
                break a;
            }
        };
        let delta = uniform(&mut rng, n, n);
        let b = uniform(&mut rng, n, 1);
        let eps = rng.gen_range(0.2..0.95) * regsolver::step_bound(&a).map_err(err)?;
        let exact = linalg::solve_linear(&a, &b).map_err(err)?;
        let mut x = Matrix::zeros(n, 1);
        let mut scale = 1.0;
        for _ in 0..4000 {
            let mut perturbed = a.clone();
            perturbed.axpy(scale, &delta);
            x = regsolver::iterate_perturbed(&x, &perturbed, &b, eps);
            scale *= 0.5;
        }
        worst_b = worst_b.max((&x - &exact).max_abs());
    }
    ensure(worst_b < PERTURBED_TOL, || {
        format!("iterate vs exact solve {worst_b:e}")
    })?;

    // (c) stacked leader-matrix error follows (I - μ1 H⊗I) exactly
    let graph = scenarios::reference_graph();
    let h = topology::build_h(&graph).map_err(err)?;
    let s = scenarios::reference_leader().s;
    let mu1 = 0.3;
    let transition = observer::s_error_matrix(&h.h, 2, mu1);
    let radius = linalg::spectral_radius(&transition).map_err(err)?;
    let mut st = ObserverState::zeros(REFERENCE_FOLLOWERS, 2, mu1, 0.4);
    let v = Matrix::col(&[0.0, 2.0]);
    let mut worst_c = 0.0f64;
    let mut norms = Vec::new();
    for _ in 0..150 {
        let before = observer::stacked_s_error(&st, &s);
        norms.push(before.frobenius_norm());
        st = observer::step_adaptive(&st, &graph, &s, &v);
        let after = observer::stacked_s_error(&st, &s);
        worst_c = worst_c.max((&after - &(&transition * &before)).max_abs());
    }
    let slope = sim::decay_rate(&norms, 0.5).map_err(err)?;
    ensure(worst_c <= MATRIX_FORM_TOL, || {
        format!("matrix form mismatch {worst_c:e}")
    })?;
    ensure((slope - radius.ln()).abs() <= SLOPE_TOL, || {
        format!("slope {slope:.4} vs log radius {:.4}", radius.ln())
    })?;
    Ok(format!(
        "(a) {worst_a:.1e}, (b) {worst_b:.1e}, (c) form {worst_c:.1e}, slope {slope:.4} vs {:.4}",
        radius.ln()
    ))
}

fn random_end_to_end() -> Check {
    let opts = RandomScenarioOptions::default();
    let mut worst = 0.0f64;
    let mut latest = 0;
    for seed in 0..RANDOM_SCENARIOS {
        let sc = sim::random_scenario(seed, &opts).map_err(err)?;
        ensure(
            sc.plants.len() <= 5 && sc.leader.q() <= 3 && sc.plants.iter().all(|p| p.n() <= 3),
            || format!("seed {seed}: scenario exceeds size limits"),
        )?;
        let checks = systems::check_assumptions(&sc.leader, &sc.plants, &sc.graph, Some(&sc.gains));
        ensure(checks.all_passed(), || {
            format!("seed {seed}: assumption check failed")
        })?;
        let trace = sim::run(&sc).map_err(err)?;
        let fin = trace.final_errors();
        ensure(fin.max() < CONVERGENCE_THRESHOLD, || {
            format!("seed {seed}: {fin:?}")
        })?;
        worst = worst.max(fin.max());
        latest = latest.max(
            trace
                .convergence_tick(CONVERGENCE_THRESHOLD)
                .unwrap_or(usize::MAX),
        );
    }
    Ok(format!(
        "{RANDOM_SCENARIOS} scenarios converged; worst final error {worst:.1e}, latest convergence tick {latest}"
    ))
}

fn determinism_and_format() -> Check {
    let a = tempfile::tempdir().map_err(err)?;
    let b = tempfile::tempdir().map_err(err)?;
    for dir in [&a, &b] {
        let code = commands::reproduce_paper(dir.path(), &mut std::io::sink()).map_err(err)?;
        ensure(code == 0, || format!("reproduction exited {code}"))?;
    }
    let mut csvs: Vec<_> = std::fs::read_dir(a.path())
        .map_err(err)?
        .filter_map(|e| e.ok().map(|e| e.file_name()))
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    csvs.sort();
    for name in &csvs {
        let left = std::fs::read(a.path().join(name)).map_err(err)?;
        let right = std::fs::read(b.path().join(name)).map_err(err)?;
        ensure(left == right, || format!("{name:?} differs between runs"))?;
    }
    let text = std::fs::read_to_string(a.path().join("trace_state_feedback.csv")).map_err(err)?;
    let parsed = trace_csv::read_trace(text.as_bytes()).map_err(err)?;
    let mut sc = scenarios::reference_scenario();
    sc.horizon = 2 * REFERENCE_CONVERGENCE_TICK;
    let direct = sim::run(&sc).map_err(err)?;
    ensure(parsed == direct, || {
        "parsed trace differs from the simulated one".into()
    })?;
    ensure(trace_csv::trace_to_string(&parsed) == text, || {
        "re-serialized CSV differs".into()
    })?;
    Ok(format!(
        "{} CSV files byte-identical; trace round-trip exact",
        csvs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "spectral reproduction", 1, spectral_reproduction),
        (2, "gain bounds", 1, gain_bounds),
        (3, "regulator-equation oracle", 5, regulator_oracle),
        (
            4,
            "closed-loop convergence (state feedback)",
            10,
            closed_loop_convergence,
        ),
        (
            5,
            "closed-loop convergence (output feedback)",
            10,
            output_feedback_convergence,
        ),
        (6, "perturbed-iteration property suites", 30, perturbed_iteration_suites),
        (7, "randomized end-to-end", 60, random_end_to_end),
        (8, "determinism and CSV format", 60, determinism_and_format),
    ];
    let mut failures = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        let (status, detail) = match &outcome {
            Ok(d) if !over => ("PASS", d.clone()),
            Ok(d) => ("FAIL", format!("{d}; over the {budget} s budget")),
            Err(e) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!(
            "criterion {id} [{status}] {name}: {detail} ({:.2} s)",
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
