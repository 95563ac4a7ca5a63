//! Subcommand implementations. Each returns the process exit code or an
//! error that maps to one.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use coreg_core::controller::{self, GainSide};
use coreg_core::linalg::{self, Complex64};
use coreg_core::scenarios;
use coreg_core::sim::{self, SimTrace, TickErrors};
use coreg_core::tol::CONVERGENCE_THRESHOLD;
use coreg_core::{systems, topology, ControlMode};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::plot::{self, Panel};
use crate::report::{self, CheckReport};
use crate::scenario_file::ScenarioFile;
use crate::trace_csv::{self, format_number};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TraceFormat {
    Csv,
    Json,
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

pub fn build_check_report(doc: &ScenarioFile) -> CliResult<CheckReport> {
    let model = doc.model()?;
    let gains = doc
        .resolve_gains(&model, doc.sim.mode)
        .map_err(|e| e.to_string());
    Ok(report::check_report(&model, gains, doc.sim.mode))
}

/// Prints the assumption report; writes it as JSON to `json_out` when given.
/// Exit code 0 iff every check passes.
pub fn check(path: &Path, json_out: Option<&Path>, out: &mut dyn Write) -> CliResult<i32> {
    let doc = ScenarioFile::load(path)?;
    let rep = build_check_report(&doc)?;
    emit(out, &report::check_text(&rep))?;
    if let Some(p) = json_out {
        write_file(p, to_json(&rep).as_bytes())?;
    }
    Ok(if rep.all_passed { 0 } else { 1 })
}

/// Prints admissible intervals and automatic gain choices as JSON.
pub fn gains(path: &Path, out: &mut dyn Write) -> CliResult<i32> {
    let doc = ScenarioFile::load(path)?;
    let model = doc.model()?;
    let summary = report::gain_summary(&model, doc.sim.mode)?;
    emit(out, &to_json(&summary))?;
    Ok(0)
}

pub struct SimulateArgs<'a> {
    pub scenario: &'a Path,
    pub out: &'a Path,
    pub plot: Option<&'a Path>,
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
    pub format: TraceFormat,
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> CliResult<i32> {
    let doc = ScenarioFile::load(args.scenario)?;
    let sc = doc.to_scenario(args.horizon, args.seed)?;
    let trace = sim::run(&sc)?;
    let body = match args.format {
        TraceFormat::Csv => trace_csv::trace_to_string(&trace),
        TraceFormat::Json => to_json(&trace),
    };
    write_file(args.out, body.as_bytes())?;
    if let Some(p) = args.plot {
        write_file(p, plot::error_chart(&trace).as_bytes())?;
    }
    let fin = trace.final_errors();
    emit(
        out,
        &format!(
            "ticks: {}\nfinal max |e|: {:e}\nfinal max ‖η − v‖: {:e}\nfinal max ‖S_i − S‖: {:e}\nconvergence tick (threshold {:e}): {}\n",
            trace.horizon(),
            fin.tracking,
            fin.eta,
            fin.s,
            CONVERGENCE_THRESHOLD,
            trace
                .convergence_tick(CONVERGENCE_THRESHOLD)
                .map_or("not reached".to_string(), |t| t.to_string())
        ),
    )?;
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectra {
    pub h: Vec<Complex64>,
    pub s: Vec<Complex64>,
    /// Eigenvalues of `Q_iᵀ Q_i`, ascending, per follower.
    pub qtq: Vec<Vec<f64>>,
    /// Eigenvalues of `A_i + B_i K_xi` per follower.
    pub closed_loop: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub mode: ControlMode,
    pub horizon: usize,
    pub convergence_tick: Option<usize>,
    pub final_errors: TickErrors,
    pub max_signal: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproductionReport {
    pub check: CheckReport,
    pub spectra: Spectra,
    pub mu1_bound: f64,
    pub mu3_bounds: Vec<f64>,
    pub leader_first_ticks: Vec<(usize, Vec<f64>)>,
    pub runs: Vec<RunSummary>,
}

pub fn spectra(doc: &ScenarioFile) -> CliResult<Spectra> {
    let sc = doc.to_scenario(None, None)?;
    let h = topology::build_h(&sc.graph)?;
    let mut qtq = Vec::new();
    let mut closed = Vec::new();
    for (k, p) in sc.plants.iter().enumerate() {
        let q = systems::regulator_matrix(p, &sc.leader.s);
        let mut eig = linalg::symmetric_eigenvalues(&(&q.transpose() * &q))?;
        eig.sort_by(f64::total_cmp);
        qtq.push(eig);
        let a_cl = controller::closed_loop(&p.a, &p.b, &sc.gains.k_x[k], GainSide::Input)?;
        closed.push(linalg::spectrum(&a_cl)?.eigenvalues().to_vec());
    }
    Ok(Spectra {
        h: h.spectrum.eigenvalues().to_vec(),
        s: linalg::spectrum(&sc.leader.s)?.eigenvalues().to_vec(),
        qtq,
        closed_loop: closed,
    })
}

fn summary(trace: &SimTrace, mode: ControlMode) -> RunSummary {
    RunSummary {
        mode,
        horizon: trace.horizon(),
        convergence_tick: trace.convergence_tick(CONVERGENCE_THRESHOLD),
        final_errors: trace.final_errors(),
        max_signal: trace.max_signal(),
    }
}

fn series_csv(trace: &SimTrace, pick: impl Fn(&sim::AgentRecord) -> f64) -> String {
    let n = trace.ticks.first().map_or(0, |r| r.agents.len());
    let mut s = String::from("t");
    for k in 1..=n {
        s.push_str(&format!(",agent_{k}"));
    }
    s.push('\n');
    for rec in &trace.ticks {
        s.push_str(&rec.t.to_string());
        for a in &rec.agents {
            s.push(',');
            s.push_str(&format_number(pick(a)));
        }
        s.push('\n');
    }
    s
}

fn reproduction_text(r: &ReproductionReport) -> String {
    let fmt_c = |zs: &[Complex64]| {
        zs.iter()
            .map(|z| format!("{:.4}{:+.4}i", z.re, z.im))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut t = report::check_text(&r.check);
    t.push_str(&format!("σ(H): {}\n", fmt_c(&r.spectra.h)));
    t.push_str(&format!("σ(S): {}\n", fmt_c(&r.spectra.s)));
    for (k, e) in r.spectra.qtq.iter().enumerate() {
        let vals: Vec<String> = e.iter().map(|v| format!("{v:.4}")).collect();
        t.push_str(&format!(
            "σ(Q_{}ᵀQ_{}): {}\n",
            k + 1,
            k + 1,
            vals.join(", ")
        ));
    }
    for (k, e) in r.spectra.closed_loop.iter().enumerate() {
        t.push_str(&format!("σ(A_{0} + B_{0} Kx_{0}): {1}\n", k + 1, fmt_c(e)));
    }
    t.push_str(&format!("2/ρ(H) = {:.6}\n", r.mu1_bound));
    for (k, b) in r.mu3_bounds.iter().enumerate() {
        t.push_str(&format!("2/ρ(Q_{0}ᵀQ_{0}) = {1:.6}\n", k + 1, b));
    }
    for run in &r.runs {
        t.push_str(&format!(
            "{:?}: convergence tick {}, final max error {:e}\n",
            run.mode,
            run.convergence_tick
                .map_or("not reached".to_string(), |v| v.to_string()),
            run.final_errors.max()
        ));
    }
    t
}

/// File stem, title, axis label and the per-agent value plotted.
type Figure = (
    &'static str,
    &'static str,
    &'static str,
    fn(&sim::AgentRecord) -> f64,
);

/// Writes the worked example, its reports, traces, figure data and plots.
pub fn reproduce_paper(outdir: &Path, out: &mut dyn Write) -> CliResult<i32> {
    fs::create_dir_all(outdir).map_err(|e| CliError::io(outdir, e))?;
    let path = |name: &str| -> PathBuf { outdir.join(name) };
    let doc = ScenarioFile::reference();
    write_file(&path("scenario.json"), doc.to_json().as_bytes())?;

    let check = build_check_report(&doc)?;
    let spectra = spectra(&doc)?;
    let sc = doc.to_scenario(None, None)?;
    let h = topology::build_h(&sc.graph)?;
    let mu1_bound = topology::mu1_interval(&h)?.1;
    let mu3_bounds = check
        .intervals
        .as_ref()
        .map(|s| s.mu3_bounds.clone())
        .unwrap_or_default();

    let state_trace = sim::run(&sc)?;
    let mut of_doc = doc.clone();
    of_doc.sim.mode = ControlMode::OutputFeedback;
    let of_trace = sim::run(&of_doc.to_scenario(None, None)?)?;

    write_file(
        &path("trace_state_feedback.csv"),
        trace_csv::trace_to_string(&state_trace).as_bytes(),
    )?;
    write_file(
        &path("trace_output_feedback.csv"),
        trace_csv::trace_to_string(&of_trace).as_bytes(),
    )?;
    let figures: [Figure; 3] = [
        (
            "fig2_matrix_estimation",
            "Leader matrix estimation error",
            "‖S_i(t) − S‖",
            |a| a.err_s,
        ),
        (
            "fig3_state_estimation",
            "Leader state estimation error",
            "‖η_i(t) − v(t)‖",
            |a| a.err_eta,
        ),
        ("fig4_tracking", "Tracking error", "|e_i(t)|", |a| a.e[0]),
    ];
    for (stem, title, label, pick) in figures {
        write_file(
            &path(&format!("{stem}.csv")),
            series_csv(&state_trace, pick).as_bytes(),
        )?;
        let svg = plot::render(&[Panel {
            title: title.into(),
            y_label: label.into(),
            series: plot::agent_series(&state_trace, pick),
        }]);
        write_file(&path(&format!("{stem}.svg")), svg.as_bytes())?;
    }
    write_file(
        &path("errors_output_feedback.svg"),
        plot::error_chart(&of_trace).as_bytes(),
    )?;

    let leader_first_ticks = state_trace
        .ticks
        .iter()
        .take(9)
        .map(|r| (r.t, r.v.clone()))
        .collect();
    let rep = ReproductionReport {
        check,
        spectra,
        mu1_bound,
        mu3_bounds,
        leader_first_ticks,
        runs: vec![
            summary(&state_trace, ControlMode::StateFeedback),
            summary(&of_trace, ControlMode::OutputFeedback),
        ],
    };
    write_file(&path("report.json"), to_json(&rep).as_bytes())?;
    let text = reproduction_text(&rep);
    write_file(&path("report.txt"), text.as_bytes())?;
    emit(out, &text)?;
    let converged = rep
        .runs
        .iter()
        .all(|r| r.final_errors.max() < CONVERGENCE_THRESHOLD);
    debug_assert_eq!(scenarios::REFERENCE_FOLLOWERS, rep.spectra.qtq.len());
    Ok(if rep.check.all_passed && converged {
        0
    } else {
        1
    })
}
