//! Assumption, gain and reproduction reports in JSON and plain text.

use std::fmt::Write;

use coreg_core::gains::{self, Gains};
use coreg_core::systems::{self, AssumptionCheck};
use coreg_core::{ControlMode, Matrix};
use serde::Serialize;

use crate::scenario_file::Model;

#[derive(Debug, Clone, Serialize)]
pub struct GainSummary {
    pub mu1_interval: (f64, f64),
    pub mu2_formula_interval: Option<(f64, f64)>,
    pub mu2_formula_error: Option<String>,
    pub mu2_certified_interval: Option<(f64, f64)>,
    pub mu3_bounds: Vec<f64>,
    pub defaults: GainValues,
}

/// Gains as plain nested arrays.
#[derive(Debug, Clone, Serialize)]
pub struct GainValues {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: Vec<f64>,
    #[serde(rename = "Kx")]
    pub k_x: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "L")]
    pub l: Vec<Option<Vec<Vec<f64>>>>,
}

impl From<&Gains> for GainValues {
    fn from(g: &Gains) -> Self {
        Self {
            mu1: g.mu1,
            mu2: g.mu2,
            mu3: g.mu3.clone(),
            k_x: g.k_x.iter().map(Matrix::to_rows).collect(),
            l: g.l
                .iter()
                .map(|l| l.as_ref().map(Matrix::to_rows))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub all_passed: bool,
    pub assumptions: Vec<AssumptionCheck>,
    /// Gains the scenario would run with.
    pub gains: Option<GainValues>,
    pub intervals: Option<GainSummary>,
    /// Why gains or intervals could not be computed.
    pub gain_error: Option<String>,
}

pub fn gain_summary(model: &Model, mode: ControlMode) -> coreg_core::Result<GainSummary> {
    let rep = gains::gain_report(
        &model.leader,
        &model.plants,
        &model.graph,
        mode == ControlMode::OutputFeedback,
    )?;
    let (formula, formula_err) = match rep.mu2_formula {
        Ok(iv) => (Some(iv), None),
        Err(e) => (None, Some(e)),
    };
    Ok(GainSummary {
        mu1_interval: rep.mu1_interval,
        mu2_formula_interval: formula,
        mu2_formula_error: formula_err,
        mu2_certified_interval: rep.mu2_certified,
        mu3_bounds: rep.mu3_bounds,
        defaults: GainValues::from(&rep.defaults),
    })
}

/// Runs every assumption check; gains that cannot be resolved are reported
/// and checked as absent.
pub fn check_report(model: &Model, gains: Result<Gains, String>, mode: ControlMode) -> CheckReport {
    let (gain_values, mut gain_error) = match &gains {
        Ok(g) => (Some(GainValues::from(g)), None),
        Err(e) => (None, Some(e.clone())),
    };
    let report = systems::check_assumptions(
        &model.leader,
        &model.plants,
        &model.graph,
        gains.as_ref().ok(),
    );
    let intervals = match gain_summary(model, mode) {
        Ok(s) => Some(s),
        Err(e) => {
            gain_error.get_or_insert_with(|| e.to_string());
            None
        }
    };
    CheckReport {
        all_passed: report.all_passed(),
        assumptions: report.checks,
        gains: gain_values,
        intervals,
        gain_error,
    }
}

fn interval(iv: (f64, f64)) -> String {
    format!("({:.6}, {:.6})", iv.0, iv.1)
}

pub fn gain_summary_text(out: &mut String, s: &GainSummary) {
    let _ = writeln!(out, "mu1 interval: {}", interval(s.mu1_interval));
    match (&s.mu2_formula_interval, &s.mu2_formula_error) {
        (Some(iv), _) => {
            let _ = writeln!(out, "mu2 interval (closed form): {}", interval(*iv));
        }
        (None, Some(e)) => {
            let _ = writeln!(out, "mu2 interval (closed form): unavailable, {e}");
        }
        _ => {}
    }
    match s.mu2_certified_interval {
        Some(iv) => {
            let _ = writeln!(
                out,
                "mu2 interval (certified by bisection): {}",
                interval(iv)
            );
        }
        None => {
            let _ = writeln!(out, "mu2 interval (certified by bisection): empty");
        }
    }
    for (k, b) in s.mu3_bounds.iter().enumerate() {
        let _ = writeln!(out, "mu3 bound, agent {}: (0, {b:.6})", k + 1);
    }
    let d = &s.defaults;
    let _ = writeln!(
        out,
        "automatic choice: mu1 = {:.6}, mu2 = {:.6}, mu3 = {:?}",
        d.mu1, d.mu2, d.mu3
    );
}

pub fn check_text(r: &CheckReport) -> String {
    let mut out = String::new();
    for c in &r.assumptions {
        let _ = writeln!(
            out,
            "assumption {} ({}): {}",
            c.id,
            c.name,
            if c.passed { "pass" } else { "FAIL" }
        );
        for d in &c.details {
            let _ = writeln!(out, "    {d}");
        }
    }
    if let Some(s) = &r.intervals {
        gain_summary_text(&mut out, s);
    }
    if let Some(e) = &r.gain_error {
        let _ = writeln!(out, "gains: {e}");
    }
    let _ = writeln!(
        out,
        "result: {}",
        if r.all_passed {
            "all checks passed"
        } else {
            "checks failed"
        }
    );
    out
}
