use std::path::Path;
use std::process::{Command, Output};

use coreg_cli::trace_csv;
use coreg_cli::ScenarioFile;
use coreg_core::{sim, systems};

fn coreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_doc(dir: &Path, name: &str, doc: &ScenarioFile) -> String {
    let path = dir.join(name);
    std::fs::write(&path, doc.to_json()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn reference_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_doc(dir.path(), "ref.json", &ScenarioFile::reference());
    let report = dir.path().join("report.json");
    let out = coreg(&["check", &path, "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["all_passed"], true);
}

#[test]
fn missing_spanning_tree_exits_one_naming_assumption_six() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = ScenarioFile::reference();
    // cut the only leader edge
    doc.graph.adjacency[1][0] = 0.0;
    let path = write_doc(dir.path(), "cut.json", &doc);
    let out = coreg(&["check", &path]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(
        text.lines()
            .any(|l| l.starts_with("assumption 6") && l.ends_with("FAIL")),
        "{text}"
    );
}

#[test]
fn wrong_dimension_exits_two_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = ScenarioFile::reference();
    doc.followers[2].B = vec![vec![0.0], vec![1.0], vec![0.0]];
    let path = write_doc(dir.path(), "dims.json", &doc);
    for cmd in ["check", "gains"] {
        let out = coreg(&[cmd, &path]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(stderr(&out).contains("followers[2].B"), "{}", stderr(&out));
    }
}

#[test]
fn malformed_json_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"leader\": [1, 2,\n").unwrap();
    let out = coreg(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.json:"), "{}", stderr(&out));
}

#[test]
fn unknown_field_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut json: serde_json::Value =
        serde_json::from_str(&ScenarioFile::reference().to_json()).unwrap();
    json["sim"]["horizn"] = 5.into();
    let path = dir.path().join("typo.json");
    std::fs::write(&path, json.to_string()).unwrap();
    let out = coreg(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("horizn"));
}

#[test]
fn missing_file_is_an_io_error() {
    let out = coreg(&["check", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unwritable_trace_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_doc(dir.path(), "ref.json", &ScenarioFile::reference());
    let target = dir.path().join("no/such/dir/trace.csv");
    let out = coreg(&[
        "simulate",
        &path,
        "--out",
        target.to_str().unwrap(),
        "--horizon",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_refuses_failing_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = ScenarioFile::reference();
    doc.graph.adjacency[1][0] = 0.0;
    let path = write_doc(dir.path(), "cut.json", &doc);
    let target = dir.path().join("trace.csv");
    let out = coreg(&["simulate", &path, "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(!target.exists());
}

#[test]
fn gains_prints_intervals_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_doc(dir.path(), "ref.json", &ScenarioFile::reference());
    let out = coreg(&["gains", &path]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let upper = json["mu1_interval"][1].as_f64().unwrap();
    assert!((upper - 0.778).abs() < 1e-3);
}

#[test]
fn unsolvable_regulator_fails_gains() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = ScenarioFile::reference();
    // B = 0 and D = 0 leave the input without influence on e
    doc.followers[0].B = vec![vec![0.0], vec![0.0]];
    let path = write_doc(dir.path(), "nob.json", &doc);
    let out = coreg(&["gains", &path]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn simulated_csv_round_trips_losslessly() {
    let dir = tempfile::tempdir().unwrap();
    let doc = ScenarioFile::reference();
    let path = write_doc(dir.path(), "ref.json", &doc);
    let csv_path = dir.path().join("trace.csv");
    let svg_path = dir.path().join("trace.svg");
    let out = coreg(&[
        "simulate",
        &path,
        "--out",
        csv_path.to_str().unwrap(),
        "--plot",
        svg_path.to_str().unwrap(),
        "--horizon",
        "120",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let parsed = trace_csv::read_trace(text.as_bytes()).unwrap();
    let expected = sim::run(&doc.to_scenario(Some(120), None).unwrap()).unwrap();
    assert_eq!(parsed, expected);
    assert_eq!(trace_csv::trace_to_string(&parsed), text);
    assert!(std::fs::read_to_string(svg_path)
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn json_trace_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_doc(dir.path(), "ref.json", &ScenarioFile::reference());
    let target = dir.path().join("trace.json");
    let out = coreg(&[
        "simulate",
        &path,
        "--out",
        target.to_str().unwrap(),
        "--format",
        "json",
        "--horizon",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let trace: sim::SimTrace =
        serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(trace.horizon(), 10);
}

#[test]
fn check_exit_code_agrees_with_core_checks() {
    let dir = tempfile::tempdir().unwrap();
    let base = ScenarioFile::reference();
    let mut variants = vec![base.clone()];
    let mut unstable_leader = base.clone();
    unstable_leader.leader.s[0][0] *= 1.5;
    variants.push(unstable_leader);
    let mut undetectable = base.clone();
    undetectable.followers[1].A = vec![vec![1.2, 1.0], vec![0.0, 0.0]];
    undetectable.followers[1].Cm = vec![vec![0.0, 1.0]];
    variants.push(undetectable);
    let mut cut = base.clone();
    cut.graph.adjacency[3][2] = 0.0;
    cut.graph.adjacency[3][4] = 0.0;
    variants.push(cut);
    let mut out_of_range = base;
    out_of_range.gains.mu1 = Some(0.9);
    variants.push(out_of_range);

    for (k, doc) in variants.iter().enumerate() {
        let path = write_doc(dir.path(), &format!("v{k}.json"), doc);
        let model = doc.model().unwrap();
        let gains = doc.resolve_gains(&model, doc.sim.mode).ok();
        let core =
            systems::check_assumptions(&model.leader, &model.plants, &model.graph, gains.as_ref());
        let out = coreg(&["check", &path]);
        let expected = if core.all_passed() && gains.is_some() {
            0
        } else {
            1
        };
        assert_eq!(
            out.status.code(),
            Some(expected),
            "variant {k}: {}",
            stdout(&out)
        );
    }
}

#[test]
fn reproduce_paper_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = coreg(&["reproduce-paper", "--outdir", d.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 10);
    for name in names {
        let left = std::fs::read(a.path().join(&name)).unwrap();
        let right = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(left, right, "{name:?}");
    }
}
