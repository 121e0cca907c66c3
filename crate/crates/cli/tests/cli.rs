use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nbds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nbds"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_reports_census() {
    let dir = tempfile::tempdir().unwrap();
    for (model, expect) in [
        ("synapse", "NBDS=1 MULT=0 SPLITTER=1"),
        ("fhn", "NBDS=2 MULT=2"),
        ("astrocyte", "NBDS=2 MULT=3"),
    ] {
        let o = nbds(&["synth", "--model", model, "--out", p(dir.path())]);
        assert!(o.status.success(), "{model}");
        assert!(stdout(&o).starts_with(expect), "{}", stdout(&o));
        assert!(dir.path().join(format!("{model}.netlist.json")).exists());
        let dot = fs::read_to_string(dir.path().join(format!("{model}.dot"))).unwrap();
        assert!(dot.starts_with("digraph"));
    }
    let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"command\": \"synth\""));
}

#[test]
fn synapse_sim_matches_analytic_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = nbds(&[
        "sim", "--model", "synapse", "--mode", "ref", "--step", "1e-6", "--tend", "10e-3",
        "--input", "I_ext=step:0,1e-6", "--out", p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("synapse_ref.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t_s,s_A"));
    let row: Vec<f64> = lines
        .nth(1000)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((row[0] - 1e-3).abs() < 1e-15);
    assert!((row[1] - 0.632_120_558_8e-6).abs() < 1e-12);
}

#[test]
fn both_modes_agree_and_compare_reads_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = nbds(&[
        "sim", "--model", "fhn", "--mode", "both", "--dt", "1e-5", "--tend", "0.1", "--jobs",
        "2", "--out", p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["rel_rmse"].as_f64().unwrap() <= 1e-9);
    let (a, b) = (dir.path().join("fhn_ref.csv"), dir.path().join("fhn_netlist.csv"));
    let o = nbds(&["compare", p(&a), p(&b)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("rel_rmse="));
    let o = nbds(&["compare", p(&a), p(&a)]);
    assert!(stdout(&o).starts_with("rmse=0.000000e0 A"), "{}", stdout(&o));
}

#[test]
fn outputs_are_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let o = nbds(&[
            "sim", "--model", "astrocyte", "--mode", "netlist", "--dt", "1e-6", "--tend", "2e-3",
            "--out", p(dir.path()),
        ]);
        assert!(o.status.success());
        fs::read(dir.path().join("astrocyte_netlist.csv")).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn mismatched_grids_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    for (tend, sub) in [("1e-3", "a"), ("2e-3", "b")] {
        let out = dir.path().join(sub);
        let o = nbds(&["sim", "--model", "synapse", "--tend", tend, "--out", p(&out)]);
        assert!(o.status.success());
    }
    let o = nbds(&[
        "compare",
        p(&dir.path().join("a/synapse_ref.csv")),
        p(&dir.path().join("b/synapse_ref.csv")),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn bad_model_path_exits_2_naming_it() {
    let o = nbds(&["synth", "--model", "/nonexistent/model.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/model.json"));
}

#[test]
fn model_file_and_device_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("decay.json");
    fs::write(
        &model,
        r#"{"name": "decay", "states": [{"name": "x", "tau": 2, "rhs": "-x + k*u", "init": 1}],
            "inputs": ["u"], "params": {"k": 0.5}}"#,
    )
    .unwrap();
    let device = dir.path().join("device.json");
    fs::write(
        &device,
        r#"{"k_n": 1e-4, "k_p": 2.5e-5, "S": "auto", "policy": {"fixed_C": 1e-11}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = nbds(&[
        "synth", "--model", p(&model), "--device", p(&device), "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("NBDS=1 MULT=0"));
    assert!(out.join("decay.netlist.json").exists());

    fs::write(&device, r#"{"k_n": -1}"#).unwrap();
    let o = nbds(&["synth", "--model", p(&model), "--device", p(&device)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unsynthesizable_model_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("bad.json");
    fs::write(
        &model,
        r#"{"name": "bad", "states": [{"name": "x", "tau": 1, "rhs": "1/x", "init": 1}]}"#,
    )
    .unwrap();
    let o = nbds(&["synth", "--model", p(&model), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn blow_up_exits_5_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("blow.json");
    fs::write(
        &model,
        r#"{"name": "blow", "states": [{"name": "x", "tau": 1, "rhs": "x^3", "init": 10}]}"#,
    )
    .unwrap();
    let o = nbds(&[
        "sim", "--model", p(&model), "--dt", "1e-5", "--tend", "1e-3", "--out", p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(5));
    let csv = fs::read_to_string(dir.path().join("blow_ref.csv")).unwrap();
    assert!(csv.contains("# event,"));
    assert!(csv.contains("NonFiniteState"));
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(nbds(&["sim", "--model", "fhn", "--dt", "0"]).status.code(), Some(2));
    assert_eq!(
        nbds(&["sim", "--model", "fhn", "--input", "I_ext"]).status.code(),
        Some(2)
    );
    assert_eq!(
        nbds(&["sim", "--model", "fhn", "--input", "nope=1"]).status.code(),
        Some(2)
    );
    assert_eq!(nbds(&["synth", "--model", "hh"]).status.code(), Some(2));
}
