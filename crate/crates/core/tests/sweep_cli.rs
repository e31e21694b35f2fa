use std::path::Path;
use std::process::Command;

use photocorr::config::{load_config, RunConfig, TaskKind};
use photocorr::output::{read_csv, write_result, RUN_LINE_PREFIX};
use photocorr::presets::PRESETS;
use photocorr::sweep::{run_sweep, run_sweep_with, SweepOptions};

const BIN: &str = env!("CARGO_BIN_EXE_photocorr");

fn small_map() -> RunConfig {
    RunConfig::from_toml_str(
        "[task]\nkind = \"g2map\"\n[grid]\nomega1 = { min = -40.0, max = 40.0, points = 9 }\n[output]\ntimestamp = false\ncheckpoint_every = 10\n[parallelism]\nworkers = 2\n",
        &[],
        "mem",
    )
    .unwrap()
}

#[test]
fn resumed_sweep_equals_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("run.ckpt");
    let cfg = small_map();
    let full = run_sweep(&cfg).unwrap();
    assert_eq!(full.rows.len(), 81);

    let opts = SweepOptions {
        checkpoint: Some(cp.clone()),
        stop_after: Some(40),
        ..Default::default()
    };
    let half = run_sweep_with(&cfg, &opts).unwrap();
    assert!(!half.complete);
    assert_eq!(half.rows.len(), 40);

    let resumed = run_sweep_with(
        &cfg,
        &SweepOptions {
            resume: Some(cp),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(resumed.complete);
    assert_eq!(resumed.rows, full.rows);
}

#[test]
fn resume_rejects_a_different_config() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("run.ckpt");
    let cfg = small_map();
    run_sweep_with(
        &cfg,
        &SweepOptions {
            checkpoint: Some(cp.clone()),
            stop_after: Some(10),
            ..Default::default()
        },
    )
    .unwrap();
    let mut other = cfg.clone();
    other.emitter.rabi = 20.0;
    let e = run_sweep_with(
        &other,
        &SweepOptions {
            resume: Some(cp),
            ..Default::default()
        },
    )
    .unwrap_err();
    assert!(e.to_string().contains("different configuration"), "{e}");
}

#[test]
fn worker_count_does_not_change_results() {
    let mut one = small_map();
    one.parallelism.workers = 1;
    let mut three = small_map();
    three.parallelism.workers = 3;
    assert_eq!(run_sweep(&one).unwrap().rows, run_sweep(&three).unwrap().rows);
}

#[test]
fn spectrum_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    let cfg = RunConfig::from_toml_str(
        "[task]\nkind = \"spectrum\"\n[grid]\nomega1 = { min = -70.0, max = 70.0, points = 57 }\n",
        &[],
        "mem",
    )
    .unwrap();
    let t = run_sweep(&cfg).unwrap();
    write_result(&t, &p, cfg.output.format).unwrap();
    let back = read_csv(&p).unwrap();
    assert_eq!(back.columns, t.columns);
    assert_eq!(back.rows, t.rows);
    assert!(back.header_lines.iter().any(|l| l == "# config: epsilon = 0.0001"));
    assert!(back.header_lines.iter().any(|l| l == "# config: kr12 = 0.05"));
}

#[test]
fn dressed_task_values() {
    let cfg = RunConfig::from_toml_str("[task]\nkind = \"dressed\"\n", &[], "mem").unwrap();
    let t = run_sweep(&cfg).unwrap();
    assert_eq!(t.task, TaskKind::Dressed);
    let c = cfg.emitter.effective_coefficients().unwrap();
    assert_eq!(t.column("delta12").unwrap()[0], c.delta12);
    assert_eq!(t.column("gamma12").unwrap()[0], c.gamma12);
}

#[test]
fn preset_files_match_embedded_copies() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    for p in PRESETS {
        let path = root.join(format!("{}.toml", p.name));
        let from_file = load_config(&path, &[]).unwrap();
        let embedded = RunConfig::from_toml_str(p.toml, &[], p.name).unwrap();
        assert_eq!(from_file, embedded, "{}", p.name);
    }
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let (code, _, err) = run(&[
            "run",
            "fig1b",
            "--set",
            "grid.omega1={min=-70.0,max=70.0,points=41}",
            "--no-timestamp",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn cli_timestamp_line_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "run".to_string(),
            "fig1b".into(),
            "--set".into(),
            "grid.omega1={min=-70.0,max=70.0,points=11}".into(),
            "--out".into(),
            p.to_str().unwrap().to_string(),
        ]
    };
    for p in [&a, &b] {
        let argv = args(p);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        assert_eq!(run(&argv).0, 0);
    }
    let strip = |p: &Path| -> String {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with(RUN_LINE_PREFIX))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
    assert!(std::fs::read_to_string(&a).unwrap().contains(RUN_LINE_PREFIX));
}

#[test]
fn cli_exit_codes() {
    let (code, _, err) = run(&["validate", "fig1b", "--set", "emitter.kr12=-1"]);
    assert_eq!(code, 1);
    assert!(err.contains("emitter.kr12"), "{err}");

    let (code, _, err) = run(&["validate", "fig1b", "--set", "emitter.bogus=1"]);
    assert_eq!(code, 1);
    assert!(err.contains("bogus"), "{err}");

    let (code, out, _) = run(&["validate", "fig2c"]);
    assert_eq!(code, 0);
    assert!(out.contains("linewidth = 5.0"));

    let (code, _, _) = run(&[
        "run",
        "mollow-single-atom",
        "--set",
        "emitter.rabi=0.0",
        "--no-timestamp",
    ]);
    assert_eq!(code, 2);

    // Sensors far beyond the spectrum at tiny ε: vanishing populations get flagged.
    let (code, out, _) = run(&[
        "run",
        "fig2a",
        "--set",
        "sensors.epsilon=1e-9",
        "--set",
        "emitter.atoms=1",
        "--set",
        "emitter.rabi=1.0",
        "--set",
        "grid.omega1={min=0.0,max=1000.0,points=2}",
        "--no-timestamp",
    ]);
    assert_eq!(code, 3);
    assert!(out.contains("undefined-correlation"));

    let (code, out, _) = run(&["presets", "list"]);
    assert_eq!(code, 0);
    for p in PRESETS {
        assert!(out.contains(p.name));
    }
}

#[test]
fn cli_json_output() {
    let (code, out, err) = run(&["run", "fig2c", "--format", "json", "--set", "tau.points=5", "--no-timestamp"]);
    assert_eq!(code, 0, "{err}");
    let j: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(j["format"], "photocorr-table/1");
    assert_eq!(j["columns"][1], "g2");
    assert_eq!(j["rows"].as_array().unwrap().len(), 5);
    assert!(j.get("run").is_none());
}
