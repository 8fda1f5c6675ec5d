use std::path::Path;
use std::process::Command;

use fmc_timewarp::config::ExperimentConfig;
use fmc_timewarp::data::FuelClass;
use fmc_timewarp::eval::{Filter, REPORT_HEADER};
use fmc_timewarp::nn::{RnnParams, TensorFile};
use fmc_timewarp::pipeline::{self, Selection};
use fmc_timewarp::transfer::TransferMethod;

const SMALL: &str = r#"
[synth]
n_days = 30
[split]
train_rows = 360
[model]
hidden = 4
[train]
max_epochs = 3
[run]
realizations = 2
"#;

fn config(out: &Path, extra: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml_str(&format!("{SMALL}{extra}")).unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

fn run_all(cfg: &ExperimentConfig) {
    pipeline::cmd_synth(cfg).unwrap();
    let prep = pipeline::load_dataset(cfg).unwrap();
    pipeline::pretrain(cfg, &prep).unwrap();
    pipeline::transfer(cfg, &Selection::default(), &prep).unwrap();
    assert_eq!(prep.splits.test_reads(), 0, "training steps read the test period");
    pipeline::evaluate(cfg, &Selection::default(), &prep).unwrap();
    assert!(prep.splits.test_reads() > 0);
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn load(path: impl AsRef<Path>) -> RnnParams {
    RnnParams::from_tensor_file(&TensorFile::read(path.as_ref()).unwrap()).unwrap()
}

#[test]
fn outputs_are_identical_across_job_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_all(&config(a.path(), "jobs = 1\n"));
    run_all(&config(b.path(), "jobs = 3\n"));
    for rel in [
        "dataset.csv",
        "pretrain/manifest.csv",
        "pretrain/r001.tensors",
        "transfer/time-warp/fm1/shifts.csv",
        "transfer/time-warp-fine-tune/fm100/r000.tensors",
        "reports/report.csv",
        "reports/realizations.csv",
        "reports/report.txt",
        "reports/acf_time-warp_fm1.csv",
    ] {
        assert_eq!(read(a.path().join(rel)), read(b.path().join(rel)), "{rel} differs");
    }
}

#[test]
fn layouts_and_report_contents() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    run_all(&cfg);
    let out = dir.path();

    let surface = read(out.join("transfer/time-warp/fm1/r000_surface.csv"));
    assert_eq!(surface.lines().next(), Some("alpha_f,alpha_i,rmse"));
    assert_eq!(surface.lines().count(), 1 + 626);
    assert_eq!(read(out.join("transfer/time-warp/fm1/shifts.csv")).lines().count(), 3);
    assert!(!out.join("transfer/full-fine-tune/fm1/shifts.csv").exists());
    assert!(out.join("transfer/full-fine-tune/fm1/r001_history.csv").exists());

    let report = read(out.join("reports/report.csv"));
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some(REPORT_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let expected: usize = FuelClass::ALL.iter().map(|&c| Filter::for_class(c).len()).sum::<usize>() * 6;
    assert_eq!(rows.len(), expected);
    assert!(rows.iter().all(|r| r.len() == 10));
    assert!(!rows.iter().any(|r| (r[1] == "FM100" || r[1] == "FM1000") && r[2] == "le30"));

    let realizations = read(out.join("reports/realizations.csv"));
    assert_eq!(realizations.lines().count(), 1 + expected * 2);
    let acf = read(out.join("reports/acf_no-transfer_fm10.csv"));
    assert_eq!(acf.lines().count(), 1 + 49);

    let table = pipeline::cmd_report(&cfg, &Selection::default()).unwrap();
    assert_eq!(table, read(out.join("reports/report.txt")));
    let narrowed = pipeline::cmd_report(
        &cfg,
        &Selection {
            methods: Some(vec![TransferMethod::TimeWarp]),
            classes: Some(vec![FuelClass::Fm1]),
            filter: Some(Filter::Le30),
        },
    )
    .unwrap();
    assert_eq!(narrowed.lines().count(), 2);
}

#[test]
fn time_warp_changes_only_gate_biases() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), "");
    cfg.arch.hidden_size = 64;
    cfg.realizations = 1;
    cfg.train.max_epochs = 1;
    cfg.methods = vec![TransferMethod::TimeWarp];
    cfg.target_classes = vec![FuelClass::Fm1];
    pipeline::cmd_synth(&cfg).unwrap();
    pipeline::cmd_pretrain(&cfg).unwrap();
    pipeline::cmd_transfer(&cfg, &Selection::default()).unwrap();
    let pre = load(dir.path().join("pretrain/r000.tensors"));
    let warped = load(dir.path().join("transfer/time-warp/fm1/r000.tensors"));
    assert_eq!(pre.param_count(), 22_337);
    let shift = read(dir.path().join("transfer/time-warp/fm1/shifts.csv"));
    let fields: Vec<f64> = shift.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    let nonzero = usize::from(fields[2] != 0.0) + usize::from(fields[3] != 0.0);
    assert_eq!(warped.count_differences(&pre), 64 * nonzero);
}

#[test]
fn selection_limits_transfer_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    pipeline::cmd_synth(&cfg).unwrap();
    pipeline::cmd_pretrain(&cfg).unwrap();
    let sel = Selection {
        methods: Some(vec![TransferMethod::FreezeDense]),
        classes: Some(vec![FuelClass::Fm100]),
        filter: None,
    };
    pipeline::cmd_transfer(&cfg, &sel).unwrap();
    let transfer = dir.path().join("transfer");
    assert!(transfer.join("freeze-dense/fm100/manifest.csv").exists());
    assert_eq!(std::fs::read_dir(&transfer).unwrap().count(), 1);
    let reports = pipeline::cmd_evaluate(&cfg, &sel).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].realizations.len(), 2);
}

#[test]
fn transfer_without_pretraining_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    pipeline::cmd_synth(&cfg).unwrap();
    let err = pipeline::cmd_transfer(&cfg, &Selection::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
    let only_fresh = Selection {
        methods: Some(vec![TransferMethod::NoTransfer]),
        ..Selection::default()
    };
    pipeline::cmd_transfer(&cfg, &only_fresh).unwrap();
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fmcwarp"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes_follow_error_category() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    assert_eq!(cli(&["pretrain", "--out", out]).status.code(), Some(2));
    assert_eq!(cli(&["evaluate", "--out", out, "--method", "warp-speed"]).status.code(), Some(2));

    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "[model]\nwidth = 3\n").unwrap();
    assert_eq!(cli(&["synth", "--config", bad_cfg.to_str().unwrap()]).status.code(), Some(2));

    let csv = dir.path().join("broken.csv");
    std::fs::write(&csv, "timestamp,nonsense\n1,2\n").unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, format!("[data]\npath = {:?}\n", csv.to_str().unwrap())).unwrap();
    assert_eq!(cli(&["pretrain", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));

    let small = dir.path().join("small.toml");
    std::fs::write(&small, SMALL).unwrap();
    let s = small.to_str().unwrap();
    let synth = cli(&["synth", "--config", s, "--out", out, "--seed", "4"]);
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    assert!(read(dir.path().join("dataset.csv")).lines().count() == 1 + 30 * 24);
    assert!(cli(&["pretrain", "--config", s, "--out", out, "--jobs", "2"]).status.success());
    let run = cli(&["transfer", "--config", s, "--out", out, "--method", "time-warp", "--class", "fm1"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let eval = cli(&["evaluate", "--config", s, "--out", out, "--method", "time-warp", "--filter", "all"]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let table = String::from_utf8(eval.stdout).unwrap();
    assert_eq!(table.lines().count(), 2, "{table}");
    let resolved = read(dir.path().join("config.resolved.toml"));
    assert!(ExperimentConfig::from_toml_str(&resolved).is_ok());
}
