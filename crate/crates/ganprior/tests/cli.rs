//! End-to-end runs of the `ganprior` binary.

use std::path::Path;
use std::process::{Command, Output};

use ganprior::report::CSV_HEADER;

const BIN: &str = env!("CARGO_BIN_EXE_ganprior");

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove(ganprior::THREADS_ENV);
    if let Some(t) = threads {
        cmd.env(ganprior::THREADS_ENV, t);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const SMALL_NET: [&str; 8] = ["--k", "4", "--hidden", "10", "--n", "16", "--net-seed", "3"];

fn write_config(dir: &Path) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(
        &path,
        r#"{
            "generator_source": {"synthetic": {"k": 4, "hidden_dims": [10], "n": 16, "seed": 3}},
            "measurement_counts": [6, 12],
            "trials_per_m": 3,
            "master_seed": 5,
            "pgd_gan": {"eta": 0.5, "outer_iters": 4, "eta_in": 0.02, "inner_iters": 10},
            "record_wall_clock": false
        }"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn recover_prints_a_json_summary() {
    let mut args = vec!["recover", "--m", "12", "--random-start", "-T", "5", "--inner-iters", "20", "--eta-in", "0.02"];
    args.extend(SMALL_NET);
    let out = run(&args, None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["loss_trace"].as_array().unwrap().len(), 6);
    assert_eq!(v["updates_used"], 100);

    for alg in ["latent_gd", "ista-lasso"] {
        let mut a = args.clone();
        a.extend(["--algorithm", alg]);
        assert_eq!(code(&run(&a, None)), 0, "{alg}");
    }
}

#[test]
fn recover_divergence_exits_2() {
    let mut args = vec!["recover", "--m", "8", "--eta", "1e300", "-T", "5", "--inner-iters", "2", "--random-start"];
    args.extend(SMALL_NET);
    let out = run(&args, None);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("partial trace"));
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["sweep", "--config", "/nonexistent.json"], None)), 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"measurement_counts\": []}").unwrap();
    assert_eq!(code(&run(&["sweep", "--config", bad.to_str().unwrap()], None)), 1);
    assert_eq!(code(&run(&["recover", "--no-such-flag"], None)), 1);
    assert_eq!(code(&run(&["recover", "--m", "0"], None)), 1);
    let cfg = write_config(dir.path());
    assert_eq!(code(&run(&["sweep", "--config", &cfg], Some("zero"))), 1);
    assert_eq!(code(&run(&["sweep", "--config", &cfg], Some("0"))), 1);
    assert_eq!(code(&run(&["--help"], None)), 0);
}

#[test]
fn sweep_csv_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let one = run(&["sweep", "--config", &cfg], Some("1"));
    let four = run(&["sweep", "--config", &cfg], Some("4"));
    let default = run(&["sweep", "--config", &cfg], None);
    assert_eq!(code(&one), 0, "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, default.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 2 * 3 * 3);
}

#[test]
fn sweep_writes_files_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let csv = dir.path().join("out.csv");
    let traces = dir.path().join("traces.jsonl");
    let out = run(
        &[
            "sweep",
            "--config",
            &cfg,
            "--out",
            csv.to_str().unwrap(),
            "--traces",
            traces.to_str().unwrap(),
            "--summary",
            "--algorithms",
            "pgd_gan,latent_gd",
            "--measurements",
            "8",
            "--trials",
            "2",
        ],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let records = ganprior::parse_csv(&std::fs::read(&csv).unwrap()).unwrap();
    assert_eq!(records.len(), 4);
    let trace_lines = std::fs::read_to_string(&traces).unwrap();
    assert_eq!(trace_lines.lines().count(), 4);
    let first: serde_json::Value = serde_json::from_str(trace_lines.lines().next().unwrap()).unwrap();
    assert!(!first["loss_trace"].as_array().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("pgd_gan"));
}

#[test]
fn theory_report_is_flat_json() {
    let mut args = vec!["theory", "--m", "12", "--pairs", "200", "--power-iters", "200", "-T", "10", "--inner-iters", "20"];
    args.extend(SMALL_NET);
    let out = run(&args, None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    for key in ["gamma_hat", "ratio_histogram", "rho_hat", "eta_interval", "rho_condition_met", "alpha_hat"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v["gamma_hat"].as_f64().unwrap() > 0.0);
    assert_eq!(v["ratio_histogram"]["count"], 200);
}

#[test]
fn gen_then_project_and_corrupted_files() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.gpw");
    let mut args = vec!["gen", "-o", net.to_str().unwrap()];
    args.extend(SMALL_NET);
    assert_eq!(code(&run(&args, None)), 0);
    let bytes = std::fs::read(&net).unwrap();
    assert_eq!(&bytes[..4], b"GPW1");

    let w = dir.path().join("w.txt");
    std::fs::write(&w, vec!["0.1"; 16].join(" ")).unwrap();
    let out = run(&["project", "--generator", net.to_str().unwrap(), "--w", w.to_str().unwrap()], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["inner_loss"].as_f64().unwrap() <= v["start_loss"].as_f64().unwrap());

    let corrupt = dir.path().join("corrupt.gpw");
    std::fs::write(&corrupt, &bytes[..bytes.len() - 3]).unwrap();
    let out = run(&["recover", "--generator", corrupt.to_str().unwrap(), "--m", "4"], None);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncated"), "{}", String::from_utf8_lossy(&out.stderr));
}
