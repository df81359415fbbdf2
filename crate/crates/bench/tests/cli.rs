use std::path::Path;
use std::process::{Command, Output};

use fda_hybrid_bench::emit::ResultFile;
use fda_hybrid_bench::study::MseRow;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fda-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
    "n": 40,
    "alphas": [1.1, 2.0],
    "methods": ["ST", "TR", "HR"],
    "selection": ["kfold", "oracle_best"],
    "replications": 12,
    "folds": 5
}"#;

#[test]
fn mc_bench_output_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("mse-{workers}.csv"));
        let o = bench(&[
            "--config", &cfg, "--seed", "9", "--workers", workers, "--out", out.to_str().unwrap(), "mc-bench",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.starts_with("beta,alpha,method,selection,mean_mse,mc_se,mean_r,mean_rho\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 2);
}

#[test]
fn json_output_and_replication_dump_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("mse.json");
    let dump = dir.path().join("reps.csv");
    let o = bench(&[
        "--config",
        &cfg,
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
        "--dump-replications",
        dump.to_str().unwrap(),
        "mc-bench",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let file: ResultFile<MseRow> = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(file.metadata.command, "mc-bench");
    assert_eq!(file.metadata.config["replications"], 12);

    // the dump was written as JSON too, since the format applies to both
    let dumped: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    let reps = dumped["rows"].as_array().unwrap();
    for row in &file.rows {
        let mses: Vec<f64> = reps
            .iter()
            .filter(|r| {
                r["beta"] == row.beta.as_str()
                    && r["alpha"].as_f64() == Some(row.alpha)
                    && r["method"] == row.method.label()
                    && r["selection"] == row.selection.label()
            })
            .map(|r| r["mse"].as_f64().unwrap())
            .collect();
        assert_eq!(mses.len(), 12);
        let mean = mses.iter().sum::<f64>() / 12.0;
        assert!((mean - row.mean_mse).abs() <= 1e-12 * row.mean_mse.max(1.0));
    }
}

#[test]
fn simulate_then_fit_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let o = bench(&["--seed", "4", "--out", data.to_str().unwrap(), "simulate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&data).unwrap().starts_with("t:0.01,"));

    let slope = dir.path().join("slope.csv");
    let o = bench(&[
        "--out",
        slope.to_str().unwrap(),
        "fit",
        "--method",
        "HR",
        "--selection",
        "gcv",
        "--data",
        data.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&slope).unwrap();
    assert_eq!(text.lines().next(), Some("t,beta"));
    assert_eq!(text.lines().count(), 51);

    let pred = dir.path().join("pred.csv");
    let o = bench(&[
        "--out",
        pred.to_str().unwrap(),
        "predict-split",
        "--data",
        data.to_str().unwrap(),
        "--splits",
        "20",
        "--train-frac",
        "0.7",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&pred).unwrap();
    assert_eq!(text.lines().next(), Some("method,selection,mean_error,se,splits"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn rho_sweep_emits_every_grid_point() {
    let o = bench(&["--reps", "5", "rho-sweep", "--r-values", "0,2", "--rho-grid", "0.01,0.1,1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    assert_eq!(text.lines().filter(|l| l.contains(",true,true")).count(), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let bad = write_config(dir.path(), r#"{"replications": 0}"#);
    assert_eq!(bench(&["--config", &bad, "mc-bench"]).status.code(), Some(2));
    let unknown = write_config(dir.path(), r#"{"methods": ["XX"]}"#);
    assert_eq!(bench(&["--config", &unknown, "mc-bench"]).status.code(), Some(2));
    assert_eq!(bench(&["--config", "/nonexistent.json", "mc-bench"]).status.code(), Some(2));

    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "1,0,0,0\n2,1,1\n3,2,2,2\n").unwrap();
    let o = bench(&["predict-split", "--data", ragged.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":2:"));

    // a fixed rank above what 5 observations support fails every replication
    let starved = write_config(
        dir.path(),
        r#"{"n": 5, "methods": ["ST"], "selection": ["fixed"], "fixed_r": 10, "replications": 3}"#,
    );
    assert_eq!(bench(&["--config", &starved, "mc-bench"]).status.code(), Some(4));
}
