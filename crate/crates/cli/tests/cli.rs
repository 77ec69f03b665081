use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn casimac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casimac")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = casimac(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn synth(&self, name: &str, count: usize, seed: u64) -> PathBuf {
        let out = self.path(name);
        ok(&["synth", "--count", &count.to_string(), "--seed", &seed.to_string(), "--out", p(&out)]);
        out
    }

    /// Quadrant data relabeled by the sign of the first coordinate.
    fn binary(&self, name: &str, count: usize, seed: u64) -> PathBuf {
        let src = self.synth(&format!("{name}.src"), count, seed);
        let mut lines = vec!["x1,x2,label".to_owned()];
        for line in fs::read_to_string(src).unwrap().lines().filter(|l| !l.starts_with('#')).skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let side = if f[0].parse::<f64>().unwrap() >= 0.0 { "right" } else { "left" };
            lines.push(format!("{},{},{side}", f[0], f[1]));
        }
        let out = self.path(name);
        fs::write(&out, lines.join("\n") + "\n").unwrap();
        out
    }

    fn train(&self, data: &Path, name: &str, extra: &[&str]) -> PathBuf {
        let model = self.path(name);
        let mut args = vec!["train", "--data", p(data), "--seed", "3", "--restarts", "1", "--out", p(&model)];
        args.extend_from_slice(extra);
        ok(&args);
        model
    }
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(str::to_owned).collect()
}

#[test]
fn synth_writes_header_and_rows() {
    let w = Work::new();
    let data = w.synth("d.csv", 25, 1);
    let text = fs::read_to_string(&data).unwrap();
    assert!(text.starts_with(&format!("# casimac {}\n# seed 1\n", env!("CARGO_PKG_VERSION"))));
    let lines = data_lines(&data);
    assert_eq!(lines[0], "x1,x2,label");
    assert_eq!(lines.len(), 26);
}

#[test]
fn train_predict_round_trip_is_reproducible() {
    let w = Work::new();
    let train = w.synth("train.csv", 40, 1);
    let test = w.synth("test.csv", 30, 2);
    let model = w.train(&train, "m.json", &["--gamma", "0.5"]);
    let again = w.train(&train, "m2.json", &["--gamma", "0.5"]);
    assert_eq!(fs::read(&model).unwrap(), fs::read(&again).unwrap());

    let run = |name: &str| {
        let out = w.path(name);
        ok(&[
            "predict", "--model", p(&model), "--data", p(&test), "--label-col", "label", "--proba",
            "--mc-samples", "2000", "--seed", "9", "--out", p(&out),
        ]);
        out
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let lines = data_lines(&a);
    assert!(lines[0].starts_with("row,predicted,proba_"));
    assert_eq!(lines.len(), 31);
    for line in &lines[1..] {
        let sum: f64 = line.split(',').skip(2).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-12, "{line}");
    }
}

#[test]
fn binary_probabilities_do_not_depend_on_sample_count() {
    let w = Work::new();
    let train = w.binary("train.csv", 30, 4);
    let test = w.binary("test.csv", 20, 5);
    let model = w.train(&train, "m.json", &[]);
    let run = |name: &str, samples: &str, seed: &str| {
        let out = w.path(name);
        ok(&[
            "predict", "--model", p(&model), "--data", p(&test), "--label-col", "label", "--proba",
            "--mc-samples", samples, "--seed", seed, "--out", p(&out),
        ]);
        data_lines(&out)
    };
    assert_eq!(run("a.csv", "100", "1"), run("b.csv", "50000", "2"));
}

#[test]
fn evaluate_writes_report_with_metadata() {
    let w = Work::new();
    let train = w.synth("train.csv", 40, 1);
    let test = w.synth("test.csv", 200, 2);
    let model = w.train(&train, "m.json", &[]);
    let report = w.path("r.json");
    ok(&[
        "evaluate", "--model", p(&model), "--data", p(&test), "--mc-samples", "1000", "--seed", "4",
        "--top-k", "1,2,4", "--out", p(&report),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["seed"], 4);
    assert_eq!(doc["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["format_version"], 1);
    let r = &doc["report"];
    assert_eq!(r["samples"], 200);
    assert!(r["accuracy"].as_f64().unwrap() > 0.7);
    assert_eq!(r["top_k"]["4"], 1.0);
    let total: u64 = r["confusion"].as_array().unwrap().iter().flat_map(|row| row.as_array().unwrap()).map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 200);
}

#[test]
fn calibrate_binary_only() {
    let w = Work::new();
    let train = w.binary("train.csv", 30, 6);
    let test = w.binary("test.csv", 300, 7);
    let model = w.train(&train, "m.json", &[]);
    let out = w.path("cal.csv");
    ok(&["calibrate", "--model", p(&model), "--data", p(&test), "--positive", "right", "--out", p(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# positive right\n") && text.contains("# area_deviation "));
    let lines = data_lines(&out);
    assert_eq!(lines[0], "lower,upper,mean_predicted,true_fraction,count");
    let count: usize = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(count, 300);

    let multi = w.train(&w.synth("q.csv", 40, 1), "q.json", &[]);
    let res = casimac(&["calibrate", "--model", p(&multi), "--data", p(&test), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn tune_reports_best_candidate() {
    let w = Work::new();
    let train = w.synth("train.csv", 40, 1);
    let out = w.path("tune.json");
    ok(&[
        "tune", "--data", p(&train), "--gammas", "0,1", "--k-alphas", "1,40", "--k-betas", "1",
        "--folds", "3", "--mc-samples", "500", "--out", p(&out),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["scores"].as_array().unwrap().len(), 4);
    assert_eq!(doc["best"]["k_alpha"], 1);
    assert!(doc["scores"][1]["skipped"].is_string());
}

#[test]
fn viz_emits_plot_columns() {
    let w = Work::new();
    let train = w.synth("train.csv", 40, 1);
    let model = w.train(&train, "m.json", &[]);
    let out = w.path("viz.csv");
    ok(&["viz", "--model", p(&model), "--data", p(&train), "--label-col", "label", "--out", p(&out)]);
    let lines = data_lines(&out);
    assert!(lines[0].starts_with("row,latent_1,latent_2,latent_3,compressed_1,compressed_2,compressed_3,bary_"));
    assert!(lines[0].ends_with(",true,predicted"));
    assert_eq!(lines.len(), 41);

    ok(&["viz", "--model", p(&model), "--use-transform", "--out", p(&out)]);
    let lines = data_lines(&out);
    assert_eq!(lines.len(), 41);
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        let bary: Vec<f64> = f[7..11].iter().map(|v| v.parse().unwrap()).collect();
        assert!(bary.iter().all(|&b| b > 0.0 && b < 1.0));
        assert!((bary.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn exit_codes() {
    let w = Work::new();
    let train = w.synth("train.csv", 40, 1);
    let model = w.path("m.json");

    let missing = casimac(&["train", "--data", "/nonexistent/data.csv", "--out", p(&model)]);
    assert_eq!(missing.status.code(), Some(2));

    let too_many = casimac(&["train", "--data", p(&train), "--k-alpha", "50", "--out", p(&model)]);
    assert_eq!(too_many.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&too_many.stderr);
    assert!(msg.contains("transform:") && msg.contains("k_alpha <= c - 1"), "{msg}");

    let plugin = casimac(&["train", "--data", p(&train), "--metric", "plugin:nope", "--out", p(&model)]);
    assert_eq!(plugin.status.code(), Some(2));

    let usage = casimac(&["train", "--gamma", "0.5", "--alpha", "1", "--beta", "0", "--data", p(&train), "--out", p(&model)]);
    assert_eq!(usage.status.code(), Some(2));

    let bad = w.path("bad.csv");
    fs::write(&bad, "x1,x2,label\n0.1,oops,1\n0.2,0.3,2\n").unwrap();
    let parse = casimac(&["train", "--data", p(&bad), "--out", p(&model)]);
    assert_eq!(parse.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&parse.stderr).contains("x2"));
}
