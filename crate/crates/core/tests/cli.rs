use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn act(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_act"))
        .args(args)
        .output()
        .unwrap()
}

fn act_ok(args: &[&str]) -> String {
    let out = act(args);
    assert!(
        out.status.success(),
        "act {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn floats(text: &str) -> Vec<f64> {
    serde_json::from_str(text).unwrap()
}

fn csv_matrix(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn random_values(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

#[test]
fn transform_of_zeros_and_ones() {
    let dir = TempDir::new().unwrap();
    let zeros = write(&dir, "z.json", &serde_json::to_string(&[0.0; 10]).unwrap());
    let out = floats(&act_ok(&["transform", p(&zeros), "--mode", "mertens"]));
    assert_eq!(out, vec![0.0; 8]);

    let ones = write(&dir, "o.json", "[1,1,1,1,1,1,1,1,1,1]");
    let out = floats(&act_ok(&["transform", p(&ones), "--mode", "mertens"]));
    assert_eq!(out.len(), 8);
    assert!((out[0] - 8f64.sqrt()).abs() < 1e-12);
    assert!(out[1..].iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn transform_modes_agree_from_uniform() {
    let dir = TempDir::new().unwrap();
    let mut v = random_values(11, 8);
    let mean = v.iter().sum::<f64>() / 8.0;
    v.iter_mut().for_each(|x| *x -= mean);
    let path = write(&dir, "u.json", &serde_json::to_string(&v).unwrap());
    let run = |mode| {
        floats(&act_ok(&[
            "transform",
            p(&path),
            "--mode",
            mode,
            "--from-uniform",
        ]))
    };
    let null_mean = run("null-mean");
    let mertens = run("mertens");
    let factorized = run("factorized");
    assert_eq!(null_mean.len(), 7);
    assert_eq!(factorized.len(), 7);
    assert_eq!(mertens.len(), 8);
    for k in 0..7 {
        assert!((null_mean[k] - mertens[k + 1]).abs() < 1e-9);
        assert!((factorized[k] - mertens[k + 1]).abs() < 1e-9);
    }
}

#[test]
fn transform_errors() {
    let dir = TempDir::new().unwrap();
    let short = write(&dir, "s.json", "[1,2,3]");
    assert_eq!(act(&["transform", p(&short)]).status.code(), Some(3));
    let eight = write(&dir, "e.json", "[1,2,3,4,5,6,7,8]");
    assert_eq!(act(&["transform", p(&eight)]).status.code(), Some(3));
    let bad = write(&dir, "b.json", "[1,2,");
    let out = act(&["transform", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
    assert_eq!(
        act(&["transform", "/nonexistent/file.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn embedded_grid_is_checked() {
    let dir = TempDir::new().unwrap();
    let grid: Value = serde_json::from_str(&act_ok(&["grid"])).unwrap();
    let samples = random_values(5, 10);
    let good = serde_json::json!({"grid": grid["points"], "samples": samples});
    let good_path = write(&dir, "g.json", &good.to_string());
    let bare_path = write(&dir, "b.json", &serde_json::to_string(&samples).unwrap());
    assert_eq!(
        act_ok(&["transform", p(&good_path)]),
        act_ok(&["transform", p(&bare_path)])
    );

    let mut wrong = good.clone();
    wrong["grid"][1]["numerator"] = Value::from(26);
    let wrong_path = write(&dir, "w.json", &wrong.to_string());
    assert_eq!(act(&["transform", p(&wrong_path)]).status.code(), Some(2));
}

#[test]
fn matrices() {
    let weights = csv_matrix(&act_ok(&["matrices", "mean-weights"]));
    assert_eq!(weights.len(), 1);
    assert!((weights[0][1] - 0.498388117552161).abs() < 1e-12);

    let s = act_ok(&["matrices", "S", "--exact"]);
    assert_eq!(s.lines().last().unwrap(), "1,2,0,0,0,2,0,0,2,0");
    let me = act_ok(&["matrices", "Me", "--exact"]);
    let me_rows: Vec<&str> = me.lines().collect();
    assert_eq!(me_rows.len(), 7);
    assert_eq!(me_rows[0].split(',').count(), 8);
    assert!(me_rows[3].starts_with("-1/4,"));

    let w = csv_matrix(&act_ok(&["matrices", "W"]));
    let wp = csv_matrix(&act_ok(&["matrices", "Wplus"]));
    assert_eq!((w.len(), w[0].len()), (10, 8));
    for (i, row) in wp.iter().enumerate() {
        for j in 0..8 {
            let dot: f64 = row.iter().zip(&w).map(|(a, w_row)| a * w_row[j]).sum();
            assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }
    assert_eq!(csv_matrix(&act_ok(&["matrices", "T"])).len(), 7);
    assert_eq!(
        act(&["matrices", "Wplus", "--exact"]).status.code(),
        Some(2)
    );
    assert_eq!(act(&["matrices", "X"]).status.code(), Some(2));
}

#[test]
fn simulate_matches_transform() {
    let dir = TempDir::new().unwrap();
    let samples = random_values(9, 10);
    let input = write(&dir, "x.json", &serde_json::to_string(&samples).unwrap());
    let reference = floats(&act_ok(&["transform", p(&input), "--mode", "mertens"]));
    let out: Value = serde_json::from_str(&act_ok(&[
        "simulate",
        "--arch",
        "II",
        "--l",
        "32",
        "--input",
        p(&input),
    ]))
    .unwrap();
    let outputs = out["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 8);
    for o in outputs {
        let k = o["index"].as_u64().unwrap() as usize;
        assert!((o["value"].as_f64().unwrap() - reference[k]).abs() < 1e-6);
        assert!(o["raw"].is_i64());
    }
    assert!(out.get("trace").is_none());

    let zeros = write(&dir, "z.json", &serde_json::to_string(&[0.0; 10]).unwrap());
    let out: Value = serde_json::from_str(&act_ok(&[
        "simulate",
        "--arch",
        "I",
        "--l",
        "8",
        "--input",
        p(&zeros),
        "--trace",
    ]))
    .unwrap();
    assert!(out["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .all(|o| o["raw"] == 0));
    assert!(!out["trace"].as_array().unwrap().is_empty());
}

#[test]
fn simulate_overflow_and_schedule_errors() {
    let dir = TempDir::new().unwrap();
    let mut schedule: Value =
        serde_json::from_str(&act_ok(&["schedule", "--arch", "I", "--l", "8"])).unwrap();
    for d in schedule["deltas"].as_object_mut().unwrap().values_mut() {
        *d = Value::from(0);
    }
    let sched_path = write(&dir, "s.json", &schedule.to_string());
    let input = write(&dir, "x.json", "[1,1,1,1,1,1,1,1,1,1]");
    let out = act(&[
        "simulate",
        "--arch",
        "I",
        "--schedule",
        p(&sched_path),
        "--input",
        p(&input),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overflow at node"));
    assert!(out.stdout.is_empty());

    let out = act(&[
        "simulate",
        "--arch",
        "I",
        "--l",
        "12",
        "--schedule",
        p(&sched_path),
        "--input",
        p(&input),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let big = write(&dir, "big.json", "[2,0,0,0,0,0,0,0,0,0]");
    assert_eq!(
        act(&["simulate", "--arch", "I", "--l", "8", "--input", p(&big)])
            .status
            .code(),
        Some(2)
    );
    let short = write(&dir, "short.json", "[0,0]");
    assert_eq!(
        act(&["simulate", "--arch", "I", "--l", "8", "--input", p(&short)])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        act(&[
            "simulate",
            "--arch",
            "III",
            "--l",
            "8",
            "--input",
            p(&short)
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn sweep_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        act_ok(&[
            "sweep",
            "--arch",
            "I",
            "--word-lengths",
            "8,12",
            "--trials",
            "100",
            "--seed",
            "3",
            "--out",
            p(path),
        ]);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "L,arch,avg_pct_error,psnr_db,trials,seed");
    assert_eq!(lines.len(), 3);
    let psnr: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(psnr[1] > psnr[0]);

    let stdout = act_ok(&[
        "sweep",
        "--arch",
        "I",
        "--word-lengths",
        "8,12",
        "--trials",
        "100",
        "--seed",
        "3",
    ]);
    assert_eq!(stdout, text);
    let json: Value = serde_json::from_str(&act_ok(&[
        "sweep",
        "--arch",
        "II",
        "--word-lengths",
        "8",
        "--trials",
        "10",
        "--json",
    ]))
    .unwrap();
    assert_eq!(json["config"]["trials"], 10);
    assert_eq!(
        act(&["sweep", "--arch", "I", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn complexity_counts() {
    let one: Value = serde_json::from_str(&act_ok(&["complexity", "--arch", "I"])).unwrap();
    let two: Value = serde_json::from_str(&act_ok(&["complexity", "--arch", "II"])).unwrap();
    assert_eq!(one["multipliers"], 0);
    assert_eq!(two["multipliers"], 11);
    assert_eq!(one["by_stage"]["mobius"]["two_input_adders"], 8);
}

#[test]
fn json_payloads_round_trip() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "x.json",
        &serde_json::to_string(&random_values(1, 10)).unwrap(),
    );
    let payloads = [
        act_ok(&["graph", "--arch", "II"]),
        act_ok(&["schedule", "--arch", "II", "--l", "12"]),
        act_ok(&[
            "schedule",
            "--arch",
            "I",
            "--l",
            "9",
            "--minimal",
            "--rounding",
            "truncate",
        ]),
        act_ok(&["grid"]),
        act_ok(&["complexity", "--arch", "II"]),
        act_ok(&[
            "simulate",
            "--arch",
            "II",
            "--l",
            "10",
            "--input",
            p(&input),
            "--trace",
        ]),
        act_ok(&["matrices", "Wplus", "--json"]),
        act_ok(&["matrices", "D1", "--exact", "--json"]),
    ];
    for text in payloads {
        let value: Value = serde_json::from_str(&text).unwrap();
        let mut again = serde_json::to_string_pretty(&value).unwrap();
        again.push('\n');
        assert_eq!(again, text);
    }
    let transform = act_ok(&["transform", p(&input)]);
    let value: Value = serde_json::from_str(&transform).unwrap();
    assert_eq!(
        format!("{}\n", serde_json::to_string(&value).unwrap()),
        transform
    );
}

#[test]
fn schedule_file_drives_simulation() {
    let dir = TempDir::new().unwrap();
    let sched = write(
        &dir,
        "s.json",
        &act_ok(&["schedule", "--arch", "II", "--l", "14"]),
    );
    let input = write(
        &dir,
        "x.json",
        &serde_json::to_string(&random_values(2, 10)).unwrap(),
    );
    assert_eq!(
        act_ok(&[
            "simulate",
            "--arch",
            "II",
            "--schedule",
            p(&sched),
            "--input",
            p(&input)
        ]),
        act_ok(&[
            "simulate",
            "--arch",
            "II",
            "--l",
            "14",
            "--input",
            p(&input)
        ])
    );
}
