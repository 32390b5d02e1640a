use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use ifmem_core::data_io::trace_to_csv;
use ifmem_core::{fixtures, simulate, standard_sweep, SimulationConfig};

fn ifmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifmem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn fixture(dir: &Path, label: &str) -> PathBuf {
    let path = dir.join(format!("{label}.json"));
    fs::write(&path, fixtures::reference_json(label).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_pinched_trace_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let params = fixture(tmp.path(), "10um");
    let out = tmp.path().join("sim");
    let res = ifmem(&["simulate", "--params", s(&params), "--svg", "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));

    let csv = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,voltage,current,state"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10_001);
    for r in rows.iter().filter(|r| r[1] == 0.0) {
        assert_eq!(r[2], 0.0);
    }
    assert!(out.join("iv.svg").exists());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["run"]["command"], "simulate");
    assert_eq!(manifest["run"]["sweep"]["duration"], 60.0);
    assert_eq!(manifest["run"]["initial"]["x0"], 0.0);
    assert_eq!(manifest["outputs"], serde_json::json!(["trace.csv", "iv.svg"]));
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 1);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let params = fixture(tmp.path(), "32um");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let res = ifmem(&["simulate", "--params", s(&params), "--out", s(out)]);
        assert_eq!(code(&res), 0);
    }
    assert_eq!(
        fs::read(a.join("trace.csv")).unwrap(),
        fs::read(b.join("trace.csv")).unwrap()
    );
}

#[test]
fn input_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let params = fixture(tmp.path(), "10um");
    let out = tmp.path().join("out");

    let res = ifmem(&["simulate", "--params", s(&params), "--dt", "0", "--out", s(&out)]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("dt must be positive"), "{}", stderr(&res));

    let missing = tmp.path().join("missing.json");
    let res = ifmem(&["sensitivity", "--params", s(&missing), "--out", s(&out)]);
    assert_eq!(code(&res), 2);

    let res = ifmem(&["sample", "--gaussian", s(&params), "--n", "0", "--out", s(&out)]);
    assert_eq!(code(&res), 2);

    let res = ifmem(&["trends", "--gaussian", s(&params), "--out", s(&out)]);
    assert_eq!(code(&res), 2);

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let res = ifmem(&["fit", "--data-dir", s(&empty), "--out", s(&out)]);
    assert_eq!(code(&res), 2);

    let res = ifmem(&["simulate", "--out", s(&out)]);
    assert_eq!(code(&res), 2);
}

#[test]
fn sample_is_seeded() {
    let tmp = TempDir::new().unwrap();
    let g = fixture(tmp.path(), "100um");
    let run = |dir: &str, seed: &str| {
        let out = tmp.path().join(dir);
        let res = ifmem(&[
            "sample", "--gaussian", s(&g), "--n", "3", "--seed", seed, "--dt", "0.06", "--out",
            s(&out),
        ]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
        out
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    for name in ["member_000.json", "member_002.csv", "mean.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
    assert_ne!(
        fs::read(a.join("member_000.json")).unwrap(),
        fs::read(c.join("member_000.json")).unwrap()
    );
}

#[test]
fn sensitivity_reports_columns_and_ranking() {
    let tmp = TempDir::new().unwrap();
    let params = fixture(tmp.path(), "10um");
    let out = tmp.path().join("sens");
    let res = ifmem(&["sensitivity", "--params", s(&params), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let csv = fs::read_to_string(out.join("sensitivity.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("parameter,10um decrease %,10um increase %,average %")
    );
    assert!(lines.next().unwrap().starts_with("b_min_n,"));
    let ranking = fs::read_to_string(out.join("ranking.txt")).unwrap();
    assert!(ranking.lines().nth(1).unwrap().contains("b_min_n"));
}

#[test]
fn trends_classify_fixtures_and_flat_duplicates() {
    let tmp = TempDir::new().unwrap();
    let files: Vec<PathBuf> = ["100um", "10um", "32um"]
        .iter()
        .map(|l| fixture(tmp.path(), l))
        .collect();
    let out = tmp.path().join("trends");
    let res = ifmem(&[
        "trends", "--gaussian", s(&files[0]), "--gaussian", s(&files[1]), "--gaussian",
        s(&files[2]), "--out", s(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let csv = fs::read_to_string(out.join("trends.csv")).unwrap();
    for row in [
        "A_n,decreasing",
        "alpha_n,decreasing",
        "b_min_n,decreasing",
        "x_n,decreasing",
        "g_min_p,increasing",
        "g_min_n,increasing",
        "b_min_p,increasing",
        "A_p,flat",
        "V_n,flat",
    ] {
        assert!(csv.lines().any(|l| l == row), "missing {row} in\n{csv}");
    }
    let tidy = fs::read_to_string(out.join("parameter_vs_area.csv")).unwrap();
    let areas: Vec<&str> = tidy.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(areas.first(), Some(&"10um"));
    assert_eq!(areas.last(), Some(&"100um"));

    let out = tmp.path().join("same");
    let res = ifmem(&[
        "trends", "--gaussian", s(&files[1]), "--gaussian", s(&files[1]), "--out", s(&out),
    ]);
    assert_eq!(code(&res), 0);
    let csv = fs::read_to_string(out.join("trends.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",flat")), "{csv}");
}

/// One noiseless trace per area from the bundled means.
fn synthetic_data_dir(root: &Path) -> PathBuf {
    let data = root.join("data");
    let spec = standard_sweep(1.0, -2.0, 60.0).unwrap();
    let waveform = spec.sample(0.3).unwrap();
    for (p, label) in fixtures::reference_means().iter().zip(["10um", "32um", "100um"]) {
        let dir = data.join(label);
        fs::create_dir_all(&dir).unwrap();
        let trace = simulate(p, &waveform, &SimulationConfig::with_dt(0.3)).unwrap();
        fs::write(dir.join("trace_0.csv"), trace_to_csv(&trace)).unwrap();
    }
    data
}

#[test]
fn fit_reports_frozen_rows_and_reruns_identically() {
    let tmp = TempDir::new().unwrap();
    let data = synthetic_data_dir(tmp.path());
    let config = tmp.path().join("config.json");
    fs::write(
        &config,
        r#"{"frozen": ["A_p", "x_p", "alpha_p"], "max_evals": 300, "max_restarts": 0}"#,
    )
    .unwrap();
    let out = tmp.path().join("fit");
    let res = ifmem(&["fit", "--data-dir", s(&data), "--config", s(&config), "--out", s(&out)]);
    assert!(matches!(code(&res), 0 | 4), "{}", stderr(&res));
    for label in ["10um", "32um", "100um"] {
        assert!(out.join(format!("{label}.json")).exists());
    }
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    let row = |name: &str| {
        report
            .lines()
            .find(|l| l.split_whitespace().next() == Some(name))
            .unwrap()
            .to_string()
    };
    assert_eq!(row("A_p").matches("7.10e-2 (0.00e0)").count(), 3, "{report}");
    assert_eq!(row("x_p").matches("1.10e-1 (0.00e0)").count(), 3, "{report}");
    assert_eq!(row("alpha_p").matches("9.20e0 (0.00e0)").count(), 3, "{report}");
    assert_eq!(row("V_p").matches("0.00e0 (0.00e0)").count(), 3, "{report}");
    assert!(report.contains("mean model of each area"), "{report}");

    let again = tmp.path().join("again");
    let res2 = ifmem(&["rerun", s(&out.join("manifest.json")), "--out", s(&again)]);
    assert_eq!(code(&res2), code(&res));
    for name in ["10um.json", "report.txt", "fit.json"] {
        assert_eq!(fs::read(out.join(name)).unwrap(), fs::read(again.join(name)).unwrap());
    }

    fs::write(data.join("10um").join("trace_0.csv"), "time,voltage,current\n0,0,0\n").unwrap();
    let res3 = ifmem(&["rerun", s(&out.join("manifest.json")), "--out", s(&again)]);
    assert_eq!(code(&res3), 2);
    assert!(stderr(&res3).contains("changed"), "{}", stderr(&res3));
}
