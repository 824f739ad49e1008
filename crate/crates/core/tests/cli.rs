use std::fs;
use std::path::Path;

use markov_disorder::cli::main_with_args;

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["disorder"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn solve_reports_the_middle_region_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["solve", "--p", "0.6", "--out", &out]), 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("solve_summary.json")).unwrap())
            .unwrap();
    let r0 = summary["thresholds"][0]["value"].as_f64().unwrap();
    let r1 = summary["thresholds"][1]["value"].as_f64().unwrap();
    assert!((r0 - 51.2 / 37.04).abs() < 1e-9);
    assert!((r1 - 46.8 / 37.04).abs() < 1e-9);
    assert_eq!(summary["tool_version"], env!("CARGO_PKG_VERSION"));
    assert!(summary["model_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn solve_output_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(run(&["solve", "--p", "0.8", "--d", "2", "--format", "csv", "--out", &out_arg(d.path())]), 0);
    }
    for name in ["rstar.json", "solve_summary.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
}

#[test]
fn invalid_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["solve", "--p", "1.5", "--out", &out]), 2);
    assert_eq!(run(&["solve", "--tol", "-1", "--out", &out]), 2);
    assert_eq!(run(&["solve", "--unknown", "--out", &out]), 2);
    assert_eq!(run(&["evaluate", "--policy", "best", "--out", &out]), 2);

    let model = dir.path().join("model.json");
    fs::write(
        &model,
        r#"{"states":["a","b"],"pre":[[0.5,0.6],[0.5,0.5]],"post":[[0.5,0.5],[0.5,0.5]],"p":0.5,"d":0,"x0":0}"#,
    )
    .unwrap();
    assert_eq!(run(&["solve", "--model", model.to_str().unwrap(), "--out", &out]), 2);
    fs::write(
        &model,
        r#"{"states":["a","b"],"pre":[[0.5,0.5],[0.5,0.5]],"post":[[0.5,0.5],[0.5,0.5]],"p":0.5,"d":0,"x0":0,"extra":1}"#,
    )
    .unwrap();
    assert_eq!(run(&["solve", "--model", model.to_str().unwrap(), "--out", &out]), 2);
}

#[test]
fn non_convergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["solve", "--p", "0.9", "--max-iters", "3", "--out", &out_arg(dir.path())]), 3);
}

#[test]
fn oversized_enumeration_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["evaluate", "--exact", "--horizon", "30", "--out", &out]), 4);
    assert_eq!(run(&["sweep", "--horizon", "40", "--out", &out]), 4);
}

#[test]
fn example_writes_report_and_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["example", "--out", &out_arg(dir.path())]), 0);
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("example_report.json")).unwrap(),
    )
    .unwrap();
    let want = [1.0 / 3.0, (229f64.sqrt() - 7.0) / 18.0, (20625f64.sqrt() - 15.0) / 136.0];
    for (b, w) in report["breakpoints"].as_array().unwrap().iter().zip(want) {
        assert!((b["computed"].as_f64().unwrap() - w).abs() < 1e-6);
    }
    let statuses: Vec<(u64, u64, String)> = report["regions"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| {
            let region = r["region"].as_u64().unwrap();
            r["checks"].as_array().unwrap().iter().map(move |c| {
                (region, c["state"].as_u64().unwrap(), c["status"].as_str().unwrap().to_string())
            })
        })
        .collect();
    for (region, state, status) in statuses {
        let want = if (region, state) == (4, 1) { "mismatch" } else { "match" };
        assert_eq!(status, want, "region {region} state {state}");
    }
    let rows = read_csv(&dir.path().join("example_thresholds.csv"));
    assert_eq!(rows.len(), 99);
    let last = &rows[98];
    assert_eq!(&last[0], "0.99");
    assert_eq!(&last[3], "0-0");
}

#[test]
fn exact_evaluation_matches_the_value_formula() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["solve", "--p", "0.5", "--out", &out]), 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("solve_summary.json")).unwrap())
            .unwrap();
    let value = summary["value"].as_f64().unwrap();
    let rstar = dir.path().join("rstar.json");
    assert_eq!(
        run(&["evaluate", "--p", "0.5", "--exact", "--rstar", rstar.to_str().unwrap(),
              "--policy", "optimal", "--policy", "fixed:3", "--out", &out]),
        0
    );
    let rows = read_csv(&dir.path().join("evaluation.csv"));
    let optimal: f64 = rows[0][2].parse().unwrap();
    let bound: f64 = rows[0][5].parse().unwrap();
    assert!((value - optimal).abs() <= 1e-8 + bound);
    assert_eq!(&rows[1][0], "fixed");
    assert_eq!(&rows[1][2], "0.125000000000");
}

#[test]
fn thresholds_from_another_model_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["solve", "--p", "0.5", "--out", &out]), 0);
    let rstar = dir.path().join("rstar.json");
    assert_eq!(run(&["evaluate", "--p", "0.6", "--rstar", rstar.to_str().unwrap(), "--out", &out]), 2);
}

#[test]
fn simulation_is_reproducible_from_the_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let args = ["evaluate", "--seed", "7", "--trials", "20000", "--policy", "optimal",
                    "--policy", "posterior:0.6", "--out", &out_arg(d.path())];
        assert_eq!(run(&args), 0);
    }
    assert_eq!(
        fs::read(a.path().join("evaluation.csv")).unwrap(),
        fs::read(b.path().join("evaluation.csv")).unwrap()
    );
}

#[test]
fn sweep_is_dominant_and_continuous() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["sweep", "--grid", "0.05:0.95:0.05", "--out", &out]), 0);
    let rows = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 19);
    let mut prev: Option<(f64, f64)> = None;
    for row in &rows {
        assert_eq!(&row[5], "dominant");
        let r0: f64 = row[1].parse().unwrap();
        // the thresholds move by less than their largest slope times the step
        if let Some((_, before)) = prev {
            assert!((r0 - before).abs() < 0.75, "{r0} after {before}");
        }
        prev = Some((row[0].parse().unwrap(), r0));
    }
    assert_eq!(run(&["sweep", "--grid", "0.5:0.4:0.1", "--out", &out]), 2);
}
