use std::path::PathBuf;
use std::process::{Command, Output};

use ugat::reliability::{hazard_component, joint_survival};
use ugat::{parse_count_csv, CountVector, FitResult, UgatParams};
use ugat_cli::docs::{CompareResult, Document, EvalResult, ReliabilityResult, SampleSummary};

fn ugat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ugat")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn bacteria() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data/bacteria.csv")
        .display()
        .to_string()
}

fn json<T: serde::de::DeserializeOwned>(o: &Output) -> Document<T> {
    assert!(o.status.code().is_some(), "killed");
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn bundled_table_shape() {
    let d = parse_count_csv(&std::fs::read_to_string(bacteria()).unwrap()).unwrap();
    assert_eq!(d.len(), 50);
    assert_eq!(d.dim(), 3);
    let st = d.stats();
    assert_eq!(st.coord_sums, [235, 325, 333]);
    let max: Vec<u64> = (0..3)
        .map(|j| d.rows.iter().map(|r| r.as_slice()[j]).max().unwrap())
        .collect();
    assert_eq!(max, [22, 15, 30]);
}

#[test]
fn eval_geometric_n0() {
    let o = ugat(&["eval", "--model", "geom", "--p", "0.5", "--x", "3", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Document<EvalResult> = json(&o);
    let EvalResult::Named { points, .. } = doc.result else {
        panic!()
    };
    assert_eq!(points[0].pmf, 0.0625);
}

#[test]
fn eval_hurwitz_zeta_first_mass() {
    let o = ugat(&["eval", "--model", "hzeta", "--b", "1", "--sigma", "2", "--x", "1", "--json"]);
    let doc: Document<EvalResult> = json(&o);
    let EvalResult::Named { points, .. } = doc.result else {
        panic!()
    };
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    assert!((points[0].pmf - 1.0 / zeta2).abs() < 1e-12);
}

#[test]
fn eval_ugat_matches_library() {
    let o = ugat(&[
        "eval", "--model", "ugat", "--alpha", "0.3,0.4", "--beta", "1", "--s", "2", "--x", "0,0", "--x", "3,1", "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Document<EvalResult> = json(&o);
    let EvalResult::Ugat { points, .. } = doc.result else {
        panic!()
    };
    let p = UgatParams::new(vec![0.3, 0.4], 1.0, 2.0).unwrap();
    for pt in &points {
        assert_eq!(pt.pmf, p.joint_pmf(&pt.x).unwrap());
        assert_eq!(pt.survival, joint_survival(&p, &pt.x).unwrap());
    }
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["eval", "--model", "geom", "--x", "1"],
        vec!["eval", "--model", "geom", "--p", "0.5", "--beta", "2", "--x", "1"],
        vec!["eval", "--model", "geom", "--p", "1.5", "--x", "1"],
        vec!["eval", "--model", "ugat", "--alpha", "0.3,0.4", "--beta", "1", "--s", "2", "--x", "1"],
        vec!["frobnicate"],
        vec!["sample", "--model", "geom", "--p", "0.5", "--n", "0"],
    ] {
        let o = ugat(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn numeric_errors_exit_two() {
    let o = ugat(&["eval", "--model", "zipf", "--a", "1", "--c", "0.9", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ugat(&["--max-terms", "10", "eval", "--model", "dpareto", "--c", "1.5", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_errors_exit_three() {
    let o = ugat(&["fit", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(3));
    let o = ugat(&["sample", "--model", "geom", "--p", "0.5", "--n", "2", "--out", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn malformed_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("empty.csv", "", None),
        ("ragged.csv", "x1,x2\n1,2\n3\n", Some("line 3")),
        ("negative.csv", "x1,x2\n1,2\n1,-2\n", Some("line 3")),
        ("real.csv", "x1,x2\n1.5,2\n", Some("line 2")),
    ];
    for (name, text, needle) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let o = ugat(&["fit", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{name}");
        if let Some(n) = needle {
            assert!(String::from_utf8_lossy(&o.stderr).contains(n), "{name}");
        }
    }
}

#[test]
fn fit_geometric_csv_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("geo.csv");
    let o = ugat(&[
        "--seed", "7", "sample", "--model", "ugat", "--alpha", "0.4,0.7", "--beta", "1", "--s", "0", "--n", "400", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = ugat(&["fit", path.to_str().unwrap(), "--s", "0", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Document<FitResult> = json(&o);
    let d = parse_count_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for (a, m) in doc.result.alphas.iter().zip(d.stats().means()) {
        assert!((a - m / (1.0 + m)).abs() < 1e-6);
    }
    assert_eq!(doc.manifest.input_sha256.as_deref().map(str::len), Some(64));
}

#[test]
fn sample_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = ugat(&[
            "--seed", "11", "sample", "--model", "ugat", "--alpha", "0.5,0.3", "--beta", "1", "--s", "2", "--n", "50",
            "--out", p.to_str().unwrap(), "--json",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let doc: Document<SampleSummary> = json(&o);
        assert_eq!(doc.result.columns, ["x1", "x2"]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let o = ugat(&["sample", "--model", "geom", "--p", "0.5", "--n", "1"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next(), Some("x1"));
}

#[test]
fn sample_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let o = ugat(&[
        "--seed", "3", "sample", "--model", "ugat", "--alpha", "0.5,0.3", "--beta", "1", "--s", "2", "--n", "5000",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = ugat(&["fit", path.to_str().unwrap(), "--s", "2", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Document<FitResult> = json(&o);
    for (pe, want) in doc.result.params.iter().zip([0.5, 0.3]) {
        assert!((pe.value - want).abs() < 3.0 * pe.std_error.unwrap(), "{pe:?}");
    }
}

#[test]
fn reliability_geometric_and_consistency() {
    let o = ugat(&["reliability", "--model", "geom", "--p", "0.3", "--grid-max", "5", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Document<ReliabilityResult> = json(&o);
    for pt in &doc.result.report.points {
        assert!((pt.hazard[0] - 0.7).abs() < 1e-15);
    }
    let v = serde_json::to_value(&doc.result.report.aging).unwrap();
    assert_eq!(v[0]["class"], "MNBU");
    assert_eq!(v[0]["verdict"], "equality");

    let o = ugat(&[
        "reliability", "--model", "ugat", "--alpha", "0.5,0.5", "--beta", "1", "--s", "2", "--grid-max", "5", "--json",
    ]);
    let doc: Document<ReliabilityResult> = json(&o);
    let p = UgatParams::new(vec![0.5, 0.5], 1.0, 2.0).unwrap();
    let grid: Vec<CountVector> = doc.result.report.points.iter().map(|pt| pt.x.clone()).collect();
    let lib = ugat::reliability::aging_class_check(&p, ugat::AgingClass::Mnbu, &grid, &grid).unwrap();
    let got = &doc.result.report.aging[0];
    assert_eq!((got.verdict, got.comparisons), (lib.verdict, lib.comparisons));
    for (g, l) in [(got.max_gap, lib.max_gap), (got.min_gap, lib.min_gap)] {
        assert!((g.unwrap() - l.unwrap()).abs() <= 1e-12 * l.unwrap().abs().max(1.0));
    }
    let survival = |x: &CountVector| {
        doc.result
            .report
            .points
            .iter()
            .find(|pt| &pt.x == x)
            .map(|pt| pt.survival)
    };
    for pt in &doc.result.report.points {
        for i in 0..2 {
            if let Some(next) = survival(&pt.x.bumped(i)) {
                let h = 1.0 - next / pt.survival;
                assert!((h - pt.hazard[i]).abs() < 1e-12);
                assert!((pt.hazard[i] - hazard_component(&p, i, &pt.x).unwrap()).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn reliability_grid_cap() {
    let o = ugat(&[
        "reliability", "--model", "ugat", "--alpha", "0.5,0.5,0.5", "--beta", "1", "--s", "2", "--grid-max", "50",
        "--grid-cap", "1000",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_renders_reference_rows() {
    let o = ugat(&["compare", &bacteria()]);
    let text = stdout(&o);
    assert!(text.contains("P∧³ model"));
    let row = text.lines().find(|l| l.starts_with("P∧³ model")).unwrap();
    for field in ["9", "397.8", "813.6", "810.89", "transcribed, not recomputed"] {
        assert!(row.contains(field), "{row}");
    }
    let o = ugat(&["compare", &bacteria(), "--json"]);
    let doc: Document<CompareResult> = json(&o);
    let live = &doc.result.rows[0];
    assert_eq!(live.aic, 2.0 * live.parameters as f64 + 2.0 * live.neg_log_likelihood);
    let again: Document<CompareResult> = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(again, doc);
}

#[test]
fn json_rejects_unknown_fields() {
    let o = ugat(&["eval", "--model", "geom", "--p", "0.5", "--x", "3", "--json"]);
    let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    v["result"]["bogus"] = serde_json::Value::Bool(true);
    assert!(serde_json::from_value::<Document<EvalResult>>(v).is_err());
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(ugat(&["--help"]).status.code(), Some(0));
    assert_eq!(ugat(&["--version"]).status.code(), Some(0));
}
