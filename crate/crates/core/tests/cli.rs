use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn phav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phav"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_to_file(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let path_str = path.to_str().unwrap().to_string();
    full.extend(["--no-timestamp", "--out", &path_str]);
    let out = phav(&full);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty(), "data must go only to --out");
    fs::read_to_string(path).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

fn measure_json(args: &[&str]) -> Value {
    let mut full = vec!["measure"];
    full.extend_from_slice(args);
    full.push("--no-timestamp");
    let out = phav(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn dist_first_row_is_vacuum_probability() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to_file(dir.path(), "d.csv", &["dist", "--state", "phav", "--mean", "1.97"]);
    assert!(csv.lines().any(|l| l.starts_with("# state=phav mean=1.97")));
    assert!(csv.lines().any(|l| l.starts_with("# tail_bound=")));
    assert!(csv.lines().any(|l| l == "n,p"));
    let rows = data_rows(&csv);
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[0][1] - (-1.97f64).exp()).abs() < 1e-15);
}

#[test]
fn equivalent_states_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let reference = run_to_file(d, "a.csv", &["dist", "--state", "phav", "--mean", "2"]);
    let two = run_to_file(d, "b.csv", &["dist", "--state", "two-phav", "--n1", "0", "--n2", "2"]);
    assert_eq!(reference, two);
    let lossy = run_to_file(d, "c.csv", &["dist", "--state", "phav", "--mean", "4", "--eta", "0.5"]);
    let ideal = run_to_file(d, "e.csv", &["dist", "--state", "phav", "--mean", "2", "--eta", "1"]);
    assert_eq!(lossy, ideal);
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "dist", "--state", "two-phav", "--n1", "1.03", "--n2", "0.91", "--shots", "5000", "--seed", "7",
    ];
    assert_eq!(run_to_file(d, "a.csv", &args), run_to_file(d, "b.csv", &args));
    let sweep = [
        "sweep",
        "--family",
        "total-fixed",
        "--fixed",
        "4.12",
        "--grid",
        "0.1:1:0.1",
    ];
    assert_eq!(run_to_file(d, "c.csv", &sweep), run_to_file(d, "e.csv", &sweep));
}

#[test]
fn timestamp_line_is_optional() {
    let out = phav(&["dist", "--state", "phav", "--mean", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# generated_unix=")));
    let out = phav(&["dist", "--state", "phav", "--mean", "1", "--no-timestamp"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains("generated_unix"));
}

#[test]
fn measure_reports_flat_json() {
    let v = measure_json(&["--state", "phav", "--mean", "1.97"]);
    let a = v["epsilon_a"].as_f64().unwrap();
    let b = v["epsilon_b"].as_f64().unwrap();
    assert!((a - 0.153_906_341_181_271_6).abs() < 1e-9);
    assert!((b - 0.201_035_870_254_511_6).abs() < 1e-9);
    assert!((v["reference_mean"].as_f64().unwrap() - 1.97).abs() < 1e-12);
    assert!(v.get("stderr_a").is_none());
    assert!(v.as_object().unwrap().values().all(|x| !x.is_object() && !x.is_array()));
}

#[test]
fn measure_thermal_is_zero() {
    let v = measure_json(&["--state", "thermal", "--mean", "2"]);
    assert!(v["epsilon_a"].as_f64().unwrap().abs() <= 1e-12);
    assert!(v["epsilon_b"].as_f64().unwrap().abs() <= 1e-12);
}

#[test]
fn measure_with_shots_reports_bootstrap_errors() {
    let v = measure_json(&[
        "--state",
        "phav",
        "--mean",
        "1.97",
        "--shots",
        "200000",
        "--seed",
        "3",
        "--resamples",
        "200",
    ]);
    let sa = v["stderr_a"].as_f64().unwrap();
    assert!(sa > 0.0 && v["stderr_b"].as_f64().unwrap() > 0.0);
    let (a, exact) = (v["epsilon_a"].as_f64().unwrap(), v["epsilon_a_exact"].as_f64().unwrap());
    assert!((a - exact).abs() <= 5.0 * sa);
    assert!(v["rng"].as_str().unwrap().contains("ChaCha20"));
    assert_eq!(v["seed"].as_u64(), Some(3));
}

#[test]
fn wigner_single_point_at_origin() {
    let out = phav(&[
        "wigner",
        "--state",
        "phav",
        "--mean",
        "1.97",
        "--method",
        "closed",
        "--steps",
        "2",
        "--rmax",
        "0",
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let rows = data_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 0.0);
    let expected = std::f64::consts::FRAC_2_PI * (-3.94f64).exp();
    assert!((rows[0][1] - expected).abs() < 1e-15);
}

#[test]
fn wigner_closed_and_parity_profiles_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let base = [
        "wigner", "--state", "phav", "--mean", "1.97", "--rmax", "3", "--steps", "31", "--method",
    ];
    let closed = data_rows(&run_to_file(d, "c.csv", &[&base[..], &["closed"]].concat()));
    let parity = data_rows(&run_to_file(d, "p.csv", &[&base[..], &["parity"]].concat()));
    assert_eq!(closed.len(), 31);
    for (c, p) in closed.iter().zip(&parity) {
        assert_eq!(c[0], p[0]);
        assert!((c[1] - p[1]).abs() <= 1e-8);
    }
}

#[test]
fn wigner_two_phav_peaks_at_origin() {
    for method in ["closed", "quadrature", "parity"] {
        let out = phav(&[
            "wigner",
            "--state",
            "two-phav",
            "--n1",
            "1.03",
            "--n2",
            "0.91",
            "--rmax",
            "1",
            "--steps",
            "2",
            "--method",
            method,
            "--no-timestamp",
        ]);
        assert!(out.status.success(), "{method}");
        let rows = data_rows(&String::from_utf8(out.stdout).unwrap());
        assert!(rows[0][1] > rows[1][1], "{method}");
    }
}

#[test]
fn wigner_degraded_overlaps_reduce_the_profile() {
    let ideal = phav(&[
        "wigner",
        "--state",
        "phav",
        "--mean",
        "1.97",
        "--rmax",
        "2",
        "--steps",
        "5",
        "--no-timestamp",
    ]);
    let degraded = phav(&[
        "wigner",
        "--state",
        "phav",
        "--mean",
        "1.97",
        "--rmax",
        "2",
        "--steps",
        "5",
        "--xi",
        "0.9",
        "--no-timestamp",
    ]);
    assert!(degraded.status.success());
    let text = String::from_utf8(degraded.stdout).unwrap();
    assert!(text.contains("# xi=0.9"));
    let (i, g) = (data_rows(&String::from_utf8(ideal.stdout).unwrap()), data_rows(&text));
    assert!(i.iter().zip(&g).all(|(a, b)| b[1] < a[1]));
}

#[test]
fn sweep_columns_follow_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to_file(
        dir.path(),
        "s.csv",
        &["sweep", "--family", "ratio-fixed", "--fixed", "1.24", "--grid", "1:6:1"],
    );
    assert!(csv.lines().any(|l| l == "swept_value,epsilon_a,epsilon_b"));
    let rows = data_rows(&csv);
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    );
    assert!(rows.windows(2).all(|w| w[1][1] > w[0][1] && w[1][2] > w[0][2]));

    let phav_rows = data_rows(&run_to_file(
        dir.path(),
        "p.csv",
        &["sweep", "--family", "phav", "--grid", "0.5:6:0.5"],
    ));
    assert_eq!(phav_rows.len(), 12);
    assert!(phav_rows.windows(2).all(|w| w[1][1] > w[0][1] && w[1][2] > w[0][2]));
}

#[test]
fn ratio_conventions_are_equivalent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let geq = data_rows(&run_to_file(
        d,
        "g.csv",
        &["sweep", "--family", "ratio-fixed", "--fixed", "2", "--grid", "1,2"],
    ));
    let leq = data_rows(&run_to_file(
        d,
        "l.csv",
        &[
            "sweep",
            "--family",
            "ratio-fixed",
            "--fixed",
            "0.5",
            "--ratio-convention",
            "leq1",
            "--grid",
            "1,2",
        ],
    ));
    assert_eq!(geq, leq);
}

#[test]
fn sweep_with_shots_has_error_columns() {
    let out = phav(&[
        "sweep",
        "--family",
        "phav",
        "--grid",
        "1,2",
        "--shots",
        "20000",
        "--resamples",
        "100",
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("swept_value,epsilon_a,epsilon_b,stderr_a,stderr_b"));
    assert!(data_rows(&text).iter().all(|r| r.len() == 5 && r[3] > 0.0));
}

#[test]
fn figure4_has_seven_curves() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to_file(dir.path(), "f.csv", &["figure4"]);
    let lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "family,fixed_param,swept_value,epsilon_a,epsilon_b");
    let mut curves: Vec<(String, String)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    curves.dedup();
    assert_eq!(curves.len(), 7);
    assert_eq!(curves[0], ("phav".to_string(), String::new()));
}

#[test]
fn invalid_invocations_fail_with_a_message() {
    let cases: &[&[&str]] = &[
        &["dist", "--state", "phav"],
        &["dist", "--state", "phav", "--mean", "1", "--n1", "2"],
        &["dist", "--state", "two-phav", "--n1", "1"],
        &["dist", "--state", "phav", "--mean", "1", "--eta", "1.5"],
        &["dist", "--state", "phav", "--mean", "-1"],
        &["dist", "--state", "phav", "--mean", "1", "--cutoff", "many"],
        &["measure", "--state", "phav", "--mean", "1", "--shots", "0"],
        &["wigner", "--state", "thermal", "--mean", "1"],
        &["wigner", "--state", "phav", "--mean", "1", "--xi", "2"],
        &["wigner", "--state", "phav", "--mean", "1", "--steps", "1"],
        &["sweep", "--family", "ratio-fixed", "--grid", "1:6:1"],
        &["sweep", "--family", "ratio-fixed", "--fixed", "0.5", "--grid", "1:6:1"],
        &["sweep", "--family", "total-fixed", "--fixed", "4", "--grid", "0:1:0.1"],
        &["sweep", "--family", "phav", "--grid", "3,2"],
        &["bogus"],
    ];
    for args in cases {
        let out = phav(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(out.stdout.is_empty(), "{args:?} wrote data");
        assert!(!out.stderr.is_empty(), "{args:?} gave no message");
    }
}

#[test]
fn failed_run_leaves_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("never.csv");
    let out = phav(&[
        "sweep",
        "--family",
        "phav",
        "--grid",
        "3,2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(!path.exists());
}
