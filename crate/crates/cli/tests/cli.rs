use std::process::{Command, Output};

fn irm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irm"))
        .args(args)
        .env_remove("IRM_OUT_DIR")
        .output()
        .expect("spawn irm")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column(csv: &str, col: usize) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

const UNIFORM4: &str = r#"{"type":"uniform","m":4}"#;
const SKEWED: &str = r#"{"type":"zipf","m":8,"alpha":0.8}"#;

#[test]
fn uniform_miss_rates() {
    let out = irm(&["mr", "--dist", UNIFORM4, "--j", "1..3"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    assert_eq!(csv.lines().next(), Some("j,mr_king,mr_flajolet,discrepancy"));
    assert_eq!(column(&csv, 1), vec![0.75, 0.5, 0.25]);
    assert_eq!(column(&csv, 2), vec![0.75, 0.5, 0.25]);
}

#[test]
fn rational_mode_matches_float() {
    let a = stdout(&irm(&["mr", "--dist", SKEWED]));
    let b = stdout(&irm(&["mr", "--dist", SKEWED, "--rational"]));
    for (x, y) in column(&a, 1).iter().zip(column(&b, 1)) {
        assert!((x - y).abs() < 1e-14);
    }
    // exact arithmetic rounds once, so the two columns coincide
    assert!(column(&b, 3).iter().all(|d| *d == 0.0));
}

#[test]
fn verify_passes_on_small_example() {
    let dist = r#"{"type":"explicit","weights":[5,3,2]}"#;
    let out = irm(&["verify", "--dist", dist, "--jmax", "2", "--tol", "1e-10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_exit_codes() {
    let ok = irm(&["verify", "--dist", SKEWED]);
    assert_eq!(ok.status.code(), Some(0));

    // rounding differences are nonzero here, so an absurd tolerance must trip
    let strict = irm(&["verify", "--dist", SKEWED, "--tol", "1e-300"]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("FAIL"));

    assert_eq!(irm(&["verify", "--dist", SKEWED, "--tol", "0"]).status.code(), Some(2));
    assert_eq!(irm(&["verify", "--dist", SKEWED, "--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn configuration_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["mr", "--dist", UNIFORM4, "--j", "9"],
        &["mr", "--dist", UNIFORM4, "--j", "3..1"],
        &["mr", "--dist", r#"{"type":"explicit","weights":[1,-1]}"#],
        &["mr", "--dist", r#"{"type":"zipf","m":4}"#],
        &["mr", "--dist", "/nonexistent/dist.json"],
        &["itable", "--dist", UNIFORM4, "--k", "4"],
        &["simulate", "--dist", UNIFORM4, "--j", "0"],
        &["nosuch"],
    ];
    for args in cases {
        assert_eq!(irm(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn ccp_uniform_three() {
    let out = irm(&["ccp", "--dist", r#"{"type":"uniform","m":3}"#, "--j", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    assert_eq!(csv.lines().next(), Some("j,e_layers,e_symmetric,e_ferrante,delta_e"));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "3");
    assert_eq!(row[1].parse::<f64>().unwrap(), 5.5);
    assert_eq!(row[2].parse::<f64>().unwrap(), 5.5);
    assert!((row[3].parse::<f64>().unwrap() - 5.5).abs() < 1e-12);
    assert_eq!(row[4], "");
}

#[test]
fn json_round_trip() {
    let out = irm(&["mr", "--dist", SKEWED, "--format", "json"]);
    let curve = irm_core::lru::MissRateCurve::from_json(&stdout(&out)).unwrap();
    let pop = irm_core::DistSpec::from_json(SKEWED).unwrap().build().unwrap();
    let table = irm_core::ITable::<f64>::build(&pop, 7).unwrap();
    assert_eq!(curve, irm_core::lru::MissRateCurve::compute(&table, 1, 8).unwrap());

    let out = irm(&["ccp", "--dist", SKEWED, "--format", "json"]);
    let ccp = irm_core::ccp::CcpCurve::from_json(&stdout(&out)).unwrap();
    assert_eq!(ccp.entries.len(), 9);
}

#[test]
fn dist_from_file_and_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("dist.json");
    std::fs::write(&dist, UNIFORM4).unwrap();
    let out_dir = dir.path().join("reports");

    let out = Command::new(env!("CARGO_BIN_EXE_irm"))
        .args(["itable", "--dist", dist.to_str().unwrap(), "--k", "2"])
        .env("IRM_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(out_dir.join("itable.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("mask,size,q_J,I_J"));
    assert_eq!(csv.lines().count(), 1 + 6);

    let out = irm(&[
        "mr",
        "--dist",
        dist.to_str().unwrap(),
        "--format",
        "json",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("mr.json").exists());
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--dist", UNIFORM4, "--j", "2", "--samples", "20000", "--seed", "9"];
    let a = irm(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&irm(&args)));
    let row: Vec<String> = stdout(&a).lines().nth(1).unwrap().split(',').map(String::from).collect();
    assert_eq!(row[0], "lru");
    assert_eq!(row[2], "0.5");

    let out = irm(&[
        "simulate", "--dist", UNIFORM4, "--kind", "ccp", "--j", "4", "--samples", "5000", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["kind"], "ccp");
    assert!((v["exact"].as_f64().unwrap() - 25.0 / 3.0).abs() < 1e-12);
}
