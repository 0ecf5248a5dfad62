use std::process::{Command, Output};

fn liouville(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn thresholds_at_toda_point() {
    let o = liouville(&["thresholds", "--N", "1", "--tau", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["beta_minus_1"].as_f64().unwrap() - 12.0).abs() < 1e-12);
    assert!((v["beta_plus_1"].as_f64().unwrap() - 12.0).abs() < 1e-12);
    assert!(v["tau1_2"].as_f64().unwrap() > 0.5);

    let o = liouville(&["thresholds", "--N", "1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["tau0_1"].as_f64().unwrap() < 0.5);
    assert!(v.get("beta_star_1").is_none());
}

#[test]
fn sweep_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let o = liouville(&[
        "sweep", "--tau", "0.15", "--N", "1", "--alpha-min", "-20", "--alpha-max", "20",
        "--steps", "41", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,beta1,beta2,err1,err2,residual,converged"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 41);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let args = [
        "sweep", "--tau", "0.3", "--N", "1", "--alpha-min", "-6", "--alpha-max", "6", "--steps",
        "7", "--format", "json",
    ];
    let a = liouville(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(args)
        .env("LIOUVILLE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, liouville(&args).stdout);
}

#[test]
fn verify_reports_solvable() {
    let o = liouville(&["verify", "--tau", "0.15", "--N", "1", "--beta1", "8.6", "--beta2", "5.6699"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("solvable: true"));

    let o = liouville(&[
        "verify", "--tau", "0.15", "--N", "1", "--beta1", "9.5", "--beta2", "5", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["solvable"], false);
    assert_eq!(v["failure"], "above-interval");
}

#[test]
fn exit_codes() {
    // usage errors
    assert_eq!(liouville(&["solve", "--tau", "1.2", "--N", "1", "--alpha", "0"]).status.code(), Some(1));
    assert_eq!(liouville(&["solve", "--tau", "0.3", "--N", "1"]).status.code(), Some(1));
    assert_eq!(liouville(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(liouville(&["--help"]).status.code(), Some(0));
    // domain error
    let o = liouville(&["solve", "--tau", "0.15", "--N", "1", "--target", "9.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside"));
    // not converged
    let o = liouville(&["solve", "--tau", "0.3", "--N", "1", "--alpha", "0", "--t-max", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["converged"], false);
    // bad thread cap
    let o = Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(["thresholds", "--N", "1"])
        .env("LIOUVILLE_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_shot_and_target() {
    let o = liouville(&["solve", "--tau", "0.5", "--N", "1", "--alpha", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["beta1"].as_f64().unwrap() - 12.0).abs() < 1e-4);
    assert_eq!(v["converged"], true);

    let o = liouville(&["solve", "--tau", "0.15", "--N", "1", "--target", "8.6"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["beta1"].as_f64().unwrap() - 8.6).abs() <= 1e-6);

    let o = liouville(&["solve", "--tau", "0", "--N", "1", "--alpha", "0", "--format", "csv"]);
    let text = stdout(&o);
    assert!(text.starts_with("t,r,v1,v2,rv1p,rv2p,f1,f2,psi0,psi1,psi2,r0q,r1q,hq\n"));
}

#[test]
fn normalize_gudnason_matrix() {
    let o = liouville(&["normalize", "--k11", "2", "--k12", "-1", "--k21", "-1", "--k22", "2", "--n1", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["tau1"].as_f64(), Some(0.5));
    assert_eq!(v["symmetric"]["tau"].as_f64(), Some(0.5));
    let o = liouville(&["normalize", "--k11", "-1", "--k12", "0", "--k21", "0", "--k22", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn curve_samples() {
    let o = liouville(&["curve", "--tau", "0.3", "--N", "1", "--samples", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 12);
    let vals: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert!(vals.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1));
}

#[test]
fn limits_report() {
    let o = liouville(&["limits", "--tau", "0.3", "--N", "1", "--alpha-max", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["reliable"], true);
    assert!(v["plus"]["rel_distance"].as_f64().unwrap() < 0.05);
}
