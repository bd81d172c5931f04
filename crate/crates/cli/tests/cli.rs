use std::process::{Command, Output};

fn ffdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffdist"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn full_grid_distance() {
    let out = ffdist(&[
        "distance",
        "--q",
        "7",
        "--d",
        "2",
        "--poly",
        "x1^2+x2^2",
        "--setE",
        "all",
        "--setF",
        "all",
    ]);
    assert!(out.status.success());
    assert_eq!(json(&out)["report"]["delta_size"], 7);
}

#[test]
fn extension_field_by_p_and_n() {
    let out = ffdist(&[
        "distance",
        "--p",
        "3",
        "--n",
        "2",
        "--poly",
        "x1^2+x2^2",
        "--setE",
        "subfield",
    ]);
    assert!(out.status.success());
    assert_eq!(json(&out)["report"]["delta_size"], 3);
    let out = ffdist(&["field-check", "--p", "3", "--n", "2", "--modulus", "2,2,1"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["field"]["modulus"], serde_json::json!([2, 2, 1]));
}

#[test]
fn exit_codes() {
    assert_eq!(ffdist(&["distance", "--bogus"]).status.code(), Some(1));
    assert_eq!(ffdist(&[]).status.code(), Some(1));
    assert_eq!(ffdist(&["--help"]).status.code(), Some(0));
    assert_eq!(
        ffdist(&["distance", "--q", "6", "--poly", "x1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ffdist(&["distance", "--q", "7", "--poly", "x1^2", "--setE", "blob"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ffdist(&[
            "field-check",
            "--p",
            "3",
            "--n",
            "2",
            "--modulus",
            "1,0,1,0"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        ffdist(&["weil", "--q", "3", "--degree", "3"]).status.code(),
        Some(3)
    );
    let out = ffdist(&[
        "decay",
        "--q",
        "3",
        "--poly",
        "x1^3+x2^3",
        "--check-hypothesis",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("divides"));
}

#[test]
fn out_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let status = ffdist(&[
        "scan",
        "--q",
        "7",
        "--poly",
        "x1^2+x2^2",
        "--grid",
        "50,400",
        "--trials",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    assert!(status.stdout.is_empty());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# generated_at="));
    assert_eq!(
        lines.next().unwrap(),
        "q,d,poly,trial,seed,e_size,f_size,ratio,delta,delta_over_q,falconer,erdos,easy,pinned,missing"
    );
    let rows: Vec<&str> = lines.take_while(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 6);
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("scan.csv.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["rows"], 6);
    assert!(summary.get("generated_at").is_some());
}

#[test]
fn deterministic_drops_timestamps() {
    let args = [
        "pinned",
        "--q",
        "7",
        "--poly",
        "x1^2+x2^2",
        "--setE",
        "random:12",
        "--setF",
        "random:6",
        "--seed",
        "9",
    ];
    let a = ffdist(&[&args[..], &["--deterministic"]].concat());
    let b = ffdist(&[&args[..], &["--deterministic"]].concat());
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.starts_with(b"pin,point,size,above_half\n"));
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 7);
}

#[test]
fn remaining_subcommands_run() {
    let phase = ffdist(&["phase", "--q", "7", "--poly", "x1^2+x2^3"]);
    assert!(phase.status.success());
    assert!(json(&phase)["max_magnitude"].as_f64().unwrap() <= 14.0 + 1e-9);
    let lift = ffdist(&["lift", "--q", "7", "--poly", "x1^2", "--d", "1"]);
    assert_eq!(json(&lift)["lifted"], "x1^2 + 6*x2");
    assert_eq!(json(&lift)["fibers_exact"], true);
    let weil = ffdist(&["weil", "--q", "7", "--poly", "x1^2"]);
    assert!((json(&weil)["magnitude"].as_f64().unwrap() - 7f64.sqrt()).abs() < 1e-9);
    let fourier = ffdist(&["fourier-check", "--q", "5", "--d", "2", "--trials", "2"]);
    assert!(fourier.status.success());
    let decay = ffdist(&[
        "decay",
        "--q",
        "13",
        "--poly",
        "x1^2+x2^2",
        "--t",
        "0",
        "--deterministic",
    ]);
    let text = String::from_utf8(decay.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().ends_with("fallback,true"));
}
