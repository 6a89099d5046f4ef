use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn morrey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morrey"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Compares `actual` with the named golden file; `UPDATE_GOLDEN=1` rewrites it.
fn check(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, want, "golden mismatch: {name}");
}

fn run_golden(name: &str, args: &[&str], code: i32) -> Output {
    let o = morrey(args);
    assert_eq!(o.status.code(), Some(code), "{args:?}: {}", stderr(&o));
    check(name, &stdout(&o));
    o
}

#[test]
fn classify_nuclear_sequence_example() {
    run_golden(
        "classify_nuclear.txt",
        &["classify", "N:s=2,u=2,p=1,q=1,d=1", "N:s=0,u=4,p=2,q=1,d=1"],
        0,
    );
}

#[test]
fn classify_nuclear_example_json() {
    let o = run_golden(
        "classify_nuclear.json",
        &[
            "--json",
            "classify",
            "N:s=2,u=2,p=1,q=1,d=1",
            "N:s=0,u=4,p=2,q=1,d=1",
        ],
        0,
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["nuclear"], "yes");
    assert_eq!(v["threshold_nuclear"], "1");
}

#[test]
fn classify_bmo_boundary() {
    run_golden(
        "classify_bmo.txt",
        &["classify", "Btau:s=1,p=2,tau=1/4,q=2,d=1", "bmo:d=1"],
        0,
    );
    let o = run_golden(
        "classify_bmo.json",
        &["--json", "classify", "N:s=1,u=2,p=2,q=2,d=1", "bmo:d=1"],
        0,
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["nuclear"], "no");
    assert_eq!(v["boundary_nuclear"], true);
}

#[test]
fn malformed_spec_exits_with_parse_error() {
    for bad in [
        "N:s=1,u=2,p=x,q=2,d=1",
        "N:s=1,u=2",
        "Q:s=1",
        "N:s=1,u=1,p=2,q=2,d=1",
    ] {
        let o = morrey(&["classify", bad, "bmo:d=1"]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(stdout(&o).is_empty());
        assert!(stderr(&o).starts_with("error:"), "{bad}: {}", stderr(&o));
    }
    let o = morrey(&["classify", "N:s=1,u=2,p=x,q=2,d=1", "bmo:d=1"]);
    check("classify_malformed.stderr", &stderr(&o));
}

#[test]
fn strict_flag_reports_open_verdicts() {
    let args = ["classify", "N:s=1,u=4,p=2,q=2,d=1", "Lr:r=2,d=1"];
    assert_eq!(morrey(&args).status.code(), Some(0));
    let mut strict = vec!["--strict"];
    strict.extend(args);
    run_golden("classify_lr_strict.txt", &strict, 3);
    let ok = morrey(&[
        "--strict",
        "classify",
        "N:s=2,u=2,p=1,q=1,d=1",
        "N:s=0,u=4,p=2,q=1,d=1",
    ]);
    assert_eq!(ok.status.code(), Some(0));
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn region_single_node_matches_classify() {
    let o = run_golden(
        "region_single.csv",
        &[
            "region",
            "N:s=2,u=2,p=1,q=1,d=1",
            "N:s=sweep(0..0,1),u=sweep(4..4,1),p=2,q=1,d=1",
        ],
        0,
    );
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    let c = morrey(&[
        "--json",
        "classify",
        "N:s=2,u=2,p=1,q=1,d=1",
        "N:s=0,u=4,p=2,q=1,d=1",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_eq!(rows[0][2], v["compact"].as_str().unwrap());
    assert_eq!(rows[0][3], v["nuclear"].as_str().unwrap());
    assert_eq!(rows[0][4], v["threshold_compact"].as_str().unwrap());
    assert_eq!(rows[0][5], v["threshold_nuclear"].as_str().unwrap());
}

fn frac(t: &str) -> f64 {
    match t.split_once('/') {
        Some((a, b)) => a.parse::<f64>().unwrap() / b.parse::<f64>().unwrap(),
        None => t.parse().unwrap(),
    }
}

#[test]
fn region_grid_is_row_major_and_nested() {
    let args = [
        "region",
        "N:s=2,u=2,p=1,q=1,d=1",
        "N:s=sweep(0..2,5),u=isweep(1/8..1/2,4),p=2,q=1,d=1",
    ];
    let o = run_golden("region_grid.csv", &args, 0);
    let text = stdout(&o);
    assert!(text.starts_with("x,y,compact,nuclear,threshold_compact,threshold_nuclear\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 20);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[0], rows[k / 4 * 4][0], "x is the outer index");
        assert!(
            r[3] != "yes" || r[2] == "yes",
            "nuclear outside compact region: {r:?}"
        );
    }
    for y in 0..4 {
        let column: Vec<&Vec<String>> = rows.iter().skip(y).step_by(4).collect();
        for w in column.windows(2) {
            assert!(frac(&w[0][0]) < frac(&w[1][0]));
            assert!(
                !(w[0][3] == "no" && w[1][3] == "yes"),
                "frontier not monotone in s2"
            );
        }
    }
    assert_eq!(stdout(&morrey(&args)), text);
}

#[test]
fn region_rejects_non_numeric_sweep() {
    let o = morrey(&[
        "region",
        "N:s=1,u=2,p=2,q=2,d=sweep(1..2,2)",
        "N:s=sweep(0..1,2),u=2,p=2,q=2,d=1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_tong_summary() {
    let o = run_golden("verify_tong.txt", &["verify", "tong"], 0);
    assert!(stdout(&o).ends_with("cases, 0 violated\n"));
}

#[test]
fn verify_tong_json_report() {
    let o = run_golden("verify_tong.json", &["--json", "verify", "tong"], 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], "morrey-verify/1");
    assert_eq!(v["seed"], 0);
    let case = &v["cases"][0];
    for key in ["id", "params", "formula", "lower", "upper", "status"] {
        assert!(case.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn verify_all_with_zero_budget_skips_everything() {
    let o = run_golden("verify_budget0.txt", &["verify", "all", "--budget", "0"], 0);
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn verify_nuclear_is_reproducible() {
    let dir = std::env::temp_dir().join(format!("morrey-golden-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let (a, b) = (dir.join("a.json"), dir.join("b.json"));
    for path in [&a, &b] {
        let o = morrey(&[
            "verify",
            "nuclear",
            "--seed",
            "42",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(!x.is_empty());
    assert_eq!(x, y);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn tables() {
    run_golden("table_bmo.txt", &["table", "bmo"], 0);
    run_golden("table_lr.txt", &["table", "lr"], 0);
    run_golden("table_same_tau.txt", &["table", "same-tau"], 0);
}

#[test]
fn printed_specs_reparse() {
    for spec in [
        "N:s=1,u=2,p=3/2,q=2,d=1",
        "Btau:s=1,p=2,tau=1/4,q=inf,d=2",
        "rhoB:s=1,p=2,rho=-1,q=1,d=3",
        "Lr:r=2,d=1",
        "bmo:d=2",
    ] {
        let o = morrey(&["--json", "classify", spec, spec]);
        let text = stdout(&o);
        if o.status.code() == Some(0) {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["source"], spec);
        }
    }
}
