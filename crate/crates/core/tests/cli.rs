use std::process::{Command, Output};

use bliss_moser::functionals::supercritical_lower_bound;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bliss-moser"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV as numeric columns (empty cells become NaN).
fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|c| c.parse().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

#[test]
fn constants_rows() {
    let o = run(&["constants", "--N", "2", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(s.lines().next().unwrap(), "N,k,C,kC,C_N_limit");
    assert!((rows(&s)[0][2] - 1.5).abs() < 1e-13);
}

#[test]
fn constants_approach_e() {
    let o = run(&["constants", "--N", "2", "--k", "1e2,1e4,1e6"]);
    let kc: Vec<f64> = rows(&stdout(&o)).iter().map(|r| r[3]).collect();
    let gaps: Vec<f64> = kc.iter().map(|x| (x - std::f64::consts::E).abs()).collect();
    assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{kc:?}");
}

#[test]
fn dimension_one_is_a_usage_error() {
    let o = run(&["constants", "--N", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("N must be ≥ 2"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(
        run(&["sweep", "--N", "2", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["sweep", "--N", "2", "--j", "1e2:1e8"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["sweep", "--N", "2", "--perturb", "cubic"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn critical_sweep_stays_above_e_plus_one() {
    let o = run(&["sweep", "--gamma", "1", "--N", "2", "--j", "1e2:1e8:x10"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(s.lines().next().unwrap(), "j,value,converged,model");
    for r in rows(&s).iter().filter(|r| r[0] >= 1e5) {
        assert!(r[1] >= std::f64::consts::E + 1.0 - 0.05, "{r:?}");
    }
}

#[test]
fn supercritical_beta_sweep_exceeds_model() {
    let o = run(&["sweep", "--beta", "1.5", "--N", "2", "--j", "1e1:1e4:x10"]);
    let rs = rows(&stdout(&o));
    assert_eq!(rs.len(), 4);
    for r in rs {
        assert!(r[1] >= r[3], "{r:?}");
        assert_eq!(r[3], supercritical_lower_bound(r[0], 0.5).unwrap());
    }
}

#[test]
fn sweep_output_is_deterministic_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = run(&[
            "sweep",
            "--gamma",
            "1.5",
            "--N",
            "3",
            "--j",
            "1e2,1e3,1e4",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn eval_files() {
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.json");
    std::fs::write(&zero, r#"{"nodes":[[0,0],[1,0]]}"#).unwrap();
    let o = run(&[
        "eval",
        "--fn",
        zero.to_str().unwrap(),
        "--beta",
        "1",
        "--N",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(
        s.lines().next().unwrap(),
        "value,error_estimate,panels,converged"
    );
    assert_eq!(rows(&s)[0][0], 1.0);

    let w4 = dir.path().join("w4.json");
    std::fs::write(&w4, r#"{"nodes":[[0,0],[0.25,0.5],[1,0.5]]}"#).unwrap();
    let o = run(&[
        "eval",
        "--fn",
        w4.to_str().unwrap(),
        "--beta",
        "0",
        "--N",
        "2",
    ]);
    assert!((rows(&stdout(&o))[0][0] - 1.0).abs() < 1e-14);

    let w100 = dir.path().join("w100.json");
    let h = 0.01f64.sqrt();
    std::fs::write(&w100, format!(r#"{{"nodes":[[0,0],[0.01,{h}],[1,{h}]]}}"#)).unwrap();
    let o = run(&[
        "eval",
        "--fn",
        w100.to_str().unwrap(),
        "--beta",
        "1.2",
        "--N",
        "2",
    ]);
    assert!(rows(&stdout(&o))[0][0] >= supercritical_lower_bound(100.0, 0.2).unwrap());

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"nodes":[[0,1],[1,0]]}"#).unwrap();
    assert_eq!(
        run(&["eval", "--fn", bad.to_str().unwrap(), "--N", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["eval", "--fn", "/nonexistent/f.json", "--N", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn series_bound_converges() {
    let o = run(&["series", "--N", "2", "--beta", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(s.lines().next().unwrap(), "k,term,partial_sum,ratio");
    assert!(String::from_utf8_lossy(&o.stderr).contains("tail_converged=true"));
    let rs = rows(&s);
    assert_eq!(rs.len(), 100);
    assert!(rs[0][3].is_nan());
}

#[test]
fn supercritical_optimization_detects_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("best.json");
    let o = run(&[
        "optimize",
        "--gamma",
        "1.5",
        "--N",
        "2",
        "--segments",
        "64",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(
        s.lines()
            .nth(1)
            .unwrap()
            .starts_with("divergence_detected,"),
        "{s}"
    );
    let f: bliss_moser::GridFn =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(f.segments(), 64);
}

#[test]
fn optimize_rejects_conflicting_starts() {
    let o = run(&["optimize", "--N", "2", "--seed", "1", "--fn", "x.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_lemmas_passes() {
    let o = run(&["verify", "--suite", "lemmas"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("0 violations"), "{s}");
    assert!(!s.contains("FAIL"));
    assert_eq!(
        run(&["verify", "--suite", "nothing"]).status.code(),
        Some(2)
    );
}
