use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "level,h,M,q,N_omega,N_total,energy_error,eoc,wall_ms";

fn fracdiff(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracdiff")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const INTERVAL: &str = r#"{"problem": {"s": 0.5, "domain": {"interval": [0, 1]}, "forcing": {"constant": 1.0}},
    "method": "p1_uniform", "levels": [2, 4]}"#;

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "study.json", INTERVAL);
    for out in ["a.csv", "b.csv"] {
        let o = fracdiff(&["study", "study.json", "--method", "hp_in_y", "--no-timing", "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1].ends_with(",,0.0"));
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "study.json", INTERVAL);
    let o = fracdiff(&["study", "study.json", "--levels", "3..4", "--s", "0.25", "--jobs", "1", "--no-timing"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let levels: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(levels, ["3", "4"]);
}

#[test]
fn spec_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad_s.json", &INTERVAL.replace("0.5", "1.5"));
    write(dir.path(), "bad_json.json", "{\"problem\": ");
    write(dir.path(), "bad_method.json", &INTERVAL.replace(r#"{"interval": [0, 1]}"#, r#""l_shape""#).replace("p1_uniform", "hp_full_1d"));
    for args in [
        &["study", "bad_s.json"][..],
        &["study", "bad_json.json"],
        &["study", "bad_method.json"],
        &["study", "missing.json"],
        &["study", "bad_s.json", "--levels", "4"],
    ] {
        let o = fracdiff(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn unresolved_reference_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let spec = INTERVAL.replace(r#""levels": [2, 4]"#, r#""levels": [2, 4], "reference": {"mode": "fine_solve", "extra_levels": 1}"#);
    write(dir.path(), "study.json", &spec);
    let o = fracdiff(&["study", "study.json"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reference"));
}

#[test]
fn profile_of_zero_forcing_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "zero.json", &INTERVAL.replace("1.0", "0.0").replace("p1_uniform", "hp_full_1d"));
    let o = fracdiff(&["profile", "zero.json", "--level", "3", "--points", "5"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "dist,value");
    assert_eq!(rows.len(), 6);
    for r in &rows[1..] {
        let v: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.0);
    }
}

#[test]
fn profile_slope_near_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", &INTERVAL.replace("0.5", "0.75").replace("p1_uniform", "hp_full_1d"));
    let o = fracdiff(&["profile", "p.json", "--level", "6", "--out", "p.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8(o.stderr).unwrap();
    let slope: f64 = err.trim().strip_prefix("log-log slope ").unwrap().parse().unwrap();
    assert!((0.85..=1.1).contains(&slope), "slope {slope}");
    assert_eq!(std::fs::read_to_string(dir.path().join("p.csv")).unwrap().lines().count(), 12);
}
