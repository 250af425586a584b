use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gmppt"));
    c.env_remove("GMPPT_OUT_DIR");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn curve_max_row_is_global_peak() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["curve", "--scenario"])
        .arg(scenario("array3x7.cfg"))
        .args(["--dv", "0.25", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    ok(&out);
    let csv = fs::read_to_string(dir.path().join("array3x7_psc_curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("v,i,p"));
    let (v, p) = lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0], f[2])
        })
        .fold((0.0, f64::MIN), |a, x| if x.1 > a.1 { x } else { a });
    assert!((v - 99.0).abs() <= 3.0, "{v}");
    assert!(p > 1600.0 && p < 1800.0, "{p}");
}

#[test]
fn track_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("track")
        .arg("--scenario")
        .arg(scenario("array2x8.cfg"))
        .env("GMPPT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    let stdout = ok(&out);
    for key in ["v_gmpp=", "p_gmpp=", "samples_used=", "elapsed_ms=", "oracle_p=", "efficiency="] {
        assert!(stdout.contains(key), "{key} missing in {stdout}");
    }
    let trace = fs::read_to_string(dir.path().join("array2x8_proposed_trace.csv")).unwrap();
    assert!(trace.starts_with("t_ms,v,i,p,phase\n"));
    let summary = fs::read_to_string(dir.path().join("array2x8_proposed_summary.txt")).unwrap();
    let s = gmppt::tracker::Summary::parse(&summary).unwrap();
    assert_eq!(trace.lines().count() - 1, s.samples_used);
    assert_eq!(s.elapsed_ms, 20.0 * s.samples_used as f64);
}

#[test]
fn compare_shows_proposed_faster_than_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["compare", "--scenario"])
        .arg(scenario("array2x8.cfg"))
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    let table = ok(&out);
    assert!(table.contains("proposed") && table.contains("baseline11"));
    let csv = fs::read_to_string(dir.path().join("array2x8_compare.csv")).unwrap();
    let samples: Vec<usize> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(samples.len(), 2);
    assert!(samples[0] < samples[1], "{samples:?}");
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = bin()
            .args(["sweep", "--count", "10", "--seed", "1", "--out-dir"])
            .arg(d.path())
            .output()
            .unwrap();
        ok(&out);
    }
    for f in ["sweep_1_10.csv", "sweep_1_10_summary.txt"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn calibrate_prints_parameters() {
    let out = bin().arg("calibrate").output().unwrap();
    let s = ok(&out);
    for key in ["i_pv=", "i_o=", "a_vt=", "r_s=", "r_sh="] {
        assert!(s.contains(key));
    }
}

#[test]
fn infeasible_datasheet_fails_with_diagnostic() {
    let out = bin()
        .args(["calibrate", "--i-mpp", "8.69", "--v-mpp", "29.5"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn malformed_config_is_rejected_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "[array]\nn_parallel = two\n").unwrap();
    let out = bin().args(["compare", "--scenario"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("array.n_parallel"), "{err}");
}

#[test]
fn unknown_flag_is_rejected() {
    let out = bin().args(["sweep", "--bogus"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn missing_scenario_file_is_reported() {
    let out = bin()
        .args(["curve", "--scenario", "/nonexistent/x.cfg"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/x.cfg"));
}
