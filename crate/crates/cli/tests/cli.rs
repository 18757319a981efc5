use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lambda-scope"))
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    files
}

#[test]
fn csv_bodies_do_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "grid.json",
        r#"{"Omega_d_MHz": [0, 5, 10, 15, 20], "omega_s_GHz": [10.0, 10.03, 10.05, 10.07, 10.1],
            "omega_d_GHz": [4.832, 4.841]}"#,
    );
    for workers in ["1", "4"] {
        let out = tmp.path().join(format!("w{workers}"));
        for cmd in ["dressed-rates", "reflection-map"] {
            let o = run(&[cmd, "--workers", workers], &cfg, &out);
            assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
    }
    let one = csv_files(&tmp.path().join("w1"));
    let many = csv_files(&tmp.path().join("w4"));
    assert_eq!(one.len(), 3);
    for (a, b) in one.iter().zip(&many) {
        assert_eq!(a.file_name(), b.file_name());
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{}", a.display());
    }
}

#[test]
fn efficiency_bands_do_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bands.json",
        r#"{"omega_d_GHz": [4.832], "omega_s_GHz": [10.045, 10.05, 10.055], "dt": 0.25}"#,
    );
    let mut bodies = Vec::new();
    for workers in ["1", "3"] {
        let out = tmp.path().join(format!("w{workers}"));
        let o = run(&["efficiency", "--panels", "bands", "--workers", workers], &cfg, &out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        bodies.push(fs::read(out.join("fig4c_efficiency_bands.csv")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn every_csv_declares_units_first() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"Omega_d_MHz": [0, 10], "omega_s_GHz": [10.0, 10.05], "Delta_t_ns": [100, 500, 1000]}"#,
    );
    let out = tmp.path().join("out");
    for cmd in ["dressed-rates", "reflection-map", "appendix"] {
        let o = run(&[cmd], &cfg, &out);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let files = csv_files(&out);
    assert_eq!(files.len(), 4);
    for f in files {
        let text = fs::read_to_string(&f).unwrap();
        assert!(text.starts_with("# units: "), "{}", f.display());
    }
}

#[test]
fn summary_carries_tolerances() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"Omega_d_MHz": [0, 10, 20]}"#);
    let out = tmp.path().join("out");
    assert!(run(&["dressed-rates"], &cfg, &out).status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("dressed-rates.summary.json")).unwrap()).unwrap();
    let imp = &summary["headlines"][0];
    assert_eq!(imp["tolerance"], "10.75 ± 0.2");
    assert_eq!(imp["within"], true);
    assert_eq!(summary["dt_ns"], 0.1);
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("absent.json");
    assert_eq!(run(&["dressed-rates"], &missing, tmp.path()).status.code(), Some(2));

    let no_flag = bin().arg("appendix").output().unwrap();
    assert_eq!(no_flag.status.code(), Some(2));

    let unknown = write_config(tmp.path(), "u.json", r#"{"omega_dd": [4.8]}"#);
    assert_eq!(run(&["appendix"], &unknown, tmp.path()).status.code(), Some(2));

    let empty = write_config(tmp.path(), "e.json", r#"{"l_ns": []}"#);
    assert_eq!(run(&["appendix"], &empty, tmp.path()).status.code(), Some(2));

    let outside = write_config(tmp.path(), "o.json", r#"{"omega_d_GHz": [4.7]}"#);
    let o = run(&["dressed-rates"], &outside, tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nesting window"));

    let o = run(&["appendix", "--nb-max", "0"], &write_config(tmp.path(), "d.json", "{}"), tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_refinement_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "coarse.json",
        r#"{"n_b": [0.05], "l_ns": [400], "Delta_t_ns": [200], "t_end_ns": 1000, "dt": 1.7}"#,
    );
    let o = run(&["pulse-response"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("convergence"));
}

#[test]
fn stronger_capture_coupling_moves_the_match_out_of_band() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "broken.json",
        r#"{"params": {"omega_bar_a": 10.0, "omega_bar_b": 12.0, "omega_bar_q": 5.0, "g_a": 0.55, "g_b": 0.4,
            "kappa_a": 20.0, "kappa_b": 46.0, "gamma": 0.01, "n_a_max": 3, "n_b_max": 3},
            "Omega_d_MHz": [0, 10]}"#,
    );
    let out = tmp.path().join("out");
    let o = run(&["dressed-rates"], &cfg, &out);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("OUT OF BAND"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("dressed-rates.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["headlines"][0]["within"], false);
}

/// Data rows of an emitted CSV as numbers; blank fields become NaN.
fn read_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

#[test]
fn reflection_approaches_unity_away_from_the_band() {
    let tmp = tempfile::tempdir().unwrap();
    let carriers: Vec<String> = (0..=20).map(|k| format!("{}", 10.1 + 0.01 * k as f64)).collect();
    let cfg = write_config(
        tmp.path(),
        "r.json",
        &format!(r#"{{"Omega_d_MHz": [10.7487], "omega_s_GHz": [{}]}}"#, carriers.join(",")),
    );
    let out = tmp.path().join("out");
    assert!(run(&["reflection-map"], &cfg, &out).status.success());
    let rows = read_rows(&out.join("fig2d_reflection_wd4.832.csv"));
    let abs: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    assert!(abs.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{abs:?}");
    assert!(1.0 - abs[abs.len() - 1] < 1e-3);
}

#[test]
fn appendix_curves_peak_then_decline() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert!(run(&["appendix"], &write_config(tmp.path(), "a.json", "{}"), &out).status.success());
    let rows = read_rows(&out.join("figS_eta_comparison.csv"));
    for life in [3.0, 6.0, 16.0] {
        let curve: Vec<&Vec<f64>> = rows.iter().filter(|r| r[1] == life).collect();
        for col in [2, 3] {
            let ys: Vec<f64> = curve.iter().map(|r| r[col]).collect();
            let k = ys.iter().enumerate().fold(0, |b, (i, &y)| if y > ys[b] { i } else { b });
            assert!(k > 0 && k + 1 < ys.len(), "no interior maximum at {life} us");
            assert!(ys[ys.len() - 1] < ys[k]);
        }
    }

    let near_zero = write_config(tmp.path(), "z.json", r#"{"Delta_t_ns": [1e-6]}"#);
    let out0 = tmp.path().join("zero");
    assert!(run(&["appendix"], &near_zero, &out0).status.success());
    for r in read_rows(&out0.join("figS_eta_comparison.csv")) {
        assert!((r[3] - 0.5).abs() < 1e-3, "eta2 = {}", r[3]);
    }
}
