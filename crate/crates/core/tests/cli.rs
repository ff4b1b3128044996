use std::path::Path;
use std::process::{Command, Output};

use projeq::catalog;
use projeq::pairfile::write_pair_file;

fn projeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projeq"))
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

fn without_timing(report: &str) -> &str {
    report.split("\n[timing]").next().unwrap()
}

fn report(args: &[&str]) -> (i32, toml::Value, String) {
    let out = projeq(args);
    let text = stdout(&out);
    let value: toml::Value = toml::from_str(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    (out.status.code().unwrap(), value, text)
}

fn summary_max(report: &toml::Value, check: &str) -> f64 {
    report["summary"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["check"].as_str() == Some(check))
        .unwrap_or_else(|| panic!("no summary for {check}"))["max_residual"]
        .as_float()
        .unwrap()
}

#[test]
fn verify_equivalent_entries_exit_zero() {
    for entry in catalog::entries().into_iter().filter(|e| e.expected_equivalent) {
        let (code, r, _) = report(&["verify", entry.name]);
        assert_eq!(code, 0, "{}", entry.name);
        assert_eq!(r["summary"]["verdict"].as_str(), Some("pass"));
        assert_eq!(r["schema_version"].as_integer(), Some(1));
        assert!(summary_max(&r, "commutator") <= 1e-7);
    }
}

#[test]
fn verify_control_exits_one_with_flagged_basic_residuals() {
    let (code, r, _) = report(&["verify", "control_nonequiv"]);
    assert_eq!(code, 1);
    assert_eq!(r["summary"]["verdict"].as_str(), Some("fail"));
    let basic: Vec<&toml::Value> = r["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|rec| rec["check"].as_str() == Some("basic"))
        .collect();
    assert_eq!(basic.len(), 20);
    let flagged = basic
        .iter()
        .filter(|rec| rec["residual"].as_float().unwrap() > 1e-2 && rec["verdict"].as_str() == Some("fail"))
        .count();
    assert!(flagged >= 18, "{flagged}");
}

#[test]
fn verify_trivial_commutator_subset() {
    let (code, r, _) = report(&["verify", "trivial", "--checks", "commutator", "--points", "5"]);
    assert_eq!(code, 0);
    let checks = r["summary"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert!(summary_max(&r, "commutator") <= 1e-11);
    assert_eq!(r["config"]["points"].as_integer(), Some(5));
}

#[test]
fn negative_t_grid_and_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dini.toml");
    let out = projeq(&[
        "verify",
        "dini",
        "--points",
        "3",
        "--t-grid",
        "-1.5,0,2",
        "--checks",
        "killing,carter",
        "--report",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let r: toml::Value = toml::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let grid: Vec<f64> = r["config"]["t_grid"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_float().unwrap())
        .collect();
    assert_eq!(grid, vec![-1.5, 0.0, 2.0]);
    assert!(stderr(&out).contains("dini: PASS"));
}

fn write_file(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn malformed_pair_files_exit_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "unknown_ident.toml",
            "dim = 2\ncoords = [\"x\", \"y\"]\ng = [[\"1\"], [\"0\", \"1\"]]\ngbar = [[\"1\"], [\"0\", \"1 + q\"]]\ndomain = [[0, 1], [0, 1]]\n",
            "4:27",
        ),
        (
            "syntax.toml",
            "dim = 2\ncoords = [\"x\", \"y\"]\ng = [[\"1 +\"], [\"0\", \"1\"]]\ngbar = [[\"1\"], [\"0\", \"1\"]]\ndomain = [[0, 1], [0, 1]]\n",
            "3:",
        ),
        ("toml_syntax.toml", "dim = 2\ncoords = [\"x\", \"y\"\n", "3:"),
    ];
    for (name, text, position) in cases {
        let path = write_file(dir.path(), name, text);
        let out = projeq(&["verify", &path]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err = stderr(&out);
        assert!(err.contains(&format!("{path}:{position}")), "{name}: {err}");
    }
    let out = projeq(&["describe", &write_file(dir.path(), "again.toml", cases[0].1)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn input_errors_exit_two() {
    for args in [
        vec!["verify", "no_such_pair"],
        vec!["verify", "dini", "--points", "many"],
        vec!["verify", "dini", "--checks", "nonsense"],
        vec!["describe", "no_such_pair"],
        vec!["frobnicate"],
    ] {
        let out = projeq(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!stderr(&out).is_empty());
    }
}

#[test]
fn pair_file_path_matches_catalog_name() {
    let entry = catalog::get_entry("beltrami").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let text = write_pair_file(Some("beltrami_copy"), None, &entry.pair);
    let path = write_file(dir.path(), "copy.toml", &text);
    let args = ["--points", "4", "--checks", "basic,connection,poisson"];
    let (code, from_file, file_text) = report(&[&["verify", path.as_str()][..], &args].concat());
    let (_, _, catalog_text) = report(&[&["verify", "beltrami"][..], &args].concat());
    assert_eq!(code, 0);
    assert_eq!(from_file["pair"].as_str(), Some("beltrami_copy"));
    let strip = |t: &str| without_timing(t).replace("beltrami_copy", "beltrami");
    assert_eq!(strip(&file_text), strip(&catalog_text));
}

#[test]
fn list_shows_catalog() {
    let out = projeq(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() >= 6);
    for name in ["trivial", "trivial3", "scaled", "dini", "beltrami", "lorentz_dini", "control_nonequiv"] {
        assert!(lines.iter().any(|l| l.split_whitespace().next() == Some(name)), "{name}");
    }
}

/// `(point, eigenvalue strings, diagonalizable)` for each sample block.
fn describe_samples(text: &str) -> Vec<(Vec<f64>, Vec<String>, bool)> {
    let mut out = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next() {
        let Some(rest) = line.trim().strip_prefix("at (") else {
            continue;
        };
        let point = rest
            .trim_end_matches(')')
            .split(", ")
            .map(|v| v.parse().unwrap())
            .collect();
        let mut eig = Vec::new();
        let mut diag = None;
        for _ in 0..4 {
            let l = lines.next().unwrap().trim();
            if let Some(v) = l.strip_prefix("L eigenvalues:") {
                eig = v.split(',').map(|s| s.trim().to_string()).collect();
            }
            if let Some(v) = l.strip_prefix("L diagonalizable:") {
                diag = Some(v.trim() == "yes");
            }
        }
        out.push((point, eig, diag.unwrap()));
    }
    out
}

#[test]
fn describe_dini_eigenvalues_are_coordinates() {
    let out = projeq(&["describe", "dini"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("dimension: 2"));
    assert!(text.contains("g: (2, 0) Riemannian"));
    let samples = describe_samples(&text);
    assert_eq!(samples.len(), 5);
    for (p, eig, diag) in samples {
        // L = diag(x, y), so the characteristic polynomial is (t − x)(t − y)
        let (tr, det) = (p[0] + p[1], p[0] * p[1]);
        let disc = (tr * tr - 4.0 * det).sqrt();
        let roots = [(tr + disc) / 2.0, (tr - disc) / 2.0];
        let printed: Vec<f64> = eig.iter().map(|s| s.parse().unwrap()).collect();
        for (a, b) in printed.iter().zip(roots) {
            assert!((a - b).abs() < 2e-6, "{a} vs {b}");
        }
        assert!(diag);
    }
}

#[test]
fn describe_beltrami_both_positive_definite() {
    let out = projeq(&["describe", "beltrami", "--points", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("dimension: 2"));
    assert!(text.contains("g: (2, 0) Riemannian"));
    assert!(text.contains("gbar: (2, 0) Riemannian"));
    let pair = catalog::get_entry("beltrami").unwrap().pair;
    let samples = describe_samples(&text);
    assert_eq!(samples.len(), 8);
    for (p, _, _) in samples {
        for m in [pair.g(), pair.gbar()] {
            // Sylvester: leading principal minors positive
            let v = m.values_at(&p).unwrap();
            assert!(v[0] > 0.0 && v[0] * v[3] - v[1] * v[2] > 0.0);
        }
    }
}

#[test]
fn describe_jordan_reports_non_diagonalizable() {
    let out = projeq(&["describe", "jordan"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("Lorentzian"));
    let samples = describe_samples(&text);
    assert!(!samples.is_empty());
    for (_, eig, diag) in samples {
        assert_eq!(eig[0], eig[1]);
        assert!(!diag);
    }
    assert!(text.contains("L diagonalizable at 0 of 5 samples"));
}

#[test]
fn reports_are_deterministic_modulo_timing() {
    let args = ["verify", "lc3", "--points", "6", "--seed", "7"];
    let a = stdout(&projeq(&args));
    let b = stdout(&projeq(&args));
    assert!(a.contains("\n[timing]"));
    assert_eq!(without_timing(&a), without_timing(&b));
    let other = stdout(&projeq(&["verify", "lc3", "--points", "6", "--seed", "8"]));
    assert_ne!(without_timing(&a), without_timing(&other));
}

#[test]
fn parallel_and_serial_reports_match() {
    let base = ["verify", "control_nonequiv3", "--points", "6"];
    let serial = stdout(&projeq(&[&base[..], &["--jobs", "1"]].concat()));
    let parallel = stdout(&projeq(&[&base[..], &["--jobs", "4"]].concat()));
    assert_eq!(without_timing(&serial), without_timing(&parallel));
}
