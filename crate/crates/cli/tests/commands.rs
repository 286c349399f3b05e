use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn vdbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdbf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn heisenberg(rows: usize, cols: usize, boundary: &str, extra: &str) -> String {
    format!(
        "version = 1\n{extra}\n[model]\nkind = \"heisenberg\"\nrows = {rows}\ncols = {cols}\nboundary = \"{boundary}\"\n"
    )
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn two_site_exact_limit() {
    let tmp = TempDir::new().unwrap();
    let body = heisenberg(1, 2, "open", "") + "[vdbf]\nepsilon = 0.0\ngen_clip = 0.0\n";
    let cfg = write_config(&tmp, "c.toml", &body);
    let out = tmp.path().join("run");
    let o = vdbf(&["run", &cfg, "--output-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert!((s["corrected_energy"].as_f64().unwrap() + 0.75).abs() < 1e-9);
    assert!((s["exact_energy"].as_f64().unwrap() + 0.75).abs() < 1e-9);
    for f in [
        "config.toml",
        "trajectory.csv",
        "iterations.csv",
        "extrapolation.txt",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn config_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let hubbard = "version = 1\n[model]\nkind = \"hubbard\"\nrows = 1\ncols = 2\nboundary = \"open\"\nt = 1.0\nu = 1.0\n";
    let o = vdbf(&["run", &write_config(&tmp, "h.toml", hubbard)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.reference_occupation"));

    let unknown = heisenberg(1, 4, "open", "") + "[vdbf]\nepsilonn = 1e-3\n";
    let o = vdbf(&["run", &write_config(&tmp, "u.toml", &unknown)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilonn"));

    let o = vdbf(&[
        "run",
        &write_config(&tmp, "n.toml", &heisenberg(1, 4, "open", "")),
        "--n-rots",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runs_are_deterministic_and_replayable_from_resolved_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "c.toml", &heisenberg(1, 6, "periodic", ""));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(vdbf(&[
        "run",
        &cfg,
        "--epsilon",
        "1e-3",
        "--output-dir",
        a.to_str().unwrap()
    ])
    .status
    .success());
    // The resolved config records the override, so no flag is needed here.
    let resolved = a.join("config.toml");
    assert!(fs::read_to_string(&resolved)
        .unwrap()
        .contains("epsilon = 0.001"));
    let o = vdbf(&[
        "run",
        resolved.to_str().unwrap(),
        "--output-dir",
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success());

    let (ra, rb) = (
        csv_rows(&a.join("trajectory.csv")),
        csv_rows(&b.join("trajectory.csv")),
    );
    assert_eq!(ra.len(), rb.len());
    for (x, y) in ra.iter().zip(&rb).skip(1) {
        for (col, (u, v)) in x.iter().zip(y).enumerate() {
            if col == 10 {
                continue;
            }
            match (u.parse::<f64>(), v.parse::<f64>()) {
                (Ok(p), Ok(q)) => assert!((p - q).abs() <= 1e-10, "{u} vs {v}"),
                _ => assert_eq!(u, v),
            }
        }
    }
}

#[test]
fn wall_cap_exits_three_with_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "c.toml",
        &heisenberg(1, 8, "periodic", "max_wall_time = 1e-9"),
    );
    let out = tmp.path().join("run");
    let o = vdbf(&["run", &cfg, "--output-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(summary(&out)["termination"], "wall_time_exceeded");
}

#[test]
fn single_threshold_sweep() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "c.toml", &heisenberg(1, 6, "open", ""));
    let out = tmp.path().join("sweep");
    let o = vdbf(&[
        "sweep",
        &cfg,
        "--epsilons",
        "1e-2",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("eps_1e-2").join("summary.json").exists());
    let report = fs::read_to_string(out.join("sweep_report.txt")).unwrap();
    assert!(report.contains("insufficient data"), "{report}");
    assert_eq!(csv_rows(&out.join("sweep.csv")).len(), 2);
}

#[test]
fn flow_on_diagonal_hamiltonian_is_constant() {
    let tmp = TempDir::new().unwrap();
    let body = heisenberg(1, 4, "open", "") + "coupling = 0.0\n";
    let cfg = write_config(&tmp, "c.toml", &body);
    let out = tmp.path().join("flow");
    let o = vdbf(&[
        "flow",
        &cfg,
        "--k",
        "4",
        "--ds",
        "1e-2",
        "--steps",
        "20",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("flow_k4.csv"));
    assert_eq!(rows.len(), 22);
    assert!(rows[1..].iter().all(|r| r[1..] == rows[1][1..]));
}

#[test]
fn flow_rejects_large_models() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "c.toml", &heisenberg(1, 12, "open", ""));
    let o = vdbf(&["flow", &cfg, "--ds", "1e-3", "--steps", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn correlations_of_the_neel_state() {
    // With no rotations the state is the Néel product state: the connected correlator
    // vanishes for distinct sites and a site with itself gives 3/4 − 1/4.
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "c.toml",
        &heisenberg(1, 4, "open", "max_wall_time = 1e-9"),
    );
    let out = tmp.path().join("run");
    assert_eq!(
        vdbf(&["run", &cfg, "--output-dir", out.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    let o = vdbf(&["correlate", out.to_str().unwrap(), "--pairs", "1-1,1-2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("correlations.csv"));
    let value = |k: usize| rows[k][3].parse::<f64>().unwrap();
    assert!((value(1) - 0.5).abs() < 1e-12);
    assert!(value(2).abs() < 1e-12);
    assert_eq!(rows[2][2], "1");
}

#[test]
fn correlations_after_a_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "c.toml", &heisenberg(1, 6, "periodic", ""));
    let out = tmp.path().join("run");
    assert!(vdbf(&[
        "run",
        &cfg,
        "--epsilon",
        "1e-4",
        "--output-dir",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let o = vdbf(&["correlate", out.to_str().unwrap(), "--from", "1"]);
    assert!(o.status.success());
    let rows = csv_rows(&out.join("correlations.csv"));
    assert_eq!(rows.len(), 6);
    let nearest = rows[1][3].parse::<f64>().unwrap();
    assert!(nearest < -0.25, "{nearest}");
    // Periodic distances fold back past the midpoint.
    let distances: Vec<&str> = rows[1..].iter().map(|r| r[2].as_str()).collect();
    assert_eq!(distances, ["1", "2", "3", "2", "1"]);

    let missing = vdbf(&["correlate", tmp.path().to_str().unwrap(), "--pairs", "1-2"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn extrapolate_refits_a_finished_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "c.toml", &heisenberg(1, 8, "periodic", ""));
    let out = tmp.path().join("run");
    assert!(vdbf(&[
        "run",
        &cfg,
        "--epsilon",
        "1e-3",
        "--output-dir",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let report = tmp.path().join("refit.txt");
    let o = vdbf(&[
        "extrapolate",
        out.to_str().unwrap(),
        "--min-window",
        "4",
        "--output",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(report).unwrap();
    assert!(text.starts_with("[corrected]") && text.contains("estimate_per_site"));
}

#[test]
fn committed_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        // An empty sweep list is a config error, so a bogus file would fail here too.
        let o = vdbf(&["sweep", path.to_str().unwrap(), "--epsilons=-1"]);
        assert_eq!(o.status.code(), Some(2));
        let stderr = String::from_utf8_lossy(&o.stderr);
        assert!(
            stderr.contains("sweep.epsilons"),
            "{}: {stderr}",
            path.display()
        );
        n += 1;
    }
    assert!(n >= 5);
}
