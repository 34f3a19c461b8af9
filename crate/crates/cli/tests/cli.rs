use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rimflow_core::spectral::{read_field, sobolev_norm};
use rimflow_core::steady::expansion_hdelta;

fn rimflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rimflow")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn load(path: &Path) -> rimflow_core::SpectralField {
    read_field(std::io::BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

#[test]
fn spectrum_top_entry_on_a_long_cylinder() {
    let dir = tempfile::tempdir().unwrap();
    let out = rimflow(&[
        "spectrum",
        "--m",
        "1",
        "--gamma",
        "1",
        "--ell",
        "4.71238898",
        "--delta",
        "0",
        "-K",
        "8",
        "-L",
        "8",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("spectrum.csv"));
    assert_eq!(header, ["re", "im", "k_dominant", "l_dominant", "residual"]);
    let top = &rows[0];
    assert!((top[0] - 4.0 / 9.0 * 5.0 / 9.0).abs() < 1e-7, "{top:?}");
    assert_eq!((top[2], top[3]), (0.0, 1.0));
    assert!(rows.iter().skip(1).all(|r| r[0] <= 1e-10));
}

#[test]
fn simulate_on_the_manifold_is_steady_and_snapshots_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = rimflow(&[
        "simulate",
        "--gamma",
        "1",
        "--delta",
        "0",
        "--ell",
        "3.14159265358979",
        "--m",
        "1",
        "--init",
        "preset:manifold:a1=0.1,b=0.05",
        "--t-end",
        "10",
        "--out",
        d,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "mass", "energy", "min_h", "dist_M", "re_a1", "im_a1", "b"]);
    let first = &rows[0];
    for r in &rows {
        for c in 1..8 {
            assert!((r[c] - first[c]).abs() < 1e-9, "column {} drifted: {} vs {}", header[c], r[c], first[c]);
        }
    }
    assert!((first[5] - 0.1).abs() < 1e-15 && (first[7] - 0.05).abs() < 1e-15);

    let snap = dir.path().join("final.rff");
    let field = load(&snap);
    let again = tempfile::tempdir().unwrap();
    let init = format!("file:{}", snap.display());
    let out = rimflow(&["simulate", "--init", &init, "--t-end", "0.5", "--out", again.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&again.path().join("trajectory.csv"));
    assert_eq!(rows[0][5], field.get(1, 0).re);
    assert_eq!(rows[0][1], field.mean());
}

#[test]
fn steady_matches_the_expansion() {
    let dir = tempfile::tempdir().unwrap();
    let out = rimflow(&[
        "steady",
        "--m",
        "1",
        "--gamma",
        "1",
        "--ell",
        "1.5707963",
        "--delta",
        "0.01",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let h = load(&dir.path().join("steady_000.rff"));
    let exp = expansion_hdelta(1.0, 1.0, 0.01, *h.lattice()).unwrap();
    assert!(sobolev_norm(&(&h - &exp), 4.0) <= 10.0 * 1e-6);
    let (header, rows) = read_csv(&dir.path().join("steady.csv"));
    assert_eq!(&header[..3], ["delta", "residual", "newton_iters"]);
    assert!(rows[0][1] <= 1e-12);
}

#[test]
fn reduced_f_is_odd_in_the_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let out = rimflow(&[
        "reduced-f",
        "-K",
        "8",
        "-L",
        "8",
        "--a=-0.01,0.01",
        "--deltas",
        "0.01",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("reduced_f.csv"));
    assert_eq!(header, ["a", "delta", "f"]);
    assert!((rows[0][2] + rows[1][2]).abs() < 1e-10 * rows[1][2].abs().max(1e-12));
    assert!(rows[1][2] > 0.0);
}

#[test]
fn slow_ode_writes_the_trajectory_and_rejects_invalid_starts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = rimflow(&["slow-ode", "--a1", "0.05", "--tau-end", "1", "--out", d]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["tau", "re_a1", "im_a1", "b"]);
    let last = rows.last().unwrap();
    assert!((last[0] - 1.0).abs() < 1e-12);
    let rho = (last[1] * last[1] + last[2] * last[2]).sqrt();
    assert!(rho < 0.05 && rho > 0.05 * (-0.6f64).exp());
    assert!(rows.iter().all(|r| r[3] == 0.0));

    let out = rimflow(&["slow-ode", "--a1", "0.3", "--b", "0.45", "--out", d]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("positivity region"));
}

#[test]
fn phase_portrait_fig5_spirals_inward() {
    let dir = tempfile::tempdir().unwrap();
    let out = rimflow(&["phase-portrait", "--preset", "fig5", "--tau-end", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let index: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("portrait.json")).unwrap()).unwrap();
    let trajs = index["trajectories"].as_array().unwrap();
    assert_eq!(trajs.len(), 20);
    for t in trajs {
        assert_eq!(t["exit"], "completed");
        let (_, rows) = read_csv(&dir.path().join(t["file"].as_str().unwrap()));
        let radius: Vec<f64> = rows.iter().map(|r| r[1].hypot(r[2])).collect();
        assert!(radius.windows(2).all(|w| w[1] < w[0]));
    }
    let svg = fs::read_to_string(dir.path().join("portrait.svg")).unwrap();
    assert!(svg.contains(r#"viewBox="0 0 640 480""#));
}

#[test]
fn phase_portrait_fig6_writes_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let out = rimflow(&["phase-portrait", "--preset", "fig6", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let spread = |j: usize| {
        let (_, rows) = read_csv(&dir.path().join(format!("profile_{j}.csv")));
        let hs: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        hs.iter().copied().fold(f64::MIN, f64::max) - hs.iter().copied().fold(f64::MAX, f64::min)
    };
    assert!((spread(0) - 1.2).abs() < 1e-3);
    assert!(spread(1) < spread(0) && spread(2) < spread(1));
    assert!(dir.path().join("profiles.svg").exists());
}

#[test]
fn verify_single_check_and_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = rimflow(&["verify", "--only", "lambda_closed_form", "--json", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), 1);
    for key in ["name", "status", "measured", "expected", "tolerance", "detail", "seconds"] {
        assert!(entries[0].get(key).is_some(), "missing {key}");
    }
    assert_eq!(entries[0]["name"], "lambda_closed_form");
    assert_eq!(entries[0]["status"], "pass");
}

#[test]
fn verify_failure_exits_one() {
    let out = rimflow(&["verify", "--only", "critical_eigenvalue_drift"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("critical_eigenvalue_drift"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&rimflow(&["spectrum", "--gamma"])), 2);
    assert_eq!(code(&rimflow(&["frobnicate"])), 2);
    assert_eq!(code(&rimflow(&["verify", "--only", "no_such_check"])), 2);
    assert_eq!(code(&rimflow(&["simulate", "--init", "preset:wave"])), 2);
    assert_eq!(code(&rimflow(&["slow-ode", "--ell", "pi/2"])), 2);
    assert_eq!(code(&rimflow(&["spectrum", "--gamma", "-1"])), 2);
}

#[test]
fn rupture_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = rimflow(&[
        "simulate",
        "--init",
        "preset:manifold:a1=0.1",
        "--rupture-eps",
        "0.9",
        "--t-end",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# long cylinder\nell = 3pi/2\ngamma = 0.5\nK = 6\nL = 6\n").unwrap();
    let summary = dir.path().join("summary.json");
    let out = rimflow(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--gamma",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
        "--json",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(v["setup"]["gamma"], 1.0);
    assert_eq!(v["setup"]["k"], 6);
    assert!((v["setup"]["ell"].as_f64().unwrap() - 1.5 * std::f64::consts::PI).abs() < 1e-15);
    assert_eq!(v["unstable"], 1);

    fs::write(&cfg, "viscosity = 1\n").unwrap();
    assert_eq!(code(&rimflow(&["spectrum", "--config", cfg.to_str().unwrap()])), 2);
}
