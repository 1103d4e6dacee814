use std::path::Path;
use std::process::{Command, Output};

fn conical(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conical")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    let idx = header.split(',').position(|h| h == name).unwrap();
    rows(csv).iter().map(|r| r[idx].parse().unwrap()).collect()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn d3h_scan_has_zero_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d3h.csv");
    let o = conical(&["pes", "--mode", "d3h", "--steps", "12", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out);
    assert!(csv.lines().any(|l| l.starts_with("R,rho,theta,E0,E1,E2,gap,solver,converged,seed")));
    let gaps = column(&csv, "gap");
    assert_eq!(gaps.len(), 12);
    assert!(gaps.iter().all(|g| g.abs() < 1e-10));
}

#[test]
fn csv_echoes_effective_settings() {
    let o = conical(&["pes", "--mode", "c2v", "--steps", "3", "--rho-min", "1.5", "--rho-max", "2.0"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let comments: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(comments.iter().any(|l| l.contains("rho_min") && l.contains("1.5")));
    assert!(comments.iter().any(|l| l.contains("mode = c2v")));
}

#[test]
fn noiseless_cqe_scan_matches_fci() {
    let args = ["pes", "--mode", "c2v", "--steps", "6", "--rho-min", "1.2", "--rho-max", "2.4"];
    let fci = conical(&args);
    let mut with = args.to_vec();
    with.extend(["--solver", "cqe", "--noise", "0.0"]);
    let cqe = conical(&with);
    assert_eq!(code(&fci), 0);
    assert_eq!(code(&cqe), 0, "{}", String::from_utf8_lossy(&cqe.stderr));
    for col in ["E1", "E2"] {
        let a = column(&stdout(&fci), col);
        let b = column(&stdout(&cqe), col);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "{col}: {x} vs {y}");
        }
    }
}

#[test]
fn seeded_noisy_runs_are_reproducible() {
    let args = [
        "pes",
        "--mode",
        "c2v",
        "--steps",
        "4",
        "--solver",
        "cqe",
        "--noise",
        "0.02",
        "--readout",
        "1e-3",
        "--seed",
        "7",
    ];
    let a = conical(&args);
    let b = conical(&args);
    assert_eq!(code(&a), code(&b));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("cqe-noisy"));
}

#[test]
fn missing_mode_is_a_configuration_error() {
    let o = conical(&["pes"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--help"));
}

#[test]
fn noise_requires_the_cqe_solver() {
    assert_eq!(code(&conical(&["pes", "--mode", "d3h", "--noise", "0.1"])), 1);
}

#[test]
fn mex_converges_from_default_start() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mex.csv");
    let o = conical(&["mex", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("final:"));
    let csv = read(&out);
    let theta = column(&csv, "theta_deg");
    let rho = column(&csv, "rho_bohr");
    assert!((theta.last().unwrap() - 90.0).abs() < 2.0);
    assert!((rho.last().unwrap() - 3f64.sqrt()).abs() < 0.02);
}

#[test]
fn mex_rejects_rho_zero() {
    assert_eq!(code(&conical(&["mex", "--rho", "0"])), 1);
}

#[test]
fn phase_reports_enclosed_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("loop.csv");
    let o = conical(&[
        "phase",
        "--cx",
        "0",
        "--cy",
        "1.7320508",
        "--radius",
        "0.3",
        "--points",
        "32",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("encloses CI"));
    let acc = column(&read(&out), "accumulated_phase");
    assert_eq!(acc.len(), 33);
    assert!((acc.last().unwrap().abs() - std::f64::consts::PI).abs() < 0.05);
}

#[test]
fn phase_away_from_crossing_is_trivial() {
    let o = conical(&["phase", "--cx", "1.4", "--cy", "2.6", "--radius", "0.3", "--points", "32"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("no CI enclosed"));
}

#[test]
fn phase_needs_sixteen_points() {
    assert_eq!(code(&conical(&["phase", "--points", "8"])), 1);
}

#[test]
fn solve_reports_energies() {
    let o = conical(&["solve", "--r", "1", "--rho", "2.3", "--theta", "90", "--solver", "cqe"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(&format!("{key} ="))).unwrap();
        line.split('=').nth(1).unwrap().trim().parse().unwrap()
    };
    assert!((value("E1") - value("fci_E1")).abs() < 1e-6);
    assert!((value("E2") - value("fci_E2")).abs() < 1e-6);
    assert!(text.contains("symmetry = C2v"));
}

#[test]
fn help_exits_zero_for_every_subcommand() {
    for sub in [&["--help"][..], &["pes", "--help"], &["mex", "--help"], &["phase", "--help"], &["solve", "--help"]] {
        let o = conical(sub);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).contains("Usage"));
    }
    assert_eq!(code(&conical(&["bogus"])), 1);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "mode = \"c2v\"\nsteps = 5\nrho_min = 1.5\nrho_max = 2.5\n").unwrap();
    let file_only = conical(&["pes", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&file_only), 0);
    assert_eq!(rows(&stdout(&file_only)).len(), 5);
    let overridden = conical(&["pes", "--config", cfg.to_str().unwrap(), "--steps", "3"]);
    assert_eq!(code(&overridden), 0);
    let rho = column(&stdout(&overridden), "rho");
    assert_eq!(rho.len(), 3);
    assert!((rho[0] - 1.5).abs() < 1e-12 && (rho[2] - 2.5).abs() < 1e-12);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "mode = \"d3h\"\nwidth = 3\n").unwrap();
    assert_eq!(code(&conical(&["pes", "--config", cfg.to_str().unwrap()])), 1);
}
