use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use homsim::cli::event_file_name;
use homsim::curve_file::{self, CurveRow};

fn homsim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homsim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn ok(output: &Output) {
    assert!(
        output.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        output.status,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn rows(path: &Path) -> Vec<CurveRow> {
    curve_file::read(fs::File::open(path).unwrap()).unwrap()
}

fn event_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
        .collect();
    files.sort();
    files
}

#[test]
fn theory_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    ok(&homsim(&["theory", "--svg"], dir.path()));
    let rows = rows(&dir.path().join("theory.csv"));
    assert_eq!(rows.len(), 101);
    for r in &rows {
        assert!((r.p20 + r.p02 + r.p11 - 0.25).abs() < 1e-9, "{r:?}");
    }
    let centre = rows.iter().find(|r| r.tau_fs == 0.0).unwrap();
    assert!(centre.p11.abs() < 1e-6 && (centre.p20 - 0.125).abs() < 1e-6);
    let svg = fs::read_to_string(dir.path().join("theory.svg")).unwrap();
    assert!(svg.contains("delay τ (fs)") && svg.contains("P(1,1)"));
}

#[test]
fn fermion_swaps_dip_and_peaks() {
    let dir = tempfile::tempdir().unwrap();
    ok(&homsim(&["theory", "--fermion"], dir.path()));
    let rows = rows(&dir.path().join("theory.csv"));
    let centre = rows.iter().find(|r| r.tau_fs == 0.0).unwrap();
    assert!(centre.p20.abs() < 1e-6 && centre.p02.abs() < 1e-6, "{centre:?}");
    assert!((centre.p11 - 0.25).abs() < 1e-6, "{centre:?}");
    let edge = &rows[0];
    assert!((edge.p11 - 0.125).abs() < 1e-4, "{edge:?}");
}

#[test]
fn zero_visibility_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    ok(&homsim(&["theory", "--visibility", "0"], dir.path()));
    for r in rows(&dir.path().join("theory.csv")) {
        assert!((r.p20 - 0.0625).abs() < 1e-12 && (r.p02 - 0.0625).abs() < 1e-12, "{r:?}");
        assert!((r.p11 - 0.125).abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn invalid_spec_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = homsim(&["theory", "--eta-a", "1.5"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta"));
}

const RUN: [&str; 9] = ["run", "--pairs", "10000", "--tau-min", "-100", "--tau-max", "100", "--tau-steps", "3"];

#[test]
fn runs_replay_byte_identically() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(&homsim(&[&RUN[..], &["--seed", "5"]].concat(), a.path()));
    ok(&homsim(&[&RUN[..], &["--seed", "5"]].concat(), b.path()));
    ok(&homsim(&[&RUN[..], &["--seed", "6"]].concat(), c.path()));
    let files = event_files(a.path());
    assert_eq!(files.len(), 3);
    for (i, tau) in [-100.0, 0.0, 100.0].into_iter().enumerate() {
        let name = event_file_name(tau, 5 + i as u64);
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
        let other = event_file_name(tau, 6 + i as u64);
        assert_ne!(fs::read(a.path().join(&name)).unwrap(), fs::read(c.path().join(&other)).unwrap());
    }
}

#[test]
fn pairs_and_duration_together_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "version = 1\npairs = 100\nduration_s = 2.0\n").unwrap();
    let out = homsim(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pairs") && err.contains("duration_s"), "{err}");
    assert!(event_files(dir.path()).is_empty());

    let out = homsim(&["run", "--pairs", "10", "--duration", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "version = 1\ntau_steps = 5\nvisibility = 0.0\n").unwrap();
    ok(&homsim(&["theory", "--config", cfg.to_str().unwrap(), "--tau-steps", "7"], dir.path()));
    let rows = rows(&dir.path().join("theory.csv"));
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| (r.p11 - 0.125).abs() < 1e-12));
}

#[test]
fn analyze_without_files_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = homsim(&["analyze"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no event files"));
}

#[test]
fn corrupted_line_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    ok(&homsim(&[&RUN[..], &["--seed", "1"]].concat(), dir.path()));
    let files = event_files(dir.path());
    let text = fs::read_to_string(&files[1]).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[4] = "12\tC\t1.0\t1";
    fs::write(&files[1], lines.join("\n") + "\n").unwrap();
    let args: Vec<&str> = ["analyze"].into_iter().chain(files.iter().map(|p| p.to_str().unwrap())).collect();
    let out = homsim(&args, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5"), "{err}");
    assert!(err.contains(files[1].file_name().unwrap().to_str().unwrap()), "{err}");
    assert!(!dir.path().join("estimates.csv").exists());
}

#[test]
fn closed_loop_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let common = [
        "--eta-a", "1", "--eta-b", "1", "--pair-rate", "1", "--pairs", "1000000", "--tau-min", "-200",
        "--tau-max", "200", "--tau-steps", "9", "--seed", "90",
    ];
    ok(&homsim(&[&["theory"][..], &common].concat(), dir.path()));
    ok(&homsim(&[&["run"][..], &common].concat(), dir.path()));
    let files = event_files(dir.path());
    assert_eq!(files.len(), 9);
    let mut args = vec!["analyze", "--svg"];
    args.extend(files.iter().map(|p| p.to_str().unwrap()));
    let out = homsim(&args, dir.path());
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("fit: visibility"));

    let theory = rows(&dir.path().join("theory.csv"));
    let measured = rows(&dir.path().join("estimates.csv"));
    assert_eq!(measured.len(), 9);
    for (m, t) in measured.iter().zip(&theory) {
        assert_eq!(m.tau_fs, t.tau_fs);
        for (got, err, want) in [(m.p20, m.p20_err, t.p20), (m.p02, m.p02_err, t.p02), (m.p11, m.p11_err, t.p11)] {
            // a probability of zero has no spread; allow one count
            let err = err.max(1e-6);
            assert!((got - want).abs() <= 3.0 * err, "τ = {}: {got} ± {err} vs {want}", m.tau_fs);
        }
    }
    let svg = fs::read_to_string(dir.path().join("estimates.svg")).unwrap();
    assert!(svg.contains("P(1,1) theory") && svg.contains("<circle"));
}

#[test]
fn outputs_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        ok(&homsim(&[&RUN[..], &["--seed", "3"]].concat(), dir.path()));
        let files = event_files(dir.path());
        let mut args = vec!["analyze", "--svg"];
        args.extend(files.iter().map(|p| p.to_str().unwrap()));
        ok(&homsim(&args, dir.path()));
        ok(&homsim(&["theory", "--svg"], dir.path()));
    }
    for name in ["estimates.csv", "estimates.svg", "theory.csv", "theory.svg"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn header_less_files_need_efficiencies() {
    let dir = tempfile::tempdir().unwrap();
    ok(&homsim(&[&RUN[..], &["--seed", "2"]].concat(), dir.path()));
    let files = event_files(dir.path());
    for f in &files {
        let text = fs::read_to_string(f).unwrap();
        let body = text.split_once('\n').unwrap().1;
        fs::write(f, body).unwrap();
    }
    let mut args = vec!["analyze"];
    args.extend(files.iter().map(|p| p.to_str().unwrap()));
    let out = homsim(&args, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--eta-a"));

    args.extend(["--eta-a", "0.2", "--eta-b", "0.2"]);
    ok(&homsim(&args, dir.path()));
    let measured = rows(&dir.path().join("estimates.csv"));
    let taus: Vec<f64> = measured.iter().map(|r| r.tau_fs).collect();
    assert_eq!(taus, [-100.0, 0.0, 100.0]);
}

#[test]
fn calibrate_far_from_the_dip() {
    let dir = tempfile::tempdir().unwrap();
    ok(&homsim(
        &["run", "--pairs", "2000000", "--tau-min", "3000", "--tau-max", "3000", "--tau-steps", "1", "--seed", "4"],
        dir.path(),
    ));
    let files = event_files(dir.path());
    let mut args = vec!["calibrate"];
    args.extend(files.iter().map(|p| p.to_str().unwrap()));
    let out = homsim(&args, dir.path());
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    for line in text.lines().filter(|l| l.starts_with("eta_")) {
        let value: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert!((value - 0.2).abs() < 0.01, "{line}");
    }
    assert!(!text.contains("warning"));
}

#[test]
fn calibrate_warns_inside_the_dip() {
    let dir = tempfile::tempdir().unwrap();
    ok(&homsim(&[&RUN[..], &["--seed", "8"]].concat(), dir.path()));
    let files = event_files(dir.path());
    let mut args = vec!["calibrate"];
    args.extend(files.iter().map(|p| p.to_str().unwrap()));
    let out = homsim(&args, dir.path());
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("warning"));
}

#[test]
fn selftest_passes() {
    let out = Command::new(env!("CARGO_BIN_EXE_homsim")).arg("selftest").output().unwrap();
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}
