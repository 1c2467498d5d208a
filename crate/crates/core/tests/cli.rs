mod common;

use std::path::Path;
use std::process::{Command, Output};

use tiltmeter::io::{spectrum_from_table, timeseries_from_table, Table, MONTECARLO_HEADER, SPECTRUM_HEADER};
use tiltmeter::optics::mean_shift_exact;

const BIN: &str = env!("CARGO_BIN_EXE_tiltmeter");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn run_to(args: &[&str], out: &Path) -> (Table, String) {
    let o = Command::new(BIN).args(args).arg("--out").arg(out).output().unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    let table = Table::read(std::fs::File::open(out).unwrap()).unwrap();
    (table, String::from_utf8(o.stdout).unwrap())
}

/// Value following `key` in the summary, up to the next space.
fn summary_value(summary: &str, key: &str) -> f64 {
    let rest = &summary[summary.find(key).unwrap_or_else(|| panic!("{key} in {summary}")) + key.len()..];
    rest.split_whitespace().next().unwrap().trim_end_matches(',').parse().unwrap()
}

#[test]
fn help_lists_every_flag() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in [
        "--lambda-nm", "--sigma-mm", "--L-cm", "--k-sigma", "--power-ratio", "--phi", "--theta-rad",
        "--power-mw", "--fs-hz", "--duration-s", "--seed", "--smooth-w", "--out", "--config",
    ] {
        assert!(text.contains(flag), "{flag}");
    }
    for cmd in ["profile", "shift-scan", "regime", "montecarlo", "simulate", "spectrum"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--bogus"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["profile", "--k-sigma", "0.2", "--power-ratio", "3"]).status.code(), Some(2));
    assert_eq!(run(&["profile", "--phi", "0.1", "--theta-rad", "1e-9"]).status.code(), Some(2));
    assert_eq!(run(&["profile", "--sigma-mm", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["profile", "--config", "/nonexistent/tiltmeter.conf"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--filter-hi-hz", "600"]).status.code(), Some(2));
    // no light reaches the detector at φ = 0 with perfect alignment
    assert_eq!(run(&["profile", "--k-sigma", "0", "--phi", "0"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad_out = dir.path().join("missing").join("x.csv");
    let o = Command::new(BIN).args(["shift-scan", "--out"]).arg(&bad_out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn profile_mean_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (t, summary) = run_to(&["profile", "--k-sigma", "0.2", "--phi", "0.05", "--points", "4096"], &dir.path().join("p.csv"));
    let u = t.column("z_over_sigma").unwrap();
    let dark0 = t.column("dark_phi_a").unwrap();
    let dark = t.column("dark_phi_b").unwrap();
    assert_eq!(u.len(), 4096);
    let du = u[1] - u[0];
    let mass: f64 = dark.iter().sum::<f64>() * du;
    let mean: f64 = u.iter().zip(&dark).map(|(a, b)| a * b).sum::<f64>() * du / mass;
    let exact = mean_shift_exact(0.05, 0.2, 1.0).unwrap();
    assert!((mean - exact).abs() < 1e-4, "{mean} vs {exact}");
    assert!((exact - 0.46598).abs() < 5e-6);
    // balanced profile: symmetric with a node at the centre
    let n = dark0.len();
    for i in 0..n {
        assert!((dark0[i] - dark0[n - 1 - i]).abs() < 1e-12);
    }
    let mid = n / 2;
    assert!(dark0[mid].min(dark0[mid - 1]) < 1e-5);
    assert!(summary.contains("0.465983"));
}

#[test]
fn shift_scan_table() {
    let dir = tempfile::tempdir().unwrap();
    let (t, _) = run_to(&["shift-scan", "--phi-max", "0.2", "--steps", "21"], &dir.path().join("s.csv"));
    let phi = t.column("phi").unwrap();
    let exact = t.column("exact_over_sigma").unwrap();
    let quantum = t.column("quantum_over_sigma").unwrap();
    assert_eq!(phi.len(), 21);
    assert_eq!(exact[0], 0.0);
    let i = phi.iter().position(|&p| (p - 0.05).abs() < 1e-12).unwrap();
    assert!((exact[i] - 0.46598).abs() < 5e-6);
    assert!((quantum[i] - 0.47095).abs() < 5e-6);
}

#[test]
fn regime_report() {
    let o = run(&["regime", "--phi", "0.05", "--k-sigma", "0.2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("regime = IWVA"));
    assert!((summary_value(&text, "kappa = ") - 8.0).abs() < 0.01);
    let o = run(&["regime", "--phi", "0.2", "--k-sigma", "0.001"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("regime = WVA"));
    assert!((summary_value(&text, "\nwva_shift_over_sigma = ") - 0.01).abs() < 1e-9);
    assert_eq!(run(&["regime", "--lo", "5", "--hi", "1"]).status.code(), Some(2));
}

#[test]
fn montecarlo_default_run() {
    let dir = tempfile::tempdir().unwrap();
    let (t, summary) = run_to(&["montecarlo"], &dir.path().join("mc.csv"));
    assert_eq!(t.headers, MONTECARLO_HEADER);
    assert_eq!(t.rows.len(), 200);
    let ratio = summary_value(&summary, "ratio std/limit = ");
    assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    assert_eq!(t.get_meta("seed"), Some("1"));
}

#[test]
fn montecarlo_null_phase() {
    let dir = tempfile::tempdir().unwrap();
    let (t, _) = run_to(&["montecarlo", "--phi", "0", "--photons", "100000", "--trials", "100"], &dir.path().join("mc.csv"));
    let phis = t.column("phi_hat").unwrap();
    assert!(common::mean(&phis).abs() < 3.0 * common::std(&phis) / 10.0);
}

#[test]
fn spectrum_defaults_recover_tone_and_floor() {
    let dir = tempfile::tempdir().unwrap();
    let (t, summary) = run_to(&["spectrum"], &dir.path().join("sp.csv"));
    assert_eq!(t.headers, SPECTRUM_HEADER);
    let s = spectrum_from_table(&t).unwrap();
    assert_eq!(s.smoothing, 5);
    assert_eq!(s.len(), 300_000);
    let peak = summary_value(&summary, "peak amplitude at 30 Hz = ");
    assert!((peak / 0.8e-9 - 1.0).abs() < 0.05, "{peak}");
    let floor = summary_value(&summary, "Hz = ");
    assert!((floor / 200e-15 - 1.0).abs() < 0.1, "{floor}");
    let line = summary_value(&summary, "lambda/(4 sqrt(pi) L sqrt(N)) = ");
    assert!((line - 8.0e-14).abs() < 0.05e-14);
    assert!(summary.contains("5.6e-14"));
}

#[test]
fn spectrum_of_nothing_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (t, _) = run_to(
        &["spectrum", "--floor-rad", "0", "--tone-amp-rad", "0", "--no-shot-noise", "--duration-s", "10"],
        &dir.path().join("z.csv"),
    );
    let s = spectrum_from_table(&t).unwrap();
    assert!(s.asd.iter().all(|&v| v == 0.0));
}

#[test]
fn spectrum_with_filter_and_segments() {
    let dir = tempfile::tempdir().unwrap();
    let (t, summary) = run_to(
        &["spectrum", "--duration-s", "64", "--segments", "8", "--filter-lo-hz", "0.03", "--filter-hi-hz", "300"],
        &dir.path().join("f.csv"),
    );
    let s = spectrum_from_table(&t).unwrap();
    assert_eq!(s.segments, 8);
    assert_eq!(t.get_meta("window"), Some("hann"));
    let peak = summary_value(&summary, "peak amplitude at 30 Hz = ");
    // 30 Hz sits well inside the band, so the calibrated tone is nearly unchanged
    assert!((peak / 0.8e-9 - 1.0).abs() < 0.02, "{peak}");
}

#[test]
fn simulate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (t, _) = run_to(&["simulate", "--duration-s", "2", "--fs-hz", "500", "--seed", "9"], &dir.path().join("ts.csv"));
    let series = timeseries_from_table(&t).unwrap();
    assert_eq!(series.len(), 1000);
    assert_eq!(series.sample_rate(), 500.0);
    assert_eq!(series.seed, Some(9));
    let bytes = std::fs::read(dir.path().join("ts.csv")).unwrap();
    assert!(String::from_utf8(bytes).unwrap().contains("time_s,tilt_rad"));
}

#[test]
fn csv_goes_to_stdout_without_out() {
    let o = run(&["shift-scan", "--steps", "3"]);
    assert!(o.status.success());
    let table = Table::read(o.stdout.as_slice()).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert!(String::from_utf8(o.stderr).unwrap().contains("k_sigma"));
}

#[test]
fn config_file_merges_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# experiment\nk-sigma = 0.1\nphi = 0.02\nseed = 5\n").unwrap();
    let conf = conf.to_str().unwrap();
    let out = dir.path().join("r.txt");
    let o = Command::new(BIN).args(["regime", "--config", conf]).output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("phi = 2e-2"), "{text}");
    assert!(text.contains("k_sigma = 1e-1"));
    let o = Command::new(BIN).args(["regime", "--config", conf, "--phi", "0.03"]).output().unwrap();
    assert!(String::from_utf8(o.stdout).unwrap().contains("phi = 3e-2"));
    // a flag from the other member of a group overrides the file's choice
    let o = Command::new(BIN).args(["regime", "--config", conf, "--power-ratio", "400", "--out"]).arg(&out).output().unwrap();
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("k_sigma = 1e-1"));
    std::fs::write(dir.path().join("bad.conf"), "nonsense = 1\n").unwrap();
    let o = Command::new(BIN).args(["regime", "--config"]).arg(dir.path().join("bad.conf")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeded_runs_repeat_and_seeds_matter() {
    let a = run(&["simulate", "--duration-s", "1", "--seed", "3"]).stdout;
    let b = run(&["simulate", "--duration-s", "1", "--seed", "3"]).stdout;
    let c = run(&["simulate", "--duration-s", "1", "--seed", "4"]).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn in_process_entry_point() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = tiltmeter::cli::run_from_args(["tiltmeter", "shift-scan", "--steps", "2"], &mut out, &mut err);
    assert_eq!(code, 0);
    assert!(String::from_utf8(out).unwrap().starts_with("# k_sigma="));
    let code = tiltmeter::cli::run_from_args(["tiltmeter", "--version"], &mut Vec::new(), &mut Vec::new());
    assert_eq!(code, 0);
}
