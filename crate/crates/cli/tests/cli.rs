use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FIG3: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/config/fig3_scenario.json");

fn rssb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rssb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = rssb(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str], code: i32) -> String {
    let out = rssb(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stderr).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

/// A 120 s bed-like trace with light noise, optionally with dropped packets.
fn bed_trace(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(name);
    let mut args = vec!["simulate", "--out", p(&out), "--set", "noise_std=0.05"];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn final_bpm(stdout: &str) -> f64 {
    let i = stdout.find("final estimate: ").expect("final estimate line") + 16;
    stdout[i..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn fig3_scenario_gives_sixteen_channels() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fig3.csv");
    let stdout = ok(&["simulate", "--config", FIG3, "--out", p(&out)]);
    assert!(stdout.contains("16 channels"), "{stdout}");
    assert_eq!(first_line(&out), "time_s,channel_id,rss_db");
    let text = fs::read_to_string(&out).unwrap();
    let ids: std::collections::BTreeSet<&str> =
        text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ids.len(), 16);
    assert!(dir.path().join("fig3.csv.manifest.json").exists());
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    ok(&["simulate", "--config", FIG3, "--seed", "7", "--out", p(&a)]);
    ok(&["simulate", "--config", FIG3, "--seed", "7", "--out", p(&b)]);
    ok(&["simulate", "--config", FIG3, "--seed", "8", "--out", p(&c)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first.csv");
    ok(&["simulate", "--config", FIG3, "--seed", "3", "--set", "duration=20", "--out", p(&first)]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("first.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 3);
    assert!(manifest["tool_version"].is_string() && manifest["timestamp"].is_string());
    let cfg = dir.path().join("resolved.json");
    fs::write(&cfg, manifest["config"].to_string()).unwrap();
    let second = dir.path().join("second.csv");
    ok(&["simulate", "--config", p(&cfg), "--out", p(&second)]);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn zero_duration_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let err = fails(
        &["simulate", "--set", "duration=0", "--out", p(&dir.path().join("x.csv"))],
        2,
    );
    assert!(err.contains("duration"), "{err}");
}

#[test]
fn config_errors_name_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"fs\": 31.25,\n  \"duration\": ,\n}\n").unwrap();
    let err = fails(&["simulate", "--config", p(&cfg), "--out", p(&dir.path().join("x.csv"))], 2);
    assert!(err.contains("line 3"), "{err}");
    let err = fails(
        &["simulate", "--set", "motion.colour=1", "--out", p(&dir.path().join("x.csv"))],
        2,
    );
    assert!(err.contains("colour"), "{err}");
}

#[test]
fn simulate_estimate_evaluate_round_trip() {
    let dir = TempDir::new().unwrap();
    let trace = bed_trace(&dir, "bed.csv", &[]);
    let est = dir.path().join("gp.csv");
    let stdout = ok(&["estimate", p(&trace), "--method", "gp", "--out", p(&est)]);
    let bpm = final_bpm(&stdout);
    assert!((bpm - 12.0).abs() < 0.5, "{stdout}");
    assert_eq!(first_line(&est), "time_s,method,f_hat_hz,recon_db");

    let report = dir.path().join("gp.json");
    ok(&["evaluate", p(&est), p(&trace), "--f-true", "0.2", "--out", p(&report)]);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["method"], "gp");
    assert!(r["mae_late_bpm"].as_f64().unwrap() < 0.5, "{r}");
    assert!(r["modeling_mae_db"].as_f64().unwrap() < 0.2, "{r}");
    assert!(r["snr_db"].as_f64().is_some());
}

#[test]
fn perfect_estimates_score_perfectly() {
    let dir = TempDir::new().unwrap();
    let trace = bed_trace(&dir, "bed.csv", &["--set", "duration=20"]);
    let est = dir.path().join("perfect.csv");
    let mut text = String::from("time_s,method,f_hat_hz\n");
    for k in 0..625 {
        text.push_str(&format!("{},kf,0.2\n", k as f64 * 0.032));
    }
    fs::write(&est, text).unwrap();
    let report = dir.path().join("r.json");
    ok(&["evaluate", p(&est), p(&trace), "--f-true", "0.2", "--out", p(&report)]);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["mae_bpm"].as_f64(), Some(0.0));
    assert_eq!(r["hit_ratio_pct"].as_f64(), Some(100.0));
    assert!(r["modeling_mae_db"].is_null());
}

#[test]
fn mismatched_time_ranges_are_rejected() {
    let dir = TempDir::new().unwrap();
    let trace = bed_trace(&dir, "bed.csv", &["--set", "duration=20"]);
    let est = dir.path().join("late.csv");
    fs::write(&est, "time_s,method,f_hat_hz\n10,kf,0.2\n50,kf,0.2\n").unwrap();
    let err = fails(
        &["evaluate", p(&est), p(&trace), "--f-true", "0.2", "--out", p(&dir.path().join("r.json"))],
        2,
    );
    assert!(err.contains("trace covers"), "{err}");
}

#[test]
fn short_trace_is_insufficient_for_the_periodogram() {
    let dir = TempDir::new().unwrap();
    let trace = bed_trace(&dir, "short.csv", &["--set", "duration=10"]);
    let err = fails(
        &["estimate", p(&trace), "-m", "dft", "--out", p(&dir.path().join("e.csv"))],
        2,
    );
    assert!(err.contains("insufficient data"), "{err}");
}

#[test]
fn uneven_trace_is_resampled_for_dft_only() {
    let dir = TempDir::new().unwrap();
    let trace = bed_trace(&dir, "gappy.csv", &["--set", "drop_prob=0.1", "--set", "duration=40"]);
    let dft = rssb(&["estimate", p(&trace), "-m", "dft", "--out", p(&dir.path().join("d.csv"))]);
    assert!(dft.status.success());
    assert!(String::from_utf8_lossy(&dft.stderr).contains("resampled"));
    let kf = rssb(&["estimate", p(&trace), "-m", "kf", "--out", p(&dir.path().join("k.csv"))]);
    assert!(kf.status.success());
    assert!(!String::from_utf8_lossy(&kf.stderr).contains("resampled"));
    // the recursive estimate keeps one row per received sample
    let rows = fs::read_to_string(dir.path().join("k.csv")).unwrap().lines().count() - 1;
    let samples = fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(1) == Some("0"))
        .count();
    assert_eq!(rows, samples);
}

#[test]
fn malformed_rows_report_their_line() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("bad.csv");
    fs::write(&trace, "time_s,channel_id,rss_db\n0,0,1.0\n0.032,0,oops\n").unwrap();
    let err = fails(&["estimate", p(&trace), "-m", "kf", "--out", p(&dir.path().join("e.csv"))], 2);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_method_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let trace = bed_trace(&dir, "bed.csv", &["--set", "duration=20"]);
    let err = fails(&["estimate", p(&trace), "-m", "music", "--out", p(&dir.path().join("e.csv"))], 2);
    assert!(err.contains("unknown method"), "{err}");
}

#[test]
fn sweep_writes_the_documented_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    ok(&[
        "sweep",
        "--set",
        "snr_db=[-4, 0]",
        "--set",
        "seeds=[0, 1]",
        "--jobs",
        "2",
        "--out",
        p(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("snr_db,method,hit_ratio_pct"));
    assert_eq!(lines.count(), 6);
    assert!(dir.path().join("sweep.csv.manifest.json").exists());
    fails(&["sweep", "--jobs", "0", "--out", p(&out)], 2);
}

#[test]
fn figures_write_csv_and_svg() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("figs");
    ok(&[
        "figures",
        "fig2c",
        "fig3a",
        "fig3b",
        "fig6c",
        "--set",
        "delta_points=30",
        "--set",
        "height_points=8",
        "--set",
        "sweep.snr_db=[-10, -4]",
        "--set",
        "sweep.seeds=[0]",
        "--out",
        p(&out),
    ]);
    for name in ["fig2c", "fig3a", "fig3b", "fig6c"] {
        let svg = fs::read_to_string(out.join(format!("{name}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<polyline"), "{name}");
        assert!(out.join(format!("{name}.csv")).exists());
    }
    assert_eq!(first_line(&out.join("fig2c.csv")), "delta_m,rmse_i1_db,rmse_i2_db,rmse_i3_db");
    assert_eq!(first_line(&out.join("fig6c.csv")), "snr_db,method,hit_ratio_pct");
    // orders 1..3 are monotone at every excess path
    for line in fs::read_to_string(out.join("fig2c.csv")).unwrap().lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[2] < v[1] && v[3] <= v[2], "{line}");
    }
    assert!(out.join("manifest.json").exists());
    fails(&["figures", "fig9", "--out", p(&out)], 2);
}
