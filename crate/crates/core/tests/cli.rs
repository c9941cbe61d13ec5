use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chevron::harness::output::{SNAPSHOT_HEADER, SWEEP_HEADER, TRAJECTORY_HEADER};

fn chevron(cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chevron"))
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn setup(text: &str) -> (tempfile::TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    (dir, cfg, out)
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

fn summary_value(summary: &str, key: &str) -> String {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from\n{summary}"))
        .to_string()
}

#[test]
fn backward_run_writes_schema_conformant_files() {
    let (_d, cfg, out) = setup(
        "kind = backward\nbackward.eps = 0.1\ngrid.n = 200\nbackward.record_every = 5\nbackward.snapshot_every = 10\n",
    );
    let o = chevron(&cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(summary_value(&stdout, "terminated_by"), "BlowUp");

    let traj = read(out.join("trajectory.csv"));
    assert!(traj.ends_with('\n'));
    let mut lines = traj.lines();
    assert_eq!(lines.next().unwrap(), TRAJECTORY_HEADER);
    let mut prev_t = -1.0;
    for l in lines {
        let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(f.len(), 8);
        assert!(f[0] > prev_t);
        assert_eq!((f[4], f[5]), (0.0, 0.0));
        prev_t = f[0];
    }

    let snap = read(out.join("snap_0.csv"));
    assert_eq!(snap.lines().next().unwrap(), SNAPSHOT_HEADER);
    assert_eq!(snap.lines().count(), 201);
    assert!(out.join("snap_1.csv").exists());
    assert_eq!(read(out.join("summary.txt")), stdout);
}

#[test]
fn sweep_writes_sorted_rows_and_fit() {
    let (_d, cfg, out) = setup("kind = sweep\ngrid.n = 200\nsweep.eps = 0.01, 0.5, 0.05, 0.1\n");
    let o = chevron(&cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(out.join("sweep.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), SWEEP_HEADER);
    let eps: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(eps, vec![0.01, 0.05, 0.1, 0.5]);
    let summary = read(out.join("summary.txt"));
    assert_eq!(summary_value(&summary, "fit_count"), "4");
    let p: f64 = summary_value(&summary, "fit_exponent").parse().unwrap();
    assert!(p.is_finite());
    for i in 0..4 {
        assert!(out.join(format!("trajectory_{i}.csv")).exists());
    }
}

#[test]
fn config_errors_exit_with_code_2() {
    let (_d, cfg, out) = setup("kind = backward\nbackward.eps = -1\n");
    let o = chevron(&cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("eps must be > 0") && err.contains("line 2"), "{err}");
    assert!(!out.exists());

    let (_d, cfg, out) = setup("kind = sweep\ngrid.n = 10\ngrid.n = 20\n");
    let o = chevron(&cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("lines 2 and 3"));
}

#[test]
fn missing_config_exits_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = chevron(&dir.path().join("absent.cfg"), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn unwritable_output_exits_with_code_4() {
    let (d, cfg, _out) = setup("kind = analyze\nanalyze.psi0 = 12\n");
    let blocker = d.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = chevron(&cfg, &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn numerical_abort_exits_with_code_3() {
    let (_d, cfg, out) = setup(
        "kind = forward\ngrid.n = 16\nforward.dt = 10\nforward.t_end = 200\nchevron.h = 0\nchevron.tau_relax = 0.01\nic.kind = constant_modulus\nic.value = 50\n",
    );
    let o = chevron(&cfg, &out);
    assert_eq!(o.status.code(), Some(3));
    let diag = read(out.join("diagnostic.txt"));
    assert!(diag.contains("non-finite"));
    assert!(diag.ends_with('\n'));
}

#[test]
fn analyze_prints_threshold_and_t0() {
    let (_d, cfg, out) = setup("kind = analyze\nanalyze.psi0 = 12\n");
    let o = chevron(&cfg, &out);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    let th: f64 = summary_value(&s, "threshold").parse().unwrap();
    assert!((th - 9.01304).abs() < 1e-5);
    let t0: f64 = summary_value(&s, "t0_closed_form").parse().unwrap();
    assert!(t0.is_finite() && t0 > 0.0);
}

#[test]
fn snapshot_seeds_a_forward_run() {
    let (d, cfg, out) = setup(
        "kind = forward\ngrid.L = 6\ngrid.n = 48\nforward.dt = 0.01\nforward.t_end = 0.5\nforward.snapshot_every = 50\nic.kind = sine_mode\nic.amplitude = 0.7\nphi_ic.kind = sine_mode\nphi_ic.k = 2\nphi_ic.amplitude = 0.3\n",
    );
    assert!(chevron(&cfg, &out).status.success());
    let last = out.join("snap_1.csv");
    assert!(last.exists());

    let cfg2 = d.path().join("resume.cfg");
    fs::write(
        &cfg2,
        format!(
            "kind = forward\ngrid.L = 6\ngrid.n = 48\nforward.dt = 0.01\nforward.t_end = 0.5\nforward.snapshot_every = 1\nic.kind = from_file\nic.path = {p}\nphi_ic.kind = from_file\nphi_ic.path = {p}\n",
            p = last.display()
        ),
    )
    .unwrap();
    let out2 = d.path().join("out2");
    let o = chevron(&cfg2, &out2);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(out2.join("snap_0.csv")), read(&last));

    let (_d, bad, out3) = setup(&format!("kind = forward\ngrid.n = 10\nic.kind = from_file\nic.path = {}\n", last.display()));
    assert_eq!(chevron(&bad, &out3).status.code(), Some(2));
}

#[test]
fn threads_flag_is_validated() {
    let (_d, cfg, out) = setup("kind = analyze\n");
    let o = Command::new(env!("CARGO_BIN_EXE_chevron"))
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--threads")
        .arg("0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
