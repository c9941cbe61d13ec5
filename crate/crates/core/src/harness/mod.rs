//! Configuration, experiment orchestration and result files.

pub mod config;
pub mod ic;
pub mod output;

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use num_complex::Complex64;

pub use config::{parse_config, serialize_config, ExperimentKind, GridSpec, IcSpec, InitialCondition, RunConfig};
pub use output::emit_plot_data;

use crate::analysis::{
    blowup_lower_bound_time, blowup_lower_bound_time_quadrature, blowup_threshold, determining_modes_experiment,
    determining_threshold, min_determining_modes, run_sweep, stabilization_delta0, stabilization_mode_count,
    summarize_sweep,
};
use crate::backward::{run_backward, BackwardRun, Termination};
use crate::error::{Error, Result};
use crate::forward::{measure_decay_rate, run_forward_with, FeedbackParams, ForwardSolver, ForwardState};
use crate::spectral::{dirichlet_eigenvalues, Grid};
use crate::trajectory::{Snapshot, TrajectoryRecord};
use ic::{build_amplitude, build_phi};
use output::{determining_csv, fmt_f64, write_snapshot_csv, write_sweep_csv, write_text, Summary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NON_FINITE: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Process exit status for an error: 3 for numerical aborts, 4 for I/O, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonFinite(_) => EXIT_NON_FINITE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name);
        write_text(&p, contents)
    }

    fn trajectory(&mut self, name: &str, records: &[TrajectoryRecord]) -> Result<()> {
        let p = self.path(name);
        emit_plot_data(records, &p)
    }

    fn snapshots(&mut self, snaps: &[Snapshot]) -> Result<()> {
        for (i, s) in snaps.iter().enumerate() {
            let p = self.path(&format!("snap_{i}.csv"));
            write_snapshot_csv(s, &p)?;
        }
        Ok(())
    }

    /// Writes `diagnostic.txt` and returns the non-finite error.
    fn abort(&mut self, kind: ExperimentKind, detail: &str, last: Option<&TrajectoryRecord>) -> Error {
        let mut s = Summary::new();
        s.put("kind", kind.as_str()).put("error", "non-finite state").put("detail", detail);
        if let Some(r) = last {
            s.num("last_t", r.t).num("last_l2_A", r.l2_a).num("last_max_abs_A", r.max_abs_a);
        }
        match self.text("diagnostic.txt", s.text()) {
            Ok(()) => Error::NonFinite(detail.to_string()),
            Err(io) => io,
        }
    }
}

/// Runs the configured experiment, writing its files to `cfg.output_dir`.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutcome> {
    let grid = cfg.grid.build()?;
    let mut w = Writer::new(&cfg.output_dir)?;
    let mut s = Summary::new();
    s.put("kind", cfg.kind.as_str());
    info!("running {} experiment", cfg.kind.as_str());
    match cfg.kind {
        ExperimentKind::Backward => backward(cfg, &grid, &mut w, &mut s)?,
        ExperimentKind::Sweep => sweep(cfg, &grid, &mut w, &mut s)?,
        ExperimentKind::Forward => forward(cfg, &grid, cfg.feedback(), &mut w, &mut s)?,
        ExperimentKind::Stabilize => stabilize(cfg, &grid, &mut w, &mut s)?,
        ExperimentKind::Determining => determining(cfg, &grid, &mut w, &mut s)?,
        ExperimentKind::Analyze => analyze(cfg, &grid, &mut s)?,
    }
    w.text("summary.txt", s.text())?;
    Ok(RunOutcome { summary: s.text().to_string(), files: w.files })
}

fn report_lines(s: &mut Summary, prefix: &str, run: &BackwardRun) {
    let r = &run.report;
    s.put(&format!("{prefix}terminated_by"), r.terminated_by)
        .num(&format!("{prefix}t_blow"), r.t_blow)
        .put(&format!("{prefix}steps"), r.steps_taken)
        .num(&format!("{prefix}final_max_abs"), r.final_max_abs)
        .num(&format!("{prefix}final_l2"), r.final_l2)
        .num(&format!("{prefix}last_tau"), r.last_tau)
        .num(&format!("{prefix}max_tau_accepted"), r.max_tau_accepted)
        .put(&format!("{prefix}energy_violations"), r.energy_violations);
}

fn backward(cfg: &RunConfig, grid: &Grid, w: &mut Writer, s: &mut Summary) -> Result<()> {
    let a0 = build_amplitude(&cfg.ic, grid)?;
    s.num("eps", cfg.backward.eps)
        .num("psi0", a0.l2_norm().powi(2))
        .num("threshold", blowup_threshold(grid_length(grid)));
    let run = run_backward(&a0, &cfg.backward)?;
    report_lines(s, "", &run);
    if run.report.terminated_by == Termination::NonFinite {
        return Err(w.abort(cfg.kind, "backward run produced a non-finite field", run.records.last()));
    }
    w.trajectory("trajectory.csv", &run.records)?;
    w.snapshots(&run.snapshots)
}

fn sweep(cfg: &RunConfig, grid: &Grid, w: &mut Writer, s: &mut Summary) -> Result<()> {
    let a0 = build_amplitude(&cfg.ic, grid)?;
    let runs = run_sweep(&a0, &cfg.backward, &cfg.sweep.eps)?;
    if let Some((eps, run)) = runs.iter().find(|(_, r)| r.report.terminated_by == Termination::NonFinite) {
        return Err(w.abort(cfg.kind, &format!("run with eps = {eps:e} produced a non-finite field"), run.records.last()));
    }
    let result = summarize_sweep(&runs, cfg.sweep.fit_smallest)?;
    let p = w.path("sweep.csv");
    write_sweep_csv(&result.rows, &p)?;
    for (i, (eps, run)) in runs.iter().enumerate() {
        s.num(&format!("run_{i}.eps"), *eps);
        report_lines(s, &format!("run_{i}."), run);
        w.trajectory(&format!("trajectory_{i}.csv"), &run.records)?;
    }
    s.put("fit_count", result.fit_count);
    match result.fit {
        Some(fit) => {
            s.num("fit_exponent", fit.exponent)
                .num("fit_intercept", fit.intercept)
                .num("fit_max_residual", fit.residual);
        }
        None => {
            s.put("fit_exponent", "none (fewer than 3 blow-up runs)");
        }
    }
    Ok(())
}

fn initial_state(cfg: &RunConfig, grid: &Grid) -> Result<ForwardState> {
    ForwardState::new(0.0, build_amplitude(&cfg.ic, grid)?, build_phi(&cfg.phi_ic, grid)?)
}

/// Forward run with snapshots; returns the records.
fn forward_run(
    cfg: &RunConfig,
    grid: &Grid,
    fp: FeedbackParams,
    w: &mut Writer,
) -> Result<Vec<TrajectoryRecord>> {
    let f = &cfg.forward;
    let solver = ForwardSolver::new(*grid, cfg.chevron, fp, f.dt)?;
    let state0 = initial_state(cfg, grid)?;
    let mut snaps = Vec::new();
    let total = (f.t_end / f.dt - 1e-9).ceil().max(1.0) as usize;
    let result = run_forward_with(&solver, &state0, f.t_end, f.record_every, |step, st| {
        if let Some(every) = f.snapshot_every {
            if step % every == 0 || step == total {
                snaps.push(Snapshot { step, t: st.t, a: st.a.clone(), phi: Some(st.phi.clone()) });
            }
        }
    });
    let run = match result {
        Ok(run) => run,
        Err(Error::NonFinite(msg)) => return Err(w.abort(cfg.kind, &msg, None)),
        Err(e) => return Err(e),
    };
    w.trajectory("trajectory.csv", &run.records)?;
    w.snapshots(&snaps)?;
    Ok(run.records)
}

fn norm_lines(s: &mut Summary, records: &[TrajectoryRecord]) {
    let first = records[0];
    let last = records[records.len() - 1];
    let max_a = records.iter().map(|r| r.l2_a).fold(0.0, f64::max);
    let max_phi = records.iter().map(|r| r.l2_phi).fold(0.0, f64::max);
    s.num("t_end", last.t)
        .num("max_l2_A", max_a)
        .num("max_l2_phi", max_phi)
        .num("final_l2_A", last.l2_a)
        .num("final_l2_phi", last.l2_phi)
        .num("v1_initial", first.v1_norm())
        .num("v1_final", last.v1_norm());
    match measure_decay_rate(records) {
        Ok(rate) => s.num("decay_rate", rate),
        Err(e) => s.put("decay_rate", format!("undefined ({e})")),
    };
}

fn forward(cfg: &RunConfig, grid: &Grid, fp: FeedbackParams, w: &mut Writer, s: &mut Summary) -> Result<()> {
    s.put("admissible", cfg.chevron.is_admissible())
        .num("feedback_mu", fp.mu)
        .put("feedback_modes", fp.modes);
    let records = forward_run(cfg, grid, fp, w)?;
    norm_lines(s, &records);
    Ok(())
}

fn stabilize(cfg: &RunConfig, grid: &Grid, w: &mut Writer, s: &mut Summary) -> Result<()> {
    let delta0 = stabilization_delta0(cfg.chevron.c1, cfg.chevron.c2)?;
    let modes = match cfg.feedback_modes {
        Some(n) => n,
        None => stabilization_mode_count(cfg.chevron.c1, cfg.chevron.c2, grid)?,
    };
    s.num("delta0", delta0);
    forward(cfg, grid, FeedbackParams::new(cfg.feedback_mu, modes), w, s)
}

fn grid_length(grid: &Grid) -> f64 {
    match grid {
        Grid::OneD(g) => g.length(),
        Grid::TwoD(g) => g.lx(),
    }
}

fn determining(cfg: &RunConfig, grid: &Grid, w: &mut Writer, s: &mut Summary) -> Result<()> {
    let d = &cfg.determining;
    let modes = match (d.modes, d.inputs) {
        (Some(n), _) => n,
        (None, Some(inputs)) => {
            s.num("determining_threshold", determining_threshold(&inputs)?);
            min_determining_modes(&inputs, grid)?
        }
        (None, None) => return Err(Error::param("no mode count for the determining experiment")),
    };
    let k = d.perturb_mode.unwrap_or(modes + 5);
    if k > grid.mode_count() {
        return Err(Error::param(format!("perturb_mode {k} exceeds the {} grid modes", grid.mode_count())));
    }
    let u0 = initial_state(cfg, grid)?;
    let l = grid_length(grid);
    let amp = d.perturb_amplitude;
    let mut b = u0.a.clone();
    for (z, (x, _)) in b.values_mut().iter_mut().zip(grid.node_coords()) {
        *z += Complex64::new(amp * (k as f64 * PI * x / l).sin(), 0.0);
    }
    let v0 = ForwardState::new(0.0, b, u0.phi.clone())?;
    let report = match determining_modes_experiment(
        (&u0, &v0),
        &cfg.chevron,
        modes,
        cfg.forward.dt,
        cfg.forward.t_end,
        d.window_steps,
    ) {
        Ok(r) => r,
        Err(Error::NonFinite(msg)) => return Err(w.abort(cfg.kind, &msg, None)),
        Err(e) => return Err(e),
    };
    let p = w.path("determining.csv");
    write_text(&p, &determining_csv(&report.windows))?;
    s.put("modes", modes)
        .put("perturb_mode", k)
        .num("initial_distance", report.initial_distance)
        .num("final_distance", report.final_distance)
        .num("initial_mode_fraction", report.initial_mode_fraction)
        .put("mode_decayed", report.mode_decayed)
        .put("full_decayed", report.full_decayed)
        .put("verdict", report.verdict.as_str())
        .put("note", "observed behaviour of one trajectory pair; not a proof");
    Ok(())
}

fn analyze(cfg: &RunConfig, grid: &Grid, s: &mut Summary) -> Result<()> {
    let l = grid_length(grid);
    let threshold = blowup_threshold(l);
    let psi0 = match cfg.analyze_psi0 {
        Some(v) => v,
        None => build_amplitude(&cfg.ic, grid)?.l2_norm().powi(2),
    };
    s.num("L", l).num("lambda_1", (PI / l).powi(2)).num("threshold", threshold).num("psi0", psi0);
    if psi0 > threshold {
        s.num("t0_closed_form", blowup_lower_bound_time(psi0, l)?)
            .num("t0_quadrature", blowup_lower_bound_time_quadrature(psi0, l, 1e-10)?);
    } else {
        s.put("t0_closed_form", "none (psi0 not above threshold)");
    }
    match stabilization_delta0(cfg.chevron.c1, cfg.chevron.c2) {
        Ok(delta0) => {
            s.num("delta0", delta0);
            match stabilization_mode_count(cfg.chevron.c1, cfg.chevron.c2, grid) {
                Ok(n) => s.put("stabilization_modes", n),
                Err(e) => s.put("stabilization_modes", format!("unresolved ({e})")),
            };
        }
        Err(_) => {
            s.put("delta0", "none (requires c1 < 1)");
        }
    }
    if let Some(inputs) = cfg.determining.inputs {
        s.num("determining_threshold", determining_threshold(&inputs)?);
        match min_determining_modes(&inputs, grid) {
            Ok(n) => s.put("determining_modes", n),
            Err(e) => s.put("determining_modes", format!("unresolved ({e})")),
        };
    }
    let eig = dirichlet_eigenvalues(grid);
    s.put("grid_modes", eig.len()).put("largest_eigenvalue", fmt_f64(eig.last().map_or(0.0, |e| e.lambda)));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> (tempfile::TempDir, Result<RunOutcome>) {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = parse_config(text).unwrap();
        cfg.output_dir = dir.path().join("out");
        let r = run_experiment(&cfg);
        (dir, r)
    }

    #[test]
    fn zero_backward_run_reaches_horizon() {
        let (dir, r) = run("kind = backward\nbackward.eps = 0.1\nbackward.t_end = 0.05\ngrid.n = 32\nic.kind = constant_modulus\nic.value = 0\nbackward.record_every = 1\n");
        let out = r.unwrap();
        assert!(out.summary.contains("terminated_by = HorizonReached"));
        let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert!(rows.len() > 2);
        for row in rows {
            let f: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!((f[2], f[3], f[7]), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn analyze_reports_threshold_and_t0() {
        let (_dir, r) = run("kind = analyze\nanalyze.psi0 = 12\n");
        let out = r.unwrap();
        let get = |k: &str| -> f64 {
            let line = out.summary.lines().find(|l| l.starts_with(&format!("{k} = "))).unwrap();
            line.split(" = ").nth(1).unwrap().parse().unwrap()
        };
        assert!((get("threshold") - 9.01304).abs() < 1e-5);
        let t0 = get("t0_closed_form");
        assert!(t0.is_finite() && t0 > 0.0);
        assert!(((t0 - get("t0_quadrature")) / t0).abs() < 1e-8);
    }

    #[test]
    fn stabilize_derives_mode_count() {
        let (_dir, r) = run("kind = stabilize\ngrid.L = 3.141592653589793\ngrid.n = 32\nchevron.c1 = 0.5\nchevron.c2 = 2\nforward.dt = 0.01\nforward.t_end = 1\nforward.record_every = 5\nic.kind = sine_mode\nphi_ic.kind = sine_mode\nphi_ic.amplitude = 0.5\n");
        let out = r.unwrap();
        assert!(out.summary.contains("feedback_modes = 2"), "{}", out.summary);
        assert!(out.summary.contains("delta0 = 2.5e-1"));
    }

    #[test]
    fn non_finite_forward_run_writes_diagnostic() {
        let (dir, r) = run("kind = forward\ngrid.n = 16\nforward.dt = 10\nforward.t_end = 200\nchevron.h = 0\nchevron.tau_relax = 0.01\nic.kind = constant_modulus\nic.value = 50\n");
        let err = r.unwrap_err();
        assert_eq!(exit_code(&err), EXIT_NON_FINITE);
        assert!(dir.path().join("out/diagnostic.txt").exists());
    }

    #[test]
    fn determining_run_writes_windows() {
        let (dir, r) = run("kind = determining\ngrid.L = 2\ngrid.n = 32\ndetermining.modes = 3\nforward.dt = 0.01\nforward.t_end = 2\ndetermining.window_steps = 20\nic.kind = sine_mode\nic.amplitude = 0.8\n");
        let out = r.unwrap();
        assert!(out.summary.contains("verdict = consistent"), "{}", out.summary);
        let csv = fs::read_to_string(dir.path().join("out/determining.csv")).unwrap();
        assert_eq!(csv.lines().count(), 11);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NonFinite("x".into())), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 4);
        assert_eq!(exit_code(&Error::Config { line: 1, message: "x".into() }), 2);
    }
}
