//! Closed-form thresholds and data-analysis helpers around the solvers.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::backward::{run_backward, BackwardParams, BackwardRun, Termination};
use crate::error::{Error, Result};
use crate::forward::{ChevronParams, FeedbackParams, ForwardSolver, ForwardState};
use crate::spectral::{dirichlet_eigenvalues, ComplexField, Grid, SineBasis};

fn first_eigenvalue(length: f64) -> f64 {
    (PI / length).powi(2)
}

/// `(1 - lambda_1) L` with `lambda_1 = (pi / L)^2`: the squared L2 norm above
/// which the unregularized backward 1D amplitude equation blows up.
/// Negative when `L < pi`.
pub fn blowup_threshold(length: f64) -> f64 {
    (1.0 - first_eigenvalue(length)) * length
}

fn check_lower_bound_inputs(psi0: f64, length: f64) -> Result<f64> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Domain(format!("L must be > 0, got {length}")));
    }
    let threshold = blowup_threshold(length);
    if !(psi0 > threshold) || !(psi0 > 0.0) || psi0.is_nan() {
        return Err(Error::Domain(format!(
            "psi0 = {psi0} must exceed max(0, threshold = {threshold})"
        )));
    }
    Ok(first_eigenvalue(length) - 1.0)
}

/// Upper bound on the blow-up time,
/// `int_{psi0}^inf ds / (2 (s^2 / L + (lambda_1 - 1) s))`, in closed form
/// `ln(1 + a L / psi0) / (2 a)` with `a = lambda_1 - 1` (limit `L / (2 psi0)` at `a = 0`).
pub fn blowup_lower_bound_time(psi0: f64, length: f64) -> Result<f64> {
    let a = check_lower_bound_inputs(psi0, length)?;
    if psi0.is_infinite() {
        return Ok(0.0);
    }
    let x = a * length / psi0;
    let base = length / (2.0 * psi0);
    if x == 0.0 {
        return Ok(base);
    }
    Ok(base * x.ln_1p() / x)
}

/// The same integral by adaptive Simpson quadrature after substituting
/// `s = psi0 / u`, which maps `[psi0, inf)` onto `(0, 1]` with integrand
/// `1 / (2 (psi0 / L + a u))`.
pub fn blowup_lower_bound_time_quadrature(psi0: f64, length: f64, tol: f64) -> Result<f64> {
    let a = check_lower_bound_inputs(psi0, length)?;
    if psi0.is_infinite() {
        return Ok(0.0);
    }
    let c = psi0 / length;
    let f = |u: f64| 0.5 / (c + a * u);
    Ok(adaptive_simpson(&f, 0.0, 1.0, tol, 50))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `2 (1 - c1) / (2 + c2)`, defined for `0 <= c1 < 1`, `c2 >= 0`.
pub fn stabilization_delta0(c1: f64, c2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&c1) {
        return Err(Error::param(format!("stabilization needs 0 <= c1 < 1, got {c1}")));
    }
    if !(c2 >= 0.0 && c2.is_finite()) {
        return Err(Error::param(format!("c2 must be >= 0, got {c2}")));
    }
    Ok(2.0 * (1.0 - c1) / (2.0 + c2))
}

/// Smallest `N` such that `lambda_{N+1} > 1 / delta0` among the grid's sorted
/// Dirichlet eigenvalues.
pub fn stabilization_mode_count(c1: f64, c2: f64, grid: &Grid) -> Result<usize> {
    let required = 1.0 / stabilization_delta0(c1, c2)?;
    let eig = dirichlet_eigenvalues(grid);
    eig.iter()
        .position(|e| e.lambda > required)
        .ok_or_else(|| Error::Resolution {
            required,
            available: eig.last().map_or(0.0, |e| e.lambda),
        })
}

/// Completeness defect `lambda_{N+1}^{-1/2}` of the first `N` Fourier-mode
/// functionals, for the pair `(H1_0, L2)`.
pub fn mode_completeness_defect(n: usize, grid: &Grid) -> Result<f64> {
    let eig = dirichlet_eigenvalues(grid);
    eig.get(n)
        .map(|e| e.lambda.powf(-0.5))
        .ok_or_else(|| Error::param(format!("N = {n} must be below the mode count {}", eig.len())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminingInputs {
    /// Exponent with `0 <= gamma < 1/2`.
    pub gamma: f64,
    /// Lipschitz constant of the nonlinearity on the absorbing ball.
    pub m_r: f64,
    /// Radius of the absorbing ball.
    pub r: f64,
}

impl DeterminingInputs {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.gamma) {
            return Err(Error::param(format!("gamma must lie in [0, 1/2), got {}", self.gamma)));
        }
        if !(self.m_r > 0.0 && self.m_r.is_finite()) {
            return Err(Error::param(format!("M(R) must be > 0, got {}", self.m_r)));
        }
        if !(self.r > 0.0) {
            return Err(Error::param(format!("R must be > 0, got {}", self.r)));
        }
        Ok(())
    }
}

/// `sqrt((1 + 2g) / (1 - 2g)) * ((1 + 2g) M)^{1 / (2g - 1)}`.
pub fn determining_threshold(d: &DeterminingInputs) -> Result<f64> {
    d.validate()?;
    let g2 = 2.0 * d.gamma;
    Ok(((1.0 + g2) / (1.0 - g2)).sqrt() * ((1.0 + g2) * d.m_r).powf(1.0 / (g2 - 1.0)))
}

/// Smallest `N` whose mode completeness defect is strictly below `threshold`.
pub fn min_modes_for_threshold(threshold: f64, grid: &Grid) -> Result<usize> {
    if !(threshold > 0.0) {
        return Err(Error::param(format!("threshold must be > 0, got {threshold}")));
    }
    let eig = dirichlet_eigenvalues(grid);
    eig.iter()
        .position(|e| e.lambda.powf(-0.5) < threshold)
        .ok_or_else(|| Error::Resolution {
            required: threshold.powi(-2),
            available: eig.last().map_or(0.0, |e| e.lambda),
        })
}

pub fn min_determining_modes(d: &DeterminingInputs, grid: &Grid) -> Result<usize> {
    min_modes_for_threshold(determining_threshold(d)?, grid)
}

/// Ordinary least squares fit of `ln t = p ln eps + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Largest absolute residual in log space.
    pub residual: f64,
}

pub fn fit_blowup_scaling(pairs: &[(f64, f64)]) -> Result<ScalingFit> {
    if pairs.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 pairs, got {}", pairs.len())));
    }
    if let Some(bad) = pairs.iter().find(|(e, t)| !(*e > 0.0 && *t > 0.0 && e.is_finite() && t.is_finite())) {
        return Err(Error::Domain(format!("pairs must be positive and finite, got {bad:?}")));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all eps values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (exponent * x + intercept)).abs())
        .fold(0.0, f64::max);
    Ok(ScalingFit { exponent, intercept, residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub t_blow: f64,
    pub steps: usize,
    pub final_max_abs: f64,
    pub terminated_by: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Sorted by ascending `eps`.
    pub rows: Vec<SweepRow>,
    /// Fit over the `fit_count` smallest blow-up runs, if at least 3 exist.
    pub fit: Option<ScalingFit>,
    pub fit_count: usize,
}

fn check_eps_list(eps_values: &[f64]) -> Result<()> {
    if eps_values.is_empty() {
        return Err(Error::param("sweep needs at least one eps value"));
    }
    if let Some(e) = eps_values.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::param(format!("sweep eps values must be > 0, got {e}")));
    }
    let mut sorted = eps_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::param("sweep eps values must be distinct"));
    }
    Ok(())
}

/// Runs the backward solver once per `eps` (in parallel on the current rayon
/// pool), returning runs sorted by ascending `eps`.
pub fn run_sweep(a0: &ComplexField, base: &BackwardParams, eps_values: &[f64]) -> Result<Vec<(f64, BackwardRun)>> {
    check_eps_list(eps_values)?;
    let mut runs = eps_values
        .par_iter()
        .map(|&eps| {
            let p = BackwardParams { eps, ..base.clone() };
            run_backward(a0, &p).map(|r| (eps, r))
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(runs)
}

pub fn summarize_sweep(runs: &[(f64, BackwardRun)], fit_smallest: usize) -> Result<SweepResult> {
    let mut rows: Vec<SweepRow> = runs
        .iter()
        .map(|(eps, run)| SweepRow {
            eps: *eps,
            t_blow: run.report.t_blow,
            steps: run.report.steps_taken,
            final_max_abs: run.report.final_max_abs,
            terminated_by: run.report.terminated_by,
        })
        .collect();
    rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.terminated_by == Termination::BlowUp && r.t_blow > 0.0)
        .take(fit_smallest)
        .map(|r| (r.eps, r.t_blow))
        .collect();
    let fit = if pairs.len() >= 3 { Some(fit_blowup_scaling(&pairs)?) } else { None };
    Ok(SweepResult { rows, fit, fit_count: pairs.len() })
}

/// One time window of the twin-trajectory experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminingWindow {
    pub t_start: f64,
    pub t_end: f64,
    /// `int sum_{j <= N} |l_j(u - v)|^2 dt` over the window.
    pub mode_integral: f64,
    /// `int |u - v|_{V0}^2 dt` over the window.
    pub full_integral: f64,
    /// `|u - v|_{V0}` at the end of the window.
    pub full_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeterminingVerdict {
    /// The two initial states coincide.
    Identical,
    /// Mode differences and the full distance both decayed.
    Consistent,
    /// Mode differences decayed but the full distance did not.
    ModesOnly,
    /// Mode differences did not decay; nothing can be concluded.
    ModesPersist,
}

impl DeterminingVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            DeterminingVerdict::Identical => "identical",
            DeterminingVerdict::Consistent => "consistent",
            DeterminingVerdict::ModesOnly => "modes_only",
            DeterminingVerdict::ModesPersist => "modes_persist",
        }
    }
}

/// Observed quantities of the twin-trajectory experiment. This illustrates
/// determining-mode behaviour on one pair of trajectories; it proves nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterminingReport {
    pub modes: usize,
    pub windows: Vec<DeterminingWindow>,
    pub initial_distance: f64,
    pub final_distance: f64,
    /// Share of the initial squared V0 distance carried by the first `modes` functionals.
    pub initial_mode_fraction: f64,
    /// Share of the initial squared V0 distance carried by the first mode functional alone.
    pub initial_first_mode_fraction: f64,
    pub mode_decayed: bool,
    pub full_decayed: bool,
    pub verdict: DeterminingVerdict,
}

/// A quantity counts as decayed once it falls to this fraction of its reference.
pub const DECAY_FACTOR: f64 = 1e-2;

struct Distances {
    modes: f64,
    first: f64,
    full: f64,
}

fn twin_distances(basis: &SineBasis, order: &[usize], u: &ForwardState, v: &ForwardState) -> Distances {
    let grid = basis.grid();
    let da: Vec<Complex64> = u.a.values().iter().zip(v.a.values()).map(|(x, y)| x - y).collect();
    let dphi: Vec<Complex64> = u
        .phi
        .values()
        .iter()
        .zip(v.phi.values())
        .map(|(x, y)| Complex64::new(x - y, 0.0))
        .collect();
    let full = grid.cell_measure()
        * (da.iter().map(|z| z.norm_sqr()).sum::<f64>() + dphi.iter().map(|z| z.norm_sqr()).sum::<f64>());
    let ca = basis.forward(&da).expect("grid checked");
    let cphi = basis.forward(&dphi).expect("grid checked");
    // (f, w_j) = sqrt(P) c_j for L2-normalized w_j.
    let p = grid.parseval_factor();
    let functional = |s: usize| p * (ca[s].norm_sqr() + cphi[s].norm_sqr());
    Distances {
        modes: order.iter().map(|&s| functional(s)).sum(),
        first: order.first().map_or(0.0, |&s| functional(s)),
        full,
    }
}

/// Evolves two initial states side by side with the same parameters and
/// tracks the first `modes` Fourier-mode functionals of their difference
/// against the full `V0` distance, integrated over windows of
/// `window_steps` steps.
pub fn determining_modes_experiment(
    ic_pair: (&ForwardState, &ForwardState),
    p: &ChevronParams,
    modes: usize,
    dt: f64,
    t_end: f64,
    window_steps: usize,
) -> Result<DeterminingReport> {
    let (u0, v0) = ic_pair;
    let grid = *u0.a.grid();
    if !matches!(grid, Grid::OneD(_)) {
        return Err(Error::param("the determining-modes experiment runs on 1D grids"));
    }
    if v0.a.grid() != &grid {
        return Err(Error::param("both initial states must share one grid"));
    }
    if !(p.h > 0.0) {
        return Err(Error::param("the determining-modes experiment needs h > 0"));
    }
    if modes == 0 || modes > grid.mode_count() {
        return Err(Error::param(format!(
            "modes must lie in 1..={}, got {modes}",
            grid.mode_count()
        )));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::param(format!("t_end must be finite and > 0, got {t_end}")));
    }
    if window_steps == 0 {
        return Err(Error::param("window_steps must be >= 1"));
    }

    let solver = ForwardSolver::new(grid, *p, FeedbackParams::disabled(), dt)?;
    let basis = SineBasis::new(grid);
    let order: Vec<usize> = dirichlet_eigenvalues(&grid).iter().take(modes).map(|e| e.storage).collect();

    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let mut u = u0.clone();
    let mut v = v0.clone();
    let mut prev = twin_distances(&basis, &order, &u, &v);
    let initial = prev.full;
    let (initial_mode_fraction, initial_first_mode_fraction) = if initial > 0.0 {
        (prev.modes / initial, prev.first / initial)
    } else {
        (0.0, 0.0)
    };

    let mut windows = Vec::new();
    let mut current = DeterminingWindow {
        t_start: u.t,
        t_end: u.t,
        mode_integral: 0.0,
        full_integral: 0.0,
        full_distance: initial.sqrt(),
    };
    for step in 1..=steps {
        u = solver.step(&u)?;
        v = solver.step(&v)?;
        u.t = u0.t + step as f64 * dt;
        v.t = u.t;
        let now = twin_distances(&basis, &order, &u, &v);
        current.mode_integral += 0.5 * dt * (prev.modes + now.modes);
        current.full_integral += 0.5 * dt * (prev.full + now.full);
        current.t_end = u.t;
        current.full_distance = now.full.sqrt();
        prev = now;
        if step % window_steps == 0 || step == steps {
            windows.push(current);
            current = DeterminingWindow {
                t_start: u.t,
                t_end: u.t,
                mode_integral: 0.0,
                full_integral: 0.0,
                full_distance: current.full_distance,
            };
        }
    }

    let initial_distance = initial.sqrt();
    let final_distance = prev.full.sqrt();
    let peak = windows.iter().map(|w| w.mode_integral).fold(0.0, f64::max);
    let last = windows.last().map_or(0.0, |w| w.mode_integral);
    let mode_decayed = peak == 0.0 || last <= DECAY_FACTOR * peak;
    let full_decayed = initial_distance == 0.0 || final_distance <= DECAY_FACTOR * initial_distance;
    let verdict = if initial_distance == 0.0 {
        DeterminingVerdict::Identical
    } else if !mode_decayed {
        DeterminingVerdict::ModesPersist
    } else if full_decayed {
        DeterminingVerdict::Consistent
    } else {
        DeterminingVerdict::ModesOnly
    };
    Ok(DeterminingReport {
        modes,
        windows,
        initial_distance,
        final_distance,
        initial_mode_fraction,
        initial_first_mode_fraction,
        mode_decayed,
        full_decayed,
        verdict,
    })
}
