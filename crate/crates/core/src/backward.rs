//! Backward-in-time evolution of the 1D amplitude equation with `phi = 0`,
//! regularized in `H1_eps`:
//!
//! ```text
//! (id - eps d_xx) d_t A = -d_xx A + (|A|^2 - 1) A
//! ```
//!
//! Each step first advances the pointwise nonlinear flow
//! `d_t A = (|A|^2 - 1) A` exactly, then takes one implicit step of the linear
//! part in the sine basis. The step size is kept below both `eps` and the
//! blow-up horizon of the nonlinear flow; a run ends in blow-up once the
//! admissible step falls below `blow_tol`.

use log::{debug, warn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{check_backward_step, ComplexField, SineBasis};
use crate::trajectory::{Snapshot, TrajectoryRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct BackwardParams {
    /// Regularization weight in `|A|^2 + eps |d_x A|^2`.
    pub eps: f64,
    pub tau_max: f64,
    /// Fraction of the blow-up horizon a step may use.
    pub safety_blow: f64,
    /// Fraction of `eps` a step may use.
    pub safety_eps: f64,
    /// Blow-up is declared once the admissible step drops below this.
    pub blow_tol: f64,
    pub t_end: Option<f64>,
    pub record_every: usize,
    pub snapshot_every: Option<usize>,
    /// Hard cap on the number of steps.
    pub max_steps: usize,
}

impl BackwardParams {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            tau_max: 1e-2,
            safety_blow: 0.5,
            safety_eps: 0.5,
            blow_tol: 1e-15,
            t_end: None,
            record_every: 100,
            snapshot_every: None,
            max_steps: 10_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::param(format!("eps must be > 0, got {}", self.eps)));
        }
        if !(self.safety_blow > 0.0 && self.safety_blow < 1.0) {
            return Err(Error::param(format!(
                "safety_blow must lie in (0, 1), got {}",
                self.safety_blow
            )));
        }
        if !(self.safety_eps > 0.0 && self.safety_eps < 1.0) {
            return Err(Error::param(format!(
                "safety_eps must lie in (0, 1), got {}",
                self.safety_eps
            )));
        }
        if !(self.blow_tol > 0.0) {
            return Err(Error::param(format!("blow_tol must be > 0, got {}", self.blow_tol)));
        }
        if !(self.tau_max > self.blow_tol) {
            return Err(Error::param(format!(
                "tau_max must exceed blow_tol, got tau_max = {}, blow_tol = {}",
                self.tau_max, self.blow_tol
            )));
        }
        if let Some(t_end) = self.t_end {
            if !(t_end > 0.0 && t_end.is_finite()) {
                return Err(Error::param(format!("t_end must be finite and > 0, got {t_end}")));
            }
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every must be >= 1"));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::param("snapshot_every must be >= 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::param("max_steps must be >= 1"));
        }
        Ok(())
    }
}

impl Default for BackwardParams {
    fn default() -> Self {
        Self::new(0.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    BlowUp,
    HorizonReached,
    NonFinite,
    /// `max_steps` exhausted before any other condition.
    StepLimit,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::BlowUp => "BlowUp",
            Termination::HorizonReached => "HorizonReached",
            Termination::NonFinite => "NonFinite",
            Termination::StepLimit => "StepLimit",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupReport {
    pub terminated_by: Termination,
    pub t_blow: f64,
    pub steps_taken: usize,
    pub final_max_abs: f64,
    pub final_l2: f64,
    /// Step size proposed when the run stopped; below `blow_tol` on blow-up.
    pub last_tau: f64,
    /// Largest step size accepted during the run.
    pub max_tau_accepted: f64,
    /// Accepted steps where the energy dropped by more than the monitor tolerance.
    pub energy_violations: usize,
}

#[derive(Debug, Clone)]
pub struct BackwardRun {
    pub report: BlowupReport,
    pub records: Vec<TrajectoryRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: ComplexField,
}

fn ensure_finite(a: &ComplexField) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("amplitude field contains NaN or infinite values".into()))
    }
}

/// Largest step the exact nonlinear flow can take before some node blows up:
/// `+inf` if `sup |A| <= 1`, else `1/2 log(M^2 / (M^2 - 1))` with `M = sup |A|`.
pub fn blowup_horizon(a: &ComplexField) -> Result<f64> {
    ensure_finite(a)?;
    Ok(horizon_from_max(a.max_abs()))
}

fn horizon_from_max(m: f64) -> f64 {
    if m <= 1.0 {
        return f64::INFINITY;
    }
    // log(M^2 / (M^2 - 1)) = log1p(1 / (M^2 - 1)), with M^2 - 1 = (M - 1)(M + 1).
    0.5 * (1.0 / ((m - 1.0) * (m + 1.0))).ln_1p()
}

/// Exact solution of `d_t A = (|A|^2 - 1) A` after time `tau`, applied nodewise:
/// `A / sqrt(|A|^2 + (1 - |A|^2) e^{2 tau})`.
pub fn nonlinear_exact_step(a: &ComplexField, tau: f64) -> Result<ComplexField> {
    let horizon = blowup_horizon(a)?;
    if !(tau > 0.0) {
        return Err(Error::param(format!("tau must be > 0, got {tau}")));
    }
    if tau >= horizon {
        return Err(Error::StepTooLarge { tau, horizon });
    }
    let mut out = a.clone();
    apply_nonlinear(out.values_mut(), tau);
    Ok(out)
}

fn apply_nonlinear(values: &mut [Complex64], tau: f64) {
    let growth = (2.0 * tau).exp_m1();
    for z in values.iter_mut() {
        let s = z.norm_sqr();
        // |A|^2 + (1 - |A|^2) e^{2 tau} rewritten as 1 + (1 - |A|^2)(e^{2 tau} - 1).
        let denom = 1.0 + (1.0 - s) * growth;
        *z /= denom.sqrt();
    }
}

/// One implicit step of `(id - eps d_xx) d_t A = -d_xx A`:
/// `A = (id - (eps - tau) d_xx)^{-1} (id - eps d_xx) A_hat`.
pub fn linear_implicit_step(a_hat: &ComplexField, eps: f64, tau: f64) -> Result<ComplexField> {
    linear_implicit_step_with(&SineBasis::new(*a_hat.grid()), a_hat, eps, tau)
}

pub fn linear_implicit_step_with(
    basis: &SineBasis,
    a_hat: &ComplexField,
    eps: f64,
    tau: f64,
) -> Result<ComplexField> {
    check_backward_step(eps, tau)?;
    let mut coeffs = basis.forward(a_hat.values())?;
    apply_multipliers(basis, &mut coeffs, eps, tau);
    basis.inverse_in_place(&mut coeffs);
    ComplexField::new(*a_hat.grid(), coeffs)
}

fn apply_multipliers(basis: &SineBasis, coeffs: &mut [Complex64], eps: f64, tau: f64) {
    for (z, &l) in coeffs.iter_mut().zip(basis.laplacian_symbol()) {
        *z *= (1.0 + eps * l) / (1.0 + (eps - tau) * l);
    }
}

/// `min(tau_max, safety_blow * horizon, safety_eps * eps)`.
pub fn adaptive_timestep(a: &ComplexField, p: &BackwardParams) -> Result<f64> {
    let horizon = blowup_horizon(a)?;
    Ok(p.tau_max.min(p.safety_blow * horizon).min(p.safety_eps * p.eps))
}

/// `F(A) = 1/2 |d_x A|^2 + 1/4 int (|A|^2 - 1)^2 dx`.
///
/// The gradient term is evaluated from sine coefficients; the quartic term by
/// the trapezoid rule including the boundary nodes, where `A = 0`.
pub fn energy_functional(a: &ComplexField) -> Result<f64> {
    ensure_finite(a)?;
    let basis = SineBasis::new(*a.grid());
    let coeffs = basis.forward(a.values())?;
    Ok(energy_from_parts(&basis, &coeffs, a.values()))
}

pub(crate) fn energy_from_parts(basis: &SineBasis, coeffs: &[Complex64], nodal: &[Complex64]) -> f64 {
    let grad = basis.gradient_norm(coeffs);
    0.5 * grad * grad + 0.25 * quartic_integral(basis, nodal)
}

/// `int (|A|^2 - 1)^2` over the domain; the integrand equals 1 on the boundary.
fn quartic_integral(basis: &SineBasis, nodal: &[Complex64]) -> f64 {
    let grid = basis.grid();
    let excess: f64 = nodal
        .iter()
        .map(|z| {
            let s = z.norm_sqr() - 1.0;
            s * s - 1.0
        })
        .sum();
    grid.cell_measure() * excess + grid.measure()
}

fn make_record(basis: &SineBasis, t: f64, tau: f64, a: &ComplexField, coeffs: &[Complex64]) -> TrajectoryRecord {
    TrajectoryRecord {
        t,
        tau,
        l2_a: a.l2_norm(),
        h1_a: basis.gradient_norm(coeffs),
        l2_phi: 0.0,
        h1_phi: 0.0,
        energy: energy_from_parts(basis, coeffs, a.values()),
        max_abs_a: a.max_abs(),
    }
}

/// Runs the split scheme from `a0` until blow-up, the horizon `t_end`, a
/// non-finite state, or `max_steps`. Numerical failure is reported through
/// `terminated_by`; only invalid parameters produce an `Err`.
pub fn run_backward(a0: &ComplexField, p: &BackwardParams) -> Result<BackwardRun> {
    p.validate()?;
    let basis = SineBasis::new(*a0.grid());
    let mut a = a0.clone();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut max_tau_accepted = 0.0f64;
    let mut energy_violations = 0usize;

    let finish = |terminated_by, t, steps, last_tau, a: &ComplexField, max_tau, violations| BlowupReport {
        terminated_by,
        t_blow: t,
        steps_taken: steps,
        final_max_abs: a.max_abs(),
        final_l2: a.l2_norm(),
        last_tau,
        max_tau_accepted: max_tau,
        energy_violations: violations,
    };

    if !a.is_finite() {
        let report = finish(Termination::NonFinite, 0.0, 0, 0.0, &a, 0.0, 0);
        return Ok(BackwardRun { report, records, snapshots, final_state: a });
    }

    let mut coeffs = basis.forward(a.values())?;
    let mut last = make_record(&basis, t, 0.0, &a, &coeffs);
    records.push(last);
    if p.snapshot_every.is_some() {
        snapshots.push(Snapshot { step: 0, t, a: a.clone(), phi: None });
    }
    let mut last_recorded_step = 0usize;
    let mut last_tau;

    let terminated_by = loop {
        let remaining = p.t_end.map(|te| te - t);
        if let Some(rem) = remaining {
            if rem <= 1e-12 * p.t_end.unwrap_or(1.0) {
                last_tau = 0.0;
                break Termination::HorizonReached;
            }
        }
        if steps >= p.max_steps {
            last_tau = 0.0;
            break Termination::StepLimit;
        }

        let proposed = p
            .tau_max
            .min(p.safety_blow * horizon_from_max(last.max_abs_a))
            .min(p.safety_eps * p.eps);
        last_tau = proposed;
        if proposed < p.blow_tol {
            break Termination::BlowUp;
        }
        let tau = match remaining {
            Some(rem) => proposed.min(rem),
            None => proposed,
        };

        let mut next = a.values().to_vec();
        apply_nonlinear(&mut next, tau);
        basis.forward_in_place(&mut next);
        apply_multipliers(&basis, &mut next, p.eps, tau);
        let next_coeffs = next.clone();
        basis.inverse_in_place(&mut next);
        let candidate = ComplexField::new(*a.grid(), next)?;
        if !candidate.is_finite() {
            break Termination::NonFinite;
        }

        a = candidate;
        coeffs = next_coeffs;
        t += tau;
        steps += 1;
        max_tau_accepted = max_tau_accepted.max(tau);

        let rec = make_record(&basis, t, tau, &a, &coeffs);
        if !rec.is_finite() {
            break Termination::NonFinite;
        }
        let tol = 1e-8 * (1.0 + last.energy.abs());
        if rec.energy < last.energy - tol {
            energy_violations += 1;
            debug!(
                "energy decreased at step {steps} (t = {t:e}): {:e} -> {:e}",
                last.energy, rec.energy
            );
        }
        last = rec;

        if steps.is_multiple_of(p.record_every) {
            records.push(rec);
            last_recorded_step = steps;
        }
        if let Some(every) = p.snapshot_every {
            if steps.is_multiple_of(every) {
                snapshots.push(Snapshot { step: steps, t, a: a.clone(), phi: None });
            }
        }
    };

    if last_recorded_step != steps {
        records.push(last);
    }
    if let Some(every) = p.snapshot_every {
        if !steps.is_multiple_of(every) {
            snapshots.push(Snapshot { step: steps, t, a: a.clone(), phi: None });
        }
    }
    if energy_violations > 0 {
        warn!("energy ascent monitor: {energy_violations} decreasing steps out of {steps}");
    }
    let report = finish(terminated_by, t, steps, last_tau, &a, max_tau_accepted, energy_violations);
    Ok(BackwardRun { report, records, snapshots, final_state: a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, Grid1D};
    use std::f64::consts::PI;

    fn grid(l: f64, n: usize) -> Grid {
        Grid1D::new(l, n).unwrap().into()
    }

    fn constant(g: Grid, v: Complex64) -> ComplexField {
        ComplexField::new(g, vec![v; g.node_count()]).unwrap()
    }

    #[test]
    fn horizon_examples() {
        let g = grid(1.0, 4);
        assert_eq!(blowup_horizon(&constant(g, Complex64::new(0.9, 0.0))).unwrap(), f64::INFINITY);
        assert_eq!(blowup_horizon(&constant(g, Complex64::new(1.0, 0.0))).unwrap(), f64::INFINITY);
        let h = blowup_horizon(&constant(g, Complex64::new(0.0, 2.0))).unwrap();
        assert!((h - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((h - 0.143_841_0).abs() < 1e-7);
    }

    #[test]
    fn horizon_uses_largest_modulus() {
        let g = grid(1.0, 3);
        let f = ComplexField::new(
            g,
            vec![Complex64::new(1.5, 0.0), Complex64::new(0.0, -3.0), Complex64::new(0.2, 0.0)],
        )
        .unwrap();
        assert!((blowup_horizon(&f).unwrap() - 0.5 * (9.0f64 / 8.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        let g = grid(1.0, 3);
        let f = constant(g, Complex64::new(f64::NAN, 0.0));
        assert!(matches!(blowup_horizon(&f), Err(Error::NonFinite(_))));
        assert!(matches!(nonlinear_exact_step(&f, 0.1), Err(Error::NonFinite(_))));
        assert!(energy_functional(&f).is_err());
    }

    #[test]
    fn nonlinear_step_examples() {
        let g = grid(1.0, 3);
        let zero = ComplexField::zeros(g);
        assert_eq!(nonlinear_exact_step(&zero, 3.0).unwrap(), zero);

        let unit = constant(g, Complex64::from_polar(1.0, 0.7));
        let out = nonlinear_exact_step(&unit, 5.0).unwrap();
        assert_eq!(out, unit);

        let half = constant(g, Complex64::new(0.5, 0.0));
        let out = nonlinear_exact_step(&half, 0.5 * 3f64.ln()).unwrap();
        let expected = 0.5 / 2.5f64.sqrt();
        assert!((expected - 0.316_227_8).abs() < 1e-7);
        for z in out.values() {
            assert!((z.re - expected).abs() < 1e-15 && z.im == 0.0);
        }
    }

    #[test]
    fn nonlinear_step_rejects_large_tau() {
        let g = grid(1.0, 3);
        let f = constant(g, Complex64::new(2.0, 0.0));
        let h = blowup_horizon(&f).unwrap();
        assert!(matches!(nonlinear_exact_step(&f, h), Err(Error::StepTooLarge { .. })));
        assert!(matches!(nonlinear_exact_step(&f, 2.0 * h), Err(Error::StepTooLarge { .. })));
        assert!(nonlinear_exact_step(&f, 0.9 * h).is_ok());
    }

    #[test]
    fn nonlinear_step_preserves_phase_and_orders_modulus() {
        let g = grid(1.0, 40);
        let f = ComplexField::from_fn(g, |x, _| Complex64::from_polar(0.2 + 1.6 * x, 7.0 * x));
        let out = nonlinear_exact_step(&f, 0.5 * blowup_horizon(&f).unwrap()).unwrap();
        for (a, b) in f.values().iter().zip(out.values()) {
            assert!((a.arg() - b.arg()).abs() < 1e-12);
            let before = a.norm();
            let after = b.norm();
            assert_eq!((after - before).signum(), (before - 1.0).signum());
        }
    }

    #[test]
    fn linear_step_scales_first_mode() {
        let l = 10.0;
        let g = grid(l, 200);
        let f = ComplexField::from_fn(g, |x, _| Complex64::new((PI * x / l).sin(), 0.0));
        let out = linear_implicit_step(&f, 0.1, 0.05).unwrap();
        let lambda1 = (PI / l).powi(2);
        let factor = (1.0 + 0.1 * lambda1) / (1.0 + 0.05 * lambda1);
        assert!((factor - 1.004_910_6).abs() < 1e-7);
        assert!(out.max_abs_diff(&f.scaled(Complex64::new(factor, 0.0))) < 1e-13);

        let z = linear_implicit_step(&ComplexField::zeros(g), 0.1, 0.05).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert!(linear_implicit_step(&f, 0.1, 0.1).is_err());

        let tiny = linear_implicit_step(&f, 0.1, 1e-14).unwrap();
        assert!(tiny.max_abs_diff(&f) < 1e-13);
    }

    #[test]
    fn adaptive_step_examples() {
        let g = grid(1.0, 4);
        let mut p = BackwardParams::new(0.1);
        p.tau_max = 1.0;
        let small = constant(g, Complex64::new(0.5, 0.0));
        assert_eq!(adaptive_timestep(&small, &p).unwrap(), 0.05);

        let two = constant(g, Complex64::new(2.0, 0.0));
        assert_eq!(adaptive_timestep(&two, &p).unwrap(), 0.05);

        let hundred = constant(g, Complex64::new(100.0, 0.0));
        let tau = adaptive_timestep(&hundred, &p).unwrap();
        let expected = 0.25 * (1e4f64 / 9999.0).ln();
        assert!((tau - expected).abs() < 1e-12 * expected);
        assert!((tau - 2.50e-5).abs() < 1e-8);
    }

    #[test]
    fn energy_of_zero_and_unit_fields() {
        let g = grid(10.0, 99);
        let e0 = energy_functional(&ComplexField::zeros(g)).unwrap();
        assert!((e0 - 2.5).abs() < 1e-13);

        // A constant-modulus grid function: the quartic term vanishes exactly
        // at the interior nodes and only the boundary strips contribute.
        let one = constant(g, Complex64::new(1.0, 0.0));
        let basis = SineBasis::new(g);
        let c = basis.forward(one.values()).unwrap();
        let grad = basis.gradient_norm(&c);
        let e1 = energy_functional(&one).unwrap();
        let h = 10.0 / 100.0;
        assert!((e1 - (0.5 * grad * grad + 0.25 * h)).abs() < 1e-10);
    }

    #[test]
    fn params_validation() {
        assert!(BackwardParams::new(0.1).validate().is_ok());
        assert!(BackwardParams::new(-1.0).validate().is_err());
        let mut p = BackwardParams::new(0.1);
        p.safety_blow = 1.0;
        assert!(p.validate().is_err());
        let mut p = BackwardParams::new(0.1);
        p.tau_max = 1e-16;
        assert!(p.validate().is_err());
        let mut p = BackwardParams::new(0.1);
        p.record_every = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn zero_state_reaches_horizon() {
        let g = grid(10.0, 64);
        let mut p = BackwardParams::new(0.1);
        p.t_end = Some(1.0);
        p.record_every = 10;
        let run = run_backward(&ComplexField::zeros(g), &p).unwrap();
        assert_eq!(run.report.terminated_by, Termination::HorizonReached);
        assert!((run.report.t_blow - 1.0).abs() < 1e-12);
        assert!(run.records.iter().all(|r| r.l2_a == 0.0 && r.max_abs_a == 0.0));
        assert_eq!(run.final_state.max_abs(), 0.0);
        assert!(run.records.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn subthreshold_run_stays_finite_and_matches_small_steps() {
        let l = 10.0;
        let g = grid(l, 128);
        let a0 = ComplexField::from_fn(g, |x, _| Complex64::new(0.5 * (PI * x / l).sin(), 0.0));
        let mut p = BackwardParams::new(0.1);
        p.t_end = Some(1.0);
        let coarse = run_backward(&a0, &p).unwrap();
        assert_eq!(coarse.report.terminated_by, Termination::HorizonReached);
        assert!(coarse.records.iter().all(|r| r.is_finite()));

        p.tau_max = 1e-4;
        let fine = run_backward(&a0, &p).unwrap();
        let diff = coarse.final_state.max_abs_diff(&fine.final_state);
        assert!(diff < 2e-2 * fine.final_state.max_abs(), "diff = {diff}");
    }

    #[test]
    fn supercritical_constant_blows_up() {
        let g = grid(10.0, 64);
        let a0 = ComplexField::from_fn(g, |x, _| Complex64::new(3.0 * (PI * x / 10.0).sin(), 0.0));
        let mut p = BackwardParams::new(0.1);
        p.record_every = 1;
        let run = run_backward(&a0, &p).unwrap();
        assert_eq!(run.report.terminated_by, Termination::BlowUp);
        assert!(run.report.last_tau < p.blow_tol);
        assert!(run.report.t_blow > 0.0 && run.report.t_blow.is_finite());
        assert!(run.records.iter().skip(1).all(|r| r.tau < p.eps));
    }

    #[test]
    fn non_finite_initial_state_is_reported() {
        let g = grid(1.0, 4);
        let a0 = constant(g, Complex64::new(f64::INFINITY, 0.0));
        let run = run_backward(&a0, &BackwardParams::new(0.1)).unwrap();
        assert_eq!(run.report.terminated_by, Termination::NonFinite);
        assert_eq!(run.report.steps_taken, 0);
    }

    #[test]
    fn step_limit_stops_the_run() {
        let g = grid(1.0, 4);
        let mut p = BackwardParams::new(0.1);
        p.max_steps = 7;
        let run = run_backward(&ComplexField::zeros(g), &p).unwrap();
        assert_eq!(run.report.terminated_by, Termination::StepLimit);
        assert_eq!(run.report.steps_taken, 7);
    }

    #[test]
    fn snapshots_follow_cadence() {
        let g = grid(1.0, 8);
        let mut p = BackwardParams::new(0.1);
        p.t_end = Some(0.5);
        p.snapshot_every = Some(20);
        let run = run_backward(&ComplexField::zeros(g), &p).unwrap();
        let steps: Vec<usize> = run.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps.first(), Some(&0));
        assert_eq!(steps.last(), Some(&run.report.steps_taken));
        assert!(steps.windows(2).all(|w| w[1] > w[0]));
    }
}
