//! Forward integration of the chevron system
//!
//! ```text
//! tau d_t A   = A + Lap A - phi^2 A - |A|^2 A - 2 i c1 phi d_y A + i beta A d_y phi - mu P_N A
//! d_t phi     = -L phi - h phi + phi |A|^2 - c2 Im[conj(A) d_y A]
//! ```
//!
//! with `L = -D1 d_xx - D2 d_yy` and `P_N` the L2 projection onto the first `N`
//! Dirichlet eigenfunctions. On a 1D grid all `d_y` terms drop out and `L`
//! reduces to `-D1 d_xx`.
//!
//! Time stepping is first-order IMEX: the diffusion operators are inverted
//! per mode, everything else is taken from the current state. Products are
//! formed at the nodes without dealiasing.

use log::warn;
use num_complex::Complex64;

use crate::backward::energy_from_parts;
use crate::error::{Error, Result};
use crate::spectral::{anisotropic_symbol, dirichlet_eigenvalues, ComplexField, Grid, RealField, SineBasis};
use crate::trajectory::TrajectoryRecord;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChevronParams {
    /// Relaxation time scale of the amplitude equation.
    pub tau_relax: f64,
    pub c1: f64,
    pub c2: f64,
    pub h: f64,
    pub beta: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Default for ChevronParams {
    fn default() -> Self {
        Self {
            tau_relax: 1.0,
            c1: 0.0,
            c2: 0.0,
            h: 0.5,
            beta: 0.0,
            d1: 1.0,
            d2: 1.0,
        }
    }
}

impl ChevronParams {
    /// Checks `D1 > 0, D2 > 0, c1 >= 0, c2 >= 0, h >= 0`, finite `beta` and `tau_relax > 0`.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.tau_relax > 0.0, "tau_relax must be > 0"),
            (self.d1 > 0.0, "D1 must be > 0"),
            (self.d2 > 0.0, "D2 must be > 0"),
            (self.c1 >= 0.0, "c1 must be >= 0"),
            (self.c2 >= 0.0, "c2 must be >= 0"),
            (self.h >= 0.0, "h must be >= 0"),
            (self.beta.is_finite(), "beta must be finite"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::param(msg));
            }
        }
        let all = [self.tau_relax, self.c1, self.c2, self.h, self.d1, self.d2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("chevron parameters must be finite"));
        }
        Ok(())
    }

    /// Parameter range with a known well-posedness and dissipativity result:
    /// `(c1 < 1 or c1 >= 2 c2)` and `h > 0`.
    pub fn is_admissible(&self) -> bool {
        (self.c1 < 1.0 || self.c1 >= 2.0 * self.c2) && self.h > 0.0
    }
}

/// Gain `mu` on the first `modes` Dirichlet eigenfunctions. Disabled when
/// either is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeedbackParams {
    pub mu: f64,
    pub modes: usize,
}

impl FeedbackParams {
    pub fn new(mu: f64, modes: usize) -> Self {
        Self { mu, modes }
    }

    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn is_active(&self) -> bool {
        self.mu != 0.0 && self.modes > 0
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::param(format!("feedback mu must be >= 0, got {}", self.mu)));
        }
        if self.modes > grid.mode_count() {
            return Err(Error::param(format!(
                "feedback uses {} modes but the grid has only {}",
                self.modes,
                grid.mode_count()
            )));
        }
        Ok(())
    }

    /// Storage mask of the controlled modes (the `modes` smallest eigenvalues).
    fn mask(&self, grid: &Grid) -> Vec<bool> {
        let mut mask = vec![false; grid.mode_count()];
        if self.is_active() {
            for e in dirichlet_eigenvalues(grid).iter().take(self.modes) {
                mask[e.storage] = true;
            }
        }
        mask
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardState {
    pub t: f64,
    pub a: ComplexField,
    pub phi: RealField,
}

impl ForwardState {
    pub fn new(t: f64, a: ComplexField, phi: RealField) -> Result<Self> {
        if a.grid() != phi.grid() {
            return Err(Error::param("A and phi must live on the same grid"));
        }
        Ok(Self { t, a, phi })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            t: 0.0,
            a: ComplexField::zeros(grid),
            phi: RealField::zeros(grid),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.phi.is_finite()
    }
}

/// `-mu sum_{k <= N} (A, w_k) w_k` with `w_k` the L2-normalized Dirichlet
/// eigenfunctions ordered by eigenvalue.
pub fn galerkin_feedback(a: &ComplexField, fp: &FeedbackParams) -> Result<ComplexField> {
    let grid = *a.grid();
    fp.validate(&grid)?;
    if !fp.is_active() {
        return Ok(ComplexField::zeros(grid));
    }
    let basis = SineBasis::new(grid);
    let mut coeffs = basis.forward(a.values())?;
    for (c, keep) in coeffs.iter_mut().zip(fp.mask(&grid)) {
        *c = if keep { -fp.mu * *c } else { Complex64::new(0.0, 0.0) };
    }
    basis.inverse_in_place(&mut coeffs);
    ComplexField::new(grid, coeffs)
}

/// Reusable stepper holding transform plans and per-mode symbols.
#[derive(Debug, Clone)]
pub struct ForwardSolver {
    basis: SineBasis,
    params: ChevronParams,
    feedback: FeedbackParams,
    dt: f64,
    a_denom: Vec<f64>,
    phi_denom: Vec<f64>,
    mask: Vec<bool>,
}

impl ForwardSolver {
    pub fn new(grid: Grid, params: ChevronParams, feedback: FeedbackParams, dt: f64) -> Result<Self> {
        params.validate()?;
        feedback.validate(&grid)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param(format!("dt must be > 0, got {dt}")));
        }
        if !params.is_admissible() {
            warn!(
                "chevron parameters outside the well-posedness range (c1 < 1 or c1 >= 2 c2, h > 0): {params:?}"
            );
        }
        let basis = SineBasis::new(grid);
        let phi_symbol: Vec<f64> = match &grid {
            Grid::OneD(_) => basis.laplacian_symbol().iter().map(|l| params.d1 * l).collect(),
            Grid::TwoD(g) => anisotropic_symbol(params.d1, params.d2, g)?,
        };
        let a_denom = basis
            .laplacian_symbol()
            .iter()
            .map(|l| 1.0 + dt * l / params.tau_relax)
            .collect();
        let phi_denom = phi_symbol.iter().map(|s| 1.0 + dt * s).collect();
        Ok(Self {
            mask: feedback.mask(&grid),
            basis,
            params,
            feedback,
            dt,
            a_denom,
            phi_denom,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        self.basis.grid()
    }

    /// Advances the state by one step of size `dt`. The new time is `t + dt`.
    pub fn step(&self, state: &ForwardState) -> Result<ForwardState> {
        let grid = *self.grid();
        if state.a.grid() != &grid || state.phi.grid() != &grid {
            return Err(Error::param("state grid differs from solver grid"));
        }
        let p = &self.params;
        let a = state.a.values();
        let phi = state.phi.values();

        let mut ca = self.basis.forward(a)?;
        let mut cphi: Vec<Complex64> = phi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.basis.forward_in_place(&mut cphi);

        let dy_a = self.basis.dy_nodal(&ca);
        let dy_phi = self.basis.dy_nodal(&cphi);

        let mut ra = Vec::with_capacity(a.len());
        let mut rphi = Vec::with_capacity(a.len());
        for j in 0..a.len() {
            let (aj, fj) = (a[j], phi[j]);
            let mod2 = aj.norm_sqr();
            let mut r = aj * (1.0 - fj * fj - mod2);
            let mut s = -p.h * fj + fj * mod2;
            if let (Some(da), Some(dp)) = (&dy_a, &dy_phi) {
                r += -2.0 * I * p.c1 * fj * da[j] + I * p.beta * aj * dp[j].re;
                s -= p.c2 * (aj.conj() * da[j]).im;
            }
            ra.push(r);
            rphi.push(Complex64::new(s, 0.0));
        }
        self.basis.forward_in_place(&mut ra);
        self.basis.forward_in_place(&mut rphi);

        let k = self.dt / p.tau_relax;
        for i in 0..ca.len() {
            let mut rhs = ra[i];
            if self.mask[i] {
                rhs -= self.feedback.mu * ca[i];
            }
            ca[i] = (ca[i] + k * rhs) / self.a_denom[i];
            cphi[i] = (cphi[i] + self.dt * rphi[i]) / self.phi_denom[i];
        }
        self.basis.inverse_in_place(&mut ca);
        self.basis.inverse_in_place(&mut cphi);

        let next = ForwardState {
            t: state.t + self.dt,
            a: ComplexField::new(grid, ca)?,
            phi: RealField::new(grid, cphi.into_iter().map(|z| z.re).collect())?,
        };
        if !next.is_finite() {
            return Err(Error::NonFinite(format!(
                "forward state became non-finite at t = {:e}",
                next.t
            )));
        }
        Ok(next)
    }

    pub fn diagnostics(&self, state: &ForwardState, tau: f64) -> TrajectoryRecord {
        let ca = self.basis.forward(state.a.values()).expect("grid checked");
        let cphi = self.basis.forward_real(state.phi.values()).expect("grid checked");
        TrajectoryRecord {
            t: state.t,
            tau,
            l2_a: state.a.l2_norm(),
            h1_a: self.basis.gradient_norm(&ca),
            l2_phi: state.phi.l2_norm(),
            h1_phi: self.basis.gradient_norm_real(&cphi),
            energy: energy_from_parts(&self.basis, &ca, state.a.values()),
            max_abs_a: state.a.max_abs(),
        }
    }
}

pub fn step_forward(
    state: &ForwardState,
    p: &ChevronParams,
    fp: &FeedbackParams,
    dt: f64,
) -> Result<ForwardState> {
    ForwardSolver::new(*state.a.grid(), *p, *fp, dt)?.step(state)
}

#[derive(Debug, Clone)]
pub struct ForwardRun {
    pub records: Vec<TrajectoryRecord>,
    pub final_state: ForwardState,
}

/// Fixed-step integration over `[t0, t0 + t_end]`, recording the initial
/// state, every `record_every` steps, and the final state.
pub fn run_forward(
    state0: &ForwardState,
    p: &ChevronParams,
    fp: &FeedbackParams,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<ForwardRun> {
    let solver = ForwardSolver::new(*state0.a.grid(), *p, *fp, dt)?;
    run_forward_with(&solver, state0, t_end, record_every, |_, _| {})
}

/// As [`run_forward`], calling `observe(step, state)` after every step.
pub fn run_forward_with(
    solver: &ForwardSolver,
    state0: &ForwardState,
    t_end: f64,
    record_every: usize,
    mut observe: impl FnMut(usize, &ForwardState),
) -> Result<ForwardRun> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::param(format!("t_end must be finite and > 0, got {t_end}")));
    }
    if record_every == 0 {
        return Err(Error::param("record_every must be >= 1"));
    }
    if !state0.is_finite() {
        return Err(Error::NonFinite("initial state is not finite".into()));
    }
    let steps = (t_end / solver.dt() - 1e-9).ceil().max(1.0) as usize;
    let t0 = state0.t;
    let mut state = state0.clone();
    let mut records = vec![solver.diagnostics(&state, 0.0)];
    observe(0, &state);
    for step in 1..=steps {
        let mut next = solver.step(&state)?;
        next.t = t0 + step as f64 * solver.dt();
        state = next;
        observe(step, &state);
        if step % record_every == 0 || step == steps {
            records.push(solver.diagnostics(&state, solver.dt()));
        }
    }
    Ok(ForwardRun { records, final_state: state })
}

/// Least-squares slope of `ln(V1 norm)` against `t` over the second half of
/// the records. Records with zero norm are skipped.
pub fn measure_decay_rate(records: &[TrajectoryRecord]) -> Result<f64> {
    if records.len() < 10 {
        return Err(Error::UndefinedRate(format!(
            "need at least 10 records, got {}",
            records.len()
        )));
    }
    let tail = &records[records.len() / 2..];
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|r| r.v1_norm() > 0.0)
        .map(|r| (r.t, r.v1_norm().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::UndefinedRate("V1 norms vanish over the fit window".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::UndefinedRate("records share a single time".into()));
    }
    Ok(sxy / sxx)
}
