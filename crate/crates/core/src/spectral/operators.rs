use std::f64::consts::PI;

use super::field::ComplexField;
use super::grid::Grid2D;
use super::transform::SineBasis;
use crate::error::{Error, Result};

/// Symbol of `-D1 d_xx - D2 d_yy` on every mode of the rectangle, in storage order.
pub fn anisotropic_symbol(d1: f64, d2: f64, grid: &Grid2D) -> Result<Vec<f64>> {
    check_diffusivities(d1, d2)?;
    let mut out = Vec::with_capacity(grid.nx() * grid.ny());
    for m in 1..=grid.nx() {
        for k in 1..=grid.ny() {
            out.push(d1 * grid.x_axis().eigenvalue(m) + d2 * grid.y_axis().eigenvalue(k));
        }
    }
    Ok(out)
}

/// Symbol of `-D1 d_xx - D2 d_yy` at a single mode `(m, k)`, both indices from 1.
pub fn anisotropic_symbol_at(d1: f64, d2: f64, grid: &Grid2D, m: usize, k: usize) -> Result<f64> {
    check_diffusivities(d1, d2)?;
    if m == 0 || k == 0 {
        return Err(Error::param(format!(
            "sine modes start at 1, got ({m}, {k}); the Dirichlet basis has no constant mode"
        )));
    }
    if m > grid.nx() || k > grid.ny() {
        return Err(Error::param(format!(
            "mode ({m}, {k}) outside the {}x{} grid",
            grid.nx(),
            grid.ny()
        )));
    }
    let wx = m as f64 * PI / grid.lx();
    let wy = k as f64 * PI / grid.ly();
    Ok(d1 * wx * wx + d2 * wy * wy)
}

fn check_diffusivities(d1: f64, d2: f64) -> Result<()> {
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::param(format!("D1 and D2 must be > 0, got D1 = {d1}, D2 = {d2}")));
    }
    Ok(())
}

/// Solves `(id - c * Laplacian) u = f` with homogeneous Dirichlet data,
/// mode by mode: `u_k = f_k / (1 + c lambda_k)`.
pub fn helmholtz_solve(c: f64, f: &ComplexField) -> Result<ComplexField> {
    helmholtz_solve_with(&SineBasis::new(*f.grid()), c, f)
}

pub fn helmholtz_solve_with(basis: &SineBasis, c: f64, f: &ComplexField) -> Result<ComplexField> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::param(format!(
            "Helmholtz coefficient must be finite and >= 0, got {c}"
        )));
    }
    let mut coeffs = basis.forward(f.values())?;
    for (z, l) in coeffs.iter_mut().zip(basis.laplacian_symbol()) {
        *z /= 1.0 + c * l;
    }
    basis.inverse_in_place(&mut coeffs);
    ComplexField::new(*f.grid(), coeffs)
}

/// Multiplier `(1 + eps lambda) / (1 + (eps - tau) lambda)` applied to a sine
/// mode with eigenvalue `lambda` by one implicit step of the regularized
/// backward linear flow.
///
/// For `0 < tau < eps` the value lies in `[1, eps / (eps - tau))` and is
/// increasing in `lambda`: high modes are amplified by a bounded factor.
pub fn backward_step_multiplier(eps: f64, tau: f64, lambda: f64) -> Result<f64> {
    check_backward_step(eps, tau)?;
    if !(lambda >= 0.0) {
        return Err(Error::param(format!("eigenvalue must be >= 0, got {lambda}")));
    }
    if lambda.is_infinite() {
        return Ok(eps / (eps - tau));
    }
    Ok((1.0 + eps * lambda) / (1.0 + (eps - tau) * lambda))
}

pub(crate) fn check_backward_step(eps: f64, tau: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::param(format!("eps must be > 0, got {eps}")));
    }
    if !(tau > 0.0) {
        return Err(Error::param(format!("tau must be > 0, got {tau}")));
    }
    if tau >= eps {
        return Err(Error::param(format!("tau must satisfy tau < eps, got tau = {tau}, eps = {eps}")));
    }
    Ok(())
}

/// Applies `-Laplacian` through the sine symbol.
pub fn negative_laplacian(basis: &SineBasis, f: &ComplexField) -> Result<ComplexField> {
    let mut coeffs = basis.forward(f.values())?;
    for (z, l) in coeffs.iter_mut().zip(basis.laplacian_symbol()) {
        *z *= *l;
    }
    basis.inverse_in_place(&mut coeffs);
    ComplexField::new(*f.grid(), coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::{dirichlet_eigenvalues, Grid, Grid1D};
    use num_complex::Complex64;

    #[test]
    fn isotropic_symbol_matches_laplacian() {
        let g = Grid2D::new(1.5, 2.5, 5, 7).unwrap();
        let sym = anisotropic_symbol(1.0, 1.0, &g).unwrap();
        assert_eq!(sym, Grid::TwoD(g).laplacian_symbol());
    }

    #[test]
    fn anisotropic_single_mode() {
        let g = Grid2D::new(PI, PI, 4, 4).unwrap();
        let v = anisotropic_symbol_at(2.0, 0.5, &g, 1, 1).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
        assert!(anisotropic_symbol_at(1.0, 1.0, &g, 0, 1).is_err());
        assert!(anisotropic_symbol_at(1.0, 1.0, &g, 1, 5).is_err());
        assert!(anisotropic_symbol(0.0, 1.0, &g).is_err());
        assert!(anisotropic_symbol(1.0, -1.0, &g).is_err());
    }

    #[test]
    fn helmholtz_examples() {
        let g: Grid = Grid1D::new(10.0, 64).unwrap().into();
        let f = ComplexField::from_fn(g, |x, _| Complex64::new((PI * x / 10.0).sin(), 0.0));

        let same = helmholtz_solve(0.0, &f).unwrap();
        assert!(same.max_abs_diff(&f) < 1e-14);

        let u = helmholtz_solve(0.1, &f).unwrap();
        let factor: f64 = 1.0 / (1.0 + 0.1 * 0.098_696_044_010_893_6);
        assert!((factor - 0.990_227).abs() < 1e-6);
        assert!(u.max_abs_diff(&f.scaled(Complex64::new(factor, 0.0))) < 1e-14);

        let z = helmholtz_solve(1.0, &ComplexField::zeros(g)).unwrap();
        assert_eq!(z.max_abs(), 0.0);

        assert!(helmholtz_solve(-0.1, &f).is_err());
    }

    #[test]
    fn multiplier_examples() {
        assert_eq!(backward_step_multiplier(0.1, 0.05, 0.0).unwrap(), 1.0);
        let m = backward_step_multiplier(0.1, 0.05, 100.0).unwrap();
        assert!((m - 11.0 / 6.0).abs() < 1e-14);
        let big = backward_step_multiplier(0.1, 0.05, 1e12).unwrap();
        assert!(big < 2.0 && 2.0 - big < 1e-9);
        assert!(backward_step_multiplier(0.1, 0.1, 1.0).is_err());
        assert!(backward_step_multiplier(0.1, 0.2, 1.0).is_err());
        assert!(backward_step_multiplier(0.1, 0.05, -1.0).is_err());
    }

    #[test]
    fn multiplier_sweep_is_bounded_and_increasing() {
        for &(eps, tau) in &[(0.1, 0.05), (0.5, 0.001), (1e-3, 9.9e-4)] {
            let bound = eps / (eps - tau);
            let mut prev = 0.0;
            for i in 0..400 {
                let lambda = 10f64.powf(-3.0 + i as f64 * 0.025);
                let m = backward_step_multiplier(eps, tau, lambda).unwrap();
                assert!(m >= 1.0 && m < bound);
                assert!(m > prev);
                prev = m;
            }
        }
    }

    #[test]
    fn laplacian_symbol_scales_sampled_modes() {
        let l = 10.0;
        let g: Grid = Grid1D::new(l, 128).unwrap().into();
        let basis = SineBasis::new(g);
        let eig = dirichlet_eigenvalues(&g);
        for k in [1usize, 5, 40, 127] {
            let f = ComplexField::from_fn(g, |x, _| {
                Complex64::new((k as f64 * PI * x / l).sin(), 0.0)
            });
            let lf = negative_laplacian(&basis, &f).unwrap();
            let expected = f.scaled(Complex64::new(eig[k - 1].lambda, 0.0));
            assert!(lf.max_abs_diff(&expected) < 1e-12 * eig[k - 1].lambda.max(1.0));
        }
    }
}
