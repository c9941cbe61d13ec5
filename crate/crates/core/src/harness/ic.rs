use std::f64::consts::PI;

use num_complex::Complex64;

use super::config::{IcSpec, InitialCondition};
use super::output::read_snapshot_csv;
use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Grid, RealField};

fn x_length(grid: &Grid) -> f64 {
    match grid {
        Grid::OneD(g) => g.length(),
        Grid::TwoD(g) => g.lx(),
    }
}

fn y_envelope(grid: &Grid, y: f64) -> f64 {
    match grid {
        Grid::OneD(_) => 1.0,
        Grid::TwoD(g) => (PI * y / g.ly()).sin(),
    }
}

/// `sum a sin^3(k pi x / L)`.
pub fn sine_cubed_sum(terms: &[(f64, usize)], x: f64, length: f64) -> f64 {
    terms
        .iter()
        .map(|&(a, k)| a * (k as f64 * PI * x / length).sin().powi(3))
        .sum()
}

pub const OSCILLATORY_TERMS: [(f64, usize); 3] = [(5.0, 20), (2.0, 12), (-1.0, 4)];

/// Nodal values `(A, phi)` described by `spec`; the `phi` column of a file
/// is returned alongside so a single snapshot can seed both fields.
fn sample(spec: &IcSpec, grid: &Grid) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let l = x_length(grid);
    let coords = grid.node_coords();
    let real = |f: &dyn Fn(f64) -> f64| -> Vec<Complex64> {
        coords
            .iter()
            .map(|&(x, y)| Complex64::new(f(x) * y_envelope(grid, y), 0.0))
            .collect()
    };
    let values = match &spec.profile {
        InitialCondition::Oscillatory => real(&|x| sine_cubed_sum(&OSCILLATORY_TERMS, x, l)),
        InitialCondition::SineCubedSum(terms) => real(&|x| sine_cubed_sum(terms, x, l)),
        InitialCondition::SineMode { k, amplitude } => real(&|x| amplitude * (*k as f64 * PI * x / l).sin()),
        InitialCondition::ConstantModulus { value } => vec![Complex64::new(*value, 0.0); coords.len()],
        InitialCondition::FromFile { path } => {
            let rows = read_snapshot_csv(path)?;
            if rows.len() != coords.len() {
                return Err(Error::Domain(format!(
                    "{}: {} rows but the grid has {} nodes",
                    path.display(),
                    rows.len(),
                    coords.len()
                )));
            }
            for (row, &(x, _)) in rows.iter().zip(&coords) {
                if (row.x - x).abs() > 1e-9 * l {
                    return Err(Error::Domain(format!(
                        "{}: node x = {} does not match grid node {x}",
                        path.display(),
                        row.x
                    )));
                }
            }
            let a = rows.iter().map(|r| Complex64::new(r.re_a, r.im_a)).collect();
            let phi = rows.iter().map(|r| r.phi).collect();
            return Ok((a, phi));
        }
    };
    let phi = values.iter().map(|z| z.re).collect();
    Ok((values, phi))
}

fn rescale(values: &mut [Complex64], grid: &Grid, norm_sq: Option<f64>) -> Result<()> {
    let Some(target) = norm_sq else {
        return Ok(());
    };
    let current: f64 = grid.cell_measure() * values.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if current == 0.0 {
        if target == 0.0 {
            return Ok(());
        }
        return Err(Error::Domain("cannot rescale a zero initial condition".into()));
    }
    let s = (target / current).sqrt();
    values.iter_mut().for_each(|z| *z *= s);
    Ok(())
}

pub fn build_amplitude(spec: &IcSpec, grid: &Grid) -> Result<ComplexField> {
    let (mut a, _) = sample(spec, grid)?;
    rescale(&mut a, grid, spec.norm_sq)?;
    ComplexField::new(*grid, a)
}

/// Real field from `spec`; file input reads the `phi` column, other profiles
/// use their real values.
pub fn build_phi(spec: &IcSpec, grid: &Grid) -> Result<RealField> {
    let (_, phi) = sample(spec, grid)?;
    let mut z: Vec<Complex64> = phi.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    rescale(&mut z, grid, spec.norm_sq)?;
    RealField::new(*grid, z.into_iter().map(|c| c.re).collect())
}
