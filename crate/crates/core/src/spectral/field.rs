use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

fn check_len(grid: &Grid, got: usize) -> Result<()> {
    let expected = grid.node_count();
    if expected != got {
        return Err(Error::SizeMismatch { expected, got });
    }
    Ok(())
}

/// Complex amplitude `A` sampled at the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.node_count()],
            grid,
        }
    }

    /// Samples `f(x, y)` at every interior node (`y = 0` on 1D grids).
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = grid.node_coords().into_iter().map(|(x, y)| f(x, y)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `sup_x |A|` over interior nodes.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Nodal L2 norm with weight `h` per interior node.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        (s * self.grid.cell_measure()).sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z * factor).collect(),
        }
    }

    /// Largest nodewise modulus of the difference between two fields.
    pub fn max_abs_diff(&self, other: &ComplexField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Real director angle `phi` sampled at the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.node_count()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.node_coords().into_iter().map(|(x, y)| f(x, y)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v * v).sum();
        (s * self.grid.cell_measure()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Sine-series coefficients of a nodal field, in the grid's storage order.
///
/// The convention is `f(x_j) = sum_k c_k sin(k pi x_j / L)` (tensor product in 2D).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    grid: Grid,
    values: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// L2 norm of the represented function, `sqrt(P * sum |c_k|^2)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        (s * self.grid.parseval_factor()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::Grid1D;

    #[test]
    fn wrong_length_is_rejected() {
        let g: Grid = Grid1D::new(1.0, 8).unwrap().into();
        let err = ComplexField::new(g, vec![Complex64::new(0.0, 0.0); 7]).unwrap_err();
        assert!(matches!(err, Error::SizeMismatch { expected: 8, got: 7 }));
        assert!(RealField::new(g, vec![0.0; 9]).is_err());
        assert!(SpectralCoeffs::new(g, vec![]).is_err());
    }

    #[test]
    fn norms_of_constant_field() {
        let g: Grid = Grid1D::new(3.0, 2).unwrap().into();
        let f = ComplexField::new(g, vec![Complex64::new(3.0, 4.0); 2]).unwrap();
        assert_eq!(f.max_abs(), 5.0);
        assert!((f.l2_norm() - (2.0 * 25.0f64).sqrt()).abs() < 1e-14);
    }
}
