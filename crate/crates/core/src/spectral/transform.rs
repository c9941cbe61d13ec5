//! Type-I discrete sine transform on interior nodes, computed through a
//! complex FFT of the odd extension (length `2(n + 1)`).
//!
//! Coefficient convention: `f(x_j) = sum_{k=1}^{n} c_k sin(k pi j / (n + 1))`,
//! so the analysis step carries the factor `2 / (n + 1)` per axis and the
//! synthesis step carries none.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{ComplexField, RealField, SpectralCoeffs};
use super::grid::Grid;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Unnormalized 1D sine and cosine sums of length `n`.
#[derive(Clone)]
pub struct SineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform").field("n", &self.n).finish()
    }
}

impl SineTransform {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Self { n, fft }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In place: `data[k-1] <- sum_j data[j-1] sin(pi j k / (n + 1))`.
    pub fn sine_sum(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n);
        let n = self.n;
        let big = 2 * (n + 1);
        let mut buf = vec![ZERO; big];
        for (j, &v) in data.iter().enumerate() {
            buf[j + 1] = v;
            buf[big - j - 1] = -v;
        }
        self.fft.process(&mut buf);
        // FFT of the odd extension is -2i times the sine sum.
        for (k, out) in data.iter_mut().enumerate() {
            let z = buf[k + 1];
            *out = Complex64::new(-z.im, z.re) * 0.5;
        }
    }

    /// In place: `data[j-1] <- sum_k data[k-1] cos(pi j k / (n + 1))`.
    pub fn cosine_sum(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n);
        let n = self.n;
        let big = 2 * (n + 1);
        let mut buf = vec![ZERO; big];
        for (k, &v) in data.iter().enumerate() {
            buf[k + 1] = v;
            buf[big - k - 1] = v;
        }
        self.fft.process(&mut buf);
        for (j, out) in data.iter_mut().enumerate() {
            *out = buf[j + 1] * 0.5;
        }
    }
}

/// Which 1D operation to apply along an axis.
#[derive(Clone, Copy)]
enum AxisOp {
    Sine,
    Cosine,
}

/// Grid-aware transform engine. Holds FFT plans so repeated transforms in a
/// time loop do not re-plan.
#[derive(Debug, Clone)]
pub struct SineBasis {
    grid: Grid,
    tx: SineTransform,
    ty: Option<SineTransform>,
    symbol: Vec<f64>,
}

impl SineBasis {
    pub fn new(grid: Grid) -> Self {
        let (tx, ty) = match &grid {
            Grid::OneD(g) => (SineTransform::new(g.n()), None),
            Grid::TwoD(g) => (SineTransform::new(g.nx()), Some(SineTransform::new(g.ny()))),
        };
        Self {
            symbol: grid.laplacian_symbol(),
            grid,
            tx,
            ty,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Laplacian eigenvalue per mode, in storage order.
    pub fn laplacian_symbol(&self) -> &[f64] {
        &self.symbol
    }

    fn check(&self, len: usize) -> Result<()> {
        let expected = self.grid.node_count();
        if len != expected {
            return Err(Error::SizeMismatch { expected, got: len });
        }
        Ok(())
    }

    fn apply(&self, data: &mut [Complex64], x_op: AxisOp, y_op: AxisOp) {
        let run = |t: &SineTransform, op: AxisOp, v: &mut [Complex64]| match op {
            AxisOp::Sine => t.sine_sum(v),
            AxisOp::Cosine => t.cosine_sum(v),
        };
        match &self.ty {
            None => run(&self.tx, x_op, data),
            Some(ty) => {
                let nx = self.tx.len();
                let ny = ty.len();
                for row in data.chunks_exact_mut(ny) {
                    run(ty, y_op, row);
                }
                let mut col = vec![ZERO; nx];
                for j in 0..ny {
                    for i in 0..nx {
                        col[i] = data[i * ny + j];
                    }
                    run(&self.tx, x_op, &mut col);
                    for i in 0..nx {
                        data[i * ny + j] = col[i];
                    }
                }
            }
        }
    }

    fn analysis_scale(&self) -> f64 {
        match &self.grid {
            Grid::OneD(g) => 2.0 / (g.n() + 1) as f64,
            Grid::TwoD(g) => 4.0 / ((g.nx() + 1) * (g.ny() + 1)) as f64,
        }
    }

    /// Nodal values to sine coefficients.
    pub fn forward(&self, nodal: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(nodal.len())?;
        let mut out = nodal.to_vec();
        self.forward_in_place(&mut out);
        Ok(out)
    }

    pub(crate) fn forward_in_place(&self, data: &mut [Complex64]) {
        self.apply(data, AxisOp::Sine, AxisOp::Sine);
        let s = self.analysis_scale();
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Sine coefficients to nodal values.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(coeffs.len())?;
        let mut out = coeffs.to_vec();
        self.inverse_in_place(&mut out);
        Ok(out)
    }

    pub(crate) fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.apply(data, AxisOp::Sine, AxisOp::Sine);
    }

    pub fn forward_real(&self, nodal: &[f64]) -> Result<Vec<f64>> {
        self.check(nodal.len())?;
        let mut buf: Vec<Complex64> = nodal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        Ok(buf.into_iter().map(|z| z.re).collect())
    }

    pub fn inverse_real(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check(coeffs.len())?;
        let mut buf: Vec<Complex64> = coeffs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inverse_in_place(&mut buf);
        Ok(buf.into_iter().map(|z| z.re).collect())
    }

    /// Nodal values of `d/dy` of the function with the given sine coefficients.
    /// The y-derivative turns the y sine series into a cosine series, which is
    /// summed exactly at the nodes. Returns `None` on 1D grids.
    pub fn dy_nodal(&self, coeffs: &[Complex64]) -> Option<Vec<Complex64>> {
        let Grid::TwoD(g) = &self.grid else {
            return None;
        };
        let ny = g.ny();
        let ly = g.ly();
        let mut data: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(s, &c)| c * ((s % ny + 1) as f64 * PI / ly))
            .collect();
        self.apply(&mut data, AxisOp::Sine, AxisOp::Cosine);
        Some(data)
    }

    /// L2 norm of the gradient, `sqrt(P * sum lambda_k |c_k|^2)`.
    pub fn gradient_norm(&self, coeffs: &[Complex64]) -> f64 {
        let s: f64 = coeffs
            .iter()
            .zip(&self.symbol)
            .map(|(c, l)| c.norm_sqr() * l)
            .sum();
        (s * self.grid.parseval_factor()).sqrt()
    }

    pub fn gradient_norm_real(&self, coeffs: &[f64]) -> f64 {
        let s: f64 = coeffs.iter().zip(&self.symbol).map(|(c, l)| c * c * l).sum();
        (s * self.grid.parseval_factor()).sqrt()
    }
}

pub fn sine_transform(field: &ComplexField) -> SpectralCoeffs {
    let basis = SineBasis::new(*field.grid());
    let mut values = field.values().to_vec();
    basis.forward_in_place(&mut values);
    SpectralCoeffs::new(*field.grid(), values).expect("length preserved")
}

pub fn sine_transform_real(field: &RealField) -> Vec<f64> {
    SineBasis::new(*field.grid())
        .forward_real(field.values())
        .expect("length preserved")
}

pub fn inverse_sine_transform(coeffs: &SpectralCoeffs) -> ComplexField {
    let basis = SineBasis::new(*coeffs.grid());
    let mut values = coeffs.values().to_vec();
    basis.inverse_in_place(&mut values);
    ComplexField::new(*coeffs.grid(), values).expect("length preserved")
}
