//! Sine-basis infrastructure for homogeneous Dirichlet problems on intervals
//! and rectangles: grids, nodal fields, the discrete sine transform, and the
//! diagonal operators the solvers need.

mod field;
mod grid;
mod operators;
mod transform;

pub use field::{ComplexField, RealField, SpectralCoeffs};
pub use grid::{dirichlet_eigenvalues, Eigenmode, Grid, Grid1D, Grid2D, ModeIndex};
pub use operators::{
    anisotropic_symbol, anisotropic_symbol_at, backward_step_multiplier, helmholtz_solve,
    helmholtz_solve_with, negative_laplacian,
};
pub(crate) use operators::check_backward_step;
pub use transform::{
    inverse_sine_transform, sine_transform, sine_transform_real, SineBasis, SineTransform,
};
