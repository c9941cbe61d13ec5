use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform interior nodes `x_j = j h`, `j = 1..n`, on `(0, L)` with `h = L / (n + 1)`.
/// The boundary values at `0` and `L` are implicitly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    length: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::param(format!("grid length must be > 0, got {length}")));
        }
        if n < 2 {
            return Err(Error::param(format!("grid needs at least 2 interior nodes, got {n}")));
        }
        Ok(Self { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.n + 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..=self.n).map(|j| j as f64 * h).collect()
    }

    /// Continuum Dirichlet eigenvalue `(k pi / L)^2` for `k >= 1`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let w = k as f64 * PI / self.length;
        w * w
    }
}

/// Tensor-product interior grid on the rectangle `(0, Lx) x (0, Ly)`.
///
/// Nodal and modal values are stored row-major with the x index outermost:
/// storage index `i * ny + j` holds node `(x_{i+1}, y_{j+1})` or mode `(i+1, j+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    x: Grid1D,
    y: Grid1D,
}

impl Grid2D {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Ok(Self {
            x: Grid1D::new(lx, nx)?,
            y: Grid1D::new(ly, ny)?,
        })
    }

    pub fn x_axis(&self) -> &Grid1D {
        &self.x
    }

    pub fn y_axis(&self) -> &Grid1D {
        &self.y
    }

    pub fn nx(&self) -> usize {
        self.x.n
    }

    pub fn ny(&self) -> usize {
        self.y.n
    }

    pub fn lx(&self) -> f64 {
        self.x.length
    }

    pub fn ly(&self) -> f64 {
        self.y.length
    }
}

/// Either a 1D interval or a 2D rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    OneD(Grid1D),
    TwoD(Grid2D),
}

impl From<Grid1D> for Grid {
    fn from(g: Grid1D) -> Self {
        Grid::OneD(g)
    }
}

impl From<Grid2D> for Grid {
    fn from(g: Grid2D) -> Self {
        Grid::TwoD(g)
    }
}

/// Label of a sine mode: `One(k)` is `sin(k pi x / L)`, `Two(m, k)` is
/// `sin(m pi x / Lx) sin(k pi y / Ly)`. Indices start at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModeIndex {
    One(usize),
    Two(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenmode {
    pub index: ModeIndex,
    pub lambda: f64,
    /// Position of this mode in the coefficient storage of the grid.
    pub storage: usize,
}

impl Grid {
    pub fn node_count(&self) -> usize {
        match self {
            Grid::OneD(g) => g.n,
            Grid::TwoD(g) => g.nx() * g.ny(),
        }
    }

    /// Number of sine modes; equal to the node count.
    pub fn mode_count(&self) -> usize {
        self.node_count()
    }

    /// Quadrature weight of one interior node (`h` or `hx * hy`).
    pub fn cell_measure(&self) -> f64 {
        match self {
            Grid::OneD(g) => g.spacing(),
            Grid::TwoD(g) => g.x.spacing() * g.y.spacing(),
        }
    }

    /// Length of the interval or area of the rectangle.
    pub fn measure(&self) -> f64 {
        match self {
            Grid::OneD(g) => g.length,
            Grid::TwoD(g) => g.lx() * g.ly(),
        }
    }

    /// Constant `P` in `h * sum |f_j|^2 = P * sum |c_k|^2` for the coefficient
    /// convention `f(x_j) = sum_k c_k sin(k pi x_j / L)`: `L / 2` in 1D and
    /// `Lx Ly / 4` in 2D.
    pub fn parseval_factor(&self) -> f64 {
        match self {
            Grid::OneD(g) => g.length / 2.0,
            Grid::TwoD(g) => g.lx() * g.ly() / 4.0,
        }
    }

    pub fn mode_at(&self, storage: usize) -> ModeIndex {
        match self {
            Grid::OneD(_) => ModeIndex::One(storage + 1),
            Grid::TwoD(g) => ModeIndex::Two(storage / g.ny() + 1, storage % g.ny() + 1),
        }
    }

    /// Laplacian eigenvalue of every mode, in coefficient storage order.
    pub fn laplacian_symbol(&self) -> Vec<f64> {
        match self {
            Grid::OneD(g) => (1..=g.n).map(|k| g.eigenvalue(k)).collect(),
            Grid::TwoD(g) => {
                let mut out = Vec::with_capacity(g.nx() * g.ny());
                for m in 1..=g.nx() {
                    let lx = g.x.eigenvalue(m);
                    for k in 1..=g.ny() {
                        out.push(lx + g.y.eigenvalue(k));
                    }
                }
                out
            }
        }
    }

    /// Node coordinates `(x, y)`; `y` is zero on a 1D grid.
    pub fn node_coords(&self) -> Vec<(f64, f64)> {
        match self {
            Grid::OneD(g) => g.nodes().into_iter().map(|x| (x, 0.0)).collect(),
            Grid::TwoD(g) => {
                let xs = g.x.nodes();
                let ys = g.y.nodes();
                xs.iter()
                    .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
                    .collect()
            }
        }
    }
}

/// Dirichlet Laplacian eigenvalues of the grid's sine modes, ascending, with
/// ties broken by lexicographic order of the mode index.
///
/// These are the continuum values `(k pi / L)^2` (and their 2D sums), not
/// the eigenvalues of a finite-difference stencil.
pub fn dirichlet_eigenvalues(grid: &Grid) -> Vec<Eigenmode> {
    let mut modes: Vec<Eigenmode> = grid
        .laplacian_symbol()
        .into_iter()
        .enumerate()
        .map(|(storage, lambda)| Eigenmode {
            index: grid.mode_at(storage),
            lambda,
            storage,
        })
        .collect();
    modes.sort_by(|a, b| match a.lambda.partial_cmp(&b.lambda) {
        Some(Ordering::Equal) | None => a.index.cmp(&b.index),
        Some(o) => o,
    });
    modes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid1D::new(0.0, 10).is_err());
        assert!(Grid1D::new(-1.0, 10).is_err());
        assert!(Grid1D::new(1.0, 1).is_err());
        assert!(Grid2D::new(1.0, 1.0, 4, 1).is_err());
    }

    #[test]
    fn spacing_and_nodes() {
        let g = Grid1D::new(10.0, 4).unwrap();
        assert_eq!(g.spacing(), 2.0);
        assert_eq!(g.nodes(), vec![2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn first_eigenvalue_for_length_ten() {
        let g: Grid = Grid1D::new(10.0, 50).unwrap().into();
        let eig = dirichlet_eigenvalues(&g);
        assert!((eig[0].lambda - 0.098_696_044_010_893_6).abs() < 1e-15);
        assert_eq!(eig[0].index, ModeIndex::One(1));
    }

    #[test]
    fn unit_pi_interval_gives_squares() {
        let g: Grid = Grid1D::new(PI, 20).unwrap().into();
        for (i, e) in dirichlet_eigenvalues(&g).iter().enumerate() {
            let k = (i + 1) as f64;
            assert!((e.lambda - k * k).abs() < 1e-12 * k * k);
        }
    }

    #[test]
    fn square_eigenvalues_and_tie_order() {
        let g: Grid = Grid2D::new(PI, PI, 6, 6).unwrap().into();
        let eig = dirichlet_eigenvalues(&g);
        assert!((eig[0].lambda - 2.0).abs() < 1e-12);
        assert!((eig[1].lambda - 5.0).abs() < 1e-12);
        assert!((eig[2].lambda - 5.0).abs() < 1e-12);
        assert_eq!(eig[1].index, ModeIndex::Two(1, 2));
        assert_eq!(eig[2].index, ModeIndex::Two(2, 1));
        assert!(eig.windows(2).all(|w| w[0].lambda <= w[1].lambda));
    }

    #[test]
    fn storage_index_round_trip() {
        let g: Grid = Grid2D::new(1.0, 2.0, 3, 5).unwrap().into();
        for e in dirichlet_eigenvalues(&g) {
            assert_eq!(g.mode_at(e.storage), e.index);
        }
    }
}
