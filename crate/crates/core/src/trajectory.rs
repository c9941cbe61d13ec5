use crate::spectral::{ComplexField, RealField};

/// One diagnostics row of a run. `tau` is the step size that produced the
/// state (zero for the initial row); the phi columns are zero for backward runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub tau: f64,
    pub l2_a: f64,
    pub h1_a: f64,
    pub l2_phi: f64,
    pub h1_phi: f64,
    pub energy: f64,
    pub max_abs_a: f64,
}

impl TrajectoryRecord {
    /// Norm in `H1_0 x H1_0`: `sqrt(|grad A|^2 + |grad phi|^2)`.
    pub fn v1_norm(&self) -> f64 {
        (self.h1_a * self.h1_a + self.h1_phi * self.h1_phi).sqrt()
    }

    /// Norm in `L2 x L2`.
    pub fn v0_norm(&self) -> f64 {
        (self.l2_a * self.l2_a + self.l2_phi * self.l2_phi).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.tau,
            self.l2_a,
            self.h1_a,
            self.l2_phi,
            self.h1_phi,
            self.energy,
            self.max_abs_a,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Field state saved at a given step.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub a: ComplexField,
    pub phi: Option<RealField>,
}
