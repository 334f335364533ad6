use std::sync::Arc;

use num_complex::Complex64;

use super::grid::RadialGrid;
use crate::error::{NlsError, Result};

/// Complex radial function sampled on the nodes of a [`RadialGrid`].
///
/// Construction rejects NaN/Inf samples; the grid is shared so snapshots of
/// one run are cheap to keep around.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRadialField {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
}

impl ComplexRadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(NlsError::InvalidArgument(format!(
                "field has {} samples, grid has {} nodes",
                values.len(),
                grid.n()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NlsError::NonFinite);
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(r)` at every node.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn from_real(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |r| Complex64::new(f(r), 0.0))
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.n();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Wraps values produced internally; callers guarantee finiteness.
    pub(crate) fn from_parts(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(grid.n(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self::from_parts(self.grid.clone(), self.values.iter().map(|z| z * c).collect())
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&r, &z)| f(r, z))
            .collect();
        Self::from_parts(self.grid.clone(), values)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(NlsError::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self::from_parts(self.grid.clone(), values))
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Even extrapolation to `r = 0` from the first three nodes.
    pub fn origin_value(&self) -> Complex64 {
        // u(r) ≈ a + b r² + c r⁴ through r = h/2, 3h/2, 5h/2
        let v = &self.values;
        if v.len() < 3 {
            return v[0];
        }
        (v[0] * 450.0 - v[1] * 75.0 + v[2] * 9.0) / 384.0
    }
}
