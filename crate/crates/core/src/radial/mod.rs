//! Numeric substrate: radial grid, quadrature, norms and the discrete Laplacian.

mod field;
mod grid;
mod ops;

pub use field::ComplexRadialField;
pub use grid::{RadialGrid, SymmetricBand, MIN_NODES, STIFFNESS_BANDWIDTH};
pub use ops::{
    boundary_mass, grad_l2_sq, inner_re, lp_integral, lp_norm, mass, norm_bundle, radial_laplacian,
    radial_sobolev_ratio, weighted_sup, NormBundle,
};

/// Builds a grid; see [`RadialGrid::new`].
pub fn make_grid(r_max: f64, n: usize) -> crate::Result<RadialGrid> {
    RadialGrid::new(r_max, n)
}
