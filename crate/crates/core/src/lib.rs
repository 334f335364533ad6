//! Numerical toolkit for the focusing nonlinear Schrödinger equation
//! `(i∂_t + Δ)u = -|u|^p u` on the plane, restricted to radial data.
//!
//! * [`radial`]: grid, quadrature, norms and the discrete Laplacian.
//! * [`ground_state`]: the ground state `Q` by shooting, the sharp
//!   Gagliardo–Nirenberg constant and the threshold numbers.
//! * [`variational`]: threshold classification, scaling normalization and
//!   coercivity checks.
//! * [`evolve`]: Strang-split Crank–Nicolson time stepping and the free propagator.
//! * [`morawetz`]: localized virial weights, the action `A(t)`, its rate
//!   decomposition and the space-time potential estimate.
//! * [`diagnostics`]: scattering/blow-up verdicts, experiment configs and file output.

pub mod banded;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod ground_state;
pub mod morawetz;
pub mod ode;
pub mod radial;
pub mod variational;

pub use error::{NlsError, Result};
pub use radial::{ComplexRadialField, NormBundle, RadialGrid};
