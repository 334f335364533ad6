use serde::{Deserialize, Serialize};

use super::field::ComplexRadialField;
use crate::error::{check_exponent, NlsError, Result};

/// Mass, kinetic and potential norms of a field together with its energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBundle {
    /// `M(u) = ‖u‖²_{L²}`
    pub mass: f64,
    /// `‖∇u‖²_{L²}`
    pub kinetic: f64,
    /// `‖u‖^{p+2}_{L^{p+2}}`
    pub potential: f64,
    /// `kinetic / 2 - potential / (p + 2)`
    pub energy: f64,
    /// `‖u‖_{H¹} = (mass + kinetic)^{1/2}`
    pub h1: f64,
}

impl NormBundle {
    fn assemble(mass: f64, kinetic: f64, potential: f64, p: f64) -> Self {
        Self {
            mass,
            kinetic,
            potential,
            energy: kinetic / 2.0 - potential / (p + 2.0),
            h1: (mass + kinetic).sqrt(),
        }
    }

    /// `‖u‖²₂ ‖∇u‖₂^{p-2}`, the quantity compared against the ground state in the
    /// kinetic threshold condition.
    pub fn kinetic_product(&self, p: f64) -> f64 {
        self.mass * self.kinetic.powf((p - 2.0) / 2.0)
    }
}

/// `(∫|f|^q 2πr dr)^{1/q}`.
pub fn lp_norm(f: &ComplexRadialField, q: f64) -> Result<f64> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(NlsError::InvalidArgument(format!("L^q norm needs q >= 1, got {q}")));
    }
    let integral = lp_integral(f, q);
    Ok(integral.powf(1.0 / q))
}

/// `∫|f|^q 2πr dr` without the final root.
pub fn lp_integral(f: &ComplexRadialField, q: f64) -> f64 {
    f.grid()
        .weights()
        .iter()
        .zip(f.values())
        .map(|(w, z)| {
            let m = z.norm();
            if m == 0.0 {
                0.0
            } else {
                w * m.powf(q)
            }
        })
        .sum()
}

pub fn mass(f: &ComplexRadialField) -> f64 {
    f.grid()
        .weights()
        .iter()
        .zip(f.values())
        .map(|(w, z)| w * z.norm_sqr())
        .sum()
}

/// `∫|∂_r f|² 2πr dr` from the fourth-order staggered derivative.
pub fn grad_l2_sq(f: &ComplexRadialField) -> f64 {
    let grid = f.grid();
    grid.derivative(f.values())
        .iter()
        .zip(grid.staggered_weights())
        .map(|(d, w)| w * d.norm_sqr())
        .sum()
}

pub fn norm_bundle(f: &ComplexRadialField, p: f64) -> Result<NormBundle> {
    check_exponent(p)?;
    Ok(NormBundle::assemble(
        mass(f),
        grad_l2_sq(f),
        lp_integral(f, p + 2.0),
        p,
    ))
}

/// Discrete Laplacian `-W⁻¹K f` on node values.
///
/// This is the operator the time stepper uses; it is self-adjoint in the
/// quadrature inner product. In the interior it is a fourth-order stencil, at
/// the innermost node it reduces to the even-extension closure (exact on `r²`),
/// and past `r_max` values are odd (Dirichlet).
pub fn radial_laplacian(f: &ComplexRadialField) -> ComplexRadialField {
    let grid = f.grid();
    let k = grid.stiffness();
    let kf = k.apply(f.values());
    let values = kf
        .iter()
        .zip(grid.weights())
        .map(|(z, w)| -z / *w)
        .collect();
    ComplexRadialField::from_parts(f.shared_grid().clone(), values)
}

/// `max_k r_k^{1/2}|f(r_k)|`.
pub fn weighted_sup(f: &ComplexRadialField) -> f64 {
    f.grid()
        .nodes()
        .iter()
        .zip(f.values())
        .map(|(r, z)| r.sqrt() * z.norm())
        .fold(0.0, f64::max)
}

/// `max r^{1/2}|f| / ‖f‖_{H¹}`, the constant-free side of the radial Sobolev embedding.
pub fn radial_sobolev_ratio(f: &ComplexRadialField) -> Result<f64> {
    if f.is_zero() {
        return Err(NlsError::UndefinedRatio);
    }
    let h1 = (mass(f) + grad_l2_sq(f)).sqrt();
    Ok(weighted_sup(f) / h1)
}

/// Mass carried by nodes with `r > fraction * r_max`.
pub fn boundary_mass(f: &ComplexRadialField, fraction: f64) -> f64 {
    let cut = fraction * f.grid().r_max();
    f.grid()
        .nodes()
        .iter()
        .zip(f.grid().weights())
        .zip(f.values())
        .filter(|((r, _), _)| **r > cut)
        .map(|((_, w), z)| w * z.norm_sqr())
        .sum()
}

/// Real inner product `Re ∫ f ḡ 2πr dr`.
pub fn inner_re(f: &ComplexRadialField, g: &ComplexRadialField) -> f64 {
    f.grid()
        .weights()
        .iter()
        .zip(f.values().iter().zip(g.values()))
        .map(|(w, (a, b))| w * (a * b.conj()).re)
        .sum()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::radial::RadialGrid;

    fn gaussian(n: usize, r_max: f64, a: f64) -> ComplexRadialField {
        let g = Arc::new(RadialGrid::new(r_max, n).unwrap());
        ComplexRadialField::from_real(g, move |r| a * (-r * r).exp()).unwrap()
    }

    #[test]
    fn zero_field_norms() {
        let g = Arc::new(RadialGrid::new(4.0, 64).unwrap());
        let z = ComplexRadialField::zeros(g);
        assert_eq!(lp_norm(&z, 2.0).unwrap(), 0.0);
        let b = norm_bundle(&z, 3.0).unwrap();
        assert_eq!((b.mass, b.kinetic, b.potential, b.energy, b.h1), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(matches!(radial_sobolev_ratio(&z), Err(NlsError::UndefinedRatio)));
    }

    #[test]
    fn gaussian_lp_norms() {
        let f = gaussian(2048, 10.0, 1.0);
        let l2 = lp_norm(&f, 2.0).unwrap();
        assert!((l2 - (PI / 2.0).sqrt()).abs() < 1e-9);
        let l4 = lp_norm(&f, 4.0).unwrap();
        assert!((l4 - (PI / 4.0).powf(0.25)).abs() < 1e-9);
        assert!(matches!(lp_norm(&f, 0.5), Err(NlsError::InvalidArgument(_))));
    }

    #[test]
    fn gaussian_gradient_and_bundle() {
        let f = gaussian(4096, 10.0, 1.0);
        let k = grad_l2_sq(&f);
        assert!(((k - PI) / PI).abs() < 1e-6, "{k}");

        let b = norm_bundle(&f, 2.0).unwrap();
        assert!((b.mass - PI / 2.0).abs() < 1e-8);
        assert!((b.potential - PI / 4.0).abs() < 1e-8);
        assert!((b.energy - 7.0 * PI / 16.0).abs() < 1e-6);

        let b4 = norm_bundle(&f, 4.0).unwrap();
        assert!((b4.potential - PI / 6.0).abs() < 1e-8);
        assert!((b4.energy - (PI / 2.0 - PI / 36.0)).abs() < 1e-6);
        assert_eq!(b4.energy, b4.kinetic / 2.0 - b4.potential / 6.0);

        assert!(matches!(norm_bundle(&f, 1.5), Err(NlsError::UnsupportedExponent(_))));
    }

    #[test]
    fn gradient_is_quadratically_homogeneous() {
        let f = gaussian(1024, 8.0, 1.0);
        let g = gaussian(1024, 8.0, 3.0);
        assert!((grad_l2_sq(&g) - 9.0 * grad_l2_sq(&f)).abs() < 1e-12 * grad_l2_sq(&g));
    }

    #[test]
    fn constant_has_no_interior_gradient() {
        let g = Arc::new(RadialGrid::new(2.0, 64).unwrap());
        let c = ComplexRadialField::from_real(g.clone(), |_| 1.7).unwrap();
        let d = g.derivative(c.values());
        assert!(d[..62].iter().all(|z| z.norm() == 0.0));
        let lap = radial_laplacian(&c);
        assert!(lap.values()[..60].iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn laplacian_of_gaussian() {
        for &n in &[512usize, 1024] {
            let f = gaussian(n, 8.0, 1.0);
            let lap = radial_laplacian(&f);
            let err = f
                .grid()
                .nodes()
                .iter()
                .zip(lap.values())
                .map(|(r, z)| (z.re - (4.0 * r * r - 4.0) * (-r * r).exp()).abs())
                .fold(0.0, f64::max);
            let h = f.grid().spacing();
            assert!(err < 2.0 * h * h, "n={n}: {err}");
        }
    }

    #[test]
    fn laplacian_of_r_squared_near_origin() {
        let g = Arc::new(RadialGrid::new(1.0, 64).unwrap());
        let f = ComplexRadialField::from_real(g, |r| r * r).unwrap();
        let lap = radial_laplacian(&f);
        for z in &lap.values()[..20] {
            assert!((z.re - 4.0).abs() < 1e-9, "{}", z.re);
        }
    }

    #[test]
    fn sobolev_ratio_of_gaussian() {
        let f = gaussian(2048, 10.0, 1.0);
        let r = radial_sobolev_ratio(&f).unwrap();
        assert!(r > 0.0 && r < 1.0);
        let g = gaussian(2048, 10.0, -4.5);
        assert!((radial_sobolev_ratio(&g).unwrap() - r).abs() < 1e-14);
    }
}
