//! Threshold classification of initial data, the scaling normalization
//! `M(u) = E(u)`, and the coercivity functionals.
//!
//! Ratios are taken against the thresholds stored in a [`GroundStateProfile`],
//! so data and `Q` should live on comparable grids for the ratios to be
//! meaningful at the 1e-8 level.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, NlsError, Result};
use crate::ground_state::{random_smooth_field, GroundStateProfile};
use crate::radial::{norm_bundle, ComplexRadialField, NormBundle};

/// Result of checking initial data against both threshold conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// `M(u₀)²E(u₀)^{p-2} / M(Q)²E(Q)^{p-2}`; `None` when `E(u₀) < 0`.
    pub me_ratio: Option<f64>,
    /// `‖u₀‖²₂‖∇u₀‖₂^{p-2} / ‖Q‖²₂‖∇Q‖₂^{p-2}`
    pub kg_ratio: f64,
    pub below: bool,
    /// Common value of mass and energy after normalization; `None` when `E(u₀) <= 0`.
    pub e0: Option<f64>,
    /// Set for `u₀ = 0`, which is classified below by convention.
    pub trivial: bool,
    pub negative_energy: bool,
    pub norms: NormBundle,
}

pub fn classify(u0: &ComplexRadialField, p: f64, g: &GroundStateProfile) -> Result<ThresholdReport> {
    check_exponent(p)?;
    if (p - g.p).abs() > 1e-12 {
        return Err(NlsError::InvalidArgument(format!(
            "ground state computed for p = {}, data classified at p = {p}",
            g.p
        )));
    }
    let norms = norm_bundle(u0, p)?;
    if u0.is_zero() {
        return Ok(ThresholdReport {
            me_ratio: Some(0.0),
            kg_ratio: 0.0,
            below: true,
            e0: None,
            trivial: true,
            negative_energy: false,
            norms,
        });
    }
    let kg_ratio = norms.kinetic_product(p) / g.threshold_kg;
    let negative_energy = norms.energy < 0.0;
    let me_ratio = if negative_energy {
        None
    } else {
        Some(norms.mass * norms.mass * norms.energy.powf(p - 2.0) / g.threshold_me)
    };
    let below = matches!(me_ratio, Some(r) if r < 1.0) && kg_ratio < 1.0;
    let e0 = (norms.energy > 0.0).then(|| normalized_level(&norms, p));
    Ok(ThresholdReport {
        me_ratio,
        kg_ratio,
        below,
        e0,
        trivial: false,
        negative_energy,
        norms,
    })
}

// M and E after the rescaling with λ² = M/E: both equal M (M/E)^{2/p - 1}.
fn normalized_level(n: &NormBundle, p: f64) -> f64 {
    n.mass * (n.mass / n.energy).powf(2.0 / p - 1.0)
}

const LOG_LAMBDA_RANGE: f64 = 20.0;
const LOG_LAMBDA_TOL: f64 = 1e-12;

/// `u₀_λ(x) = λ^{2/p} u₀(λx)` with `M(u₀_λ) = E(u₀_λ)`.
///
/// The rescaled field lives on the dilated grid (`r_max / λ`, same node count),
/// where the discrete norms transform exactly like the continuous ones:
/// `M ↦ λ^{4/p-2} M` and `K, P, E ↦ λ^{4/p} (·)`. `λ` is found by bisection on
/// `log λ ∈ [-20, 20]`.
pub fn rescale_to_unit(u0: &ComplexRadialField, p: f64) -> Result<(ComplexRadialField, f64)> {
    let n = norm_bundle(u0, p)?;
    if !(n.energy > 0.0) {
        return Err(NlsError::NotRescalable(n.energy));
    }
    // log(M_λ / E_λ) = log(M/E) - 2 log λ is decreasing in log λ
    let gap = |s: f64| (n.mass / n.energy).ln() - 2.0 * s;
    let (mut lo, mut hi) = (-LOG_LAMBDA_RANGE, LOG_LAMBDA_RANGE);
    if gap(lo) < 0.0 || gap(hi) > 0.0 {
        return Err(NlsError::NotRescalable(n.energy));
    }
    while hi - lo > LOG_LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = (0.5 * (lo + hi)).exp();
    Ok((dilate(u0, lambda, p)?, lambda))
}

/// `λ^{2/p} u(λx)` on the dilated grid.
pub fn dilate(u: &ComplexRadialField, lambda: f64, p: f64) -> Result<ComplexRadialField> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(NlsError::InvalidArgument(format!("dilation factor must be positive, got {lambda}")));
    }
    let grid = Arc::new(u.grid().dilated(lambda)?);
    let amp = lambda.powf(2.0 / p);
    ComplexRadialField::new(grid, u.values().iter().map(|z| z * amp).collect())
}

/// `(‖∇f‖²₂ - (p/(p+2))‖f‖^{p+2}_{p+2}) / ‖f‖^{p+2}_{p+2}`.
///
/// The ground state argument is accepted for symmetry with the other checks; the
/// margin itself depends only on `f` and `p`.
pub fn coercivity_margin(f: &ComplexRadialField, p: f64, _g: &GroundStateProfile) -> Result<f64> {
    margin_of(&norm_bundle(f, p)?, p)
}

fn margin_of(n: &NormBundle, p: f64) -> Result<f64> {
    if !(n.potential > 0.0) {
        return Err(NlsError::UndefinedMargin);
    }
    Ok((n.kinetic - p / (p + 2.0) * n.potential) / n.potential)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityTrajectoryReport {
    /// `1 - kg_ratio(u(t₀))`
    pub initial_margin: f64,
    /// `min_k 1 - kg_ratio(u(t_k))`
    pub min_margin: f64,
    pub worst_index: usize,
    /// Some snapshot reached `kg_ratio >= 1`.
    pub violation: bool,
    /// The first snapshot had margin at least `delta`.
    pub initial_delta_met: bool,
}

pub fn coercivity_trajectory_check(
    snapshots: &[ComplexRadialField],
    p: f64,
    g: &GroundStateProfile,
    delta: f64,
) -> Result<CoercivityTrajectoryReport> {
    check_exponent(p)?;
    if snapshots.is_empty() {
        return Err(NlsError::InsufficientData("no snapshots to check".into()));
    }
    let mut min_margin = f64::INFINITY;
    let mut worst_index = 0;
    let mut initial_margin = 0.0;
    for (k, u) in snapshots.iter().enumerate() {
        let m = 1.0 - norm_bundle(u, p)?.kinetic_product(p) / g.threshold_kg;
        if k == 0 {
            initial_margin = m;
        }
        if m < min_margin {
            min_margin = m;
            worst_index = k;
        }
    }
    Ok(CoercivityTrajectoryReport {
        initial_margin,
        min_margin,
        worst_index,
        violation: min_margin <= 0.0,
        initial_delta_met: initial_margin >= delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityAudit {
    pub samples: usize,
    pub delta: f64,
    pub min_margin: f64,
    pub max_kg_ratio: f64,
    pub failures: usize,
}

/// Random smooth fields rescaled in amplitude to `kg_ratio ∈ [0.05, 1-δ]`;
/// every one of them should have a positive coercivity margin.
pub fn coercivity_audit(g: &GroundStateProfile, samples: usize, delta: f64, seed: u64) -> Result<CoercivityAudit> {
    if !(delta > 0.0 && delta < 0.95) {
        return Err(NlsError::InvalidArgument(format!("delta must lie in (0, 0.95), got {delta}")));
    }
    let p = g.p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = g.field.shared_grid().clone();
    let mut audit = CoercivityAudit {
        samples,
        delta,
        min_margin: f64::INFINITY,
        max_kg_ratio: 0.0,
        failures: 0,
    };
    for _ in 0..samples {
        let f = random_smooth_field(grid.clone(), &mut rng);
        let target = rng.gen_range(0.05..=1.0 - delta);
        let kg = norm_bundle(&f, p)?.kinetic_product(p) / g.threshold_kg;
        // kg_ratio is homogeneous of degree p in the amplitude
        let f = f.scaled(Complex64::new((target / kg).powf(1.0 / p), 0.0));
        let n = norm_bundle(&f, p)?;
        let m = margin_of(&n, p)?;
        audit.max_kg_ratio = audit.max_kg_ratio.max(n.kinetic_product(p) / g.threshold_kg);
        audit.min_margin = audit.min_margin.min(m);
        if m <= 0.0 {
            audit.failures += 1;
        }
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    use super::*;
    use crate::ground_state::shoot_ground_state;
    use crate::radial::RadialGrid;

    fn q3() -> &'static GroundStateProfile {
        static G: OnceLock<GroundStateProfile> = OnceLock::new();
        G.get_or_init(|| shoot_ground_state(3.0, 1e-10).unwrap())
    }

    fn gaussian(a: f64) -> ComplexRadialField {
        let grid = q3().field.shared_grid().clone();
        ComplexRadialField::from_real(grid, move |r| a * (-r * r).exp()).unwrap()
    }

    #[test]
    fn ground_state_sits_on_the_threshold() {
        let g = q3();
        let rep = classify(&g.field, 3.0, g).unwrap();
        assert_eq!(rep.kg_ratio, 1.0);
        assert!(!rep.below);
    }

    #[test]
    fn half_ground_state_is_below() {
        let g = q3();
        let rep = classify(&g.field.scaled(Complex64::new(0.5, 0.0)), 3.0, g).unwrap();
        assert!((rep.kg_ratio - 0.5f64.powi(3)).abs() < 1e-12);
        assert!(rep.me_ratio.unwrap() < 1.0);
        assert!(rep.below);
    }

    #[test]
    fn gaussian_at_nine_tenths_kinetic_threshold() {
        // at p = 2 the kinetic product is the mass π a²/2 and me_ratio = kg_ratio²
        let g = shoot_ground_state(2.0, 1e-10).unwrap();
        let kg = |a: f64| PI / 2.0 * a * a / g.threshold_kg;
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if kg(mid) < 0.9 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let grid = g.field.shared_grid().clone();
        let u = ComplexRadialField::from_real(grid, move |r| lo * (-r * r).exp()).unwrap();
        let rep = classify(&u, 2.0, &g).unwrap();
        assert!((rep.kg_ratio - 0.9).abs() < 1e-6, "{}", rep.kg_ratio);
        assert!((rep.me_ratio.unwrap() - 0.81).abs() < 1e-6);
        assert!(rep.below);
    }

    #[test]
    fn kinetic_condition_alone_is_not_enough_at_p3() {
        // a Gaussian at kg_ratio 0.9 for p = 3 has M²E above M(Q)²E(Q)
        let g = q3();
        let a = (0.9 * g.threshold_kg / (PI / 2.0 * PI.sqrt())).cbrt();
        let rep = classify(&gaussian(a), 3.0, g).unwrap();
        assert!((rep.kg_ratio - 0.9).abs() < 1e-6);
        assert!(rep.me_ratio.unwrap() > 1.0 && !rep.below);
    }

    #[test]
    fn negative_energy_and_zero_data() {
        let g = q3();
        let rep = classify(&gaussian(4.0), 3.0, g).unwrap();
        assert!(rep.negative_energy && rep.me_ratio.is_none() && !rep.below);
        let zero = ComplexRadialField::zeros(g.field.shared_grid().clone());
        let rep = classify(&zero, 3.0, g).unwrap();
        assert!(rep.trivial && rep.below);
    }

    #[test]
    fn rescaling_normalizes_and_preserves_ratios() {
        let g = q3();
        let u = gaussian(1.3);
        let (v, lambda) = rescale_to_unit(&u, 3.0).unwrap();
        let nv = norm_bundle(&v, 3.0).unwrap();
        assert!((nv.mass / nv.energy - 1.0).abs() < 1e-8);
        let before = classify(&u, 3.0, g).unwrap();
        let after = classify(&v, 3.0, g).unwrap();
        assert!((before.me_ratio.unwrap() / after.me_ratio.unwrap() - 1.0).abs() < 1e-10);
        assert!((before.kg_ratio / after.kg_ratio - 1.0).abs() < 1e-10);
        assert!((before.e0.unwrap() / nv.mass - 1.0).abs() < 1e-10);

        let (_, again) = rescale_to_unit(&v, 3.0).unwrap();
        assert!((again - 1.0).abs() < 1e-10, "{lambda} {again}");
    }

    #[test]
    fn gaussian_with_mass_four_times_energy() {
        // at p = 2, E(a e^{-r²}) = π a²/2 - π a⁴/16, so M = 4E at a² = 6
        let grid = Arc::new(RadialGrid::new(12.0, 2048).unwrap());
        let u = ComplexRadialField::from_real(grid, |r| 6f64.sqrt() * (-r * r).exp()).unwrap();
        let n = norm_bundle(&u, 2.0).unwrap();
        assert!((n.mass / n.energy - 4.0).abs() < 1e-5);
        let (v, lambda) = rescale_to_unit(&u, 2.0).unwrap();
        let nv = norm_bundle(&v, 2.0).unwrap();
        assert!((nv.mass / nv.energy - 1.0).abs() < 1e-8);
        assert!((lambda - 2.0).abs() < 1e-5);
    }

    #[test]
    fn non_positive_energy_is_not_rescalable() {
        assert!(matches!(rescale_to_unit(&gaussian(4.0), 3.0), Err(NlsError::NotRescalable(_))));
    }

    #[test]
    fn coercivity_margins() {
        let g = q3();
        assert!(coercivity_margin(&g.field, 3.0, g).unwrap().abs() < 1e-5);
        assert!(coercivity_margin(&g.field.scaled(Complex64::new(1.5, 0.0)), 3.0, g).unwrap() < 0.0);
        let u = gaussian(0.8).map(|r, z| z * Complex64::from_polar(1.0, 0.3 * r * r));
        let a = coercivity_margin(&u, 3.0, g).unwrap();
        let b = coercivity_margin(&u.scaled(Complex64::from_polar(1.0, 2.1)), 3.0, g).unwrap();
        assert!((a - b).abs() < 1e-13 * a.abs());
        let zero = ComplexRadialField::zeros(g.field.shared_grid().clone());
        assert!(matches!(coercivity_margin(&zero, 3.0, g), Err(NlsError::UndefinedMargin)));
    }

    #[test]
    fn single_snapshot_trajectory_check() {
        let g = q3();
        let u = gaussian(0.7);
        let kg = classify(&u, 3.0, g).unwrap().kg_ratio;
        let rep = coercivity_trajectory_check(std::slice::from_ref(&u), 3.0, g, 0.1).unwrap();
        assert_eq!(rep.min_margin, 1.0 - kg);
        assert!(!rep.violation && rep.initial_delta_met);
    }

    #[test]
    fn small_audit_has_no_failures() {
        let a = coercivity_audit(q3(), 40, 0.1, 7).unwrap();
        assert_eq!(a.failures, 0);
        assert!(a.max_kg_ratio <= 0.9 + 1e-12);
    }
}
