//! Ground state `Q` of `-ΔQ + Q - Q^{p+1} = 0` and its variational constants.
//!
//! `Q` is found by shooting on `Q(0)`: the radial ODE
//! `Q'' + Q'/r - Q + Q^{p+1} = 0`, `Q'(0) = 0`, is integrated outward and the
//! initial value is bisected between data that falls through zero and data that
//! turns back up while still positive. The converged profile is sampled on the
//! grid and continued past the reliable radius by the decaying Bessel tail
//! `A·K₀(r)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, NlsError, Result};
use crate::ode::Dopri5;
use crate::radial::{norm_bundle, ComplexRadialField, NormBundle, RadialGrid};

/// Default grid used by [`shoot_ground_state`].
pub const DEFAULT_R_MAX: f64 = 30.0;
pub const DEFAULT_NODES: usize = 8192;

/// Outcome of one shot from `Q(0) = q0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shot {
    /// `Q` changed sign at radius `r`: the initial value was too large.
    CrossesZero(f64),
    /// `Q'` became positive while `Q > 0`: the initial value was too small.
    TurnsUp(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    /// Scan range and step for the initial bracket search.
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_step: f64,
    /// Integration stops here if neither event happened (counted as `TurnsUp`).
    pub r_end: f64,
    /// Relative decay level `Q < graft_level·Q(0)` where the tail takes over.
    pub graft_level: f64,
    pub ode: Dopri5,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            scan_lo: 1.0,
            scan_hi: 8.0,
            scan_step: 0.5,
            r_end: 80.0,
            graft_level: 1e-8,
            ode: Dopri5 {
                rtol: 1e-13,
                atol: 1e-18,
                h_init: 1e-4,
                h_max: 0.05,
                max_steps: 2_000_000,
            },
        }
    }
}

/// Ground state on a grid plus the constants derived from it.
#[derive(Debug, Clone)]
pub struct GroundStateProfile {
    pub p: f64,
    pub field: ComplexRadialField,
    /// `Q(0)`, midpoint of the final bisection bracket.
    pub q0: f64,
    pub q0_bracket: (f64, f64),
    /// Sharp Gagliardo–Nirenberg constant `C₀`.
    pub c0: f64,
    pub norms: NormBundle,
    /// `M(Q)² E(Q)^{p-2}`
    pub threshold_me: f64,
    /// `‖Q‖²₂ ‖∇Q‖₂^{p-2}`
    pub threshold_kg: f64,
    /// Radius where the shooting solution hands over to the exponential tail.
    pub graft_radius: f64,
}

/// JSON record emitted by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GroundStateRecord {
    pub p: f64,
    pub q0: f64,
    pub c0: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    pub threshold_me: f64,
    pub threshold_kg: f64,
}

impl GroundStateProfile {
    pub fn record(&self) -> GroundStateRecord {
        GroundStateRecord {
            p: self.p,
            q0: self.q0,
            c0: self.c0,
            mass: self.norms.mass,
            kinetic: self.norms.kinetic,
            potential: self.norms.potential,
            energy: self.norms.energy,
            threshold_me: self.threshold_me,
            threshold_kg: self.threshold_kg,
        }
    }

    /// Re-samples the converged profile on another grid.
    pub fn sample_on(&self, grid: Arc<RadialGrid>) -> Result<ComplexRadialField> {
        let (values, _) = profile_values(
            self.p,
            self.q0_bracket,
            grid.nodes(),
            &ShootingOptions::default(),
        )?;
        ComplexRadialField::new(grid, values.into_iter().map(|q| Complex64::new(q, 0.0)).collect())
    }

    /// Profile with the field replaced and every derived constant recomputed.
    pub fn with_field(&self, field: ComplexRadialField) -> Result<Self> {
        let mut out = assemble(self.p, field, self.q0_bracket, self.graft_radius)?;
        out.q0 = self.q0;
        Ok(out)
    }
}

fn rhs(p: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    move |r, y| {
        let q = y[0];
        [y[1], -y[1] / r + q - q.abs().powf(p) * q]
    }
}

/// Series start `Q ≈ q0 + c₁r² + c₂r⁴` near the regular singular point.
fn series(p: f64, q0: f64, r: f64) -> [f64; 2] {
    let c1 = (q0 - q0.powf(p + 1.0)) / 4.0;
    let c2 = (1.0 - (p + 1.0) * q0.powf(p)) * c1 / 16.0;
    [q0 + c1 * r * r + c2 * r.powi(4), 2.0 * c1 * r + 4.0 * c2 * r.powi(3)]
}

const R_START: f64 = 1e-3;

/// Integrates from `Q(0) = q0` until the solution is classified.
pub fn shoot(p: f64, q0: f64, opts: &ShootingOptions) -> Result<Shot> {
    let mut shot = Shot::TurnsUp(opts.r_end);
    opts.ode.integrate(rhs(p), R_START, series(p, q0, R_START), opts.r_end, &[], |info| {
        if info.y[0] < 0.0 {
            shot = Shot::CrossesZero(info.t);
            false
        } else if info.y[1] > 0.0 {
            shot = Shot::TurnsUp(info.t);
            false
        } else {
            true
        }
    })?;
    Ok(shot)
}

/// Bisection bracket `(turns_up, crosses_zero)` for `Q(0)` of width below `tol`.
pub fn bracket_q0(p: f64, tol: f64, opts: &ShootingOptions) -> Result<(f64, f64)> {
    check_exponent(p)?;
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(NlsError::InvalidArgument(format!(
            "shooting tolerance must lie in (0, 1e-6], got {tol}"
        )));
    }
    let mut lo = None;
    let mut hi = None;
    let steps = ((opts.scan_hi - opts.scan_lo) / opts.scan_step).round() as usize;
    for k in 0..=steps {
        let q = opts.scan_lo + k as f64 * opts.scan_step;
        match shoot(p, q, opts)? {
            Shot::TurnsUp(_) => lo = Some(q),
            Shot::CrossesZero(_) => {
                if lo.is_some() {
                    hi = Some(q);
                    break;
                }
            }
        }
    }
    let (mut lo, mut hi) = match (lo, hi) {
        (Some(l), Some(h)) => (l, h),
        _ => {
            return Err(NlsError::BracketFailure {
                p,
                lo: opts.scan_lo,
                hi: opts.scan_hi,
            })
        }
    };
    if tol < 4.0 * f64::EPSILON * hi {
        return Err(NlsError::ToleranceUnreachable(tol));
    }
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(NlsError::ToleranceUnreachable(tol));
        }
        match shoot(p, mid, opts)? {
            Shot::TurnsUp(_) => lo = mid,
            Shot::CrossesZero(_) => hi = mid,
        }
    }
    Ok((lo, hi))
}

/// Samples of the profile at `nodes` plus the graft radius.
fn profile_values(
    p: f64,
    bracket: (f64, f64),
    nodes: &[f64],
    opts: &ShootingOptions,
) -> Result<(Vec<f64>, f64)> {
    let trace = |q0: f64| -> Result<Vec<f64>> {
        let mut out: Vec<f64> = nodes
            .iter()
            .take_while(|&&r| r <= R_START)
            .map(|&r| series(p, q0, r.max(0.0))[0])
            .collect();
        let stops: Vec<f64> = nodes.iter().copied().filter(|&r| r > R_START && r < opts.r_end).collect();
        opts.ode.integrate(rhs(p), R_START, series(p, q0, R_START), opts.r_end, &stops, |info| {
            if info.stop.is_some() {
                out.push(info.y[0]);
            }
            info.y[0] > 0.0 && info.y[1] <= 0.0
        })?;
        Ok(out)
    };
    let lo = trace(bracket.0)?;
    let hi = trace(bracket.1)?;
    let q0 = 0.5 * (bracket.0 + bracket.1);

    let usable = lo.len().min(hi.len());
    let mut graft = usable;
    for k in 0..usable {
        let mid = 0.5 * (lo[k] + hi[k]);
        let spread = (hi[k] - lo[k]).abs();
        if mid < opts.graft_level * q0 || spread > 1e-3 * mid.abs() || mid <= 0.0 {
            graft = k;
            break;
        }
    }
    if graft < 2 {
        return Err(NlsError::SolverFailure(
            "shooting profile unreliable before the first grid nodes".into(),
        ));
    }
    let mut values: Vec<f64> = (0..graft).map(|k| 0.5 * (lo[k] + hi[k])).collect();
    // enforce monotone decay at the seam before continuing with the tail
    let seam = graft - 1;
    let r_seam = nodes[seam];
    let amplitude = values[seam] / bessel_k0_tail(r_seam);
    for &r in &nodes[graft..] {
        values.push(amplitude * bessel_k0_tail(r));
    }
    Ok((values, r_seam))
}

/// `K₀(r)` from its large-argument expansion; accurate to ~1e-10 relative for `r >= 8`.
pub fn bessel_k0_tail(r: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * (-(odd * odd)) / (k as f64 * 8.0 * r);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
    }
    (PI / (2.0 * r)).sqrt() * (-r).exp() * sum
}

fn assemble(
    p: f64,
    field: ComplexRadialField,
    bracket: (f64, f64),
    graft_radius: f64,
) -> Result<GroundStateProfile> {
    let norms = norm_bundle(&field, p)?;
    let threshold_kg = norms.kinetic_product(p);
    let threshold_me = norms.mass * norms.mass * norms.energy.powf(p - 2.0);
    let c0 = (p + 2.0) / (p * threshold_kg);
    Ok(GroundStateProfile {
        p,
        field,
        q0: 0.5 * (bracket.0 + bracket.1),
        q0_bracket: bracket,
        c0,
        norms,
        threshold_me,
        threshold_kg,
        graft_radius,
    })
}

/// Ground state on the default grid (`r_max = 30`, 8192 nodes).
pub fn shoot_ground_state(p: f64, tol: f64) -> Result<GroundStateProfile> {
    let grid = Arc::new(RadialGrid::new(DEFAULT_R_MAX, DEFAULT_NODES)?);
    shoot_ground_state_on(grid, p, tol)
}

pub fn shoot_ground_state_on(grid: Arc<RadialGrid>, p: f64, tol: f64) -> Result<GroundStateProfile> {
    shoot_ground_state_with(grid, p, tol, &ShootingOptions::default())
}

pub fn shoot_ground_state_with(
    grid: Arc<RadialGrid>,
    p: f64,
    tol: f64,
    opts: &ShootingOptions,
) -> Result<GroundStateProfile> {
    let bracket = bracket_q0(p, tol, opts)?;
    let (values, graft) = profile_values(p, bracket, grid.nodes(), opts)?;
    let field = ComplexRadialField::new(grid, values.into_iter().map(|q| Complex64::new(q, 0.0)).collect())?;
    assemble(p, field, bracket, graft)
}

/// Pohozaev residuals `(ρ₁, ρ₂)` of an arbitrary field.
pub fn pohozaev_residuals_of(field: &ComplexRadialField, p: f64) -> Result<(f64, f64)> {
    let n = norm_bundle(field, p)?;
    let rho1 = n.mass / (2.0 / (p + 2.0) * n.potential) - 1.0;
    let rho2 = n.kinetic / (p / (p + 2.0) * n.potential) - 1.0;
    Ok((rho1, rho2))
}

/// `ρ₁ = M / (2P/(p+2)) - 1`, `ρ₂ = K / (pP/(p+2)) - 1`.
pub fn pohozaev_residuals(g: &GroundStateProfile) -> (f64, f64) {
    let n = &g.norms;
    let p = g.p;
    (
        n.mass / (2.0 / (p + 2.0) * n.potential) - 1.0,
        n.kinetic / (p / (p + 2.0) * n.potential) - 1.0,
    )
}

/// Both routes to `C₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnConstant {
    /// `(p+2) / (p · ‖Q‖²₂‖∇Q‖₂^{p-2})`
    pub from_threshold: f64,
    /// `‖Q‖^{p+2}_{p+2} / (‖Q‖²₂ ‖∇Q‖^p₂)`
    pub direct: f64,
}

impl GnConstant {
    pub fn relative_gap(&self) -> f64 {
        ((self.from_threshold - self.direct) / self.direct).abs()
    }
}

pub fn gn_constant(g: &GroundStateProfile) -> GnConstant {
    let n = &g.norms;
    GnConstant {
        from_threshold: g.c0,
        direct: n.potential / (n.mass * n.kinetic.powf(g.p / 2.0)),
    }
}

/// Threshold numbers with the closed-form check of `M(Q)²E(Q)^{p-2}` in terms of `C₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdQuantities {
    pub threshold_me: f64,
    pub threshold_kg: f64,
    /// `((p-2)/(2p))^{p-2} ((p+2)/p)² C₀^{-2}`
    pub closed_form_me: f64,
    pub relative_error: f64,
}

pub fn threshold_quantities(g: &GroundStateProfile) -> ThresholdQuantities {
    let p = g.p;
    let closed = ((p - 2.0) / (2.0 * p)).powf(p - 2.0) * ((p + 2.0) / p).powi(2) / (g.c0 * g.c0);
    ThresholdQuantities {
        threshold_me: g.threshold_me,
        threshold_kg: g.threshold_kg,
        closed_form_me: closed,
        relative_error: ((g.threshold_me - closed) / closed).abs(),
    }
}

/// Weinstein ratio `‖f‖^{p+2}_{p+2} / (C₀ ‖f‖²₂ ‖∇f‖^p₂)`; at most one for every `f`.
pub fn gn_ratio(f: &ComplexRadialField, p: f64, c0: f64) -> Result<f64> {
    let n = norm_bundle(f, p)?;
    let denom = c0 * n.mass * n.kinetic.powf(p / 2.0);
    if denom == 0.0 {
        return Err(NlsError::UndefinedRatio);
    }
    Ok(n.potential / denom)
}

/// Seeded random smooth radial field: a sum of one to three even bumps
/// `e^{-(r-ρ)²/w²} + e^{-(r+ρ)²/w²}` with random complex amplitudes, times a
/// random chirp `e^{iβr²}`.
pub fn random_smooth_field(grid: Arc<RadialGrid>, rng: &mut impl Rng) -> ComplexRadialField {
    let terms = rng.gen_range(1..=3);
    let bumps: Vec<(Complex64, f64, f64)> = (0..terms)
        .map(|_| {
            let amp = Complex64::from_polar(rng.gen_range(0.2..1.5), rng.gen_range(0.0..2.0 * PI));
            (amp, rng.gen_range(0.0..3.0), rng.gen_range(0.4..2.5))
        })
        .collect();
    let chirp: f64 = rng.gen_range(-0.5..0.5);
    let values = grid
        .nodes()
        .iter()
        .map(|&r| {
            let s: Complex64 = bumps
                .iter()
                .map(|&(a, rho, w)| {
                    a * ((-((r - rho) / w).powi(2)).exp() + (-((r + rho) / w).powi(2)).exp())
                })
                .sum();
            s * Complex64::from_polar(1.0, chirp * r * r)
        })
        .collect();
    ComplexRadialField::from_parts(grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnAudit {
    pub samples: usize,
    pub max_ratio: f64,
    /// Ratio at `f = Q`.
    pub ground_state_ratio: f64,
}

/// Randomized check of the sharp Gagliardo–Nirenberg inequality.
pub fn gn_audit(g: &GroundStateProfile, samples: usize, seed: u64) -> Result<GnAudit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = g.field.shared_grid().clone();
    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let f = random_smooth_field(grid.clone(), &mut rng);
        max_ratio = max_ratio.max(gn_ratio(&f, g.p, g.c0)?);
    }
    Ok(GnAudit {
        samples,
        max_ratio,
        ground_state_ratio: gn_ratio(&g.field, g.p, g.c0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifies_shots_on_both_sides() {
        let opts = ShootingOptions::default();
        assert!(matches!(shoot(2.0, 2.0, &opts).unwrap(), Shot::TurnsUp(_)));
        assert!(matches!(shoot(2.0, 2.5, &opts).unwrap(), Shot::CrossesZero(_)));
        assert!(matches!(shoot(3.0, 0.5, &opts).unwrap(), Shot::TurnsUp(_)));
    }

    #[test]
    fn bracket_errors() {
        let opts = ShootingOptions::default();
        assert!(matches!(bracket_q0(3.0, 1e-3, &opts), Err(NlsError::InvalidArgument(_))));
        assert!(matches!(bracket_q0(3.0, 1e-17, &opts), Err(NlsError::ToleranceUnreachable(_))));
        assert!(matches!(bracket_q0(1.0, 1e-8, &opts), Err(NlsError::UnsupportedExponent(_))));
        let narrow = ShootingOptions {
            scan_lo: 3.0,
            scan_hi: 8.0,
            ..opts
        };
        assert!(matches!(bracket_q0(3.0, 1e-8, &narrow), Err(NlsError::BracketFailure { .. })));
    }

    #[test]
    fn k0_tail_matches_reference_values() {
        // K₀(10) = 1.778006231616765e-5, K₀(20) = 5.741237815336524e-10
        assert!((bessel_k0_tail(10.0) / 1.778006231616765e-5 - 1.0).abs() < 1e-9);
        assert!((bessel_k0_tail(20.0) / 5.741237815336524e-10 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profile_is_positive_and_decreasing() {
        let g = shoot_ground_state(3.0, 1e-10).unwrap();
        let q = g.field.values();
        assert!(q.iter().all(|z| z.re > 0.0 && z.im == 0.0));
        assert!(q.windows(2).all(|w| w[1].re < w[0].re));
        assert!(g.graft_radius > 8.0);
    }

    #[test]
    fn perturbed_profile_breaks_pohozaev() {
        let g = shoot_ground_state(2.0, 1e-10).unwrap();
        let bent = g.field.map(|r, z| z * (1.0 + 0.1 * r));
        let (r1, r2) = pohozaev_residuals_of(&bent, 2.0).unwrap();
        assert!(r1.abs() > 1e-2 && r2.abs() > 1e-2, "{r1} {r2}");
    }
}
