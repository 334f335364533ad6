//! Localized virial (Morawetz) instrumentation.
//!
//! With `φ` a C³ cutoff equal to 1 on `[0,1]` and 0 beyond 2, and
//! `ψ(s) = s⁻¹∫₀^s φ`, the action is
//! `A(t) = ∫ψ(r/R) r Im(ū ∂_r u)`, and along solutions of
//! `(i∂_t + Δ)u = -|u|^p u`
//!
//! ```text
//! dA/dt = 2∫φ|∂_r u|² - (p/(p+2))∫(ψ+φ)|u|^{p+2}
//!         - ½∫[φ''/R² + (2φ' - ψ')/(rR)]|u|²
//! ```
//!
//! (weights evaluated at `r/R`, derivatives in the scaled variable). The last
//! integral is the weight term; it vanishes for data supported in `r <= R`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, NlsError, Result};
use crate::evolve::Trajectory;
use crate::ground_state::GroundStateProfile;
use crate::radial::{grad_l2_sq, mass, norm_bundle, weighted_sup, ComplexRadialField, RadialGrid};

/// `ψ(s) = c₀/s` for `s >= 2`.
pub const PSI_TAIL: f64 = 1.5;

/// `1 - t⁴(35 - 84t + 70t² - 20t³)` with `t = s - 1`, clamped to `[0, 1]`.
pub fn phi(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let t = s - 1.0;
        1.0 - t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3))
    }
}

pub fn phi_prime(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        0.0
    } else {
        let t = s - 1.0;
        -140.0 * t.powi(3) * (1.0 - t).powi(3)
    }
}

pub fn phi_second(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        0.0
    } else {
        let t = s - 1.0;
        -420.0 * t * t * (1.0 - t) * (1.0 - t) * (1.0 - 2.0 * t)
    }
}

// ∫₀^s φ for 1 < s < 2
fn phi_antiderivative(s: f64) -> f64 {
    let t = s - 1.0;
    1.0 + t - t.powi(5) * (7.0 - 14.0 * t + 10.0 * t * t - 2.5 * t.powi(3))
}

pub fn psi(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        PSI_TAIL / s
    } else {
        phi_antiderivative(s) / s
    }
}

pub fn psi_prime(s: f64) -> f64 {
    if s <= 1.0 {
        0.0
    } else if s >= 2.0 {
        -PSI_TAIL / (s * s)
    } else {
        let t = s - 1.0;
        let g_prime = 1.0 - t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3));
        g_prime / s - phi_antiderivative(s) / (s * s)
    }
}

/// Cutoff weights at scale `R`, sampled at the nodes and at the staggered points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightPair {
    pub radius: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// `φ'` and `φ''` in the scaled variable `s = r/R`.
    pub phi_d: Vec<f64>,
    pub phi_dd: Vec<f64>,
    pub psi_d: Vec<f64>,
    pub phi_stag: Vec<f64>,
    pub psi_stag: Vec<f64>,
}

pub fn make_weights(radius: f64, grid: &RadialGrid) -> Result<WeightPair> {
    if !(radius.is_finite() && radius >= 1.0) {
        return Err(NlsError::InvalidArgument(format!("localization radius must be >= 1, got {radius}")));
    }
    if 2.0 * radius >= grid.r_max() {
        return Err(NlsError::WeightOverflow {
            radius,
            r_max: grid.r_max(),
        });
    }
    let at = |f: fn(f64) -> f64, pts: &[f64]| pts.iter().map(|r| f(r / radius)).collect::<Vec<_>>();
    let nodes = grid.nodes();
    let stag = grid.staggered_nodes();
    Ok(WeightPair {
        radius,
        phi: at(phi, nodes),
        psi: at(psi, nodes),
        phi_d: at(phi_prime, nodes),
        phi_dd: at(phi_second, nodes),
        psi_d: at(psi_prime, nodes),
        phi_stag: at(phi, &stag),
        psi_stag: at(psi, &stag),
    })
}

fn check_weights(u: &ComplexRadialField, w: &WeightPair) -> Result<()> {
    if w.phi.len() != u.grid().n() {
        return Err(NlsError::GridMismatch);
    }
    Ok(())
}

/// `A = ∫ψ(r/R) r Im(ū ∂_r u) 2πr dr`, evaluated at the staggered points.
pub fn morawetz_action(u: &ComplexRadialField, w: &WeightPair) -> Result<f64> {
    check_weights(u, w)?;
    let grid = u.grid();
    let du = grid.derivative(u.values());
    let us = grid.to_staggered(u.values());
    let s = grid.staggered_nodes();
    Ok(grid
        .staggered_weights()
        .iter()
        .enumerate()
        .map(|(j, wj)| wj * w.psi_stag[j] * s[j] * (us[j].conj() * du[j]).im)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTerms {
    /// `2∫φ|∂_r u|²`
    pub gradient_term: f64,
    /// `(p/(p+2))∫(ψ+φ)|u|^{p+2}`
    pub potential_term: f64,
    /// `-½∫[φ''/R² + (2φ'-ψ')/(rR)]|u|²`
    pub weight_term: f64,
    /// `(p/(p+2)) c₀ R^{-p/2} (sup r^{1/2}|u|)^p ‖u‖₂²`, bounding the potential outside `r = R`.
    pub tail_bound: f64,
    /// `|weight_term| + tail_bound`
    pub error_budget: f64,
    /// `gradient_term - potential_term + weight_term`
    pub rate_exact: f64,
    /// `2∫φ[|∂_r u|² - (p/(p+2))|u|^{p+2}]`
    pub rate_coercive: f64,
}

pub fn rate_decomposition(u: &ComplexRadialField, w: &WeightPair, p: f64) -> Result<RateTerms> {
    check_exponent(p)?;
    check_weights(u, w)?;
    let grid = u.grid();
    let big_r = w.radius;
    let c = p / (p + 2.0);
    let du = grid.derivative(u.values());
    let grad_loc: f64 = grid
        .staggered_weights()
        .iter()
        .zip(&du)
        .zip(&w.phi_stag)
        .map(|((wj, d), f)| wj * f * d.norm_sqr())
        .sum();

    let mut pot_sum = 0.0;
    let mut pot_loc = 0.0;
    let mut weight = 0.0;
    for (k, (&r, (&wk, z))) in grid.nodes().iter().zip(grid.weights().iter().zip(u.values())).enumerate() {
        let m2 = z.norm_sqr();
        let mp = if m2 > 0.0 { m2.powf(0.5 * (p + 2.0)) } else { 0.0 };
        pot_sum += wk * (w.psi[k] + w.phi[k]) * mp;
        pot_loc += wk * w.phi[k] * mp;
        let lap2 = w.phi_dd[k] / (big_r * big_r) + (2.0 * w.phi_d[k] - w.psi_d[k]) / (r * big_r);
        weight += wk * lap2 * m2;
    }
    let weight_term = -0.5 * weight;
    let gradient_term = 2.0 * grad_loc;
    let potential_term = c * pot_sum;
    let tail_bound = c * PSI_TAIL * big_r.powf(-0.5 * p) * weighted_sup(u).powf(p) * mass(u);
    Ok(RateTerms {
        gradient_term,
        potential_term,
        weight_term,
        tail_bound,
        error_budget: weight_term.abs() + tail_bound,
        rate_exact: gradient_term - potential_term + weight_term,
        rate_coercive: 2.0 * grad_loc - 2.0 * c * pot_loc,
    })
}

/// `(∫_{r>R}(R/r)|u|^{p+2}, R^{-p/2}(sup r^{1/2}|u|)^p ‖u‖₂²)`; the first never exceeds the second.
pub fn tail_inequality(u: &ComplexRadialField, radius: f64, p: f64) -> Result<(f64, f64)> {
    check_exponent(p)?;
    let grid = u.grid();
    let lhs = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(u.values())
        .filter(|((r, _), _)| **r > radius)
        .map(|((r, w), z)| w * radius / r * z.norm().powf(p + 2.0))
        .sum();
    let rhs = radius.powf(-0.5 * p) * weighted_sup(u).powf(p) * mass(u);
    Ok((lhs, rhs))
}

/// `∫_{r <= R/2} |u|^{p+2}`.
pub fn local_potential(u: &ComplexRadialField, radius: f64, p: f64) -> f64 {
    let grid = u.grid();
    grid.nodes()
        .iter()
        .zip(grid.weights())
        .zip(u.values())
        .filter(|((r, _), _)| **r <= 0.5 * radius)
        .map(|((_, w), z)| w * z.norm().powf(p + 2.0))
        .sum()
}

/// Localized threshold check with `χ² = φ(r/R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizedCoercivity {
    /// `‖χu‖²₂`
    pub local_mass: f64,
    /// `‖∇(χu)‖²₂` from the discrete gradient of `χu`.
    pub local_kinetic: f64,
    /// The same quantity as `∫χ²|∇u|² - ∫χΔχ|u|²`.
    pub local_kinetic_identity: f64,
    /// `∫χΔχ|u|²`
    pub commutator: f64,
    /// `|commutator| R² / ‖u‖²₂`
    pub commutator_scaled: f64,
    /// `‖χu‖²₂‖∇(χu)‖₂^{p-2} / ‖Q‖²₂‖∇Q‖₂^{p-2}`
    pub local_kg_ratio: f64,
    pub global_kg_ratio: f64,
    /// `1 - ½δ'` with `δ' = 1 - global_kg_ratio`.
    pub bound: f64,
    /// `bound - local_kg_ratio`
    pub margin: f64,
    pub holds: bool,
}

// χΔχ for χ = φ(r/R)^{1/2}
fn chi_laplacian_chi(r: f64, radius: f64) -> f64 {
    let s = r / radius;
    let f = phi(s);
    if f <= 0.0 {
        return 0.0;
    }
    let d = phi_prime(s);
    let dd = phi_second(s);
    dd / (2.0 * radius * radius) - d * d / (4.0 * f * radius * radius) + d / (2.0 * r * radius)
}

pub fn coercive_lower_bound_check(
    u: &ComplexRadialField,
    w: &WeightPair,
    p: f64,
    g: &GroundStateProfile,
) -> Result<LocalizedCoercivity> {
    check_exponent(p)?;
    check_weights(u, w)?;
    let grid = u.grid();
    let chi_u = u.map(|r, z| z * phi(r / w.radius).sqrt());
    let local_mass = mass(&chi_u);
    let local_kinetic = grad_l2_sq(&chi_u);
    let du = grid.derivative(u.values());
    let weighted_grad: f64 = grid
        .staggered_weights()
        .iter()
        .zip(&du)
        .zip(&w.phi_stag)
        .map(|((wj, d), f)| wj * f * d.norm_sqr())
        .sum();
    let commutator: f64 = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(u.values())
        .map(|((&r, wk), z)| wk * chi_laplacian_chi(r, w.radius) * z.norm_sqr())
        .sum();
    let total_mass = mass(u);
    let global = norm_bundle(u, p)?.kinetic_product(p) / g.threshold_kg;
    let local = local_mass * local_kinetic.powf(0.5 * (p - 2.0)) / g.threshold_kg;
    let bound = 1.0 - 0.5 * (1.0 - global);
    Ok(LocalizedCoercivity {
        local_mass,
        local_kinetic,
        local_kinetic_identity: weighted_grad - commutator,
        commutator,
        commutator_scaled: if total_mass > 0.0 {
            commutator.abs() * w.radius * w.radius / total_mass
        } else {
            0.0
        },
        local_kg_ratio: local,
        global_kg_ratio: global,
        bound,
        margin: bound - local,
        holds: local < bound,
    })
}

/// `σ = min{2, p/2}`
pub fn sigma(p: f64) -> f64 {
    (0.5 * p).min(2.0)
}

/// `α = max{1/3, 2/(p+2)}`
pub fn alpha(p: f64) -> f64 {
    (2.0 / (p + 2.0)).max(1.0 / 3.0)
}

/// `R = T^{1/(1+σ)}`, floored at 1.
pub fn scaling_radius(t: f64, p: f64) -> f64 {
    t.max(1.0).powf(1.0 / (1.0 + sigma(p)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorawetzSeries {
    pub radius: f64,
    /// `M(u₀)`; equals the energy for normalized data.
    pub e0: f64,
    pub times: Vec<f64>,
    pub action: Vec<f64>,
    /// Centered differences of `action` (one-sided at the ends).
    pub rate_fd: Vec<f64>,
    pub rate_exact: Vec<f64>,
    pub rate_coercive: Vec<f64>,
    pub rate_error_budget: Vec<f64>,
    pub local_potential: Vec<f64>,
    /// `∫₀^t∫|u|^{p+2}` by the trapezoidal rule over snapshots.
    pub cumulative_potential: Vec<f64>,
    pub spacetime_potential: f64,
}

impl MorawetzSeries {
    /// `|A(T) - A(0) - ∫₀^T rate_exact dt|` with the trapezoidal rule.
    pub fn ftc_residual(&self) -> f64 {
        let n = self.times.len();
        if n < 2 {
            return 0.0;
        }
        let integral = trapezoid(&self.times, &self.rate_exact);
        (self.action[n - 1] - self.action[0] - integral.last().unwrap()).abs()
    }

    /// `min_k (rate_coercive + error_budget) / local_potential` over snapshots with local potential.
    pub fn eta(&self) -> Option<f64> {
        self.rate_coercive
            .iter()
            .zip(&self.rate_error_budget)
            .zip(&self.local_potential)
            .filter(|(_, l)| **l > 0.0)
            .map(|((c, e), l)| (c + e) / l)
            .reduce(f64::min)
    }

    /// `max_k |A(t_k)| / (R E₀)`
    pub fn action_constant(&self) -> f64 {
        let top = self.action.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if self.e0 > 0.0 {
            top / (self.radius * self.e0)
        } else {
            0.0
        }
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,A,dA_fd,rate_coercive,error_budget,local_potential,cumulative_spacetime_potential")?;
        for k in 0..self.times.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                self.times[k],
                self.action[k],
                self.rate_fd[k],
                self.rate_coercive[k],
                self.rate_error_budget[k],
                self.local_potential[k],
                self.cumulative_potential[k]
            )?;
        }
        Ok(())
    }
}

fn trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(t.len());
    let mut s = 0.0;
    acc.push(0.0);
    for k in 1..t.len() {
        s += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
        acc.push(s);
    }
    acc
}

fn centered_differences(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (y[b] - y[a]) / (t[b] - t[a])
        })
        .collect()
}

/// Action, rate terms and space-time potential along a trajectory at fixed `R`.
pub fn morawetz_series(traj: &Trajectory, radius: f64) -> Result<MorawetzSeries> {
    if traj.is_empty() {
        return Err(NlsError::InsufficientData("empty trajectory".into()));
    }
    let p = traj.p;
    let w = make_weights(radius, traj.grid())?;
    let mut series = MorawetzSeries {
        radius,
        e0: traj.monitors[0].mass,
        times: traj.times.clone(),
        action: Vec::with_capacity(traj.len()),
        rate_fd: Vec::new(),
        rate_exact: Vec::with_capacity(traj.len()),
        rate_coercive: Vec::with_capacity(traj.len()),
        rate_error_budget: Vec::with_capacity(traj.len()),
        local_potential: Vec::with_capacity(traj.len()),
        cumulative_potential: Vec::new(),
        spacetime_potential: 0.0,
    };
    for u in &traj.snapshots {
        let terms = rate_decomposition(u, &w, p)?;
        series.action.push(morawetz_action(u, &w)?);
        series.rate_exact.push(terms.rate_exact);
        series.rate_coercive.push(terms.rate_coercive);
        series.rate_error_budget.push(terms.error_budget);
        series.local_potential.push(local_potential(u, radius, p));
    }
    series.rate_fd = centered_differences(&series.times, &series.action);
    let potential: Vec<f64> = traj.monitors.iter().map(|m| m.potential).collect();
    series.cumulative_potential = trapezoid(&series.times, &potential);
    series.spacetime_potential = *series.cumulative_potential.last().unwrap();
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "radius", rename_all = "snake_case")]
pub enum RPolicy {
    Fixed(f64),
    /// `R = T^{1/(1+σ)}` with `T` the final time.
    Scaling,
}

/// JSON summary of a space-time estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeSummary {
    #[serde(rename = "R")]
    pub radius: f64,
    pub sigma: f64,
    pub alpha_theory: f64,
    pub alpha_fitted: f64,
    pub eta_measured: Option<f64>,
    #[serde(rename = "C_action_bound")]
    pub c_action_bound: f64,
    pub ftc_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeEstimate {
    pub series: MorawetzSeries,
    pub summary: SpacetimeSummary,
}

/// Least-squares slope of `log y` against `log t` over `t ∈ [lo_fraction·T, T]`.
pub fn fit_growth_exponent(times: &[f64], values: &[f64], lo_fraction: f64) -> Result<f64> {
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, y)| **t >= lo_fraction * t_max && **t > 0.0 && **y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(NlsError::InsufficientData("need two positive samples in the fit window".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(NlsError::InsufficientData("fit window has a single time".into()));
    }
    Ok(sxy / sxx)
}

pub fn spacetime_estimate(traj: &Trajectory, policy: RPolicy, p: f64, lo_fraction: f64) -> Result<SpacetimeEstimate> {
    check_exponent(p)?;
    if (p - traj.p).abs() > 1e-12 {
        return Err(NlsError::InvalidArgument(format!("trajectory was run at p = {}", traj.p)));
    }
    if let Some(b) = traj.blowup {
        return Err(NlsError::EstimateNotApplicable(format!("run halted for blow-up at t = {}", b.time)));
    }
    if !(lo_fraction > 0.0 && lo_fraction < 1.0) {
        return Err(NlsError::InvalidArgument("fit window fraction must lie in (0, 1)".into()));
    }
    let radius = match policy {
        RPolicy::Fixed(r) => r,
        RPolicy::Scaling => scaling_radius(traj.final_time(), p),
    };
    let series = morawetz_series(traj, radius)?;
    let alpha_fitted = fit_growth_exponent(&series.times, &series.cumulative_potential, lo_fraction)?;
    let summary = SpacetimeSummary {
        radius,
        sigma: sigma(p),
        alpha_theory: alpha(p),
        alpha_fitted,
        eta_measured: series.eta(),
        c_action_bound: series.action_constant(),
        ftc_residual: series.ftc_residual(),
    };
    Ok(SpacetimeEstimate { series, summary })
}
