use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, NlsError, Result};
use crate::evolve::{evolve, linear_propagate, EvolveConfig, Trajectory};
use crate::radial::{grad_l2_sq, lp_integral, mass, ComplexRadialField};

/// Cauchy increments of the back-propagated profiles `v_k = e^{-it_kΔ}u(t_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringMetric {
    /// Right endpoint `t_{k+1}` of each increment.
    pub times: Vec<f64>,
    /// `d_k = ‖v_{k+1} - v_k‖_{H¹}`
    pub increments: Vec<f64>,
    pub sum: f64,
    /// Every increment is no larger than its predecessor.
    pub decreasing: bool,
}

impl ScatteringMetric {
    /// Decreasing increments whose sum stays below `tol`.
    pub fn consistent_with_scattering(&self, tol: f64) -> bool {
        self.decreasing && self.sum < tol
    }
}

fn h1_norm(f: &ComplexRadialField) -> f64 {
    (mass(f) + grad_l2_sq(f)).sqrt()
}

/// Increments over snapshots with `t >= (1 - tail_fraction)·T`.
///
/// The discrete free propagator is unitary and commutes with the discrete
/// gradient, so `‖v_{k+1} - v_k‖_{H¹} = ‖u(t_{k+1}) - e^{i(t_{k+1}-t_k)Δ}u(t_k)‖_{H¹}`
/// and only the short hop between neighbouring snapshots is propagated. The hop
/// uses the trajectory's own time step, so a free run gives increments at
/// round-off level.
pub fn scattering_metric(traj: &Trajectory, tail_fraction: f64) -> Result<ScatteringMetric> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(NlsError::InvalidArgument("tail_fraction must lie in (0, 1]".into()));
    }
    if let Some(b) = traj.blowup {
        return Err(NlsError::EstimateNotApplicable(format!("run halted for blow-up at t = {}", b.time)));
    }
    let start = (1.0 - tail_fraction) * traj.final_time();
    let idx: Vec<usize> = (0..traj.len()).filter(|&k| traj.times[k] >= start - 1e-12).collect();
    if idx.len() < 3 {
        return Err(NlsError::InsufficientData(format!(
            "{} snapshots in the tail window, need at least 3",
            idx.len()
        )));
    }
    let mut times = Vec::with_capacity(idx.len() - 1);
    let mut increments = Vec::with_capacity(idx.len() - 1);
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        let hop = traj.times[b] - traj.times[a];
        let moved = linear_propagate(&traj.snapshots[a], hop, traj.dt * (1.0 + 1e-12))?;
        increments.push(h1_norm(&traj.snapshots[b].sub(&moved)?));
        times.push(traj.times[b]);
    }
    let decreasing = increments.windows(2).all(|w| w[1] <= w[0]);
    Ok(ScatteringMetric {
        times,
        sum: increments.iter().sum(),
        increments,
        decreasing,
    })
}

/// Running value of `∫₀^t∫|u|^{2p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2pAccumulation {
    pub times: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub total: f64,
    /// Share of the total accumulated over the last quarter of the run.
    pub last_quarter_fraction: f64,
}

impl L2pAccumulation {
    pub fn saturating(&self) -> bool {
        self.last_quarter_fraction < 0.1
    }
}

/// Trapezoidal time quadrature of `∫|u|^{2p}dx` over the snapshots; the
/// `2p`-th power of the space-time `L^{2p}` norm.
pub fn spacetime_2p_norm(traj: &Trajectory, p: f64) -> Result<L2pAccumulation> {
    check_exponent(p)?;
    let vals: Vec<f64> = traj.snapshots.iter().map(|u| lp_integral(u, 2.0 * p)).collect();
    let mut cumulative = Vec::with_capacity(vals.len());
    let mut acc = 0.0;
    for k in 0..vals.len() {
        if k > 0 {
            acc += 0.5 * (traj.times[k] - traj.times[k - 1]) * (vals[k] + vals[k - 1]);
        }
        cumulative.push(acc);
    }
    let total = acc;
    let t_end = traj.final_time();
    let at_three_quarters = interpolate(&traj.times, &cumulative, 0.75 * t_end);
    Ok(L2pAccumulation {
        times: traj.times.clone(),
        last_quarter_fraction: if total > 0.0 { (total - at_three_quarters) / total } else { 0.0 },
        cumulative,
        total,
    })
}

fn interpolate(t: &[f64], y: &[f64], x: f64) -> f64 {
    match t.iter().position(|&ti| ti >= x) {
        None => *y.last().unwrap_or(&0.0),
        Some(0) => y[0],
        Some(k) => {
            let s = (x - t[k - 1]) / (t[k] - t[k - 1]);
            y[k - 1] + s * (y[k] - y[k - 1])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupProbe {
    pub flagged: bool,
    pub halt_time: Option<f64>,
    pub growth: Option<f64>,
    pub final_time: f64,
    pub initial_gradient: f64,
}

impl BlowupProbe {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Self {
            flagged: traj.blowup.is_some(),
            halt_time: traj.blowup.map(|b| b.time),
            growth: traj.blowup.map(|b| b.growth),
            final_time: traj.final_time(),
            initial_gradient: grad_l2_sq(&traj.snapshots[0]).sqrt(),
        }
    }
}

/// Runs [`evolve`] and reports whether and when the gradient-growth halt fired.
pub fn blowup_probe(u0: &ComplexRadialField, cfg: &EvolveConfig) -> Result<(BlowupProbe, Trajectory)> {
    let traj = evolve(u0, cfg)?;
    Ok((BlowupProbe::from_trajectory(&traj), traj))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::radial::RadialGrid;

    #[test]
    fn free_run_has_constant_profiles() {
        let g = Arc::new(RadialGrid::new(40.0, 1024).unwrap());
        let u = ComplexRadialField::from_real(g, |r| (-r * r).exp()).unwrap();
        let mut cfg = EvolveConfig::new(3.0, 0.01, 2.0);
        cfg.nonlinear = false;
        cfg.snapshot_stride = 10;
        let traj = evolve(&u, &cfg).unwrap();
        let m = scattering_metric(&traj, 0.5).unwrap();
        assert!(m.increments.iter().all(|d| *d < 1e-12), "{:?}", m.increments);
    }

    #[test]
    fn too_few_tail_snapshots() {
        let g = Arc::new(RadialGrid::new(10.0, 128).unwrap());
        let u = ComplexRadialField::from_real(g, |r| (-r * r).exp()).unwrap();
        let mut cfg = EvolveConfig::new(3.0, 0.01, 0.1);
        cfg.snapshot_stride = 10;
        let traj = evolve(&u, &cfg).unwrap();
        assert!(matches!(scattering_metric(&traj, 0.5), Err(NlsError::InsufficientData(_))));
    }

    #[test]
    fn zero_data_accumulates_nothing() {
        let g = Arc::new(RadialGrid::new(10.0, 128).unwrap());
        let (probe, traj) = blowup_probe(&ComplexRadialField::zeros(g), &EvolveConfig::new(3.0, 0.01, 0.5)).unwrap();
        assert!(!probe.flagged);
        let acc = spacetime_2p_norm(&traj, 3.0).unwrap();
        assert_eq!(acc.total, 0.0);
    }

    #[test]
    fn interpolation_is_linear() {
        let t = [0.0, 1.0, 2.0];
        let y = [0.0, 2.0, 6.0];
        assert_eq!(interpolate(&t, &y, 1.5), 4.0);
        assert_eq!(interpolate(&t, &y, 3.0), 6.0);
    }
}
