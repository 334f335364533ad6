//! Time stepping for `i∂_t u = -Δu - |u|^p u` on the radial grid.
//!
//! One step is Strang splitting: half a step of the exact nonlinear phase
//! rotation `u ↦ u·e^{i(dt/2)|u|^p}`, a full Crank–Nicolson step of the linear
//! flow, and another half nonlinear step. The discrete Laplacian is
//! `-W⁻¹K` with `W` the quadrature weights and `K` the Dirichlet form, so the
//! Crank–Nicolson factor `(W + i(dt/2)K)⁻¹(W - i(dt/2)K)` is exactly unitary
//! in the quadrature inner product and also preserves the discrete `‖∇u‖₂`.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::BandedLu;
use crate::error::{check_exponent, NlsError, Result};
use crate::radial::{boundary_mass, grad_l2_sq, norm_bundle, ComplexRadialField, NormBundle, RadialGrid, SymmetricBand};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub p: f64,
    /// Mass beyond `boundary_guard · r_max` is monitored.
    pub boundary_guard: f64,
    /// Halt once `‖∇u‖₂` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// `false` runs the free equation.
    pub nonlinear: bool,
}

impl EvolveConfig {
    pub fn new(p: f64, dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            snapshot_stride: 1,
            p,
            boundary_guard: 0.9,
            blowup_factor: 10.0,
            nonlinear: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.p)?;
        let bad = |what: &str| Err(NlsError::InvalidArgument(what.to_string()));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad("t_end must be positive");
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be at least 1");
        }
        if !(self.boundary_guard > 0.0 && self.boundary_guard < 1.0) {
            return bad("boundary_guard must lie in (0, 1)");
        }
        if !(self.blowup_factor > 1.0) {
            return bad("blowup_factor must exceed 1");
        }
        Ok(())
    }
}

/// Cached Crank–Nicolson factorization for one grid and time step.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    grid: Arc<RadialGrid>,
    dt: f64,
    stiffness: SymmetricBand,
    lu: BandedLu,
}

impl LinearPropagator {
    pub fn new(grid: Arc<RadialGrid>, dt: f64) -> Result<Self> {
        if !dt.is_finite() {
            return Err(NlsError::InvalidArgument("time step must be finite".into()));
        }
        let stiffness = grid.stiffness();
        let lu = BandedLu::factor_shifted(grid.weights(), Complex64::new(0.0, 0.5 * dt), &stiffness)?;
        Ok(Self { grid, dt, stiffness, lu })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// One Crank–Nicolson step in place.
    pub fn apply(&self, values: &mut [Complex64]) {
        let half = Complex64::new(0.0, 0.5 * self.dt);
        let ku = self.stiffness.apply(values);
        for ((v, k), w) in values.iter_mut().zip(&ku).zip(self.grid.weights()) {
            *v = *v * *w - half * k;
        }
        self.lu.solve_in_place(values);
    }
}

fn nonlinear_phase(values: &mut [Complex64], tau: f64, p: f64) {
    for v in values.iter_mut() {
        let m = v.norm();
        if m > 0.0 {
            *v *= Complex64::from_polar(1.0, tau * m.powf(p));
        }
    }
}

/// Strang step with a cached linear factor.
fn strang(values: &mut [Complex64], lin: &LinearPropagator, p: f64, nonlinear: bool) {
    let dt = lin.dt();
    if nonlinear {
        nonlinear_phase(values, 0.5 * dt, p);
    }
    lin.apply(values);
    if nonlinear {
        nonlinear_phase(values, 0.5 * dt, p);
    }
}

/// One Strang splitting step of size `dt` (negative `dt` steps backwards).
pub fn step(u: &ComplexRadialField, dt: f64, p: f64) -> Result<ComplexRadialField> {
    check_exponent(p)?;
    let lin = LinearPropagator::new(u.shared_grid().clone(), dt)?;
    let mut values = u.values().to_vec();
    strang(&mut values, &lin, p, true);
    ComplexRadialField::new(u.shared_grid().clone(), values)
}

/// Free evolution `e^{itΔ}f` by Crank–Nicolson with steps no longer than `max_dt`.
pub fn linear_propagate(f: &ComplexRadialField, t: f64, max_dt: f64) -> Result<ComplexRadialField> {
    if !(max_dt > 0.0) || !t.is_finite() {
        return Err(NlsError::InvalidArgument("propagation needs finite t and positive max_dt".into()));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let steps = (t.abs() / max_dt - 1e-9).ceil().max(1.0) as usize;
    let lin = LinearPropagator::new(f.shared_grid().clone(), t / steps as f64)?;
    let mut values = f.values().to_vec();
    for _ in 0..steps {
        lin.apply(&mut values);
    }
    ComplexRadialField::new(f.shared_grid().clone(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupEvent {
    /// Time of the last finite state.
    pub time: f64,
    /// `‖∇u(time)‖₂ / ‖∇u₀‖₂`
    pub growth: f64,
    pub non_finite: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub p: f64,
    pub dt: f64,
    pub nonlinear: bool,
    pub boundary_guard: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<ComplexRadialField>,
    pub monitors: Vec<NormBundle>,
    /// Mass beyond `boundary_guard · r_max` at each snapshot.
    pub boundary_mass: Vec<f64>,
    pub blowup: Option<BlowupEvent>,
}

impl Trajectory {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.snapshots[0].shared_grid()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// What an [`evolve_with`] observer sees at each recorded snapshot.
pub struct Snapshot<'a> {
    pub index: usize,
    pub time: f64,
    pub field: &'a ComplexRadialField,
    pub norms: &'a NormBundle,
}

pub fn evolve(u0: &ComplexRadialField, cfg: &EvolveConfig) -> Result<Trajectory> {
    evolve_with(u0, cfg, |_| true)
}

/// Like [`evolve`], calling `observe` after each recorded snapshot; returning
/// `false` ends the run early with the prefix recorded so far.
pub fn evolve_with(
    u0: &ComplexRadialField,
    cfg: &EvolveConfig,
    mut observe: impl FnMut(Snapshot<'_>) -> bool,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !u0.is_finite() {
        return Err(NlsError::NonFinite);
    }
    let grid = u0.shared_grid().clone();
    let p = cfg.p;
    let full_steps = (cfg.t_end / cfg.dt + 1e-9).floor() as usize;
    let remainder = cfg.t_end - full_steps as f64 * cfg.dt;
    let tail = if remainder > 1e-12 * cfg.t_end.max(1.0) {
        Some(LinearPropagator::new(grid.clone(), remainder)?)
    } else {
        None
    };
    let lin = LinearPropagator::new(grid.clone(), cfg.dt)?;
    let total = full_steps + tail.is_some() as usize;

    let mut traj = Trajectory {
        p,
        dt: cfg.dt,
        nonlinear: cfg.nonlinear,
        boundary_guard: cfg.boundary_guard,
        times: Vec::new(),
        snapshots: Vec::new(),
        monitors: Vec::new(),
        boundary_mass: Vec::new(),
        blowup: None,
    };
    let mut record = |traj: &mut Trajectory, t: f64, u: ComplexRadialField| -> Result<bool> {
        let norms = norm_bundle(&u, p)?;
        traj.boundary_mass.push(boundary_mass(&u, cfg.boundary_guard));
        let keep = observe(Snapshot {
            index: traj.times.len(),
            time: t,
            field: &u,
            norms: &norms,
        });
        traj.times.push(t);
        traj.snapshots.push(u);
        traj.monitors.push(norms);
        Ok(keep)
    };

    if !record(&mut traj, 0.0, u0.clone())? {
        return Ok(traj);
    }
    let grad0 = grad_l2_sq(u0).sqrt();
    let mut values = u0.values().to_vec();
    let mut last_good = values.clone();
    let mut last_good_time = 0.0;

    for k in 1..=total {
        let (stepper, t) = if k <= full_steps {
            (&lin, k as f64 * cfg.dt)
        } else {
            (tail.as_ref().unwrap(), cfg.t_end)
        };
        strang(&mut values, stepper, p, cfg.nonlinear);

        let finite = values.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            let u = ComplexRadialField::from_parts(grid.clone(), last_good);
            let growth = if grad0 > 0.0 { grad_l2_sq(&u).sqrt() / grad0 } else { f64::INFINITY };
            if traj.times.last() != Some(&last_good_time) {
                record(&mut traj, last_good_time, u)?;
            }
            traj.blowup = Some(BlowupEvent {
                time: last_good_time,
                growth,
                non_finite: true,
            });
            return Ok(traj);
        }
        let u = ComplexRadialField::from_parts(grid.clone(), values.clone());
        let growth = if grad0 > 0.0 { grad_l2_sq(&u).sqrt() / grad0 } else { 0.0 };
        if grad0 > 0.0 && growth >= cfg.blowup_factor {
            record(&mut traj, t, u)?;
            traj.blowup = Some(BlowupEvent {
                time: t,
                growth,
                non_finite: false,
            });
            return Ok(traj);
        }
        if k % cfg.snapshot_stride == 0 || k == total {
            if !record(&mut traj, t, u)? {
                return Ok(traj);
            }
        }
        last_good.copy_from_slice(&values);
        last_good_time = t;
    }
    Ok(traj)
}

/// Default threshold on the boundary-mass fraction.
pub const BOUNDARY_FRACTION_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    /// `max_k |M_k - M_0| / M_0`
    pub mass_drift: f64,
    /// `max_k |E_k - E_0| / (K_0/2 + P_0/(p+2))`
    pub energy_drift: f64,
    /// `max_k boundary_mass_k / M_0`
    pub boundary_fraction: f64,
    pub boundary_flagged: bool,
}

/// The energy drift is normalized by the sum of the magnitudes of the two
/// energy terms, which stays meaningful when `E` itself vanishes (`E(Q) = 0`
/// at `p = 2`).
pub fn conservation_report(traj: &Trajectory) -> Result<ConservationReport> {
    conservation_report_with(traj, BOUNDARY_FRACTION_LIMIT)
}

pub fn conservation_report_with(traj: &Trajectory, boundary_limit: f64) -> Result<ConservationReport> {
    let m0 = traj
        .monitors
        .first()
        .ok_or_else(|| NlsError::InsufficientData("empty trajectory".into()))?;
    let p = traj.p;
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let e_scale = 0.5 * m0.kinetic + m0.potential / (p + 2.0);
    let mut rep = ConservationReport {
        mass_drift: 0.0,
        energy_drift: 0.0,
        boundary_fraction: 0.0,
        boundary_flagged: false,
    };
    for (m, b) in traj.monitors.iter().zip(&traj.boundary_mass) {
        rep.mass_drift = rep.mass_drift.max(ratio((m.mass - m0.mass).abs(), m0.mass));
        rep.energy_drift = rep.energy_drift.max(ratio((m.energy - m0.energy).abs(), e_scale));
        rep.boundary_fraction = rep.boundary_fraction.max(ratio(*b, m0.mass));
    }
    rep.boundary_flagged = rep.boundary_fraction > boundary_limit;
    Ok(rep)
}

/// Empirical order `log₂(drift(dt) / drift(dt/2))` from two runs.
pub fn drift_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Snapshots as CSV rows `t,r,re,im`.
pub fn write_trajectory_csv(traj: &Trajectory, mut w: impl Write) -> Result<()> {
    writeln!(w, "t,r,re,im")?;
    for (t, u) in traj.times.iter().zip(&traj.snapshots) {
        for (r, z) in u.grid().nodes().iter().zip(u.values()) {
            writeln!(w, "{t:.17e},{r:.17e},{:.17e},{:.17e}", z.re, z.im)?;
        }
    }
    Ok(())
}

/// Monitors as CSV rows `t,mass,kinetic,potential,energy,boundary_mass`.
pub fn write_monitors_csv(traj: &Trajectory, mut w: impl Write) -> Result<()> {
    writeln!(w, "t,mass,kinetic,potential,energy,boundary_mass")?;
    for ((t, m), b) in traj.times.iter().zip(&traj.monitors).zip(&traj.boundary_mass) {
        writeln!(
            w,
            "{t:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{b:.17e}",
            m.mass, m.kinetic, m.potential, m.energy
        )?;
    }
    Ok(())
}

/// Header of the binary trajectory format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryHeader {
    pub n: u64,
    pub r_max: f64,
    pub p: f64,
    pub dt: f64,
}

/// Little-endian layout: `n: u64, r_max: f64, p: f64, dt: f64`, then for every
/// snapshot `t: f64` followed by `2n` f64 values `re₀, im₀, re₁, im₁, …`.
pub fn write_trajectory_binary(traj: &Trajectory, mut w: impl Write) -> Result<()> {
    let grid = traj.grid();
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    for x in [grid.r_max(), traj.p, traj.dt] {
        w.write_all(&x.to_le_bytes())?;
    }
    for (t, u) in traj.times.iter().zip(&traj.snapshots) {
        w.write_all(&t.to_le_bytes())?;
        for z in u.values() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads the binary format back into `(header, [(t, field)])`.
pub fn read_trajectory_binary(mut r: impl Read) -> Result<(BinaryHeader, Vec<(f64, ComplexRadialField)>)> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let corrupt = |what: &str| NlsError::InvalidArgument(format!("binary trajectory: {what}"));
    if buf.len() < 32 {
        return Err(corrupt("truncated header"));
    }
    let word = |i: usize| -> [u8; 8] { buf[8 * i..8 * i + 8].try_into().unwrap() };
    let header = BinaryHeader {
        n: u64::from_le_bytes(word(0)),
        r_max: f64::from_le_bytes(word(1)),
        p: f64::from_le_bytes(word(2)),
        dt: f64::from_le_bytes(word(3)),
    };
    let n = usize::try_from(header.n).map_err(|_| corrupt("node count overflow"))?;
    let grid = Arc::new(RadialGrid::new(header.r_max, n)?);
    let frame = 8 * (1 + 2 * n);
    let body = &buf[32..];
    if body.len() % frame != 0 {
        return Err(corrupt("body is not a whole number of snapshots"));
    }
    let mut frames = Vec::with_capacity(body.len() / frame);
    for chunk in body.chunks_exact(frame) {
        let f = |i: usize| f64::from_le_bytes(chunk[8 * i..8 * i + 8].try_into().unwrap());
        let values = (0..n).map(|k| Complex64::new(f(1 + 2 * k), f(2 + 2 * k))).collect();
        frames.push((f(0), ComplexRadialField::new(grid.clone(), values)?));
    }
    Ok((header, frames))
}
