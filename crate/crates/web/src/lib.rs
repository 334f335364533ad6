//! wasm-bindgen exports for the static demo page in `www/`. Every export
//! returns a JSON string; the `*_json` functions are the same computations
//! callable from native code.

use std::sync::Arc;

use nls_radial::diagnostics::ground_state_on;
use nls_radial::evolve::{evolve, EvolveConfig};
use nls_radial::ground_state::shoot_ground_state_on;
use nls_radial::variational::classify;
use nls_radial::{ComplexRadialField, RadialGrid};
use num_complex::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Curves are thinned to about this many points before being sent to the page.
const PLOT_POINTS: usize = 400;

const DEMO_R_MAX: f64 = 40.0;
const DEMO_NODES: usize = 1024;
const DEMO_DT: f64 = 0.01;
const MAX_FRAMES: usize = 200;
const MAX_T_END: f64 = 40.0;

fn thin<T: Copy>(xs: &[T]) -> Vec<T> {
    let step = xs.len().div_ceil(PLOT_POINTS).max(1);
    xs.iter().step_by(step).copied().collect()
}

fn moduli(u: &ComplexRadialField) -> Vec<f64> {
    thin(u.values()).iter().map(|z: &Complex64| z.norm()).collect()
}

fn gaussian(amplitude: f64, width: f64) -> Result<ComplexRadialField, String> {
    if !(width.is_finite() && width > 0.0) {
        return Err(format!("width must be positive, got {width}"));
    }
    let grid = Arc::new(RadialGrid::new(DEMO_R_MAX, DEMO_NODES).map_err(|e| e.to_string())?);
    ComplexRadialField::from_real(grid, |r| amplitude * (-(r / width).powi(2)).exp()).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct GroundStateView {
    p: f64,
    q0: f64,
    mass: f64,
    energy: f64,
    threshold_me: f64,
    threshold_kg: f64,
    r: Vec<f64>,
    q: Vec<f64>,
}

pub fn ground_state_json(p: f64, r_max: f64, n: usize) -> Result<String, String> {
    let grid = Arc::new(RadialGrid::new(r_max, n).map_err(|e| e.to_string())?);
    let g = shoot_ground_state_on(grid, p, 1e-12).map_err(|e| e.to_string())?;
    let rec = g.record();
    let view = GroundStateView {
        p,
        q0: rec.q0,
        mass: rec.mass,
        energy: rec.energy,
        threshold_me: rec.threshold_me,
        threshold_kg: rec.threshold_kg,
        r: thin(g.field.grid().nodes()),
        q: moduli(&g.field),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

pub fn classify_gaussian_json(p: f64, amplitude: f64, width: f64) -> Result<String, String> {
    let u = gaussian(amplitude, width)?;
    let g = ground_state_on(u.shared_grid().clone(), p).map_err(|e| e.to_string())?;
    let report = classify(&u, p, &g).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct FramesView {
    r: Vec<f64>,
    times: Vec<f64>,
    modulus: Vec<Vec<f64>>,
    kinetic: Vec<f64>,
    mass: Vec<f64>,
    blowup_time: Option<f64>,
}

pub fn evolve_frames_json(p: f64, amplitude: f64, width: f64, t_end: f64, frames: usize) -> Result<String, String> {
    if !(t_end > 0.0 && t_end <= MAX_T_END) {
        return Err(format!("t_end must lie in (0, {MAX_T_END}], got {t_end}"));
    }
    let frames = frames.clamp(1, MAX_FRAMES);
    let u0 = gaussian(amplitude, width)?;
    let mut cfg = EvolveConfig::new(p, DEMO_DT, t_end);
    cfg.snapshot_stride = ((t_end / DEMO_DT / frames as f64).round() as usize).max(1);
    let traj = evolve(&u0, &cfg).map_err(|e| e.to_string())?;
    let view = FramesView {
        r: thin(u0.grid().nodes()),
        times: traj.times.clone(),
        modulus: traj.snapshots.iter().map(moduli).collect(),
        kinetic: traj.monitors.iter().map(|m| m.kinetic).collect(),
        mass: traj.monitors.iter().map(|m| m.mass).collect(),
        blowup_time: traj.blowup.map(|b| b.time),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// `{p, q0, mass, energy, threshold_me, threshold_kg, r, q}`
#[wasm_bindgen]
pub fn ground_state(p: f64, r_max: f64, n: usize) -> Result<String, JsError> {
    ground_state_json(p, r_max, n).map_err(|e| JsError::new(&e))
}

/// Threshold report for `a·e^{-r²/w²}`.
#[wasm_bindgen]
pub fn classify_gaussian(p: f64, amplitude: f64, width: f64) -> Result<String, JsError> {
    classify_gaussian_json(p, amplitude, width).map_err(|e| JsError::new(&e))
}

/// `{r, times, modulus, kinetic, mass, blowup_time}` for the evolution of `a·e^{-r²/w²}`.
#[wasm_bindgen]
pub fn evolve_frames(p: f64, amplitude: f64, width: f64, t_end: f64, frames: usize) -> Result<String, JsError> {
    evolve_frames_json(p, amplitude, width, t_end, frames).map_err(|e| JsError::new(&e))
}
