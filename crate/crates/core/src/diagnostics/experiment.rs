use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, InitialData, TrajectoryFormat};
use super::scattering::{scattering_metric, spacetime_2p_norm, BlowupProbe, L2pAccumulation, ScatteringMetric};
use crate::error::{NlsError, Result};
use crate::evolve::{
    conservation_report_with, evolve, write_monitors_csv, write_trajectory_binary, write_trajectory_csv,
    ConservationReport, Trajectory,
};
use crate::ground_state::{shoot_ground_state, GroundStateProfile};
use crate::morawetz::{spacetime_estimate, MorawetzSeries, SpacetimeSummary};
use crate::radial::{grad_l2_sq, mass, ComplexRadialField, RadialGrid};
use crate::variational::{classify, rescale_to_unit, ThresholdReport};

/// Mass drift allowed by the conservation gate.
pub const MASS_DRIFT_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    ScatteringConsistent,
    BlowUp,
    Inconclusive,
}

impl Outcome {
    /// 0 scattering-consistent, 2 blow-up, 3 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::ScatteringConsistent => 0,
            Outcome::BlowUp => 2,
            Outcome::Inconclusive => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub name: String,
    pub classification: ThresholdReport,
    /// Dilation applied to normalize `M = E`, if any.
    pub rescale_lambda: Option<f64>,
    pub outcome: Outcome,
    pub scattering_cauchy: Vec<f64>,
    pub cauchy_sum: Option<f64>,
    /// `scattering_tol · ‖u₀‖_{H¹}`
    pub cauchy_tolerance: f64,
    pub cauchy_decreasing: Option<bool>,
    /// `∫∫|u|^{2p}` over the run.
    pub l2p_spacetime: f64,
    pub l2p_last_quarter_fraction: f64,
    pub conservation: ConservationReport,
    pub conservation_ok: bool,
    pub blowup: Option<BlowupProbe>,
    pub morawetz: Option<SpacetimeSummary>,
    pub final_time: f64,
    pub notes: Vec<String>,
}

/// Everything an experiment produced, before anything is written.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub report: VerdictReport,
    pub trajectory: Trajectory,
    pub scattering: Option<ScatteringMetric>,
    pub l2p: L2pAccumulation,
    pub morawetz: Option<MorawetzSeries>,
}

/// Ground state resampled onto `grid`, with thresholds recomputed there so
/// that data and `Q` are compared under the same quadrature.
pub fn ground_state_on(grid: Arc<RadialGrid>, p: f64) -> Result<GroundStateProfile> {
    let g = shoot_ground_state(p, 1e-10)?;
    let field = g.sample_on(grid)?;
    g.with_field(field)
}

pub fn initial_field(cfg: &ExperimentConfig, grid: Arc<RadialGrid>, g: &GroundStateProfile) -> Result<ComplexRadialField> {
    match cfg.initial_data()? {
        InitialData::Gaussian { amplitude, width } => {
            ComplexRadialField::from_real(grid, move |r| amplitude * (-(r / width).powi(2)).exp())
        }
        InitialData::GroundStateMultiple { multiple } => Ok(g.field.scaled(Complex64::new(multiple, 0.0))),
        InitialData::FromFile { path } => read_profile_csv(&path, grid),
    }
}

/// Reads `r, re, im` rows (an optional header line is skipped) and linearly
/// interpolates onto the grid; the field is zero past the last sample.
pub fn read_profile_csv(path: &Path, grid: Arc<RadialGrid>) -> Result<ComplexRadialField> {
    let file = File::open(path)?;
    let mut rows: Vec<(f64, Complex64)> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() >= 2 => rows.push((v[0], Complex64::new(v[1], v.get(2).copied().unwrap_or(0.0)))),
            _ if i == 0 => continue,
            _ => return Err(NlsError::Config(format!("{}: bad row {}", path.display(), i + 1))),
        }
    }
    if rows.len() < 2 || rows.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(NlsError::Config(format!(
            "{}: need at least two rows with increasing r",
            path.display()
        )));
    }
    let values = grid
        .nodes()
        .iter()
        .map(|&r| {
            if r <= rows[0].0 {
                return rows[0].1;
            }
            match rows.iter().position(|(x, _)| *x >= r) {
                None => Complex64::new(0.0, 0.0),
                Some(k) => {
                    let (x0, y0) = rows[k - 1];
                    let (x1, y1) = rows[k];
                    y0 + (y1 - y0) * ((r - x0) / (x1 - x0))
                }
            }
        })
        .collect();
    ComplexRadialField::new(grid, values)
}

fn h1_norm(f: &ComplexRadialField) -> f64 {
    (mass(f) + grad_l2_sq(f)).sqrt()
}

/// Classified initial data, normalized to `M = E` when it is below threshold
/// and the config asks for it.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub classification: ThresholdReport,
    pub field: ComplexRadialField,
    pub rescale_lambda: Option<f64>,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<PreparedData> {
    cfg.validate()?;
    let grid = Arc::new(RadialGrid::new(cfg.r_max, cfg.n)?);
    let g = ground_state_on(grid.clone(), cfg.p)?;
    let u0 = initial_field(cfg, grid, &g)?;
    let classification = classify(&u0, cfg.p, &g)?;
    log::info!(
        "{}: kg_ratio = {:.6}, me_ratio = {:?}, below = {}",
        cfg.name, classification.kg_ratio, classification.me_ratio, classification.below
    );
    let (field, rescale_lambda) = if cfg.rescale && classification.below && !classification.trivial {
        let (v, lambda) = rescale_to_unit(&u0, cfg.p)?;
        (v, Some(lambda))
    } else {
        (u0, None)
    };
    Ok(PreparedData {
        classification,
        field,
        rescale_lambda,
    })
}

/// classify → normalize (if below) → evolve → Morawetz series → verdict.
pub fn evaluate(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    let p = cfg.p;
    let PreparedData {
        classification,
        field: start,
        rescale_lambda: lambda,
    } = prepare(cfg)?;
    let mut notes = Vec::new();
    if let Some(lambda) = lambda {
        notes.push(format!("normalized to M = E with lambda = {lambda:.12}"));
    }

    let traj = evolve(&start, &cfg.evolve_config())?;
    log::info!("{}: evolved to t = {} ({} snapshots)", cfg.name, traj.final_time(), traj.len());
    if let Some(b) = traj.blowup {
        log::warn!("{}: gradient grew {:.2}x by t = {}", cfg.name, b.growth, b.time);
    }
    let conservation = conservation_report_with(&traj, cfg.boundary_limit)?;
    let mut conservation_ok = true;
    if conservation.mass_drift >= MASS_DRIFT_LIMIT {
        conservation_ok = false;
        notes.push(format!("mass drift {:.3e} exceeds {MASS_DRIFT_LIMIT:e}", conservation.mass_drift));
    }
    if conservation.energy_drift >= cfg.energy_tol {
        conservation_ok = false;
        notes.push(format!(
            "energy drift {:.3e} exceeds {:e}",
            conservation.energy_drift, cfg.energy_tol
        ));
    }
    if conservation.boundary_flagged {
        conservation_ok = false;
        notes.push(format!(
            "boundary mass fraction {:.3e} exceeds {:e}; enlarge r_max",
            conservation.boundary_fraction, cfg.boundary_limit
        ));
    }

    let probe = BlowupProbe::from_trajectory(&traj);
    let cauchy_tolerance = cfg.scattering_tol * h1_norm(&traj.snapshots[0]);
    let scattering = if traj.blowup.is_none() {
        match scattering_metric(&traj, cfg.tail_fraction) {
            Ok(m) => Some(m),
            Err(e) => {
                notes.push(format!("scattering metric unavailable: {e}"));
                None
            }
        }
    } else {
        None
    };
    let l2p = spacetime_2p_norm(&traj, p)?;

    let morawetz = if traj.blowup.is_none() && !classification.trivial {
        match spacetime_estimate(&traj, cfg.r_policy()?, p, cfg.fit_window) {
            Ok(est) => Some(est),
            Err(e) => {
                log::warn!("{}: {e}", cfg.name);
                notes.push(format!("morawetz estimate unavailable: {e}"));
                None
            }
        }
    } else {
        None
    };

    let outcome = if !conservation_ok {
        Outcome::Inconclusive
    } else if traj.blowup.is_some() {
        Outcome::BlowUp
    } else if scattering.as_ref().is_some_and(|m| m.consistent_with_scattering(cauchy_tolerance))
        && l2p.saturating()
    {
        Outcome::ScatteringConsistent
    } else {
        Outcome::Inconclusive
    };
    if outcome == Outcome::Inconclusive && conservation_ok && traj.blowup.is_none() {
        if let Some(m) = &scattering {
            notes.push(format!(
                "Cauchy increments sum {:.3e} (tolerance {:.3e}), decreasing = {}; L^2p last-quarter share {:.3}",
                m.sum, cauchy_tolerance, m.decreasing, l2p.last_quarter_fraction
            ));
        }
    }

    let report = VerdictReport {
        name: cfg.name.clone(),
        classification,
        rescale_lambda: lambda,
        outcome,
        scattering_cauchy: scattering.as_ref().map(|m| m.increments.clone()).unwrap_or_default(),
        cauchy_sum: scattering.as_ref().map(|m| m.sum),
        cauchy_tolerance,
        cauchy_decreasing: scattering.as_ref().map(|m| m.decreasing),
        l2p_spacetime: l2p.total,
        l2p_last_quarter_fraction: l2p.last_quarter_fraction,
        conservation,
        conservation_ok,
        blowup: probe.flagged.then_some(probe),
        morawetz: morawetz.as_ref().map(|e| e.summary),
        final_time: traj.final_time(),
        notes,
    };
    Ok(ExperimentRun {
        config: cfg.clone(),
        report,
        trajectory: traj,
        scattering,
        l2p,
        morawetz: morawetz.map(|e| e.series),
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes every artifact of a run into `dir`. Files are written one at a
/// time, so an I/O failure leaves the earlier ones in place.
pub fn write_outputs(run: &ExperimentRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), run.config.to_toml()?)?;
    serde_json::to_writer_pretty(create(dir, "classification.json")?, &run.report.classification)?;
    serde_json::to_writer_pretty(create(dir, "verdict.json")?, &run.report)?;
    write_monitors_csv(&run.trajectory, create(dir, "monitors.csv")?)?;
    match run.config.trajectory_format {
        TrajectoryFormat::Binary => write_trajectory_binary(&run.trajectory, create(dir, "trajectory.bin")?)?,
        TrajectoryFormat::Csv => write_trajectory_csv(&run.trajectory, create(dir, "trajectory.csv")?)?,
        TrajectoryFormat::None => {}
    }
    if let Some(series) = &run.morawetz {
        series.write_csv(create(dir, "morawetz.csv")?)?;
    }
    if let Some(summary) = &run.report.morawetz {
        serde_json::to_writer_pretty(create(dir, "morawetz.json")?, summary)?;
    }
    if let Some(m) = &run.scattering {
        let mut w = create(dir, "scattering.csv")?;
        writeln!(w, "t,d")?;
        for (t, d) in m.times.iter().zip(&m.increments) {
            writeln!(w, "{t:.17e},{d:.17e}")?;
        }
        w.flush()?;
    }
    let mut w = create(dir, "l2p.csv")?;
    writeln!(w, "t,cumulative")?;
    for (t, c) in run.l2p.times.iter().zip(&run.l2p.cumulative) {
        writeln!(w, "{t:.17e},{c:.17e}")?;
    }
    w.flush()?;
    Ok(())
}

/// [`evaluate`] followed by [`write_outputs`] into the configured directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<VerdictReport> {
    let run = evaluate(cfg)?;
    write_outputs(&run, &cfg.output_dir)?;
    Ok(run.report)
}

/// Runs independent experiments on up to `threads` worker threads; results
/// come back in input order.
pub fn run_sweep(configs: &[ExperimentConfig], threads: usize) -> Vec<Result<VerdictReport>> {
    let threads = threads.max(1).min(configs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<VerdictReport>>>> =
        configs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if k >= configs.len() {
                    break;
                }
                let res = run_experiment(&configs[k]);
                *slots[k].lock().unwrap() = Some(res);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().unwrap()).collect()
}
