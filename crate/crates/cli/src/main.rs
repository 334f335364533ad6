use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use nls_radial::diagnostics::{self, prepare, preset, run_experiment, run_sweep, ExperimentConfig, PRESET_NAMES};
use nls_radial::evolve::{
    conservation_report_with, evolve, write_monitors_csv, write_trajectory_binary, write_trajectory_csv,
};
use nls_radial::ground_state::{shoot_ground_state_on, DEFAULT_NODES, DEFAULT_R_MAX};
use nls_radial::morawetz::spacetime_estimate;
use nls_radial::{NlsError, RadialGrid, Result};

#[derive(Parser)]
#[command(name = "nls-radial", version, about = "Radial focusing NLS experiments in two dimensions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the ground state Q for exponent p and print its norms as JSON.
    GroundState {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = DEFAULT_R_MAX)]
        r_max: f64,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        n: usize,
        /// Bisection tolerance on Q(0).
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Also write the profile as `r,Q` rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Classify the configured initial data against the ground-state threshold.
    /// Exits 0 when below threshold and 3 otherwise.
    Classify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evolve the configured initial data and write the trajectory and monitors.
    Evolve(RunArgs),
    /// Evolve and compute the localized Morawetz series and space-time summary.
    Morawetz(RunArgs),
    /// Full pipeline; the exit status encodes the outcome
    /// (0 scattering-consistent, 2 blow-up, 3 inconclusive).
    Run {
        #[command(flatten)]
        args: RunArgs,
        /// Run a shipped preset instead of a config file.
        #[arg(long, conflicts_with = "config", value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        preset: Option<String>,
    },
    /// Run every `.toml`/`.json` config in a directory.
    Sweep {
        #[arg(long)]
        config_dir: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self, preset_name: Option<&str>) -> Result<ExperimentConfig> {
        let mut cfg = match (preset_name, &self.config) {
            (Some(name), _) => preset(name)?,
            (None, Some(path)) => ExperimentConfig::load(path)?,
            (None, None) => return Err(NlsError::Config("--config is required (run also accepts --preset)".into())),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn ground_state(p: f64, r_max: f64, n: usize, tol: f64, csv: Option<&Path>) -> Result<()> {
    let g = shoot_ground_state_on(Arc::new(RadialGrid::new(r_max, n)?), p, tol)?;
    if let Some(path) = csv {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "r,Q")?;
        for (r, q) in g.field.grid().nodes().iter().zip(g.field.values()) {
            writeln!(w, "{r:.17e},{:.17e}", q.re)?;
        }
        w.flush()?;
    }
    print_json(&g.record())
}

fn classify_cmd(path: &Path) -> Result<u8> {
    let cfg = ExperimentConfig::load(path)?;
    let prepared = prepare(&cfg)?;
    print_json(&prepared.classification)?;
    Ok(if prepared.classification.below { 0 } else { 3 })
}

fn evolve_cmd(cfg: &ExperimentConfig) -> Result<()> {
    let prepared = prepare(cfg)?;
    let traj = evolve(&prepared.field, &cfg.evolve_config())?;
    let report = conservation_report_with(&traj, cfg.boundary_limit)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    write_monitors_csv(&traj, create(dir, "monitors.csv")?)?;
    match cfg.trajectory_format {
        diagnostics::TrajectoryFormat::Binary => write_trajectory_binary(&traj, create(dir, "trajectory.bin")?)?,
        diagnostics::TrajectoryFormat::Csv => write_trajectory_csv(&traj, create(dir, "trajectory.csv")?)?,
        diagnostics::TrajectoryFormat::None => {}
    }
    serde_json::to_writer_pretty(create(dir, "conservation.json")?, &report)?;
    print_json(&serde_json::json!({
        "final_time": traj.final_time(),
        "snapshots": traj.len(),
        "rescale_lambda": prepared.rescale_lambda,
        "blowup": traj.blowup.map(|b| serde_json::json!({ "time": b.time, "growth": b.growth })),
        "conservation": report,
    }))
}

fn morawetz_cmd(cfg: &ExperimentConfig) -> Result<()> {
    let prepared = prepare(cfg)?;
    let traj = evolve(&prepared.field, &cfg.evolve_config())?;
    let est = spacetime_estimate(&traj, cfg.r_policy()?, cfg.p, cfg.fit_window)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    est.series.write_csv(create(dir, "morawetz.csv")?)?;
    serde_json::to_writer_pretty(create(dir, "morawetz.json")?, &est.summary)?;
    print_json(&est.summary)
}

fn sweep_cmd(dir: &Path, threads: Option<usize>) -> Result<u8> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml" || e == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(NlsError::Config(format!("no .toml or .json configs in {}", dir.display())));
    }
    let configs = paths.iter().map(|p| ExperimentConfig::load(p)).collect::<Result<Vec<_>>>()?;
    let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let results = run_sweep(&configs, threads);
    let mut failed = false;
    let rows: Vec<_> = paths
        .iter()
        .zip(&results)
        .map(|(path, res)| match res {
            Ok(v) => serde_json::json!({ "config": path, "name": v.name, "outcome": v.outcome }),
            Err(e) => {
                failed = true;
                serde_json::json!({ "config": path, "error": e.to_string() })
            }
        })
        .collect();
    print_json(&rows)?;
    Ok(if failed { 1 } else { 0 })
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::GroundState { p, r_max, n, tol, csv } => ground_state(p, r_max, n, tol, csv.as_deref()).map(|_| 0),
        Command::Classify { config } => classify_cmd(&config),
        Command::Evolve(args) => evolve_cmd(&args.load(None)?).map(|_| 0),
        Command::Morawetz(args) => morawetz_cmd(&args.load(None)?).map(|_| 0),
        Command::Run { args, preset } => {
            let report = run_experiment(&args.load(preset.as_deref())?)?;
            print_json(&report)?;
            Ok(report.outcome.exit_code() as u8)
        }
        Command::Sweep { config_dir, threads } => sweep_cmd(&config_dir, threads),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
