//! Scattering and blow-up diagnostics, experiment configuration and the
//! end-to-end pipeline behind the command line tool.

mod config;
mod experiment;
mod scattering;

pub use config::{preset, ExperimentConfig, InitialData, InitialKind, RPolicyKind, TrajectoryFormat, PRESET_NAMES};
pub use experiment::{
    evaluate, ground_state_on, initial_field, prepare, read_profile_csv, run_experiment, run_sweep, write_outputs,
    ExperimentRun, Outcome, PreparedData, VerdictReport, MASS_DRIFT_LIMIT,
};
pub use scattering::{blowup_probe, scattering_metric, spacetime_2p_norm, BlowupProbe, L2pAccumulation, ScatteringMetric};
