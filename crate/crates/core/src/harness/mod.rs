//! Scenarios, configuration files and output.

pub mod calibrate;
pub mod config;
pub mod io;
pub mod run;
pub mod scenarios;

pub use calibrate::{calibrate_files, CalibrateOptions};
pub use config::{build_material, build_scene, load_scene, parse_config, read_config, ScenarioConfig, ScenarioSpec};
pub use io::{
    read_snapshot, read_timeseries, write_snapshot, write_timeseries, TimeSeries, TimeSeriesRecord,
};
pub use run::{check_config, run_config, RunOptions, RunSummary, SnapshotWriter};
pub use scenarios::{
    creep_recovery, run_bouncing_particle, run_custom, run_sintering_vs_load, run_two_particle_sintering,
    run_uniaxial_creep, BounceRun, BounceSetup, CreepRun, CreepSetup, Observer, SinteringRun,
    SinteringSetup,
};
