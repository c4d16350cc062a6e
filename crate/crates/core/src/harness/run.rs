//! Running a configuration file end to end.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{build_material, build_scene, read_config, ScenarioConfig, ScenarioSpec};
use super::io::{write_snapshot, write_timeseries, TimeSeries};
use super::scenarios::{
    run_bouncing_particle, run_custom, run_two_particle_sintering, run_uniaxial_creep, BounceSetup,
    CreepSetup, Observer, SinteringSetup,
};
use crate::bond::hall_petch_strength;
use crate::calibration::{linear_fit, write_dataset, SampleAxis, SinteringDataset};
use crate::dynamics::Scene;
use crate::error::{Error, Result};

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub dt: Option<f64>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub snapshot_every: Option<u64>,
}

/// Scalar results of a run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub temperature: f64,
    #[serde(serialize_with = "as_map")]
    pub values: Vec<(String, f64)>,
}

fn as_map<S: serde::Serializer>(values: &[(String, f64)], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(values.iter().map(|(k, v)| (k, v)))
}

impl RunSummary {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Writes a snapshot every `every` steps.
pub struct SnapshotWriter {
    pub dir: PathBuf,
    pub every: u64,
    pub written: usize,
}

impl Observer for SnapshotWriter {
    fn observe(&mut self, scene: &Scene) -> Result<()> {
        if self.every > 0 && scene.step_count % self.every == 0 {
            let path = self.dir.join(format!("snapshot_{:09}.json", scene.step_count));
            write_snapshot(scene, &path)?;
            self.written += 1;
        }
        Ok(())
    }
}

struct Outputs {
    dir: Option<PathBuf>,
    snapshots: Option<SnapshotWriter>,
    idle: (),
}

impl Outputs {
    fn observer(&mut self) -> &mut dyn Observer {
        match self.snapshots.as_mut() {
            Some(w) => w,
            None => &mut self.idle,
        }
    }

    fn series(&self, name: &str, series: &TimeSeries) -> Result<()> {
        if let Some(dir) = &self.dir {
            write_timeseries(series, &dir.join(name))?;
        }
        Ok(())
    }
}

fn positive(path: &Path, name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config {
            path: path.to_path_buf(),
            message: format!("scenario.{name} must be positive, got {v}"),
        })
    }
}

/// Checks a configuration without running it; returns a one-line summary.
pub fn check_config(path: &Path) -> Result<String> {
    let cfg = read_config(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let s = &cfg.scenario;
    let t = s.temperature();
    positive(path, "temperature", t)?;
    build_material(&cfg, s.material(), t, base, path)?;
    match s {
        ScenarioSpec::TwoParticleSintering { load, duration, pull_rate, radius, .. } => {
            positive(path, "duration", *duration)?;
            positive(path, "pull_rate", *pull_rate)?;
            positive(path, "radius", *radius)?;
            if *load < 0.0 {
                return Err(Error::Config { path: path.into(), message: "scenario.load must be non-negative".into() });
            }
        }
        ScenarioSpec::SinteringVsLoad { loads, duration, .. } => {
            positive(path, "duration", *duration)?;
            if loads.is_empty() || loads.iter().any(|l| !(*l >= 0.0)) {
                return Err(Error::Config { path: path.into(), message: "scenario.loads must be non-empty and non-negative".into() });
            }
        }
        ScenarioSpec::BouncingParticle { drop_height, radius, viscosity_scale, .. } => {
            positive(path, "radius", *radius)?;
            positive(path, "viscosity_scale", *viscosity_scale)?;
            if let Some(h) = drop_height {
                positive(path, "drop_height", *h)?;
            }
        }
        ScenarioSpec::UniaxialCreep { duration, radius, .. } => {
            positive(path, "duration", *duration)?;
            positive(path, "radius", *radius)?;
        }
        ScenarioSpec::Custom { duration, .. } => {
            positive(path, "duration", *duration)?;
            let scene = build_scene(&cfg, path, 0)?;
            return Ok(format!(
                "custom scene: {} particles, {} walls, {} bonds, dt = {:e} s",
                scene.particles.len(),
                scene.walls.len(),
                scene.bonds.len(),
                scene.dt
            ));
        }
    }
    Ok(format!("{} at {} K: ok", s.name(), t))
}

fn run_inner(cfg: &ScenarioConfig, path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let base = path.parent().unwrap_or(Path::new("."));
    let s = &cfg.scenario;
    let t = s.temperature();
    let material = build_material(cfg, s.material(), t, base, path)?;
    if let Some(dir) = &opts.output_dir {
        std::fs::create_dir_all(dir)?;
    }
    let every = opts.snapshot_every.or(cfg.output.snapshot_every);
    let mut out = Outputs {
        dir: opts.output_dir.clone(),
        snapshots: match (&opts.output_dir, every) {
            (Some(dir), Some(n)) if n > 0 => Some(SnapshotWriter { dir: dir.clone(), every: n, written: 0 }),
            _ => None,
        },
        idle: (),
    };
    let mut values = Vec::new();
    match s {
        ScenarioSpec::TwoParticleSintering { load, duration, pull_rate, radius, .. } => {
            let mut setup = SinteringSetup::new(material, t, *load, *duration);
            setup.pull_rate = *pull_rate;
            setup.radius = *radius;
            setup.dt = opts.dt;
            let r = run_two_particle_sintering(&setup, out.observer())?;
            out.series("timeseries.csv", &r.series)?;
            values.push(("fracture_force_N".into(), r.f_frac));
            values.push(("indentation_m".into(), r.indentation));
            values.push(("capacity_N".into(), r.capacity));
        }
        ScenarioSpec::SinteringVsLoad { loads, duration, pull_rate, radius, .. } => {
            let mut samples = Vec::with_capacity(loads.len());
            for &load in loads {
                let mut setup = SinteringSetup::new(material.clone(), t, load, *duration);
                setup.pull_rate = *pull_rate;
                setup.radius = *radius;
                setup.dt = opts.dt;
                samples.push((load, run_two_particle_sintering(&setup, out.observer())?.f_frac));
            }
            let data = SinteringDataset {
                temperature: t,
                r_eq: radius / 2.0,
                tau_n: match material.fracture.tensile_strength {
                    Some(v) => v,
                    None => hall_petch_strength(&material.fracture, 2.0 * radius)?,
                },
                axis: SampleAxis::Load,
                load: None,
                duration: Some(*duration),
                f0_b: None,
                samples: samples.clone(),
            };
            if let Some(dir) = &out.dir {
                write_dataset(&data, &dir.join("sweep.csv"))?;
            }
            if samples.len() >= 2 {
                let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
                let fit = linear_fit(&x, &y)?;
                values.push(("slope".into(), fit.slope));
                values.push(("intercept_N".into(), fit.intercept));
                values.push(("r_squared".into(), fit.r_squared));
            }
            for (load, f) in samples {
                values.push((format!("fracture_force_N@{load}"), f));
            }
        }
        ScenarioSpec::BouncingParticle { drop_height, radius, viscosity_scale, .. } => {
            let mut setup = BounceSetup::new(material, t);
            if let Some(h) = drop_height {
                setup.drop_height = *h;
            }
            setup.radius = *radius;
            setup.viscosity_scale = *viscosity_scale;
            setup.dt = opts.dt;
            let r = run_bouncing_particle(&setup, out.observer())?;
            out.series("timeseries.csv", &r.series)?;
            values.push(("restitution".into(), r.restitution));
            values.push(("impact_speed_m_s".into(), r.impact_speed));
            values.push(("rebound_speed_m_s".into(), r.rebound_speed));
            values.push(("contact_time_s".into(), r.contact_time));
        }
        ScenarioSpec::UniaxialCreep { load, duration, unload_at, radius, .. } => {
            let mut setup = CreepSetup::new(material, t, *load, *duration);
            setup.unload_at = *unload_at;
            setup.radius = *radius;
            setup.dt = opts.dt;
            let r = run_uniaxial_creep(&setup, out.observer())?;
            out.series("timeseries.csv", &r.series)?;
            let last = r.series.records.last().map_or(0.0, |rec| rec.values[0]);
            values.push(("final_overlap_m".into(), last));
        }
        ScenarioSpec::Custom { duration, .. } => {
            let mut scene = build_scene(cfg, path, opts.seed)?;
            if let Some(dt) = opts.dt {
                scene.dt = dt;
            }
            let series = run_custom(&mut scene, *duration, out.observer())?;
            out.series("timeseries.csv", &series)?;
            if let Some(dir) = &out.dir {
                write_snapshot(&scene, &dir.join("final.json"))?;
            }
            values.push(("kinetic_energy_J".into(), scene.kinetic_energy()));
            values.push(("steps".into(), scene.step_count as f64));
        }
    }
    let summary = RunSummary {
        scenario: s.name().into(),
        temperature: t,
        values,
    };
    if let Some(dir) = &out.dir {
        let f = std::fs::File::create(dir.join("summary.json"))?;
        serde_json::to_writer_pretty(f, &summary)?;
    }
    Ok(summary)
}

/// Runs the scenario in `path`, on a pool of `opts.threads` workers when set.
pub fn run_config(path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let cfg = read_config(path)?;
    if let Some(dt) = opts.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config { path: path.into(), message: format!("--dt must be positive, got {dt}") });
        }
    }
    match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            pool.install(|| run_inner(&cfg, path, opts))
        }
        None => run_inner(&cfg, path, opts),
    }
}
