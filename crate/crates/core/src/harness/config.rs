//! Scenario configuration files (TOML, schema version 1).
//!
//! ```toml
//! version = 1
//!
//! [scenario]
//! kind = "two_particle_sintering"
//! material = "ice"
//! temperature = 268.15
//! load = 0.1
//! duration = 0.25
//!
//! [materials.ice]
//! source = "table"
//! ```
//!
//! `kind` is one of `two_particle_sintering`, `sintering_vs_load`,
//! `bouncing_particle`, `uniaxial_creep` or `custom`; a custom scenario takes
//! its particles, walls and bonds from a `[scene]` table.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::bond::FractureConfig;
use crate::contact::FrictionConfig;
use crate::dynamics::{critical_dt, Motion, Particle, Scene, Wall};
use crate::error::{Error, Result};
use crate::material::{Material, MaterialModel, TemperatureModel, DEFAULT_CONTACT_SCALE};
use crate::rheology::BurgersParams;
use crate::Vec3;

pub const CONFIG_VERSION: u32 = 1;

fn default_version() -> u32 {
    CONFIG_VERSION
}
fn default_pull_rate() -> f64 {
    1e-3
}
fn default_radius() -> f64 {
    3e-3
}
fn default_sintering_time() -> f64 {
    0.25
}
fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub materials: BTreeMap<String, MaterialSpec>,
    #[serde(default)]
    pub scene: Option<SceneSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    TwoParticleSintering {
        material: String,
        temperature: f64,
        load: f64,
        duration: f64,
        #[serde(default = "default_pull_rate")]
        pull_rate: f64,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    SinteringVsLoad {
        material: String,
        temperature: f64,
        loads: Vec<f64>,
        #[serde(default = "default_sintering_time")]
        duration: f64,
        #[serde(default = "default_pull_rate")]
        pull_rate: f64,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    BouncingParticle {
        material: String,
        temperature: f64,
        #[serde(default)]
        drop_height: Option<f64>,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_one")]
        viscosity_scale: f64,
    },
    UniaxialCreep {
        material: String,
        temperature: f64,
        load: f64,
        duration: f64,
        #[serde(default)]
        unload_at: Option<f64>,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    Custom {
        material: String,
        temperature: f64,
        duration: f64,
    },
}

impl ScenarioSpec {
    pub fn material(&self) -> &str {
        match self {
            ScenarioSpec::TwoParticleSintering { material, .. }
            | ScenarioSpec::SinteringVsLoad { material, .. }
            | ScenarioSpec::BouncingParticle { material, .. }
            | ScenarioSpec::UniaxialCreep { material, .. }
            | ScenarioSpec::Custom { material, .. } => material,
        }
    }

    pub fn temperature(&self) -> f64 {
        match self {
            ScenarioSpec::TwoParticleSintering { temperature, .. }
            | ScenarioSpec::SinteringVsLoad { temperature, .. }
            | ScenarioSpec::BouncingParticle { temperature, .. }
            | ScenarioSpec::UniaxialCreep { temperature, .. }
            | ScenarioSpec::Custom { temperature, .. } => *temperature,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioSpec::TwoParticleSintering { .. } => "two_particle_sintering",
            ScenarioSpec::SinteringVsLoad { .. } => "sintering_vs_load",
            ScenarioSpec::BouncingParticle { .. } => "bouncing_particle",
            ScenarioSpec::UniaxialCreep { .. } => "uniaxial_creep",
            ScenarioSpec::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialSource {
    /// Built-in calibration table.
    Table,
    /// A parameter file written by `calibrate`.
    Fit,
    /// Constants given in `params`.
    Inline,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineParams {
    pub k_i: f64,
    pub k_d: f64,
    pub c_i: f64,
    pub c_d: f64,
    #[serde(default)]
    pub f0_b: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub source: MaterialSource,
    /// Parameter file for `source = "fit"`, relative to the config.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub params: Option<InlineParams>,
    /// Multiplies the constants; the table default is 10.
    #[serde(default)]
    pub contact_scale: Option<f64>,
    #[serde(default)]
    pub temperature_model: Option<TemperatureModel>,
    #[serde(default)]
    pub density: Option<f64>,
    #[serde(default)]
    pub poisson_ratio: Option<f64>,
    #[serde(default)]
    pub bond_modulus_scale: Option<f64>,
    #[serde(default)]
    pub sintering: Option<bool>,
    #[serde(default)]
    pub fracture: Option<FractureConfig>,
    #[serde(default)]
    pub friction: Option<FrictionConfig>,
}

/// The constants of a `calibrate` parameter file; report fields are ignored.
#[derive(Debug, Clone, Deserialize)]
struct FitFile {
    temperature: f64,
    k_i: f64,
    k_d: f64,
    c_i: f64,
    c_d: f64,
    f0_b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpec {
    pub radius: f64,
    pub position: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default)]
    pub angular_velocity: [f64; 3],
    #[serde(default)]
    pub motion: Motion,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub external_force: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub point: [f64; 3],
    pub normal: [f64; 3],
}

/// Randomly placed, non-overlapping spheres inside a box; placement uses the
/// run seed.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSpec {
    pub count: usize,
    pub radius: f64,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default)]
    pub gravity: Option<[f64; 3]>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub particles: Vec<ParticleSpec>,
    #[serde(default)]
    pub clouds: Vec<CloudSpec>,
    #[serde(default)]
    pub walls: Vec<WallSpec>,
    #[serde(default)]
    pub bonds: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Snapshot cadence in steps; none when absent.
    #[serde(default)]
    pub snapshot_every: Option<u64>,
}

fn config_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Maps a TOML error to the line it points at and the key written there.
/// Offset within a table's text of the line a deserialization message is
/// about. Tagged tables are reported as a whole, so the key or value the
/// message quotes is looked up.
fn culprit(table: &str, message: &str) -> Option<usize> {
    let quoted = |open: &str, close: char| {
        let rest = &message[message.find(open)? + open.len()..];
        Some(rest[..rest.find(close)?].to_string())
    };
    let key = quoted("field `", '`');
    let value = quoted("string \"", '"')
        .map(|v| format!("\"{v}\""))
        .or_else(|| quoted("integer `", '`'))
        .or_else(|| quoted("floating point `", '`'));
    let mut offset = 0;
    for line in table.split_inclusive('\n') {
        if let Some((k, v)) = line.split_once('=') {
            let hit = key.as_deref().is_some_and(|key| k.trim() == key)
                || value.as_deref().is_some_and(|val| v.trim() == val);
            if hit {
                return Some(offset);
            }
        }
        offset += line.len();
    }
    None
}

fn toml_error(path: &Path, text: &str, err: &toml::de::Error) -> Error {
    let Some(span) = err.span() else {
        return config_error(path, err.message());
    };
    let start = span.start.min(text.len());
    // a table is reported by its header; its body runs to the next header
    let end = span.end.clamp(start, text.len());
    let end = text[end..].find("\n[").map_or(text.len(), |k| end + k);
    let start = culprit(&text[start..end], err.message()).map_or(start, |k| start + k);
    let line = text[..start].matches('\n').count() + 1;
    let line_text = text.lines().nth(line - 1).unwrap_or("");
    let field = match line_text.split_once('=') {
        Some((key, _)) => key.trim().to_string(),
        None => line_text.trim().trim_matches(['[', ']']).to_string(),
    };
    Error::Field {
        path: path.to_path_buf(),
        line,
        field,
        message: err.message().to_string(),
    }
}

pub fn parse_config(text: &str, path: &Path) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| toml_error(path, text, &e))?;
    if cfg.version != CONFIG_VERSION {
        return Err(config_error(
            path,
            format!("config version {} is not supported (expected {CONFIG_VERSION})", cfg.version),
        ));
    }
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(path, format!("cannot read: {e}")))?;
    parse_config(&text, path)
}

/// Resolves a named material; `base` is the directory of the config file.
pub fn build_material(
    cfg: &ScenarioConfig,
    name: &str,
    temperature: f64,
    base: &Path,
    path: &Path,
) -> Result<Material> {
    let spec = cfg
        .materials
        .get(name)
        .ok_or_else(|| Error::MissingMaterial(name.to_string()))?;
    let scale = spec.contact_scale;
    let model = match spec.source {
        MaterialSource::Table => {
            let s = scale.unwrap_or(DEFAULT_CONTACT_SCALE);
            match spec.temperature_model {
                None => MaterialModel::from_table(temperature, s),
                Some(tm) => MaterialModel {
                    temperature_model: tm,
                    ..MaterialModel::wlf_from_table(s)
                },
            }
        }
        MaterialSource::Fit => {
            let rel = spec
                .path
                .as_ref()
                .ok_or_else(|| config_error(path, format!("material `{name}`: source = \"fit\" needs `path`")))?;
            let file = base.join(rel);
            let text = std::fs::read_to_string(&file)
                .map_err(|e| config_error(path, format!("material `{name}`: {}: {e}", file.display())))?;
            let fit: FitFile = toml::from_str(&text).map_err(|e| toml_error(&file, &text, &e))?;
            let p = BurgersParams::new(fit.k_i, fit.k_d, fit.c_i, fit.c_d, fit.f0_b, fit.temperature)?;
            MaterialModel {
                reference: p.scaled(scale.unwrap_or(1.0)),
                temperature_model: spec.temperature_model.unwrap_or(TemperatureModel::Fixed),
            }
        }
        MaterialSource::Inline => {
            let q = spec
                .params
                .ok_or_else(|| config_error(path, format!("material `{name}`: source = \"inline\" needs `params`")))?;
            let p = BurgersParams::new(q.k_i, q.k_d, q.c_i, q.c_d, q.f0_b, q.temperature)?;
            MaterialModel {
                reference: p.scaled(scale.unwrap_or(1.0)),
                temperature_model: spec.temperature_model.unwrap_or(TemperatureModel::Fixed),
            }
        }
    };
    let mut m = Material::new(model);
    if let Some(v) = spec.density {
        m.density = v;
    }
    if let Some(v) = spec.poisson_ratio {
        m.poisson_ratio = v;
    }
    if let Some(v) = spec.bond_modulus_scale {
        m.bond_modulus_scale = v;
    }
    if let Some(v) = spec.sintering {
        m.sintering = v;
    }
    if let Some(v) = spec.fracture.clone() {
        m.fracture = v;
    }
    if let Some(v) = spec.friction.clone() {
        m.friction = v;
    }
    m.validate()
        .map_err(|e| config_error(path, format!("material `{name}`: {e}")))?;
    m.model
        .params_at(temperature)
        .map_err(|e| config_error(path, format!("material `{name}` at {temperature} K: {e}")))?;
    Ok(m)
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn place_cloud(scene: &mut Scene, cloud: &CloudSpec, rng: &mut ChaCha8Rng, path: &Path, k: usize) -> Result<()> {
    let lo = vec3(cloud.min);
    let hi = vec3(cloud.max);
    if !(cloud.radius > 0.0) || (0..3).any(|a| hi[a] - lo[a] < 2.0 * cloud.radius) {
        return Err(config_error(path, format!("scene.clouds[{k}]: box smaller than one particle")));
    }
    let density = scene.material.density;
    let mut placed = 0;
    let mut attempts = 0;
    while placed < cloud.count {
        attempts += 1;
        if attempts > 1000 * cloud.count.max(1) {
            return Err(config_error(
                path,
                format!("scene.clouds[{k}]: placed only {placed} of {} particles", cloud.count),
            ));
        }
        let x = Vec3::from_fn(|a, _| rng.random_range(lo[a] + cloud.radius..=hi[a] - cloud.radius));
        let free = scene
            .particles
            .iter()
            .all(|p| (p.position - x).norm() >= p.radius + cloud.radius);
        if free {
            scene.add_particle(Particle::sphere(0, cloud.radius, density, x)?);
            placed += 1;
        }
    }
    Ok(())
}

/// Builds the scene of a custom scenario.
pub fn build_scene(cfg: &ScenarioConfig, path: &Path, seed: u64) -> Result<Scene> {
    let ScenarioSpec::Custom {
        material, temperature, ..
    } = &cfg.scenario
    else {
        return Err(config_error(path, format!("scenario `{}` has no scene", cfg.scenario.name())));
    };
    let spec = cfg
        .scene
        .as_ref()
        .ok_or_else(|| config_error(path, "custom scenario needs a [scene] table"))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mat = build_material(cfg, material, *temperature, base, path)?;
    let mut scene = Scene::new(mat, *temperature, 1.0);
    if let Some(g) = spec.gravity {
        scene.gravity = vec3(g);
    }
    let density = scene.material.density;
    for (k, p) in spec.particles.iter().enumerate() {
        let mut q = Particle::sphere(0, p.radius, density, vec3(p.position))
            .map_err(|e| config_error(path, format!("scene.particles[{k}]: {e}")))?
            .with_motion(p.motion)
            .with_velocity(vec3(p.velocity));
        q.angular_velocity = vec3(p.angular_velocity);
        q.temperature = p.temperature;
        q.external_force = vec3(p.external_force);
        q.validate()
            .map_err(|e| config_error(path, format!("scene.particles[{k}]: {e}")))?;
        scene.add_particle(q);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (k, c) in spec.clouds.iter().enumerate() {
        place_cloud(&mut scene, c, &mut rng, path, k)?;
    }
    for (k, w) in spec.walls.iter().enumerate() {
        let wall = Wall::new(vec3(w.point), vec3(w.normal))
            .map_err(|e| config_error(path, format!("scene.walls[{k}]: {e}")))?;
        scene.add_wall(wall);
    }
    if scene.particles.is_empty() {
        return Err(config_error(path, "scene has no particles"));
    }
    for (k, &(i, j)) in spec.bonds.iter().enumerate() {
        scene
            .add_bond(i, j)
            .map_err(|e| config_error(path, format!("scene.bonds[{k}]: {e}")))?;
    }
    scene.dt = match spec.dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(config_error(path, format!("scene.dt must be positive, got {dt}"))),
        None => critical_dt(&scene)?,
    };
    scene.validate().map_err(|e| config_error(path, e.to_string()))?;
    Ok(scene)
}

/// Reads a custom-scenario config and builds its scene.
pub fn load_scene(path: &Path) -> Result<Scene> {
    let cfg = read_config(path)?;
    build_scene(&cfg, path, 0)
}
