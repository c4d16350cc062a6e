//! The verification scenarios.

use crate::bond::FailureMode;
use crate::dynamics::{critical_dt, Motion, Particle, PairEvent, Scene, Wall};
use crate::error::{Error, Result};
use crate::harness::io::TimeSeries;
use crate::material::Material;
use crate::rheology::{displacement_for_force, BurgersParams};
use crate::Vec3;

/// Sees the scene after every step.
pub trait Observer {
    fn observe(&mut self, scene: &Scene) -> Result<()>;
}

impl Observer for () {
    fn observe(&mut self, _: &Scene) -> Result<()> {
        Ok(())
    }
}

const PAIR: (usize, usize) = (0, 1);

fn sample_every(steps: usize) -> usize {
    (steps / 1000).max(1)
}

fn contact_pair(scene: &Scene) -> (f64, f64) {
    let p = &scene.particles;
    let overlap = p[0].radius + p[1].radius - (p[1].position - p[0].position).norm();
    let force = scene.contact(PAIR).map_or(0.0, |c| c.force_n);
    (overlap, force)
}

fn two_spheres(material: Material, temperature: f64, radius: f64, gap: f64) -> Result<Scene> {
    let mut scene = Scene::new(material, temperature, 1.0);
    scene.gravity = Vec3::zeros();
    let density = scene.material.density;
    scene.add_particle(Particle::sphere(0, radius, density, Vec3::zeros())?.with_motion(Motion::Fixed));
    scene.add_particle(Particle::sphere(
        1,
        radius,
        density,
        Vec3::new(2.0 * radius + gap, 0.0, 0.0),
    )?);
    Ok(scene)
}

/// Compress two spheres, then pull them apart until the bond fails.
#[derive(Debug, Clone, PartialEq)]
pub struct SinteringSetup {
    pub material: Material,
    pub temperature: f64,
    /// Compressive load (N).
    pub load: f64,
    /// Time under load (s).
    pub duration: f64,
    /// Separation speed once the ramp is over (m/s).
    pub pull_rate: f64,
    pub radius: f64,
    /// Initial overlap so a bond forms even without load (m).
    pub seed_overlap: f64,
    /// Loading time step; the critical estimate when absent.
    pub dt: Option<f64>,
    /// Pull distance after which the run gives up (m).
    pub max_pull: f64,
}

impl SinteringSetup {
    pub fn new(material: Material, temperature: f64, load: f64, duration: f64) -> Self {
        SinteringSetup {
            material,
            temperature,
            load,
            duration,
            pull_rate: 1e-3,
            radius: 3e-3,
            seed_overlap: 1e-9,
            dt: None,
            max_pull: 5e-3,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.load >= 0.0
            && self.duration >= 0.0
            && self.pull_rate > 0.0
            && self.radius > 0.0
            && self.seed_overlap > 0.0
            && self.max_pull > 0.0
            && self.dt.is_none_or(|d| d > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("sintering setup: loads, times and sizes must be positive"))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SinteringRun {
    /// Bond normal force when the failure criterion first tripped (N).
    pub f_frac: f64,
    pub mode: FailureMode,
    /// Bond indentation at the end of loading (m).
    pub indentation: f64,
    /// Bond tensile capacity at the end of loading (N).
    pub capacity: f64,
    pub series: TimeSeries,
    pub scene: Scene,
}

pub fn run_two_particle_sintering(setup: &SinteringSetup, obs: &mut dyn Observer) -> Result<SinteringRun> {
    setup.validate()?;
    let mut scene = two_spheres(
        setup.material.clone(),
        setup.temperature,
        setup.radius,
        -setup.seed_overlap,
    )?;
    scene.dt = match setup.dt {
        Some(dt) => dt,
        None => critical_dt(&scene)?,
    };
    let dt = scene.dt;
    let steps = ((setup.duration / dt).round() as usize).max(1);
    let ramp = (1e-3f64).min(setup.duration / 10.0);
    let every = sample_every(steps);
    let mut series = TimeSeries::new(&[
        "stage",
        "overlap_m",
        "contact_force_N",
        "bond_force_N",
        "bond_area_m2",
    ]);
    let record = |scene: &Scene, stage: f64, series: &mut TimeSeries| {
        let (overlap, fc) = contact_pair(scene);
        let (fb, area) = scene
            .bonds
            .get(PAIR)
            .map_or((0.0, 0.0), |b| (b.stored.f_n, b.area));
        series.push(scene.time, &[stage, overlap, fc, fb, area])
    };

    for k in 0..steps {
        let t = k as f64 * dt;
        let f = if ramp > 0.0 { setup.load * (t / ramp).min(1.0) } else { setup.load };
        scene.particles[1].external_force = Vec3::new(-f, 0.0, 0.0);
        scene.step()?;
        obs.observe(&scene)?;
        if (k + 1) % every == 0 || k + 1 == steps {
            record(&scene, 0.0, &mut series)?;
        }
    }

    let bond = scene.bonds.get(PAIR).filter(|b| b.is_active()).ok_or(Error::NoBondFormed)?;
    let indentation = bond.indentation;
    let capacity = bond.tensile_capacity();
    let k_b = bond.axial_stiffness();
    let c_b = bond.eta_n * bond.area / bond.length;
    if k_b * setup.max_pull + c_b * setup.pull_rate < capacity {
        // even the stiffest reading of the bond cannot reach its capacity
        return Err(Error::NoFracture(setup.max_pull));
    }

    // take the load off: hold the pair where the contact still carries a
    // vanishing force, so the bond engages from rest once the pull starts
    let law = scene.law_at(setup.temperature)?.normal;
    let contact = scene.contact(PAIR).ok_or(Error::NoBondFormed)?.normal;
    let u_rest = displacement_for_force(&law, &contact, 1e-9 * capacity, dt)?;
    let p1 = &mut scene.particles[1];
    p1.motion = Motion::Kinematic;
    p1.external_force = Vec3::zeros();
    p1.velocity = Vec3::zeros();
    p1.position.x = 2.0 * setup.radius - u_rest;
    scene.step()?;
    obs.observe(&scene)?;
    record(&scene, 1.0, &mut series)?;

    // ramp the pull speed over the bond's retardation time so the dashpot
    // does not load the bond in a single step
    let ramp = if k_b > 0.0 { c_b / k_b } else { 0.0 };
    let dt_pull = dt.min(1e-3 * capacity / (2.0 * k_b * setup.pull_rate));
    scene.dt = dt_pull;
    let start = scene.particles[1].position.x;
    let mut t_pull = 0.0;
    let mut k = 0usize;
    loop {
        t_pull += dt_pull;
        let v = if ramp > 0.0 { setup.pull_rate * (t_pull / ramp).min(1.0) } else { setup.pull_rate };
        scene.particles[1].velocity = Vec3::new(v, 0.0, 0.0);
        let report = scene.step()?;
        obs.observe(&scene)?;
        k += 1;
        let failed = report.events.iter().find_map(|e| match e {
            PairEvent::BondFailed(PAIR, mode) => Some(*mode),
            _ => None,
        });
        if let Some(mode) = failed {
            record(&scene, 1.0, &mut series)?;
            // the load the criterion saw, dashpot included
            let f_frac = scene
                .bonds
                .get(PAIR)
                .map(|b| b.stored.f_n)
                .ok_or(Error::BondState(PAIR.0, PAIR.1))?;
            return Ok(SinteringRun {
                f_frac,
                mode,
                indentation,
                capacity,
                series,
                scene,
            });
        }
        if k % 100 == 0 {
            record(&scene, 1.0, &mut series)?;
        }
        let travelled = scene.particles[1].position.x - start;
        if travelled > setup.max_pull || !scene.bonds.get(PAIR).is_some_and(|b| b.is_active()) {
            return Err(Error::NoFracture(travelled));
        }
    }
}

/// Fracture force at each load for a fixed sintering time.
pub fn run_sintering_vs_load(base: &SinteringSetup, loads: &[f64]) -> Result<Vec<(f64, f64)>> {
    loads
        .iter()
        .map(|&load| {
            let setup = SinteringSetup { load, ..base.clone() };
            Ok((load, run_two_particle_sintering(&setup, &mut ())?.f_frac))
        })
        .collect()
}

/// A sphere dropped on a wall of the same ice.
#[derive(Debug, Clone, PartialEq)]
pub struct BounceSetup {
    pub material: Material,
    pub temperature: f64,
    pub drop_height: f64,
    pub radius: f64,
    /// Time step as a fraction of the critical estimate.
    pub dt_fraction: f64,
    /// Explicit time step, overriding `dt_fraction`.
    pub dt: Option<f64>,
    /// Multiplies both viscosities; large values approach an elastic contact.
    pub viscosity_scale: f64,
    pub max_time: f64,
}

impl BounceSetup {
    /// Drop height giving a 1 m/s impact.
    pub fn new(material: Material, temperature: f64) -> Self {
        BounceSetup {
            material,
            temperature,
            drop_height: 1.0 / (2.0 * 9.81),
            radius: 3e-3,
            dt_fraction: 0.2,
            dt: None,
            viscosity_scale: 1.0,
            max_time: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BounceRun {
    pub restitution: f64,
    pub impact_speed: f64,
    pub rebound_speed: f64,
    pub contact_time: f64,
    pub series: TimeSeries,
}

pub fn run_bouncing_particle(setup: &BounceSetup, obs: &mut dyn Observer) -> Result<BounceRun> {
    if !(setup.drop_height > 0.0 && setup.radius > 0.0 && setup.dt_fraction > 0.0 && setup.viscosity_scale > 0.0) {
        return Err(Error::invalid("bounce setup: height, radius, step and scale must be positive"));
    }
    let mut material = setup.material.clone();
    material.sintering = false;
    let r = &mut material.model.reference;
    r.c_i *= setup.viscosity_scale;
    r.c_d *= setup.viscosity_scale;
    let mut scene = Scene::new(material, setup.temperature, 1.0);
    let g = scene.gravity.norm();
    scene.add_wall(Wall::floor(0.0));
    let gap = 1e-3 * setup.radius;
    let v0 = (2.0 * g * setup.drop_height).sqrt();
    let density = scene.material.density;
    scene.add_particle(
        Particle::sphere(0, setup.radius, density, Vec3::new(0.0, 0.0, setup.radius + gap))?
            .with_velocity(Vec3::new(0.0, 0.0, -v0)),
    );
    scene.dt = match setup.dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(Error::invalid(format!("time step must be positive, got {dt}"))),
        None => setup.dt_fraction * critical_dt(&scene)?,
    };

    let mut series = TimeSeries::new(&["height_m", "velocity_z_m_s", "contact_force_N", "kinetic_energy_J"]);
    let mut impact: Option<(f64, f64)> = None;
    let mut prev_vz = -v0;
    let mut k = 0usize;
    while scene.time < setup.max_time {
        scene.step()?;
        obs.observe(&scene)?;
        k += 1;
        let p = &scene.particles[0];
        let in_contact = !scene.wall_contacts.is_empty();
        let fc = scene.wall_contacts.first().map_or(0.0, |c| c.force_n);
        if in_contact || k % 20 == 0 {
            series.push(scene.time, &[p.position.z, p.velocity.z, fc, scene.kinetic_energy()])?;
        }
        match impact {
            None if in_contact => impact = Some((prev_vz.abs(), scene.time)),
            Some((v_in, t_in)) if !in_contact => {
                let v_out = p.velocity.z.max(0.0);
                return Ok(BounceRun {
                    restitution: v_out / v_in,
                    impact_speed: v_in,
                    rebound_speed: v_out,
                    contact_time: scene.time - t_in,
                    series,
                });
            }
            _ => {}
        }
        prev_vz = p.velocity.z;
    }
    // the sphere came to rest on the wall
    let v_in = impact.map_or(v0, |i| i.0);
    Ok(BounceRun {
        restitution: 0.0,
        impact_speed: v_in,
        rebound_speed: 0.0,
        contact_time: f64::INFINITY,
        series,
    })
}

/// Constant load on a two-sphere column, optionally released.
#[derive(Debug, Clone, PartialEq)]
pub struct CreepSetup {
    pub material: Material,
    pub temperature: f64,
    pub load: f64,
    pub duration: f64,
    /// Time at which the load is removed.
    pub unload_at: Option<f64>,
    pub radius: f64,
    pub dt: Option<f64>,
}

impl CreepSetup {
    pub fn new(material: Material, temperature: f64, load: f64, duration: f64) -> Self {
        CreepSetup {
            material,
            temperature,
            load,
            duration,
            unload_at: None,
            radius: 3e-3,
            dt: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CreepRun {
    /// Contact constants used by the run.
    pub params: BurgersParams,
    /// Channels `overlap_m`, `contact_force_N` and the closed-form `analytic_m`.
    pub series: TimeSeries,
}

/// Closed-form overlap of a Burgers element loaded by `f0` at `t = 0` and
/// released at `t_u`.
pub fn creep_recovery(params: &BurgersParams, f0: f64, t: f64, t_u: Option<f64>) -> f64 {
    let rate = params.relaxation_rate();
    match t_u {
        Some(tu) if t > tu => {
            f0 * (tu / params.c_i + (1.0 - (-tu * rate).exp()) / params.k_d * (-(t - tu) * rate).exp())
        }
        _ => f0 * (1.0 / params.k_i + t / params.c_i + (1.0 - (-t * rate).exp()) / params.k_d),
    }
}

pub fn run_uniaxial_creep(setup: &CreepSetup, obs: &mut dyn Observer) -> Result<CreepRun> {
    if !(setup.load >= 0.0 && setup.duration > 0.0 && setup.radius > 0.0) {
        return Err(Error::invalid("creep setup: load must be non-negative, duration and radius positive"));
    }
    let mut material = setup.material.clone();
    material.sintering = false;
    let mut scene = two_spheres(material, setup.temperature, setup.radius, 0.0)?;
    scene.dt = match setup.dt {
        Some(dt) => dt,
        None => critical_dt(&scene)?,
    };
    let dt = scene.dt;
    let params = scene.law_at(setup.temperature)?.normal;
    let steps = (setup.duration / dt).round() as usize;
    let every = sample_every(steps);
    let mut series = TimeSeries::new(&["overlap_m", "contact_force_N", "analytic_m"]);
    let touching = 2.0 * setup.radius;
    for k in 0..steps {
        let t = k as f64 * dt;
        let unloaded = setup.unload_at.is_some_and(|tu| t >= tu);
        if unloaded {
            // release quasi-statically: hold the overlap the free element relaxes to
            let p = &mut scene.particles[1];
            p.motion = Motion::Kinematic;
            p.velocity = Vec3::zeros();
            p.external_force = Vec3::zeros();
            if let Some(c) = scene.contact(PAIR) {
                let u = displacement_for_force(&params, &c.normal, 0.0, dt)?;
                scene.particles[1].position.x = touching - u;
            }
        } else {
            scene.particles[1].external_force = Vec3::new(-setup.load, 0.0, 0.0);
        }
        scene.step()?;
        obs.observe(&scene)?;
        if (k + 1) % every == 0 || k + 1 == steps {
            let (overlap, fc) = contact_pair(&scene);
            let analytic = if setup.load > 0.0 {
                creep_recovery(&params, setup.load, scene.time, setup.unload_at)
            } else {
                0.0
            };
            series.push(scene.time, &[overlap, fc, analytic])?;
        }
    }
    Ok(CreepRun { params, series })
}

/// Runs a prepared scene for `duration`, recording global channels.
pub fn run_custom(scene: &mut Scene, duration: f64, obs: &mut dyn Observer) -> Result<TimeSeries> {
    if !(duration > 0.0) {
        return Err(Error::invalid("custom run needs a positive duration"));
    }
    let steps = (duration / scene.dt).round() as usize;
    let every = sample_every(steps);
    let mut series = TimeSeries::new(&["kinetic_energy_J", "contacts", "active_bonds", "broken_bonds"]);
    for k in 0..steps {
        let report = scene.step()?;
        obs.observe(scene)?;
        if (k + 1) % every == 0 || k + 1 == steps {
            series.push(
                scene.time,
                &[
                    scene.kinetic_energy(),
                    report.contacts as f64,
                    scene.active_bonds() as f64,
                    scene.bonds.count(crate::bond::BondPhase::Broken) as f64,
                ],
            )?;
        }
    }
    Ok(series)
}
