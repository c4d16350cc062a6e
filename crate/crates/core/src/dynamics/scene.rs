use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrator::{gear_correct, gear_correct_rotation, gear_predict, update_orientation};
use super::neighbor::{neighbor_search, DEFAULT_SKIN_FRACTION};
use super::{Motion, Particle, Wall};
use crate::bond::{
    create_bond, evaluate_bond, grow_bond, Bond, BondEvent, BondGeometry, BondLoads, BondPhase,
    BondRegistry, BondStep, FailureMode,
};
use crate::contact::{
    assemble_pair, contact_kinematics, update_contact, wall_kinematics, ContactLaw, ContactLoads,
    ContactState, PairForce, PairKinematics,
};
use crate::error::{Error, Result};
use crate::material::Material;
use crate::rheology::transverse_params;
use crate::Vec3;

/// Something that happened to a pair during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairEvent {
    BondCreated((usize, usize)),
    BondFailed((usize, usize), FailureMode),
    BondBroken((usize, usize)),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub time: f64,
    pub candidate_pairs: usize,
    pub contacts: usize,
    pub events: Vec<PairEvent>,
}

/// Particles, their interaction memory and the global conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub particles: Vec<Particle>,
    /// Particle-particle contacts, sorted by pair.
    pub contacts: Vec<ContactState>,
    /// Particle-wall contacts keyed `(particle, wall)`, sorted.
    pub wall_contacts: Vec<ContactState>,
    pub bonds: BondRegistry,
    pub walls: Vec<Wall>,
    pub gravity: Vec3,
    pub dt: f64,
    pub time: f64,
    pub step_count: u64,
    /// Default particle temperature (K).
    pub temperature: f64,
    pub material: Material,
    pub skin_fraction: f64,
    /// Pair counts at or above this are evaluated on the rayon pool.
    pub parallel_threshold: usize,
}

struct PairResult {
    pair: (usize, usize),
    force: PairForce,
    contact: Option<ContactState>,
    bond: Option<Bond>,
    drop_bond: bool,
    event: Option<PairEvent>,
}

fn lookup<'a>(list: &'a [ContactState], pair: (usize, usize)) -> Option<&'a ContactState> {
    list.binary_search_by(|c| c.pair.cmp(&pair))
        .ok()
        .map(|i| &list[i])
}

/// Reduced value of a per-particle inertia; particles that ignore forces
/// count as infinitely heavy.
fn reduced(a: &Particle, b: &Particle, of: impl Fn(&Particle) -> f64) -> f64 {
    let inv = |p: &Particle| if p.motion == Motion::Dynamic { 1.0 / of(p) } else { 0.0 };
    let sum = inv(a) + inv(b);
    if sum > 0.0 { 1.0 / sum } else { f64::INFINITY }
}

fn numerical(pair: (usize, usize), detail: &str) -> Error {
    Error::NumericalFailure {
        a: format!("particle {}", pair.0),
        b: format!("particle {}", pair.1),
        detail: detail.into(),
    }
}

impl Scene {
    pub fn new(material: Material, temperature: f64, dt: f64) -> Self {
        Scene {
            particles: Vec::new(),
            contacts: Vec::new(),
            wall_contacts: Vec::new(),
            bonds: BondRegistry::new(),
            walls: Vec::new(),
            gravity: Vec3::new(0.0, 0.0, -9.81),
            dt,
            time: 0.0,
            step_count: 0,
            temperature,
            material,
            skin_fraction: DEFAULT_SKIN_FRACTION,
            parallel_threshold: 512,
        }
    }

    /// Adds a particle, renumbering it to its index.
    pub fn add_particle(&mut self, mut p: Particle) -> usize {
        let id = self.particles.len();
        p.id = id;
        self.particles.push(p);
        id
    }

    pub fn add_wall(&mut self, wall: Wall) -> usize {
        self.walls.push(wall);
        self.walls.len() - 1
    }

    /// Declares an existing sintered bond between two overlapping particles.
    /// The current geometry is its unstressed state.
    pub fn add_bond(&mut self, i: usize, j: usize) -> Result<()> {
        let (a, b) = (i.min(j), i.max(j));
        if b >= self.particles.len() || a == b {
            return Err(Error::invalid(format!("bond ({i}, {j}) names unknown particles")));
        }
        let law = self.law_at(self.pair_temperature(a, b))?;
        let kin = contact_kinematics(&self.particles[a], &self.particles[b], self.dt)?;
        let bond = create_bond(
            (a, b),
            &self.bond_geometry(a, b, &kin),
            self.time,
            &law.normal,
            &self.material.fracture,
            self.material.bond_modulus_scale,
        )?;
        self.bonds.insert(bond)
    }

    fn bond_geometry(&self, a: usize, b: usize, kin: &PairKinematics) -> BondGeometry {
        BondGeometry {
            overlap: kin.overlap,
            reduced_radius: kin.reduced_radius,
            distance: kin.distance,
            grain_size: self.particles[a].radius + self.particles[b].radius,
            normal: kin.normal,
        }
    }

    pub fn particle_temperature(&self, i: usize) -> f64 {
        self.particles[i].temperature.unwrap_or(self.temperature)
    }

    fn pair_temperature(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.particle_temperature(i) + self.particle_temperature(j))
    }

    /// Contact constants at `kelvin`.
    pub fn law_at(&self, kelvin: f64) -> Result<ContactLaw> {
        let normal = self.material.model.params_at(kelvin)?;
        Ok(ContactLaw {
            normal,
            transverse: transverse_params(&normal, self.material.poisson_ratio)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {}", self.dt)));
        }
        self.material.validate()?;
        self.law_at(self.temperature)?;
        for (k, p) in self.particles.iter().enumerate() {
            p.validate()?;
            if p.id != k {
                return Err(Error::invalid(format!("particle at index {k} has id {}", p.id)));
            }
        }
        Ok(())
    }

    pub fn contact(&self, pair: (usize, usize)) -> Option<&ContactState> {
        lookup(&self.contacts, pair)
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.particles.iter().map(Particle::kinetic_energy).sum()
    }

    pub fn momentum(&self) -> Vec3 {
        self.particles.iter().map(Particle::momentum).sum()
    }

    fn evaluate_pair(
        &self,
        pair: (usize, usize),
        default_law: &ContactLaw,
    ) -> Result<PairResult> {
        let (i, j) = pair;
        let dt = self.dt;
        let t = self.pair_temperature(i, j);
        let law = if t == self.temperature {
            *default_law
        } else {
            self.law_at(t)?
        };
        let kin = contact_kinematics(&self.particles[i], &self.particles[j], dt)
            .map_err(|_| numerical(pair, "coincident centres"))?;

        let mut bond = self.bonds.get(pair).cloned();
        let bonded = bond.as_ref().is_some_and(Bond::is_active);
        let mut contact = None;
        let mut loads = ContactLoads::default();
        if kin.overlap > 0.0 {
            let mut state = lookup(&self.contacts, pair)
                .cloned()
                .unwrap_or_else(|| ContactState::new(pair, kin.normal));
            loads = update_contact(&mut state, &kin, &law, &self.material.friction, bonded, dt)?;
            contact = Some(state);
        }

        let mut event = None;
        let mut drop_bond = false;
        let mut bond_loads: Option<BondLoads> = None;
        match bond.as_mut() {
            Some(b) if b.is_active() => {
                if loads.f_n > 0.0 {
                    *b = grow_bond(b, loads.f_n, kin.overlap);
                }
                let step = BondStep {
                    normal: kin.normal,
                    distance: kin.distance,
                    v_rel: kin.v_rel,
                    omega_rel: kin.omega_rel,
                    contact_force: loads.f_n,
                    dt,
                    reduced_mass: reduced(&self.particles[i], &self.particles[j], |p| p.mass),
                    reduced_inertia: reduced(&self.particles[i], &self.particles[j], |p| p.inertia),
                };
                let (bl, ev) = evaluate_bond(b, &step)?;
                match ev {
                    BondEvent::None => bond_loads = Some(bl),
                    BondEvent::Failed(mode) => {
                        bond_loads = Some(bl);
                        event = Some(PairEvent::BondFailed(pair, mode));
                    }
                    BondEvent::Broke => event = Some(PairEvent::BondBroken(pair)),
                }
            }
            Some(_) => drop_bond = kin.overlap <= 0.0,
            None => {
                if self.material.sintering && loads.f_n > 0.0 {
                    bond = Some(create_bond(
                        pair,
                        &self.bond_geometry(i, j, &kin),
                        self.time,
                        &law.normal,
                        &self.material.fracture,
                        self.material.bond_modulus_scale,
                    )?);
                    event = Some(PairEvent::BondCreated(pair));
                }
            }
        }

        let force = assemble_pair(&loads, bond_loads.as_ref(), &kin);
        if !force.is_finite() {
            return Err(numerical(pair, "non-finite pair force"));
        }
        Ok(PairResult {
            pair,
            force,
            contact,
            bond,
            drop_bond,
            event,
        })
    }

    fn evaluate_wall(
        &self,
        i: usize,
        w: usize,
        default_law: &ContactLaw,
    ) -> Result<Option<(ContactState, PairForce)>> {
        let p = &self.particles[i];
        let kin = wall_kinematics(p, &self.walls[w], self.dt);
        if kin.overlap <= 0.0 {
            return Ok(None);
        }
        let t = self.particle_temperature(i);
        let law = if t == self.temperature {
            *default_law
        } else {
            self.law_at(t)?
        };
        let key = (i, w);
        let mut state = lookup(&self.wall_contacts, key)
            .cloned()
            .unwrap_or_else(|| ContactState::new(key, kin.normal));
        let loads = update_contact(&mut state, &kin, &law, &self.material.friction, false, self.dt)?;
        let force = assemble_pair(&loads, None, &kin);
        if !force.is_finite() {
            return Err(Error::NumericalFailure {
                a: format!("particle {i}"),
                b: format!("wall {w}"),
                detail: "non-finite contact force".into(),
            });
        }
        Ok(Some((state, force)))
    }

    /// Advances the scene by one step.
    pub fn step(&mut self) -> Result<StepReport> {
        let dt = self.dt;
        if self.step_count == 0 {
            for p in self.particles.iter_mut().filter(|p| p.motion == Motion::Dynamic) {
                p.acceleration = p.external_force / p.mass + self.gravity;
            }
        }
        if self.particles.len() >= self.parallel_threshold {
            self.particles = self.particles.par_iter().map(|p| gear_predict(p, dt)).collect();
        } else {
            self.particles = self.particles.iter().map(|p| gear_predict(p, dt)).collect();
        }

        let pairs = neighbor_search(&self.particles, &self.bonds, self.skin_fraction);
        let law = self.law_at(self.temperature)?;
        let results: Vec<PairResult> = if pairs.len() >= self.parallel_threshold {
            pairs
                .par_iter()
                .map(|&pair| self.evaluate_pair(pair, &law))
                .collect::<Result<_>>()?
        } else {
            pairs
                .iter()
                .map(|&pair| self.evaluate_pair(pair, &law))
                .collect::<Result<_>>()?
        };

        let n = self.particles.len();
        let mut force = vec![Vec3::zeros(); n];
        let mut torque = vec![Vec3::zeros(); n];
        let mut contacts = Vec::with_capacity(self.contacts.len());
        let mut events = Vec::new();
        for r in results {
            let (i, j) = r.pair;
            force[i] += r.force.force_i;
            force[j] += r.force.force_j();
            torque[i] += r.force.torque_i;
            torque[j] += r.force.torque_j;
            if let Some(c) = r.contact {
                contacts.push(c);
            }
            if r.drop_bond {
                self.bonds.remove(r.pair);
            } else if let Some(b) = r.bond {
                match self.bonds.get_mut(r.pair) {
                    Some(slot) => *slot = b,
                    None => self.bonds.insert(b)?,
                }
            }
            events.extend(r.event);
        }
        self.contacts = contacts;

        let mut wall_contacts = Vec::new();
        for i in 0..n {
            for w in 0..self.walls.len() {
                if let Some((state, f)) = self.evaluate_wall(i, w, &law)? {
                    force[i] += f.force_i;
                    torque[i] += f.torque_i;
                    wall_contacts.push(state);
                }
            }
        }
        self.wall_contacts = wall_contacts;

        let g = self.gravity;
        let correct = |(p, (f, t)): (&Particle, (&Vec3, &Vec3))| {
            let q = gear_correct(p, &(f + p.external_force), &g, dt);
            let q = gear_correct_rotation(&q, t, dt);
            update_orientation(&q, dt)
        };
        self.particles = if n >= self.parallel_threshold {
            self.particles
                .par_iter()
                .zip(force.par_iter().zip(torque.par_iter()))
                .map(correct)
                .collect()
        } else {
            self.particles
                .iter()
                .zip(force.iter().zip(torque.iter()))
                .map(correct)
                .collect()
        };

        self.time += dt;
        self.step_count += 1;
        Ok(StepReport {
            time: self.time,
            candidate_pairs: pairs.len(),
            contacts: self.contacts.len() + self.wall_contacts.len(),
            events,
        })
    }

    /// Runs `steps` steps and returns every event seen.
    pub fn run(&mut self, steps: usize) -> Result<Vec<PairEvent>> {
        let mut events = Vec::new();
        for _ in 0..steps {
            events.extend(self.step()?.events);
        }
        Ok(events)
    }

    pub fn active_bonds(&self) -> usize {
        self.bonds.count(BondPhase::Intact) + self.bonds.count(BondPhase::Softening)
    }
}

/// Stability estimate `0.1·sqrt(m_min/k_i)` for the scene temperature.
pub fn critical_dt(scene: &Scene) -> Result<f64> {
    let k_i = scene.law_at(scene.temperature)?.normal.k_i;
    let any_dynamic = scene.particles.iter().any(|p| p.motion == Motion::Dynamic);
    let m_min = scene
        .particles
        .iter()
        .filter(|p| !any_dynamic || p.motion == Motion::Dynamic)
        .map(|p| p.mass)
        .fold(f64::INFINITY, f64::min);
    if !m_min.is_finite() {
        return Err(Error::invalid("critical time step needs at least one particle"));
    }
    Ok(0.1 * (m_min / k_i).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{Material, MaterialModel, CREEP_FIT_TABLE};
    use approx::assert_relative_eq;

    fn material() -> Material {
        Material::new(MaterialModel::fixed(CREEP_FIT_TABLE[0].params(10.0)))
    }

    #[test]
    fn empty_scene_only_advances_time() {
        let mut s = Scene::new(material(), 272.15, 1e-4);
        s.step().unwrap();
        s.step().unwrap();
        assert_relative_eq!(s.time, 2e-4, max_relative = 1e-15);
        assert!(s.particles.is_empty());
    }

    #[test]
    fn lone_particle_falls_freely() {
        let mut s = Scene::new(material(), 272.15, 1e-4);
        s.add_particle(Particle::sphere(0, 1e-3, 917.0, Vec3::zeros()).unwrap());
        s.run(1000).unwrap();
        assert_relative_eq!(s.particles[0].position.z, -0.5 * 9.81 * 0.01, max_relative = 1e-10);
        assert_relative_eq!(s.particles[0].velocity.z, -9.81 * 0.1, max_relative = 1e-10);
    }

    #[test]
    fn critical_dt_arithmetic() {
        let p = crate::rheology::BurgersParams::new(9e3, 1.0, 1.0, 1.0, 0.0, 272.15).unwrap();
        let mut s = Scene::new(Material::new(MaterialModel::fixed(p)), 272.15, 1e-6);
        let mut a = Particle::sphere(0, 1e-3, 917.0, Vec3::zeros()).unwrap();
        a.mass = 1e-6;
        s.add_particle(a.clone());
        assert_relative_eq!(critical_dt(&s).unwrap(), 0.1 * (1e-6f64 / 9e3).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(critical_dt(&s).unwrap(), 1.054e-6, max_relative = 1e-3);
        a.mass = 0.5e-6;
        s.add_particle(a);
        assert_relative_eq!(
            critical_dt(&s).unwrap(),
            0.1 * (1e-6f64 / 9e3).sqrt() / 2f64.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn impact_conserves_momentum() {
        let mut s = Scene::new(material(), 272.15, 2e-7);
        s.gravity = Vec3::zeros();
        s.material.sintering = false;
        s.add_particle(
            Particle::sphere(0, 1e-3, 917.0, Vec3::zeros())
                .unwrap()
                .with_velocity(Vec3::new(0.5, 0.05, 0.0)),
        );
        s.add_particle(Particle::sphere(1, 1.5e-3, 917.0, Vec3::new(2.52e-3, 0.3e-3, 0.0)).unwrap());
        let p0 = s.momentum();
        let mut touched = false;
        for _ in 0..20_000 {
            let before = s.momentum();
            s.step().unwrap();
            touched |= !s.contacts.is_empty();
            let after = s.momentum();
            assert!((after - before).norm() <= 1e-12 * p0.norm());
        }
        assert!(touched);
    }
}
