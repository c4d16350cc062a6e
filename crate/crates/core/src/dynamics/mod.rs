//! Rigid spherical particles, their time integration and the simulation
//! loop that couples them through contacts and bonds.

mod integrator;
mod neighbor;
mod scene;

pub use integrator::{
    gear_correct, gear_correct_rotation, gear_predict, orientation_difference,
    relative_rotation, update_orientation,
};
pub use neighbor::{brute_force_pairs, neighbor_search, DEFAULT_SKIN_FRACTION};
pub use scene::{critical_dt, PairEvent, Scene, StepReport};

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::Vec3;

/// How a particle moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    /// Integrated from the forces acting on it.
    #[default]
    Dynamic,
    /// Never moves.
    Fixed,
    /// Moves with its prescribed velocity regardless of forces.
    Kinematic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: usize,
    pub radius: f64,
    pub mass: f64,
    pub inertia: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub jerk: Vec3,
    pub orientation: UnitQuaternion<f64>,
    pub angular_velocity: Vec3,
    pub angular_acceleration: Vec3,
    pub angular_jerk: Vec3,
    /// Overrides the scene temperature (K).
    pub temperature: Option<f64>,
    pub motion: Motion,
    /// Constant applied force (N), e.g. a sintering load.
    pub external_force: Vec3,
}

impl Particle {
    /// Solid sphere at rest.
    pub fn sphere(id: usize, radius: f64, density: f64, position: Vec3) -> Result<Self> {
        let mass = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3) * density;
        let p = Particle {
            id,
            radius,
            mass,
            inertia: 0.4 * mass * radius * radius,
            position,
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            jerk: Vec3::zeros(),
            orientation: UnitQuaternion::identity(),
            angular_velocity: Vec3::zeros(),
            angular_acceleration: Vec3::zeros(),
            angular_jerk: Vec3::zeros(),
            temperature: None,
            motion: Motion::Dynamic,
            external_force: Vec3::zeros(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_motion(mut self, motion: Motion) -> Self {
        self.motion = motion;
        self
    }

    pub fn with_velocity(mut self, v: Vec3) -> Self {
        self.velocity = v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let name = format!("particle {}", self.id);
        for v in [self.radius, self.mass, self.inertia] {
            ensure_finite(&name, v)?;
            if v <= 0.0 {
                return Err(Error::invalid(format!(
                    "{name}: radius, mass and inertia must be positive"
                )));
            }
        }
        for v in self
            .position
            .iter()
            .chain(self.velocity.iter())
            .chain(self.angular_velocity.iter())
            .chain(self.external_force.iter())
        {
            ensure_finite(&name, *v)?;
        }
        Ok(())
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.velocity.norm_squared()
            + 0.5 * self.inertia * self.angular_velocity.norm_squared()
    }

    pub fn momentum(&self) -> Vec3 {
        self.velocity * self.mass
    }
}

/// Rigid static half-space bounded by a plane through `point`; `normal`
/// points into the region where particles live.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Wall {
    pub fn new(point: Vec3, normal: Vec3) -> Result<Self> {
        let len = normal.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::invalid("wall normal must be a non-zero vector"));
        }
        Ok(Wall {
            point,
            normal: normal / len,
        })
    }

    /// Horizontal floor at height `z`.
    pub fn floor(z: f64) -> Self {
        Wall {
            point: Vec3::new(0.0, 0.0, z),
            normal: Vec3::z(),
        }
    }

    /// Signed distance from the plane to `x`.
    pub fn distance(&self, x: &Vec3) -> f64 {
        (x - self.point).dot(&self.normal)
    }
}
