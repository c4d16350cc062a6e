//! Granular-phase interaction: Burgers normal contact, Coulomb friction with
//! static and kinetic regimes, rolling resistance, and the assembly of
//! contact and bond loads into pair forces.

use serde::{Deserialize, Serialize};

use crate::bond::{frame_rotation, BondLoads};
use crate::dynamics::{Particle, Wall};
use crate::error::{ensure_finite, Error, Result};
use crate::rheology::{BurgersCoefficients, BurgersParams, BurgersState, VectorBurgersState};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrictionConfig {
    pub mu_s: f64,
    pub mu_k: f64,
    /// Rolling plastic-moment coefficient.
    pub mu_r: f64,
    /// Rolling viscous damping (N·m·s).
    pub c_r: f64,
    /// A sliding contact sticks again only below this slip speed (m/s).
    pub stick_speed: f64,
}

impl Default for FrictionConfig {
    fn default() -> Self {
        FrictionConfig {
            mu_s: 0.3,
            mu_k: 0.27,
            mu_r: 0.05,
            c_r: 0.0,
            stick_speed: 1e-6,
        }
    }
}

impl FrictionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu_s", self.mu_s),
            ("mu_k", self.mu_k),
            ("mu_r", self.mu_r),
            ("c_r", self.c_r),
            ("stick_speed", self.stick_speed),
        ] {
            ensure_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::invalid(format!("friction: {name} must be non-negative")));
            }
        }
        if self.mu_k > self.mu_s {
            return Err(Error::invalid("friction: mu_k must not exceed mu_s"));
        }
        Ok(())
    }
}

/// Memory of one contact episode; dropped when the surfaces separate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactState {
    pub pair: (usize, usize),
    pub normal: BurgersState,
    pub tangential: VectorBurgersState,
    /// Accumulated tangential slip (m).
    pub tangential_accum: Vec3,
    pub rolling_angle: Vec3,
    pub sliding: bool,
    pub age: f64,
    pub normal_prev: Vec3,
    /// Loads of the last evaluation.
    pub force_n: f64,
    pub force_t: Vec3,
}

impl ContactState {
    pub fn new(pair: (usize, usize), normal: Vec3) -> Self {
        ContactState {
            pair,
            normal: BurgersState::default(),
            tangential: VectorBurgersState::default(),
            tangential_accum: Vec3::zeros(),
            rolling_angle: Vec3::zeros(),
            sliding: false,
            age: 0.0,
            normal_prev: normal,
            force_n: 0.0,
            force_t: Vec3::zeros(),
        }
    }

    /// Rotates the stored tangential quantities into the frame of `n`.
    pub fn rotate_frame(&mut self, n: &Vec3) {
        let q = frame_rotation(&self.normal_prev, n);
        self.tangential.u_d = q * self.tangential.u_d;
        self.tangential.f_prev = q * self.tangential.f_prev;
        self.tangential_accum = q * self.tangential_accum;
        self.rolling_angle = q * self.rolling_angle;
        self.force_t = q * self.force_t;
        self.normal_prev = *n;
    }

    fn clear_tangential(&mut self) {
        self.tangential = VectorBurgersState::default();
        self.tangential_accum = Vec3::zeros();
        self.rolling_angle = Vec3::zeros();
        self.force_t = Vec3::zeros();
        self.sliding = false;
    }
}

/// The parts of a body that the contact laws see.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactBody {
    pub position: Vec3,
    pub velocity: Vec3,
    pub angular_velocity: Vec3,
    pub radius: f64,
}

impl From<&Particle> for ContactBody {
    fn from(p: &Particle) -> Self {
        ContactBody {
            position: p.position,
            velocity: p.velocity,
            angular_velocity: p.angular_velocity,
            radius: p.radius,
        }
    }
}

/// Relative motion of a pair over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairKinematics {
    /// Unit normal from `i` to `j`.
    pub normal: Vec3,
    pub distance: f64,
    /// Overlap, positive when the surfaces interpenetrate (m).
    pub overlap: f64,
    pub reduced_radius: f64,
    pub corrected_radius: f64,
    /// Tangential increment from the translational relative velocity (m).
    pub u_t_inc: Vec3,
    /// Tangential increment of the contact points, rotation included (m).
    pub slip_inc: Vec3,
    /// Rolling and twisting relative displacements over the step (m).
    pub v_rt: Vec3,
    pub v_rn: Vec3,
    /// `v_i - v_j` and `omega_i - omega_j`.
    pub v_rel: Vec3,
    pub omega_rel: Vec3,
    /// Distances from each centre to the contact point (m).
    pub lever_i: f64,
    pub lever_j: f64,
}

fn kinematics(
    i: &ContactBody,
    normal: Vec3,
    distance: f64,
    overlap: f64,
    j: &ContactBody,
    reduced_radius: f64,
    corrected_radius: f64,
    dt: f64,
) -> PairKinematics {
    let n = normal;
    let v_rel = i.velocity - j.velocity;
    let omega_rel = i.angular_velocity - j.angular_velocity;
    let u_t_inc = (v_rel - n * n.dot(&v_rel)) * dt;
    let contact_v = v_rel + (i.angular_velocity * i.radius + j.angular_velocity * j.radius).cross(&n);
    let slip_inc = (contact_v - n * n.dot(&contact_v)) * dt;
    PairKinematics {
        normal: n,
        distance,
        overlap,
        reduced_radius,
        corrected_radius,
        u_t_inc,
        slip_inc,
        v_rt: -(n.cross(&i.angular_velocity) - n.cross(&j.angular_velocity)) * (corrected_radius * dt),
        v_rn: n * (reduced_radius * dt * n.dot(&omega_rel)),
        v_rel,
        omega_rel,
        lever_i: i.radius,
        lever_j: j.radius,
    }
}

/// Overlap, normal and relative motion of two spheres.
pub fn contact_kinematics(p_i: &Particle, p_j: &Particle, dt: f64) -> Result<PairKinematics> {
    body_kinematics(&p_i.into(), &p_j.into(), dt)
}

pub fn body_kinematics(i: &ContactBody, j: &ContactBody, dt: f64) -> Result<PairKinematics> {
    let d = j.position - i.position;
    let dist = d.norm();
    if !(dist > 0.0) {
        return Err(Error::invalid("coincident particle centres"));
    }
    let overlap = i.radius + j.radius - dist;
    let r_ij = i.radius * j.radius / (i.radius + j.radius);
    let r_corr = (i.radius - overlap) * (j.radius - overlap) / (i.radius + j.radius - overlap);
    Ok(kinematics(i, d / dist, dist, overlap, j, r_ij, r_corr, dt))
}

/// Sphere against a static half-space; the wall plays the part of `j` with
/// reduced radius `r_i`.
pub fn wall_kinematics(p: &Particle, wall: &Wall, dt: f64) -> PairKinematics {
    let body = ContactBody::from(p);
    let h = (p.position - wall.point).dot(&wall.normal);
    let overlap = p.radius - h;
    let plane = ContactBody {
        position: p.position - wall.normal * h,
        velocity: Vec3::zeros(),
        angular_velocity: Vec3::zeros(),
        radius: 0.0,
    };
    let r_corr = p.radius - overlap;
    kinematics(&body, -wall.normal, h, overlap, &plane, p.radius, r_corr, dt)
}

/// Compressive Burgers force at overlap `u_n`; the contact cannot pull, so a
/// tensile trial force is cut to zero and the Kelvin branch relaxes freely.
pub fn normal_force(
    state: &BurgersState,
    params: &BurgersParams,
    u_n: f64,
    dt: f64,
) -> Result<(f64, BurgersState)> {
    ensure_finite("overlap", u_n)?;
    let k = BurgersCoefficients::new(params, dt)?;
    let f = k.force(u_n - state.u_prev, state.u_d, state.f_prev);
    let f = f.max(0.0);
    Ok((
        f,
        BurgersState {
            u_d: k.delayed(state.u_d, f, state.f_prev),
            f_prev: f,
            u_prev: u_n,
        },
    ))
}

/// Coulomb cap on a tangential trial force.
pub fn friction_force(f_t_trial: &Vec3, f_n: f64, cfg: &FrictionConfig) -> (Vec3, bool) {
    let mag = f_t_trial.norm();
    if mag < cfg.mu_s * f_n {
        (*f_t_trial, false)
    } else if mag > 0.0 {
        (f_t_trial * (cfg.mu_k * f_n.max(0.0) / mag), true)
    } else {
        (Vec3::zeros(), true)
    }
}

fn kinetic(f_t_trial: &Vec3, f_n: f64, cfg: &FrictionConfig) -> Vec3 {
    let mag = f_t_trial.norm();
    if mag > 0.0 {
        f_t_trial * (cfg.mu_k * f_n.max(0.0) / mag).min(1.0)
    } else {
        Vec3::zeros()
    }
}

/// Elastic-plastic rolling moment plus viscous damping, and the clamp
/// factor applied to the elastic part.
pub fn rolling_resistance(
    theta_r: &Vec3,
    theta_dot: &Vec3,
    k_t: f64,
    r_ij: f64,
    f_n: f64,
    cfg: &FrictionConfig,
) -> (Vec3, f64) {
    let k_r = k_t * r_ij * r_ij;
    let elastic = k_r * theta_r.norm();
    let limit = cfg.mu_r * r_ij * f_n.max(0.0);
    let gamma = if elastic <= limit {
        1.0
    } else {
        limit / elastic
    };
    (-(theta_r * (k_r * gamma)) - theta_dot * cfg.c_r, gamma)
}

/// Contact contribution to a pair, in the local sign convention: `f_n`
/// pushes the particles apart, `f_t` and `rolling` act against the motion of
/// `i` relative to `j`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ContactLoads {
    pub f_n: f64,
    pub f_t: Vec3,
    /// Rolling moment on `i`.
    pub rolling: Vec3,
}

/// Force on `i` and torques on both particles; `j` receives `-force_i`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairForce {
    pub force_i: Vec3,
    pub torque_i: Vec3,
    pub torque_j: Vec3,
}

impl PairForce {
    pub fn force_j(&self) -> Vec3 {
        -self.force_i
    }

    pub fn is_finite(&self) -> bool {
        self.force_i
            .iter()
            .chain(self.torque_i.iter())
            .chain(self.torque_j.iter())
            .all(|v| v.is_finite())
    }
}

/// Combines contact and bond loads with the bonded indicator: the normal
/// force is the sum, tangential force and torques come from the bond when
/// one is present and from the contact otherwise.
pub fn assemble_pair(
    contact: &ContactLoads,
    bond: Option<&BondLoads>,
    kin: &PairKinematics,
) -> PairForce {
    let n = kin.normal;
    match bond {
        Some(b) => {
            let torque = b.t_phi + b.t_theta;
            PairForce {
                force_i: n * (b.f_n - contact.f_n) - b.f_t,
                torque_i: -torque,
                torque_j: torque,
            }
        }
        None => {
            let arm = n.cross(&contact.f_t);
            PairForce {
                force_i: -n * contact.f_n - contact.f_t,
                torque_i: -arm * kin.lever_i + contact.rolling,
                torque_j: -arm * kin.lever_j - contact.rolling,
            }
        }
    }
}

/// Burgers constants a contact needs at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactLaw {
    pub normal: BurgersParams,
    pub transverse: BurgersParams,
}

/// Updates a live contact for one step and returns its loads. With
/// `bonded` set only the normal force is evaluated; the tangential memory is
/// reset since the bond carries shear.
pub fn update_contact(
    state: &mut ContactState,
    kin: &PairKinematics,
    law: &ContactLaw,
    friction: &FrictionConfig,
    bonded: bool,
    dt: f64,
) -> Result<ContactLoads> {
    state.rotate_frame(&kin.normal);
    let (f_n, normal) = normal_force(&state.normal, &law.normal, kin.overlap.max(0.0), dt)?;
    state.normal = normal;
    state.force_n = f_n;
    state.age += dt;
    if bonded {
        state.clear_tangential();
        return Ok(ContactLoads {
            f_n,
            ..Default::default()
        });
    }

    // drop the normal component the rotated memory may have picked up
    let n = kin.normal;
    let tangent = |v: Vec3| v - n * n.dot(&v);
    state.tangential.u_d = tangent(state.tangential.u_d);
    state.tangential.f_prev = tangent(state.tangential.f_prev);
    state.rolling_angle = tangent(state.rolling_angle);

    let k = BurgersCoefficients::new(&law.transverse, dt)?;
    let trial = k.force_vec(&kin.slip_inc, &state.tangential);
    let slip_speed = kin.slip_inc.norm() / dt;
    let (f_t, sliding) = if state.sliding && slip_speed >= friction.stick_speed {
        (kinetic(&trial, f_n, friction), true)
    } else {
        friction_force(&trial, f_n, friction)
    };
    state.tangential.u_d = k.delayed_vec(&state.tangential.u_d, &f_t, &state.tangential.f_prev);
    state.tangential.f_prev = f_t;
    state.tangential_accum += kin.slip_inc;
    state.sliding = sliding;
    state.force_t = f_t;

    let theta_dot = kin.omega_rel - n * n.dot(&kin.omega_rel);
    state.rolling_angle += theta_dot * dt;
    let (rolling, gamma) = rolling_resistance(
        &state.rolling_angle,
        &theta_dot,
        law.transverse.k_i,
        kin.reduced_radius,
        f_n,
        friction,
    );
    state.rolling_angle *= gamma;

    Ok(ContactLoads {
        f_n,
        f_t,
        rolling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::CREEP_FIT_TABLE;
    use crate::rheology::transverse_params;
    use approx::assert_relative_eq;

    fn body(x: Vec3, r: f64) -> ContactBody {
        ContactBody {
            position: x,
            velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            radius: r,
        }
    }

    #[test]
    fn touching_spheres_have_zero_overlap() {
        let k = body_kinematics(&body(Vec3::zeros(), 1e-3), &body(Vec3::x() * 2e-3, 1e-3), 1e-6).unwrap();
        assert_eq!(k.overlap, 0.0);
        assert_eq!(k.normal, Vec3::x());
    }

    #[test]
    fn overlap_and_reduced_radius() {
        let k = body_kinematics(&body(Vec3::zeros(), 1e-3), &body(Vec3::y() * 1.9e-3, 1e-3), 1e-6).unwrap();
        assert_relative_eq!(k.overlap, 1e-4, max_relative = 1e-12);
        assert_relative_eq!(k.reduced_radius, 5e-4, max_relative = 1e-15);
        assert_relative_eq!(k.corrected_radius, 0.9e-3 * 0.9e-3 / 1.9e-3, max_relative = 1e-12);
    }

    #[test]
    fn coincident_centres_rejected() {
        let b = body(Vec3::zeros(), 1e-3);
        assert!(body_kinematics(&b, &b, 1e-6).is_err());
    }

    #[test]
    fn rigid_corotation_has_no_relative_motion() {
        let w = Vec3::new(0.3, -2.0, 1.0);
        let v = Vec3::new(0.1, 0.2, -0.3);
        let mut a = body(Vec3::zeros(), 1e-3);
        let mut b = body(Vec3::new(1.5e-3, 0.8e-3, 0.0), 1e-3);
        a.velocity = v;
        b.velocity = v;
        a.angular_velocity = w;
        b.angular_velocity = w;
        let k = body_kinematics(&a, &b, 1e-5).unwrap();
        assert_eq!(k.u_t_inc, Vec3::zeros());
        assert_eq!(k.v_rt, Vec3::zeros());
        assert_eq!(k.v_rn, Vec3::zeros());
    }

    #[test]
    fn zero_overlap_gives_zero_force() {
        let p = CREEP_FIT_TABLE[0].params(10.0);
        let mut s = BurgersState::default();
        for _ in 0..100 {
            let (f, next) = normal_force(&s, &p, 0.0, 1e-5).unwrap();
            assert_eq!(f, 0.0);
            s = next;
        }
    }

    #[test]
    fn held_overlap_relaxes_like_the_analytic_solution() {
        // constant displacement u0 applied at t = 0 on a Burgers element:
        // f(t) = u0·(A1 e^{s1 t} + A2 e^{s2 t}) from the characteristic roots
        let p = CREEP_FIT_TABLE[2].params(10.0);
        let (ki, kd, ci, cd) = (p.k_i, p.k_d, p.c_i, p.c_d);
        let p1 = ci / ki + ci / kd + cd / kd;
        let p2 = ci * cd / (ki * kd);
        let disc = (p1 * p1 - 4.0 * p2).sqrt();
        let (s1, s2) = ((-p1 + disc) / (2.0 * p2), (-p1 - disc) / (2.0 * p2));
        // f(0) = k_i u0, f'(0) = -k_i u0 (k_i/c_i + k_i/c_d)
        let u0 = 1e-5;
        let f0 = ki * u0;
        let df0 = -ki * u0 * (ki / ci + ki / cd);
        let a2 = (df0 - s1 * f0) / (s2 - s1);
        let a1 = f0 - a2;
        let exact = |t: f64| a1 * (s1 * t).exp() + a2 * (s2 * t).exp();

        let dt = 1e-5;
        let mut s = BurgersState {
            u_d: 0.0,
            f_prev: f0,
            u_prev: u0,
        };
        let mut prev = f0;
        for n in 1..=100_000 {
            let (f, next) = normal_force(&s, &p, u0, dt).unwrap();
            assert!(f <= prev);
            prev = f;
            s = next;
            if n % 25_000 == 0 {
                let t = n as f64 * dt;
                assert_relative_eq!(f, exact(t), max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn friction_rules() {
        let cfg = FrictionConfig {
            mu_s: 0.5,
            mu_k: 0.45,
            ..Default::default()
        };
        let (f, s) = friction_force(&(Vec3::x() * 0.3), 0.0, &cfg);
        assert_eq!(f, Vec3::zeros());
        assert!(s);
        let (f, s) = friction_force(&(Vec3::x() * 0.4), 1.0, &cfg);
        assert_eq!(f, Vec3::x() * 0.4);
        assert!(!s);
        let (f, s) = friction_force(&(Vec3::y() * 0.6), 1.0, &cfg);
        assert_relative_eq!(f, Vec3::y() * 0.45, epsilon = 1e-15);
        assert!(s);
    }

    #[test]
    fn rolling_rules() {
        let cfg = FrictionConfig::default();
        let z = Vec3::zeros();
        assert_eq!(rolling_resistance(&z, &z, 1e3, 1e-3, 1.0, &cfg).0, z);
        let k_r = 1e3 * 1e-6;
        let plastic = cfg.mu_r * 1e-3 * 1.0;
        let theta = Vec3::x() * (2.0 * plastic / k_r);
        let (m, gamma) = rolling_resistance(&theta, &z, 1e3, 1e-3, 1.0, &cfg);
        assert_relative_eq!(gamma, 0.5, max_relative = 1e-12);
        assert_relative_eq!(m.norm(), plastic, max_relative = 1e-12);
    }

    #[test]
    fn unbonded_assembly_is_contact_only() {
        let kin = body_kinematics(&body(Vec3::zeros(), 1e-3), &body(Vec3::x() * 2.5e-3, 1e-3), 1e-6).unwrap();
        let out = assemble_pair(&ContactLoads::default(), None, &kin);
        assert_eq!(out, PairForce::default());
    }

    #[test]
    fn bonded_tension_is_bond_only() {
        let kin = body_kinematics(&body(Vec3::zeros(), 1e-3), &body(Vec3::x() * 2.1e-3, 1e-3), 1e-6).unwrap();
        let bond = BondLoads {
            f_n: 0.2,
            ..Default::default()
        };
        let out = assemble_pair(&ContactLoads::default(), Some(&bond), &kin);
        assert_eq!(out.force_i, Vec3::x() * 0.2);
        assert_eq!(out.force_j(), -Vec3::x() * 0.2);
    }

    #[test]
    fn transverse_stiffness_feeds_rolling() {
        let p = CREEP_FIT_TABLE[0].params(10.0);
        let law = ContactLaw {
            normal: p,
            transverse: transverse_params(&p, 0.3).unwrap(),
        };
        assert_relative_eq!(law.transverse.k_i, 9e4 / 2.6, max_relative = 1e-14);
    }
}
