//! Sintered bonds between particle pairs, modelled as cylindrical
//! viscoelastic beams that grow under pressure, fail by a tensile or
//! Mohr-Coulomb criterion and then soften exponentially.

use nalgebra::{Unit, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::rheology::BurgersParams;
use crate::Vec3;

/// How the cohesion term of the Mohr-Coulomb line is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CohesionMode {
    /// Cohesion equals the Hall-Petch strength of the pair.
    #[default]
    HallPetch,
    /// Fixed cohesion stress (Pa).
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FractureConfig {
    /// Softening coefficient G_f; `tau / G_f` is the decay length (m).
    pub fracture_energy: f64,
    /// Hall-Petch baseline strength (Pa).
    pub tau_0: f64,
    /// Hall-Petch coefficient (Pa·m^-x).
    pub k_hp: f64,
    pub x_hp: f64,
    /// Static friction coefficient on the Mohr-Coulomb line.
    pub mu_s: f64,
    pub cohesion: CohesionMode,
    /// Tensile strength override (Pa); Hall-Petch strength when absent.
    pub tensile_strength: Option<f64>,
    /// A softening bond breaks once every channel has decayed below this
    /// fraction of its limit load.
    pub broken_fraction: f64,
}

impl Default for FractureConfig {
    fn default() -> Self {
        FractureConfig {
            fracture_energy: 1e11,
            tau_0: 0.6e6,
            k_hp: 2.0e3,
            x_hp: 0.5,
            mu_s: 0.3,
            cohesion: CohesionMode::HallPetch,
            tensile_strength: None,
            broken_fraction: 0.01,
        }
    }
}

impl FractureConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fracture_energy", self.fracture_energy),
            ("tau_0", self.tau_0),
            ("k_hp", self.k_hp),
            ("x_hp", self.x_hp),
            ("mu_s", self.mu_s),
            ("broken_fraction", self.broken_fraction),
        ] {
            ensure_finite(name, v)?;
        }
        if self.tau_0 <= 0.0 || self.fracture_energy <= 0.0 || self.mu_s < 0.0 {
            return Err(Error::invalid(
                "fracture: tau_0 and fracture_energy must be positive, mu_s non-negative",
            ));
        }
        if !(self.broken_fraction > 0.0 && self.broken_fraction < 1.0) {
            return Err(Error::invalid("fracture: broken_fraction must lie in (0, 1)"));
        }
        if let Some(t) = self.tensile_strength {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid("fracture: tensile_strength must be positive"));
            }
        }
        if let CohesionMode::Constant { value } = self.cohesion {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::invalid("fracture: cohesion must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Grain-size dependent strength `tau_0 + k·d^x`.
pub fn hall_petch_strength(cfg: &FractureConfig, d_grain: f64) -> Result<f64> {
    ensure_finite("d_grain", d_grain)?;
    if d_grain <= 0.0 {
        return Err(Error::invalid(format!("grain size must be positive, got {d_grain}")));
    }
    Ok(cfg.tau_0 + cfg.k_hp * d_grain.powf(cfg.x_hp))
}

/// Kelvin moduli of a bond whose indentation is `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondElastic {
    pub youngs: f64,
    pub shear: f64,
    pub viscosity: f64,
}

/// `E = (k_i + k_d)·d`, `G = E/2.6`, `eta = c_i·d`, in the unit scale of `params`.
pub fn bond_elastic_constants(params: &BurgersParams, d: f64) -> Result<BondElastic> {
    ensure_finite("indentation", d)?;
    if d <= 0.0 {
        return Err(Error::invalid(format!("indentation must be positive, got {d}")));
    }
    let youngs = (params.k_i + params.k_d) * d;
    Ok(BondElastic {
        youngs,
        shear: youngs / 2.6,
        viscosity: params.c_i * d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondPhase {
    Intact,
    Softening,
    Broken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    Tensile,
    Shear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureVerdict {
    Intact,
    Failed(FailureMode),
}

/// Displacements (or their rates) of a bond. Twist and bending are axial
/// vectors; twist lies along the bond axis, bending across it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BondKinematics {
    /// Elongation, positive in tension (m).
    pub u_n: f64,
    pub u_t: Vec3,
    pub phi: Vec3,
    pub theta: Vec3,
}

/// Resistance of the bond. Each quantity points along the displacement
/// that produced it; particle `i` receives the negation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BondLoads {
    /// Normal force, positive in tension (N).
    pub f_n: f64,
    pub f_t: Vec3,
    pub t_phi: Vec3,
    pub t_theta: Vec3,
}

impl BondLoads {
    fn rotated(&self, q: &UnitQuaternion<f64>) -> Self {
        BondLoads {
            f_n: self.f_n,
            f_t: q * self.f_t,
            t_phi: q * self.t_phi,
            t_theta: q * self.t_theta,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.f_n.is_finite()
            && self.f_t.iter().all(|v| v.is_finite())
            && self.t_phi.iter().all(|v| v.is_finite())
            && self.t_theta.iter().all(|v| v.is_finite())
    }
}

impl BondKinematics {
    fn rotated(&self, q: &UnitQuaternion<f64>) -> Self {
        BondKinematics {
            u_n: self.u_n,
            u_t: q * self.u_t,
            phi: q * self.phi,
            theta: q * self.theta,
        }
    }
}

/// Values frozen when a failure criterion first trips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SofteningRecord {
    pub mode: FailureMode,
    /// Elongation and displacement/angle magnitudes at onset.
    pub u_nl: f64,
    pub u_tl: f64,
    pub phi_l: f64,
    pub theta_l: f64,
    /// Elastic load magnitudes at onset (normal force keeps its sign).
    pub f_n: f64,
    pub f_t: f64,
    pub t_phi: f64,
    pub t_theta: f64,
    /// Shear strength on the Mohr-Coulomb line at onset (Pa).
    pub tau_s: f64,
    /// Force-equivalent load at onset; see [`Bond::equivalent_load`].
    pub onset_load: f64,
    /// Largest `(u_n, |u_t|, |phi|, |theta|)` reached so far; damage never heals.
    pub reached: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub pair: (usize, usize),
    /// Cross-section (m²) and its radius (m).
    pub area: f64,
    pub radius: f64,
    /// Current centre distance (m).
    pub length: f64,
    /// Centre distance at which the normal channel is unstressed (m).
    pub reference_length: f64,
    pub reduced_radius: f64,
    /// Largest indentation seen while sintering (m).
    pub indentation: f64,
    pub youngs: f64,
    pub shear_modulus: f64,
    pub eta_n: f64,
    pub eta_t: f64,
    /// Young's modulus and viscosity per metre of indentation; growth
    /// rescales the moduli through these.
    pub modulus_per_depth: f64,
    pub viscosity_per_depth: f64,
    pub tau_n: f64,
    /// Cohesion on the Mohr-Coulomb line (Pa).
    pub cohesion: f64,
    pub mu_s: f64,
    pub fracture_energy: f64,
    pub broken_fraction: f64,
    pub f0_b: f64,
    /// Accumulated displacements and angles since creation, global frame.
    pub displacement: BondKinematics,
    /// Loads of the last evaluation, global frame.
    pub stored: BondLoads,
    pub normal_prev: Vec3,
    pub phase: BondPhase,
    pub softening: Option<SofteningRecord>,
    pub created_at: f64,
}

/// Pair geometry at bond creation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondGeometry {
    pub overlap: f64,
    pub reduced_radius: f64,
    pub distance: f64,
    /// Grain size entering the Hall-Petch law (m).
    pub grain_size: f64,
    pub normal: Vec3,
}

/// Creates an intact bond at a compressive contact.
///
/// `modulus_scale` converts `(k_i + k_d)·d` and `c_i·d` into Pa and Pa·s.
pub fn create_bond(
    pair: (usize, usize),
    geom: &BondGeometry,
    now: f64,
    params: &BurgersParams,
    cfg: &FractureConfig,
    modulus_scale: f64,
) -> Result<Bond> {
    ensure_finite("overlap", geom.overlap)?;
    if geom.overlap <= 0.0 {
        return Err(Error::invalid(format!(
            "bond needs a compressive contact, overlap = {}",
            geom.overlap
        )));
    }
    if geom.reduced_radius <= 0.0 || geom.distance <= 0.0 {
        return Err(Error::invalid("bond geometry must have positive radius and length"));
    }
    let n_len = geom.normal.norm();
    if (n_len - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("bond normal must be a unit vector"));
    }
    let strength = hall_petch_strength(cfg, geom.grain_size)?;
    let el = bond_elastic_constants(params, geom.overlap)?;
    let cohesion = match cfg.cohesion {
        CohesionMode::HallPetch => strength,
        CohesionMode::Constant { value } => value,
    };
    let mut bond = Bond {
        pair: (pair.0.min(pair.1), pair.0.max(pair.1)),
        area: 0.0,
        radius: 0.0,
        length: geom.distance,
        reference_length: geom.distance,
        reduced_radius: geom.reduced_radius,
        indentation: 0.0,
        youngs: 0.0,
        shear_modulus: 0.0,
        eta_n: 0.0,
        eta_t: 0.0,
        modulus_per_depth: el.youngs / geom.overlap * modulus_scale,
        viscosity_per_depth: el.viscosity / geom.overlap * modulus_scale,
        tau_n: cfg.tensile_strength.unwrap_or(strength),
        cohesion,
        mu_s: cfg.mu_s,
        fracture_energy: cfg.fracture_energy,
        broken_fraction: cfg.broken_fraction,
        f0_b: params.f0_b,
        displacement: BondKinematics::default(),
        stored: BondLoads::default(),
        normal_prev: geom.normal / n_len,
        phase: BondPhase::Intact,
        softening: None,
        created_at: now,
    };
    bond.set_indentation(geom.overlap);
    Ok(bond)
}

/// Widens an intact bond under compression to `pi·r_ij·u_n`, keeping the
/// largest area reached.
pub fn grow_bond(bond: &Bond, f_n_c: f64, u_n: f64) -> Bond {
    let mut out = bond.clone();
    if bond.phase == BondPhase::Intact
        && f_n_c > 0.0
        && u_n.is_finite()
        && u_n > bond.indentation
    {
        out.set_indentation(u_n);
    }
    out
}

impl Bond {
    fn set_indentation(&mut self, d: f64) {
        self.indentation = d;
        self.area = std::f64::consts::PI * self.reduced_radius * d;
        self.radius = (self.area / std::f64::consts::PI).sqrt();
        self.youngs = self.modulus_per_depth * d;
        self.shear_modulus = self.youngs / 2.6;
        self.eta_n = self.viscosity_per_depth * d;
        self.eta_t = self.eta_n;
    }

    pub fn is_active(&self) -> bool {
        self.phase != BondPhase::Broken
    }

    /// Tensile capacity `tau_n·A_b + f0_b` (N).
    pub fn tensile_capacity(&self) -> f64 {
        self.tau_n * self.area + self.f0_b
    }

    /// Axial stiffness `E·A_b/l_b` (N/m).
    pub fn axial_stiffness(&self) -> f64 {
        self.youngs * self.area / self.length
    }

    /// Sum of all channels in force units, torques converted through their
    /// outer-fibre lever `r_b/4`.
    pub fn equivalent_load(&self, loads: &BondLoads) -> f64 {
        let lever = if self.radius > 0.0 { 4.0 / self.radius } else { 0.0 };
        loads.f_n.abs()
            + loads.f_t.norm()
            + lever * (loads.t_phi.norm() + loads.t_theta.norm())
    }
}

/// Rotation carrying `n_prev` onto `n_new` about their common normal.
pub fn frame_rotation(n_prev: &Vec3, n_new: &Vec3) -> UnitQuaternion<f64> {
    let axis = n_prev.cross(n_new);
    let s = axis.norm();
    if s < 1e-15 {
        return UnitQuaternion::identity();
    }
    let angle = s.atan2(n_prev.dot(n_new));
    UnitQuaternion::from_axis_angle(&Unit::new_unchecked(axis / s), angle)
}

/// Rotates the stored loads and accumulated displacements into the frame
/// of `n_new`.
pub fn rotate_bond_frame(bond: &Bond, n_new: &Vec3) -> Bond {
    let mut out = bond.clone();
    let q = frame_rotation(&bond.normal_prev, n_new);
    out.stored = bond.stored.rotated(&q);
    out.displacement = bond.displacement.rotated(&q);
    out.normal_prev = *n_new;
    out
}

/// Response of [`bond_forces`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BondResponse {
    Active(BondLoads),
    /// The bond no longer carries load.
    Broken,
}

impl BondResponse {
    pub fn loads(&self) -> BondLoads {
        match self {
            BondResponse::Active(l) => *l,
            BondResponse::Broken => BondLoads::default(),
        }
    }
}

/// Kelvin beam response to displacements `u` and their rates `rate`.
pub fn bond_forces(bond: &Bond, u: &BondKinematics, rate: &BondKinematics) -> BondResponse {
    if bond.phase == BondPhase::Broken {
        return BondResponse::Broken;
    }
    let a = bond.area;
    let r4 = std::f64::consts::PI * bond.radius.powi(4);
    let l = bond.length;
    let shear_arm = if bond.radius > 0.0 { a / (2.0 * bond.radius) } else { 0.0 };
    BondResponse::Active(BondLoads {
        f_n: bond.eta_n * a * rate.u_n / l + bond.youngs * a * u.u_n / l,
        f_t: (rate.u_t * bond.eta_t + u.u_t * bond.shear_modulus) * shear_arm,
        t_phi: (rate.phi * bond.eta_t + u.phi * bond.shear_modulus) * (r4 / (2.0 * l)),
        t_theta: (rate.theta * bond.eta_n + u.theta * bond.youngs) * (r4 / (4.0 * l)),
    })
}

/// Ratio of load to capacity; a positive load against zero capacity is
/// infinite.
fn overshoot(load: f64, capacity: f64) -> f64 {
    if capacity > 0.0 {
        load / capacity
    } else if load > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Tensile-bending and Mohr-Coulomb shear-torsion criteria in force form.
///
/// `f_n_c` is the compressive contact force carried alongside the bond. The
/// larger overshoot ratio decides a double trip; ties go to tension.
pub fn check_failure(bond: &Bond, loads: &BondLoads, f_n_c: f64) -> FailureVerdict {
    let lever = if bond.radius > 0.0 { 4.0 / bond.radius } else { 0.0 };
    let tensile = overshoot(
        loads.f_n + lever * loads.t_theta.norm(),
        bond.tensile_capacity(),
    );
    let shear = overshoot(
        loads.f_t.norm() + lever * loads.t_phi.norm(),
        f_n_c.max(0.0) * bond.mu_s + bond.cohesion * bond.area,
    );
    match (tensile >= 1.0, shear >= 1.0) {
        (false, false) => FailureVerdict::Intact,
        (true, false) => FailureVerdict::Failed(FailureMode::Tensile),
        (false, true) => FailureVerdict::Failed(FailureMode::Shear),
        (true, true) if shear > tensile => FailureVerdict::Failed(FailureMode::Shear),
        (true, true) => FailureVerdict::Failed(FailureMode::Tensile),
    }
}

/// Switches an intact bond to softening, freezing the current displacements
/// and `loads` as the limits. Pass the elastic part of the beam response:
/// a failed interface carries no viscous stress.
pub fn begin_softening(
    bond: &mut Bond,
    mode: FailureMode,
    loads: &BondLoads,
    f_n_c: f64,
) -> Result<()> {
    if bond.phase != BondPhase::Intact {
        return Err(Error::BondState(bond.pair.0, bond.pair.1));
    }
    let tau_s = if bond.area > 0.0 {
        f_n_c.max(0.0) * bond.mu_s / bond.area + bond.cohesion
    } else {
        bond.cohesion
    };
    let u = &bond.displacement;
    let limits = [u.u_n, u.u_t.norm(), u.phi.norm(), u.theta.norm()];
    bond.softening = Some(SofteningRecord {
        mode,
        u_nl: limits[0],
        u_tl: limits[1],
        phi_l: limits[2],
        theta_l: limits[3],
        f_n: loads.f_n,
        f_t: loads.f_t.norm(),
        t_phi: loads.t_phi.norm(),
        t_theta: loads.t_theta.norm(),
        tau_s,
        onset_load: bond.equivalent_load(loads),
        reached: limits,
    });
    bond.phase = BondPhase::Softening;
    Ok(())
}

fn decay(rate: f64, excess: f64) -> f64 {
    if rate.is_finite() {
        (-rate * excess.max(0.0)).exp()
    } else {
        0.0
    }
}

fn along(v: &Vec3, fallback: &Vec3, magnitude: f64) -> Vec3 {
    let n = v.norm();
    if n > 0.0 {
        v * (magnitude / n)
    } else {
        let m = fallback.norm();
        if m > 0.0 {
            fallback * (magnitude / m)
        } else {
            Vec3::zeros()
        }
    }
}

/// Post-peak loads of a softening bond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SofteningOutcome {
    pub loads: BondLoads,
    /// The load has fallen below the broken fraction of its onset value.
    pub exhausted: bool,
}

/// Magnitude of one softening channel at displacement `x` (signed for the
/// normal channel, `x >= 0` otherwise) and its damage factor. Past the
/// furthest point reached the load decays exponentially from the limit;
/// inside it the channel unloads along the secant to the origin.
fn channel(limit_load: f64, limit: f64, reached: f64, rate: f64, x: f64) -> (f64, f64) {
    let far = reached.max(limit);
    if x >= far {
        let d = decay(rate, x - limit);
        (limit_load * d, d)
    } else {
        let d = decay(rate, far - limit);
        let secant = if far > 0.0 { x.max(0.0) / far } else { 0.0 };
        (limit_load * d * secant, d)
    }
}

/// Exponentially decaying loads past the elastic limit. Vector channels keep
/// the direction of the current displacement.
pub fn softening_forces(bond: &Bond, u: &BondKinematics) -> Result<SofteningOutcome> {
    let rec = match (bond.phase, bond.softening) {
        (BondPhase::Softening, Some(rec)) => rec,
        _ => return Err(Error::BondState(bond.pair.0, bond.pair.1)),
    };
    let gn = bond.fracture_energy / bond.tau_n;
    let gs = if rec.tau_s > 0.0 {
        bond.fracture_energy / rec.tau_s
    } else {
        f64::INFINITY
    };
    // the normal channel is measured along the sign it failed with
    let sign = if rec.u_nl < 0.0 { -1.0 } else { 1.0 };
    let (f_n, d_n) = channel(rec.f_n.abs(), rec.u_nl * sign, rec.reached[0] * sign, gn, u.u_n * sign);
    let (f_t, d_t) = channel(rec.f_t, rec.u_tl, rec.reached[1], gs, u.u_t.norm());
    let (t_phi, d_phi) = channel(rec.t_phi, rec.phi_l, rec.reached[2], gs * bond.radius, u.phi.norm());
    let (t_theta, d_theta) =
        channel(rec.t_theta, rec.theta_l, rec.reached[3], gn * bond.radius, u.theta.norm());
    let loads = BondLoads {
        f_n: f_n * rec.f_n.signum(),
        f_t: along(&u.u_t, &bond.stored.f_t, f_t),
        t_phi: along(&u.phi, &bond.stored.t_phi, t_phi),
        t_theta: along(&u.theta, &bond.stored.t_theta, t_theta),
    };
    let limit = bond.broken_fraction * (1.0 + 1e-12);
    let exhausted = [
        (rec.f_n, d_n),
        (rec.f_t, d_t),
        (rec.t_phi, d_phi),
        (rec.t_theta, d_theta),
    ]
    .iter()
    .all(|&(load, d)| load == 0.0 || d <= limit);
    Ok(SofteningOutcome { loads, exhausted })
}

/// Records how far a softening bond has been driven, so that damage
/// persists on unloading.
pub fn advance_damage(bond: &mut Bond, u: &BondKinematics) {
    if let Some(rec) = bond.softening.as_mut() {
        let r = &mut rec.reached;
        r[0] = if rec.u_nl < 0.0 { r[0].min(u.u_n) } else { r[0].max(u.u_n) };
        r[1] = r[1].max(u.u_t.norm());
        r[2] = r[2].max(u.phi.norm());
        r[3] = r[3].max(u.theta.norm());
    }
}

/// Relative motion of a bonded pair over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondStep {
    /// Unit normal from `i` to `j`.
    pub normal: Vec3,
    pub distance: f64,
    /// `v_i - v_j`.
    pub v_rel: Vec3,
    /// `omega_i - omega_j`.
    pub omega_rel: Vec3,
    /// Compressive force carried by the contact this step (N).
    pub contact_force: f64,
    pub dt: f64,
    /// Reduced translational mass of the pair; infinite when neither
    /// particle responds to forces.
    pub reduced_mass: f64,
    /// Reduced moment of inertia of the pair.
    pub reduced_inertia: f64,
}

/// Factor bringing a dashpot of coefficient `c` down to the largest value an
/// explicit step of `dt` can resolve on `inertia`: one that halts the relative
/// motion within the step.
fn dashpot_cap(c: f64, inertia: f64, dt: f64) -> f64 {
    if c * dt > inertia {
        inertia / (c * dt)
    } else {
        1.0
    }
}

/// What happened to a bond during [`evaluate_bond`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondEvent {
    None,
    Failed(FailureMode),
    Broke,
}

/// Advances a bond by one step: frame rotation, displacement accumulation,
/// beam response, failure check and softening. Returns the loads to apply.
pub fn evaluate_bond(bond: &mut Bond, step: &BondStep) -> Result<(BondLoads, BondEvent)> {
    if bond.phase == BondPhase::Broken {
        return Ok((BondLoads::default(), BondEvent::None));
    }
    *bond = rotate_bond_frame(bond, &step.normal);
    let n = step.normal;
    let dt = step.dt;
    bond.length = step.distance;

    let v_t = step.v_rel - n * n.dot(&step.v_rel);
    let w_n = n * n.dot(&step.omega_rel);
    let w_t = step.omega_rel - w_n;
    let mut rate = BondKinematics {
        u_n: -n.dot(&step.v_rel),
        u_t: v_t,
        phi: w_n,
        theta: w_t,
    };
    let d = &mut bond.displacement;
    d.u_t += v_t * dt;
    d.phi += w_n * dt;
    d.theta += w_t * dt;
    if step.contact_force > 0.0 && bond.phase == BondPhase::Intact {
        // the contact carries compression; the normal channel rests
        bond.reference_length = step.distance;
        d.u_n = 0.0;
        rate.u_n = 0.0;
    } else {
        d.u_n = step.distance - bond.reference_length;
    }
    let u = bond.displacement;
    let r4 = std::f64::consts::PI * bond.radius.powi(4);
    let shear_arm = if bond.radius > 0.0 { bond.area / (2.0 * bond.radius) } else { 0.0 };
    rate.u_n *= dashpot_cap(bond.eta_n * bond.area / bond.length, step.reduced_mass, dt);
    rate.u_t *= dashpot_cap(bond.eta_t * shear_arm, step.reduced_mass, dt);
    rate.phi *= dashpot_cap(bond.eta_t * r4 / (2.0 * bond.length), step.reduced_inertia, dt);
    rate.theta *= dashpot_cap(bond.eta_n * r4 / (4.0 * bond.length), step.reduced_inertia, dt);

    let (loads, event) = match bond.phase {
        BondPhase::Intact => {
            let loads = bond_forces(bond, &u, &rate).loads();
            match check_failure(bond, &loads, step.contact_force) {
                FailureVerdict::Intact => (loads, BondEvent::None),
                FailureVerdict::Failed(mode) => {
                    let elastic = bond_forces(bond, &u, &BondKinematics::default()).loads();
                    begin_softening(bond, mode, &elastic, step.contact_force)?;
                    (loads, BondEvent::Failed(mode))
                }
            }
        }
        BondPhase::Softening => {
            let out = softening_forces(bond, &u)?;
            advance_damage(bond, &u);
            if out.exhausted {
                bond.phase = BondPhase::Broken;
                bond.stored = BondLoads::default();
                return Ok((BondLoads::default(), BondEvent::Broke));
            }
            (out.loads, BondEvent::None)
        }
        BondPhase::Broken => unreachable!(),
    };
    if !loads.is_finite() {
        return Err(Error::NumericalFailure {
            a: bond.pair.0.to_string(),
            b: bond.pair.1.to_string(),
            detail: "non-finite bond load".into(),
        });
    }
    bond.stored = loads;
    Ok((loads, event))
}

/// Bonds kept sorted by pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BondRegistry {
    bonds: Vec<Bond>,
}

impl BondRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    fn position(&self, pair: (usize, usize)) -> std::result::Result<usize, usize> {
        let key = (pair.0.min(pair.1), pair.0.max(pair.1));
        self.bonds.binary_search_by(|b| b.pair.cmp(&key))
    }

    pub fn insert(&mut self, bond: Bond) -> Result<()> {
        match self.position(bond.pair) {
            Ok(_) => Err(Error::DuplicateBond(bond.pair.0, bond.pair.1)),
            Err(at) => {
                self.bonds.insert(at, bond);
                Ok(())
            }
        }
    }

    pub fn get(&self, pair: (usize, usize)) -> Option<&Bond> {
        self.position(pair).ok().map(|i| &self.bonds[i])
    }

    pub fn get_mut(&mut self, pair: (usize, usize)) -> Option<&mut Bond> {
        self.position(pair).ok().map(move |i| &mut self.bonds[i])
    }

    pub fn contains(&self, pair: (usize, usize)) -> bool {
        self.position(pair).is_ok()
    }

    pub fn remove(&mut self, pair: (usize, usize)) -> Option<Bond> {
        self.position(pair).ok().map(|i| self.bonds.remove(i))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Bond> {
        self.bonds.iter()
    }

    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }

    pub fn count(&self, phase: BondPhase) -> usize {
        self.bonds.iter().filter(|b| b.phase == phase).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::CREEP_FIT_TABLE;
    use approx::assert_relative_eq;

    fn params() -> BurgersParams {
        CREEP_FIT_TABLE[1].params(10.0)
    }

    fn bond_with(u_n: f64) -> Bond {
        let geom = BondGeometry {
            overlap: u_n,
            reduced_radius: 1.5e-3,
            distance: 6e-3 - u_n,
            grain_size: 6e-3,
            normal: Vec3::x(),
        };
        create_bond((0, 1), &geom, 0.0, &params(), &FractureConfig::default(), 1e9).unwrap()
    }

    #[test]
    fn creation_area_matches_contact_formula() {
        let b = bond_with(1e-6);
        assert_relative_eq!(b.area, 4.712388980384690e-9, max_relative = 1e-12);
        assert_relative_eq!(b.radius * b.radius * std::f64::consts::PI, b.area, max_relative = 1e-12);
        assert_eq!(b.f0_b, 0.06535);
        assert_eq!(b.phase, BondPhase::Intact);
        assert_relative_eq!(b.shear_modulus / b.youngs, 1.0 / 2.6, max_relative = 1e-14);
    }

    #[test]
    fn creation_rejects_non_compressive_contact() {
        let geom = BondGeometry {
            overlap: 0.0,
            reduced_radius: 1.5e-3,
            distance: 6e-3,
            grain_size: 6e-3,
            normal: Vec3::x(),
        };
        assert!(create_bond((0, 1), &geom, 0.0, &params(), &FractureConfig::default(), 1.0).is_err());
    }

    #[test]
    fn tiny_bond_carries_only_the_load_independent_part() {
        let b = bond_with(1e-15);
        assert_relative_eq!(b.tensile_capacity(), 0.06535, max_relative = 1e-8);
    }

    #[test]
    fn registry_rejects_duplicates() {
        let mut reg = BondRegistry::new();
        reg.insert(bond_with(1e-6)).unwrap();
        let dup = bond_with(2e-6);
        assert!(matches!(reg.insert(dup), Err(Error::DuplicateBond(0, 1))));
        assert!(reg.contains((1, 0)));
    }

    #[test]
    fn elastic_constants_scale_with_indentation() {
        let row = &CREEP_FIT_TABLE[0];
        let el = bond_elastic_constants(&row.params(1.0), 1e-5).unwrap();
        assert_relative_eq!(el.youngs, (9e3 + 0.30783) * 1e-5, max_relative = 1e-14);
        assert_relative_eq!(el.viscosity, 153.85 * 1e-5, max_relative = 1e-14);
        assert_relative_eq!(el.shear / el.youngs, 1.0 / 2.6, max_relative = 1e-14);
        let tiny = bond_elastic_constants(&row.params(1.0), 1e-300).unwrap();
        assert!(tiny.youngs < 1e-290 && tiny.viscosity < 1e-290);
        assert!(bond_elastic_constants(&row.params(1.0), 0.0).is_err());
    }

    #[test]
    fn growth_keeps_running_maximum() {
        let b = bond_with(1e-6);
        let same = grow_bond(&b, 0.1, 1e-6);
        assert_eq!(same.area, b.area);
        let bigger = grow_bond(&b, 0.1, 3e-6);
        assert_relative_eq!(bigger.area, 3.0 * b.area, max_relative = 1e-12);
        assert_relative_eq!(bigger.youngs, 3.0 * b.youngs, max_relative = 1e-12);
        let unloaded = grow_bond(&bigger, 0.0, 5e-6);
        assert_eq!(unloaded.area, bigger.area);
        let shrunk = grow_bond(&bigger, 0.1, 1e-6);
        assert_eq!(shrunk.area, bigger.area);
    }

    #[test]
    fn zero_kinematics_zero_loads() {
        let b = bond_with(1e-6);
        let z = BondKinematics::default();
        assert_eq!(bond_forces(&b, &z, &z).loads(), BondLoads::default());
    }

    #[test]
    fn static_tension_is_spring_only() {
        let b = bond_with(1e-6);
        let u = BondKinematics {
            u_n: 2e-8,
            ..Default::default()
        };
        let f = bond_forces(&b, &u, &BondKinematics::default()).loads();
        assert_relative_eq!(f.f_n, b.youngs * b.area * 2e-8 / b.length, max_relative = 1e-14);
    }

    #[test]
    fn broken_bond_is_flagged() {
        let mut b = bond_with(1e-6);
        b.phase = BondPhase::Broken;
        let u = BondKinematics {
            u_n: 1e-6,
            ..Default::default()
        };
        let r = bond_forces(&b, &u, &u);
        assert_eq!(r, BondResponse::Broken);
        assert_eq!(r.loads(), BondLoads::default());
    }

    #[test]
    fn failure_boundaries() {
        let b = bond_with(1e-6);
        let mut b0 = b.clone();
        b0.f0_b = 0.0;
        let eps = 1e-9;
        let cap = b0.tau_n * b0.area;
        assert_eq!(check_failure(&b0, &BondLoads::default(), 0.0), FailureVerdict::Intact);
        let pure = |s: f64| BondLoads {
            f_n: cap * s,
            ..Default::default()
        };
        assert_eq!(check_failure(&b0, &pure(1.0 - eps), 0.0), FailureVerdict::Intact);
        assert_eq!(
            check_failure(&b0, &pure(1.0 + eps), 0.0),
            FailureVerdict::Failed(FailureMode::Tensile)
        );
        let combined = |s: f64| BondLoads {
            f_n: 0.5 * cap * s,
            t_theta: Vec3::y() * (b0.tau_n * b0.radius * b0.area / 8.0 * s),
            ..Default::default()
        };
        let lhs = combined(1.0).f_n / b0.area + 4.0 * combined(1.0).t_theta.norm() / (b0.radius * b0.area);
        assert_relative_eq!(lhs, b0.tau_n, max_relative = 1e-12);
        assert_eq!(check_failure(&b0, &combined(1.0 - eps), 0.0), FailureVerdict::Intact);
        assert_eq!(
            check_failure(&b0, &combined(1.0 + eps), 0.0),
            FailureVerdict::Failed(FailureMode::Tensile)
        );
    }

    #[test]
    fn shear_line_rises_with_contact_pressure() {
        let b = bond_with(1e-6);
        let shear_cap = b.cohesion * b.area;
        let loads = BondLoads {
            f_t: Vec3::z() * (shear_cap * 1.5),
            ..Default::default()
        };
        assert_eq!(check_failure(&b, &loads, 0.0), FailureVerdict::Failed(FailureMode::Shear));
        let f_n_c = shear_cap / b.mu_s;
        assert_eq!(check_failure(&b, &loads, f_n_c), FailureVerdict::Intact);
    }

    #[test]
    fn double_trip_takes_larger_overshoot() {
        let mut b = bond_with(1e-6);
        b.f0_b = 0.0;
        let t_cap = b.tau_n * b.area;
        let s_cap = b.cohesion * b.area;
        let loads = BondLoads {
            f_n: 1.1 * t_cap,
            f_t: Vec3::y() * (1.3 * s_cap),
            ..Default::default()
        };
        assert_eq!(check_failure(&b, &loads, 0.0), FailureVerdict::Failed(FailureMode::Shear));
        let tie = BondLoads {
            f_n: 1.2 * t_cap,
            f_t: Vec3::y() * (1.2 * s_cap),
            ..Default::default()
        };
        assert_eq!(check_failure(&b, &tie, 0.0), FailureVerdict::Failed(FailureMode::Tensile));
    }

    fn softening_bond() -> (Bond, BondKinematics) {
        let mut b = bond_with(1e-6);
        b.displacement = BondKinematics {
            u_n: 3e-7,
            ..Default::default()
        };
        let loads = BondLoads {
            f_n: 0.2,
            ..Default::default()
        };
        begin_softening(&mut b, FailureMode::Tensile, &loads, 0.0).unwrap();
        (b, BondKinematics { u_n: 3e-7, ..Default::default() })
    }

    #[test]
    fn softening_is_continuous_and_decays_in_closed_form() {
        let (b, u) = softening_bond();
        let at_peak = softening_forces(&b, &u).unwrap();
        assert_eq!(at_peak.loads.f_n, 0.2);
        assert!(!at_peak.exhausted);
        let far = BondKinematics {
            u_n: 3e-7 + b.tau_n * 100f64.ln() / b.fracture_energy,
            ..Default::default()
        };
        let out = softening_forces(&b, &far).unwrap();
        assert_relative_eq!(out.loads.f_n, 0.002, max_relative = 1e-9);
        assert!(out.exhausted);
    }

    #[test]
    fn softening_unloads_along_secant_and_keeps_damage() {
        let (mut b, _) = softening_bond();
        let half = BondKinematics { u_n: 1.5e-7, ..Default::default() };
        assert_relative_eq!(softening_forces(&b, &half).unwrap().loads.f_n, 0.1, max_relative = 1e-12);

        let len = b.tau_n / b.fracture_energy;
        let past = BondKinematics { u_n: 3e-7 + len, ..Default::default() };
        let at_past = softening_forces(&b, &past).unwrap().loads.f_n;
        advance_damage(&mut b, &past);
        let back = softening_forces(&b, &half).unwrap().loads.f_n;
        assert_relative_eq!(back, at_past * 1.5e-7 / (3e-7 + len), max_relative = 1e-12);
        // pushing the pair together never turns the bond compressive
        let pushed = BondKinematics { u_n: -1e-7, ..Default::default() };
        assert_eq!(softening_forces(&b, &pushed).unwrap().loads.f_n, 0.0);
    }

    #[test]
    fn exhaustion_needs_every_loaded_channel_decayed() {
        let mut b = bond_with(1e-6);
        b.displacement = BondKinematics {
            u_n: 3e-7,
            u_t: Vec3::y() * 1e-7,
            ..Default::default()
        };
        let loads = BondLoads {
            f_n: 0.2,
            f_t: Vec3::y() * 0.1,
            ..Default::default()
        };
        begin_softening(&mut b, FailureMode::Tensile, &loads, 0.0).unwrap();
        let gone = b.tau_n * 100f64.ln() / b.fracture_energy * 1.01;
        let normal_only = BondKinematics { u_n: 3e-7 + gone, u_t: Vec3::y() * 1e-7, ..Default::default() };
        assert!(!softening_forces(&b, &normal_only).unwrap().exhausted);
        let both = BondKinematics { u_t: Vec3::y() * (1e-7 + gone * 10.0), ..normal_only };
        assert!(softening_forces(&b, &both).unwrap().exhausted);
    }

    #[test]
    fn softening_requires_softening_phase() {
        let b = bond_with(1e-6);
        assert!(matches!(
            softening_forces(&b, &BondKinematics::default()),
            Err(Error::BondState(0, 1))
        ));
    }

    #[test]
    fn softening_tail_energy() {
        let (b, _) = softening_bond();
        let len = b.tau_n / b.fracture_energy;
        let n = 200_000;
        let h = 40.0 * len / n as f64;
        let f = |k: usize| {
            let u = BondKinematics {
                u_n: 3e-7 + k as f64 * h,
                ..Default::default()
            };
            softening_forces(&b, &u).unwrap().loads.f_n
        };
        let mut sum = 0.5 * (f(0) + f(n));
        for k in 1..n {
            sum += f(k);
        }
        assert_relative_eq!(sum * h, 0.2 * len, max_relative = 0.01);
    }

    #[test]
    fn frame_rotation_cases() {
        let mut b = bond_with(1e-6);
        b.stored.f_t = Vec3::new(0.0, 0.3, 0.1);
        let same = rotate_bond_frame(&b, &Vec3::x());
        assert_eq!(same.stored.f_t, b.stored.f_t);

        b.stored.f_t = Vec3::x() * 0.5;
        b.normal_prev = Vec3::x();
        let turned = rotate_bond_frame(&b, &Vec3::y());
        assert_relative_eq!(turned.stored.f_t, Vec3::y() * 0.5, epsilon = 1e-15);
        assert_eq!(turned.normal_prev, Vec3::y());
    }

    #[test]
    fn hall_petch_values() {
        let cfg = FractureConfig::default();
        assert_relative_eq!(hall_petch_strength(&cfg, 1e-300).unwrap(), 0.6e6, max_relative = 1e-12);
        assert_relative_eq!(hall_petch_strength(&cfg, 1e-6).unwrap(), 600002.0, max_relative = 1e-12);
        assert!(hall_petch_strength(&cfg, 1e-3).unwrap() < hall_petch_strength(&cfg, 1e-2).unwrap());
        assert!(hall_petch_strength(&cfg, 0.0).is_err());
    }

    #[test]
    fn evaluation_engages_normal_channel_only_without_compression() {
        let mut b = bond_with(1e-6);
        let step = |dist: f64, f_c: f64| BondStep {
            normal: Vec3::x(),
            distance: dist,
            v_rel: Vec3::zeros(),
            omega_rel: Vec3::zeros(),
            contact_force: f_c,
            dt: 1e-6,
            reduced_mass: f64::INFINITY,
            reduced_inertia: f64::INFINITY,
        };
        let l0 = b.reference_length;
        let (loads, _) = evaluate_bond(&mut b, &step(l0 - 1e-7, 0.05)).unwrap();
        assert_eq!(loads.f_n, 0.0);
        assert_eq!(b.reference_length, l0 - 1e-7);
        let (loads, ev) = evaluate_bond(&mut b, &step(l0, 0.0)).unwrap();
        assert_eq!(ev, BondEvent::None);
        assert_relative_eq!(loads.f_n, b.axial_stiffness() * 1e-7, max_relative = 1e-9);
    }

    #[test]
    fn dashpot_capped_at_what_one_step_can_resolve() {
        let mut b = bond_with(1e-6);
        b.cohesion = f64::INFINITY;
        let (m, dt, v) = (1e-6, 1e-6, 0.1);
        let step = BondStep {
            normal: Vec3::x(),
            distance: b.reference_length,
            v_rel: Vec3::new(0.0, v, 0.0),
            omega_rel: Vec3::zeros(),
            contact_force: 0.05,
            dt,
            reduced_mass: m,
            reduced_inertia: f64::INFINITY,
        };
        let shear_arm = b.area / (2.0 * b.radius);
        assert!(b.eta_t * shear_arm * dt > m);
        let (loads, _) = evaluate_bond(&mut b, &step).unwrap();
        let elastic = b.shear_modulus * shear_arm * v * dt;
        assert_relative_eq!(loads.f_t.y, m * v / dt + elastic, max_relative = 1e-9);

        let mut soft = bond_with(1e-6);
        soft.cohesion = f64::INFINITY;
        let loose = BondStep { reduced_mass: 1e3, ..step };
        let (loads, _) = evaluate_bond(&mut soft, &loose).unwrap();
        assert_relative_eq!(loads.f_t.y, (soft.eta_t * v + soft.shear_modulus * v * dt) * shear_arm, max_relative = 1e-9);
    }
}
