//! Four-parameter Burgers material in force-displacement form.
//!
//! The Maxwell pair (`k_i`, `c_i`) gives the instantaneous spring and the
//! steady viscous flow; the Kelvin pair (`k_d`, `c_d`) gives the delayed,
//! recoverable displacement. Displacements are positive in compression.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Reference temperature of the empirical viscosity fits, -1 °C.
pub const WLF_REFERENCE_TEMPERATURE: f64 = 272.15;

/// Universal gas constant, J/(mol·K).
pub const GAS_CONSTANT: f64 = 8.314;

/// Valid temperature window for the empirical viscosity fits (K).
pub const TEMPERATURE_RANGE: (f64, f64) = (150.0, 273.16);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurgersParams {
    /// Instantaneous stiffness (N/m).
    pub k_i: f64,
    /// Delayed stiffness (N/m).
    pub k_d: f64,
    /// Instantaneous viscosity (N·s/m).
    pub c_i: f64,
    /// Delayed viscosity (N·s/m).
    pub c_d: f64,
    /// Load-independent sintering force (N).
    pub f0_b: f64,
    /// Temperature the constants apply to (K).
    pub t_ref: f64,
}

impl BurgersParams {
    pub fn new(k_i: f64, k_d: f64, c_i: f64, c_d: f64, f0_b: f64, t_ref: f64) -> Result<Self> {
        let p = BurgersParams {
            k_i,
            k_d,
            c_i,
            c_d,
            f0_b,
            t_ref,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_i", self.k_i),
            ("k_d", self.k_d),
            ("c_i", self.c_i),
            ("c_d", self.c_d),
            ("f0_b", self.f0_b),
            ("t_ref", self.t_ref),
        ] {
            ensure_finite(name, v)?;
        }
        if self.k_i <= 0.0 || self.k_d <= 0.0 || self.c_i <= 0.0 || self.c_d <= 0.0 {
            return Err(Error::invalid(format!(
                "Burgers constants must be positive: {self:?}"
            )));
        }
        if self.f0_b < 0.0 {
            return Err(Error::invalid("f0_b must be non-negative"));
        }
        Ok(())
    }

    /// Kelvin relaxation rate `k_d / c_d` (1/s).
    pub fn relaxation_rate(&self) -> f64 {
        self.k_d / self.c_d
    }

    /// Multiplies all four constants by `factor`, leaving `f0_b` and `t_ref` alone.
    pub fn scaled(&self, factor: f64) -> Self {
        BurgersParams {
            k_i: self.k_i * factor,
            k_d: self.k_d * factor,
            c_i: self.c_i * factor,
            c_d: self.c_d * factor,
            ..*self
        }
    }
}

/// Per-contact memory of the finite-difference update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BurgersState {
    /// Delayed (Kelvin) displacement (m).
    pub u_d: f64,
    /// Force at the previous step (N).
    pub f_prev: f64,
    /// Total displacement at the previous step (m).
    pub u_prev: f64,
}

/// Vector-valued state for the tangential direction, where only increments
/// of displacement are available.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VectorBurgersState {
    pub u_d: Vector3<f64>,
    pub f_prev: Vector3<f64>,
}

/// The A, B, C, D coefficients of the central-difference update for one
/// step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    half_dt_over_cd: f64,
}

impl BurgersCoefficients {
    pub fn new(params: &BurgersParams, dt: f64) -> Result<Self> {
        ensure_finite("dt", dt)?;
        if dt <= 0.0 {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        let h = dt / (2.0 * params.c_d);
        let a = 1.0 + params.k_d * h;
        let b = 1.0 - params.k_d * h;
        let visc = h / a + dt / (2.0 * params.c_i);
        Ok(BurgersCoefficients {
            a,
            b,
            c: visc + 1.0 / params.k_i,
            d: visc - 1.0 / params.k_i,
            half_dt_over_cd: h,
        })
    }

    /// New force from the displacement increment over the step.
    #[inline]
    pub fn force(&self, du: f64, u_d: f64, f_prev: f64) -> f64 {
        (du + u_d * (1.0 - self.b / self.a) - f_prev * self.d) / self.c
    }

    /// Displacement increment that produces `f_new`; inverse of [`Self::force`].
    #[inline]
    pub fn increment_for_force(&self, f_new: f64, u_d: f64, f_prev: f64) -> f64 {
        f_new * self.c + f_prev * self.d - u_d * (1.0 - self.b / self.a)
    }

    /// Kelvin displacement at the end of the step.
    #[inline]
    pub fn delayed(&self, u_d: f64, f_new: f64, f_prev: f64) -> f64 {
        (self.b * u_d + self.half_dt_over_cd * (f_new + f_prev)) / self.a
    }

    pub fn force_vec(&self, du: &Vector3<f64>, state: &VectorBurgersState) -> Vector3<f64> {
        (du + state.u_d * (1.0 - self.b / self.a) - state.f_prev * self.d) / self.c
    }

    pub fn delayed_vec(
        &self,
        u_d: &Vector3<f64>,
        f_new: &Vector3<f64>,
        f_prev: &Vector3<f64>,
    ) -> Vector3<f64> {
        (u_d * self.b + (f_new + f_prev) * self.half_dt_over_cd) / self.a
    }
}

/// Advances the Burgers element to the total displacement `u_new`.
///
/// The displacement entering the force update is the increment
/// `u_new - state.u_prev`; this is the reading that converges to the
/// closed-form creep curve as `dt -> 0`.
pub fn burgers_step(
    params: &BurgersParams,
    state: &BurgersState,
    u_new: f64,
    dt: f64,
) -> Result<(f64, BurgersState)> {
    ensure_finite("u_new", u_new)?;
    ensure_finite("u_d", state.u_d)?;
    ensure_finite("f_prev", state.f_prev)?;
    ensure_finite("u_prev", state.u_prev)?;
    let k = BurgersCoefficients::new(params, dt)?;
    let f_new = k.force(u_new - state.u_prev, state.u_d, state.f_prev);
    let next = BurgersState {
        u_d: k.delayed(state.u_d, f_new, state.f_prev),
        f_prev: f_new,
        u_prev: u_new,
    };
    Ok((f_new, next))
}

/// Total displacement that makes the next [`burgers_step`] return `f_new`.
pub fn displacement_for_force(
    params: &BurgersParams,
    state: &BurgersState,
    f_new: f64,
    dt: f64,
) -> Result<f64> {
    let k = BurgersCoefficients::new(params, dt)?;
    Ok(state.u_prev + k.increment_for_force(f_new, state.u_d, state.f_prev))
}

/// Drives the element at constant force `f0` applied at `t = 0` and returns
/// the displacement after each of `steps` steps (index `n` is `t = n·dt`).
///
/// The load is a Heaviside step with the spring loaded at `t = 0`, so the
/// first entry is `f0 / k_i`.
pub fn constant_force_creep(
    params: &BurgersParams,
    f0: f64,
    dt: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    let mut state = BurgersState {
        u_d: 0.0,
        f_prev: f0,
        u_prev: f0 / params.k_i,
    };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state.u_prev);
    for _ in 0..steps {
        let u = displacement_for_force(params, &state, f0, dt)?;
        let (_, next) = burgers_step(params, &state, u, dt)?;
        state = next;
        out.push(u);
    }
    Ok(out)
}

/// Closed-form creep displacement under a constant force `f0` applied at `t = 0`.
pub fn creep_displacement(params: &BurgersParams, f0: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    let rate = params.relaxation_rate();
    Ok(f0 * (1.0 / params.k_i + t / params.c_i + (1.0 - (-t * rate).exp()) / params.k_d))
}

/// Time derivative of [`creep_displacement`].
pub fn creep_rate(params: &BurgersParams, f0: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    let rate = params.relaxation_rate();
    Ok(f0 * (1.0 / params.c_i + rate / params.k_d * (-t * rate).exp()))
}

fn check_time(t: f64) -> Result<()> {
    ensure_finite("t", t)?;
    if t < 0.0 {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// Converts the four constants to their transverse (shear) values by
/// dividing by `2(1 + nu)`.
pub fn transverse_params(params: &BurgersParams, nu: f64) -> Result<BurgersParams> {
    ensure_finite("nu", nu)?;
    if !(nu > -1.0 && nu <= 0.5) {
        return Err(Error::invalid(format!("Poisson ratio {nu} outside (-1, 0.5]")));
    }
    Ok(params.scaled(1.0 / (2.0 * (1.0 + nu))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexCompliance {
    /// Storage compliance (m/N).
    pub g_storage: f64,
    /// Loss compliance (m/N).
    pub g_loss: f64,
    /// Dynamic compliance magnitude (m/N).
    pub g_mag: f64,
    /// Phase lag of displacement behind force (rad).
    pub phase: f64,
}

/// Steady-state compliance under harmonic loading at angular frequency `omega`.
pub fn complex_compliance(params: &BurgersParams, omega: f64) -> Result<ComplexCompliance> {
    ensure_finite("omega", omega)?;
    if omega <= 0.0 {
        return Err(Error::invalid(format!("omega must be positive, got {omega}")));
    }
    let kelvin = params.k_d * params.k_d + omega * omega * params.c_d * params.c_d;
    let g_storage = 1.0 / params.k_i + params.k_d / kelvin;
    let g_loss = 1.0 / (omega * params.c_i) + omega * params.c_d / kelvin;
    Ok(ComplexCompliance {
        g_storage,
        g_loss,
        g_mag: g_storage.hypot(g_loss),
        phase: g_loss.atan2(g_storage),
    })
}

/// Constants of a Williams-Landel-Ferry shift `exp[-C1 ΔT / (C2 + ΔT)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WlfConstants {
    pub c1: f64,
    /// Kelvin.
    pub c2: f64,
}

impl WlfConstants {
    /// Empirical fit for the delayed viscosity of ice.
    pub const DELAYED_VISCOSITY: WlfConstants = WlfConstants {
        c1: -2.571,
        c2: -6.154,
    };
    /// Empirical fit for the instantaneous viscosity of ice.
    pub const INSTANTANEOUS_VISCOSITY: WlfConstants = WlfConstants {
        c1: -2.586,
        c2: -7.706,
    };
    /// Empirical fit for the Kelvin relaxation time `c_d / k_d`.
    pub const RELAXATION_TIME: WlfConstants = WlfConstants {
        c1: 1.472e4,
        c2: 2.431e5,
    };

    pub fn shift(&self, t: f64, t0: f64) -> Result<f64> {
        wlf_shift(t, t0, self.c1, self.c2)
    }
}

/// WLF shift factor `a_T` between temperatures `t` and `t0`.
pub fn wlf_shift(t: f64, t0: f64, c1: f64, c2: f64) -> Result<f64> {
    for (n, v) in [("T", t), ("T0", t0), ("C1", c1), ("C2", c2)] {
        ensure_finite(n, v)?;
    }
    let dt = t - t0;
    let denom = c2 + dt;
    if denom.abs() < 1e-12 * c2.abs().max(1.0) {
        return Err(Error::invalid(format!(
            "WLF denominator C2 + (T - T0) vanishes at T = {t}"
        )));
    }
    Ok((-c1 * dt / denom).exp())
}

/// Which temperature-dependent constant [`viscosity_at_temperature`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViscosityKind {
    Instantaneous,
    Delayed,
    /// `k_d / c_d`, the reciprocal of the fitted relaxation time.
    RelaxationRate,
}

/// Shift factor of the empirical fits between `params.t_ref` and `t`.
pub fn temperature_factor(params: &BurgersParams, t: f64, which: ViscosityKind) -> Result<f64> {
    ensure_finite("T", t)?;
    let (lo, hi) = TEMPERATURE_RANGE;
    if t < lo || t > hi {
        return Err(Error::invalid(format!(
            "temperature {t} K outside [{lo}, {hi}] K"
        )));
    }
    let t0 = WLF_REFERENCE_TEMPERATURE;
    let relative = |c: WlfConstants| -> Result<f64> {
        Ok(c.shift(t, t0)? / c.shift(params.t_ref, t0)?)
    };
    match which {
        ViscosityKind::Instantaneous => relative(WlfConstants::INSTANTANEOUS_VISCOSITY),
        ViscosityKind::Delayed => relative(WlfConstants::DELAYED_VISCOSITY),
        ViscosityKind::RelaxationRate => Ok(1.0 / relative(WlfConstants::RELAXATION_TIME)?),
    }
}

/// Selected constant of `params` shifted from `params.t_ref` to temperature `t`.
pub fn viscosity_at_temperature(
    params: &BurgersParams,
    t: f64,
    which: ViscosityKind,
) -> Result<f64> {
    let base = match which {
        ViscosityKind::Instantaneous => params.c_i,
        ViscosityKind::Delayed => params.c_d,
        ViscosityKind::RelaxationRate => params.relaxation_rate(),
    };
    Ok(base * temperature_factor(params, t, which)?)
}

/// Arrhenius creep rate `c·exp(-Q / (R T))`.
pub fn arrhenius_rate(c: f64, q: f64, t: f64) -> Result<f64> {
    for (n, v) in [("c", c), ("Q", q), ("T", t)] {
        ensure_finite(n, v)?;
    }
    if t <= 0.0 {
        return Err(Error::invalid(format!("temperature must be positive, got {t}")));
    }
    if q < 0.0 {
        return Err(Error::invalid("activation energy must be non-negative"));
    }
    Ok(c * (-q / (GAS_CONSTANT * t)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;

    fn row_m1() -> BurgersParams {
        BurgersParams::new(9e3, 0.30783, 0.15385e3, 15.698, 0.08411, 272.15).unwrap()
    }
    fn row_m5() -> BurgersParams {
        BurgersParams::new(9e3, 0.53908, 0.39047e3, 43.230, 0.06535, 268.15).unwrap()
    }
    fn row_m12() -> BurgersParams {
        BurgersParams::new(9e3, 0.60423, 0.70373e3, 81.653, 0.05, 261.15).unwrap()
    }

    #[test]
    fn zero_displacement_gives_zero_force() {
        let (f, s) = burgers_step(&row_m1(), &BurgersState::default(), 0.0, 1e-4).unwrap();
        assert_eq!(f, 0.0);
        assert_eq!(s, BurgersState::default());
    }

    #[test]
    fn rejects_bad_step_and_non_finite_input() {
        let p = row_m1();
        assert!(burgers_step(&p, &BurgersState::default(), 1e-6, 0.0).is_err());
        assert!(burgers_step(&p, &BurgersState::default(), 1e-6, -1.0).is_err());
        assert!(burgers_step(&p, &BurgersState::default(), f64::NAN, 1e-4).is_err());
        let bad = BurgersState {
            u_d: f64::INFINITY,
            ..Default::default()
        };
        assert!(burgers_step(&p, &bad, 1e-6, 1e-4).is_err());
    }

    #[test]
    fn held_step_displacement_relaxes_monotonically() {
        let p = row_m1();
        let dt = 1e-3;
        let (mut f, mut s) = burgers_step(&p, &BurgersState::default(), 1e-5, dt).unwrap();
        assert!(f > 0.0);
        for _ in 0..5000 {
            let (f_new, s_new) = burgers_step(&p, &s, 1e-5, dt).unwrap();
            assert!(f_new < f && f_new > 0.0, "{f_new} !< {f}");
            f = f_new;
            s = s_new;
        }
    }

    #[test]
    fn inverse_step_reproduces_requested_force() {
        let p = row_m5();
        let mut s = BurgersState::default();
        for k in 0..100 {
            let target = 0.01 * (k as f64).sin();
            let u = displacement_for_force(&p, &s, target, 1e-4).unwrap();
            let (f, next) = burgers_step(&p, &s, u, 1e-4).unwrap();
            assert!((f - target).abs() < 1e-12);
            s = next;
        }
    }

    #[test]
    fn creep_displacement_limits() {
        let p = row_m5();
        assert_eq!(creep_displacement(&p, 0.1, 0.0).unwrap(), 0.1 / p.k_i);
        let t = 1e6;
        let slope = (creep_displacement(&p, 0.1, t + 1.0).unwrap()
            - creep_displacement(&p, 0.1, t).unwrap())
            / 1.0;
        assert!((slope - 0.1 / p.c_i).abs() < 1e-9 * slope);
        assert!(creep_displacement(&p, 0.1, -1e-3).is_err());
    }

    #[test]
    fn creep_regression_anchor_minus_12() {
        // Direct scalar evaluation, kept independent of creep_displacement.
        let (ki, kd, ci, cd) = (9e3_f64, 0.60423_f64, 0.70373e3_f64, 81.653_f64);
        let t = 0.25_f64;
        let expect = 0.05 * (1.0 / ki + t / ci + (1.0 - (-t * kd / cd).exp()) / kd);
        let got = creep_displacement(&row_m12(), 0.05, 0.25).unwrap();
        assert!((got - expect).abs() <= 1e-15 * expect);
        assert!((got - 1.7626337526628e-4).abs() < 1e-15, "{got}");
    }

    #[test]
    fn creep_rate_limits() {
        let p = row_m1();
        let r0 = creep_rate(&p, 1.0, 0.0).unwrap();
        assert!((r0 - (1.0 / p.c_i + 1.0 / p.c_d)).abs() < 1e-15);
        let rinf = creep_rate(&p, 1.0, 1e5).unwrap();
        assert!((rinf - 1.0 / p.c_i).abs() < 1e-15);
    }

    #[test]
    fn creep_rate_matches_central_difference_for_table_rows() {
        for p in [row_m1(), row_m5(), row_m12()] {
            let (t, h) = (0.1, 1e-6);
            let fd = (creep_displacement(&p, 1.0, t + h).unwrap()
                - creep_displacement(&p, 1.0, t - h).unwrap())
                / (2.0 * h);
            let exact = creep_rate(&p, 1.0, t).unwrap();
            assert!(((fd - exact) / exact).abs() < 1e-6);
        }
    }

    #[test]
    fn transverse_conversion() {
        let p = row_m1();
        let t0 = transverse_params(&p, 0.0).unwrap();
        assert_eq!(t0.k_i, p.k_i / 2.0);
        assert_eq!(t0.c_d, p.c_d / 2.0);
        let t3 = transverse_params(&p, 0.3).unwrap();
        assert!((t3.k_i - 3461.538461538).abs() < 1e-6);
        assert_eq!(t3.f0_b, p.f0_b);
        assert_eq!(t3.t_ref, p.t_ref);
        let twice = transverse_params(&transverse_params(&p, 0.5).unwrap(), 0.5).unwrap();
        assert!((twice.c_i - p.c_i / 9.0).abs() < 1e-12);
        assert!(transverse_params(&p, -1.0).is_err());
        assert!(transverse_params(&p, 0.51).is_err());
    }

    #[test]
    fn compliance_limits_and_identities() {
        let p = row_m5();
        let hi = complex_compliance(&p, 1e9).unwrap();
        assert!((hi.g_storage - 1.0 / p.k_i).abs() < 1e-12 / p.k_i);
        let lo = complex_compliance(&p, 1e-9).unwrap();
        assert!(lo.g_loss > 1e6);
        let c = complex_compliance(&p, 100.0).unwrap();
        assert!((c.g_mag.powi(2) - (c.g_storage.powi(2) + c.g_loss.powi(2))).abs() < 1e-15);
        assert!((c.phase.tan() - c.g_loss / c.g_storage).abs() < 1e-12);
        assert!(complex_compliance(&p, 0.0).is_err());
    }

    #[test]
    fn compliance_matches_rational_form_minus_5() {
        let p = row_m5();
        let w = 100.0;
        let p1 = p.c_d / p.k_d + p.c_i * (1.0 / p.k_d + 1.0 / p.k_i);
        let p2 = p.c_d * p.c_i / (p.k_d * p.k_i);
        let q1 = p.c_i;
        let q2 = p.c_d * p.c_i / p.k_d;
        let s = Complex::new(0.0, w);
        let g = (1.0 + s * p1 + s * s * p2) / (s * q1 + s * s * q2);
        let c = complex_compliance(&p, w).unwrap();
        assert!(((c.g_storage - g.re) / g.re).abs() < 1e-12);
        assert!(((c.g_loss + g.im) / g.im).abs() < 1e-12);
    }

    #[test]
    fn wlf_identity_and_minus_11_value() {
        assert_eq!(wlf_shift(263.0, 263.0, 5.0, 50.0).unwrap(), 1.0);
        let c = WlfConstants::DELAYED_VISCOSITY;
        let a = c.shift(261.15, 272.15).unwrap();
        let expect = (2.571_f64 * -11.0 / (-6.154 - 11.0)).exp();
        assert!((a - expect).abs() < 1e-14 * expect);
        assert!(wlf_shift(280.0, 270.0, 1.0, -10.0).is_err());
    }

    #[test]
    fn wlf_monotone_for_instantaneous_fit() {
        let c = WlfConstants::INSTANTANEOUS_VISCOSITY;
        let mut prev = f64::INFINITY;
        for k in 0..=2200 {
            let dt = -22.0 + k as f64 * 0.01;
            let a = c.shift(272.15 + dt, 272.15).unwrap();
            assert!(a < prev);
            prev = a;
        }
    }

    #[test]
    fn viscosity_scaling_from_reference() {
        let p = row_m1();
        for kind in [
            ViscosityKind::Instantaneous,
            ViscosityKind::Delayed,
            ViscosityKind::RelaxationRate,
        ] {
            assert_eq!(temperature_factor(&p, 272.15, kind).unwrap(), 1.0);
        }
        let ci12 = viscosity_at_temperature(&p, 261.15, ViscosityKind::Instantaneous).unwrap();
        let table_ratio = 0.70373e3 / 0.15385e3;
        assert!(((ci12 / p.c_i) / table_ratio - 1.0).abs() < 0.01);
        let cd12 = viscosity_at_temperature(&p, 261.15, ViscosityKind::Delayed).unwrap();
        let cd23 = viscosity_at_temperature(&p, 250.15, ViscosityKind::Delayed).unwrap();
        assert!(cd23 >= cd12);
        assert!(viscosity_at_temperature(&p, 100.0, ViscosityKind::Delayed).is_err());
        assert!(viscosity_at_temperature(&p, 280.0, ViscosityKind::Delayed).is_err());
    }

    #[test]
    fn arrhenius_behaviour() {
        assert_eq!(arrhenius_rate(3.0, 0.0, 250.0).unwrap(), 3.0);
        assert!(arrhenius_rate(1.0, 1e5, 250.0).unwrap() < arrhenius_rate(1.0, 1e5, 260.0).unwrap());
        let ratio = arrhenius_rate(1.0, 120e3, 263.15).unwrap()
            / arrhenius_rate(1.0, 120e3, 253.15).unwrap();
        let expect = (120e3_f64 / 8.314 * (1.0 / 253.15 - 1.0 / 263.15)).exp();
        assert!((ratio - expect).abs() < 1e-12 * expect);
        assert!((ratio - 8.729043335034).abs() < 1e-9, "{ratio}");
        assert!(arrhenius_rate(1.0, 1.0, 0.0).is_err());
    }
}
