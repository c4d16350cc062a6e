//! Calibrated ice constants and their temperature dependence.

use serde::{Deserialize, Serialize};

use crate::bond::FractureConfig;
use crate::contact::FrictionConfig;
use crate::error::{Error, Result};
use crate::rheology::{
    arrhenius_rate, temperature_factor, BurgersParams, ViscosityKind, WLF_REFERENCE_TEMPERATURE,
};

pub const CELSIUS_OFFSET: f64 = 273.15;

/// One row of the short-time creep calibration, stored as printed (fit
/// scale, not SI).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CreepFitRow {
    pub celsius: f64,
    pub c_i: f64,
    pub c_d: f64,
    pub k_i: f64,
    pub k_d: f64,
    /// Load-independent sintering force (N).
    pub f0_b: f64,
}

/// Optimal Burgers parameters for short-time creep of ice at four temperatures.
pub const CREEP_FIT_TABLE: [CreepFitRow; 4] = [
    CreepFitRow {
        celsius: -1.0,
        c_i: 0.15385e3,
        c_d: 15.698,
        k_i: 9e3,
        k_d: 0.30783,
        f0_b: 0.08411,
    },
    CreepFitRow {
        celsius: -5.0,
        c_i: 0.39047e3,
        c_d: 43.230,
        k_i: 9e3,
        k_d: 0.53908,
        f0_b: 0.06535,
    },
    CreepFitRow {
        celsius: -12.0,
        c_i: 0.70373e3,
        c_d: 81.653,
        k_i: 9e3,
        k_d: 0.60423,
        f0_b: 0.05,
    },
    CreepFitRow {
        celsius: -23.0,
        c_i: 1.0444e3,
        c_d: 82.50,
        k_i: 9e3,
        k_d: 1.1561,
        f0_b: 0.0298,
    },
];

/// Default multiplier from fit-scale constants to contact constants in N/m
/// and N·s/m.
pub const DEFAULT_CONTACT_SCALE: f64 = 10.0;

/// Default multiplier (1/m²) turning `(k_i + k_d)·d` and `c_i·d` into bond
/// moduli in Pa and viscosities in Pa·s.
pub const DEFAULT_BOND_MODULUS_SCALE: f64 = 1e9;

impl CreepFitRow {
    pub fn kelvin(&self) -> f64 {
        self.celsius + CELSIUS_OFFSET
    }

    /// Parameters at this row's temperature, with the four constants multiplied
    /// by `scale`.
    pub fn params(&self, scale: f64) -> BurgersParams {
        BurgersParams {
            k_i: self.k_i * scale,
            k_d: self.k_d * scale,
            c_i: self.c_i * scale,
            c_d: self.c_d * scale,
            f0_b: self.f0_b,
            t_ref: self.kelvin(),
        }
    }
}

/// Row whose temperature is within 1 mK of `kelvin`.
pub fn creep_fit_row(kelvin: f64) -> Option<&'static CreepFitRow> {
    CREEP_FIT_TABLE
        .iter()
        .find(|r| (r.kelvin() - kelvin).abs() < 1e-3)
}

/// Load-independent sintering force at `kelvin`, linearly interpolated
/// between table rows and clamped at the ends.
pub fn interpolated_f0(kelvin: f64) -> f64 {
    let mut rows: Vec<_> = CREEP_FIT_TABLE.iter().map(|r| (r.kelvin(), r.f0_b)).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if kelvin <= rows[0].0 {
        return rows[0].1;
    }
    for w in rows.windows(2) {
        let ((t0, f0), (t1, f1)) = (w[0], w[1]);
        if kelvin <= t1 {
            return f0 + (f1 - f0) * (kelvin - t0) / (t1 - t0);
        }
    }
    rows[rows.len() - 1].1
}

/// How the Burgers constants follow temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemperatureModel {
    /// Constants do not change with temperature.
    Fixed,
    /// Empirical WLF fits for `c_i`, `c_d` and the relaxation time; `k_i` constant.
    #[default]
    Wlf,
    /// Viscosities scale inversely with an Arrhenius creep rate.
    Arrhenius {
        /// Activation energy, J/mol.
        activation_energy: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub reference: BurgersParams,
    pub temperature_model: TemperatureModel,
}

impl MaterialModel {
    pub fn fixed(params: BurgersParams) -> Self {
        MaterialModel {
            reference: params,
            temperature_model: TemperatureModel::Fixed,
        }
    }

    /// WLF model anchored on the -1 °C calibration row.
    pub fn wlf_from_table(scale: f64) -> Self {
        let row = creep_fit_row(WLF_REFERENCE_TEMPERATURE).expect("reference row present");
        MaterialModel {
            reference: row.params(scale),
            temperature_model: TemperatureModel::Wlf,
        }
    }

    /// Calibration row at `kelvin` when one exists, otherwise the WLF model.
    pub fn from_table(kelvin: f64, scale: f64) -> Self {
        match creep_fit_row(kelvin) {
            Some(row) => MaterialModel::fixed(row.params(scale)),
            None => MaterialModel::wlf_from_table(scale),
        }
    }

    pub fn params_at(&self, kelvin: f64) -> Result<BurgersParams> {
        let r = &self.reference;
        let f0 = || {
            let base = interpolated_f0(r.t_ref);
            if base > 0.0 {
                r.f0_b * interpolated_f0(kelvin) / base
            } else {
                r.f0_b
            }
        };
        let p = match self.temperature_model {
            TemperatureModel::Fixed => *r,
            TemperatureModel::Wlf => {
                let c_i = r.c_i * temperature_factor(r, kelvin, ViscosityKind::Instantaneous)?;
                let c_d = r.c_d * temperature_factor(r, kelvin, ViscosityKind::Delayed)?;
                let rate =
                    r.relaxation_rate() * temperature_factor(r, kelvin, ViscosityKind::RelaxationRate)?;
                BurgersParams {
                    k_i: r.k_i,
                    k_d: c_d * rate,
                    c_i,
                    c_d,
                    f0_b: f0(),
                    t_ref: kelvin,
                }
            }
            TemperatureModel::Arrhenius { activation_energy } => {
                let ratio = arrhenius_rate(1.0, activation_energy, r.t_ref)?
                    / arrhenius_rate(1.0, activation_energy, kelvin)?;
                BurgersParams {
                    c_i: r.c_i * ratio,
                    c_d: r.c_d * ratio,
                    f0_b: f0(),
                    t_ref: kelvin,
                    ..*r
                }
            }
        };
        p.validate()?;
        Ok(p)
    }
}

/// Everything the pair laws need about the ice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub model: MaterialModel,
    pub fracture: FractureConfig,
    pub friction: FrictionConfig,
    pub poisson_ratio: f64,
    /// See [`DEFAULT_BOND_MODULUS_SCALE`].
    pub bond_modulus_scale: f64,
    /// kg/m³.
    pub density: f64,
    /// Create bonds at compressive contacts.
    pub sintering: bool,
}

impl Material {
    pub fn new(model: MaterialModel) -> Self {
        Material {
            model,
            fracture: FractureConfig::default(),
            friction: FrictionConfig::default(),
            poisson_ratio: 0.3,
            bond_modulus_scale: DEFAULT_BOND_MODULUS_SCALE,
            density: 917.0,
            sintering: true,
        }
    }

    /// Calibrated ice at `kelvin` with the default unit scale.
    pub fn ice(kelvin: f64) -> Self {
        Material::new(MaterialModel::from_table(kelvin, DEFAULT_CONTACT_SCALE))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.reference.validate()?;
        self.fracture.validate()?;
        self.friction.validate()?;
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio <= 0.5) {
            return Err(Error::invalid("poisson_ratio outside (-1, 0.5]"));
        }
        if !(self.bond_modulus_scale > 0.0 && self.density > 0.0) {
            return Err(Error::invalid("bond_modulus_scale and density must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_map_to_kelvin() {
        assert_eq!(creep_fit_row(268.15).unwrap().c_d, 43.230);
        assert!(creep_fit_row(270.0).is_none());
        let p = CREEP_FIT_TABLE[0].params(10.0);
        assert_eq!(p.k_i, 9e4);
        assert_eq!(p.f0_b, 0.08411);
    }

    #[test]
    fn f0_interpolation() {
        assert_eq!(interpolated_f0(272.15), 0.08411);
        assert_eq!(interpolated_f0(300.0), 0.08411);
        assert_eq!(interpolated_f0(200.0), 0.0298);
        let mid = interpolated_f0(270.15);
        assert!((mid - (0.08411 + 0.06535) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn wlf_model_reproduces_reference_and_trends() {
        let m = MaterialModel::wlf_from_table(1.0);
        let p0 = m.params_at(272.15).unwrap();
        assert!((p0.c_i - 153.85).abs() < 1e-9);
        let p12 = m.params_at(261.15).unwrap();
        assert!((p12.c_i / 703.73 - 1.0).abs() < 0.01);
        assert!((p12.c_d / 81.653 - 1.0).abs() < 0.01);
        assert_eq!(p12.k_i, 9e3);
        assert!((p12.f0_b - 0.05).abs() < 1e-15);
    }

    #[test]
    fn arrhenius_model_stiffens_viscosity_when_cold() {
        let m = MaterialModel {
            reference: CREEP_FIT_TABLE[0].params(1.0),
            temperature_model: TemperatureModel::Arrhenius {
                activation_energy: 120e3,
            },
        };
        let warm = m.params_at(272.15).unwrap();
        let cold = m.params_at(253.15).unwrap();
        assert!(cold.c_i > warm.c_i && cold.c_d > warm.c_d);
        assert_eq!(cold.k_d, warm.k_d);
    }
}
