use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dls::{damped_least_squares, DlsOptions, LeastSquares};
use crate::error::{ensure_finite, Error, Result};
use crate::rheology::{BurgersParams, WlfConstants, WLF_REFERENCE_TEMPERATURE};

/// WLF constants fitted for each temperature-dependent quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureShifts {
    pub t0: f64,
    pub delayed_viscosity: WlfConstants,
    pub instantaneous_viscosity: WlfConstants,
    /// Shift of the relaxation time `c_d/k_d`.
    pub relaxation_time: WlfConstants,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftFit {
    pub constants: WlfConstants,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct WlfProblem<'a> {
    dt: &'a [f64],
    shift: &'a [f64],
}

fn wlf(c1: f64, c2: f64, dt: f64) -> f64 {
    (-c1 * dt / (c2 + dt)).exp()
}

impl LeastSquares for WlfProblem<'_> {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.dt.len(),
            self.dt.iter().zip(self.shift).map(|(&d, &a)| {
                if (x[1] + d) * x[1].signum() <= 0.0 {
                    f64::INFINITY
                } else {
                    wlf(x[0], x[1], d) - a
                }
            }),
        )
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (c1, c2) = (x[0], x[1]);
        let mut j = DMatrix::zeros(self.dt.len(), 2);
        for (r, &d) in self.dt.iter().enumerate() {
            let a = wlf(c1, c2, d);
            j[(r, 0)] = -a * d / (c2 + d);
            j[(r, 1)] = a * c1 * d / ((c2 + d) * (c2 + d));
        }
        j
    }
}

/// Fits `a_T = exp(-C1·dT/(C2 + dT))` to shift factors at offsets `dT = T - T0`.
///
/// The start is the best point of a scan over `C2` with `C1` solved in log
/// space; the refinement minimizes the shift-factor residual directly.
pub fn fit_wlf(dt: &[f64], shift: &[f64]) -> Result<ShiftFit> {
    if dt.len() != shift.len() {
        return Err(Error::invalid("offsets and shift factors differ in length"));
    }
    for (&d, &a) in dt.iter().zip(shift) {
        ensure_finite("temperature offset", d)?;
        ensure_finite("shift factor", a)?;
        if a <= 0.0 {
            return Err(Error::invalid(format!("shift factor must be positive, got {a}")));
        }
    }
    let mut sorted = dt.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Degenerate("repeated temperature".into()));
    }
    if sorted.iter().filter(|d| **d != 0.0).count() < 2 {
        return Err(Error::Degenerate("need at least three distinct temperatures".into()));
    }
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);

    let mut best: Option<(f64, f64, f64)> = None;
    for k in 0..=400 {
        let mag = 10f64.powf(-1.0 + 7.0 * k as f64 / 400.0);
        for c2 in [-mag, mag] {
            if (c2 + lo) * c2.signum() <= 0.0 || (c2 + hi) * c2.signum() <= 0.0 {
                continue;
            }
            let z: Vec<f64> = dt.iter().map(|&d| -d / (c2 + d)).collect();
            let zz: f64 = z.iter().map(|v| v * v).sum();
            if zz == 0.0 {
                continue;
            }
            let c1 = z.iter().zip(shift).map(|(v, a)| v * a.ln()).sum::<f64>() / zz;
            let sse: f64 = dt
                .iter()
                .zip(shift)
                .map(|(&d, &a)| (wlf(c1, c2, d) - a).powi(2))
                .sum();
            if sse.is_finite() && best.is_none_or(|b| sse < b.2) {
                best = Some((c1, c2, sse));
            }
        }
    }
    let (c1, c2, _) = best.ok_or_else(|| Error::Degenerate("no admissible WLF start".into()))?;
    let problem = WlfProblem { dt, shift };
    let opts = DlsOptions {
        relative_tolerance: 1e-14,
        gradient_tolerance: 1e-15,
        ..DlsOptions::default()
    };
    let rep = damped_least_squares(&problem, DVector::from_vec(vec![c1, c2]), &opts);
    Ok(ShiftFit {
        constants: WlfConstants {
            c1: rep.x[0],
            c2: rep.x[1],
        },
        residual_norm: rep.residual_norm,
        iterations: rep.iterations,
        converged: rep.converged,
    })
}

/// Fits WLF constants for `c_d`, `c_i` and `c_d/k_d` from per-temperature
/// fits. One entry must sit at `t0`, which defines unit shift.
pub fn fit_temperature_shifts(fits: &[(f64, BurgersParams)], t0: f64) -> Result<TemperatureShifts> {
    if fits.len() < 3 {
        return Err(Error::Degenerate("need at least three temperatures".into()));
    }
    let reference = fits
        .iter()
        .find(|(t, _)| (t - t0).abs() < 1e-9)
        .map(|(_, p)| *p)
        .ok_or_else(|| Error::invalid(format!("no fit at the reference temperature {t0} K")))?;
    let dt: Vec<f64> = fits.iter().map(|(t, _)| t - t0).collect();
    let fit = |f: &dyn Fn(&BurgersParams) -> f64| -> Result<WlfConstants> {
        let shift: Vec<f64> = fits.iter().map(|(_, p)| f(p) / f(&reference)).collect();
        Ok(fit_wlf(&dt, &shift)?.constants)
    };
    Ok(TemperatureShifts {
        t0,
        delayed_viscosity: fit(&|p| p.c_d)?,
        instantaneous_viscosity: fit(&|p| p.c_i)?,
        relaxation_time: fit(&|p| p.c_d / p.k_d)?,
    })
}

/// [`fit_temperature_shifts`] at the default reference temperature.
pub fn fit_temperature_shifts_default(fits: &[(f64, BurgersParams)]) -> Result<TemperatureShifts> {
    fit_temperature_shifts(fits, WLF_REFERENCE_TEMPERATURE)
}
