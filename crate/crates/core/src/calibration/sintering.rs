use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dls::{damped_least_squares, DlsOptions, LeastSquares};
use crate::error::{ensure_finite, Error, Result};
use crate::rheology::BurgersParams;

/// What the first column of a sintering dataset measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleAxis {
    /// Sintering time (s) at a fixed load.
    Time,
    /// Applied load (N) at a fixed sintering time.
    Load,
}

/// Fracture forces from a fast-sintering experiment at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinteringDataset {
    pub temperature: f64,
    /// Equivalent radius of the two grains (m).
    pub r_eq: f64,
    /// Bond tensile strength assumed for the conversion (Pa).
    pub tau_n: f64,
    pub axis: SampleAxis,
    /// Applied load of a time series (N).
    pub load: Option<f64>,
    /// Sintering time of a load sweep (s).
    pub duration: Option<f64>,
    /// Known load-independent sintering force (N).
    pub f0_b: Option<f64>,
    /// `(time or load, fracture force)` pairs.
    pub samples: Vec<(f64, f64)>,
}

impl SinteringDataset {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("temperature", self.temperature)?;
        if !(self.r_eq > 0.0 && self.tau_n > 0.0) {
            return Err(Error::invalid("dataset: r_eq and tau_n must be positive"));
        }
        if self.samples.is_empty() {
            return Err(Error::invalid("dataset has no samples"));
        }
        for &(x, f) in &self.samples {
            ensure_finite("sample", x)?;
            ensure_finite("fracture force", f)?;
            if f < 0.0 {
                return Err(Error::invalid(format!("negative fracture force {f}")));
            }
            match self.axis {
                SampleAxis::Time if x <= 0.0 => {
                    return Err(Error::invalid(format!("sample time must be positive, got {x}")))
                }
                SampleAxis::Load if x < 0.0 => {
                    return Err(Error::invalid(format!("applied load must be non-negative, got {x}")))
                }
                _ => {}
            }
        }
        match self.axis {
            SampleAxis::Time if !self.load.is_some_and(|l| l > 0.0) => {
                Err(Error::invalid("time-series dataset needs a positive applied load"))
            }
            _ => Ok(()),
        }
    }
}

/// Indentation `(f_frac - f0_b)/(pi·tau_n·R_eq)` behind a measured fracture force.
pub fn sintering_to_indentation(f_frac: f64, f0_b: f64, tau_n: f64, r_eq: f64) -> Result<f64> {
    for (n, v) in [("f_frac", f_frac), ("f0_b", f0_b), ("tau_n", tau_n), ("r_eq", r_eq)] {
        ensure_finite(n, v)?;
    }
    if tau_n <= 0.0 || r_eq <= 0.0 {
        return Err(Error::invalid("tau_n and r_eq must be positive"));
    }
    if f_frac < f0_b {
        return Err(Error::invalid(format!(
            "fracture force {f_frac} is below the load-independent part {f0_b}"
        )));
    }
    Ok((f_frac - f0_b) / (std::f64::consts::PI * tau_n * r_eq))
}

/// Fracture force `tau_n·pi·R_eq·d + f0_b` of a bond grown to indentation `d`.
pub fn indentation_to_sintering(d: f64, f0_b: f64, tau_n: f64, r_eq: f64) -> f64 {
    tau_n * std::f64::consts::PI * r_eq * d + f0_b
}

/// Which of `(k_i, k_d, c_i, c_d)` stay at their initial value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedParams {
    pub k_i: bool,
    pub k_d: bool,
    pub c_i: bool,
    pub c_d: bool,
}

impl FixedParams {
    pub const NONE: FixedParams = FixedParams {
        k_i: false,
        k_d: false,
        c_i: false,
        c_d: false,
    };
    pub const K_I: FixedParams = FixedParams {
        k_i: true,
        ..FixedParams::NONE
    };

    fn free(&self) -> Vec<usize> {
        [self.k_i, self.k_d, self.c_i, self.c_d]
            .iter()
            .enumerate()
            .filter(|(_, fixed)| !**fixed)
            .map(|(k, _)| k)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: BurgersParams,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm after each accepted step.
    pub history: Vec<f64>,
    /// Model minus data at each sample, in data units.
    pub residuals: Vec<f64>,
}

/// Indentation-time creep data under a constant load.
#[derive(Debug, Clone, PartialEq)]
pub struct CreepCurve {
    pub load: f64,
    pub times: Vec<f64>,
    pub indentation: Vec<f64>,
}

fn creep(p: &[f64; 4], load: f64, t: f64) -> f64 {
    let [k_i, k_d, c_i, c_d] = *p;
    load * (1.0 / k_i + t / c_i + (1.0 - (-t * k_d / c_d).exp()) / k_d)
}

/// Partial derivatives of the creep curve with respect to the logarithms of
/// `(k_i, k_d, c_i, c_d)`.
pub fn creep_log_gradient(params: &BurgersParams, load: f64, t: f64) -> [f64; 4] {
    let (k_i, k_d, c_i, c_d) = (params.k_i, params.k_d, params.c_i, params.c_d);
    let e = (-t * k_d / c_d).exp();
    [
        -load / k_i,
        load * (-(1.0 - e) / k_d + t / c_d * e),
        -load * t / c_i,
        -load * t / c_d * e,
    ]
}

struct CreepProblem<'a> {
    curve: &'a CreepCurve,
    base: [f64; 4],
    free: Vec<usize>,
    scale: f64,
}

impl CreepProblem<'_> {
    fn params(&self, x: &DVector<f64>) -> [f64; 4] {
        let mut p = self.base;
        for (k, &i) in self.free.iter().enumerate() {
            p[i] = x[k].exp();
        }
        p
    }
}

impl LeastSquares for CreepProblem<'_> {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.params(x);
        DVector::from_iterator(
            self.curve.times.len(),
            self.curve
                .times
                .iter()
                .zip(&self.curve.indentation)
                .map(|(&t, &d)| (creep(&p, self.curve.load, t) - d) / self.scale),
        )
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let [k_i, k_d, c_i, c_d] = self.params(x);
        let bp = BurgersParams {
            k_i,
            k_d,
            c_i,
            c_d,
            f0_b: 0.0,
            t_ref: 0.0,
        };
        let mut j = DMatrix::zeros(self.curve.times.len(), self.free.len());
        for (r, &t) in self.curve.times.iter().enumerate() {
            let g = creep_log_gradient(&bp, self.curve.load, t);
            for (c, &i) in self.free.iter().enumerate() {
                j[(r, c)] = g[i] / self.scale;
            }
        }
        j
    }
}

/// Fits the closed-form creep curve to indentation data, in log parameters
/// so the constants stay positive.
pub fn fit_creep_curve(
    curve: &CreepCurve,
    init: &BurgersParams,
    fixed: FixedParams,
    opts: &DlsOptions,
) -> Result<FitResult> {
    init.validate()?;
    if curve.times.len() != curve.indentation.len() {
        return Err(Error::invalid("creep curve: times and indentations differ in length"));
    }
    let free = fixed.free();
    if free.is_empty() {
        return Err(Error::invalid("all parameters fixed; nothing to fit"));
    }
    if curve.times.len() < free.len() {
        return Err(Error::invalid(format!(
            "{} samples cannot determine {} parameters",
            curve.times.len(),
            free.len()
        )));
    }
    let rms = (curve.indentation.iter().map(|d| d * d).sum::<f64>() / curve.indentation.len() as f64).sqrt();
    let problem = CreepProblem {
        curve,
        base: [init.k_i, init.k_d, init.c_i, init.c_d],
        free: free.clone(),
        scale: if rms > 0.0 { rms } else { 1.0 },
    };
    let x0 = DVector::from_iterator(free.len(), free.iter().map(|&i| problem.base[i].ln()));
    let rep = damped_least_squares(&problem, x0, opts);
    let [k_i, k_d, c_i, c_d] = problem.params(&rep.x);
    let params = BurgersParams {
        k_i,
        k_d,
        c_i,
        c_d,
        ..*init
    };
    let residuals = problem.residuals(&rep.x).iter().map(|r| r * problem.scale).collect();
    Ok(FitResult {
        params,
        residual_norm: rep.residual_norm * problem.scale,
        iterations: rep.iterations,
        converged: rep.converged && params.validate().is_ok(),
        history: rep.history.iter().map(|h| h * problem.scale).collect(),
        residuals,
    })
}

/// Converts a fracture-force time series into indentations and fits the
/// Burgers constants. `init.f0_b` is the load-independent part subtracted
/// from every sample unless the dataset carries its own.
pub fn fit_burgers_dls(
    data: &SinteringDataset,
    init: &BurgersParams,
    fixed: FixedParams,
) -> Result<FitResult> {
    data.validate()?;
    if data.axis != SampleAxis::Time {
        return Err(Error::invalid("Burgers fit needs a time-series dataset"));
    }
    let f0 = data.f0_b.unwrap_or(init.f0_b);
    let indentation = data
        .samples
        .iter()
        .map(|&(_, f)| sintering_to_indentation(f, f0, data.tau_n, data.r_eq))
        .collect::<Result<Vec<_>>>()?;
    let curve = CreepCurve {
        load: data.load.unwrap_or_default(),
        times: data.samples.iter().map(|s| s.0).collect(),
        indentation,
    };
    let mut fit = fit_creep_curve(&curve, init, fixed, &DlsOptions::default())?;
    fit.params.f0_b = f0;
    fit.params.t_ref = data.temperature;
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("linear fit needs at least two paired samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Degenerate("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Load-independent sintering force as the zero-load intercept of a load
/// sweep.
pub fn estimate_f0(data: &SinteringDataset) -> Result<LinearFit> {
    data.validate()?;
    if data.axis != SampleAxis::Load {
        return Err(Error::invalid("f0 estimation needs a load-sweep dataset"));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = data.samples.iter().copied().unzip();
    linear_fit(&x, &y)
}
