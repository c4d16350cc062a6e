//! The `calibrate` workflow: dataset files in, parameter files out.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::calibration::{
    estimate_f0, fit_burgers_dls, fit_temperature_shifts, read_dataset, write_fit_report,
    write_parameters, FixedParams, SampleAxis,
};
use crate::error::{Error, Result};
use crate::material::MaterialModel;
use crate::rheology::{BurgersParams, WLF_REFERENCE_TEMPERATURE};

#[derive(Debug, Clone)]
pub struct CalibrateOptions {
    pub output_dir: Option<PathBuf>,
    /// Scale applied to the table constants used as the starting point.
    pub scale: f64,
    /// Fit `k_i` as well instead of holding it at its starting value.
    pub free_k_i: bool,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        CalibrateOptions {
            output_dir: None,
            scale: 1.0,
            free_k_i: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct InterceptFile {
    temperature: f64,
    f0_b: f64,
    slope: f64,
    r_squared: f64,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
}

fn write_toml<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Fits every dataset and, given at least three time series including the
/// reference temperature, the temperature shifts. Returns one report line per
/// result.
pub fn calibrate_files(paths: &[PathBuf], opts: &CalibrateOptions) -> Result<Vec<String>> {
    if paths.is_empty() {
        return Err(Error::invalid("no dataset given"));
    }
    if let Some(dir) = &opts.output_dir {
        std::fs::create_dir_all(dir)?;
    }
    let table = MaterialModel::wlf_from_table(opts.scale);
    let mut lines = Vec::new();
    let mut fits: Vec<(f64, BurgersParams)> = Vec::new();
    for path in paths {
        let data = read_dataset(path)?;
        let name = stem(path);
        match data.axis {
            SampleAxis::Load => {
                let fit = estimate_f0(&data)?;
                lines.push(format!(
                    "{name}: f0_b = {:.6e} N (slope {:.6e}, R^2 {:.4})",
                    fit.intercept, fit.slope, fit.r_squared
                ));
                if let Some(dir) = &opts.output_dir {
                    write_toml(
                        &InterceptFile {
                            temperature: data.temperature,
                            f0_b: fit.intercept,
                            slope: fit.slope,
                            r_squared: fit.r_squared,
                        },
                        &dir.join(format!("{name}.f0.toml")),
                    )?;
                }
            }
            SampleAxis::Time => {
                let init = table.params_at(data.temperature).map_err(|e| Error::Config {
                    path: path.clone(),
                    message: format!("no starting point at {} K: {e}", data.temperature),
                })?;
                let fixed = if opts.free_k_i { FixedParams::NONE } else { FixedParams::K_I };
                let fit = fit_burgers_dls(&data, &init, fixed)?;
                let p = fit.params;
                lines.push(format!(
                    "{name}: k_i = {:.6e}, k_d = {:.6e}, c_i = {:.6e}, c_d = {:.6e}, residual {:.3e}, {} iterations{}",
                    p.k_i,
                    p.k_d,
                    p.c_i,
                    p.c_d,
                    fit.residual_norm,
                    fit.iterations,
                    if fit.converged { "" } else { " (not converged)" }
                ));
                if let Some(dir) = &opts.output_dir {
                    write_parameters(&fit, &dir.join(format!("{name}.params.toml")))?;
                    write_fit_report(&data, &fit, &dir.join(format!("{name}.fit.csv")))?;
                }
                fits.push((data.temperature, p));
            }
        }
    }
    let has_reference = fits.iter().any(|(t, _)| (t - WLF_REFERENCE_TEMPERATURE).abs() < 1e-9);
    if fits.len() >= 3 && has_reference {
        let shifts = fit_temperature_shifts(&fits, WLF_REFERENCE_TEMPERATURE)?;
        for (label, c) in [
            ("c_d", shifts.delayed_viscosity),
            ("c_i", shifts.instantaneous_viscosity),
            ("t_r", shifts.relaxation_time),
        ] {
            lines.push(format!("WLF {label}: C1 = {:.4}, C2 = {:.4}", c.c1, c.c2));
        }
        if let Some(dir) = &opts.output_dir {
            write_toml(&shifts, &dir.join("shifts.toml"))?;
        }
    }
    Ok(lines)
}
