//! Dataset files and fit reports.
//!
//! A dataset is comma-separated text. Leading `# key = value` lines carry the
//! metadata (`temperature_K`, `r_eq_m`, `tau_n_Pa`, `load_N` or `duration_s`,
//! optionally `f0_N`); the header names the abscissa (`time_s` or `load_N`)
//! and `fracture_force_N`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::sintering::{FitResult, SampleAxis, SinteringDataset};
use crate::error::{Error, Result};

fn field_error(path: &Path, line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Field {
        path: path.to_path_buf(),
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

pub fn parse_dataset(text: &str, path: &Path) -> Result<SinteringDataset> {
    let mut meta: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let Some(rest) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        if let Some((key, value)) = rest.split_once('=') {
            meta.insert(key.trim().to_string(), (k + 1, value.trim().to_string()));
        }
    }
    let number = |key: &str| -> Result<Option<f64>> {
        match meta.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|e| field_error(path, *line, key, format!("`{v}`: {e}"))),
        }
    };
    let required = |key: &str| -> Result<f64> {
        number(key)?.ok_or_else(|| Error::Config {
            path: path.to_path_buf(),
            message: format!("missing metadata line `# {key} = ...`"),
        })
    };

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let (axis, x_col, x_name) = match (column("time_s"), column("load_N")) {
        (Some(c), _) => (SampleAxis::Time, c, "time_s"),
        (None, Some(c)) => (SampleAxis::Load, c, "load_N"),
        _ => {
            return Err(Error::Config {
                path: path.to_path_buf(),
                message: "header needs a `time_s` or `load_N` column".into(),
            })
        }
    };
    let f_col = column("fracture_force_N").ok_or_else(|| Error::Config {
        path: path.to_path_buf(),
        message: "header needs a `fracture_force_N` column".into(),
    })?;

    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let cell = |c: usize, name: &str| -> Result<f64> {
            let raw = record.get(c).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|e| field_error(path, line, name, format!("`{raw}`: {e}")))?;
            if !v.is_finite() {
                return Err(field_error(path, line, name, "not finite"));
            }
            Ok(v)
        };
        let x = cell(x_col, x_name)?;
        let f = cell(f_col, "fracture_force_N")?;
        if f < 0.0 {
            return Err(field_error(path, line, "fracture_force_N", "must be non-negative"));
        }
        if axis == SampleAxis::Time && x <= 0.0 {
            return Err(field_error(path, line, x_name, "must be positive"));
        }
        samples.push((x, f));
    }

    let data = SinteringDataset {
        temperature: required("temperature_K")?,
        r_eq: required("r_eq_m")?,
        tau_n: required("tau_n_Pa")?,
        axis,
        load: number("load_N")?,
        duration: number("duration_s")?,
        f0_b: number("f0_N")?,
        samples,
    };
    data.validate().map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(data)
}

pub fn read_dataset(path: &Path) -> Result<SinteringDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, path)
}

pub fn write_dataset(data: &SinteringDataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# temperature_K = {}\n", data.temperature));
    out.push_str(&format!("# r_eq_m = {}\n", data.r_eq));
    out.push_str(&format!("# tau_n_Pa = {}\n", data.tau_n));
    if let Some(l) = data.load {
        out.push_str(&format!("# load_N = {l}\n"));
    }
    if let Some(d) = data.duration {
        out.push_str(&format!("# duration_s = {d}\n"));
    }
    if let Some(f) = data.f0_b {
        out.push_str(&format!("# f0_N = {f}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let x = match data.axis {
        SampleAxis::Time => "time_s",
        SampleAxis::Load => "load_N",
    };
    w.write_record([x, "fracture_force_N"])?;
    for (a, b) in &data.samples {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    out.push_str(&String::from_utf8_lossy(&w.into_inner().map_err(|e| e.into_error())?));
    std::fs::write(path, out)?;
    Ok(())
}

/// Fitted constants in the form a scene config's `[material]` table reads.
#[derive(Debug, Clone, Serialize)]
pub struct ParameterFile {
    pub temperature: f64,
    pub k_i: f64,
    pub k_d: f64,
    pub c_i: f64,
    pub c_d: f64,
    pub f0_b: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&FitResult> for ParameterFile {
    fn from(fit: &FitResult) -> Self {
        let p = fit.params;
        ParameterFile {
            temperature: p.t_ref,
            k_i: p.k_i,
            k_d: p.k_d,
            c_i: p.c_i,
            c_d: p.c_d,
            f0_b: p.f0_b,
            residual_norm: fit.residual_norm,
            iterations: fit.iterations,
            converged: fit.converged,
        }
    }
}

pub fn write_parameters(fit: &FitResult, path: &Path) -> Result<()> {
    let text = toml::to_string(&ParameterFile::from(fit)).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Per-point residual report: abscissa, measured force, model force.
pub fn write_fit_report(data: &SinteringDataset, fit: &FitResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "fracture_force_N", "indentation_residual_m"])?;
    for ((x, f), r) in data.samples.iter().zip(&fit.residuals) {
        w.write_record([x.to_string(), f.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
