//! Time-series and snapshot files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::Scene;
use crate::error::{Error, Result};

pub const TIMESERIES_FORMAT: &str = "snowdem-timeseries/1";
pub const SNAPSHOT_FORMAT: &str = "snowdem-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

/// One sample of a time series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub time: f64,
    pub values: Vec<f64>,
}

/// Named channels sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub channels: Vec<String>,
    pub records: Vec<TimeSeriesRecord>,
}

impl TimeSeries {
    pub fn new(channels: &[&str]) -> Self {
        TimeSeries {
            channels: channels.iter().map(|s| s.to_string()).collect(),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, time: f64, values: &[f64]) -> Result<()> {
        if values.len() != self.channels.len() {
            return Err(Error::invalid(format!(
                "record has {} values for {} channels",
                values.len(),
                self.channels.len()
            )));
        }
        if !time.is_finite() {
            return Err(Error::NonFinite(format!("time = {time}")));
        }
        if let Some((name, v)) = self
            .channels
            .iter()
            .zip(values)
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::NonFinite(format!("{name} = {v} at t = {time}")));
        }
        if self.records.last().is_some_and(|r| r.time >= time) {
            return Err(Error::invalid(format!("time {time} does not increase")));
        }
        self.records.push(TimeSeriesRecord {
            time,
            values: values.to_vec(),
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.channels.iter().position(|n| n == name)?;
        Some(self.records.iter().map(|r| r.values[c]).collect())
    }
}

/// Writes `# format` followed by a `time_s,<channels>` header and one row per
/// record. Floats are printed in shortest round-trip form.
pub fn write_timeseries(series: &TimeSeries, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec!["time_s".to_string()];
    header.extend(series.channels.iter().cloned());
    w.write_record(&header)?;
    for r in &series.records {
        let mut row = vec![r.time.to_string()];
        row.extend(r.values.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    let body = w.into_inner().map_err(|e| e.into_error())?;
    let mut out = format!("# format = {TIMESERIES_FORMAT}\n").into_bytes();
    out.extend(body);
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_timeseries(path: &Path) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("time_s") {
        return Err(Error::Config {
            path: path.to_path_buf(),
            message: "first column must be time_s".into(),
        });
    }
    let names: Vec<&str> = headers.iter().skip(1).collect();
    let mut series = TimeSeries::new(&names);
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut vals = Vec::with_capacity(rec.len());
        for (k, cell) in rec.iter().enumerate() {
            vals.push(cell.parse::<f64>().map_err(|e| Error::Field {
                path: path.to_path_buf(),
                line,
                field: headers.get(k).unwrap_or("?").to_string(),
                message: e.to_string(),
            })?);
        }
        series.push(vals[0], &vals[1..])?;
    }
    Ok(series)
}

#[derive(Serialize, Deserialize)]
struct Snapshot<S> {
    format: String,
    version: u32,
    scene: S,
}

/// Full scene state as JSON; reading it back restarts the run bit for bit.
pub fn write_snapshot(scene: &Scene, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(
        file,
        &Snapshot {
            format: SNAPSHOT_FORMAT.into(),
            version: SNAPSHOT_VERSION,
            scene,
        },
    )?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path)?;
    let snap: Snapshot<Scene> = serde_json::from_str(&text).map_err(|e| Error::Field {
        path: path.to_path_buf(),
        line: e.line(),
        field: "scene".into(),
        message: e.to_string(),
    })?;
    if snap.format != SNAPSHOT_FORMAT || snap.version != SNAPSHOT_VERSION {
        return Err(Error::Config {
            path: path.to_path_buf(),
            message: format!(
                "unsupported snapshot {} v{} (expected {SNAPSHOT_FORMAT} v{SNAPSHOT_VERSION})",
                snap.format, snap.version
            ),
        });
    }
    snap.scene.validate()?;
    Ok(snap.scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timeseries_rejects_bad_records() {
        let mut s = TimeSeries::new(&["a"]);
        s.push(0.0, &[1.0]).unwrap();
        assert!(s.push(0.0, &[1.0]).is_err());
        assert!(matches!(s.push(1.0, &[f64::NAN]), Err(Error::NonFinite(_))));
        assert!(s.push(1.0, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn timeseries_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut s = TimeSeries::new(&["force_N", "gap_m"]);
        s.push(0.1, &[1.0 / 3.0, -2.5e-17]).unwrap();
        s.push(0.2, &[std::f64::consts::PI, 0.0]).unwrap();
        write_timeseries(&s, &p).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("# format"));
        assert_eq!(read_timeseries(&p).unwrap(), s);
    }
}
