//! Dataset files: a CSV with header `time,event,z1,...,zp` and a JSON sidecar
//! holding the generation metadata.

use std::fs::File;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::{GenerationMeta, StepFunction, SurvivalDataset};
use crate::{Error, Result};

/// `data.csv` → `data.meta.json`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Writes the dataset CSV and, when present, its metadata sidecar.
///
/// Floats are written with Rust's shortest round-trip formatting, so reading
/// the file back reproduces every value bit for bit.
pub fn write_dataset(path: &Path, data: &SurvivalDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["time".to_string(), "event".to_string()];
    header.extend((1..=data.p()).map(|j| format!("z{j}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    let z = data.covariates();
    let mut row = Vec::with_capacity(data.p() + 2);
    for i in 0..data.n() {
        row.clear();
        row.push(data.times()[i].to_string());
        row.push(if data.events()[i] { "1" } else { "0" }.to_string());
        row.extend(z.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    if let Some(meta) = data.meta() {
        let mp = meta_path(path);
        let f = File::create(&mp).map_err(|e| Error::io(&mp, e))?;
        serde_json::to_writer_pretty(f, meta).map_err(|e| Error::Parse(format!("{}: {e}", mp.display())))?;
    }
    Ok(())
}

/// Reads a dataset CSV; the sidecar is attached if it exists.
pub fn read_dataset(path: &Path) -> Result<SurvivalDataset> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 3 || &header[0] != "time" || &header[1] != "event" {
        return Err(Error::Parse(format!(
            "{}: expected header time,event,z1,...,zp",
            path.display()
        )));
    }
    let p = header.len() - 2;
    let mut times = Vec::new();
    let mut events = Vec::new();
    let mut z = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let field = |k: usize| -> Result<f64> {
            rec[k].trim().parse::<f64>().map_err(|e| {
                Error::Parse(format!(
                    "{} row {}: column {}: {e}",
                    path.display(),
                    line + 1,
                    &header[k]
                ))
            })
        };
        times.push(field(0)?);
        events.push(match rec[1].trim() {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Parse(format!(
                    "{} row {}: event must be 0 or 1, got {other:?}",
                    path.display(),
                    line + 1
                )))
            }
        });
        for k in 0..p {
            z.push(field(k + 2)?);
        }
    }
    let n = times.len();
    let data = SurvivalDataset::new(times, events, DMatrix::from_row_slice(n, p, &z))?;
    let mp = meta_path(path);
    if mp.exists() {
        let f = File::open(&mp).map_err(|e| Error::io(&mp, e))?;
        let meta: GenerationMeta =
            serde_json::from_reader(f).map_err(|e| Error::Parse(format!("{}: {e}", mp.display())))?;
        return Ok(data.with_meta(meta));
    }
    Ok(data)
}

/// Writes a step function as `time,<value_column>` rows.
pub fn write_step(path: &Path, step: &StepFunction, value_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["time", value_column]).map_err(|e| csv_error(path, e))?;
    for (t, v) in step.jump_times().iter().zip(step.values()) {
        w.write_record([t.to_string(), v.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a single column of values with a header.
pub fn write_column(path: &Path, column: &str, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record([column]).map_err(|e| csv_error(path, e))?;
    for v in values {
        w.write_record([v.to_string()]).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads the first column of a CSV with a header row, as written by
/// [`write_column`].
pub fn read_column(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let v = rec
            .get(0)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Parse(format!("{}: row {}: expected a number", path.display(), line + 1)))?;
        out.push(v);
    }
    Ok(out)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}
