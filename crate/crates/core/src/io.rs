//! CSV formats.
//!
//! Time series: header `t,<species...>`, one row per snapshot time.
//! Trace: header `step,loss,theta_0,...,theta_{d-1}`.
//! Summary: header `run,seed,initial_loss,final_loss,reactions`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::SpeciesSet;
use crate::optimizer::ConvergenceTrace;
use crate::scalar::Scalar;
use crate::ssa::{SnapshotGrid, TimeSeries};

pub fn write_time_series<F: Scalar, W: Write>(series: &TimeSeries<F>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(series.species().names().iter().cloned());
    w.write_record(&header)?;
    for (k, &t) in series.grid().times().iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(series.row(k).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_time_series<F: Scalar, R: Read>(input: R) -> Result<TimeSeries<F>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let header = r.headers()?.clone();
    match header.get(0) {
        Some("t") | Some("time") => {}
        other => {
            return Err(Error::parse(
                1,
                format!("first column must be `t`, found {:?}", other.unwrap_or("")),
            ))
        }
    }
    let species =
        SpeciesSet::new(header.iter().skip(1)).map_err(|e| Error::parse(1, format!("bad species header: {e}")))?;
    let width = header.len();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(Error::parse(
                line,
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        for (i, field) in record.iter().enumerate() {
            let v: F = field
                .parse()
                .map_err(|_| Error::parse(line, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(line, format!("non-finite value {field:?}")));
            }
            if i == 0 {
                times.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let grid = SnapshotGrid::new(times).map_err(|e| Error::parse(0, e.to_string()))?;
    TimeSeries::new(grid, species, values)
}

pub fn write_trace<F: Scalar, W: Write>(trace: &ConvergenceTrace<F>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = trace.records.first().map_or(0, |r| r.theta.len());
    let mut header = vec!["step".to_string(), "loss".to_string()];
    header.extend((0..dim).map(|i| format!("theta_{i}")));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.step.to_string(), r.loss.to_string()];
        row.extend(r.theta.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary<F> {
    pub run: usize,
    pub seed: u64,
    pub initial_loss: F,
    pub final_loss: F,
    pub reactions: usize,
}

pub fn write_summary<F: Scalar, W: Write>(runs: &[RunSummary<F>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "seed", "initial_loss", "final_loss", "reactions"])?;
    for s in runs {
        w.write_record([
            s.run.to_string(),
            s.seed.to_string(),
            s.initial_loss.to_string(),
            s.final_loss.to_string(),
            s.reactions.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Opens `path` for buffered writing, creating parent directories.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn load_time_series<F: Scalar>(path: &Path) -> Result<TimeSeries<F>> {
    read_time_series(File::open(path)?)
}

pub fn save_time_series<F: Scalar>(series: &TimeSeries<F>, path: &Path) -> Result<()> {
    write_time_series(series, create(path)?)
}
