//! CSV matrices with JSON sidecars.
//!
//! A matrix file has a first record `time,t_0,...,t_{n-1}` followed by one
//! record per row, `m,v_0,...,v_{n-1}`, where `m` is the direction or
//! measurement-point index. Floats are written in Rust's shortest
//! round-trip form. The sidecar `<stem>.json` holds everything else.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use ndarray::{Array2, ArrayView2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseRecord;
use crate::sphere::MeshSpec;
use crate::wavefield::{FarFieldMatrix, GaussianPointSource, NearFieldTrace, Source, TimeGrid};

const TIME_LABEL: &str = "time";

pub fn write_matrix_csv<W: Write>(out: W, times: &[f64], values: ArrayView2<'_, f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(false).from_writer(out);
    let mut record = Vec::with_capacity(times.len() + 1);
    record.push(TIME_LABEL.to_string());
    record.extend(times.iter().map(|t| t.to_string()));
    w.write_record(&record)?;
    for (m, row) in values.rows().into_iter().enumerate() {
        record.clear();
        record.push(m.to_string());
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: R) -> Result<(Vec<f64>, Array2<f64>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(input);
    let mut records = r.records();
    let head = records
        .next()
        .ok_or_else(|| Error::Malformed("matrix file is empty".into()))??;
    if head.get(0) != Some(TIME_LABEL) {
        return Err(Error::Malformed(format!(
            "first cell must be `{TIME_LABEL}`, found {:?}",
            head.get(0)
        )));
    }
    let times = parse_floats(&head, 0)?;
    let mut flat = Vec::new();
    let mut rows = 0;
    for rec in records {
        let rec = rec?;
        let label: usize = rec
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Malformed(format!("row {} has no integer index", rows + 1)))?;
        if label != rows {
            return Err(Error::Malformed(format!(
                "row {} is labelled {label}; rows must be numbered consecutively from 0",
                rows + 1
            )));
        }
        flat.extend(parse_floats(&rec, rows + 1)?);
        rows += 1;
    }
    let values = Array2::from_shape_vec((rows, times.len()), flat)
        .map_err(|e| Error::Malformed(e.to_string()))?;
    Ok((times, values))
}

fn parse_floats(rec: &csv::StringRecord, line: usize) -> Result<Vec<f64>> {
    rec.iter()
        .skip(1)
        .enumerate()
        .map(|(k, s)| {
            s.trim().parse::<f64>().map_err(|_| {
                Error::Malformed(format!("record {line}, column {}: `{s}` is not a number", k + 1))
            })
        })
        .collect()
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldHeader {
    pub grid: TimeGrid,
    pub mesh: MeshSpec,
    pub c0: f64,
    pub sources: Vec<Source>,
    pub noise: Option<NoiseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub grid: TimeGrid,
    pub c0: f64,
    pub points: Vec<Vector3<f64>>,
    pub sources: Vec<GaussianPointSource>,
    pub noise: Option<NoiseRecord>,
}

pub fn save_farfield(path: &Path, g: &FarFieldMatrix, header: &FarFieldHeader) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    write_matrix_csv(out, &g.grid.times(), g.values.view())?;
    write_json(&sidecar_path(path), header)
}

pub fn load_farfield(path: &Path) -> Result<(FarFieldMatrix, FarFieldHeader)> {
    let header: FarFieldHeader = read_json(&sidecar_path(path))?;
    let (times, values) = read_matrix_csv(BufReader::new(File::open(path)?))?;
    let grid = TimeGrid::from_times(&times)?;
    let mesh = header.mesh.build()?;
    let g = FarFieldMatrix::new(grid, mesh, values).map_err(|e| Error::Malformed(e.to_string()))?;
    Ok((g, header))
}

pub fn save_trace(path: &Path, trace: &NearFieldTrace, header: &TraceHeader) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    write_matrix_csv(out, &trace.grid.times(), trace.values.view())?;
    write_json(&sidecar_path(path), header)
}

pub fn load_trace(path: &Path) -> Result<(NearFieldTrace, TraceHeader)> {
    let header: TraceHeader = read_json(&sidecar_path(path))?;
    let (times, values) = read_matrix_csv(BufReader::new(File::open(path)?))?;
    let grid = TimeGrid::from_times(&times)?;
    let trace = NearFieldTrace::new(grid, header.points.clone(), values)
        .map_err(|e| Error::Malformed(e.to_string()))?;
    Ok((trace, header))
}
