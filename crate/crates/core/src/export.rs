//! CSV and JSON output for curves and simulation results.
//!
//! Curve CSV columns are `series,m,value,ci_half_width,method`; a missing
//! confidence half-width is an empty field. Simulation CSV appends a
//! `std_dev` column and starts with a `#` metadata line. Values are rounded
//! to 12 significant digits before they are written, so reading a file back
//! reproduces the records exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::simulator::{CurvePoint, CurveSeries, SimulationConfig, SimulationPoint};

pub const CURVE_HEADER: [&str; 5] = ["series", "m", "value", "ci_half_width", "method"];

/// Rounds to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// One row of curve output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub series: String,
    pub m: u64,
    pub value: f64,
    pub ci_half_width: Option<f64>,
    pub method: String,
}

/// Flattens series into rows (series order, then `m` order) with values
/// rounded for output.
pub fn records_from_series(series: &[CurveSeries]) -> Vec<OutputRecord> {
    series
        .iter()
        .flat_map(|s| {
            s.points.iter().map(move |pt| OutputRecord {
                series: s.label.clone(),
                m: pt.m,
                value: round_sig12(pt.value),
                ci_half_width: pt.ci_half_width.map(round_sig12),
                method: s.method.clone(),
            })
        })
        .collect()
}

pub fn write_records_csv<W: Write>(out: W, records: &[OutputRecord]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    writer.write_record(CURVE_HEADER)?;
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<OutputRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let records = reader
        .deserialize()
        .collect::<std::result::Result<Vec<OutputRecord>, _>>()?;
    Ok(records)
}

fn rounded(series: &[CurveSeries]) -> Vec<CurveSeries> {
    series
        .iter()
        .map(|s| CurveSeries {
            label: s.label.clone(),
            method: s.method.clone(),
            points: s
                .points
                .iter()
                .map(|pt| CurvePoint {
                    m: pt.m,
                    value: round_sig12(pt.value),
                    ci_half_width: pt.ci_half_width.map(round_sig12),
                })
                .collect(),
        })
        .collect()
}

/// `[{label, method, points: [{m, value, ci_half_width?}]}]`
pub fn write_series_json<W: Write>(mut out: W, series: &[CurveSeries]) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &rounded(series))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_series_json<R: Read>(input: R) -> Result<Vec<CurveSeries>> {
    Ok(serde_json::from_reader(input)?)
}

/// Run parameters echoed into simulation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMetadata {
    pub seed: u64,
    pub distribution: String,
    pub bins: usize,
    pub p: f64,
    pub repetitions: u32,
    pub test_size: u32,
}

impl SimulationMetadata {
    pub fn new(config: &SimulationConfig, distribution: impl Into<String>) -> Self {
        SimulationMetadata {
            seed: config.master_seed,
            distribution: distribution.into(),
            bins: config.num_bins(),
            p: config.majority_prob,
            repetitions: config.repetitions,
            test_size: config.test_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub series: String,
    pub m: u64,
    pub value: f64,
    pub ci_half_width: Option<f64>,
    pub method: String,
    pub std_dev: f64,
}

fn simulation_records(
    meta: &SimulationMetadata,
    points: &[SimulationPoint],
) -> Vec<SimulationRecord> {
    points
        .iter()
        .map(|p| SimulationRecord {
            series: meta.distribution.clone(),
            m: p.m,
            value: round_sig12(p.mean_accuracy),
            ci_half_width: Some(round_sig12(p.ci_half_width)),
            method: "simulated".to_string(),
            std_dev: round_sig12(p.std_dev),
        })
        .collect()
}

pub fn write_simulation_csv<W: Write>(
    mut out: W,
    meta: &SimulationMetadata,
    points: &[SimulationPoint],
) -> Result<()> {
    writeln!(
        out,
        "# seed={} distribution={} bins={} p={} repetitions={} test_size={}",
        meta.seed, meta.distribution, meta.bins, meta.p, meta.repetitions, meta.test_size
    )?;
    let mut writer = csv::Writer::from_writer(out);
    for r in simulation_records(meta, points) {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_simulation_csv<R: Read>(input: R) -> Result<Vec<SimulationRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let records = reader
        .deserialize()
        .collect::<std::result::Result<Vec<SimulationRecord>, _>>()?;
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationJsonPoint {
    pub m: u64,
    pub value: f64,
    pub ci_half_width: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationJsonSeries {
    pub label: String,
    pub method: String,
    pub points: Vec<SimulationJsonPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationJson {
    pub metadata: SimulationMetadata,
    pub series: Vec<SimulationJsonSeries>,
}

pub fn write_simulation_json<W: Write>(
    mut out: W,
    meta: &SimulationMetadata,
    points: &[SimulationPoint],
) -> Result<()> {
    let doc = SimulationJson {
        metadata: meta.clone(),
        series: vec![SimulationJsonSeries {
            label: meta.distribution.clone(),
            method: "simulated".to_string(),
            points: points
                .iter()
                .map(|p| SimulationJsonPoint {
                    m: p.m,
                    value: round_sig12(p.mean_accuracy),
                    ci_half_width: round_sig12(p.ci_half_width),
                    std_dev: round_sig12(p.std_dev),
                })
                .collect(),
        }],
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}
