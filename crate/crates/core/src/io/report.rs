use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_bytes, write_atomic};
use crate::strain::{CardiacTiming, StrainCurve, StrainSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainRow {
    pub frame: usize,
    pub segment: String,
    pub strain_percent: f64,
}

/// Long-format strain table, frame-major.
pub fn strain_csv_string(curve: &StrainCurve<f64>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in 0..curve.n_frames() {
        for (label, values) in curve.segment_labels.iter().zip(&curve.values) {
            w.serialize(StrainRow {
                frame: t,
                segment: label.clone(),
                strain_percent: values[t],
            })
            .expect("in-memory csv");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

pub fn write_strain_csv(path: &Path, curve: &StrainCurve<f64>) -> Result<()> {
    write_atomic(path, strain_csv_string(curve).as_bytes())
}

/// Reads a strain table back; segments keep their first-seen order.
pub fn read_strain_csv(path: &Path, timing: CardiacTiming) -> Result<StrainCurve<f64>> {
    let bytes = read_bytes(path)?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let mut labels: Vec<String> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (i, row) in reader.deserialize::<StrainRow>().enumerate() {
        let row = row.map_err(|e| Error::format(format!("strain row {i}"), e.to_string()))?;
        let k = match labels.iter().position(|l| *l == row.segment) {
            Some(k) => k,
            None => {
                labels.push(row.segment.clone());
                values.push(Vec::new());
                labels.len() - 1
            }
        };
        if values[k].len() != row.frame {
            return Err(Error::format(
                format!("strain row {i}"),
                format!("frame {} out of order for segment {}", row.frame, row.segment),
            ));
        }
        values[k].push(row.strain_percent);
    }
    Ok(StrainCurve {
        segment_labels: labels,
        values,
        timing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub ed_index: usize,
    pub es_index: usize,
    pub segment_labels: Vec<String>,
    pub peak_systolic_sls: Vec<f64>,
    pub gls_curve: Vec<f64>,
    pub peak_gls: f64,
}

impl SummaryFile {
    pub fn new(summary: &StrainSummary<f64>, timing: CardiacTiming) -> Self {
        Self {
            ed_index: timing.ed_index,
            es_index: timing.es_index,
            segment_labels: summary.segment_labels.clone(),
            peak_systolic_sls: summary.peak_systolic_sls.clone(),
            gls_curve: summary.gls_curve.clone(),
            peak_gls: summary.peak_gls,
        }
    }
}

pub fn write_summary_json(path: &Path, summary: &SummaryFile) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(summary).expect("summary serializes");
    text.push(b'\n');
    write_atomic(path, &text)
}

pub fn read_summary_json(path: &Path) -> Result<SummaryFile> {
    serde_json::from_slice(&read_bytes(path)?).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}
