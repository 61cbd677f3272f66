use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::agreement::bland_altman;
use crate::evaluation::distance::mean_and_sample_sd;
use crate::geometry::Level;
use crate::pipeline::{run_case, CaseEvaluation, SimulationConfig, TrackingMode};
use crate::strain::StrainOptions;
use crate::tracking::TrackerConfig;

/// Coherence ratios of the four decorrelation levels.
pub const TABLE_I_RATIOS: [f64; 4] = [0.9, 0.7, 0.6, 0.5];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub simulation: SimulationConfig,
    pub tracker: TrackerConfig,
    pub mode: TrackingMode,
    pub strain: StrainOptions,
    /// Segment levels included in agreement rows; all when empty.
    pub levels: Vec<Level>,
}

/// One (ratio, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub seed: u64,
    pub mean_error_mm: f64,
    pub sd_error_mm: f64,
    pub reference_peak_gls: f64,
    pub estimated_peak_gls: f64,
}

/// Seeds of one ratio pooled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub ratio: f64,
    pub n_seeds: usize,
    /// Mean over seeds of the sequence-mean distance error.
    pub mean_error_mm: f64,
    /// SD over seeds of the sequence-mean distance error.
    pub sd_error_mm: f64,
}

/// Bland-Altman agreement of peak strain (estimated vs reference).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub ratio: f64,
    /// Segment level, or `gls`.
    pub level: String,
    pub bias: f64,
    pub sd_of_differences: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellSummary>,
    /// One row per (ratio, level).
    pub agreement: Vec<AgreementRow>,
    /// One row per ratio when at least two seeds ran.
    pub gls_agreement: Vec<AgreementRow>,
}

fn csv_of<T: Serialize>(records: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

impl SweepReport {
    pub fn rows_csv(&self) -> String {
        csv_of(&self.rows)
    }

    pub fn cells_csv(&self) -> String {
        csv_of(&self.cells)
    }

    pub fn agreement_csv(&self) -> String {
        csv_of(&self.agreement)
    }

    pub fn gls_agreement_csv(&self) -> String {
        csv_of(&self.gls_agreement)
    }

    /// `ratio,seed,metric,value` records for plotting.
    pub fn long_format_csv(&self) -> String {
        #[derive(Serialize)]
        struct Long<'a> {
            ratio: f64,
            seed: u64,
            metric: &'a str,
            value: f64,
        }
        let mut out = Vec::with_capacity(self.rows.len() * 4);
        for r in &self.rows {
            for (metric, value) in [
                ("mean_error_mm", r.mean_error_mm),
                ("sd_error_mm", r.sd_error_mm),
                ("reference_peak_gls", r.reference_peak_gls),
                ("estimated_peak_gls", r.estimated_peak_gls),
            ] {
                out.push(Long {
                    ratio: r.ratio,
                    seed: r.seed,
                    metric,
                    value,
                });
            }
        }
        csv_of(&out)
    }

    pub fn cell(&self, ratio: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.ratio == ratio)
    }
}

fn agreement_row(ratio: f64, level: &str, pairs: &[(f64, f64)]) -> Result<AgreementRow> {
    let r = bland_altman(pairs)?;
    Ok(AgreementRow {
        ratio,
        level: level.to_string(),
        bias: r.bias,
        sd_of_differences: r.sd_of_differences,
        loa_low: r.loa_low,
        loa_high: r.loa_high,
        n_pairs: r.n_pairs,
    })
}

/// Runs every (ratio, seed) cell and aggregates distance errors and peak
/// strain agreement.
pub fn decorrelation_sweep(config: &SweepConfig, ratios: &[f64], seeds: &[u64]) -> Result<SweepReport> {
    if ratios.is_empty() {
        return Err(Error::validation("ratios", "at least one coherence ratio is required"));
    }
    if seeds.is_empty() {
        return Err(Error::validation("seeds", "at least one seed is required"));
    }
    config.tracker.validate()?;
    let cells: Vec<(f64, u64)> = ratios.iter().flat_map(|&r| seeds.iter().map(move |&s| (r, s))).collect();
    let results: Vec<CaseEvaluation> = cells
        .par_iter()
        .map(|&(ratio, seed)| {
            let mut sim = config.simulation.clone();
            sim.scatterers.coherence_ratio = ratio;
            run_case(&sim, seed, config.mode, &config.tracker, &config.strain)
        })
        .collect::<Result<_>>()?;

    let layout = config.simulation.phantom()?.layout;
    let levels: Vec<Level> = if config.levels.is_empty() {
        Level::ALL.to_vec()
    } else {
        config.levels.clone()
    };

    let rows: Vec<SweepRow> = cells
        .iter()
        .zip(&results)
        .map(|(&(ratio, seed), e)| SweepRow {
            ratio,
            seed,
            mean_error_mm: e.distance.sequence_mean,
            sd_error_mm: e.distance.sequence_sd,
            reference_peak_gls: e.reference_summary.peak_gls,
            estimated_peak_gls: e.summary.peak_gls,
        })
        .collect();

    let mut summaries = Vec::new();
    let mut agreement = Vec::new();
    let mut gls_agreement = Vec::new();
    for &ratio in ratios {
        let picked: Vec<&CaseEvaluation> = cells
            .iter()
            .zip(&results)
            .filter(|((r, _), _)| *r == ratio)
            .map(|(_, e)| e)
            .collect();
        let errors: Vec<f64> = picked.iter().map(|e| e.distance.sequence_mean).collect();
        let (mean, sd) = mean_and_sample_sd(&errors);
        summaries.push(CellSummary {
            ratio,
            n_seeds: picked.len(),
            mean_error_mm: mean,
            sd_error_mm: sd,
        });
        for &level in &levels {
            let pairs: Vec<(f64, f64)> = picked
                .iter()
                .flat_map(|e| {
                    layout
                        .segments()
                        .iter()
                        .enumerate()
                        .filter(move |(_, s)| s.level == level)
                        .map(move |(k, _)| (e.reference_summary.peak_systolic_sls[k], e.summary.peak_systolic_sls[k]))
                })
                .collect();
            agreement.push(agreement_row(ratio, level.name(), &pairs)?);
        }
        if picked.len() >= 2 {
            let pairs: Vec<(f64, f64)> = picked
                .iter()
                .map(|e| (e.reference_summary.peak_gls, e.summary.peak_gls))
                .collect();
            gls_agreement.push(agreement_row(ratio, "gls", &pairs)?);
        }
    }
    Ok(SweepReport {
        rows,
        cells: summaries,
        agreement,
        gls_agreement,
    })
}
