use std::path::Path;

use myostrain::evaluation::TABLE_I_RATIOS;
use myostrain::geometry::{parse_levels, Level};
use myostrain::pipeline::{SimulationConfig, TrackingMode};
use myostrain::speckle::RenderMode;
use myostrain::strain::StrainOptions;
use myostrain::tracking::TrackerConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Everything a run needs, read from TOML and then overridden by flags.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub simulation: SimulationConfig,
    pub tracker: TrackerConfig,
    pub strain: StrainOptions,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub ratios: Vec<f64>,
    pub seeds: usize,
    pub mode: TrackingMode,
    /// Empty means every level.
    pub levels: Vec<Level>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            ratios: TABLE_I_RATIOS.to_vec(),
            seeds: 10,
            mode: TrackingMode::Trajectory,
            levels: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.simulation.validate()?;
        self.tracker.validate()?;
        for &r in &self.sweep.ratios {
            if !(0.0..=1.0).contains(&r) {
                return Err(CliError::Config(format!("sweep.ratios: {r} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn force_deterministic(&mut self) {
        self.simulation.render.mode = RenderMode::Deterministic;
    }
}

pub fn parse_ratios(list: &str) -> CliResult<Vec<f64>> {
    let ratios: Vec<f64> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("--ratios: `{}` is not a number", s.trim())))
        })
        .collect::<CliResult<_>>()?;
    if ratios.is_empty() {
        return Err(CliError::Config("--ratios: empty list".into()));
    }
    if let Some(r) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(CliError::Config(format!("--ratios: {r} outside [0, 1]")));
    }
    Ok(ratios)
}

pub fn levels_flag(list: Option<&str>) -> CliResult<Option<Vec<Level>>> {
    list.map(|l| parse_levels(l).map_err(CliError::from)).transpose()
}
