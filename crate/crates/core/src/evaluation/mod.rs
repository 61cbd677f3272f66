//! Tracking and strain accuracy: distance errors, Bland-Altman agreement
//! and decorrelation sweeps.

mod agreement;
mod distance;
mod sweep;

pub use agreement::{bland_altman, infarcted_segments, AgreementReport, INFARCT_SLS_THRESHOLD, LOA_Z};
pub use distance::{mean_distance_error, DistanceErrorReport};
pub use sweep::{
    decorrelation_sweep, AgreementRow, CellSummary, SweepConfig, SweepReport, SweepRow, TABLE_I_RATIOS,
};
