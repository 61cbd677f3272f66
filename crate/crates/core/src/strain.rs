//! Segmental and global longitudinal strain from mesh sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polyline_length, MyocardialMesh, SegmentLayout};
use crate::scalar::Scalar;

/// End-diastole and end-systole frame indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardiacTiming {
    pub ed_index: usize,
    pub es_index: usize,
}

/// How the global curve is formed from the midline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlsMode {
    /// Change of total midline length. Equals the ED-length weighted mean of
    /// the segmental curves.
    #[default]
    TotalLength,
    /// Unweighted mean of the segmental curves.
    SegmentAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrainOptions {
    /// Centred moving average over segment lengths, in frames (odd). `None`
    /// disables smoothing.
    pub smoothing_width: Option<usize>,
    pub gls_mode: GlsMode,
}

/// Per-segment strain in percent, indexed `[segment][frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainCurve<T> {
    pub segment_labels: Vec<String>,
    pub values: Vec<Vec<T>>,
    pub timing: CardiacTiming,
}

impl<T: Scalar> StrainCurve<T> {
    pub fn n_frames(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn segment(&self, label: &str) -> Option<&[T]> {
        self.segment_labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.values[i].as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrainSummary<T> {
    pub segment_labels: Vec<String>,
    pub peak_systolic_sls: Vec<T>,
    pub gls_curve: Vec<T>,
    pub peak_gls: T,
}

fn validate_sequence<T: Scalar>(meshes: &[MyocardialMesh<T>], ed_index: usize) -> Result<()> {
    let first = meshes
        .first()
        .ok_or_else(|| Error::Sequence("empty mesh sequence".into()))?;
    if ed_index >= meshes.len() {
        return Err(Error::Bounds(format!(
            "ED index {ed_index} outside {} frames",
            meshes.len()
        )));
    }
    if let Some(t) = meshes
        .iter()
        .position(|m| m.vertex_count() != first.vertex_count() || m.apex_index() != first.apex_index())
    {
        return Err(Error::Structural(format!(
            "mesh at frame {t} does not share vertex count/apex with frame 0"
        )));
    }
    Ok(())
}

fn percent_change<T: Scalar>(length: T, reference: T) -> T {
    T::of(100.0) * (length - reference) / reference
}

/// Centred moving average with edge windows truncated to the sequence.
fn smooth<T: Scalar>(series: &[T], width: usize) -> Vec<T> {
    let half = width / 2;
    (0..series.len())
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = (t + half).min(series.len() - 1);
            let sum = series[lo..=hi].iter().fold(T::zero(), |a, &v| a + v);
            sum / T::of((hi - lo + 1) as f64)
        })
        .collect()
}

fn validate_width(width: Option<usize>) -> Result<Option<usize>> {
    match width {
        Some(w) if w == 0 || w % 2 == 0 => Err(Error::validation(
            "smoothing_width",
            format!("must be odd and positive, got {w}"),
        )),
        Some(1) | None => Ok(None),
        other => Ok(other),
    }
}

/// Midline segment lengths per frame, `[segment][frame]`.
pub fn segment_lengths<T: Scalar>(meshes: &[MyocardialMesh<T>], layout: &SegmentLayout) -> Result<Vec<Vec<T>>> {
    let mut per_segment = vec![Vec::with_capacity(meshes.len()); layout.segments().len()];
    for mesh in meshes {
        let midline = mesh.midline();
        for (s, len) in layout.segment_lengths(midline.points())?.into_iter().enumerate() {
            per_segment[s].push(len);
        }
    }
    Ok(per_segment)
}

pub fn compute_sls<T: Scalar>(
    meshes: &[MyocardialMesh<T>],
    layout: &SegmentLayout,
    timing: CardiacTiming,
) -> Result<StrainCurve<T>> {
    compute_sls_with(meshes, layout, timing, &StrainOptions::default())
}

pub fn compute_sls_with<T: Scalar>(
    meshes: &[MyocardialMesh<T>],
    layout: &SegmentLayout,
    timing: CardiacTiming,
    options: &StrainOptions,
) -> Result<StrainCurve<T>> {
    validate_sequence(meshes, timing.ed_index)?;
    if timing.es_index >= meshes.len() {
        return Err(Error::Bounds(format!(
            "ES index {} outside {} frames",
            timing.es_index,
            meshes.len()
        )));
    }
    let width = validate_width(options.smoothing_width)?;
    let mut lengths = segment_lengths(meshes, layout)?;
    if let Some(w) = width {
        lengths = lengths.iter().map(|l| smooth(l, w)).collect();
    }
    let mut values = Vec::with_capacity(lengths.len());
    for (segment, series) in layout.segments().iter().zip(&lengths) {
        let reference = series[timing.ed_index];
        if !(reference > T::zero()) {
            return Err(Error::DegenerateGeometry(format!(
                "segment `{}` has zero length at ED",
                segment.label
            )));
        }
        values.push(series.iter().map(|&l| percent_change(l, reference)).collect());
    }
    Ok(StrainCurve {
        segment_labels: layout.labels().into_iter().map(String::from).collect(),
        values,
        timing,
    })
}

/// Global strain from the total midline length, in percent per frame.
pub fn compute_gls<T: Scalar>(meshes: &[MyocardialMesh<T>], ed_index: usize) -> Result<Vec<T>> {
    compute_gls_smoothed(meshes, ed_index, None)
}

pub fn compute_gls_smoothed<T: Scalar>(
    meshes: &[MyocardialMesh<T>],
    ed_index: usize,
    smoothing_width: Option<usize>,
) -> Result<Vec<T>> {
    validate_sequence(meshes, ed_index)?;
    let width = validate_width(smoothing_width)?;
    let mut totals: Vec<T> = meshes
        .iter()
        .map(|m| polyline_length(m.midline().points()))
        .collect();
    if let Some(w) = width {
        totals = smooth(&totals, w);
    }
    let reference = totals[ed_index];
    if !(reference > T::zero()) {
        return Err(Error::DegenerateGeometry("midline has zero length at ED".into()));
    }
    Ok(totals.iter().map(|&l| percent_change(l, reference)).collect())
}

/// Unweighted per-frame mean of the segmental curves.
pub fn segment_average_gls<T: Scalar>(curve: &StrainCurve<T>) -> Vec<T> {
    let n = T::of(curve.values.len() as f64);
    (0..curve.n_frames())
        .map(|t| curve.values.iter().fold(T::zero(), |a, s| a + s[t]) / n)
        .collect()
}

/// Global curve according to `options.gls_mode`.
pub fn gls_curve<T: Scalar>(
    meshes: &[MyocardialMesh<T>],
    curve: &StrainCurve<T>,
    options: &StrainOptions,
) -> Result<Vec<T>> {
    match options.gls_mode {
        GlsMode::TotalLength => compute_gls_smoothed(meshes, curve.timing.ed_index, options.smoothing_width),
        GlsMode::SegmentAverage => Ok(segment_average_gls(curve)),
    }
}

/// Signed value of largest magnitude over `[ed, es]` (either order).
pub fn systolic_peak<T: Scalar>(series: &[T], timing: CardiacTiming) -> T {
    let lo = timing.ed_index.min(timing.es_index);
    let hi = timing.ed_index.max(timing.es_index).min(series.len().saturating_sub(1));
    series[lo..=hi]
        .iter()
        .copied()
        .fold(T::zero(), |best, v| if v.abs() > best.abs() { v } else { best })
}

pub fn summarize<T: Scalar>(curve: &StrainCurve<T>, gls_curve: &[T]) -> StrainSummary<T> {
    StrainSummary {
        segment_labels: curve.segment_labels.clone(),
        peak_systolic_sls: curve
            .values
            .iter()
            .map(|s| systolic_peak(s, curve.timing))
            .collect(),
        gls_curve: gls_curve.to_vec(),
        peak_gls: systolic_peak(gls_curve, curve.timing),
    }
}
