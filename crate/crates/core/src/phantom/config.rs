use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::View;

/// Parametric half-ellipse left ventricle. Axes are in millimetres; the
/// base plane sits at `base_center` and the apex lies `long_axis` deeper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Base-to-apex length of the mid-wall line.
    pub long_axis: f64,
    /// Basal diameter of the mid-wall line.
    pub short_axis: f64,
    pub wall_thickness: f64,
    /// Odd, so the apex is a vertex.
    pub vertices_per_contour: usize,
    pub base_center: [f64; 2],
    pub view: View,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            long_axis: 26.0,
            short_axis: 20.0,
            wall_thickness: 4.0,
            vertices_per_contour: 31,
            base_center: [16.0, 3.0],
            view: View::FourChamber,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.long_axis, self.short_axis, self.wall_thickness]
            .iter()
            .chain(&self.base_center)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Geometry("geometry values must be finite".into()));
        }
        if !(self.wall_thickness > 0.0) {
            return Err(Error::Geometry(format!(
                "wall_thickness must be positive, got {}",
                self.wall_thickness
            )));
        }
        if !(self.long_axis > self.short_axis && self.short_axis > self.wall_thickness) {
            return Err(Error::Geometry(format!(
                "need long_axis > short_axis > wall_thickness, got {} / {} / {}",
                self.long_axis, self.short_axis, self.wall_thickness
            )));
        }
        let n = self.vertices_per_contour;
        if n < 7 || n.is_multiple_of(2) {
            return Err(Error::Geometry(format!(
                "vertices_per_contour must be odd and at least 7, got {n}"
            )));
        }
        // Inner offset folds once half the wall exceeds the apical radius of curvature.
        let a = self.short_axis / 2.0;
        let apical_radius = a * a / self.long_axis;
        if apical_radius <= self.wall_thickness / 2.0 {
            return Err(Error::Geometry(format!(
                "apical radius of curvature {apical_radius:.3} mm cannot host a {} mm wall",
                self.wall_thickness
            )));
        }
        Ok(())
    }
}

/// Infarct centred on a segment, reducing longitudinal contraction with a
/// Gaussian profile in arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfarctSpec {
    pub segment_label: String,
    pub reduction_alpha: f64,
    /// Gaussian scale along the midline, mm.
    pub sigma: f64,
    /// Rescale shortening of the non-infarcted segments to keep total
    /// midline shortening unchanged.
    #[serde(default)]
    pub compensate: bool,
}

impl InfarctSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.reduction_alpha) {
            return Err(Error::validation(
                "infarct.reduction_alpha",
                format!("must lie in [0, 1], got {}", self.reduction_alpha),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::validation(
                "infarct.sigma",
                format!("must be positive, got {}", self.sigma),
            ));
        }
        Ok(())
    }
}

/// Serializable description of the cardiac cycle; see [`MotionModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionConfig {
    pub n_frames: usize,
    pub ed_index: usize,
    pub es_index: usize,
    pub peak_longitudinal_shortening: f64,
    pub peak_radial_thickening: f64,
    /// Explicit per-frame activation; a raised-cosine cycle when absent.
    pub temporal_profile: Option<Vec<f64>>,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            n_frames: 32,
            ed_index: 0,
            es_index: 12,
            peak_longitudinal_shortening: 0.20,
            peak_radial_thickening: 0.30,
            temporal_profile: None,
        }
    }
}

impl MotionConfig {
    pub fn to_model(&self) -> Result<MotionModel> {
        let profile = match &self.temporal_profile {
            Some(p) => p.clone(),
            None => raised_cosine_profile(self.n_frames, self.ed_index, self.es_index)?,
        };
        MotionModel::new(
            self.n_frames,
            self.ed_index,
            self.es_index,
            self.peak_longitudinal_shortening,
            self.peak_radial_thickening,
            profile,
        )
    }
}

/// Validated motion model. `temporal_profile[t]` is the contraction
/// activation at frame `t`: 0 at ED, 1 at ES.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    n_frames: usize,
    ed_index: usize,
    es_index: usize,
    peak_longitudinal_shortening: f64,
    peak_radial_thickening: f64,
    temporal_profile: Vec<f64>,
}

/// Largest allowed activation change between consecutive frames.
pub const MAX_PROFILE_JUMP: f64 = 0.5;

impl MotionModel {
    pub fn new(
        n_frames: usize,
        ed_index: usize,
        es_index: usize,
        peak_longitudinal_shortening: f64,
        peak_radial_thickening: f64,
        temporal_profile: Vec<f64>,
    ) -> Result<Self> {
        if !(ed_index < es_index && es_index < n_frames) {
            return Err(Error::validation(
                "motion.es_index",
                format!("need ed_index < es_index < n_frames, got {ed_index} / {es_index} / {n_frames}"),
            ));
        }
        if !(0.0..1.0).contains(&peak_longitudinal_shortening) {
            return Err(Error::validation(
                "motion.peak_longitudinal_shortening",
                format!("must lie in [0, 1), got {peak_longitudinal_shortening}"),
            ));
        }
        if !(peak_radial_thickening >= 0.0 && peak_radial_thickening.is_finite()) {
            return Err(Error::validation(
                "motion.peak_radial_thickening",
                format!("must be non-negative, got {peak_radial_thickening}"),
            ));
        }
        if temporal_profile.len() != n_frames {
            return Err(Error::validation(
                "motion.temporal_profile",
                format!("has {} entries for {n_frames} frames", temporal_profile.len()),
            ));
        }
        if temporal_profile.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::validation("motion.temporal_profile", "values must lie in [0, 1]"));
        }
        if temporal_profile[ed_index] != 0.0 || temporal_profile[es_index] != 1.0 {
            return Err(Error::validation(
                "motion.temporal_profile",
                "must be 0 at ED and 1 at ES",
            ));
        }
        // A rise from 0 to 1 in fewer than three steps cannot stay under the jump bound.
        if es_index - ed_index >= 3 {
            if let Some(t) = temporal_profile
                .windows(2)
                .position(|w| (w[1] - w[0]).abs() >= MAX_PROFILE_JUMP)
            {
                return Err(Error::validation(
                    "motion.temporal_profile",
                    format!("jumps by at least {MAX_PROFILE_JUMP} between frames {t} and {}", t + 1),
                ));
            }
        }
        Ok(Self {
            n_frames,
            ed_index,
            es_index,
            peak_longitudinal_shortening,
            peak_radial_thickening,
            temporal_profile,
        })
    }

    pub fn raised_cosine(
        n_frames: usize,
        ed_index: usize,
        es_index: usize,
        peak_longitudinal_shortening: f64,
        peak_radial_thickening: f64,
    ) -> Result<Self> {
        let profile = raised_cosine_profile(n_frames, ed_index, es_index)?;
        Self::new(
            n_frames,
            ed_index,
            es_index,
            peak_longitudinal_shortening,
            peak_radial_thickening,
            profile,
        )
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn ed_index(&self) -> usize {
        self.ed_index
    }

    pub fn es_index(&self) -> usize {
        self.es_index
    }

    pub fn peak_longitudinal_shortening(&self) -> f64 {
        self.peak_longitudinal_shortening
    }

    pub fn peak_radial_thickening(&self) -> f64 {
        self.peak_radial_thickening
    }

    pub fn temporal_profile(&self) -> &[f64] {
        &self.temporal_profile
    }

    pub fn activation(&self, t: usize) -> f64 {
        self.temporal_profile[t]
    }

    pub fn timing(&self) -> crate::strain::CardiacTiming {
        crate::strain::CardiacTiming {
            ed_index: self.ed_index,
            es_index: self.es_index,
        }
    }
}

/// 0 up to ED, raised cosine to 1 at ES, cosine return to 0 at the last frame.
pub fn raised_cosine_profile(n_frames: usize, ed_index: usize, es_index: usize) -> Result<Vec<f64>> {
    if !(ed_index < es_index && es_index < n_frames) {
        return Err(Error::validation(
            "motion.es_index",
            format!("need ed_index < es_index < n_frames, got {ed_index} / {es_index} / {n_frames}"),
        ));
    }
    use std::f64::consts::PI;
    let rise = (es_index - ed_index) as f64;
    let fall = (n_frames - 1 - es_index) as f64;
    Ok((0..n_frames)
        .map(|t| {
            if t <= ed_index {
                0.0
            } else if t < es_index {
                0.5 * (1.0 - (PI * (t - ed_index) as f64 / rise).cos())
            } else if t == es_index {
                1.0
            } else if t == n_frames - 1 {
                0.0
            } else {
                0.5 * (1.0 + (PI * (t - es_index) as f64 / fall).cos())
            }
        })
        .collect())
}
