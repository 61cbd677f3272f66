use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{build_segment_layout, MyocardialMesh, Point2D, SegmentLayout};
use crate::phantom::config::{GeometryConfig, InfarctSpec, MotionModel};
use crate::phantom::ellipse::generate_ed_mesh;
use crate::phantom::kinematics::MotionField;
use crate::strain::{compute_gls, compute_sls, CardiacTiming, StrainCurve};
use crate::tracking::{DisplacementField, PointTrajectories};

/// Analytic phantom: ED geometry, segment layout and the motion field.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub geometry: GeometryConfig,
    pub layout: SegmentLayout,
    pub motion: MotionField,
}

impl Phantom {
    pub fn new(geometry: &GeometryConfig, model: &MotionModel, infarcts: &[InfarctSpec]) -> Result<Self> {
        let ed_mesh = generate_ed_mesh(geometry, model.ed_index())?;
        let layout = build_segment_layout(ed_mesh.midline().points(), ed_mesh.apex_index(), geometry.view)?;
        let motion = MotionField::new(&ed_mesh, &layout, model, infarcts)?;
        Ok(Self {
            geometry: geometry.clone(),
            layout,
            motion,
        })
    }

    pub fn timing(&self) -> CardiacTiming {
        self.motion.model().timing()
    }

    pub fn n_frames(&self) -> usize {
        self.motion.model().n_frames()
    }

    pub fn meshes(&self) -> Result<Vec<MyocardialMesh<f64>>> {
        (0..self.n_frames())
            .into_par_iter()
            .map(|t| self.motion.mesh_at(t))
            .collect()
    }

    pub fn ground_truth(&self) -> Result<GroundTruth> {
        let meshes = self.meshes()?;
        let timing = self.timing();
        let trajectories = PointTrajectories::from_midlines(&meshes, timing.ed_index)?;
        let reference_sls = compute_sls(&meshes, &self.layout, timing)?;
        let reference_gls = compute_gls(&meshes, timing.ed_index)?;
        Ok(GroundTruth {
            meshes,
            trajectories,
            layout: self.layout.clone(),
            timing,
            reference_sls,
            reference_gls,
        })
    }

    /// Exact frame-to-frame motion sampled on a pixel grid. Pixels within
    /// one and a half half-walls of the mid-wall line (and slightly past the
    /// base) move with the tissue; everything else is static.
    pub fn analytic_flow(
        &self,
        from_frame: usize,
        to_frame: usize,
        width: usize,
        height: usize,
        pixel_pitch: f32,
    ) -> Result<DisplacementField> {
        if from_frame >= self.n_frames() || to_frame >= self.n_frames() {
            return Err(Error::Bounds(format!("frames {from_frame} -> {to_frame} outside the cycle")));
        }
        let source = self.motion.frame_at(from_frame);
        let target = self.motion.frame_at(to_frame);
        let pitch = pixel_pitch as f64;
        let vectors = (0..width * height)
            .into_par_iter()
            .map(|i| {
                let p = Point2D::new((i % width) as f64 * pitch, (i / width) as f64 * pitch);
                match source.locate(p, ANALYTIC_FLOW_REACH, true) {
                    Some(c) => {
                        let d = (target.position(c) - p) * (1.0 / pitch);
                        [d.x as f32, d.y as f32]
                    }
                    None => [0.0, 0.0],
                }
            })
            .collect();
        DisplacementField::new(width, height, pixel_pitch, from_frame, to_frame, vectors)
    }
}

/// Extent of the analytic flow around the wall, in half-wall units.
pub const ANALYTIC_FLOW_REACH: f64 = 1.5;

/// Reference motion and strain of a phantom cycle.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub meshes: Vec<MyocardialMesh<f64>>,
    /// Mid-wall vertex trajectories, anchored at ED.
    pub trajectories: PointTrajectories,
    pub layout: SegmentLayout,
    pub timing: CardiacTiming,
    pub reference_sls: StrainCurve<f64>,
    pub reference_gls: Vec<f64>,
}

pub fn build_ground_truth(
    geometry: &GeometryConfig,
    model: &MotionModel,
    infarcts: &[InfarctSpec],
) -> Result<GroundTruth> {
    Phantom::new(geometry, model, infarcts)?.ground_truth()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_is_static() {
        let model = MotionModel::raised_cosine(10, 0, 4, 0.0, 0.0).unwrap();
        let gt = build_ground_truth(&GeometryConfig::default(), &model, &[]).unwrap();
        for m in &gt.meshes {
            assert_eq!(m.endo(), gt.meshes[0].endo());
            assert_eq!(m.epi(), gt.meshes[0].epi());
        }
    }

    #[test]
    fn uniform_strain_at_es() {
        let model = MotionModel::raised_cosine(32, 0, 12, 0.2, 0.3).unwrap();
        let gt = build_ground_truth(&GeometryConfig::default(), &model, &[]).unwrap();
        for s in &gt.reference_sls.values {
            assert!((s[12] + 20.0).abs() < 1e-6);
        }
        assert!((gt.reference_gls[12] + 20.0).abs() < 1e-6);
    }

    #[test]
    fn trajectories_match_meshes() {
        let model = MotionModel::raised_cosine(8, 0, 4, 0.2, 0.3).unwrap();
        let gt = build_ground_truth(&GeometryConfig::default(), &model, &[]).unwrap();
        for (t, m) in gt.meshes.iter().enumerate() {
            assert_eq!(gt.trajectories.frame(t), m.midline().points());
        }
    }

    #[test]
    fn last_frame_returns_to_ed() {
        let model = MotionModel::raised_cosine(16, 0, 6, 0.2, 0.3).unwrap();
        let gt = build_ground_truth(&GeometryConfig::default(), &model, &[]).unwrap();
        let (first, last) = (&gt.meshes[0], &gt.meshes[15]);
        for (a, b) in first.vertices().zip(last.vertices()) {
            assert!(a.distance(b) < 1e-9);
        }
    }
}
