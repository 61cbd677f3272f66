//! End-to-end helpers: phantom configuration to rendered frames, tracked
//! meshes and their evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{mean_distance_error, DistanceErrorReport};
use crate::geometry::{MyocardialMesh, SegmentLayout};
use crate::phantom::{
    advance_scatterers, seed_scatterers, GeometryConfig, GroundTruth, InfarctSpec, MotionConfig, Phantom,
    ScattererConfig, ScattererField,
};
use crate::speckle::{render_sequence, BModeFrame, RenderConfig};
use crate::strain::{compute_sls_with, gls_curve, summarize, StrainCurve, StrainOptions, StrainSummary};
use crate::tracking::{estimate_sequence_flow, propagate_mesh_flow, track_points, TrackerConfig};

/// Everything needed to synthesize one phantom sequence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub geometry: GeometryConfig,
    pub motion: MotionConfig,
    #[serde(rename = "infarct")]
    pub infarcts: Vec<InfarctSpec>,
    pub scatterers: ScattererConfig,
    pub render: RenderConfig,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.motion.to_model()?;
        for inf in &self.infarcts {
            inf.validate()?;
        }
        self.scatterers.validate()?;
        self.render.validate()
    }

    pub fn phantom(&self) -> Result<Phantom> {
        self.validate()?;
        Phantom::new(&self.geometry, &self.motion.to_model()?, &self.infarcts)
    }
}

/// A synthesized sequence with its ground truth.
#[derive(Debug, Clone)]
pub struct SimulatedCase {
    pub phantom: Phantom,
    pub ground_truth: GroundTruth,
    pub scatterers: Vec<ScattererField>,
    pub frames: Vec<BModeFrame>,
}

pub fn simulate(config: &SimulationConfig, seed: u64) -> Result<SimulatedCase> {
    let phantom = config.phantom()?;
    let ground_truth = phantom.ground_truth()?;
    let [fov_w, fov_h] = config.render.grid.field_of_view();
    let ed = phantom.motion.ed_mesh();
    let out_of_view = ed
        .vertices()
        .any(|p| p.x < 0.0 || p.y < 0.0 || p.x > fov_w || p.y > fov_h);
    if out_of_view {
        return Err(Error::validation(
            "render.grid",
            format!("a {fov_w} x {fov_h} mm grid does not cover the phantom"),
        ));
    }
    let seeded = seed_scatterers(ed, &config.scatterers, Some([fov_w, fov_h]), seed)?;
    let scatterers: Vec<ScattererField> = (0..phantom.n_frames())
        .into_par_iter()
        .map(|t| advance_scatterers(&seeded, t, &phantom.motion, seed))
        .collect::<Result<_>>()?;
    let frames = render_sequence(&scatterers, &config.render)?;
    Ok(SimulatedCase {
        phantom,
        ground_truth,
        scatterers,
        frames,
    })
}

/// Built-in estimation modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackingMode {
    /// Dense flow between consecutive frames, warping the ED mesh.
    Flow,
    /// Per-vertex template tracking from the ES mesh.
    #[default]
    Trajectory,
}

impl std::fmt::Display for TrackingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrackingMode::Flow => "flow",
            TrackingMode::Trajectory => "trajectory",
        })
    }
}

/// Meshes for every frame estimated from `frames`, seeded with the
/// reference mesh of the mode's anchor frame (ED for flow, ES for
/// trajectories).
pub fn track_sequence(
    frames: &[BModeFrame],
    reference: &[MyocardialMesh<f64>],
    ed_index: usize,
    es_index: usize,
    mode: TrackingMode,
    tracker: &TrackerConfig,
) -> Result<Vec<MyocardialMesh<f64>>> {
    match mode {
        TrackingMode::Flow => {
            let fields = estimate_sequence_flow(frames, tracker)?;
            propagate_mesh_flow(&reference[ed_index], &fields, frames.len())
        }
        TrackingMode::Trajectory => {
            let query = &reference[es_index];
            track_points(frames, query, tracker)?.to_meshes(query.apex_index())
        }
    }
}

/// Tracking and strain accuracy of one estimated sequence.
#[derive(Debug, Clone)]
pub struct CaseEvaluation {
    pub distance: DistanceErrorReport<f64>,
    pub sls: StrainCurve<f64>,
    pub summary: StrainSummary<f64>,
    pub reference_summary: StrainSummary<f64>,
}

pub fn evaluate_meshes(
    estimated: &[MyocardialMesh<f64>],
    ground_truth: &GroundTruth,
    layout: &SegmentLayout,
    options: &StrainOptions,
) -> Result<CaseEvaluation> {
    let distance = mean_distance_error(estimated, &ground_truth.meshes, Some(layout))?;
    let sls = compute_sls_with(estimated, layout, ground_truth.timing, options)?;
    let gls = gls_curve(estimated, &sls, options)?;
    let summary = summarize(&sls, &gls);
    let reference_summary = summarize(&ground_truth.reference_sls, &ground_truth.reference_gls);
    Ok(CaseEvaluation {
        distance,
        sls,
        summary,
        reference_summary,
    })
}

/// Simulates, tracks and evaluates one seed.
pub fn run_case(
    config: &SimulationConfig,
    seed: u64,
    mode: TrackingMode,
    tracker: &TrackerConfig,
    options: &StrainOptions,
) -> Result<CaseEvaluation> {
    let case = simulate(config, seed)?;
    let timing = case.ground_truth.timing;
    let tracked = track_sequence(
        &case.frames,
        &case.ground_truth.meshes,
        timing.ed_index,
        timing.es_index,
        mode,
        tracker,
    )?;
    evaluate_meshes(&tracked, &case.ground_truth, &case.phantom.layout, options)
}
