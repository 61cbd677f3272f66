//! Analytic left-ventricle phantom: geometry, cyclic motion, infarcts and
//! decorrelation-controlled scatterers.

mod config;
mod ellipse;
mod ground_truth;
mod kinematics;
mod scatterers;

pub use config::{
    raised_cosine_profile, GeometryConfig, InfarctSpec, MotionConfig, MotionModel, MAX_PROFILE_JUMP,
};
pub use ellipse::generate_ed_mesh;
pub use ground_truth::{build_ground_truth, GroundTruth, Phantom, ANALYTIC_FLOW_REACH};
pub use kinematics::{gaussian_integral, MaterialCoord, MotionField, WallFrame, BASAL_EXTRAPOLATION};
pub use scatterers::{
    advance_scatterers, coherent_count, seed_scatterers, Region, ScattererConfig, ScattererField,
};
