//! Motion estimation: dense flow and point trajectories from the built-in
//! block matcher, plus mesh propagation.

mod field;
mod flow;
mod image;
mod matching;
mod points;
mod trajectories;

pub use field::{propagate_mesh_flow, warp_mesh, DisplacementField, WarpedMesh};
pub use flow::{estimate_flow, estimate_flow_images, estimate_sequence_flow, TrackerConfig};
pub use image::{ImageF32, Pyramid};
pub use matching::ncc;
pub use points::track_points;
pub use trajectories::PointTrajectories;
