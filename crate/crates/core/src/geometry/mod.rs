//! Myocardial meshes, midlines, segment layouts and length measurement.

mod contour;
mod layout;
mod mesh;
mod point;

pub use contour::{
    arc_length, cumulative_lengths, midpoints, point_in_polygon, polygon_area, polyline_length, Contour,
    MIN_CONTOUR_POINTS,
};
pub use layout::{build_segment_layout, parse_levels, Level, Segment, SegmentLayout, View, SEGMENTS_PER_VIEW};
pub use mesh::{compute_midline, MyocardialMesh};
pub use point::{Point2D, RigidTransform};
