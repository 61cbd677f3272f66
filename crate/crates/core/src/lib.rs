//! Synthetic cardiac motion phantoms with controllable speckle
//! decorrelation, a block-matching motion tracker, segmental and global
//! longitudinal strain, and agreement statistics against ground truth.
//!
//! Geometry, strain and evaluation are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below name the common concrete types.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod phantom;
pub mod pipeline;
pub mod scalar;
pub mod speckle;
pub mod strain;
pub mod tracking;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = geometry::Point2D<f64>;
pub type Contour = geometry::Contour<f64>;
pub type Mesh = geometry::MyocardialMesh<f64>;
pub type StrainCurve = strain::StrainCurve<f64>;
pub type StrainSummary = strain::StrainSummary<f64>;
pub type DistanceErrorReport = evaluation::DistanceErrorReport<f64>;
pub type AgreementReport = evaluation::AgreementReport<f64>;

pub type PointF32 = geometry::Point2D<f32>;
pub type ContourF32 = geometry::Contour<f32>;
pub type MeshF32 = geometry::MyocardialMesh<f32>;
pub type StrainCurveF32 = strain::StrainCurve<f32>;
