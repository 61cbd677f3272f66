use crate::error::{Error, Result};
use crate::geometry::{MyocardialMesh, Point2D};

/// Positions (mm) of `n_points` points over `n_frames` frames, frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTrajectories {
    pub n_points: usize,
    pub n_frames: usize,
    pub reference_frame: usize,
    positions: Vec<Point2D<f64>>,
    visibility: Vec<bool>,
}

impl PointTrajectories {
    pub fn new(
        n_points: usize,
        n_frames: usize,
        reference_frame: usize,
        positions: Vec<Point2D<f64>>,
        visibility: Vec<bool>,
    ) -> Result<Self> {
        let expected = n_points * n_frames;
        if positions.len() != expected || visibility.len() != expected {
            return Err(Error::Structural(format!(
                "{} positions / {} visibility flags for {n_points} points x {n_frames} frames",
                positions.len(),
                visibility.len()
            )));
        }
        if reference_frame >= n_frames.max(1) {
            return Err(Error::Bounds(format!(
                "reference frame {reference_frame} outside {n_frames} frames"
            )));
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::format(
                format!("frame {}", i / n_points.max(1)),
                format!("non-finite position for point {}", i % n_points.max(1)),
            ));
        }
        Ok(Self {
            n_points,
            n_frames,
            reference_frame,
            positions,
            visibility,
        })
    }

    /// Trajectories of every mesh vertex (endo then epi), all visible.
    pub fn from_meshes(meshes: &[MyocardialMesh<f64>], reference_frame: usize) -> Result<Self> {
        let n_points = meshes.first().map_or(0, |m| 2 * m.vertex_count());
        let positions: Vec<_> = meshes.iter().flat_map(|m| m.vertices()).collect();
        let n = positions.len();
        Self::new(n_points, meshes.len(), reference_frame, positions, vec![true; n])
    }

    /// Trajectories of the mid-wall vertices.
    pub fn from_midlines(meshes: &[MyocardialMesh<f64>], reference_frame: usize) -> Result<Self> {
        let n_points = meshes.first().map_or(0, |m| m.vertex_count());
        let positions: Vec<_> = meshes
            .iter()
            .flat_map(|m| m.midline().into_points())
            .collect();
        let n = positions.len();
        Self::new(n_points, meshes.len(), reference_frame, positions, vec![true; n])
    }

    pub fn frame(&self, t: usize) -> &[Point2D<f64>] {
        &self.positions[t * self.n_points..(t + 1) * self.n_points]
    }

    pub fn visibility(&self, t: usize) -> &[bool] {
        &self.visibility[t * self.n_points..(t + 1) * self.n_points]
    }

    pub fn position(&self, point: usize, t: usize) -> Point2D<f64> {
        self.positions[t * self.n_points + point]
    }

    pub fn positions(&self) -> &[Point2D<f64>] {
        &self.positions
    }

    pub fn all_visibility(&self) -> &[bool] {
        &self.visibility
    }

    /// Rebuilds meshes, reading the first half of the points as endocardium.
    pub fn to_meshes(&self, apex_index: usize) -> Result<Vec<MyocardialMesh<f64>>> {
        if !self.n_points.is_multiple_of(2) {
            return Err(Error::Structural(format!(
                "{} points cannot split into endo/epi pairs",
                self.n_points
            )));
        }
        let half = self.n_points / 2;
        (0..self.n_frames)
            .map(|t| {
                let pts = self.frame(t);
                MyocardialMesh::from_estimate(pts[..half].to_vec(), pts[half..].to_vec(), apex_index, t)
            })
            .collect()
    }
}
