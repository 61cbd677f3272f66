use crate::error::{Error, Result};
use crate::geometry::contour::{midpoints, Contour};
use crate::geometry::point::{Point2D, RigidTransform};
use crate::scalar::Scalar;

/// Endocardial and epicardial contours of one frame. Vertex `i` of `endo`
/// pairs with vertex `i` of `epi` across the wall.
#[derive(Debug, Clone, PartialEq)]
pub struct MyocardialMesh<T> {
    endo: Contour<T>,
    epi: Contour<T>,
    apex_index: usize,
    pub frame_index: usize,
}

impl<T: Scalar> MyocardialMesh<T> {
    pub fn new(endo: Contour<T>, epi: Contour<T>, apex_index: usize, frame_index: usize) -> Result<Self> {
        if endo.len() != epi.len() {
            return Err(Error::Structural(format!(
                "endo has {} points but epi has {}",
                endo.len(),
                epi.len()
            )));
        }
        if apex_index == 0 || apex_index + 1 >= endo.len() {
            return Err(Error::Geometry(format!(
                "apex index {apex_index} must lie strictly inside 0..{}",
                endo.len() - 1
            )));
        }
        Ok(Self {
            endo,
            epi,
            apex_index,
            frame_index,
        })
    }

    /// Builds a mesh from estimated vertex positions (endo then epi).
    pub fn from_estimate(
        endo: Vec<Point2D<T>>,
        epi: Vec<Point2D<T>>,
        apex_index: usize,
        frame_index: usize,
    ) -> Result<Self> {
        Self::new(
            Contour::from_estimate(endo)?,
            Contour::from_estimate(epi)?,
            apex_index,
            frame_index,
        )
    }

    pub fn endo(&self) -> &Contour<T> {
        &self.endo
    }

    pub fn epi(&self) -> &Contour<T> {
        &self.epi
    }

    pub fn apex_index(&self) -> usize {
        self.apex_index
    }

    /// Points per contour.
    pub fn vertex_count(&self) -> usize {
        self.endo.len()
    }

    /// All vertices, endocardium first.
    pub fn vertices(&self) -> impl Iterator<Item = Point2D<T>> + '_ {
        self.endo.points().iter().chain(self.epi.points()).copied()
    }

    pub fn midline(&self) -> Contour<T> {
        compute_midline(self).expect("mesh invariants guarantee paired contours")
    }

    pub fn map_points(&self, f: impl Fn(Point2D<T>) -> Point2D<T>) -> Result<Self> {
        Self::new(self.endo.map(&f)?, self.epi.map(&f)?, self.apex_index, self.frame_index)
    }

    pub fn transformed(&self, transform: &RigidTransform<T>) -> Self {
        self.map_points(|p| transform.apply(p))
            .expect("rigid transforms keep points finite")
    }

    pub fn with_frame_index(mut self, frame_index: usize) -> Self {
        self.frame_index = frame_index;
        self
    }
}

/// Mid-wall line: midpoint of each endo/epi vertex pair.
pub fn compute_midline<T: Scalar>(mesh: &MyocardialMesh<T>) -> Result<Contour<T>> {
    Contour::from_estimate(midpoints(mesh.endo.points(), mesh.epi.points())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(y: f64, n: usize) -> Contour<f64> {
        Contour::new((0..n).map(|i| Point2D::new(i as f64, y)).collect()).unwrap()
    }

    #[test]
    fn zero_thickness_midline_is_endo() {
        let mesh = MyocardialMesh::new(line(0.0, 9), line(0.0, 9), 4, 0).unwrap();
        assert_eq!(mesh.midline(), *mesh.endo());
    }

    #[test]
    fn symmetric_walls() {
        let mesh = MyocardialMesh::new(line(0.0, 9), line(2.0, 9), 4, 0).unwrap();
        assert!(mesh.midline().points().iter().all(|p| p.y == 1.0));
    }

    #[test]
    fn invariants_enforced() {
        assert!(matches!(
            MyocardialMesh::new(line(0.0, 9), line(2.0, 10), 4, 0),
            Err(Error::Structural(_))
        ));
        assert!(MyocardialMesh::new(line(0.0, 9), line(2.0, 9), 0, 0).is_err());
        assert!(MyocardialMesh::new(line(0.0, 9), line(2.0, 9), 8, 0).is_err());
    }
}
