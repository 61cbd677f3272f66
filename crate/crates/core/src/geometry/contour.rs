use crate::error::{Error, Result};
use crate::geometry::point::Point2D;
use crate::scalar::Scalar;

pub const MIN_CONTOUR_POINTS: usize = 7;

/// Open polyline ordered basal-left, apex, basal-right.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour<T> {
    points: Vec<Point2D<T>>,
}

impl<T: Scalar> Contour<T> {
    /// Validates point count, finiteness and that consecutive points differ.
    pub fn new(points: Vec<Point2D<T>>) -> Result<Self> {
        let contour = Self::from_estimate(points)?;
        if let Some(i) = contour
            .points
            .windows(2)
            .position(|w| w[0] == w[1])
        {
            return Err(Error::Geometry(format!(
                "contour points {i} and {} coincide",
                i + 1
            )));
        }
        Ok(contour)
    }

    /// Like [`Contour::new`] but accepts coincident consecutive points, which
    /// estimated (tracked) contours may legitimately produce.
    pub fn from_estimate(points: Vec<Point2D<T>>) -> Result<Self> {
        if points.len() < MIN_CONTOUR_POINTS {
            return Err(Error::Geometry(format!(
                "contour needs at least {MIN_CONTOUR_POINTS} points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Geometry(format!("contour point {i} is not finite")));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point2D<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn arc_length(&self, start_index: usize, end_index: usize) -> Result<T> {
        arc_length(&self.points, start_index, end_index)
    }

    pub fn total_length(&self) -> T {
        polyline_length(&self.points)
    }

    /// Cumulative arc length at every vertex, starting at 0.
    pub fn cumulative_lengths(&self) -> Vec<T> {
        cumulative_lengths(&self.points)
    }

    pub fn map(&self, f: impl Fn(Point2D<T>) -> Point2D<T>) -> Result<Self> {
        Self::from_estimate(self.points.iter().copied().map(f).collect())
    }

    pub fn into_points(self) -> Vec<Point2D<T>> {
        self.points
    }
}

/// Sum of Euclidean distances between consecutive points in `[start_index, end_index]`.
pub fn arc_length<T: Scalar>(points: &[Point2D<T>], start_index: usize, end_index: usize) -> Result<T> {
    if start_index >= end_index || end_index >= points.len() {
        return Err(Error::Bounds(format!(
            "arc range [{start_index}, {end_index}] invalid for {} points",
            points.len()
        )));
    }
    Ok(polyline_length(&points[start_index..=end_index]))
}

pub fn polyline_length<T: Scalar>(points: &[Point2D<T>]) -> T {
    points
        .windows(2)
        .fold(T::zero(), |acc, w| acc + w[0].distance(w[1]))
}

pub fn cumulative_lengths<T: Scalar>(points: &[Point2D<T>]) -> Vec<T> {
    let mut out = Vec::with_capacity(points.len());
    let mut acc = T::zero();
    out.push(acc);
    for w in points.windows(2) {
        acc = acc + w[0].distance(w[1]);
        out.push(acc);
    }
    out
}

/// Pairwise midpoints of two equally long point lists.
pub fn midpoints<T: Scalar>(a: &[Point2D<T>], b: &[Point2D<T>]) -> Result<Vec<Point2D<T>>> {
    if a.len() != b.len() {
        return Err(Error::Structural(format!(
            "endo has {} points but epi has {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(p, q)| p.midpoint(*q)).collect())
}

/// Shoelace area of a closed polygon.
pub fn polygon_area<T: Scalar>(points: &[Point2D<T>]) -> T {
    let n = points.len();
    if n < 3 {
        return T::zero();
    }
    let twice = (0..n).fold(T::zero(), |acc, i| {
        acc + points[i].cross(points[(i + 1) % n])
    });
    (twice * T::of(0.5)).abs()
}

/// Even-odd point-in-polygon test; the polygon is implicitly closed.
pub fn point_in_polygon<T: Scalar>(p: Point2D<T>, polygon: &[Point2D<T>]) -> bool {
    let n = polygon.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}
