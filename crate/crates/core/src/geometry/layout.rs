use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::contour::cumulative_lengths;
use crate::geometry::point::Point2D;
use crate::scalar::Scalar;

/// Apical 2D view; each carries six of the eighteen standard segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum View {
    #[default]
    #[serde(rename = "4C")]
    FourChamber,
    #[serde(rename = "2C")]
    TwoChamber,
    #[serde(rename = "LAX")]
    LongAxis,
}

impl View {
    /// Wall names in midline order (first wall holds index 0).
    fn walls(self) -> [&'static str; 2] {
        match self {
            View::FourChamber => ["inferoseptal", "anterolateral"],
            View::TwoChamber => ["inferior", "anterior"],
            View::LongAxis => ["inferolateral", "anteroseptal"],
        }
    }

    fn apical_walls(self) -> [&'static str; 2] {
        match self {
            View::FourChamber => ["septal", "lateral"],
            View::TwoChamber => ["inferior", "anterior"],
            View::LongAxis => ["lateral", "septal"],
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            View::FourChamber => "4C",
            View::TwoChamber => "2C",
            View::LongAxis => "LAX",
        })
    }
}

impl FromStr for View {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "4C" => Ok(View::FourChamber),
            "2C" => Ok(View::TwoChamber),
            "LAX" | "3C" => Ok(View::LongAxis),
            other => Err(Error::validation("view", format!("unknown view `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Basal,
    Mid,
    Apical,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Basal, Level::Mid, Level::Apical];

    pub fn name(self) -> &'static str {
        match self {
            Level::Basal => "basal",
            Level::Mid => "mid",
            Level::Apical => "apical",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "basal" => Ok(Level::Basal),
            "mid" => Ok(Level::Mid),
            "apical" => Ok(Level::Apical),
            other => Err(Error::validation("levels", format!("unknown level `{other}`"))),
        }
    }
}

/// Parses a comma separated level list such as `basal,mid`.
pub fn parse_levels(list: &str) -> Result<Vec<Level>> {
    let mut levels: Vec<Level> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    levels.sort();
    levels.dedup();
    if levels.is_empty() {
        return Err(Error::validation("levels", "empty level list"));
    }
    Ok(levels)
}

/// Contiguous midline index range `[start, end]`; neighbours share endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub label: String,
    pub level: Level,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn contains_vertex(&self, i: usize) -> bool {
        (self.start..=self.end).contains(&i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentLayout {
    segments: Vec<Segment>,
    view: View,
}

pub const SEGMENTS_PER_VIEW: usize = 6;

impl SegmentLayout {
    /// Checks the tiling invariants: six segments, unique labels, each
    /// segment starting where the previous one ended.
    pub fn new(segments: Vec<Segment>, view: View) -> Result<Self> {
        if segments.len() != SEGMENTS_PER_VIEW {
            return Err(Error::Geometry(format!(
                "a view holds {SEGMENTS_PER_VIEW} segments, got {}",
                segments.len()
            )));
        }
        let mut labels = HashSet::new();
        for (k, s) in segments.iter().enumerate() {
            if s.start >= s.end {
                return Err(Error::Geometry(format!("segment `{}` is empty", s.label)));
            }
            if k > 0 && segments[k - 1].end != s.start {
                return Err(Error::Geometry(format!(
                    "segment `{}` does not continue from `{}`",
                    s.label,
                    segments[k - 1].label
                )));
            }
            if !labels.insert(s.label.as_str()) {
                return Err(Error::Geometry(format!("duplicate segment label `{}`", s.label)));
            }
        }
        if segments[0].start != 0 {
            return Err(Error::Geometry("layout must start at vertex 0".into()));
        }
        Ok(Self { segments, view })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn labels(&self) -> Vec<&str> {
        self.segments.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn segment(&self, label: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.label == label)
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.label == label)
    }

    /// Index one past the last midline vertex covered.
    pub fn vertex_count(&self) -> usize {
        self.segments.last().map_or(0, |s| s.end + 1)
    }

    /// Index of the segment owning edge `(i, i + 1)`.
    pub fn segment_of_edge(&self, i: usize) -> Option<usize> {
        self.segments.iter().position(|s| s.start <= i && i < s.end)
    }

    pub fn segment_lengths<T: Scalar>(&self, midline: &[Point2D<T>]) -> Result<Vec<T>> {
        if midline.len() != self.vertex_count() {
            return Err(Error::Structural(format!(
                "layout covers {} vertices but midline has {}",
                self.vertex_count(),
                midline.len()
            )));
        }
        Ok(self
            .segments
            .iter()
            .map(|s| crate::geometry::contour::polyline_length(&midline[s.start..=s.end]))
            .collect())
    }
}

/// Splits each wall of the midline into basal, mid and apical thirds of arc
/// length, snapping boundaries to the nearest vertex.
pub fn build_segment_layout<T: Scalar>(
    midline: &[Point2D<T>],
    apex_index: usize,
    view: View,
) -> Result<SegmentLayout> {
    let n = midline.len();
    if apex_index == 0 || apex_index + 1 >= n {
        return Err(Error::Geometry(format!(
            "apex index {apex_index} must lie strictly inside 0..{}",
            n.saturating_sub(1)
        )));
    }
    // Three segments need at least three edges per wall.
    if apex_index < 3 || n - 1 - apex_index < 3 {
        return Err(Error::Geometry(format!(
            "walls of {} and {} edges cannot host three segments each",
            apex_index,
            n - 1 - apex_index
        )));
    }

    let first = &midline[..=apex_index];
    let mut second: Vec<Point2D<T>> = midline[apex_index..].to_vec();
    second.reverse();

    let [b1, b2] = wall_boundaries(first);
    let [r1, r2] = wall_boundaries(&second);
    // Map reversed-wall indices back to midline indices.
    let (r1, r2) = (n - 1 - r1, n - 1 - r2);

    let [wall_a, wall_b] = view.walls();
    let [apical_a, apical_b] = view.apical_walls();
    let seg = |label: String, level, start, end| Segment { label, level, start, end };
    SegmentLayout::new(
        vec![
            seg(format!("basal-{wall_a}"), Level::Basal, 0, b1),
            seg(format!("mid-{wall_a}"), Level::Mid, b1, b2),
            seg(format!("apical-{apical_a}"), Level::Apical, b2, apex_index),
            seg(format!("apical-{apical_b}"), Level::Apical, apex_index, r2),
            seg(format!("mid-{wall_b}"), Level::Mid, r2, r1),
            seg(format!("basal-{wall_b}"), Level::Basal, r1, n - 1),
        ],
        view,
    )
}

/// Boundary vertices nearest to 1/3 and 2/3 of the wall arc length, measured
/// from the base (index 0). Ties go to the basal-side vertex.
fn wall_boundaries<T: Scalar>(wall: &[Point2D<T>]) -> [usize; 2] {
    let cum = cumulative_lengths(wall);
    let last = wall.len() - 1;
    let total = cum[last];
    let nearest = |target: T, lo: usize, hi: usize| {
        (lo..=hi)
            .min_by(|&a, &b| {
                let da = (cum[a] - target).abs();
                let db = (cum[b] - target).abs();
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(lo)
    };
    let b1 = nearest(total / T::of(3.0), 1, last - 2);
    let b2 = nearest(total * T::of(2.0) / T::of(3.0), b1 + 1, last - 1);
    [b1, b2]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Vec<Point2D<f64>> {
        (0..n).map(|i| Point2D::new(i as f64, 0.0)).collect()
    }

    #[test]
    fn six_segments() {
        let layout = build_segment_layout(&uniform(19), 9, View::FourChamber).unwrap();
        assert_eq!(layout.segments().len(), 6);
        let levels: Vec<_> = layout.segments().iter().map(|s| s.level).collect();
        assert_eq!(
            levels,
            [Level::Basal, Level::Mid, Level::Apical, Level::Apical, Level::Mid, Level::Basal]
        );
    }

    #[test]
    fn uniform_thirds() {
        let pts = uniform(19);
        let layout = build_segment_layout(&pts, 9, View::TwoChamber).unwrap();
        for len in layout.segment_lengths(&pts).unwrap() {
            assert_eq!(len, 3.0);
        }
        assert_eq!(layout.segments()[2].end, 9);
        assert_eq!(layout.segments()[3].start, 9);
    }

    #[test]
    fn short_wall_rejected() {
        assert!(matches!(
            build_segment_layout(&uniform(9), 2, View::FourChamber),
            Err(Error::Geometry(_))
        ));
        assert!(build_segment_layout(&uniform(7), 3, View::FourChamber).is_ok());
    }

    #[test]
    fn labels_unique_per_view() {
        for view in [View::FourChamber, View::TwoChamber, View::LongAxis] {
            let layout = build_segment_layout(&uniform(31), 15, view).unwrap();
            let labels: HashSet<_> = layout.labels().into_iter().collect();
            assert_eq!(labels.len(), 6);
        }
    }

    #[test]
    fn level_parsing() {
        assert_eq!(parse_levels("mid,basal").unwrap(), vec![Level::Basal, Level::Mid]);
        assert!(parse_levels("basal,septum").is_err());
    }
}
