use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_in_polygon, polygon_area, MyocardialMesh, Point2D};
use crate::phantom::kinematics::{MotionField, WallFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Myocardium,
    Background,
    Cavity,
}

/// Acoustic scatterers of one frame, stored myocardium first, then
/// background, then cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererField {
    pub frame_index: usize,
    pub coherence_ratio: f64,
    pub positions: Vec<Point2D<f64>>,
    pub amplitudes: Vec<f64>,
    pub coherent: Vec<bool>,
    pub regions: Vec<Region>,
}

impl ScattererField {
    pub fn new(
        frame_index: usize,
        coherence_ratio: f64,
        positions: Vec<Point2D<f64>>,
        amplitudes: Vec<f64>,
        coherent: Vec<bool>,
        regions: Vec<Region>,
    ) -> Result<Self> {
        let n = positions.len();
        if amplitudes.len() != n || coherent.len() != n || regions.len() != n {
            return Err(Error::Structural("scatterer attribute lengths differ".into()));
        }
        if !(0.0..=1.0).contains(&coherence_ratio) {
            return Err(Error::validation("coherence_ratio", format!("must lie in [0, 1], got {coherence_ratio}")));
        }
        if let Some(i) = amplitudes.iter().position(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::validation("amplitudes", format!("scatterer {i} has an invalid amplitude")));
        }
        let order = |r: &Region| match r {
            Region::Myocardium => 0,
            Region::Background => 1,
            Region::Cavity => 2,
        };
        if regions.windows(2).any(|w| order(&w[0]) > order(&w[1])) {
            return Err(Error::Structural("scatterers must be grouped myocardium, background, cavity".into()));
        }
        Ok(Self {
            frame_index,
            coherence_ratio,
            positions,
            amplitudes,
            coherent,
            regions,
        })
    }

    pub fn empty(frame_index: usize) -> Self {
        Self {
            frame_index,
            coherence_ratio: 1.0,
            positions: Vec::new(),
            amplitudes: Vec::new(),
            coherent: Vec::new(),
            regions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn count(&self, region: Region) -> usize {
        self.regions.iter().filter(|&&r| r == region).count()
    }

    /// Fraction of myocardial scatterers flagged coherent.
    pub fn myocardial_coherent_fraction(&self) -> f64 {
        let (mut n, mut c) = (0usize, 0usize);
        for (r, &coh) in self.regions.iter().zip(&self.coherent) {
            if *r == Region::Myocardium {
                n += 1;
                c += coh as usize;
            }
        }
        if n == 0 {
            0.0
        } else {
            c as f64 / n as f64
        }
    }

    /// Union of two fields (regions of `other` are appended in order).
    pub fn merged(&self, other: &ScattererField) -> ScattererField {
        let mut idx: Vec<(usize, usize)> = (0..self.len())
            .map(|i| (0, i))
            .chain((0..other.len()).map(|i| (1, i)))
            .collect();
        let src = [self, other];
        idx.sort_by_key(|&(s, i)| src[s].regions[i] as u8);
        ScattererField {
            frame_index: self.frame_index,
            coherence_ratio: self.coherence_ratio,
            positions: idx.iter().map(|&(s, i)| src[s].positions[i]).collect(),
            amplitudes: idx.iter().map(|&(s, i)| src[s].amplitudes[i]).collect(),
            coherent: idx.iter().map(|&(s, i)| src[s].coherent[i]).collect(),
            regions: idx.iter().map(|&(s, i)| src[s].regions[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScattererConfig {
    /// Scatterers per mm^2, in every region.
    pub density: f64,
    /// Fraction of myocardial scatterers that persist across frames.
    pub coherence_ratio: f64,
    pub background_amplitude: f64,
    pub cavity_amplitude: f64,
}

impl Default for ScattererConfig {
    fn default() -> Self {
        Self {
            density: 10.0,
            coherence_ratio: 0.9,
            background_amplitude: 0.3,
            cavity_amplitude: 0.08,
        }
    }
}

impl ScattererConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::validation("scatterers.density", format!("must be positive, got {}", self.density)));
        }
        if !(0.0..=1.0).contains(&self.coherence_ratio) {
            return Err(Error::validation(
                "scatterers.coherence_ratio",
                format!("must lie in [0, 1], got {}", self.coherence_ratio),
            ));
        }
        for (name, v) in [
            ("scatterers.background_amplitude", self.background_amplitude),
            ("scatterers.cavity_amplitude", self.cavity_amplitude),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(name, format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Per-frame generator: frame `t` draws from stream `t + 1`, seeding uses stream 0.
fn frame_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn bounding_box(points: &[Point2D<f64>]) -> (Point2D<f64>, Point2D<f64>) {
    points.iter().fold(
        (Point2D::new(f64::MAX, f64::MAX), Point2D::new(f64::MIN, f64::MIN)),
        |(lo, hi), p| (Point2D::new(lo.x.min(p.x), lo.y.min(p.y)), Point2D::new(hi.x.max(p.x), hi.y.max(p.y))),
    )
}

fn amplitude(rng: &mut ChaCha8Rng) -> f64 {
    // (0, 1]
    1.0 - rng.random::<f64>()
}

/// `count` points uniformly inside the wall of `frame`.
fn sample_wall(frame: &WallFrame, count: usize, rng: &mut ChaCha8Rng) -> Vec<Point2D<f64>> {
    let (lo, hi) = bounding_box(&frame.wall_polygon());
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = Point2D::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        if frame.locate(p, 1.0, false).is_some() {
            out.push(p);
        }
    }
    out
}

/// Number of coherent scatterers among `n`: `floor(ratio * n)`.
pub fn coherent_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64) + 1e-9).floor() as usize
}

/// Seeds the ED scatterer field. Myocardial scatterers fill the wall
/// uniformly; with a `field_of_view` (width, height in mm) the remaining
/// area receives static background and cavity scatterers.
pub fn seed_scatterers(
    mesh_ed: &MyocardialMesh<f64>,
    config: &ScattererConfig,
    field_of_view: Option<[f64; 2]>,
    rng_seed: u64,
) -> Result<ScattererField> {
    config.validate()?;
    let frame = WallFrame::from_mesh(mesh_ed);
    let polygon = frame.wall_polygon();
    let area = polygon_area(&polygon);
    if !(area > 1e-12) {
        return Err(Error::Geometry("myocardial annulus has zero area".into()));
    }
    let mut rng = frame_rng(rng_seed, 0);
    let n_myo = (config.density * area).round().max(1.0) as usize;
    let mut positions = sample_wall(&frame, n_myo, &mut rng);
    let mut amplitudes: Vec<f64> = (0..n_myo).map(|_| amplitude(&mut rng)).collect();
    let mut order: Vec<usize> = (0..n_myo).collect();
    order.shuffle(&mut rng);
    let mut coherent = vec![false; n_myo];
    for &i in &order[..coherent_count(config.coherence_ratio, n_myo)] {
        coherent[i] = true;
    }
    let mut regions = vec![Region::Myocardium; n_myo];

    if let Some([w, h]) = field_of_view {
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::validation("field_of_view", "must be positive"));
        }
        let cavity_polygon = mesh_ed.endo().points().to_vec();
        let n_total = (config.density * w * h).round() as usize;
        let mut background = Vec::new();
        let mut cavity = Vec::new();
        for _ in 0..n_total {
            let p = Point2D::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
            let a = amplitude(&mut rng);
            if point_in_polygon(p, &polygon) {
                continue;
            }
            if point_in_polygon(p, &cavity_polygon) {
                cavity.push((p, a * config.cavity_amplitude));
            } else {
                background.push((p, a * config.background_amplitude));
            }
        }
        for (group, region) in [(background, Region::Background), (cavity, Region::Cavity)] {
            for (p, a) in group {
                positions.push(p);
                amplitudes.push(a);
                coherent.push(true);
                regions.push(region);
            }
        }
    }

    ScattererField::new(
        mesh_ed.frame_index,
        config.coherence_ratio,
        positions,
        amplitudes,
        coherent,
        regions,
    )
}

/// Scatterers at frame `t`. Coherent myocardial scatterers follow the
/// motion with unchanged amplitude; incoherent ones are redrawn uniformly
/// inside the frame-`t` wall with fresh amplitudes, from a stream derived
/// from `(rng_seed, t)`. Background and cavity scatterers are static.
pub fn advance_scatterers(
    reference: &ScattererField,
    t: usize,
    motion: &MotionField,
    rng_seed: u64,
) -> Result<ScattererField> {
    if t >= motion.model().n_frames() {
        return Err(Error::Bounds(format!(
            "frame {t} outside {} frames",
            motion.model().n_frames()
        )));
    }
    let moved = motion.frame_at(t);
    let ed_frame = motion.ed_frame();
    let mut positions: Vec<Point2D<f64>> = reference
        .positions
        .par_iter()
        .zip(&reference.regions)
        .zip(&reference.coherent)
        .map(|((&p, &region), &coherent)| {
            if region == Region::Myocardium && coherent {
                ed_frame.locate(p, 1.0, false).map_or(p, |c| moved.position(c))
            } else {
                p
            }
        })
        .collect();
    let mut amplitudes = reference.amplitudes.clone();

    let incoherent: Vec<usize> = (0..reference.len())
        .filter(|&i| reference.regions[i] == Region::Myocardium && !reference.coherent[i])
        .collect();
    if !incoherent.is_empty() {
        let mut rng = frame_rng(rng_seed, t as u64 + 1);
        let fresh = sample_wall(&moved, incoherent.len(), &mut rng);
        for (&i, p) in incoherent.iter().zip(fresh) {
            positions[i] = p;
            amplitudes[i] = amplitude(&mut rng);
        }
    }

    Ok(ScattererField {
        frame_index: t,
        coherence_ratio: reference.coherence_ratio,
        positions,
        amplitudes,
        coherent: reference.coherent.clone(),
        regions: reference.regions.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_segment_layout;
    use crate::phantom::config::{GeometryConfig, MotionModel};
    use crate::phantom::ellipse::generate_ed_mesh;

    fn setup(ratio: f64) -> (ScattererField, MotionField) {
        let cfg = GeometryConfig::default();
        let mesh = generate_ed_mesh(&cfg, 0).unwrap();
        let layout = build_segment_layout(mesh.midline().points(), mesh.apex_index(), cfg.view).unwrap();
        let model = MotionModel::raised_cosine(16, 0, 6, 0.2, 0.3).unwrap();
        let motion = MotionField::new(&mesh, &layout, &model, &[]).unwrap();
        let sc = ScattererConfig { coherence_ratio: ratio, density: 4.0, ..Default::default() };
        (seed_scatterers(&mesh, &sc, Some([32.0, 32.0]), 7).unwrap(), motion)
    }

    #[test]
    fn coherence_ratios_hit_exactly() {
        for ratio in [0.9, 0.7, 0.6, 0.5, 1.0, 0.0] {
            let (field, _) = setup(ratio);
            let n = field.count(Region::Myocardium);
            let coherent = field
                .regions
                .iter()
                .zip(&field.coherent)
                .filter(|(r, c)| **r == Region::Myocardium && **c)
                .count();
            assert_eq!(coherent, coherent_count(ratio, n));
            assert!((field.myocardial_coherent_fraction() - ratio).abs() <= 1.0 / n as f64);
        }
        let (all, _) = setup(1.0);
        assert!(all.coherent.iter().all(|&c| c));
    }

    #[test]
    fn fully_coherent_follows_motion() {
        let (field, motion) = setup(1.0);
        let moved = advance_scatterers(&field, 5, &motion, 7).unwrap();
        let expect = motion.displace_points(&field.positions, 5);
        assert_eq!(moved.positions, expect);
        assert_eq!(moved.amplitudes, field.amplitudes);
    }

    #[test]
    fn incoherent_frames_are_reproducible() {
        let (field, motion) = setup(0.0);
        let a = advance_scatterers(&field, 4, &motion, 11).unwrap();
        let b = advance_scatterers(&field, 4, &motion, 11).unwrap();
        assert_eq!(a, b);
        let c = advance_scatterers(&field, 5, &motion, 11).unwrap();
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn zero_area_annulus_rejected() {
        let cfg = GeometryConfig::default();
        let mesh = generate_ed_mesh(&cfg, 0).unwrap();
        let flat = MyocardialMesh::new(mesh.endo().clone(), mesh.endo().clone(), mesh.apex_index(), 0).unwrap();
        assert!(matches!(
            seed_scatterers(&flat, &ScattererConfig::default(), None, 1),
            Err(Error::Geometry(_))
        ));
    }
}
