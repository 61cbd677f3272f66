//! Ground-truth deformation of the myocardium.
//!
//! Every point of the wall is addressed by material coordinates
//! `(edge, u, r)`: position `u` along mid-wall edge `edge` and offset `r`
//! along the interpolated half-thickness vector, with `|r| <= 1` inside the
//! wall. Deformation keeps the apex fixed, scales each mid-wall edge by its
//! longitudinal stretch and scales the half-thickness vectors by the radial
//! thickening, so mid-wall chord lengths (and hence segmental strain) follow
//! the edge stretches exactly.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::geometry::{cumulative_lengths, MyocardialMesh, Point2D, SegmentLayout};
use crate::phantom::config::{InfarctSpec, MotionModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialCoord {
    pub edge: usize,
    pub u: f64,
    pub r: f64,
}

/// Wall geometry as mid-wall vertices plus half-thickness vectors.
#[derive(Debug, Clone)]
pub struct WallFrame {
    mids: Vec<Point2D<f64>>,
    halves: Vec<Point2D<f64>>,
    /// Per edge: conservative reach used to skip far edges while locating.
    reach: Vec<f64>,
}

/// How far past the basal vertices `locate` may extrapolate, in edge lengths.
pub const BASAL_EXTRAPOLATION: f64 = 0.5;

impl WallFrame {
    pub fn new(mids: Vec<Point2D<f64>>, halves: Vec<Point2D<f64>>) -> Self {
        let reach = mids
            .windows(2)
            .zip(halves.windows(2))
            .map(|(m, h)| m[0].distance(m[1]) + h[0].norm().max(h[1].norm()))
            .collect();
        Self { mids, halves, reach }
    }

    pub fn from_mesh(mesh: &MyocardialMesh<f64>) -> Self {
        let (mids, halves) = mesh
            .endo()
            .points()
            .iter()
            .zip(mesh.epi().points())
            .map(|(&a, &b)| (a.midpoint(b), (b - a) * 0.5))
            .unzip();
        Self::new(mids, halves)
    }

    pub fn mids(&self) -> &[Point2D<f64>] {
        &self.mids
    }

    pub fn n_edges(&self) -> usize {
        self.mids.len() - 1
    }

    pub fn position(&self, c: MaterialCoord) -> Point2D<f64> {
        let i = c.edge;
        let mid = self.mids[i].lerp(self.mids[i + 1], c.u);
        let half = self.halves[i].lerp(self.halves[i + 1], c.u);
        mid + half * c.r
    }

    /// Material coordinates of `p` with `|r| <= r_limit`. With `extrapolate`
    /// the first and last edges extend past the base.
    pub fn locate(&self, p: Point2D<f64>, r_limit: f64, extrapolate: bool) -> Option<MaterialCoord> {
        const TOL: f64 = 1e-9;
        let last = self.n_edges() - 1;
        for i in 0..=last {
            let centre = self.mids[i].midpoint(self.mids[i + 1]);
            let slack = if extrapolate && (i == 0 || i == last) { 1.0 + BASAL_EXTRAPOLATION } else { 1.0 };
            if p.distance(centre) > slack * self.reach[i] * r_limit.max(1.0) + self.reach[i] {
                continue;
            }
            let lo = if extrapolate && i == 0 { -BASAL_EXTRAPOLATION } else { 0.0 };
            let hi = if extrapolate && i == last { 1.0 + BASAL_EXTRAPOLATION } else { 1.0 };
            if let Some((u, r)) = self.solve_edge(i, p, lo, hi) {
                if r.abs() <= r_limit + TOL {
                    return Some(MaterialCoord { edge: i, u, r });
                }
            }
        }
        None
    }

    /// Solves `p = M_i + u E + r (A + u D)` for `u` in `[lo, hi]`.
    fn solve_edge(&self, i: usize, p: Point2D<f64>, lo: f64, hi: f64) -> Option<(f64, f64)> {
        const TOL: f64 = 1e-9;
        let q = p - self.mids[i];
        let e = self.mids[i + 1] - self.mids[i];
        let a = self.halves[i];
        let d = self.halves[i + 1] - self.halves[i];
        let c2 = -e.cross(d);
        let c1 = q.cross(d) - e.cross(a);
        let c0 = q.cross(a);
        let scale = e.norm() * a.norm().max(1e-12);
        let mut roots = [f64::NAN; 2];
        if c2.abs() <= 1e-12 * scale {
            if c1.abs() <= f64::MIN_POSITIVE {
                return None;
            }
            roots[0] = -c0 / c1;
        } else {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            // numerically stable pair
            let qq = -0.5 * (c1 + c1.signum() * sq);
            roots[0] = qq / c2;
            roots[1] = if qq != 0.0 { c0 / qq } else { f64::NAN };
        }
        roots
            .iter()
            .copied()
            .filter(|u| u.is_finite() && *u >= lo - TOL && *u <= hi + TOL)
            .min_by(|x, y| (x - 0.5).abs().partial_cmp(&(y - 0.5).abs()).unwrap())
            .map(|u| {
                let w = a + d * u;
                let r = (q - e * u).dot(w) / w.dot(w);
                (u.clamp(lo, hi), r)
            })
    }

    /// Closed polygon bounding `|r| <= 1`: endocardium then epicardium reversed.
    pub fn wall_polygon(&self) -> Vec<Point2D<f64>> {
        let endo = self.mids.iter().zip(&self.halves).map(|(&m, &h)| m - h);
        let epi: Vec<_> = self.mids.iter().zip(&self.halves).map(|(&m, &h)| m + h).collect();
        endo.chain(epi.into_iter().rev()).collect()
    }
}

/// `integral of exp(-(x - c)^2 / (2 sigma^2))` over `[a, b]`.
pub fn gaussian_integral(a: f64, b: f64, centre: f64, sigma: f64) -> f64 {
    let k = FRAC_1_SQRT_2 / sigma;
    sigma * (PI / 2.0).sqrt() * (libm::erf((b - centre) * k) - libm::erf((a - centre) * k))
}

#[derive(Debug, Clone)]
struct ResolvedInfarct {
    centre: f64,
    sigma: f64,
    alpha: f64,
}

/// Time-dependent deformation of an end-diastolic mesh.
#[derive(Debug, Clone)]
pub struct MotionField {
    ed_mesh: MyocardialMesh<f64>,
    frame: WallFrame,
    model: MotionModel,
    apex_index: usize,
    /// Arc position of every mid-wall vertex, from the basal-left end.
    arc: Vec<f64>,
    /// Per edge: compensation factor times mean contractility.
    edge_activity: Vec<f64>,
    /// Per edge: whether the edge belongs to an infarcted segment.
    edge_infarcted: Vec<bool>,
    compensation: f64,
    infarcts: Vec<ResolvedInfarct>,
}

impl MotionField {
    pub fn new(
        ed_mesh: &MyocardialMesh<f64>,
        layout: &SegmentLayout,
        model: &MotionModel,
        infarcts: &[InfarctSpec],
    ) -> Result<Self> {
        let frame = WallFrame::from_mesh(ed_mesh);
        if layout.vertex_count() != frame.mids.len() {
            return Err(Error::Structural(format!(
                "layout covers {} vertices, mesh has {}",
                layout.vertex_count(),
                frame.mids.len()
            )));
        }
        let arc = cumulative_lengths(&frame.mids);
        let n_edges = frame.n_edges();
        let edge_len: Vec<f64> = (0..n_edges).map(|i| arc[i + 1] - arc[i]).collect();

        let mut resolved = Vec::with_capacity(infarcts.len());
        let mut edge_infarcted = vec![false; n_edges];
        for spec in infarcts {
            spec.validate()?;
            let segment = layout.segment(&spec.segment_label).ok_or_else(|| {
                Error::validation(
                    "infarct.segment_label",
                    format!("no segment `{}` in the {} layout", spec.segment_label, layout.view()),
                )
            })?;
            for flag in &mut edge_infarcted[segment.start..segment.end] {
                *flag = true;
            }
            resolved.push(ResolvedInfarct {
                centre: 0.5 * (arc[segment.start] + arc[segment.end]),
                sigma: spec.sigma,
                alpha: spec.reduction_alpha,
            });
        }

        // Mean contractility s = 1 - sum(alpha * gaussian) over each edge.
        let mean_contractility: Vec<f64> = (0..n_edges)
            .map(|i| {
                let reduction: f64 = resolved
                    .iter()
                    .map(|inf| inf.alpha * gaussian_integral(arc[i], arc[i + 1], inf.centre, inf.sigma))
                    .sum();
                1.0 - reduction / edge_len[i]
            })
            .collect();

        let compensation = if infarcts.iter().any(|s| s.compensate) {
            let (mut inside, mut outside) = (0.0, 0.0);
            for i in 0..n_edges {
                let w = edge_len[i] * mean_contractility[i];
                if edge_infarcted[i] {
                    inside += w;
                } else {
                    outside += w;
                }
            }
            let total = arc[n_edges];
            if !(outside > 0.0) {
                return Err(Error::Geometry(
                    "no contracting tissue left outside the infarcts to compensate".into(),
                ));
            }
            (total - inside) / outside
        } else {
            1.0
        };

        let edge_activity: Vec<f64> = (0..n_edges)
            .map(|i| {
                let lambda = if edge_infarcted[i] { 1.0 } else { compensation };
                lambda * mean_contractility[i]
            })
            .collect();

        let worst = edge_activity.iter().cloned().fold(f64::MIN, f64::max);
        if model.peak_longitudinal_shortening() * worst >= 1.0 {
            return Err(Error::validation(
                "motion.peak_longitudinal_shortening",
                "compensated shortening collapses an edge to zero length",
            ));
        }
        let weakest = edge_activity.iter().cloned().fold(f64::MAX, f64::min);
        if 1.0 - model.peak_longitudinal_shortening() * weakest <= 0.0 {
            return Err(Error::validation("infarct", "stretch would invert an edge"));
        }

        Ok(Self {
            ed_mesh: ed_mesh.clone(),
            frame,
            model: model.clone(),
            apex_index: ed_mesh.apex_index(),
            arc,
            edge_activity,
            edge_infarcted,
            compensation,
            infarcts: resolved,
        })
    }

    pub fn model(&self) -> &MotionModel {
        &self.model
    }

    pub fn ed_mesh(&self) -> &MyocardialMesh<f64> {
        &self.ed_mesh
    }

    pub fn ed_frame(&self) -> &WallFrame {
        &self.frame
    }

    /// Arc position of every ED mid-wall vertex.
    pub fn arc_positions(&self) -> &[f64] {
        &self.arc
    }

    pub fn compensation_factor(&self) -> f64 {
        self.compensation
    }

    /// Arc positions of the infarct centres.
    pub fn infarct_centres(&self) -> Vec<f64> {
        self.infarcts.iter().map(|i| i.centre).collect()
    }

    fn is_identity(&self, t: usize) -> bool {
        let c = self.model.activation(t);
        c == 0.0
            || (self.model.peak_longitudinal_shortening() == 0.0 && self.model.peak_radial_thickening() == 0.0)
    }

    /// Length ratio of every mid-wall edge at frame `t` relative to ED.
    pub fn edge_stretch(&self, t: usize) -> Vec<f64> {
        let shortening = self.model.peak_longitudinal_shortening() * self.model.activation(t);
        self.edge_activity.iter().map(|a| 1.0 - shortening * a).collect()
    }

    fn thickening(&self, t: usize) -> f64 {
        1.0 + self.model.peak_radial_thickening() * self.model.activation(t)
    }

    /// Contractility `s` at arc position `l`, before compensation.
    pub fn contractility(&self, l: f64) -> f64 {
        1.0 - self
            .infarcts
            .iter()
            .map(|inf| inf.alpha * (-(l - inf.centre).powi(2) / (2.0 * inf.sigma * inf.sigma)).exp())
            .sum::<f64>()
    }

    /// Local longitudinal shortening density at mid-wall vertex `i`:
    /// peak shortening x activation x compensation x contractility.
    pub fn vertex_shortening(&self, i: usize, t: usize) -> f64 {
        let touches_infarct = (i > 0 && self.edge_infarcted[i - 1])
            || (i < self.edge_infarcted.len() && self.edge_infarcted[i]);
        let lambda = if touches_infarct { 1.0 } else { self.compensation };
        self.model.peak_longitudinal_shortening()
            * self.model.activation(t)
            * lambda
            * self.contractility(self.arc[i])
    }

    /// Wall frame at frame `t`, apex held fixed.
    pub fn frame_at(&self, t: usize) -> WallFrame {
        if self.is_identity(t) {
            return self.frame.clone();
        }
        let stretch = self.edge_stretch(t);
        let mids = &self.frame.mids;
        let mut moved = mids.clone();
        let apex = self.apex_index;
        for i in (0..apex).rev() {
            moved[i] = moved[i + 1] - (mids[i + 1] - mids[i]) * stretch[i];
        }
        for i in apex + 1..mids.len() {
            moved[i] = moved[i - 1] + (mids[i] - mids[i - 1]) * stretch[i - 1];
        }
        let g = self.thickening(t);
        let halves = self.frame.halves.iter().map(|&h| h * g).collect();
        WallFrame::new(moved, halves)
    }

    pub fn mesh_at(&self, t: usize) -> Result<MyocardialMesh<f64>> {
        if self.is_identity(t) {
            return Ok(self.ed_mesh.clone().with_frame_index(t));
        }
        let frame = self.frame_at(t);
        let (endo, epi) = frame
            .mids
            .iter()
            .zip(&frame.halves)
            .map(|(&m, &h)| (m - h, m + h))
            .unzip();
        MyocardialMesh::from_estimate(endo, epi, self.apex_index, t)
    }

    /// Position at frame `t` of the material point `c`.
    pub fn position(&self, c: MaterialCoord, t: usize) -> Point2D<f64> {
        self.frame_at(t).position(c)
    }

    /// Moves an ED point to frame `t`. Points outside the wall stay put.
    pub fn displace_point(&self, p: Point2D<f64>, t: usize) -> Point2D<f64> {
        if self.is_identity(t) {
            return p;
        }
        match self.frame.locate(p, 1.0, false) {
            Some(c) => self.frame_at(t).position(c),
            None => p,
        }
    }

    /// Batch form of [`MotionField::displace_point`] sharing one deformed frame.
    pub fn displace_points(&self, points: &[Point2D<f64>], t: usize) -> Vec<Point2D<f64>> {
        use rayon::prelude::*;
        if self.is_identity(t) {
            return points.to_vec();
        }
        let moved = self.frame_at(t);
        points
            .par_iter()
            .map(|&p| match self.frame.locate(p, 1.0, false) {
                Some(c) => moved.position(c),
                None => p,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_segment_layout;
    use crate::phantom::config::GeometryConfig;
    use crate::phantom::ellipse::generate_ed_mesh;

    fn setup(infarcts: &[InfarctSpec]) -> (MotionField, SegmentLayout) {
        let cfg = GeometryConfig::default();
        let mesh = generate_ed_mesh(&cfg, 0).unwrap();
        let layout = build_segment_layout(mesh.midline().points(), mesh.apex_index(), cfg.view).unwrap();
        let model = MotionModel::raised_cosine(32, 0, 12, 0.2, 0.3).unwrap();
        (MotionField::new(&mesh, &layout, &model, infarcts).unwrap(), layout)
    }

    #[test]
    fn identity_at_ed() {
        let (field, _) = setup(&[]);
        for p in field.ed_mesh().vertices() {
            assert_eq!(field.displace_point(p, 0), p);
        }
        let p = Point2D::new(7.3, 11.1);
        assert_eq!(field.displace_point(p, 0), p);
    }

    #[test]
    fn midline_arc_position_scales_exactly() {
        let (field, _) = setup(&[]);
        let frame = field.ed_frame();
        let apex = field.ed_mesh().apex_index();
        let arc = field.arc_positions();
        let moved = field.frame_at(12);
        let moved_arc = cumulative_lengths(moved.mids());
        for (edge, u) in [(3usize, 0.25), (20, 0.7), (14, 0.5)] {
            let c = MaterialCoord { edge, u, r: 0.0 };
            let p = frame.position(c);
            let from_apex = (arc[edge] + u * (arc[edge + 1] - arc[edge]) - arc[apex]).abs();
            let q = field.position(c, 12);
            let moved_from_apex =
                (moved_arc[edge] + moved.mids()[edge].distance(q) - moved_arc[apex]).abs();
            assert!((moved_from_apex - 0.8 * from_apex).abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn locate_round_trips() {
        let (field, _) = setup(&[]);
        let frame = field.ed_frame();
        for (edge, u, r) in [(0, 0.0, -1.0), (5, 0.3, 0.9), (15, 0.99, -0.2), (29, 1.0, 1.0)] {
            let c = MaterialCoord { edge, u, r };
            let p = frame.position(c);
            let back = frame.locate(p, 1.0, false).unwrap();
            assert!(frame.position(back).distance(p) < 1e-9);
        }
        assert!(frame.locate(Point2D::new(16.0, 15.0), 1.0, false).is_none());
    }

    #[test]
    fn full_reduction_at_centre_has_no_local_shortening() {
        let label = "mid-anterolateral".to_string();
        let spec = InfarctSpec { segment_label: label.clone(), reduction_alpha: 1.0, sigma: 3.0, compensate: false };
        let (field, _) = setup(&[spec]);
        let centre = field.infarct_centres()[0];
        assert_eq!(field.contractility(centre), 0.0);
    }

    #[test]
    fn gaussian_integral_matches_total_mass() {
        let total = gaussian_integral(-1e3, 1e3, 0.5, 2.0);
        assert!((total - 2.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
    }
}
