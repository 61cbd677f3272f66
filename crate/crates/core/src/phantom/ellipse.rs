use std::f64::consts::FRAC_PI_2;

use crate::error::Result;
use crate::geometry::{Contour, MyocardialMesh, Point2D};
use crate::phantom::config::GeometryConfig;

const ARC_TABLE_SAMPLES: usize = 20_000;

/// Mid-wall half ellipse at parameter `phi` in `[0, pi]`: basal-left at 0,
/// apex at pi/2.
fn ellipse_point(cfg: &GeometryConfig, phi: f64) -> Point2D<f64> {
    let a = cfg.short_axis / 2.0;
    Point2D::new(
        cfg.base_center[0] - a * phi.cos(),
        cfg.base_center[1] + cfg.long_axis * phi.sin(),
    )
}

/// Unit normal pointing away from the ellipse centre (towards the epicardium).
fn outward_normal(cfg: &GeometryConfig, phi: f64) -> Point2D<f64> {
    let a = cfg.short_axis / 2.0;
    let n = Point2D::new(-phi.cos() / a, phi.sin() / cfg.long_axis);
    n * (1.0 / n.norm())
}

/// Parameters of `count + 1` points equally spaced in arc length on `[0, pi/2]`.
fn equal_arc_parameters(cfg: &GeometryConfig, count: usize) -> Vec<f64> {
    let phis: Vec<f64> = (0..=ARC_TABLE_SAMPLES)
        .map(|k| FRAC_PI_2 * k as f64 / ARC_TABLE_SAMPLES as f64)
        .collect();
    let mut cum = vec![0.0; phis.len()];
    for k in 1..phis.len() {
        cum[k] = cum[k - 1] + ellipse_point(cfg, phis[k]).distance(ellipse_point(cfg, phis[k - 1]));
    }
    let total = cum[ARC_TABLE_SAMPLES];
    let mut out = Vec::with_capacity(count + 1);
    let mut k = 0;
    for j in 0..=count {
        if j == count {
            out.push(FRAC_PI_2);
            break;
        }
        let target = total * j as f64 / count as f64;
        while k + 1 < ARC_TABLE_SAMPLES && cum[k + 1] < target {
            k += 1;
        }
        let span = cum[k + 1] - cum[k];
        let frac = if span > 0.0 { (target - cum[k]) / span } else { 0.0 };
        out.push(phis[k] + frac * (phis[k + 1] - phis[k]));
    }
    out
}

/// End-diastolic mesh: endo and epi offset by half the wall thickness along
/// the mid-wall normal, vertices equally spaced in mid-wall arc length and
/// mirror-symmetric about the long axis.
pub fn generate_ed_mesh(cfg: &GeometryConfig, frame_index: usize) -> Result<MyocardialMesh<f64>> {
    cfg.validate()?;
    let half_count = (cfg.vertices_per_contour - 1) / 2;
    let half_wall = cfg.wall_thickness / 2.0;
    let params = equal_arc_parameters(cfg, half_count);

    let mut endo = Vec::with_capacity(cfg.vertices_per_contour);
    let mut epi = Vec::with_capacity(cfg.vertices_per_contour);
    for &phi in &params {
        let mid = ellipse_point(cfg, phi);
        let n = outward_normal(cfg, phi);
        endo.push(mid - n * half_wall);
        epi.push(mid + n * half_wall);
    }
    let mirror = |p: Point2D<f64>| Point2D::new(2.0 * cfg.base_center[0] - p.x, p.y);
    for j in (0..half_count).rev() {
        endo.push(mirror(endo[j]));
        epi.push(mirror(epi[j]));
    }
    // the apex sits exactly on the axis
    endo[half_count].x = cfg.base_center[0];
    epi[half_count].x = cfg.base_center[0];

    MyocardialMesh::new(Contour::new(endo)?, Contour::new(epi)?, half_count, frame_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn constructor_contract() {
        let cfg = GeometryConfig {
            long_axis: 80.0,
            short_axis: 50.0,
            wall_thickness: 10.0,
            vertices_per_contour: 31,
            ..Default::default()
        };
        let mesh = generate_ed_mesh(&cfg, 0).unwrap();
        assert_eq!(mesh.vertex_count(), 31);
        assert_eq!(mesh.apex_index(), 15);
        // apex is the deepest point
        let deepest = mesh
            .midline()
            .points()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.y.partial_cmp(&b.1.y).unwrap())
            .unwrap()
            .0;
        assert_eq!(deepest, 15);
    }

    #[test]
    fn wall_thickness_everywhere() {
        let cfg = GeometryConfig::default();
        let mesh = generate_ed_mesh(&cfg, 0).unwrap();
        for (a, b) in mesh.endo().points().iter().zip(mesh.epi().points()) {
            let direct = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
            assert!((direct - cfg.wall_thickness).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_wall_is_rejected() {
        let cfg = GeometryConfig { wall_thickness: 0.0, ..Default::default() };
        assert!(matches!(generate_ed_mesh(&cfg, 0), Err(Error::Geometry(_))));
    }

    #[test]
    fn equal_midline_spacing() {
        let mesh = generate_ed_mesh(&GeometryConfig::default(), 0).unwrap();
        let mid = mesh.midline();
        let lens: Vec<f64> = mid.points().windows(2).map(|w| w[0].distance(w[1])).collect();
        let mean = lens.iter().sum::<f64>() / lens.len() as f64;
        assert!(lens.iter().all(|l| (l - mean).abs() / mean < 0.01));
    }
}
