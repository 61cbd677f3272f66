use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{MyocardialMesh, Point2D};
use crate::speckle::BModeFrame;
use crate::tracking::flow::TrackerConfig;
use crate::tracking::image::{ImageF32, Pyramid};
use crate::tracking::matching::match_point;
use crate::tracking::trajectories::PointTrajectories;

/// Tracks every mesh vertex (endo then epi) through the sequence, forward
/// and backward from the mesh's frame. Each vertex is matched against a
/// template taken at the start of its current window of `window_length`
/// frames; the frame-to-frame steps are then median-filtered along each
/// contour over `contour_smoothing` neighbours per side.
///
/// Templates are centred `wall_inset` of the local wall thickness inside
/// each boundary, so they hold myocardium rather than cavity or
/// surrounding tissue; boundary positions are recovered by linear
/// extrapolation across the wall.
pub fn track_points(frames: &[BModeFrame], query_mesh: &MyocardialMesh<f64>, config: &TrackerConfig) -> Result<PointTrajectories> {
    config.validate()?;
    let Some(first) = frames.first() else {
        return Err(Error::Sequence("empty frame sequence".into()));
    };
    let n_frames = frames.len();
    let anchor = query_mesh.frame_index;
    if anchor >= n_frames {
        return Err(Error::Sequence(format!(
            "query mesh frame {anchor} outside a {n_frames}-frame sequence"
        )));
    }
    let (w, h) = (first.width, first.height);
    if let Some(f) = frames.iter().find(|f| f.width != w || f.height != h) {
        return Err(Error::Size(format!("frame {} is {}x{}, expected {w}x{h}", f.frame_index, f.width, f.height)));
    }
    config.check_size(w, h)?;
    let pitch = first.pixel_pitch;
    let pyramids: Vec<Pyramid> = frames
        .par_iter()
        .map(|f| config.pyramid(ImageF32::from_frame(f)))
        .collect();
    let params = config.match_params();
    let window = config.window_length;

    let query: Vec<Point2D<f64>> = query_mesh.vertices().collect();
    let n_points = query.len();
    let contour_len = query_mesh.vertex_count();
    let inset = config.wall_inset;
    // Templates sit `inset` of the wall thickness inside each boundary.
    let (endo, epi) = (query_mesh.endo().points(), query_mesh.epi().points());
    let inner: Vec<(f64, f64)> = endo
        .iter()
        .zip(epi)
        .map(|(&a, &b)| a.lerp(b, inset))
        .chain(endo.iter().zip(epi).map(|(&a, &b)| b.lerp(a, inset)))
        .map(|p| (p.x / pitch, p.y / pitch))
        .collect();
    let mut px: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_frames];
    px[anchor] = inner;
    for dir in [1isize, -1] {
        let mut template_frame = anchor;
        let mut t = anchor as isize + dir;
        while (0..n_frames as isize).contains(&t) {
            let tu = t as usize;
            let prev = (tu as isize - dir) as usize;
            if template_frame.abs_diff(tu) > window - 1 {
                template_frame = prev;
            }
            let (from, last, to) = (&pyramids[template_frame], &pyramids[prev], &pyramids[tu]);
            let (sources, priors) = (&px[template_frame], &px[prev]);
            let matched: Vec<(f64, f64)> = (0..n_points)
                .into_par_iter()
                .map(|i| {
                    if template_frame == prev {
                        match_point(&[(from, sources[i])], to, priors[i], &params)
                    } else {
                        match_point(&[(from, sources[i]), (last, priors[i])], to, priors[i], &params)
                    }
                })
                .collect();
            let steps: Vec<[f64; 2]> = matched
                .iter()
                .zip(priors)
                .map(|(m, p)| [m.0 - p.0, m.1 - p.1])
                .collect();
            let mut smoothed = Vec::with_capacity(n_points);
            for contour in steps.chunks(contour_len) {
                smoothed.extend(median_along(contour, config.contour_smoothing));
            }
            px[tu] = priors.iter().zip(&smoothed).map(|(p, d)| (p.0 + d[0], p.1 + d[1])).collect();
            t += dir;
        }
    }
    // Boundaries move with the inset points plus the extrapolated change in
    // wall thickness, so zero motion reproduces the query exactly.
    let extrapolation = inset / (1.0 - 2.0 * inset);
    let origin = &px[anchor];
    let tracks: Vec<Vec<Point2D<f64>>> = (0..n_frames)
        .map(|t| {
            let moved: Vec<Point2D<f64>> = px[t]
                .iter()
                .zip(origin)
                .map(|(p, o)| Point2D::new((p.0 - o.0) * pitch, (p.1 - o.1) * pitch))
                .collect();
            let (da, db) = moved.split_at(contour_len);
            let (qa, qb) = query.split_at(contour_len);
            let endo = qa.iter().zip(da.iter().zip(db)).map(|(&q, (&a, &b))| q + a + (a - b) * extrapolation);
            let epi = qb.iter().zip(da.iter().zip(db)).map(|(&q, (&a, &b))| q + b + (b - a) * extrapolation);
            endo.chain(epi).collect()
        })
        .collect();

    let max_x = (w - 1) as f64 * pitch;
    let max_y = (h - 1) as f64 * pitch;
    let mut positions = Vec::with_capacity(n_points * n_frames);
    let mut visibility = Vec::with_capacity(n_points * n_frames);
    for frame in &tracks {
        for &p in frame {
            positions.push(p);
            visibility.push((0.0..=max_x).contains(&p.x) && (0.0..=max_y).contains(&p.y));
        }
    }
    PointTrajectories::new(n_points, n_frames, anchor, positions, visibility)
}

/// Component-wise running median over `2 * radius + 1` neighbours,
/// truncated at the contour ends.
fn median_along(values: &[[f64; 2]], radius: usize) -> Vec<[f64; 2]> {
    if radius == 0 {
        return values.to_vec();
    }
    let mut buf = Vec::with_capacity(2 * radius + 1);
    (0..values.len())
        .map(|i| {
            let window = &values[i.saturating_sub(radius)..(i + radius + 1).min(values.len())];
            let mut out = [0.0; 2];
            for (k, o) in out.iter_mut().enumerate() {
                buf.clear();
                buf.extend(window.iter().map(|v| v[k]));
                buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let m = buf.len();
                *o = if m % 2 == 1 { buf[m / 2] } else { 0.5 * (buf[m / 2 - 1] + buf[m / 2]) };
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Contour;

    fn textured(frame_index: usize) -> BModeFrame {
        let (w, h) = (48, 48);
        let data = (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                (127.0 + 60.0 * (0.7 * x).sin() * (0.45 * y).cos() + 40.0 * (0.23 * x + 0.31 * y).sin()) as u8
            })
            .collect();
        BModeFrame::new(w, h, 0.25, frame_index, data).unwrap()
    }

    #[test]
    fn static_sequence_keeps_points_fixed() {
        let frames: Vec<_> = (0..10).map(textured).collect();
        let endo = (0..9).map(|i| Point2D::new(2.0 + i as f64, 3.0)).collect();
        let epi = (0..9).map(|i| Point2D::new(2.0 + i as f64, 4.5)).collect();
        let mesh = MyocardialMesh::new(Contour::new(endo).unwrap(), Contour::new(epi).unwrap(), 4, 4).unwrap();
        let traj = track_points(&frames, &mesh, &TrackerConfig::default()).unwrap();
        let query: Vec<_> = mesh.vertices().collect();
        assert_eq!(traj.reference_frame, 4);
        for t in 0..10 {
            for (p, q) in traj.frame(t).iter().zip(&query) {
                assert!(p.distance(*q) < 1e-9, "frame {t}: {p:?} vs {q:?}");
            }
        }
        assert_eq!(traj.frame(4), &query[..]);
    }

    #[test]
    fn empty_sequence_is_error() {
        let endo = (0..9).map(|i| Point2D::new(2.0 + i as f64, 3.0)).collect();
        let epi = (0..9).map(|i| Point2D::new(2.0 + i as f64, 4.5)).collect();
        let mesh = MyocardialMesh::new(Contour::new(endo).unwrap(), Contour::new(epi).unwrap(), 4, 0).unwrap();
        assert!(matches!(track_points(&[], &mesh, &TrackerConfig::default()), Err(Error::Sequence(_))));
    }
}
