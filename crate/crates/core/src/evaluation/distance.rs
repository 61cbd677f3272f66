use crate::error::{Error, Result};
use crate::geometry::{MyocardialMesh, SegmentLayout};
use crate::scalar::Scalar;

/// Vertex-wise Euclidean error between estimated and reference meshes, in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceErrorReport<T> {
    pub per_frame_mean: Vec<T>,
    /// Mean of the per-frame means.
    pub sequence_mean: T,
    /// Sample standard deviation of the per-frame means.
    pub sequence_sd: T,
    /// `(segment label, mean over frames and the segment's vertices)`.
    pub per_segment_mean: Vec<(String, T)>,
}

pub(crate) fn mean_and_sample_sd<T: Scalar>(values: &[T]) -> (T, T) {
    if values.is_empty() {
        return (T::zero(), T::zero());
    }
    let n = T::of(values.len() as f64);
    let mean = values.iter().fold(T::zero(), |a, &v| a + v) / n;
    if values.len() < 2 {
        return (mean, T::zero());
    }
    let ss = values.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
    (mean, (ss / (n - T::one())).sqrt())
}

fn check_shapes<T: Scalar>(est: &[MyocardialMesh<T>], reference: &[MyocardialMesh<T>]) -> Result<()> {
    if est.len() != reference.len() {
        return Err(Error::Structural(format!(
            "{} estimated frames vs {} reference frames",
            est.len(),
            reference.len()
        )));
    }
    if est.is_empty() {
        return Err(Error::Structural("no frames to compare".into()));
    }
    for (t, (e, r)) in est.iter().zip(reference).enumerate() {
        if e.vertex_count() != r.vertex_count() {
            return Err(Error::Structural(format!(
                "frame {t}: {} estimated vertices vs {} reference vertices",
                e.vertex_count(),
                r.vertex_count()
            )));
        }
    }
    Ok(())
}

/// Per-vertex distances of one frame, endocardium first.
fn vertex_distances<T: Scalar>(est: &MyocardialMesh<T>, reference: &MyocardialMesh<T>) -> Vec<T> {
    est.vertices()
        .zip(reference.vertices())
        .map(|(a, b)| a.distance(b))
        .collect()
}

pub fn mean_distance_error<T: Scalar>(
    est: &[MyocardialMesh<T>],
    reference: &[MyocardialMesh<T>],
    layout: Option<&SegmentLayout>,
) -> Result<DistanceErrorReport<T>> {
    check_shapes(est, reference)?;
    let n = est[0].vertex_count();
    if let Some(layout) = layout {
        if layout.vertex_count() != n {
            return Err(Error::Structural(format!(
                "layout covers {} vertices, meshes have {n}",
                layout.vertex_count()
            )));
        }
    }

    let distances: Vec<Vec<T>> = est
        .iter()
        .zip(reference)
        .map(|(e, r)| vertex_distances(e, r))
        .collect();
    let per_frame_mean: Vec<T> = distances
        .iter()
        .map(|d| mean_and_sample_sd(d).0)
        .collect();
    let (sequence_mean, sequence_sd) = mean_and_sample_sd(&per_frame_mean);

    let per_segment_mean = layout
        .map(|layout| {
            layout
                .segments()
                .iter()
                .map(|s| {
                    let picked: Vec<T> = distances
                        .iter()
                        .flat_map(|d| (s.start..=s.end).flat_map(move |i| [d[i], d[n + i]]))
                        .collect();
                    (s.label.clone(), mean_and_sample_sd(&picked).0)
                })
                .collect()
        })
        .unwrap_or_default();

    Ok(DistanceErrorReport {
        per_frame_mean,
        sequence_mean,
        sequence_sd,
        per_segment_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_segment_layout, Point2D, View};

    fn mesh(dx: f64) -> MyocardialMesh<f64> {
        let endo = (0..13).map(|i| Point2D::new(i as f64 + dx, 0.0)).collect();
        let epi = (0..13).map(|i| Point2D::new(i as f64 + dx, 3.0)).collect();
        MyocardialMesh::from_estimate(endo, epi, 6, 0).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let a = vec![mesh(0.0); 3];
        let r = mean_distance_error(&a, &a, None).unwrap();
        assert_eq!(r.sequence_mean, 0.0);
        assert_eq!(r.sequence_sd, 0.0);
    }

    #[test]
    fn uniform_shift() {
        let a = vec![mesh(0.0); 4];
        let b = vec![mesh(1.0); 4];
        let layout = build_segment_layout(a[0].midline().points(), 6, View::FourChamber).unwrap();
        let r = mean_distance_error(&b, &a, Some(&layout)).unwrap();
        assert_eq!(r.sequence_mean, 1.0);
        assert_eq!(r.sequence_sd, 0.0);
        assert!(r.per_segment_mean.iter().all(|(_, v)| *v == 1.0));
    }

    #[test]
    fn shape_mismatch() {
        assert!(mean_distance_error(&[mesh(0.0)], &[mesh(0.0), mesh(0.0)], None).is_err());
    }
}
