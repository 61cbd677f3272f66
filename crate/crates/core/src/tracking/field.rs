use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{MyocardialMesh, Point2D};

/// Dense per-pixel motion from `from_frame` to `to_frame`, in pixels.
/// Pixel `(col, row)` is centred at `(col, row) * pixel_pitch` mm.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub width: usize,
    pub height: usize,
    pub pixel_pitch: f32,
    pub from_frame: usize,
    pub to_frame: usize,
    /// Row-major `(dx, dy)`.
    pub vectors: Vec<[f32; 2]>,
}

impl DisplacementField {
    pub fn new(
        width: usize,
        height: usize,
        pixel_pitch: f32,
        from_frame: usize,
        to_frame: usize,
        vectors: Vec<[f32; 2]>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || vectors.len() != width * height {
            return Err(Error::Structural(format!(
                "{} vectors for a {width}x{height} field",
                vectors.len()
            )));
        }
        if !(pixel_pitch > 0.0 && pixel_pitch.is_finite()) {
            return Err(Error::validation("pixel_pitch", format!("must be positive, got {pixel_pitch}")));
        }
        if to_frame + 1 != from_frame && from_frame + 1 != to_frame {
            return Err(Error::Sequence(format!(
                "field must link adjacent frames, got {from_frame} -> {to_frame}"
            )));
        }
        if let Some(i) = vectors.iter().position(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(Error::format(
                format!("frame {from_frame}"),
                format!("non-finite vector at pixel {i}"),
            ));
        }
        Ok(Self {
            width,
            height,
            pixel_pitch,
            from_frame,
            to_frame,
            vectors,
        })
    }

    pub fn zeros(width: usize, height: usize, pixel_pitch: f32, from_frame: usize, to_frame: usize) -> Result<Self> {
        Self::new(width, height, pixel_pitch, from_frame, to_frame, vec![[0.0; 2]; width * height])
    }

    pub fn is_forward(&self) -> bool {
        self.to_frame == self.from_frame + 1
    }

    pub fn at(&self, col: usize, row: usize) -> [f32; 2] {
        self.vectors[row * self.width + col]
    }

    /// Bilinear displacement at a fractional pixel position. Positions
    /// outside the grid are clamped to the border; the flag reports it.
    pub fn sample(&self, x: f64, y: f64) -> ([f64; 2], bool) {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let outside = !(0.0..=max_x).contains(&x) || !(0.0..=max_y).contains(&y);
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = (x.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (y.floor() as usize).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            let v00 = self.at(x0, y0)[k] as f64;
            let v10 = self.at(x1, y0)[k] as f64;
            let v01 = self.at(x0, y1)[k] as f64;
            let v11 = self.at(x1, y1)[k] as f64;
            *o = (1.0 - fx) * (1.0 - fy) * v00 + fx * (1.0 - fy) * v10 + (1.0 - fx) * fy * v01 + fx * fy * v11;
        }
        (out, outside)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| (v[0] as f64).hypot(v[1] as f64))
            .fold(0.0, f64::max)
    }
}

/// Result of warping a mesh; `out_of_bounds` lists endo vertices then epi.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedMesh {
    pub mesh: MyocardialMesh<f64>,
    pub out_of_bounds: Vec<bool>,
}

/// Moves each vertex by the bilinearly interpolated displacement at its
/// position. The mesh must sit at the field's `from_frame`.
pub fn warp_mesh(mesh: &MyocardialMesh<f64>, field: &DisplacementField) -> Result<WarpedMesh> {
    if mesh.frame_index != field.from_frame {
        return Err(Error::Sequence(format!(
            "mesh is at frame {} but field starts at frame {}",
            mesh.frame_index, field.from_frame
        )));
    }
    let pitch = field.pixel_pitch as f64;
    let mut flags = Vec::with_capacity(2 * mesh.vertex_count());
    let mut move_point = |p: Point2D<f64>| {
        let (d, outside) = field.sample(p.x / pitch, p.y / pitch);
        flags.push(outside);
        Point2D::new(p.x + d[0] * pitch, p.y + d[1] * pitch)
    };
    let endo: Vec<_> = mesh.endo().points().iter().map(|&p| move_point(p)).collect();
    let epi: Vec<_> = mesh.epi().points().iter().map(|&p| move_point(p)).collect();
    Ok(WarpedMesh {
        mesh: MyocardialMesh::from_estimate(endo, epi, mesh.apex_index(), field.to_frame)?,
        out_of_bounds: flags,
    })
}

/// Meshes for frames `0..n_frames`, composing warps forward and backward
/// from `mesh_ref.frame_index`. `fields` must contain `t -> t+1` for every
/// later pair and `t+1 -> t` for every earlier pair.
pub fn propagate_mesh_flow(
    mesh_ref: &MyocardialMesh<f64>,
    fields: &[DisplacementField],
    n_frames: usize,
) -> Result<Vec<MyocardialMesh<f64>>> {
    let start = mesh_ref.frame_index;
    if start >= n_frames {
        return Err(Error::Sequence(format!(
            "reference frame {start} outside a {n_frames}-frame sequence"
        )));
    }
    let lookup: HashMap<(usize, usize), &DisplacementField> =
        fields.iter().map(|f| ((f.from_frame, f.to_frame), f)).collect();
    let get = |from: usize, to: usize| {
        lookup
            .get(&(from, to))
            .copied()
            .ok_or_else(|| Error::Sequence(format!("missing displacement field {from} -> {to}")))
    };

    let mut meshes: Vec<Option<MyocardialMesh<f64>>> = vec![None; n_frames];
    meshes[start] = Some(mesh_ref.clone());
    let mut current = mesh_ref.clone();
    for t in start..n_frames - 1 {
        current = warp_mesh(&current, get(t, t + 1)?)?.mesh;
        meshes[t + 1] = Some(current.clone());
    }
    current = mesh_ref.clone();
    for t in (1..=start).rev() {
        current = warp_mesh(&current, get(t, t - 1)?)?.mesh;
        meshes[t - 1] = Some(current.clone());
    }
    Ok(meshes.into_iter().map(|m| m.expect("every frame visited")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Contour;

    fn mesh(frame: usize) -> MyocardialMesh<f64> {
        let endo = (0..9).map(|i| Point2D::new(2.0 + i as f64, 3.0)).collect();
        let epi = (0..9).map(|i| Point2D::new(2.0 + i as f64, 5.0)).collect();
        MyocardialMesh::new(Contour::new(endo).unwrap(), Contour::new(epi).unwrap(), 4, frame).unwrap()
    }

    #[test]
    fn zero_field_is_identity() {
        let f = DisplacementField::zeros(64, 64, 0.25, 0, 1).unwrap();
        let w = warp_mesh(&mesh(0), &f).unwrap();
        assert_eq!(w.mesh.endo(), mesh(0).endo());
        assert_eq!(w.mesh.frame_index, 1);
        assert!(w.out_of_bounds.iter().all(|b| !b));
    }

    #[test]
    fn uniform_field_unit_conversion() {
        let f = DisplacementField::new(64, 64, 0.25, 0, 1, vec![[2.0, 0.0]; 64 * 64]).unwrap();
        let w = warp_mesh(&mesh(0), &f).unwrap();
        for (a, b) in w.mesh.vertices().zip(mesh(0).vertices()) {
            assert!((a.x - b.x - 0.5).abs() < 1e-12);
            assert_eq!(a.y, b.y);
        }
    }

    #[test]
    fn bilinear_against_four_neighbours() {
        // dx = 0.1 col + 0.05 row, dy = -0.02 col
        let (w, h) = (16, 16);
        let vectors = (0..h)
            .flat_map(|r| (0..w).map(move |c| [0.1 * c as f32 + 0.05 * r as f32, -0.02 * c as f32]))
            .collect();
        let f = DisplacementField::new(w, h, 1.0, 3, 2, vectors).unwrap();
        let (x, y) = (5.3, 7.6);
        let (d, out) = f.sample(x, y);
        assert!(!out);
        // hand computation from the four neighbours (5,7), (6,7), (5,8), (6,8)
        let q = |c: f64, r: f64| 0.1 * c + 0.05 * r;
        let expect = 0.7 * 0.4 * q(5.0, 7.0) + 0.3 * 0.4 * q(6.0, 7.0) + 0.7 * 0.6 * q(5.0, 8.0) + 0.3 * 0.6 * q(6.0, 8.0);
        assert!((d[0] - expect).abs() < 1e-6);
        assert!((d[1] + 0.02 * 5.3).abs() < 1e-6);
    }

    #[test]
    fn outside_vertices_are_clamped_and_flagged() {
        let f = DisplacementField::new(8, 8, 1.0, 0, 1, vec![[1.0, 0.0]; 64]).unwrap();
        let w = warp_mesh(&mesh(0), &f).unwrap();
        assert!(w.out_of_bounds.iter().any(|&b| b));
        assert!(w.out_of_bounds[0..6].iter().all(|&b| !b));
    }

    #[test]
    fn propagate_requires_all_fields() {
        let fields = vec![DisplacementField::zeros(32, 32, 0.5, 0, 1).unwrap()];
        assert!(matches!(propagate_mesh_flow(&mesh(0), &fields, 3), Err(Error::Sequence(_))));
        let mut fields = fields;
        fields.push(DisplacementField::zeros(32, 32, 0.5, 1, 2).unwrap());
        let meshes = propagate_mesh_flow(&mesh(0), &fields, 3).unwrap();
        assert!(meshes.iter().all(|m| m.endo() == mesh(0).endo()));
        assert_eq!(meshes[2].frame_index, 2);
    }

    #[test]
    fn rejects_non_adjacent_frames() {
        assert!(DisplacementField::zeros(4, 4, 1.0, 0, 2).is_err());
    }
}
