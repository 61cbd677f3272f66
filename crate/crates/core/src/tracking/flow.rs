use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::speckle::BModeFrame;
use crate::tracking::field::DisplacementField;
use crate::tracking::image::{ImageF32, Pyramid};
use crate::tracking::matching::{match_point, MatchParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub pyramid_levels: usize,
    /// Block half-width, pixels.
    pub block_radius: usize,
    /// Integer search half-width at every pyramid level, pixels.
    pub search_radius: usize,
    /// Frames per template window in point tracking.
    pub window_length: usize,
    pub subpixel: bool,
    /// Spacing of the block grid in dense flow, pixels.
    pub grid_step: usize,
    /// 3x3 component-wise median over the block grid.
    pub median_filter: bool,
    /// Half-width, in vertices, of the median applied along each contour
    /// to point-tracking steps; 0 disables it.
    pub contour_smoothing: usize,
    /// Fraction of the wall thickness by which point templates are moved
    /// inside the wall, in `[0, 0.5)`.
    pub wall_inset: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            pyramid_levels: 3,
            block_radius: 6,
            search_radius: 2,
            window_length: 8,
            subpixel: true,
            grid_step: 4,
            median_filter: true,
            contour_smoothing: 2,
            wall_inset: 0.25,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tracker.pyramid_levels", self.pyramid_levels),
            ("tracker.block_radius", self.block_radius),
            ("tracker.search_radius", self.search_radius),
            ("tracker.window_length", self.window_length),
            ("tracker.grid_step", self.grid_step),
        ];
        for (name, v) in positive {
            if v < 1 {
                return Err(Error::validation(name, "must be at least 1"));
            }
        }
        if !(0.0..0.5).contains(&self.wall_inset) {
            return Err(Error::validation(
                "tracker.wall_inset",
                format!("must lie in [0, 0.5), got {}", self.wall_inset),
            ));
        }
        Ok(())
    }

    pub(crate) fn match_params(&self) -> MatchParams {
        MatchParams {
            block_radius: self.block_radius,
            search_radius: self.search_radius,
            subpixel: self.subpixel,
        }
    }

    pub(crate) fn pyramid(&self, image: ImageF32) -> Pyramid {
        Pyramid::new(image, self.pyramid_levels, 2 * self.block_radius + 1)
    }

    pub(crate) fn check_size(&self, width: usize, height: usize) -> Result<()> {
        let block = 2 * self.block_radius + 1;
        if width < block || height < block {
            return Err(Error::Size(format!(
                "{width}x{height} frame is smaller than one {block}x{block} block"
            )));
        }
        Ok(())
    }
}

fn grid_nodes(extent: usize, step: usize) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..extent).step_by(step).collect();
    if *nodes.last().unwrap() != extent - 1 {
        nodes.push(extent - 1);
    }
    nodes
}

fn median_filter(values: &[[f64; 2]], nx: usize, ny: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(values.len());
    let mut buf = Vec::with_capacity(9);
    for gy in 0..ny {
        for gx in 0..nx {
            let mut v = [0.0; 2];
            for (k, slot) in v.iter_mut().enumerate() {
                buf.clear();
                for yy in gy.saturating_sub(1)..=(gy + 1).min(ny - 1) {
                    for xx in gx.saturating_sub(1)..=(gx + 1).min(nx - 1) {
                        buf.push(values[yy * nx + xx][k]);
                    }
                }
                buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
                *slot = buf[buf.len() / 2];
            }
            out.push(v);
        }
    }
    out
}

/// Locates `x` within sorted `nodes`; returns the bracketing index and weight.
fn bracket(nodes: &[usize], x: usize) -> (usize, f64) {
    if nodes.len() == 1 {
        return (0, 0.0);
    }
    let i = match nodes.binary_search(&x) {
        Ok(i) => i.min(nodes.len() - 2),
        Err(i) => i - 1,
    };
    let w = (x - nodes[i]) as f64 / (nodes[i + 1] - nodes[i]) as f64;
    (i, w)
}

/// Block-matching flow between two float images.
pub fn estimate_flow_images(
    a: &ImageF32,
    b: &ImageF32,
    config: &TrackerConfig,
    pixel_pitch: f32,
    from_frame: usize,
    to_frame: usize,
) -> Result<DisplacementField> {
    config.validate()?;
    if a.width != b.width || a.height != b.height {
        return Err(Error::Size(format!(
            "frames differ in size: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    config.check_size(a.width, a.height)?;
    let (w, h) = (a.width, a.height);
    let pa = config.pyramid(a.clone());
    let pb = config.pyramid(b.clone());
    let params = config.match_params();
    let xs = grid_nodes(w, config.grid_step);
    let ys = grid_nodes(h, config.grid_step);
    let (nx, ny) = (xs.len(), ys.len());
    let mut grid: Vec<[f64; 2]> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let s = (xs[k % nx] as f64, ys[k / nx] as f64);
            let found = match_point(&[(&pa, s)], &pb, s, &params);
            [found.0 - s.0, found.1 - s.1]
        })
        .collect();
    if config.median_filter {
        grid = median_filter(&grid, nx, ny);
    }
    let mut vectors = Vec::with_capacity(w * h);
    for y in 0..h {
        let (iy, wy) = bracket(&ys, y);
        let iy1 = (iy + 1).min(ny - 1);
        for x in 0..w {
            let (ix, wx) = bracket(&xs, x);
            let ix1 = (ix + 1).min(nx - 1);
            let mut v = [0.0f32; 2];
            for (k, slot) in v.iter_mut().enumerate() {
                let g = |gx: usize, gy: usize| grid[gy * nx + gx][k];
                let top = g(ix, iy) * (1.0 - wx) + g(ix1, iy) * wx;
                let bottom = g(ix, iy1) * (1.0 - wx) + g(ix1, iy1) * wx;
                *slot = (top * (1.0 - wy) + bottom * wy) as f32;
            }
            vectors.push(v);
        }
    }
    DisplacementField::new(w, h, pixel_pitch, from_frame, to_frame, vectors)
}

/// Dense flow from `frame_a` to `frame_b`.
pub fn estimate_flow(frame_a: &BModeFrame, frame_b: &BModeFrame, config: &TrackerConfig) -> Result<DisplacementField> {
    estimate_flow_images(
        &ImageF32::from_frame(frame_a),
        &ImageF32::from_frame(frame_b),
        config,
        frame_a.pixel_pitch as f32,
        frame_a.frame_index,
        frame_b.frame_index,
    )
}

/// Forward (`t -> t+1`) and independently estimated backward (`t+1 -> t`)
/// fields for every consecutive pair.
pub fn estimate_sequence_flow(frames: &[BModeFrame], config: &TrackerConfig) -> Result<Vec<DisplacementField>> {
    if frames.is_empty() {
        return Err(Error::Sequence("empty frame sequence".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..frames.len() - 1).flat_map(|t| [(t, t + 1), (t + 1, t)]).collect();
    pairs
        .into_par_iter()
        .map(|(i, j)| estimate_flow(&frames[i], &frames[j], config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, seed: u64) -> ImageF32 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // smooth random texture: sum of a few blurred impulses
        let raw: Vec<f32> = (0..w * h).map(|_| rng.random::<f32>()).collect();
        let mut data = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut s = 0.0;
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        let xx = (x as i32 + dx).clamp(0, w as i32 - 1) as usize;
                        let yy = (y as i32 + dy).clamp(0, h as i32 - 1) as usize;
                        s += raw[yy * w + xx];
                    }
                }
                data[y * w + x] = 255.0 * s / 9.0;
            }
        }
        ImageF32::new(w, h, data).unwrap()
    }

    fn shift_right(img: &ImageF32, k: usize) -> ImageF32 {
        let mut data = img.data.clone();
        for y in 0..img.height {
            for x in 0..img.width {
                data[y * img.width + x] = img.at(x.saturating_sub(k), y);
            }
        }
        ImageF32::new(img.width, img.height, data).unwrap()
    }

    #[test]
    fn identical_frames_give_zero_field() {
        let a = noise(64, 64, 1);
        let f = estimate_flow_images(&a, &a, &TrackerConfig::default(), 0.25, 0, 1).unwrap();
        assert_eq!(f.max_magnitude(), 0.0);
    }

    #[test]
    fn pure_translation() {
        let a = noise(64, 64, 2);
        let b = shift_right(&a, 3);
        let f = estimate_flow_images(&a, &b, &TrackerConfig::default(), 0.25, 0, 1).unwrap();
        for y in 16..48 {
            for x in 16..48 {
                let v = f.at(x, y);
                assert!((v[0] - 3.0).abs() < 0.25 && v[1].abs() < 0.25, "({x},{y}) {v:?}");
            }
        }
    }

    #[test]
    fn too_small_frame_is_size_error() {
        let a = ImageF32::new(8, 8, vec![0.0; 64]).unwrap();
        assert!(matches!(
            estimate_flow_images(&a, &a, &TrackerConfig::default(), 0.25, 0, 1),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn bracket_weights() {
        let nodes = [0, 4, 8, 9];
        assert_eq!(bracket(&nodes, 0), (0, 0.0));
        assert_eq!(bracket(&nodes, 6), (1, 0.5));
        assert_eq!(bracket(&nodes, 9), (2, 1.0));
    }
}
