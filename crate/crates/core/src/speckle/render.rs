use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::ScattererField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsfSpec {
    /// mm
    pub sigma_axial: f64,
    /// mm
    pub sigma_lateral: f64,
    /// Period of the axial cosine modulation, mm.
    pub axial_wavelength: f64,
    /// Support half-width in multiples of sigma (per axis).
    pub truncation_radius: f64,
}

impl Default for PsfSpec {
    fn default() -> Self {
        Self {
            sigma_axial: 0.3,
            sigma_lateral: 0.8,
            axial_wavelength: 0.44,
            truncation_radius: 3.0,
        }
    }
}

impl PsfSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("psf.sigma_axial", self.sigma_axial),
            ("psf.sigma_lateral", self.sigma_lateral),
            ("psf.axial_wavelength", self.axial_wavelength),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.truncation_radius >= 3.0) {
            return Err(Error::validation(
                "psf.truncation_radius",
                format!("must be at least 3, got {}", self.truncation_radius),
            ));
        }
        Ok(())
    }
}

/// Cartesian pixel grid; pixel `(col, row)` is centred at `(col, row) * pixel_pitch` mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub pixel_pitch: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            pixel_pitch: 0.25,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::validation("render.grid", "width and height must be positive"));
        }
        if !(self.pixel_pitch > 0.0 && self.pixel_pitch.is_finite()) {
            return Err(Error::validation(
                "render.grid.pixel_pitch",
                format!("must be positive, got {}", self.pixel_pitch),
            ));
        }
        Ok(())
    }

    /// Physical extent (width, height) in mm.
    pub fn field_of_view(&self) -> [f64; 2] {
        [self.width as f64 * self.pixel_pitch, self.height as f64 * self.pixel_pitch]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    /// Scatterers summed in storage order; bit-reproducible.
    #[default]
    Deterministic,
    /// Scatterer chunks summed on worker threads.
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub grid: GridConfig,
    pub psf: PsfSpec,
    pub dynamic_range_db: f64,
    /// Envelope mapped to full brightness. When absent a sequence uses the
    /// 99.9th envelope percentile of its first frame.
    pub reference_level: Option<f64>,
    pub mode: RenderMode,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            psf: PsfSpec::default(),
            dynamic_range_db: 60.0,
            reference_level: None,
            mode: RenderMode::Deterministic,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.psf.validate()?;
        if !(self.dynamic_range_db > 0.0) {
            return Err(Error::validation("render.dynamic_range_db", "must be positive"));
        }
        if let Some(r) = self.reference_level {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::validation("render.reference_level", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Complex echo field before envelope detection.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

impl ComplexImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![Complex64::new(0.0, 0.0); width * height],
        }
    }

    pub fn at(&self, col: usize, row: usize) -> Complex64 {
        self.data[row * self.width + col]
    }
}

/// 8-bit log-compressed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BModeFrame {
    pub width: usize,
    pub height: usize,
    pub pixel_pitch: f64,
    pub frame_index: usize,
    pub intensities: Vec<u8>,
}

impl BModeFrame {
    pub fn new(width: usize, height: usize, pixel_pitch: f64, frame_index: usize, intensities: Vec<u8>) -> Result<Self> {
        if intensities.len() != width * height {
            return Err(Error::Structural(format!(
                "{} intensities for a {width}x{height} frame",
                intensities.len()
            )));
        }
        if !(pixel_pitch > 0.0) {
            return Err(Error::validation("pixel_pitch", "must be positive"));
        }
        Ok(Self {
            width,
            height,
            pixel_pitch,
            frame_index,
            intensities,
        })
    }
}

fn accumulate(buffer: &mut [Complex64], field: &ScattererField, range: std::ops::Range<usize>, psf: &PsfSpec, grid: &GridConfig) {
    let pitch = grid.pixel_pitch;
    let reach_x = psf.truncation_radius * psf.sigma_lateral;
    let reach_y = psf.truncation_radius * psf.sigma_axial;
    let inv_2lat = 1.0 / (2.0 * psf.sigma_lateral * psf.sigma_lateral);
    let inv_2ax = 1.0 / (2.0 * psf.sigma_axial * psf.sigma_axial);
    let k = 2.0 * PI / psf.axial_wavelength;
    let mut wx = Vec::new();
    let mut wy = Vec::new();
    for s in range {
        let amp = field.amplitudes[s];
        let p = field.positions[s];
        let c0 = ((p.x - reach_x) / pitch).ceil().max(0.0);
        let c1 = ((p.x + reach_x) / pitch).floor().min(grid.width as f64 - 1.0);
        let r0 = ((p.y - reach_y) / pitch).ceil().max(0.0);
        let r1 = ((p.y + reach_y) / pitch).floor().min(grid.height as f64 - 1.0);
        if c0 > c1 || r0 > r1 || amp == 0.0 {
            continue;
        }
        let (c0, c1, r0, r1) = (c0 as usize, c1 as usize, r0 as usize, r1 as usize);
        wx.clear();
        wx.extend((c0..=c1).map(|c| {
            let dx = c as f64 * pitch - p.x;
            amp * (-dx * dx * inv_2lat).exp()
        }));
        wy.clear();
        wy.extend((r0..=r1).map(|r| {
            let dy = r as f64 * pitch - p.y;
            Complex64::from_polar((-dy * dy * inv_2ax).exp(), k * dy)
        }));
        for (r, y) in (r0..=r1).zip(&wy) {
            let row = &mut buffer[r * grid.width + c0..=r * grid.width + c1];
            for (px, x) in row.iter_mut().zip(&wx) {
                *px += y * x;
            }
        }
    }
}

/// Sum over scatterers of `amp * exp(-dx^2/2sl^2 - dy^2/2sa^2) * exp(i 2 pi dy / lambda)`.
pub fn render_complex(field: &ScattererField, psf: &PsfSpec, grid: &GridConfig, mode: RenderMode) -> Result<ComplexImage> {
    psf.validate()?;
    grid.validate()?;
    let mut image = ComplexImage::zeros(grid.width, grid.height);
    match mode {
        RenderMode::Deterministic => accumulate(&mut image.data, field, 0..field.len(), psf, grid),
        RenderMode::Parallel => {
            const CHUNK: usize = 2048;
            let n_chunks = field.len().div_ceil(CHUNK);
            image.data = (0..n_chunks)
                .into_par_iter()
                .fold(
                    || vec![Complex64::new(0.0, 0.0); grid.width * grid.height],
                    |mut buf, k| {
                        accumulate(&mut buf, field, k * CHUNK..((k + 1) * CHUNK).min(field.len()), psf, grid);
                        buf
                    },
                )
                .reduce(
                    || vec![Complex64::new(0.0, 0.0); grid.width * grid.height],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        a
                    },
                );
        }
    }
    Ok(image)
}

pub fn envelope(image: &ComplexImage) -> Vec<f64> {
    image.data.iter().map(|c| c.norm()).collect()
}

/// Log compression to `[0, 255]` without rounding.
pub fn compress(envelope: &[f64], reference_level: f64, dynamic_range_db: f64) -> Vec<f32> {
    envelope
        .iter()
        .map(|&e| {
            if e <= 0.0 {
                return 0.0;
            }
            let db = 20.0 * (e / reference_level).log10();
            (255.0 * (1.0 + db / dynamic_range_db)).clamp(0.0, 255.0) as f32
        })
        .collect()
}

pub fn quantize(values: &[f32]) -> Vec<u8> {
    values.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()
}

fn auto_reference(envelope: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = envelope.iter().copied().filter(|e| *e > 0.0).collect();
    if sorted.is_empty() {
        return 1.0;
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = ((sorted.len() as f64 * 0.999) as usize).min(sorted.len() - 1);
    sorted[k]
}

/// Renders one frame. Without a configured reference level the frame's own
/// envelope percentile is used.
pub fn render_frame(field: &ScattererField, config: &RenderConfig) -> Result<BModeFrame> {
    render_with_reference(field, config, config.reference_level)
}

fn render_with_reference(field: &ScattererField, config: &RenderConfig, reference: Option<f64>) -> Result<BModeFrame> {
    config.validate()?;
    let env = envelope(&render_complex(field, &config.psf, &config.grid, config.mode)?);
    let reference = reference.unwrap_or_else(|| auto_reference(&env));
    BModeFrame::new(
        config.grid.width,
        config.grid.height,
        config.grid.pixel_pitch,
        field.frame_index,
        quantize(&compress(&env, reference, config.dynamic_range_db)),
    )
}

/// Renders every field with one shared reference level.
pub fn render_sequence(fields: &[ScattererField], config: &RenderConfig) -> Result<Vec<BModeFrame>> {
    config.validate()?;
    let Some(first) = fields.first() else {
        return Ok(Vec::new());
    };
    let reference = match config.reference_level {
        Some(r) => r,
        None => auto_reference(&envelope(&render_complex(first, &config.psf, &config.grid, config.mode)?)),
    };
    fields
        .par_iter()
        .map(|f| render_with_reference(f, config, Some(reference)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2D;
    use crate::phantom::Region;

    fn single(x: f64, y: f64) -> ScattererField {
        ScattererField::new(0, 1.0, vec![Point2D::new(x, y)], vec![1.0], vec![true], vec![Region::Myocardium]).unwrap()
    }

    fn small_grid() -> RenderConfig {
        RenderConfig {
            grid: GridConfig { width: 40, height: 40, pixel_pitch: 0.25 },
            ..Default::default()
        }
    }

    #[test]
    fn single_scatterer_peaks_at_its_pixel() {
        let cfg = small_grid();
        let img = render_complex(&single(5.0, 4.0), &cfg.psf, &cfg.grid, RenderMode::Deterministic).unwrap();
        let env = envelope(&img);
        let argmax = env
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, 16 * 40 + 20);
    }

    #[test]
    fn empty_field_is_black() {
        let frame = render_frame(&ScattererField::empty(0), &small_grid()).unwrap();
        assert!(frame.intensities.iter().all(|&v| v == 0));
    }

    #[test]
    fn half_wavelength_pair_interferes_destructively() {
        let cfg = small_grid();
        let lambda = cfg.psf.axial_wavelength;
        let (x, y0) = (5.0, 4.0);
        let pair = ScattererField::new(
            0,
            1.0,
            vec![Point2D::new(x, y0 - lambda / 4.0), Point2D::new(x, y0 + lambda / 4.0)],
            vec![1.0, 1.0],
            vec![true; 2],
            vec![Region::Myocardium; 2],
        )
        .unwrap();
        let pair_env = envelope(&render_complex(&pair, &cfg.psf, &cfg.grid, RenderMode::Deterministic).unwrap())[16 * 40 + 20];
        let one_env = envelope(&render_complex(&single(x, y0 - lambda / 4.0), &cfg.psf, &cfg.grid, RenderMode::Deterministic).unwrap())
            [16 * 40 + 20];
        // direct two-point sum at the midpoint: phases +-pi/2 cancel exactly
        let g = (-(lambda / 4.0).powi(2) / (2.0 * cfg.psf.sigma_axial.powi(2))).exp();
        let direct = (Complex64::from_polar(g, PI / 2.0) + Complex64::from_polar(g, -PI / 2.0)).norm();
        assert!((pair_env - direct).abs() < 1e-12);
        assert!(pair_env < one_env);
    }

    #[test]
    fn parallel_matches_deterministic_closely() {
        let cfg = small_grid();
        let positions: Vec<_> = (0..5000).map(|i| Point2D::new((i % 97) as f64 * 0.1, (i % 89) as f64 * 0.11)).collect();
        let n = positions.len();
        let field = ScattererField::new(0, 1.0, positions, vec![0.5; n], vec![true; n], vec![Region::Myocardium; n]).unwrap();
        let a = render_complex(&field, &cfg.psf, &cfg.grid, RenderMode::Deterministic).unwrap();
        let b = render_complex(&field, &cfg.psf, &cfg.grid, RenderMode::Parallel).unwrap();
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((x - y).norm() <= 1e-9 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn psf_validation() {
        let bad = PsfSpec { truncation_radius: 2.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
