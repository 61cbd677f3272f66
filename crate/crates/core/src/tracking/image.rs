use crate::error::{Error, Result};
use crate::speckle::BModeFrame;

/// Single-channel float image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF32 {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl ImageF32 {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::Size(format!("{} samples for a {width}x{height} image", data.len())));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_frame(frame: &BModeFrame) -> Self {
        Self {
            width: frame.width,
            height: frame.height,
            data: frame.intensities.iter().map(|&v| v as f32).collect(),
        }
    }

    #[inline]
    pub fn at(&self, col: usize, row: usize) -> f32 {
        self.data[row * self.width + col]
    }

    /// Bilinear sample with border replication.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.at(x0, y0) as f64 * (1.0 - fx) + self.at(x1, y0) as f64 * fx;
        let bottom = self.at(x0, y1) as f64 * (1.0 - fx) + self.at(x1, y1) as f64 * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Half-resolution image; pixel `(c, r)` averages the 2x2 block at `(2c, 2r)`.
    pub fn downsample(&self) -> Self {
        let w = self.width.div_ceil(2);
        let h = self.height.div_ceil(2);
        let mut data = Vec::with_capacity(w * h);
        for r in 0..h {
            for c in 0..w {
                let (c0, r0) = (2 * c, 2 * r);
                let (c1, r1) = ((c0 + 1).min(self.width - 1), (r0 + 1).min(self.height - 1));
                data.push(0.25 * (self.at(c0, r0) + self.at(c1, r0) + self.at(c0, r1) + self.at(c1, r1)));
            }
        }
        Self { width: w, height: h, data }
    }

    pub fn scaled(&self, gain: f32) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v * gain).collect(),
        }
    }
}

/// Image pyramid; level 0 is full resolution.
#[derive(Debug, Clone)]
pub struct Pyramid {
    pub levels: Vec<ImageF32>,
}

impl Pyramid {
    /// Builds up to `levels` levels, stopping before any level would be
    /// narrower than `min_size` pixels.
    pub fn new(image: ImageF32, levels: usize, min_size: usize) -> Self {
        let mut out = vec![image];
        while out.len() < levels {
            let next = out.last().unwrap().downsample();
            if next.width < min_size || next.height < min_size {
                break;
            }
            out.push(next);
        }
        Self { levels: out }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}
