use crate::tracking::image::{ImageF32, Pyramid};

/// Correlation reported for blocks without intensity variation.
const FLAT_NCC: f64 = 0.0;
/// Matches at least this good are treated as exact and not refined.
const PERFECT_NCC: f64 = 1.0 - 1e-9;

/// Zero-mean block sampled around a fractional centre.
pub(crate) struct Block {
    values: Vec<f64>,
    norm: f64,
}

impl Block {
    pub(crate) fn sample(image: &ImageF32, cx: f64, cy: f64, radius: usize) -> Self {
        let r = radius as isize;
        let mut values = Vec::with_capacity((2 * radius + 1).pow(2));
        let integral = cx.fract() == 0.0 && cy.fract() == 0.0;
        for j in -r..=r {
            for i in -r..=r {
                let v = if integral {
                    let x = (cx as isize + i).clamp(0, image.width as isize - 1) as usize;
                    let y = (cy as isize + j).clamp(0, image.height as isize - 1) as usize;
                    image.at(x, y) as f64
                } else {
                    image.sample(cx + i as f64, cy + j as f64)
                };
                values.push(v);
            }
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self { values, norm }
    }

    /// Correlation of this (zero-mean) block with the block of `image`
    /// centred at the integer pixel `(cx, cy)`, without materializing it.
    fn ncc_at_pixel(&self, image: &ImageF32, cx: isize, cy: isize, radius: usize) -> f64 {
        let r = radius as isize;
        let (w, h) = (image.width as isize, image.height as isize);
        let (mut s, mut ss, mut st) = (0.0f64, 0.0f64, 0.0f64);
        let mut k = 0;
        let interior = cx - r >= 0 && cy - r >= 0 && cx + r < w && cy + r < h;
        for j in -r..=r {
            let y = if interior { cy + j } else { (cy + j).clamp(0, h - 1) };
            let row = &image.data[(y * w) as usize..((y + 1) * w) as usize];
            for i in -r..=r {
                let x = if interior { cx + i } else { (cx + i).clamp(0, w - 1) };
                let v = row[x as usize] as f64;
                s += v;
                ss += v * v;
                st += v * self.values[k];
                k += 1;
            }
        }
        let var = ss - s * s / k as f64;
        let denom = self.norm * var.max(0.0).sqrt();
        if denom <= 1e-12 {
            return FLAT_NCC;
        }
        st / denom
    }

    pub(crate) fn ncc(&self, other: &Block) -> f64 {
        let denom = self.norm * other.norm;
        if denom <= 1e-12 {
            return FLAT_NCC;
        }
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() / denom
    }
}

/// Normalized cross-correlation of two equally sized sample sets.
pub fn ncc(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    if n == 0.0 {
        return FLAT_NCC;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let denom = (saa * sbb).sqrt();
    if denom <= 1e-12 {
        FLAT_NCC
    } else {
        sab / denom
    }
}

fn parabolic_offset(minus: f64, centre: f64, plus: f64) -> f64 {
    let curvature = minus - 2.0 * centre + plus;
    if curvature >= 0.0 {
        return 0.0;
    }
    (0.5 * (minus - plus) / curvature).clamp(-0.5, 0.5)
}

pub(crate) struct MatchParams {
    pub block_radius: usize,
    pub search_radius: usize,
    pub subpixel: bool,
}

/// Integer search around `prior` on one level, scoring each candidate by
/// the summed correlation with every template. Candidates are scanned with
/// the prior first and replaced only by strictly better scores.
fn search(templates: &[Block], target: &ImageF32, prior: (f64, f64), params: &MatchParams, refine: bool) -> (f64, f64) {
    let r = params.search_radius as isize;
    let n = templates.len() as f64;
    let integral = prior.0.fract() == 0.0 && prior.1.fract() == 0.0;
    let score_at = |dx: isize, dy: isize| {
        if integral {
            let (cx, cy) = (prior.0 as isize + dx, prior.1 as isize + dy);
            return templates.iter().map(|t| t.ncc_at_pixel(target, cx, cy, params.block_radius)).sum::<f64>() / n;
        }
        let candidate = Block::sample(target, prior.0 + dx as f64, prior.1 + dy as f64, params.block_radius);
        templates.iter().map(|t| candidate.ncc(t)).sum::<f64>() / n
    };
    let mut best = (0isize, 0isize);
    let mut best_score = score_at(0, 0);
    for dy in -r..=r {
        for dx in -r..=r {
            if dx == 0 && dy == 0 {
                continue;
            }
            let s = score_at(dx, dy);
            if s > best_score {
                best_score = s;
                best = (dx, dy);
            }
        }
    }
    let mut pos = (prior.0 + best.0 as f64, prior.1 + best.1 as f64);
    if refine && best_score < PERFECT_NCC {
        let ox = parabolic_offset(score_at(best.0 - 1, best.1), best_score, score_at(best.0 + 1, best.1));
        let oy = parabolic_offset(score_at(best.0, best.1 - 1), best_score, score_at(best.0, best.1 + 1));
        pos.0 += ox;
        pos.1 += oy;
    }
    pos
}

/// Template source: a pyramid and the level-0 pixel position of the block centre.
pub(crate) type TemplateSource<'a> = (&'a Pyramid, (f64, f64));

/// Coarse-to-fine match of the blocks centred at the template sources
/// against `to`, starting from `prior` (level-0 pixels). The first source
/// defines the displacement carried between levels. Returns the matched
/// level-0 position in `to`.
pub(crate) fn match_point(templates: &[TemplateSource], to: &Pyramid, prior: (f64, f64), params: &MatchParams) -> (f64, f64) {
    let depth = templates.iter().map(|t| t.0.depth()).min().unwrap_or(1).min(to.depth());
    let mut pos = prior;
    for level in (0..depth).rev() {
        let scale = (1u32 << level) as f64;
        let blocks: Vec<Block> = templates
            .iter()
            .map(|(pyr, s)| {
                let (x, y) = (s.0 / scale, s.1 / scale);
                let (x, y) = if level == 0 { (x, y) } else { (x.round(), y.round()) };
                Block::sample(&pyr.levels[level], x, y, params.block_radius)
            })
            .collect();
        let start = if level == 0 {
            pos
        } else {
            ((pos.0 / scale).round(), (pos.1 / scale).round())
        };
        let found = search(&blocks, &to.levels[level], start, params, level == 0 && params.subpixel);
        pos = if level == 0 {
            found
        } else {
            (pos.0 + (found.0 - start.0) * scale, pos.1 + (found.1 - start.1) * scale)
        };
    }
    pos
}
