//! Procedural test corpus: textured, panning clips degraded by box blur of
//! known strength, with MOS falling linearly in the blur radius.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::harness::{DatasetManifest, ManifestEntry, VideoLoader};
use crate::model::{Frame, VideoSequence};
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurCorpus {
    pub videos: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    /// Largest blur radius in pixels; radii are spread evenly over `[0, max]`.
    pub max_radius: f64,
    pub seed: u64,
}

impl Default for BlurCorpus {
    fn default() -> Self {
        Self {
            videos: 60,
            frames: 24,
            width: 192,
            height: 192,
            max_radius: 4.0,
            seed: 0,
        }
    }
}

pub const MOS_HIGH: f64 = 5.0;
pub const MOS_LOW: f64 = 1.0;

impl BlurCorpus {
    pub fn radius(&self, i: usize) -> f64 {
        if self.videos <= 1 {
            0.0
        } else {
            self.max_radius * i as f64 / (self.videos - 1) as f64
        }
    }

    pub fn mos_for_radius(&self, r: f64) -> f64 {
        if self.max_radius > 0.0 {
            MOS_HIGH - (MOS_HIGH - MOS_LOW) * r / self.max_radius
        } else {
            MOS_HIGH
        }
    }

    fn radius_for_mos(&self, mos: f64) -> f64 {
        (MOS_HIGH - mos) / (MOS_HIGH - MOS_LOW) * self.max_radius
    }

    pub fn manifest(&self) -> DatasetManifest {
        let entries = (0..self.videos)
            .map(|i| ManifestEntry {
                video_id: format!("synth{i:04}"),
                path: PathBuf::from(format!("synth{i:04}")),
                mos: self.mos_for_radius(self.radius(i)),
                width: self.width,
                height: self.height,
                num_frames: self.frames,
            })
            .collect();
        DatasetManifest { entries, base_dir: PathBuf::new() }
    }
}

/// One box pass of half-width `r` along rows (`horizontal`) or columns, with
/// clamped borders.
fn box_pass(src: &[f32], w: usize, h: usize, r: usize, horizontal: bool) -> Vec<f32> {
    if r == 0 {
        return src.to_vec();
    }
    let norm = 1.0 / (2 * r + 1) as f32;
    let mut out = vec![0.0; src.len()];
    let (lines, len) = if horizontal { (h, w) } else { (w, h) };
    let at = |line: usize, i: usize| if horizontal { line * w + i } else { i * w + line };
    for line in 0..lines {
        for i in 0..len {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(len - 1);
            let mut acc = 0.0;
            // Clamped taps outside the line repeat the edge pixel.
            acc += src[at(line, 0)] * (r.saturating_sub(i)) as f32;
            acc += src[at(line, len - 1)] * ((i + r).saturating_sub(len - 1)) as f32;
            for j in lo..=hi {
                acc += src[at(line, j)];
            }
            out[at(line, i)] = acc * norm;
        }
    }
    out
}

/// Separable box blur with a fractional radius, interpolating between the
/// two neighbouring integer radii.
pub fn box_blur(src: &[f32], w: usize, h: usize, radius: f64) -> Vec<f32> {
    let r0 = radius.max(0.0).floor() as usize;
    let a = (radius - r0 as f64) as f32;
    let blur = |r| box_pass(&box_pass(src, w, h, r, true), w, h, r, false);
    let lo = blur(r0);
    if a == 0.0 {
        return lo;
    }
    let hi = blur(r0 + 1);
    lo.iter().zip(&hi).map(|(l, h)| (1.0 - a) * l + a * h).collect()
}

/// Bilinearly interpolated lattice noise with cells of `scale` pixels.
fn lattice_noise(w: usize, h: usize, scale: usize, rng: &mut SeededRng) -> Vec<f32> {
    let (gw, gh) = (w / scale + 2, h / scale + 2);
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let inv = 1.0 / scale as f64;
    (0..w * h)
        .map(|i| {
            let (y, x) = ((i / w) as f64 * inv, (i % w) as f64 * inv);
            let (y0, x0) = (y.floor() as usize, x.floor() as usize);
            let (fy, fx) = (y - y0 as f64, x - x0 as f64);
            let at = |r: usize, c: usize| lattice[r * gw + c];
            let top = at(y0, x0) * (1.0 - fx) + at(y0, x0 + 1) * fx;
            let bottom = at(y0 + 1, x0) * (1.0 - fx) + at(y0 + 1, x0 + 1) * fx;
            (top * (1.0 - fy) + bottom * fy) as f32
        })
        .collect()
}

/// Six octaves of value noise at a random brightness. Contrast is held
/// fixed: the patch statistics scale with it and cannot tell it from blur.
fn texture(w: usize, h: usize, rng: &mut SeededRng) -> Vec<f32> {
    let base = rng.uniform(100.0, 150.0) as f32;
    let mut out = vec![0.0f32; w * h];
    for octave in 0..6 {
        let scale = 1usize << octave;
        let amp = 24.0;
        for (o, n) in out.iter_mut().zip(lattice_noise(w, h, scale, rng)) {
            *o += amp * n;
        }
    }
    out.iter().map(|v| base + v).collect()
}

/// Render the clip for one manifest entry of `corpus`.
pub fn render_entry(corpus: &BlurCorpus, entry: &ManifestEntry) -> Result<VideoSequence> {
    let (w, h, n) = (corpus.width, corpus.height, corpus.frames);
    if w == 0 || h == 0 || n == 0 {
        return Err(Error::InvalidConfig("corpus dimensions must be positive".into()));
    }
    let mut rng = SeededRng::new(derive_seed(corpus.seed, &[b"synthetic", entry.video_id.as_bytes()]));
    // One pan step per frame across a wider canvas.
    let cw = w + n;
    let canvas = box_blur(&texture(cw, h, &mut rng), cw, h, corpus.radius_for_mos(entry.mos));
    // Colour tint that leaves luma unchanged.
    let tint = rng.uniform(-12.0, 12.0);
    let offsets = [tint, -tint * 0.299 / 0.587, 0.0];
    let frames = (0..n)
        .map(|k| {
            Frame::from_fn(w, h, |row, col| {
                let v = canvas[row * cw + col + k] as f64;
                offsets.map(|d| (v + d).round().clamp(0.0, 255.0) as u8)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    VideoSequence::new(entry.video_id.clone(), frames)
}

/// Manifest plus an in-memory loader for the corpus.
pub fn blur_corpus(corpus: &BlurCorpus) -> (DatasetManifest, impl VideoLoader) {
    let c = *corpus;
    (corpus.manifest(), move |e: &ManifestEntry| render_entry(&c, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_blur_preserves_constant_and_mean() {
        let flat = vec![7.0f32; 30];
        assert!(box_blur(&flat, 6, 5, 2.5).iter().all(|v| (v - 7.0).abs() < 1e-5));
        let impulse: Vec<f32> = (0..49).map(|i| if i == 24 { 49.0 } else { 0.0 }).collect();
        let b = box_blur(&impulse, 7, 7, 1.0);
        assert!((b.iter().sum::<f32>() - 49.0).abs() < 1e-3);
        assert!((b[24] - 49.0 / 9.0).abs() < 1e-5);
        assert_eq!(b[0], 0.0);
    }

    #[test]
    fn fractional_radius_interpolates() {
        let src: Vec<f32> = (0..64).map(|i| ((i * 37) % 11) as f32).collect();
        let (a, b) = (box_blur(&src, 8, 8, 1.0), box_blur(&src, 8, 8, 2.0));
        let mid = box_blur(&src, 8, 8, 1.5);
        for i in 0..64 {
            assert!((mid[i] - 0.5 * (a[i] + b[i])).abs() < 1e-4);
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let c = BlurCorpus { videos: 5, frames: 3, width: 16, height: 12, ..BlurCorpus::default() };
        let m = c.manifest();
        assert_eq!(m.entries[0].mos, 5.0);
        assert_eq!(m.entries[4].mos, 1.0);
        let a = render_entry(&c, &m.entries[2]).unwrap();
        let b = render_entry(&c, &m.entries[2]).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.len(), a.width(), a.height()), (3, 16, 12));
    }
}
