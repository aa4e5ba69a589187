//! Frame and video data model.
//!
//! Pixels are always interleaved RGB8 in memory; other layouts are converted
//! at the I/O boundary.

use crate::error::{Error, Result};

/// Rec.601 luma weights for R, G and B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// A single RGB8 frame, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::MalformedFrame {
                index: 0,
                reason: format!("zero-sized frame {width}x{height}"),
            });
        }
        let expected = width * height * 3;
        if data.len() != expected {
            return Err(Error::MalformedFrame {
                index: 0,
                reason: format!("data length {} != {expected}", data.len()),
            });
        }
        Ok(Self { width, height, data })
    }

    /// Frame filled with one colour.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::new(width, height, data)
    }

    /// Build a frame from a per-pixel function of `(row, col)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for r in 0..height {
            for c in 0..width {
                data.extend_from_slice(&f(r, c));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// One row of interleaved RGB bytes.
    pub fn row(&self, row: usize) -> &[u8] {
        let stride = self.width * 3;
        &self.data[row * stride..(row + 1) * stride]
    }
}

/// An ordered, non-empty sequence of same-sized frames.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSequence {
    video_id: String,
    frames: Vec<Frame>,
    fps: Option<f64>,
}

impl VideoSequence {
    pub fn new(video_id: impl Into<String>, frames: Vec<Frame>) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptyVideo)?;
        let (w, h) = (first.width, first.height);
        for (index, f) in frames.iter().enumerate() {
            if f.data.len() != f.width * f.height * 3 {
                return Err(Error::MalformedFrame {
                    index,
                    reason: "data length does not match dimensions".into(),
                });
            }
            if f.width != w || f.height != h {
                return Err(Error::DimensionMismatch {
                    index,
                    width: f.width,
                    height: f.height,
                    expected_width: w,
                    expected_height: h,
                    source_name: None,
                });
            }
        }
        Ok(Self {
            video_id: video_id.into(),
            frames,
            fps: None,
        })
    }

    pub fn with_id(mut self, video_id: impl Into<String>) -> Self {
        self.video_id = video_id.into();
        self
    }

    /// Informational only; no sampler reads it.
    pub fn with_fps(mut self, fps: f64) -> Self {
        self.fps = Some(fps);
        self
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn fps(&self) -> Option<f64> {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }
}

/// Validate frames and wrap them into a [`VideoSequence`].
pub fn make_video(video_id: impl Into<String>, frames: Vec<Frame>) -> Result<VideoSequence> {
    VideoSequence::new(video_id, frames)
}

/// Floating-point luminance plane in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LumaPlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LumaPlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Copy out a `size`x`size` window starting at `(row, col)`.
    pub fn window(&self, row: usize, col: usize, size: usize) -> LumaPlane {
        let mut data = Vec::with_capacity(size * size);
        for r in row..row + size {
            let start = r * self.width + col;
            data.extend_from_slice(&self.data[start..start + size]);
        }
        LumaPlane::new(size, size, data)
    }
}

/// Rec.601 luma, no rounding.
pub fn luminance(frame: &Frame) -> LumaPlane {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = frame
        .data
        .chunks_exact(3)
        .map(|p| wr * f64::from(p[0]) + wg * f64::from(p[1]) + wb * f64::from(p[2]))
        .collect();
    LumaPlane::new(frame.width, frame.height, data)
}
