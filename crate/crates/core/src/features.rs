//! Handcrafted patch statistics and their pooling over keyframes.
//!
//! Per patch: luma mean and standard deviation, mean absolute 4-neighbour
//! Laplacian and mean Sobel gradient magnitude, the last two over interior
//! pixels only. A fragment's `β²` patch vectors reduce to an 8-vector of
//! componentwise means followed by standard deviations, and the per-keyframe
//! 8-vectors are either pooled the same way (16 values) or concatenated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{luminance, Frame, LumaPlane};
use crate::spatial::{SpatialScheme, SqueezedVideo};

pub const PATCH_DIM: usize = 4;
pub const FRAME_DIM: usize = 2 * PATCH_DIM;
pub const POOLED_DIM: usize = 2 * FRAME_DIM;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchFeatures {
    pub mean_luma: f64,
    pub std_luma: f64,
    pub mean_abs_laplacian: f64,
    pub mean_gradient_mag: f64,
}

impl PatchFeatures {
    pub fn to_array(self) -> [f64; PATCH_DIM] {
        [
            self.mean_luma,
            self.std_luma,
            self.mean_abs_laplacian,
            self.mean_gradient_mag,
        ]
    }
}

pub fn patch_features(patch: &LumaPlane) -> Result<PatchFeatures> {
    let (w, h) = (patch.width(), patch.height());
    if w < 3 || h < 3 {
        return Err(Error::PatchTooSmall(w.min(h)));
    }
    let (mean_luma, std_luma) = mean_std(patch.data().iter().copied());

    let mut lap = 0.0;
    let mut grad = 0.0;
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            let p = |dr: isize, dc: isize| {
                patch.at((r as isize + dr) as usize, (c as isize + dc) as usize)
            };
            lap += (p(-1, 0) + p(1, 0) + p(0, -1) + p(0, 1) - 4.0 * p(0, 0)).abs();
            let gx = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            let gy = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            grad += gx.hypot(gy);
        }
    }
    let interior = ((w - 2) * (h - 2)) as f64;
    Ok(PatchFeatures {
        mean_luma,
        std_luma,
        mean_abs_laplacian: lap / interior,
        mean_gradient_mag: grad / interior,
    })
}

/// Population mean and standard deviation.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (sum, n) = values.clone().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Componentwise (means, stds) of a set of equal-length vectors.
fn pool_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let dim = rows[0].len();
    let mut out = vec![0.0; 2 * dim];
    for j in 0..dim {
        let (m, s) = mean_std(rows.iter().map(|r| r[j]));
        out[j] = m;
        out[dim + j] = s;
    }
    out
}

/// Patch features for every grid cell of a fragment, row-major.
pub fn fragment_patch_features(fragment: &Frame, scheme: &SpatialScheme) -> Result<Vec<PatchFeatures>> {
    let side = scheme.fragment_side();
    if fragment.width() != side || fragment.height() != side {
        return Err(Error::InvalidConfig(format!(
            "fragment is {}x{}, scheme expects {side}x{side}",
            fragment.width(),
            fragment.height()
        )));
    }
    let luma = luminance(fragment);
    let mu = scheme.patch;
    let mut out = Vec::with_capacity(scheme.cells());
    for gr in 0..scheme.grid {
        for gc in 0..scheme.grid {
            out.push(patch_features(&luma.window(gr * mu, gc * mu, mu))?);
        }
    }
    Ok(out)
}

/// 8-vector: means then standard deviations of the patch features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameFeatures(pub [f64; FRAME_DIM]);

pub fn frame_features(fragment: &Frame, scheme: &SpatialScheme) -> Result<FrameFeatures> {
    let rows: Vec<Vec<f64>> = fragment_patch_features(fragment, scheme)?
        .into_iter()
        .map(|p| p.to_array().to_vec())
        .collect();
    let pooled = pool_rows(&rows);
    let mut out = [0.0; FRAME_DIM];
    out.copy_from_slice(&pooled);
    Ok(FrameFeatures(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingMode {
    /// Mean and std over keyframes; order-free.
    Pooled,
    /// Per-keyframe vectors concatenated in order.
    Sequence,
}

impl PoolingMode {
    pub fn dim(self, keyframes: usize) -> usize {
        match self {
            PoolingMode::Pooled => POOLED_DIM,
            PoolingMode::Sequence => FRAME_DIM * keyframes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledFeatures {
    pub mode: PoolingMode,
    pub values: Vec<f64>,
}

pub fn pool_frame_features(frames: &[FrameFeatures], mode: PoolingMode) -> Result<PooledFeatures> {
    if frames.is_empty() {
        return Err(Error::EmptyInput("no keyframes to pool".into()));
    }
    let values = match mode {
        PoolingMode::Pooled => {
            // Canonical order makes the floating-point sums, and hence the
            // output bits, independent of keyframe order.
            let mut rows: Vec<Vec<f64>> = frames.iter().map(|f| f.0.to_vec()).collect();
            rows.sort_by(|a, b| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            pool_rows(&rows)
        }
        PoolingMode::Sequence => frames.iter().flat_map(|f| f.0).collect(),
    };
    Ok(PooledFeatures { mode, values })
}

pub fn video_features(sq: &SqueezedVideo, mode: PoolingMode) -> Result<PooledFeatures> {
    let frames = sq
        .fragments
        .iter()
        .map(|f| frame_features(&f.frame, &sq.scheme))
        .collect::<Result<Vec<_>>>()?;
    pool_frame_features(&frames, mode)
}
