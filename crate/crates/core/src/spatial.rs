//! Grid mini-patch sampling.
//!
//! Each keyframe is split into a `β x β` grid of `floor(H/β) x floor(W/β)`
//! cells. One `μ x μ` patch is drawn at a uniform offset inside every cell
//! and the patches are spliced, in row-major grid order, into a
//! `(β·μ) x (β·μ)` fragment. Pixels are copied, never resampled. Residual
//! rows and columns past `β·floor(H/β)` belong to no cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Frame, VideoSequence};
use crate::rng::{derive_seed, video_seed, SeededRng, UniformSource};
use crate::temporal::{apply_temporal, KeyframeIndexList, TemporalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialPreset {
    /// 2x2 grid of 32-pixel patches.
    S1,
    /// 2x2 grid of 64-pixel patches.
    S2,
    /// 5x5 grid of 32-pixel patches.
    S3,
    /// 6x6 grid of 32-pixel patches.
    S4,
}

impl SpatialPreset {
    pub const ALL: [SpatialPreset; 4] = [Self::S1, Self::S2, Self::S3, Self::S4];

    /// `(grid, patch)` for this preset.
    pub fn geometry(self) -> (usize, usize) {
        match self {
            SpatialPreset::S1 => (2, 32),
            SpatialPreset::S2 => (2, 64),
            SpatialPreset::S3 => (5, 32),
            SpatialPreset::S4 => (6, 32),
        }
    }
}

/// Grid density `β` and patch side `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialScheme {
    pub grid: usize,
    pub patch: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<SpatialPreset>,
}

impl SpatialScheme {
    pub fn custom(grid: usize, patch: usize) -> Result<Self> {
        if grid == 0 || patch == 0 {
            return Err(Error::InvalidConfig(format!(
                "grid ({grid}) and patch ({patch}) must both be >= 1"
            )));
        }
        Ok(Self { grid, patch, preset: None })
    }

    pub fn preset(preset: SpatialPreset) -> Self {
        let (grid, patch) = preset.geometry();
        Self { grid, patch, preset: Some(preset) }
    }

    /// Side length of the spliced fragment.
    pub fn fragment_side(&self) -> usize {
        self.grid * self.patch
    }

    pub fn cells(&self) -> usize {
        self.grid * self.grid
    }

    pub fn check_frame(&self, height: usize, width: usize) -> Result<()> {
        if height / self.grid < self.patch || width / self.grid < self.patch {
            return Err(Error::FrameTooSmall {
                height,
                width,
                grid: self.grid,
                patch: self.patch,
                keyframe: None,
            });
        }
        Ok(())
    }
}

/// Absolute `(row, col)` patch origins, one per grid cell, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchOffsets {
    pub grid: usize,
    pub origins: Vec<(usize, usize)>,
}

impl PatchOffsets {
    /// Origin of the patch for grid cell `(cell_row, cell_col)`.
    pub fn get(&self, cell_row: usize, cell_col: usize) -> (usize, usize) {
        self.origins[cell_row * self.grid + cell_col]
    }
}

/// Draw patch origins for an `height x width` frame.
pub fn gms_offsets_with(
    height: usize,
    width: usize,
    scheme: &SpatialScheme,
    draws: &mut impl UniformSource,
) -> Result<PatchOffsets> {
    scheme.check_frame(height, width)?;
    let (cell_h, cell_w) = (height / scheme.grid, width / scheme.grid);
    let (slack_h, slack_w) = (cell_h - scheme.patch, cell_w - scheme.patch);
    let mut origins = Vec::with_capacity(scheme.cells());
    for gr in 0..scheme.grid {
        for gc in 0..scheme.grid {
            let r = gr * cell_h + draws.below(slack_h as u64 + 1) as usize;
            let c = gc * cell_w + draws.below(slack_w as u64 + 1) as usize;
            origins.push((r, c));
        }
    }
    Ok(PatchOffsets { grid: scheme.grid, origins })
}

pub fn gms_offsets(
    height: usize,
    width: usize,
    scheme: &SpatialScheme,
    seed: u64,
) -> Result<PatchOffsets> {
    gms_offsets_with(height, width, scheme, &mut SeededRng::new(seed))
}

/// A spliced fragment plus where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub frame: Frame,
    pub source_index: usize,
    pub offsets: PatchOffsets,
}

/// Splice the patches named by `offsets` into a fragment frame.
pub fn gms_fragment(frame: &Frame, offsets: &PatchOffsets, scheme: &SpatialScheme) -> Result<Frame> {
    let mu = scheme.patch;
    if offsets.grid != scheme.grid || offsets.origins.len() != scheme.cells() {
        return Err(Error::InvalidConfig(format!(
            "offsets describe a {}x{} grid, scheme expects {}x{}",
            offsets.grid, offsets.grid, scheme.grid, scheme.grid
        )));
    }
    for &(row, col) in &offsets.origins {
        if row + mu > frame.height() || col + mu > frame.width() {
            return Err(Error::OffsetOutOfRange {
                row,
                col,
                patch: mu,
                height: frame.height(),
                width: frame.width(),
            });
        }
    }
    let side = scheme.fragment_side();
    let mut data = vec![0u8; side * side * 3];
    let out_stride = side * 3;
    for gr in 0..scheme.grid {
        for gc in 0..scheme.grid {
            let (r0, c0) = offsets.get(gr, gc);
            for dy in 0..mu {
                let src = &frame.row(r0 + dy)[c0 * 3..(c0 + mu) * 3];
                let start = (gr * mu + dy) * out_stride + gc * mu * 3;
                data[start..start + mu * 3].copy_from_slice(src);
            }
        }
    }
    Frame::new(side, side, data)
}

/// Fragment every keyframe. Offsets are drawn in keyframe order from one
/// stream; with `align` a single draw is reused for all keyframes.
pub fn apply_spatial(
    keyframes: &[Frame],
    source_indices: &[usize],
    scheme: &SpatialScheme,
    seed: u64,
    align: bool,
) -> Result<Vec<Fragment>> {
    let mut rng = SeededRng::new(seed);
    let mut plan = Vec::with_capacity(keyframes.len());
    let mut shared: Option<PatchOffsets> = None;
    for (k, f) in keyframes.iter().enumerate() {
        let offsets = match (&shared, align) {
            (Some(o), true) => o.clone(),
            _ => gms_offsets_with(f.height(), f.width(), scheme, &mut rng).map_err(|e| match e {
                Error::FrameTooSmall { height, width, grid, patch, .. } => Error::FrameTooSmall {
                    height,
                    width,
                    grid,
                    patch,
                    keyframe: Some(k),
                },
                other => other,
            })?,
        };
        if align && shared.is_none() {
            shared = Some(offsets.clone());
        }
        plan.push(offsets);
    }
    keyframes
        .par_iter()
        .zip(plan)
        .zip(source_indices.par_iter())
        .map(|((f, offsets), &source_index)| {
            Ok(Fragment {
                frame: gms_fragment(f, &offsets, scheme)?,
                source_index,
                offsets,
            })
        })
        .collect()
}

/// A video after temporal and spatial sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezedVideo {
    pub video_id: String,
    pub fragments: Vec<Fragment>,
    pub scheme: SpatialScheme,
    pub temporal: TemporalConfig,
    pub source_indices: KeyframeIndexList,
    /// Global seed the per-video streams were derived from.
    pub seed: u64,
    pub align_patches: bool,
}

impl SqueezedVideo {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    /// Payload size in bytes: `K · (β·μ)² · 3`.
    pub fn payload_bytes(&self) -> usize {
        let side = self.scheme.fragment_side();
        self.fragments.len() * side * side * 3
    }

    /// Reorder fragments by `perm` (fragment `perm[i]` moves to slot `i`).
    pub fn permuted(&self, perm: &[usize]) -> SqueezedVideo {
        assert_eq!(perm.len(), self.fragments.len());
        let fragments: Vec<Fragment> = perm.iter().map(|&p| self.fragments[p].clone()).collect();
        let source_indices = KeyframeIndexList(fragments.iter().map(|f| f.source_index).collect());
        SqueezedVideo {
            fragments,
            source_indices,
            ..self.clone()
        }
    }
}

/// Squeeze options shared by the CLI and the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqueezeConfig {
    pub temporal: TemporalConfig,
    pub spatial: SpatialScheme,
    pub align_patches: bool,
}

/// Temporal then spatial sampling, with streams derived from
/// `(global_seed, video_id)`.
pub fn squeeze(video: &VideoSequence, cfg: &SqueezeConfig, global_seed: u64) -> Result<SqueezedVideo> {
    let vseed = video_seed(global_seed, video.video_id());
    let temporal = cfg.temporal.with_seed(derive_seed(vseed, &[b"temporal"]));
    let (keyframes, indices) = apply_temporal(video, &temporal)?;
    let spatial_seed = derive_seed(vseed, &[b"spatial"]);
    let fragments = apply_spatial(&keyframes, &indices, &cfg.spatial, spatial_seed, cfg.align_patches)?;
    Ok(SqueezedVideo {
        video_id: video.video_id().to_owned(),
        fragments,
        scheme: cfg.spatial,
        temporal,
        source_indices: indices,
        seed: global_seed,
        align_patches: cfg.align_patches,
    })
}
