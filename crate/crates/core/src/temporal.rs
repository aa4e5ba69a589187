//! Keyframe extraction: TSN, TSM and ECO segment samplers.
//!
//! All three split a video of `N` frames into `M` equal segments of
//! `floor(N / M)` frames. TSN takes `η` evenly stepped frames per segment,
//! TSM one random frame per segment, and ECO does the same as TSM with an
//! extra draw from the trailing remainder when `M` does not divide `N`.
//!
//! Indices are 0-based. TSN offsets are 1-based in their usual formulation;
//! we subtract one so the first frame is reachable and the last segment
//! never runs past `N - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Frame, VideoSequence};
use crate::rng::{SeededRng, UniformSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalMethod {
    Tsn,
    Tsm,
    Eco,
}

impl TemporalMethod {
    pub fn default_segments(self) -> usize {
        match self {
            TemporalMethod::Tsn | TemporalMethod::Tsm => 10,
            TemporalMethod::Eco => 20,
        }
    }
}

impl std::fmt::Display for TemporalMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TemporalMethod::Tsn => "tsn",
            TemporalMethod::Tsm => "tsm",
            TemporalMethod::Eco => "eco",
        })
    }
}

/// Temporal sampler selection and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalConfig {
    pub method: TemporalMethod,
    /// Number of segments `M`.
    pub segments: usize,
    /// Frames taken per segment (`η`, TSN only).
    pub frames_per_segment: usize,
    /// Stream seed (TSM and ECO only).
    pub seed: u64,
}

impl TemporalConfig {
    /// Default parameters: TSN `M=10, η=4`; TSM `M=10`; ECO `M=20`.
    pub fn new(method: TemporalMethod) -> Self {
        Self {
            method,
            segments: method.default_segments(),
            frames_per_segment: 4,
            seed: 0,
        }
    }

    pub fn tsn() -> Self {
        Self::new(TemporalMethod::Tsn)
    }

    pub fn tsm() -> Self {
        Self::new(TemporalMethod::Tsm)
    }

    pub fn eco() -> Self {
        Self::new(TemporalMethod::Eco)
    }

    pub fn with_segments(mut self, segments: usize) -> Self {
        self.segments = segments;
        self
    }

    pub fn with_frames_per_segment(mut self, eta: usize) -> Self {
        self.frames_per_segment = eta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 {
            return Err(Error::InvalidConfig("segments must be >= 1".into()));
        }
        if self.frames_per_segment == 0 {
            return Err(Error::InvalidConfig("frames per segment must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of keyframes this config yields for an `n`-frame video.
    pub fn keyframe_count(&self, n: usize) -> usize {
        let m = self.segments;
        match self.method {
            TemporalMethod::Tsn => m * self.frames_per_segment,
            TemporalMethod::Tsm => m,
            TemporalMethod::Eco => m + usize::from(n % m != 0),
        }
    }

    /// Sample keyframe indices for an `n`-frame video.
    pub fn indices(&self, n: usize) -> Result<KeyframeIndexList> {
        self.validate()?;
        match self.method {
            TemporalMethod::Tsn => tsn_indices(n, self.segments, self.frames_per_segment),
            TemporalMethod::Tsm => tsm_indices(n, self.segments, self.seed),
            TemporalMethod::Eco => eco_indices(n, self.segments, self.seed),
        }
    }
}

/// Ordered 0-based indices of sampled keyframes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyframeIndexList(pub Vec<usize>);

impl KeyframeIndexList {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for KeyframeIndexList {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

fn check_segments(n: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidConfig("segments must be >= 1".into()));
    }
    if n < m {
        return Err(Error::InsufficientFrames { frames: n, segments: m });
    }
    Ok(())
}

/// In-segment offsets (1-based) for TSN with segment length `theta`.
fn tsn_offsets(theta: usize, eta: usize) -> Vec<usize> {
    let step = if eta > 1 { (theta - 1) / (eta - 1) } else { 0 };
    if step == 0 {
        return vec![1; eta];
    }
    let stop = (2 + step * (eta - 1)).min(theta + 1);
    (1..stop).step_by(step).collect()
}

/// TSN: `η` evenly stepped frames from each of `M` segments.
pub fn tsn_indices(n: usize, m: usize, eta: usize) -> Result<KeyframeIndexList> {
    check_segments(n, m)?;
    if eta == 0 {
        return Err(Error::InvalidConfig("frames per segment must be >= 1".into()));
    }
    let theta = n / m;
    let offsets = tsn_offsets(theta, eta);
    debug_assert_eq!(offsets.len(), eta);
    let indices = (0..m)
        .flat_map(|seg| offsets.iter().map(move |&o| o - 1 + theta * seg))
        .collect();
    Ok(KeyframeIndexList(indices))
}

/// TSM with a caller-supplied draw source.
pub fn tsm_indices_with(
    n: usize,
    m: usize,
    draws: &mut impl UniformSource,
) -> Result<KeyframeIndexList> {
    check_segments(n, m)?;
    let xi = n / m;
    let indices = (0..m)
        .map(|seg| seg * xi + draws.below(xi as u64) as usize)
        .collect();
    Ok(KeyframeIndexList(indices))
}

/// TSM: one uniformly drawn frame from each of `M` segments of `floor(N/M)`
/// frames. Frames past `M * floor(N/M)` are never sampled.
pub fn tsm_indices(n: usize, m: usize, seed: u64) -> Result<KeyframeIndexList> {
    tsm_indices_with(n, m, &mut SeededRng::new(seed))
}

/// ECO with a caller-supplied draw source.
pub fn eco_indices_with(
    n: usize,
    m: usize,
    draws: &mut impl UniformSource,
) -> Result<KeyframeIndexList> {
    check_segments(n, m)?;
    let zeta = n / m;
    let mut indices: Vec<usize> = (0..m)
        .map(|seg| seg * zeta + draws.below(zeta as u64) as usize)
        .collect();
    let covered = m * zeta;
    if n % m != 0 {
        indices.push(covered + draws.below((n - covered) as u64) as usize);
    }
    Ok(KeyframeIndexList(indices))
}

/// ECO: TSM-style draws plus one extra keyframe from the remainder
/// `[M * floor(N/M), N)` when `M` does not divide `N`.
pub fn eco_indices(n: usize, m: usize, seed: u64) -> Result<KeyframeIndexList> {
    eco_indices_with(n, m, &mut SeededRng::new(seed))
}

/// Apply a temporal sampler to a video.
pub fn apply_temporal(
    video: &VideoSequence,
    cfg: &TemporalConfig,
) -> Result<(Vec<Frame>, KeyframeIndexList)> {
    let indices = cfg.indices(video.len())?;
    let frames = indices.iter().map(|&i| video.frames()[i].clone()).collect();
    Ok((frames, indices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Fixed(bool);

    impl UniformSource for Fixed {
        fn below(&mut self, n: u64) -> u64 {
            if self.0 {
                n - 1
            } else {
                0
            }
        }
    }

    #[test]
    fn tsn_hundred_frames() {
        let idx = tsn_indices(100, 10, 4).unwrap();
        assert_eq!(idx.len(), 40);
        assert_eq!(&idx[..4], &[0, 3, 6, 9]);
        assert_eq!(&idx[36..], &[90, 93, 96, 99]);
        assert_eq!(tsn_offsets(10, 4), vec![1, 4, 7, 10]);
    }

    #[test]
    fn tsn_full_coverage() {
        let idx = tsn_indices(40, 10, 4).unwrap();
        assert_eq!(idx.0, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn tsn_zero_step_duplicates() {
        let idx = tsn_indices(15, 10, 4).unwrap();
        assert_eq!(idx.len(), 40);
        for seg in 0..10 {
            assert_eq!(&idx[seg * 4..seg * 4 + 4], &[seg; 4]);
        }
    }

    #[test]
    fn tsn_single_frame_per_segment() {
        assert_eq!(tsn_indices(30, 3, 1).unwrap().0, vec![0, 10, 20]);
    }

    #[test]
    fn too_few_frames() {
        assert!(matches!(
            tsn_indices(9, 10, 4),
            Err(Error::InsufficientFrames { frames: 9, segments: 10 })
        ));
        assert!(tsm_indices(3, 4, 0).is_err());
        assert!(eco_indices(19, 20, 0).is_err());
    }

    #[test]
    fn tsm_bounds() {
        let lo = tsm_indices_with(100, 10, &mut Fixed(false)).unwrap();
        assert_eq!(lo.0, (0..10).map(|m| m * 10).collect::<Vec<_>>());
        let hi = tsm_indices_with(100, 10, &mut Fixed(true)).unwrap();
        assert_eq!(hi.0, (0..10).map(|m| m * 10 + 9).collect::<Vec<_>>());
        assert_eq!(*hi.last().unwrap(), 99);
    }

    #[test]
    fn tsm_remainder_unreachable() {
        for seed in 0..50 {
            let idx = tsm_indices(103, 10, seed).unwrap();
            assert!(idx.iter().all(|&i| i < 100));
        }
        let hi = tsm_indices_with(103, 10, &mut Fixed(true)).unwrap();
        assert_eq!(*hi.last().unwrap(), 99);
    }

    #[test]
    fn eco_even_division() {
        assert_eq!(eco_indices(100, 20, 1).unwrap().len(), 20);
    }

    #[test]
    fn eco_remainder_draw() {
        let idx = eco_indices_with(105, 20, &mut Fixed(false)).unwrap();
        let mut expected: Vec<usize> = (0..20).map(|m| m * 5).collect();
        expected.push(100);
        assert_eq!(idx.0, expected);
        let hi = eco_indices_with(105, 20, &mut Fixed(true)).unwrap();
        assert_eq!(*hi.last().unwrap(), 104);
    }

    #[test]
    fn eco_identity_when_segment_is_one_frame() {
        for seed in 0..5 {
            assert_eq!(eco_indices(20, 20, seed).unwrap().0, (0..20).collect::<Vec<_>>());
        }
    }

    #[test]
    fn apply_temporal_identity_and_single_frame() {
        let frames: Vec<Frame> = (0..40u8)
            .map(|i| Frame::filled(2, 2, [i, 0, 0]).unwrap())
            .collect();
        let video = VideoSequence::new("v", frames.clone()).unwrap();
        let (kf, idx) = apply_temporal(&video, &TemporalConfig::tsn()).unwrap();
        assert_eq!(kf, frames);
        assert_eq!(idx.len(), 40);

        let one = VideoSequence::new("one", vec![frames[3].clone()]).unwrap();
        let cfg = TemporalConfig::tsn().with_segments(1).with_frames_per_segment(1);
        let (kf, _) = apply_temporal(&one, &cfg).unwrap();
        assert_eq!(kf, vec![frames[3].clone()]);
    }

    #[test]
    fn apply_temporal_is_deterministic() {
        let frames: Vec<Frame> = (0..100u8)
            .map(|i| Frame::filled(1, 1, [i, i, i]).unwrap())
            .collect();
        let video = VideoSequence::new("v", frames).unwrap();
        let cfg = TemporalConfig::tsm().with_seed(42);
        let a = apply_temporal(&video, &cfg).unwrap();
        let b = apply_temporal(&video, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn defaults() {
        assert_eq!(TemporalConfig::tsn().segments, 10);
        assert_eq!(TemporalConfig::tsn().frames_per_segment, 4);
        assert_eq!(TemporalConfig::tsm().segments, 10);
        assert_eq!(TemporalConfig::eco().segments, 20);
    }

    proptest! {
        #[test]
        fn count_bound_and_containment(m in 1usize..=20, extra in 0usize..2000, eta in 1usize..=4, seed: u64) {
            let n = m + extra;
            let theta = n / m;

            let tsn = tsn_indices(n, m, eta).unwrap();
            prop_assert_eq!(tsn.len(), m * eta);
            for (k, &i) in tsn.iter().enumerate() {
                let seg = k / eta;
                prop_assert!(i < n);
                prop_assert!(i >= seg * theta && i < (seg + 1) * theta);
            }
            prop_assert!(tsn.windows(2).all(|w| w[0] <= w[1]));

            let tsm = tsm_indices(n, m, seed).unwrap();
            prop_assert_eq!(tsm.len(), m);
            for (seg, &i) in tsm.iter().enumerate() {
                prop_assert!(i >= seg * theta && i < (seg + 1) * theta);
            }

            let eco = eco_indices(n, m, seed).unwrap();
            prop_assert_eq!(eco.len(), m + usize::from(n % m != 0));
            for (seg, &i) in eco.iter().enumerate() {
                if seg < m {
                    prop_assert!(i >= seg * theta && i < (seg + 1) * theta);
                } else {
                    prop_assert!(i >= m * theta && i < n);
                }
            }
            prop_assert_eq!(eco.len(), TemporalConfig::eco().with_segments(m).keyframe_count(n));
        }
    }
}
