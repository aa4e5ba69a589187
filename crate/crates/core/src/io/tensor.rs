//! `VQSQ` squeezed-tensor files.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `VQSQ`                  |
//! | 4      | 2    | version (`1`)                 |
//! | 6      | 4    | frame count `K`               |
//! | 10     | 4    | height                        |
//! | 14     | 4    | width                         |
//! | 18     | 4    | channels (`3`)                |
//! | 22     | 1    | dtype (`0` = u8)              |
//! | 23     | 3    | reserved, zero                |
//! | 26     | K·H·W·3 | row-major RGB payload      |
//! | ...    | 4    | trailer length `L`            |
//! | ...    | L    | UTF-8 JSON provenance trailer |
//!
//! The trailer carries `video_id`, `temporal`, `spatial`, `seed`,
//! `align_patches`, `source_indices` and per-fragment patch `offsets`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Frame;
use crate::spatial::{Fragment, PatchOffsets, SpatialScheme, SqueezedVideo};
use crate::temporal::{KeyframeIndexList, TemporalConfig};

pub const MAGIC: [u8; 4] = *b"VQSQ";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 26;

#[derive(Debug, Serialize, Deserialize)]
struct Trailer {
    video_id: String,
    temporal: TemporalConfig,
    spatial: SpatialScheme,
    seed: u64,
    align_patches: bool,
    source_indices: KeyframeIndexList,
    offsets: Vec<Vec<(usize, usize)>>,
}

pub fn encode_squeezed(sq: &SqueezedVideo) -> Result<Vec<u8>> {
    let side = sq.scheme.fragment_side();
    let k = sq.fragments.len();
    let mut out = Vec::with_capacity(HEADER_LEN + sq.payload_bytes() + 256);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [k, side, side, 3] {
        let v = u32::try_from(v).map_err(|_| Error::InvalidConfig("dimension exceeds u32".into()))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(0);
    out.extend_from_slice(&[0; 3]);
    for f in &sq.fragments {
        if f.frame.width() != side || f.frame.height() != side {
            return Err(Error::InvalidConfig(format!(
                "fragment is {}x{}, expected {side}x{side}",
                f.frame.width(),
                f.frame.height()
            )));
        }
        out.extend_from_slice(f.frame.data());
    }
    let trailer = Trailer {
        video_id: sq.video_id.clone(),
        temporal: sq.temporal,
        spatial: sq.scheme,
        seed: sq.seed,
        align_patches: sq.align_patches,
        source_indices: sq.source_indices.clone(),
        offsets: sq.fragments.iter().map(|f| f.offsets.origins.clone()).collect(),
    };
    let json = serde_json::to_vec(&trailer)?;
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    Ok(out)
}

fn u32_at(bytes: &[u8], at: usize) -> usize {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize
}

pub fn decode_squeezed(bytes: &[u8]) -> Result<SqueezedVideo> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::LengthMismatch(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::BadVersion(version));
    }
    let (k, h, w, c) = (u32_at(bytes, 6), u32_at(bytes, 10), u32_at(bytes, 14), u32_at(bytes, 18));
    if c != 3 || bytes[22] != 0 {
        return Err(Error::UnsupportedFormat(format!("channels {c}, dtype {}", bytes[22])));
    }
    if bytes[23..26] != [0, 0, 0] {
        return Err(Error::UnsupportedFormat("reserved header bytes are non-zero".into()));
    }
    let frame_len = h * w * 3;
    let payload_end = HEADER_LEN + k * frame_len;
    if bytes.len() < payload_end + 4 {
        return Err(Error::LengthMismatch(format!(
            "header declares {k} frames of {h}x{w} but only {} payload bytes follow",
            bytes.len().saturating_sub(HEADER_LEN)
        )));
    }
    let trailer_len = u32_at(bytes, payload_end);
    if bytes.len() != payload_end + 4 + trailer_len {
        return Err(Error::LengthMismatch(format!(
            "trailer declares {trailer_len} bytes, {} remain",
            bytes.len() - payload_end - 4
        )));
    }
    let trailer: Trailer = serde_json::from_slice(&bytes[payload_end + 4..])?;
    let side = trailer.spatial.fragment_side();
    if h != side || w != side {
        return Err(Error::LengthMismatch(format!("frames are {h}x{w}, scheme implies {side}x{side}")));
    }
    if trailer.offsets.len() != k || trailer.source_indices.len() != k {
        return Err(Error::LengthMismatch(format!(
            "{k} frames but {} offset sets and {} source indices",
            trailer.offsets.len(),
            trailer.source_indices.len()
        )));
    }
    let fragments = (0..k)
        .map(|i| {
            let start = HEADER_LEN + i * frame_len;
            Ok(Fragment {
                frame: Frame::new(w, h, bytes[start..start + frame_len].to_vec())?,
                source_index: trailer.source_indices[i],
                offsets: PatchOffsets {
                    grid: trailer.spatial.grid,
                    origins: trailer.offsets[i].clone(),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SqueezedVideo {
        video_id: trailer.video_id,
        fragments,
        scheme: trailer.spatial,
        temporal: trailer.temporal,
        source_indices: trailer.source_indices,
        seed: trailer.seed,
        align_patches: trailer.align_patches,
    })
}

pub fn write_squeezed(sq: &SqueezedVideo, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_squeezed(sq)?).map_err(|e| Error::from(e).at_path(path))
}

pub fn read_squeezed(path: impl AsRef<Path>) -> Result<SqueezedVideo> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).at_path(path))?;
    decode_squeezed(&bytes).map_err(|e| e.at_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VideoSequence;
    use crate::rng::{SeededRng, UniformSource};
    use crate::spatial::{squeeze, SqueezeConfig};
    use proptest::prelude::*;

    fn sample(seed: u64, k: usize, grid: usize, patch: usize) -> SqueezedVideo {
        let mut rng = SeededRng::new(seed);
        let side = grid * patch + 7;
        let frames = (0..k * 2)
            .map(|_| {
                let data = (0..side * side * 3).map(|_| rng.below(256) as u8).collect();
                Frame::new(side, side, data).unwrap()
            })
            .collect();
        let cfg = SqueezeConfig {
            temporal: TemporalConfig::tsm().with_segments(k),
            spatial: SpatialScheme::custom(grid, patch).unwrap(),
            align_patches: seed % 2 == 0,
        };
        squeeze(&VideoSequence::new(format!("clip-{seed}"), frames).unwrap(), &cfg, seed).unwrap()
    }

    #[test]
    fn header_layout() {
        let sq = sample(1, 3, 2, 4);
        let bytes = encode_squeezed(&sq).unwrap();
        assert_eq!(&bytes[0..4], b"VQSQ");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u32_at(&bytes, 6), 3);
        assert_eq!(u32_at(&bytes, 10), 8);
        assert_eq!(u32_at(&bytes, 14), 8);
        assert_eq!(u32_at(&bytes, 18), 3);
        assert_eq!(&bytes[22..26], &[0, 0, 0, 0]);
        assert_eq!(&bytes[26..26 + 192], sq.fragments[0].frame.data());
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_squeezed(&sample(2, 2, 2, 4)).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_squeezed(&bytes), Err(Error::BadMagic(m)) if &m == b"XXXX"));
    }

    #[test]
    fn bad_version() {
        let mut bytes = encode_squeezed(&sample(2, 2, 2, 4)).unwrap();
        bytes[4] = 2;
        assert!(matches!(decode_squeezed(&bytes), Err(Error::BadVersion(2))));
    }

    #[test]
    fn missing_frame() {
        let sq = sample(3, 10, 2, 4);
        let bytes = encode_squeezed(&sq).unwrap();
        let frame_len = 8 * 8 * 3;
        let payload_end = HEADER_LEN + 10 * frame_len;
        // Drop the tenth frame but keep the trailer.
        let mut cut = bytes[..payload_end - frame_len].to_vec();
        cut.extend_from_slice(&bytes[payload_end..]);
        assert!(matches!(decode_squeezed(&cut), Err(Error::LengthMismatch(_))));
        assert!(matches!(decode_squeezed(&bytes[..HEADER_LEN + 5]), Err(Error::LengthMismatch(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip(seed in 0u64..1000, k in 1usize..5, grid in 1usize..4, patch in 3usize..9) {
            let sq = sample(seed, k, grid, patch);
            let bytes = encode_squeezed(&sq).unwrap();
            let back = decode_squeezed(&bytes).unwrap();
            prop_assert_eq!(&back, &sq);
            prop_assert_eq!(encode_squeezed(&back).unwrap(), bytes);
        }
    }
}
