//! YUV4MPEG2 reading and writing (8-bit 4:2:0 and 4:4:4).
//!
//! Frames are converted to RGB with full-range BT.601:
//!
//! ```text
//! R = Y + 1.402    (Cr - 128)
//! G = Y - 0.344136 (Cb - 128) - 0.714136 (Cr - 128)
//! B = Y + 1.772    (Cb - 128)
//! ```
//!
//! rounded to nearest and clamped. 4:2:0 chroma is upsampled by replication.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Frame, VideoSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chroma {
    C420,
    C444,
}

impl Chroma {
    fn plane_dims(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            Chroma::C420 => (width.div_ceil(2), height.div_ceil(2)),
            Chroma::C444 => (width, height),
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Chroma::C420 => "420jpeg",
            Chroma::C444 => "444",
        }
    }
}

struct Header {
    width: usize,
    height: usize,
    chroma: Chroma,
    fps: Option<f64>,
}

fn corrupt(offset: usize, reason: impl Into<String>) -> Error {
    Error::CorruptStream {
        offset: offset as u64,
        reason: reason.into(),
    }
}

fn line_end(bytes: &[u8], start: usize) -> Result<usize> {
    bytes[start..]
        .iter()
        .position(|&b| b == b'\n')
        .map(|p| start + p)
        .ok_or_else(|| corrupt(start, "unterminated header line"))
}

fn parse_header(bytes: &[u8]) -> Result<(Header, usize)> {
    const MAGIC: &[u8] = b"YUV4MPEG2";
    if !bytes.starts_with(MAGIC) {
        return Err(Error::UnsupportedFormat("missing YUV4MPEG2 signature".into()));
    }
    let end = line_end(bytes, 0)?;
    let line = std::str::from_utf8(&bytes[MAGIC.len()..end])
        .map_err(|_| corrupt(0, "header is not ASCII"))?;
    let (mut width, mut height, mut chroma, mut fps) = (None, None, Chroma::C420, None);
    for tok in line.split_ascii_whitespace() {
        let (key, val) = tok.split_at(1);
        match key {
            "W" => width = val.parse::<usize>().ok(),
            "H" => height = val.parse::<usize>().ok(),
            "C" => {
                chroma = match val {
                    "420" | "420jpeg" | "420paldv" | "420mpeg2" => Chroma::C420,
                    "444" => Chroma::C444,
                    other => return Err(Error::UnsupportedFormat(format!("colorspace C{other}"))),
                }
            }
            "F" => {
                fps = val.split_once(':').and_then(|(n, d)| {
                    let (n, d) = (n.parse::<f64>().ok()?, d.parse::<f64>().ok()?);
                    (d != 0.0).then(|| n / d)
                })
            }
            _ => {}
        }
    }
    match (width, height) {
        (Some(w), Some(h)) if w > 0 && h > 0 => Ok((Header { width: w, height: h, chroma, fps }, end + 1)),
        _ => Err(corrupt(0, "missing or invalid W/H")),
    }
}

fn ycbcr_to_rgb(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    let (y, cb, cr) = (f64::from(y), f64::from(cb) - 128.0, f64::from(cr) - 128.0);
    let q = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    [
        q(y + 1.402 * cr),
        q(y - 0.344136 * cb - 0.714136 * cr),
        q(y + 1.772 * cb),
    ]
}

fn rgb_to_ycbcr(p: [u8; 3]) -> [f64; 3] {
    let (r, g, b) = (f64::from(p[0]), f64::from(p[1]), f64::from(p[2]));
    [
        0.299 * r + 0.587 * g + 0.114 * b,
        128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b,
        128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b,
    ]
}

/// Decode a y4m byte stream.
pub fn decode_y4m(video_id: &str, bytes: &[u8]) -> Result<VideoSequence> {
    let (hdr, mut pos) = parse_header(bytes)?;
    let (w, h) = (hdr.width, hdr.height);
    let (cw, ch) = hdr.chroma.plane_dims(w, h);
    let frame_len = w * h + 2 * cw * ch;
    let mut frames = Vec::new();
    while pos < bytes.len() {
        if !bytes[pos..].starts_with(b"FRAME") {
            return Err(corrupt(pos, "expected FRAME marker"));
        }
        pos = line_end(bytes, pos)? + 1;
        if bytes.len() - pos < frame_len {
            return Err(corrupt(
                bytes.len(),
                format!("frame {} truncated: {} of {frame_len} bytes", frames.len(), bytes.len() - pos),
            ));
        }
        let luma = &bytes[pos..pos + w * h];
        let cb = &bytes[pos + w * h..pos + w * h + cw * ch];
        let cr = &bytes[pos + w * h + cw * ch..pos + frame_len];
        let frame = Frame::from_fn(w, h, |r, c| {
            let ci = match hdr.chroma {
                Chroma::C420 => (r / 2) * cw + c / 2,
                Chroma::C444 => r * w + c,
            };
            ycbcr_to_rgb(luma[r * w + c], cb[ci], cr[ci])
        })?;
        frames.push(frame);
        pos += frame_len;
    }
    let video = VideoSequence::new(video_id, frames)?;
    Ok(match hdr.fps {
        Some(f) => video.with_fps(f),
        None => video,
    })
}

pub fn read_y4m(path: impl AsRef<Path>) -> Result<VideoSequence> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).at_path(path))?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    decode_y4m(&id, &bytes).map_err(|e| e.at_path(path))
}

/// Encode RGB frames as y4m with full-range BT.601.
pub fn encode_y4m(video: &VideoSequence, chroma: Chroma, out: &mut impl Write) -> Result<()> {
    let (w, h) = (video.width(), video.height());
    let (cw, ch) = chroma.plane_dims(w, h);
    writeln!(out, "YUV4MPEG2 W{w} H{h} F25:1 Ip A1:1 C{} XCOLORRANGE=FULL", chroma.tag())?;
    let q = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    for frame in video.frames() {
        out.write_all(b"FRAME\n")?;
        let ycc: Vec<[f64; 3]> = (0..h)
            .flat_map(|r| (0..w).map(move |c| (r, c)))
            .map(|(r, c)| rgb_to_ycbcr(frame.pixel(r, c)))
            .collect();
        let luma: Vec<u8> = ycc.iter().map(|p| q(p[0])).collect();
        out.write_all(&luma)?;
        for k in 1..3 {
            let plane: Vec<u8> = match chroma {
                Chroma::C444 => ycc.iter().map(|p| q(p[k])).collect(),
                Chroma::C420 => (0..ch)
                    .flat_map(|r| (0..cw).map(move |c| (r, c)))
                    .map(|(r, c)| {
                        let mut sum = 0.0;
                        let mut n = 0.0;
                        for y in 2 * r..(2 * r + 2).min(h) {
                            for x in 2 * c..(2 * c + 2).min(w) {
                                sum += ycc[y * w + x][k];
                                n += 1.0;
                            }
                        }
                        q(sum / n)
                    })
                    .collect(),
            };
            out.write_all(&plane)?;
        }
    }
    Ok(())
}

pub fn write_y4m(video: &VideoSequence, chroma: Chroma, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    encode_y4m(video, chroma, &mut buf)?;
    std::fs::write(path.as_ref(), buf).map_err(|e| Error::from(e).at_path(path.as_ref()))
}
