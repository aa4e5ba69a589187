//! PNG rendering of local quality maps.
//!
//! Scores are min-max normalised over the whole map to `t ∈ [0, 1]` (a
//! constant map gives `t = 0.5` everywhere) and coloured on a linear
//! blue-to-red ramp:
//!
//! | t    | R   | G | B   |
//! |------|-----|---|-----|
//! | 0.00 | 0   | 0 | 255 |
//! | 0.25 | 64  | 0 | 191 |
//! | 0.50 | 128 | 0 | 127 |
//! | 0.75 | 191 | 0 | 64  |
//! | 1.00 | 255 | 0 | 0   |
//!
//! with `R = round(255·t)` (half away from zero) and `B = 255 - R`.
//! Each grid cell becomes a `cell x cell` block; one PNG per keyframe.

use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::regress::QualityMap;

pub fn heat_color(t: f64) -> [u8; 3] {
    let r = (255.0 * t.clamp(0.0, 1.0)).round() as u8;
    [r, 0, 255 - r]
}

/// Normalised position of every score in the map.
pub fn normalize_scores(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::DegenerateInput("non-finite quality score".into()));
    }
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| (l.min(s), h.max(s)));
    Ok(scores
        .iter()
        .map(|&s| if hi > lo { (s - lo) / (hi - lo) } else { 0.5 })
        .collect())
}

/// Render one image per keyframe.
pub fn render_heatmaps(map: &QualityMap, cell: usize) -> Result<Vec<RgbImage>> {
    if cell == 0 {
        return Err(Error::InvalidConfig("cell size must be >= 1".into()));
    }
    let t = normalize_scores(&map.scores)?;
    let cells = map.grid * map.grid;
    let side = (map.grid * cell) as u32;
    Ok((0..map.keyframes)
        .map(|k| {
            let frame_t = &t[k * cells..(k + 1) * cells];
            RgbImage::from_fn(side, side, |x, y| {
                let (gr, gc) = (y as usize / cell, x as usize / cell);
                Rgb(heat_color(frame_t[gr * map.grid + gc]))
            })
        })
        .collect())
}

/// Write `{prefix}_{k:04}.png` for every keyframe `k`.
pub fn write_heatmap(map: &QualityMap, cell: usize, path_prefix: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let prefix = path_prefix.as_ref().to_string_lossy().into_owned();
    render_heatmaps(map, cell)?
        .into_iter()
        .enumerate()
        .map(|(k, img)| {
            let path = PathBuf::from(format!("{prefix}_{k:04}.png"));
            img.save(&path).map_err(|e| Error::from(e).at_path(&path))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(scores: Vec<f64>, grid: usize) -> QualityMap {
        QualityMap {
            keyframes: scores.len() / (grid * grid),
            grid,
            scores,
        }
    }

    #[test]
    fn colormap_table() {
        assert_eq!(heat_color(0.0), [0, 0, 255]);
        assert_eq!(heat_color(0.25), [64, 0, 191]);
        assert_eq!(heat_color(0.5), [128, 0, 127]);
        assert_eq!(heat_color(0.75), [191, 0, 64]);
        assert_eq!(heat_color(1.0), [255, 0, 0]);
    }

    #[test]
    fn uniform_scores_render_mid_colour() {
        let imgs = render_heatmaps(&map(vec![3.0; 8], 2), 4).unwrap();
        assert_eq!(imgs.len(), 2);
        for img in imgs {
            assert_eq!(img.dimensions(), (8, 8));
            assert!(img.pixels().all(|p| p.0 == [128, 0, 127]));
        }
    }

    #[test]
    fn single_maximum_is_the_only_red_block() {
        let mut scores = vec![1.0; 9];
        scores[5] = 2.0;
        let img = &render_heatmaps(&map(scores, 3), 2).unwrap()[0];
        let red = img.pixels().filter(|p| p.0 == [255, 0, 0]).count();
        assert_eq!(red, 4);
        for y in 2..4 {
            for x in 4..6 {
                assert_eq!(img.get_pixel(x, y).0, [255, 0, 0]);
            }
        }
        let blue = img.pixels().filter(|p| p.0 == [0, 0, 255]).count();
        assert_eq!(blue, 32);
    }

    #[test]
    fn ramp_follows_table() {
        let scores: Vec<f64> = (0..4).map(f64::from).collect();
        let img = &render_heatmaps(&map(scores, 2), 1).unwrap()[0];
        // t = 0, 1/3, 2/3, 1
        assert_eq!(img.get_pixel(0, 0).0, [0, 0, 255]);
        assert_eq!(img.get_pixel(1, 0).0, [85, 0, 170]);
        assert_eq!(img.get_pixel(0, 1).0, [170, 0, 85]);
        assert_eq!(img.get_pixel(1, 1).0, [255, 0, 0]);
    }

    #[test]
    fn writes_one_file_per_keyframe() {
        let tmp = tempfile::tempdir().unwrap();
        let prefix = tmp.path().join("hm");
        let paths = write_heatmap(&map((0..12).map(f64::from).collect(), 2), 3, &prefix).unwrap();
        assert_eq!(paths.len(), 3);
        let back = image::open(&paths[2]).unwrap().to_rgb8();
        assert_eq!(back.get_pixel(5, 5).0, [255, 0, 0]);
    }

    #[test]
    fn rejects_nan() {
        assert!(normalize_scores(&[1.0, f64::NAN]).is_err());
    }
}
