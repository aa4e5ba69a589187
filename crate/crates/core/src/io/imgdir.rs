use std::path::{Path, PathBuf};

use glob::Pattern;

use crate::error::{Error, Result};
use crate::model::{Frame, VideoSequence};

/// Files in `dir` whose names match `pattern`, in lexicographic order.
pub fn list_frames(dir: &Path, pattern: &str) -> Result<Vec<PathBuf>> {
    let pat = Pattern::new(pattern)
        .map_err(|e| Error::InvalidConfig(format!("bad pattern {pattern:?}: {e}")))?;
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::from(e).at_path(dir))? {
        let entry = entry?;
        if entry.file_type()?.is_file() && pat.matches(&entry.file_name().to_string_lossy()) {
            files.push(entry.path());
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Decode a directory of still images into a video, one file per frame.
pub fn read_image_dir(dir: impl AsRef<Path>, pattern: &str) -> Result<VideoSequence> {
    let dir = dir.as_ref();
    let files = list_frames(dir, pattern)?;
    if files.is_empty() {
        return Err(Error::EmptyVideo.at_path(dir));
    }
    let mut frames = Vec::with_capacity(files.len());
    for (index, path) in files.iter().enumerate() {
        let img = image::open(path).map_err(|e| Error::from(e).at_path(path))?.to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        if let Some(first) = frames.first().map(|f: &Frame| (f.width(), f.height())) {
            if first != (w, h) {
                return Err(Error::DimensionMismatch {
                    index,
                    width: w,
                    height: h,
                    expected_width: first.0,
                    expected_height: first.1,
                    source_name: Some(path.display().to_string()),
                });
            }
        }
        frames.push(Frame::new(w, h, img.into_raw())?);
    }
    let id = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    VideoSequence::new(id, frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::RgbImage;

    fn save(dir: &Path, name: &str, w: u32, h: u32, v: u8) {
        RgbImage::from_pixel(w, h, image::Rgb([v, v / 2, 255 - v]))
            .save(dir.join(name))
            .unwrap();
    }

    #[test]
    fn frames_in_name_order() {
        let tmp = tempfile::tempdir().unwrap();
        save(tmp.path(), "002.png", 4, 3, 30);
        save(tmp.path(), "000.png", 4, 3, 10);
        save(tmp.path(), "001.png", 4, 3, 20);
        std::fs::write(tmp.path().join("notes.txt"), "x").unwrap();
        let v = read_image_dir(tmp.path(), "*.png").unwrap();
        assert_eq!(v.len(), 3);
        let firsts: Vec<u8> = v.frames().iter().map(|f| f.pixel(0, 0)[0]).collect();
        assert_eq!(firsts, vec![10, 20, 30]);
    }

    #[test]
    fn mixed_sizes_name_the_file() {
        let tmp = tempfile::tempdir().unwrap();
        save(tmp.path(), "a.png", 4, 3, 0);
        save(tmp.path(), "b.png", 5, 3, 0);
        match read_image_dir(tmp.path(), "*.png") {
            Err(Error::DimensionMismatch { source_name: Some(name), .. }) => assert!(name.ends_with("b.png")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn no_match_is_empty() {
        let tmp = tempfile::tempdir().unwrap();
        save(tmp.path(), "a.png", 4, 3, 0);
        let err = read_image_dir(tmp.path(), "*.jpg").unwrap_err();
        assert!(matches!(err, Error::Path { source, .. } if matches!(*source, Error::EmptyVideo)));
    }
}
