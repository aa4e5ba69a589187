//! File formats: y4m and image-directory ingestion, `VQSQ` squeezed tensors
//! and PNG heatmaps.

pub mod heatmap;
pub mod imgdir;
pub mod tensor;
pub mod y4m;

pub use heatmap::{heat_color, write_heatmap};
pub use imgdir::read_image_dir;
pub use tensor::{decode_squeezed, encode_squeezed, read_squeezed, write_squeezed};
pub use y4m::{decode_y4m, encode_y4m, read_y4m, write_y4m, Chroma};
