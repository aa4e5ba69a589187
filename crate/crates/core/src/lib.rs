//! Spatio-temporal video squeezing for quality assessment.
//!
//! A video is reduced to a handful of keyframes ([`temporal`]), each keyframe
//! to a small mosaic of grid-sampled patches ([`spatial`]), and the result is
//! scored by a handcrafted-feature regressor ([`features`], [`regress`]).
//! [`metrics`] and [`harness`] implement the PLCC/SRCC evaluation protocol;
//! [`io`] holds the file formats, [`cli`] the `vqsqueeze` command line and
//! [`synthetic`] a procedural blur-graded corpus for testing.

pub mod cli;
pub mod error;
pub mod features;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod model;
pub mod regress;
pub mod rng;
pub mod spatial;
pub mod synthetic;
pub mod temporal;

pub use error::{Error, Result};
pub use harness::{DatasetManifest, EvalReport, ExperimentConfig, ShuffleMode, SplitSpec};
pub use model::{luminance, make_video, Frame, LumaPlane, VideoSequence};
pub use spatial::{squeeze, SpatialPreset, SpatialScheme, SqueezeConfig, SqueezedVideo};
pub use temporal::{KeyframeIndexList, TemporalConfig, TemporalMethod};
