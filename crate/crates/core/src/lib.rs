//! Thinning of character images by pairing parallel contour strokes.
//!
//! The pipeline runs binarization and component isolation ([`raster`]),
//! boundary tracing ([`contour`]), contour-stroke segmentation
//! ([`segmentation`]), medial-segment extraction ([`medial`]) and junction
//! extrapolation into a skeleton graph ([`extrapolation`]). [`bench`] holds
//! the raster baseline and the evaluation metrics.

pub mod bench;
pub mod contour;
pub mod error;
pub mod extrapolation;
pub mod geom;
pub mod io;
pub mod medial;
pub mod pipeline;
pub mod raster;
pub mod segmentation;
pub mod synth;
pub mod topology;

pub use bench::{Method, ReportRow, ThinMetrics};
pub use contour::{trace_contours, Contour, ContourKind};
pub use error::{Error, Result};
pub use extrapolation::{Provenance, SkeletonEdge, SkeletonGraph, SkeletonNode};
pub use geom::{Pixel, Point};
pub use pipeline::{thin, thin_binary, PenWidth, PipelineConfig, ThinResult};
pub use raster::{BinaryImage, Component, GrayImage, Polarity};
pub use synth::{synthesize, GroundTruth, Synthetic};
