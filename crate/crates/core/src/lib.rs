//! Two-pass selection of extremal regions (ERELs) for intravascular
//! ultrasound lumen segmentation.
//!
//! Given a frame and its ordered, size-increasing series of candidate
//! regions, the selector
//!
//! 1. thresholds the last region at its mean intensity to obtain an
//!    approximate lumen, correlates every region with it and keeps the
//!    regions whose correlation reaches the mean correlation;
//! 2. dilates each survivor with a disk, fits an ellipse to it and scores
//!    how tightly region and ellipse overlap (`M1 + M2`), then picks the
//!    best of the first few local maxima of that curve.
//!
//! Selections are evaluated against expert contours with the Hausdorff
//! distance and the Jaccard measure, stratified by artifact category.

pub mod dataio;
pub mod ellipsefit;
pub mod error;
pub mod masks;
pub mod metrics;
pub mod morphology;
pub mod scoring;
pub mod selection;

pub use ellipsefit::{Ellipse, Point};
pub use error::{Error, Result};
pub use masks::{BinaryMask, FrameImage, GrayMask, Pixel, RegionCoords};
pub use selection::{select, Category, CorrMode, FrameSample, PipelineConfig, SelectionResult};
