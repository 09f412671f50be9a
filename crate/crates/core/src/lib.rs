//! Semantic-guided transient suppression for 2D Gaussian splatting.
//!
//! A differentiable 2D splat rasterizer, a per-primitive semantic score
//! accumulated from view-level distractor scores, an opacity regularizer
//! weighted by that score, and a pruner that removes primitives which
//! consistently appear in distractor-flagged views.

pub mod accumulate;
pub mod camera;
pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod image;
pub mod loss;
pub mod metrics;
pub mod prune;
pub mod raster;
pub mod scene;
pub mod scorer;
pub mod ssim;
pub mod train;

pub use error::{Error, Result};
