//! Evaluation engine for AI background-inpainted product images.
//!
//! Two gates run side by side on every generated image:
//!
//! * [`reward`]: a trainable scorer that fuses the original and generated
//!   image embeddings with cross-attention and rates background
//!   appropriateness.
//! * [`consistency`]: matches product masks between the original and the
//!   generated image and checks that every product survived unchanged.
//!
//! [`dataset`] and [`metrics`] provide the tooling to build training pairs
//! from a manifest and to measure the gate against human labels.

pub mod consistency;
pub mod dataset;
pub mod linalg;
pub mod metrics;
pub mod reward;
pub mod rng;
pub mod synthetic;
pub mod tensor_io;

pub use consistency::{ConsistencyConfig, ConsistencyResult, MaskSet};
pub use reward::{Fusion, LossMode, RewardHeadConfig, RewardHeadParams};
pub use tensor_io::{BinaryMask, RgbImage, TensorF32};
