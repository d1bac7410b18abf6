//! Edge detection with a multi-stream, multi-scale fusion network trained
//! from scratch.
//!
//! The crate is organized bottom-up:
//!
//! * [`autograd`]: a small reverse-mode engine over rank-4 tensors.
//! * [`model`]: network configuration, parameters and forward pass.
//! * [`train`]: class-balanced deep supervision, Adam, data handling.
//! * [`infer`]: single-scale, multi-scale and modality-averaged prediction.
//! * [`eval`]: NMS, thinning, correspondence matching and ODS/OIS/AP.
//! * [`synthetic`]: procedural images with exact edge labels.

pub mod autograd;
pub mod error;
pub mod eval;
pub mod infer;
pub mod model;
pub mod synthetic;
pub mod train;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Element, Shape, Tensor};
