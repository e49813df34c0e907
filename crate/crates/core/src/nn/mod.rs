//! Dense numerical core for the temporal convolutional network.
//!
//! Everything here is written against plain `f64` slices: dilated causal
//! 1-D convolutions, residual blocks, the single- and dual-head TCN, its
//! analytic backward pass, and the AdamW optimizer. Model parameters live
//! in one flat buffer whose order is described by [`ParamLayout`]; the
//! same order is used for gradients, optimizer moments and the on-disk
//! blob written by [`io`].

mod config;
mod conv;
pub mod io;
mod model;
mod optim;
mod stream;
mod tensor;

pub use config::{receptive_field, HeadMode, ModelConfig};
pub use conv::{conv1d_causal_forward, residual_block_forward, BlockParams};
pub use model::{BlockLayout, ForwardCache, HeadGrads, ParamLayout, TcnModel, TcnOutput};
pub use optim::{adamw_step, AdamWConfig, OptimState};
pub use stream::StreamState;
pub use tensor::Mat;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("input window has {got} samples, model receptive field is {expected}")]
    WindowSize { expected: usize, got: usize },
    #[error("backward pass called without a matching forward cache")]
    MissingCache,
    #[error("non-finite gradient at parameter index {index}")]
    NonFiniteGradient { index: usize },
}
