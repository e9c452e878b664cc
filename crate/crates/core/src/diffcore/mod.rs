//! A small dense-tensor library with reverse-mode differentiation.
//!
//! Everything is f64. A [`Graph`] records operations as they run; calling
//! [`Graph::backward`] on a scalar accumulates gradients into the
//! [`ParamStore`]. Models own a `ParamStore` and rebuild a fresh graph per
//! example.

mod checkpoint;
mod graph;
mod lstm;
mod optim;
mod param;
mod tensor;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointHeader, ManifestEntry,
    CHECKPOINT_VERSION,
};
pub use graph::{Graph, Var};
pub use lstm::{bilstm, lstm_cell, lstm_run, BiLstmOutput, BiLstmParams, LstmParams};
pub use optim::Adam;
pub use param::{ParamId, ParamStore, Parameter};
pub use tensor::Tensor;

/// Default initialization range for weights.
pub const INIT_SCALE: f64 = 0.1;

/// Default global gradient-norm clip.
pub const CLIP_NORM: f64 = 2.0;
