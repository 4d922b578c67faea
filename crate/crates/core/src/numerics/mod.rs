//! Dense parameters, a dynamic reverse-mode tape, Adam and learning-rate schedules.
//!
//! All arithmetic is `f64`. A fresh [`Tape`] is recorded for every batch;
//! learnable values live in a [`ParamStore`] that outlives the tapes and
//! receives the accumulated gradients on [`Tape::backward`].

mod optim;
mod tape;
mod tensor;

pub use optim::{adam_step, cosine_lr, Adam, AdamConfig, AdamState};
pub use tape::{ColumnMap, Gather, NodeId, Tap, Tape};
pub use tensor::{ParamGroup, ParamId, ParamStore, ParamTensor};
