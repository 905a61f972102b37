//! Dense tensors, reverse-mode differentiation, MLP basis networks and Adam.

mod adam;
mod basis;
mod mlp;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use basis::{BasisArchitecture, BasisMode};
pub use mlp::{mlp_forward, Activation, MlpParams};
pub use tape::{Gradients, NodeId, Tape};
pub use tensor::Tensor;
