//! Dense tensors, reverse-mode differentiation and the Adam optimizer.

mod adam;
pub mod gradcheck;
mod init;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use init::glorot_uniform;
pub use tape::{SparseOperator, Tape, Var};
pub use tensor::{ParamId, ParamStore, Tensor};
