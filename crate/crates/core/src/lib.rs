//! Dual-path graph convolution for node classification.
//!
//! Two propagation paths share one unified node embedding per layer: a
//! connectivity path over the renormalized adjacency, and a topology path that
//! pools nodes into structural roles and shares each role's embedding back to
//! its members. Per-node attention fuses the two paths before the next layer.

pub mod datasets;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod roles;
pub mod trainer;

pub use error::{Error, Result};
