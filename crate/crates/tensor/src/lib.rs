//! Dense `f64` tensors with tape-based reverse-mode differentiation, the
//! handful of layers a feed-forward ranker needs, Adam, a seeded RNG, and a
//! finite-difference gradient checker.

pub mod checkpoint;
pub mod error;
pub mod functional;
pub mod gradcheck;
pub mod graph;
pub mod nn;
pub mod optim;
pub mod param;
pub mod rng;
pub mod tensor;

pub use error::{Result, TensorError};
pub use graph::{Gradients, Graph, Var};
pub use param::{Param, ParamId, ParamStore};
pub use rng::RngState;
pub use tensor::Tensor;
