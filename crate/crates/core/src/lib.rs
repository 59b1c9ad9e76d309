//! Embedded feature selection for neural learning-to-rank.
//!
//! Seven selection methods train jointly with a listwise neural ranker:
//! L2X, G-L2X, CAE and IFG draw concrete-relaxed masks, while INVASE,
//! LassoNet and TabNet rely on sparsity regularization. The [`harness`]
//! module runs joint train-and-select experiments and budgeted evaluation.

pub mod data;
pub mod error;
pub mod harness;
pub mod layers;
pub mod ltr;
pub mod model;
pub mod selectors;

pub use error::{CoreError, Result};
