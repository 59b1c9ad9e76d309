//! Feature selection methods trained jointly with a ranker.
//!
//! Sampling methods ([`L2x`], [`GL2x`], [`Cae`], [`Ifg`]) draw
//! concrete-relaxed masks during training and use deterministic hard masks
//! at evaluation time. Regularized methods ([`Invase`], [`LassoNet`],
//! [`TabNet`]) learn sparsity through a penalty or a constrained
//! architecture.

mod cae;
mod common;
mod gl2x;
mod ifg;
mod invase;
mod l2x;
mod lassonet;
mod tabnet;

pub use cae::{cae_encode, cae_encode_with_noise, Cae};
pub use common::{
    apply_mask, check_budget, gumbel_noise, max_concrete, measure_selected_count, relaxed_top_k,
    selected_indices, RELATIVE_COUNT_THRESHOLD,
};
pub use gl2x::{gl2x_mask, GL2x};
pub use ifg::{ifg_relaxed_mask, Ifg, IfgLosses};
pub use invase::{invase_selector_objective, Invase, InvaseLosses, PROB_CLAMP};
pub use l2x::L2x;
pub use lassonet::{hier_prox, LassoNet};
pub use tabnet::{update_prior, TabNet, TabNetConfig, TabNetForward};
