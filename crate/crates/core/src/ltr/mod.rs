//! The neural ranker, its loss, NDCG evaluation and the training loop.

mod metrics;
mod ranker;
mod train;

pub use metrics::{
    dcg_at_k, evaluate, ideal_dcg_at_k, ndcg_at_k, ranking_order, EvalReport, MeanStd, DEFAULT_CUTOFFS,
};
pub use ranker::{listwise_softmax_ce, RankerModel};
pub use train::{train_model, train_ranker, EpochRecord, TauSchedule, TrainConfig, TrainOutcome};
