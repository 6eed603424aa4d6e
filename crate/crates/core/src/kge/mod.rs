//! Complex bilinear embedding model: scoring, filtered ranks, training and
//! the frozen-context post-training proxy.

mod checkpoint;
mod model;
mod train;

pub use checkpoint::Checkpoint;
pub use model::{
    filtered_rank, Direction, EmbeddingModel, ModelKind, RankedPrediction, ScoreGradient,
};
pub use train::{
    batch_objective, fit, mean_nll, post_train, queries_for, retrain_from_scratch, train,
    train_quiet, EpochRecord, Gradient, NegativeMode, OptimizerKind, PostTrainConfig, Query,
    TrainConfig, TrainableMask, TrainingHistory,
};
pub(crate) use train::{relation_rows_of, retrain_rows_from_init};
