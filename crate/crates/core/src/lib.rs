//! Knowledge-graph embeddings and post-hoc explanations of their
//! predictions.
//!
//! Explanations are sets of triples traded off between length and
//! effectiveness: how much retraining without (or with) them moves the
//! filtered rank of a prediction. The crate covers the whole loop:
//!
//! * [`kg`], [`space`]: graph storage, connectivity and explanation search spaces
//! * [`kge`]: ComplEx scorer, filtered rank, training and post-training
//! * [`explain`]: retraining operators, effectiveness functions, Pareto fronts
//! * [`explainers`]: search algorithms producing candidate explanations
//! * [`metrics`]: Hits@k, MRR, MΔR and report emission

pub mod error;
pub mod explain;
pub mod explainers;
pub mod kg;
pub mod kge;
pub mod metrics;
pub mod space;
pub mod synthetic;
pub mod union_find;

pub use error::{Error, Result};
pub use kg::{EntityId, KnowledgeGraph, RelationId, Triple};
