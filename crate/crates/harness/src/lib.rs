//! Configuration, datasets, training, evaluation, checkpoints and numerical
//! verification for predictive coding graphs.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod model;
pub mod train;
pub mod verify;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use dataset::{Dataset, Sample};
pub use error::{HarnessError, Result};
pub use metrics::MetricsRow;
pub use model::{evaluate, EvalReport, Predictor};
pub use train::{train, train_on, TrainOutcome};
