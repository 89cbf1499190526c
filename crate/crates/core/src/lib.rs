//! Predictive coding networks and graphs.
//!
//! - [`fnn`]: layerwise feedforward pass.
//! - [`pcn`]: layered predictive coding network with energy, closed-form
//!   gradients, gradient-descent and exact inference, and weight learning.
//! - [`pcg`]: predictive coding graph over a masked `N × N` weight matrix,
//!   with dense and compressed-row evaluation and the embedding of a layered
//!   network as a graph.
//! - [`topology`]: block masks built from connection kinds, and the cost model.
//! - [`layers`]: layer partitions and the 1-based index mapping between
//!   `(layer, unit)` and flat node indices.
//!
//! All arithmetic is `f64`.

pub mod activation;
pub mod error;
pub mod fnn;
pub mod inference;
pub mod layers;
pub mod linalg;
pub mod pcg;
pub mod pcn;
pub mod topology;

pub use activation::{ActivationKind, PredictionConvention};
pub use error::{PcError, Result};
pub use fnn::FnnModel;
pub use inference::{Backend, Clamp, InferenceConfig, Inferred, InitMode, Solver};
pub use layers::LayerSpec;
pub use pcg::{PcgModel, PcgState};
pub use pcn::{PcnModel, PcnState};
pub use topology::{cost_report, ConnectionKind, CostReport, Mask};
