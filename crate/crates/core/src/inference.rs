//! Settings shared by PCN and PCG inference.

use crate::error::{PcError, Result};

/// Which nodes are held fixed during inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Clamp {
    /// Inputs and outputs fixed to data and labels.
    Training,
    /// Inputs fixed; outputs free.
    Testing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    GradientDescent,
    /// Closed-form forward recursion. Testing mode only, hierarchical models only.
    ExactBackwardSubstitution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    FeedForward,
    Zero,
    Gaussian { std: f64, seed: u64 },
}

/// Evaluation path for graph models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Dense,
    Sparse,
    /// Sparse when the mask density is below [`SPARSE_DENSITY_THRESHOLD`].
    Auto,
}

pub const SPARSE_DENSITY_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceConfig {
    pub max_steps: usize,
    pub step_size: f64,
    /// Stop once the max-norm of the activation gradient is at or below this.
    pub stop_tolerance: f64,
    pub solver: Solver,
    pub init: InitMode,
    pub backend: Backend,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            max_steps: 200,
            step_size: 0.1,
            stop_tolerance: 1e-8,
            solver: Solver::GradientDescent,
            init: InitMode::FeedForward,
            backend: Backend::Auto,
        }
    }
}

impl InferenceConfig {
    pub fn gradient_descent(max_steps: usize, step_size: f64) -> Self {
        Self { max_steps, step_size, ..Self::default() }
    }

    pub fn with_init(mut self, init: InitMode) -> Self {
        self.init = init;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.stop_tolerance = tol;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn exact() -> Self {
        Self { solver: Solver::ExactBackwardSubstitution, ..Self::default() }
    }

    pub fn validate(&self, clamp: Clamp) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(PcError::Config(format!("step size must be positive, got {}", self.step_size)));
        }
        if self.stop_tolerance.is_nan() || self.stop_tolerance < 0.0 {
            return Err(PcError::Config("stop tolerance must be nonnegative".into()));
        }
        if self.solver == Solver::ExactBackwardSubstitution && clamp == Clamp::Training {
            return Err(PcError::Config("the exact solver only applies in testing mode".into()));
        }
        Ok(())
    }
}

/// Result of an inference run.
#[derive(Debug, Clone, PartialEq)]
pub struct Inferred<S> {
    pub state: S,
    /// Number of activation updates applied.
    pub steps: usize,
    /// Whether the stop tolerance was reached before the step cap.
    pub converged: bool,
    /// Multiply-adds over weights spent evaluating gradients.
    pub madds: u64,
}

pub(crate) fn max_abs<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.abs() > m || v.is_nan() { v.abs() } else { m })
}
