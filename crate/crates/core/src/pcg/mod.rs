//! Predictive coding graph over `N` flat nodes.
//!
//! Every node `α` is predicted from all nodes through row `α` of an `N × N`
//! weight matrix restricted by a binary [`Mask`]. The energy is
//! `E_G = ½ Σ_α (ã_α − μ_α)²`. The first `n_x` nodes are clamped to the input;
//! in training mode the last `n_y` nodes are clamped to the label.

mod embed;
mod sparse;

use std::ops::Range;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use embed::{embed_layers, extract_layers, extract_pcn, feedforward_init, hierarchical_embed};
pub use sparse::{CsrPattern, SparseWeights};

use crate::activation::{ActivationKind, PredictionConvention};
use crate::error::{expect_len, PcError, Result};
use crate::inference::{
    max_abs, Backend, Clamp, InferenceConfig, Inferred, InitMode, Solver, SPARSE_DENSITY_THRESHOLD,
};
use crate::layers::LayerSpec;
use crate::linalg::{matvec, matvec_t};
use crate::topology::{Mask, MADDS_PER_NONZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct PcgState {
    pub activations: Array1<f64>,
    pub clamp: Clamp,
}

/// Quantities from one pass over the graph.
#[derive(Debug, Clone)]
pub struct GraphEval {
    /// `ε = ã − μ`
    pub errors: Array1<f64>,
    /// `w̃·ã` or `w̃·f(ã)` depending on the convention.
    pub drives: Array1<f64>,
    /// `∂E_G/∂ã`, zero on clamped nodes.
    pub gradient: Array1<f64>,
    pub madds: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcgModel {
    weights: Array2<f64>,
    mask: Mask,
    pattern: CsrPattern,
    activation: ActivationKind,
    convention: PredictionConvention,
    input_width: usize,
    output_width: usize,
    partition: Option<LayerSpec>,
}

impl PcgModel {
    /// Fails with a structure error if any masked entry of `weights` is nonzero.
    pub fn new(
        weights: Array2<f64>,
        mask: Mask,
        activation: ActivationKind,
        convention: PredictionConvention,
        input_width: usize,
        output_width: usize,
    ) -> Result<Self> {
        let n = mask.size();
        if weights.dim() != (n, n) {
            return Err(PcError::Dimension(format!(
                "weights have shape {:?}, mask is {n}×{n}",
                weights.dim()
            )));
        }
        if input_width == 0 || output_width == 0 || input_width + output_width > n {
            return Err(PcError::Dimension(format!(
                "clamp widths {input_width}+{output_width} do not fit {n} nodes"
            )));
        }
        if let Some(((r, c), _)) = weights.indexed_iter().find(|((r, c), w)| !mask.get(*r, *c) && **w != 0.0) {
            return Err(PcError::Structure(format!("masked weight ({r},{c}) is nonzero")));
        }
        let pattern = CsrPattern::from_mask(&mask);
        Ok(Self {
            weights,
            mask,
            pattern,
            activation,
            convention,
            input_width,
            output_width,
            partition: None,
        })
    }

    /// Attaches a layer partition, enabling feedforward initialization when
    /// the mask only connects lower layers to higher ones.
    pub fn with_partition(mut self, spec: LayerSpec) -> Result<Self> {
        if spec.node_count() != self.node_count()
            || spec.input_width() != self.input_width
            || spec.output_width() != self.output_width
        {
            return Err(PcError::Dimension(format!(
                "partition {:?} does not match {} nodes with clamps {}/{}",
                spec.sizes(),
                self.node_count(),
                self.input_width,
                self.output_width
            )));
        }
        self.partition = Some(spec);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.mask.size()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn convention(&self) -> PredictionConvention {
        self.convention
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn output_width(&self) -> usize {
        self.output_width
    }

    pub fn partition(&self) -> Option<&LayerSpec> {
        self.partition.as_ref()
    }

    pub fn nonzeros(&self) -> usize {
        self.pattern.nnz()
    }

    /// Node indices (0-based) that inference may change.
    pub fn free_nodes(&self, clamp: Clamp) -> Range<usize> {
        let end = match clamp {
            Clamp::Training => self.node_count() - self.output_width,
            Clamp::Testing => self.node_count(),
        };
        self.input_width..end
    }

    /// 0-based indices holding the output.
    pub fn output_nodes(&self) -> Range<usize> {
        self.node_count() - self.output_width..self.node_count()
    }

    pub fn output(&self, state: &PcgState) -> Array1<f64> {
        state.activations.slice(ndarray::s![self.output_nodes()]).to_owned()
    }

    fn resolve(&self, backend: Backend) -> Backend {
        match backend {
            Backend::Auto if self.mask.density() < SPARSE_DENSITY_THRESHOLD => Backend::Sparse,
            Backend::Auto => Backend::Dense,
            other => other,
        }
    }

    fn check_state(&self, state: &PcgState) -> Result<()> {
        expect_len("graph state", state.activations.len(), self.node_count())
    }

    /// Errors, drives and activation gradient in one pass.
    pub fn evaluate(&self, state: &PcgState, backend: Backend) -> Result<GraphEval> {
        self.check_state(state)?;
        let sparse = match self.resolve(backend) {
            Backend::Sparse => Some(self.pattern.gather(&self.weights)),
            _ => None,
        };
        Ok(self.evaluate_with(state, sparse.as_ref()))
    }

    fn evaluate_with(&self, state: &PcgState, sparse: Option<&SparseWeights<'_>>) -> GraphEval {
        let a = &state.activations;
        let act = self.activation;
        let n = self.node_count() as u64;
        let mut madds = 0;
        let mut matvec = |v: &Array1<f64>, transpose: bool| match sparse {
            Some(sw) if transpose => sw.transpose_matvec(v, &mut madds),
            Some(sw) => sw.matvec(v, &mut madds),
            None => {
                madds += n * n;
                if transpose {
                    matvec_t(self.weights.view(), v.view())
                } else {
                    matvec(self.weights.view(), v.view())
                }
            }
        };
        let (errors, drives, back) = match self.convention {
            PredictionConvention::MatrixActivation => {
                let drives = matvec(a, false);
                let errors = a - &act.map(drives.view());
                let delta = &errors * &act.map_derivative(drives.view());
                let back = matvec(&delta, true);
                (errors, drives, back)
            }
            PredictionConvention::ActivationMatrix => {
                let drives = matvec(&act.map(a.view()), false);
                let errors = a - &drives;
                let back = matvec(&errors, true) * &act.map_derivative(a.view());
                (errors, drives, back)
            }
        };
        let mut gradient = &errors - &back;
        let free = self.free_nodes(state.clamp);
        for (i, g) in gradient.iter_mut().enumerate() {
            if !free.contains(&i) {
                *g = 0.0;
            }
        }
        GraphEval { errors, drives, gradient, madds }
    }

    pub fn energy(&self, state: &PcgState) -> Result<f64> {
        self.energy_with(state, Backend::Dense)
    }

    pub fn energy_with(&self, state: &PcgState, backend: Backend) -> Result<f64> {
        let eval = self.evaluate(state, backend)?;
        Ok(0.5 * eval.errors.dot(&eval.errors))
    }

    pub fn activation_gradient(&self, state: &PcgState) -> Result<Array1<f64>> {
        Ok(self.evaluate(state, Backend::Dense)?.gradient)
    }

    pub fn weight_gradient(&self, state: &PcgState) -> Result<Array2<f64>> {
        self.weight_gradient_with(state, Backend::Dense)
    }

    /// `∂E_G/∂w̃` with masked entries exactly zero.
    pub fn weight_gradient_with(&self, state: &PcgState, backend: Backend) -> Result<Array2<f64>> {
        let eval = self.evaluate(state, backend)?;
        let act = self.activation;
        let (row, col) = match self.convention {
            PredictionConvention::MatrixActivation => (
                &eval.errors * &act.map_derivative(eval.drives.view()),
                state.activations.clone(),
            ),
            PredictionConvention::ActivationMatrix => (eval.errors, act.map(state.activations.view())),
        };
        let n = self.node_count();
        let mut grad = Array2::zeros((n, n));
        for (r, c) in self.mask.iter_ones() {
            grad[[r, c]] = -row[r] * col[c];
        }
        Ok(grad)
    }

    fn check_data(&self, x: &Array1<f64>, y: Option<&Array1<f64>>) -> Result<Clamp> {
        expect_len("input", x.len(), self.input_width)?;
        match y {
            Some(y) => {
                expect_len("label", y.len(), self.output_width)?;
                Ok(Clamp::Training)
            }
            None => Ok(Clamp::Testing),
        }
    }

    fn clamp_data(&self, a: &mut Array1<f64>, x: &Array1<f64>, y: Option<&Array1<f64>>) {
        a.slice_mut(ndarray::s![..self.input_width]).assign(x);
        if let Some(y) = y {
            a.slice_mut(ndarray::s![self.output_nodes()]).assign(y);
        }
    }

    pub fn init_state(&self, x: &Array1<f64>, y: Option<&Array1<f64>>, mode: InitMode) -> Result<PcgState> {
        let clamp = self.check_data(x, y)?;
        let n = self.node_count();
        let mut activations = match mode {
            InitMode::FeedForward => {
                let spec = self.partition.as_ref().ok_or_else(|| {
                    PcError::InitNotApplicable("graph has no layer partition".into())
                })?;
                return feedforward_init(self, spec, x, y);
            }
            InitMode::Zero => Array1::zeros(n),
            InitMode::Gaussian { std, seed } => {
                let normal =
                    Normal::new(0.0, std).map_err(|e| PcError::Config(format!("gaussian init: {e}")))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Array1::from_shape_fn(n, |_| normal.sample(&mut rng))
            }
        };
        self.clamp_data(&mut activations, x, y);
        Ok(PcgState { activations, clamp })
    }

    /// One synchronous gradient step over all free nodes; returns the
    /// max-norm of the applied gradient.
    pub fn descend(&self, state: &mut PcgState, step_size: f64, backend: Backend) -> Result<f64> {
        let eval = self.evaluate(state, backend)?;
        state.activations.scaled_add(-step_size, &eval.gradient);
        Ok(max_abs(eval.gradient.iter()))
    }

    pub fn infer(
        &self,
        x: &Array1<f64>,
        y: Option<&Array1<f64>>,
        config: &InferenceConfig,
    ) -> Result<Inferred<PcgState>> {
        let clamp = self.check_data(x, y)?;
        config.validate(clamp)?;
        if config.solver == Solver::ExactBackwardSubstitution {
            let spec = self.partition.as_ref().filter(|s| self.mask.is_feedforward(s)).ok_or_else(|| {
                PcError::Config("the exact solver needs a feedforward mask with a layer partition".into())
            })?;
            let state = feedforward_init(self, spec, x, None)?;
            return Ok(Inferred { state, steps: 0, converged: true, madds: self.nonzeros() as u64 });
        }
        let state = self.init_state(x, y, config.init)?;
        self.relax(state, config)
    }

    /// Gradient descent on `E_G` from `state`.
    pub fn relax(&self, mut state: PcgState, config: &InferenceConfig) -> Result<Inferred<PcgState>> {
        self.check_state(&state)?;
        config.validate(state.clamp)?;
        let sparse = match self.resolve(config.backend) {
            Backend::Sparse => Some(self.pattern.gather(&self.weights)),
            _ => None,
        };
        let mut madds = 0;
        for step in 0..config.max_steps {
            let eval = self.evaluate_with(&state, sparse.as_ref());
            madds += eval.madds;
            let norm = max_abs(eval.gradient.iter());
            if !norm.is_finite() {
                return Err(PcError::Diverged { step });
            }
            if norm <= config.stop_tolerance {
                return Ok(Inferred { state, steps: step, converged: true, madds });
            }
            state.activations.scaled_add(-config.step_size, &eval.gradient);
            if state.activations.iter().any(|v| !v.is_finite()) {
                return Err(PcError::Diverged { step: step + 1 });
            }
        }
        Ok(Inferred { state, steps: config.max_steps, converged: false, madds })
    }

    /// `w̃ ← mask ⊙ (w̃ − η·grad)`.
    pub fn apply_weight_gradient(&self, grad: &Array2<f64>, learning_rate: f64) -> Result<PcgModel> {
        let n = self.node_count();
        if grad.dim() != (n, n) {
            return Err(PcError::Dimension(format!("gradient shape {:?}, expected ({n}, {n})", grad.dim())));
        }
        let mut next = self.clone();
        next.weights.scaled_add(-learning_rate, grad);
        next.mask.apply(&mut next.weights);
        Ok(next)
    }

    pub fn learn_step(&self, state: &PcgState, learning_rate: f64) -> Result<PcgModel> {
        let grad = self.weight_gradient(state)?;
        self.apply_weight_gradient(&grad, learning_rate)
    }

    /// Multiply-adds per gradient evaluation on the sparse path.
    pub fn sparse_madds_per_step(&self) -> u64 {
        self.nonzeros() as u64 * MADDS_PER_NONZERO
    }
}
