//! Hierarchical predictive coding network.
//!
//! The energy is `E_N = ½ Σ_{ℓ=1..L} ‖a^ℓ − μ^ℓ‖²` with `μ^ℓ` predicted from
//! layer `ℓ−1`. Inference minimizes `E_N` over the free layers; learning takes
//! a gradient step on the weights at the inferred activations.

use ndarray::{Array1, Array2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::activation::{ActivationKind, PredictionConvention};
use crate::error::{expect_len, PcError, Result};
use crate::fnn::{check_layer_weights, forward_layers, FnnModel};
use crate::inference::{max_abs, Clamp, InferenceConfig, Inferred, InitMode, Solver};
use crate::layers::LayerSpec;
use crate::linalg::matvec_t;

#[derive(Debug, Clone, PartialEq)]
pub struct PcnState {
    /// `L+1` layer vectors; `activations[0]` is the input.
    pub activations: Vec<Array1<f64>>,
    pub clamp: Clamp,
}

impl PcnState {
    /// Whether layer `l` is held fixed under inference.
    pub fn is_clamped(&self, layer: usize) -> bool {
        layer == 0 || (self.clamp == Clamp::Training && layer + 1 == self.activations.len())
    }
}

/// Prediction errors and the pre-nonlinearity drives, indexed by layer.
/// Entry 0 holds zero vectors since the input layer has no prediction.
#[derive(Debug, Clone)]
pub struct LayerErrors {
    pub errors: Vec<Array1<f64>>,
    pub drives: Vec<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcnModel {
    spec: LayerSpec,
    weights: Vec<Array2<f64>>,
    activation: ActivationKind,
    convention: PredictionConvention,
}

impl PcnModel {
    /// `weights[ℓ]` maps layer `ℓ` to layer `ℓ+1` and has shape `n_{ℓ+1} × n_ℓ`.
    pub fn new(
        spec: LayerSpec,
        weights: Vec<Array2<f64>>,
        activation: ActivationKind,
        convention: PredictionConvention,
    ) -> Result<Self> {
        check_layer_weights(&spec, &weights)?;
        Ok(Self { spec, weights, activation, convention })
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn convention(&self) -> PredictionConvention {
        self.convention
    }

    pub fn weight_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum()
    }

    pub fn to_fnn(&self) -> FnnModel {
        FnnModel::new(self.spec.clone(), self.weights.clone(), self.activation, self.convention)
            .expect("shapes already validated")
    }

    fn check_state(&self, state: &PcnState) -> Result<()> {
        expect_len("layer count", state.activations.len(), self.spec.depth() + 1)?;
        for (l, a) in state.activations.iter().enumerate() {
            expect_len(&format!("layer {l}"), a.len(), self.spec.width(l))?;
        }
        Ok(())
    }

    pub fn layer_errors(&self, state: &PcnState) -> Result<LayerErrors> {
        self.check_state(state)?;
        let acts = &state.activations;
        let mut errors = Vec::with_capacity(acts.len());
        let mut drives = Vec::with_capacity(acts.len());
        errors.push(Array1::zeros(acts[0].len()));
        drives.push(Array1::zeros(acts[0].len()));
        for (l, w) in self.weights.iter().enumerate() {
            let (mu, drive) = self.convention.predict(self.activation, w.view(), acts[l].view());
            errors.push(&acts[l + 1] - &mu);
            drives.push(drive);
        }
        Ok(LayerErrors { errors, drives })
    }

    pub fn energy(&self, state: &PcnState) -> Result<f64> {
        let errs = self.layer_errors(state)?;
        Ok(0.5 * errs.errors[1..].iter().map(|e| e.dot(e)).sum::<f64>())
    }

    /// `∂E_N/∂a^ℓ` for every layer, with zero vectors on clamped layers.
    pub fn activation_gradients(&self, state: &PcnState) -> Result<Vec<Array1<f64>>> {
        let errs = self.layer_errors(state)?;
        Ok(self.gradients_from_errors(state, &errs))
    }

    fn gradients_from_errors(&self, state: &PcnState, errs: &LayerErrors) -> Vec<Array1<f64>> {
        let depth = self.spec.depth();
        let act = self.activation;
        (0..=depth)
            .map(|l| {
                if state.is_clamped(l) {
                    return Array1::zeros(self.spec.width(l));
                }
                let mut grad = errs.errors[l].clone();
                if l < depth {
                    let w = &self.weights[l];
                    let upstream = &errs.errors[l + 1];
                    match self.convention {
                        PredictionConvention::MatrixActivation => {
                            let delta = upstream * &act.map_derivative(errs.drives[l + 1].view());
                            grad -= &matvec_t(w.view(), delta.view());
                        }
                        PredictionConvention::ActivationMatrix => {
                            let back = matvec_t(w.view(), upstream.view());
                            let slope = act.map_derivative(state.activations[l].view());
                            grad -= &(&slope * &back);
                        }
                    }
                }
                grad
            })
            .collect()
    }

    /// `∂E_N/∂w^ℓ` for every weight matrix.
    pub fn weight_gradients(&self, state: &PcnState) -> Result<Vec<Array2<f64>>> {
        let errs = self.layer_errors(state)?;
        let act = self.activation;
        Ok(self
            .weights
            .iter()
            .enumerate()
            .map(|(l, w)| {
                let upstream = &errs.errors[l + 1];
                let (row, col) = match self.convention {
                    PredictionConvention::MatrixActivation => (
                        upstream * &act.map_derivative(errs.drives[l + 1].view()),
                        state.activations[l].clone(),
                    ),
                    PredictionConvention::ActivationMatrix => {
                        (upstream.clone(), act.map(state.activations[l].view()))
                    }
                };
                let mut g = Array2::zeros(w.dim());
                Zip::indexed(&mut g).for_each(|(a, b), v| *v = -row[a] * col[b]);
                g
            })
            .collect())
    }

    fn check_data(&self, x: &Array1<f64>, y: Option<&Array1<f64>>) -> Result<Clamp> {
        expect_len("input", x.len(), self.spec.input_width())?;
        match y {
            Some(y) => {
                expect_len("label", y.len(), self.spec.output_width())?;
                Ok(Clamp::Training)
            }
            None => Ok(Clamp::Testing),
        }
    }

    /// Hidden layers (and the output in testing mode) set to their predictions
    /// from the layer below, so every free prediction error starts at zero.
    pub fn feedforward_init(&self, x: &Array1<f64>, y: Option<&Array1<f64>>) -> Result<PcnState> {
        let clamp = self.check_data(x, y)?;
        let mut activations = forward_layers(&self.weights, self.activation, self.convention, x);
        if let Some(y) = y {
            *activations.last_mut().expect("output layer") = y.clone();
        }
        Ok(PcnState { activations, clamp })
    }

    pub fn init_state(&self, x: &Array1<f64>, y: Option<&Array1<f64>>, mode: InitMode) -> Result<PcnState> {
        let clamp = self.check_data(x, y)?;
        let mut state = match mode {
            InitMode::FeedForward => return self.feedforward_init(x, y),
            InitMode::Zero => PcnState {
                activations: self.spec.sizes().iter().map(|&n| Array1::zeros(n)).collect(),
                clamp,
            },
            InitMode::Gaussian { std, seed } => {
                let normal = Normal::new(0.0, std)
                    .map_err(|e| PcError::Config(format!("gaussian init: {e}")))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                PcnState {
                    activations: self
                        .spec
                        .sizes()
                        .iter()
                        .map(|&n| Array1::from_shape_fn(n, |_| normal.sample(&mut rng)))
                        .collect(),
                    clamp,
                }
            }
        };
        state.activations[0] = x.clone();
        if let Some(y) = y {
            *state.activations.last_mut().expect("output layer") = y.clone();
        }
        Ok(state)
    }

    /// One synchronous gradient step on all free layers. Returns the max-norm
    /// of the gradient that was applied.
    pub fn descend(&self, state: &mut PcnState, step_size: f64) -> Result<f64> {
        let grads = self.activation_gradients(state)?;
        let norm = max_abs(grads.iter().flat_map(|g| g.iter()));
        for (a, g) in state.activations.iter_mut().zip(&grads) {
            a.scaled_add(-step_size, g);
        }
        Ok(norm)
    }

    fn gradient_madds(&self) -> u64 {
        // forward pass over all weights plus backward pass for layers 1..L-1
        let forward = self.weight_count();
        let backward: usize = self.weights[1..].iter().map(|w| w.len()).sum();
        (forward + backward) as u64
    }

    /// Runs inference from `x` (and `y` in training mode) per `config`.
    pub fn infer(
        &self,
        x: &Array1<f64>,
        y: Option<&Array1<f64>>,
        config: &InferenceConfig,
    ) -> Result<Inferred<PcnState>> {
        let clamp = self.check_data(x, y)?;
        config.validate(clamp)?;
        if config.solver == Solver::ExactBackwardSubstitution {
            let activations = forward_layers(&self.weights, self.activation, self.convention, x);
            return Ok(Inferred {
                state: PcnState { activations, clamp },
                steps: 0,
                converged: true,
                madds: self.weight_count() as u64,
            });
        }
        let state = self.init_state(x, y, config.init)?;
        self.relax(state, config)
    }

    /// Gradient descent on `E_N` starting from `state`.
    pub fn relax(&self, mut state: PcnState, config: &InferenceConfig) -> Result<Inferred<PcnState>> {
        config.validate(state.clamp)?;
        let per_eval = self.gradient_madds();
        let mut madds = 0;
        for step in 0..config.max_steps {
            let errs = self.layer_errors(&state)?;
            let grads = self.gradients_from_errors(&state, &errs);
            madds += per_eval;
            let norm = max_abs(grads.iter().flat_map(|g| g.iter()));
            if !norm.is_finite() {
                return Err(PcError::Diverged { step });
            }
            if norm <= config.stop_tolerance {
                return Ok(Inferred { state, steps: step, converged: true, madds });
            }
            for (a, g) in state.activations.iter_mut().zip(&grads) {
                a.scaled_add(-config.step_size, g);
            }
            if state.activations.iter().any(|a| a.iter().any(|v| !v.is_finite())) {
                return Err(PcError::Diverged { step: step + 1 });
            }
        }
        Ok(Inferred { state, steps: config.max_steps, converged: false, madds })
    }

    /// `w ← w − η·grad` for externally reduced gradients.
    pub fn apply_weight_gradients(&self, grads: &[Array2<f64>], learning_rate: f64) -> Result<PcnModel> {
        check_layer_weights(&self.spec, grads)?;
        let mut next = self.clone();
        for (w, g) in next.weights.iter_mut().zip(grads) {
            w.scaled_add(-learning_rate, g);
        }
        Ok(next)
    }

    /// One gradient step on the weights at the activations of `state`.
    pub fn learn_step(&self, state: &PcnState, learning_rate: f64) -> Result<PcnModel> {
        let grads = self.weight_gradients(state)?;
        self.apply_weight_gradients(&grads, learning_rate)
    }
}
