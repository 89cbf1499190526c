//! Model construction, testing-mode prediction and evaluation.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};
use pcgraph::pcg::extract_pcn;
use pcgraph::{
    ActivationKind, Clamp, ConnectionKind, InferenceConfig, InitMode, LayerSpec, Mask, PcgModel,
    PredictionConvention,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{EvalSolver, InitChoice};
use crate::dataset::Dataset;
use crate::error::{HarnessError, Result};

/// Gaussian weights on unmasked entries, std `scale / sqrt(fan_in)` where
/// fan-in counts the unmasked entries of each row.
pub fn initialize(
    spec: &LayerSpec,
    kinds: &BTreeSet<ConnectionKind>,
    activation: ActivationKind,
    convention: PredictionConvention,
    scale: f64,
    seed: u64,
) -> Result<PcgModel> {
    let mask = Mask::build(spec, kinds);
    let n = spec.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Array2::zeros((n, n));
    for r in 0..n {
        let fan_in = (0..n).filter(|&c| mask.get(r, c)).count();
        if fan_in == 0 {
            continue;
        }
        let normal = Normal::new(0.0, scale / (fan_in as f64).sqrt())
            .map_err(|e| HarnessError::Config(format!("weight init: {e}")))?;
        for c in 0..n {
            if mask.get(r, c) {
                w[[r, c]] = normal.sample(&mut rng);
            }
        }
    }
    let model = PcgModel::new(w, mask, activation, convention, spec.input_width(), spec.output_width())?
        .with_partition(spec.clone())?;
    Ok(model)
}

pub fn is_hierarchical(model: &PcgModel, spec: &LayerSpec) -> bool {
    *model.mask() == Mask::hierarchical(spec)
}

fn is_feedforward(model: &PcgModel) -> bool {
    model.partition().is_some_and(|spec| model.mask().is_feedforward(spec))
}

/// Resolves an init choice against a concrete model. Feedforward init falls
/// back to zero init on masks with non-forward connections; Gaussian init
/// draws from `seed`.
pub fn init_mode(model: &PcgModel, choice: InitChoice, seed: u64) -> InitMode {
    match choice {
        InitChoice::FeedForward if is_feedforward(model) => InitMode::FeedForward,
        InitChoice::FeedForward | InitChoice::Zero => InitMode::Zero,
        InitChoice::Gaussian { std } => InitMode::Gaussian { std, seed },
    }
}

/// Settings for testing-mode prediction.
#[derive(Debug, Clone, Copy)]
pub struct Predictor {
    pub solver: EvalSolver,
    pub init: InitChoice,
    /// Descent settings; `init` and `solver` fields are overridden.
    pub descent: InferenceConfig,
    pub seed: u64,
}

impl Predictor {
    /// Output nodes after testing-mode inference, plus multiply-adds spent.
    pub fn predict(&self, model: &PcgModel, x: &Array1<f64>) -> Result<(Array1<f64>, u64)> {
        let spec = model.partition().ok_or_else(|| HarnessError::Config("model has no layer partition".into()))?;
        let exact = match self.solver {
            EvalSolver::Auto => is_hierarchical(model, spec),
            EvalSolver::Exact => true,
            EvalSolver::GradientDescent => false,
        };
        if exact {
            if is_hierarchical(model, spec) {
                let pcn = extract_pcn(model, spec)?;
                let mut out = pcn.infer(x, None, &InferenceConfig::exact())?;
                let madds = out.madds;
                return Ok((out.state.activations.pop().expect("nonempty"), madds));
            }
            let out = model.infer(x, None, &InferenceConfig::exact())?;
            return Ok((model.output(&out.state), out.madds));
        }
        let cfg = InferenceConfig { init: init_mode(model, self.init, self.seed), ..self.descent };
        let out = model.infer(x, None, &cfg)?;
        debug_assert_eq!(out.state.clamp, Clamp::Testing);
        Ok((model.output(&out.state), out.madds))
    }
}

/// Class decision: argmax for multi-output models, 0.5 threshold for one output.
pub fn classify(v: &Array1<f64>) -> usize {
    if v.len() == 1 {
        usize::from(v[0] > 0.5)
    } else {
        v.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
            .0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Mean of `½‖output − label‖²`.
    pub mean_error: f64,
    pub outputs: Vec<Array1<f64>>,
    pub madds: u64,
}

pub fn evaluate(model: &PcgModel, data: &Dataset, predictor: &Predictor) -> Result<EvalReport> {
    if data.input_width != model.input_width() || data.output_width != model.output_width() {
        return Err(HarnessError::Schema(format!(
            "dataset has {} inputs and {} outputs, model expects {} and {}",
            data.input_width,
            data.output_width,
            model.input_width(),
            model.output_width()
        )));
    }
    if data.is_empty() {
        return Err(HarnessError::Schema("dataset is empty".into()));
    }
    let mut correct = 0usize;
    let mut error = 0.0;
    let mut madds = 0;
    let mut outputs = Vec::with_capacity(data.len());
    for s in &data.samples {
        let (out, spent) = predictor.predict(model, &s.x)?;
        madds += spent;
        correct += usize::from(classify(&out) == classify(&s.y));
        let diff = &out - &s.y;
        error += 0.5 * diff.dot(&diff);
        outputs.push(out);
    }
    Ok(EvalReport { accuracy: correct as f64 / data.len() as f64, mean_error: error / data.len() as f64, outputs, madds })
}
