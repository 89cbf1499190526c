//! Minibatch inference learning with deterministic parallel reduction.

use std::time::Instant;

use ndarray::Array2;
use pcgraph::{InferenceConfig, PcError, PcgModel};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::dataset::{load_csv, Dataset};
use crate::error::{HarnessError, Result};
use crate::metrics::{write_csv, MetricsRow};
use crate::model::{evaluate, init_mode, initialize, Predictor};

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PcgModel,
    pub checkpoint: Checkpoint,
    pub metrics: Vec<MetricsRow>,
}

struct SampleResult {
    gradient: Array2<f64>,
    energy: f64,
    madds: u64,
}

/// Seed for a per-sample Gaussian init, independent of worker scheduling.
fn sample_seed(seed: u64, epoch: usize, index: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// Loads the dataset named in `config` and trains; see [`train_on`].
pub fn train(config: &RunConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let data = load_csv(&config.training.dataset)?;
    train_on(config, &data)
}

/// Runs the configured epochs on `data`, then writes the checkpoint and
/// metrics files named in the output section.
pub fn train_on(config: &RunConfig, data: &Dataset) -> Result<TrainOutcome> {
    config.validate()?;
    let spec = config.spec()?;
    let kinds = config.kinds()?;
    let seed = config.seed()?;
    if data.input_width != spec.input_width() || data.output_width != spec.output_width() {
        return Err(HarnessError::Schema(format!(
            "dataset has {} inputs and {} outputs, model has {} and {}",
            data.input_width,
            data.output_width,
            spec.input_width(),
            spec.output_width()
        )));
    }
    let (train_set, test_set) = data.split(config.training.test_fraction, seed);
    if train_set.is_empty() {
        return Err(HarnessError::Schema("training split is empty".into()));
    }
    let test_set = if test_set.is_empty() { &train_set } else { &test_set };

    let mut model =
        initialize(&spec, &kinds, config.activation()?, config.convention()?, config.model.init_scale, seed)?;
    let descent = config.inference_config()?;
    let choice = config.init_choice()?;
    let predictor = Predictor { solver: config.eval_solver()?, init: choice, descent, seed };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.training.workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle_rng.set_stream(3);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let eta = config.training.learning_rate;
    let mut metrics = Vec::with_capacity(config.training.epochs);

    for epoch in 1..=config.training.epochs {
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut energy_sum = 0.0;
        let mut madds = 0u64;
        for (batch, indices) in order.chunks(config.training.batch_size).enumerate() {
            let current = &model;
            let results: Vec<Result<SampleResult>> = pool.install(|| {
                indices
                    .par_iter()
                    .map(|&i| {
                        let sample = &train_set.samples[i];
                        let cfg = InferenceConfig {
                            init: init_mode(current, choice, sample_seed(seed, epoch, i)),
                            ..descent
                        };
                        let run = || -> pcgraph::Result<SampleResult> {
                            let out = current.infer(&sample.x, Some(&sample.y), &cfg)?;
                            Ok(SampleResult {
                                energy: current.energy_with(&out.state, cfg.backend)?,
                                gradient: current.weight_gradient_with(&out.state, cfg.backend)?,
                                madds: out.madds,
                            })
                        };
                        run().map_err(|e| match e {
                            PcError::Diverged { step } => HarnessError::Diverged { epoch, batch, step },
                            other => other.into(),
                        })
                    })
                    .collect()
            });
            // Fixed-order reduction keeps results independent of the worker count.
            let n = spec.node_count();
            let mut total = Array2::<f64>::zeros((n, n));
            for r in results {
                let r = r?;
                total += &r.gradient;
                energy_sum += r.energy;
                madds += r.madds;
            }
            total /= indices.len() as f64;
            model = model.apply_weight_gradient(&total, eta)?;
            if model.weights().iter().any(|w| !w.is_finite()) {
                return Err(HarnessError::Diverged { epoch, batch, step: 0 });
            }
        }
        let train_acc = evaluate(&model, &train_set, &predictor)?.accuracy;
        let test_acc = evaluate(&model, test_set, &predictor)?.accuracy;
        let seconds = if config.output.record_time { started.elapsed().as_secs_f64() } else { 0.0 };
        metrics.push(MetricsRow {
            epoch,
            energy: energy_sum / train_set.len() as f64,
            train_acc,
            test_acc,
            seconds,
            madds,
        });
    }

    let checkpoint = Checkpoint::capture(&model, &spec, &kinds, config.training.epochs as u64, seed)?;
    if let Some(path) = &config.output.checkpoint {
        checkpoint.save(path)?;
    }
    if let Some(path) = &config.output.metrics {
        write_csv(path, &metrics)?;
    }
    Ok(TrainOutcome { model, checkpoint, metrics })
}
