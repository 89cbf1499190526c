//! Training, evaluation and checkpoint behaviour through the library API.

use pcgraph::topology::parse_kinds;
use pcgraph::{ActivationKind, InferenceConfig, LayerSpec, PredictionConvention};
use pcgraph_harness::{train_on, Checkpoint, RunConfig};
use pcgraph_harness::config::{EvalSolver, InitChoice};
use pcgraph_harness::dataset::{two_moons, xor};
use pcgraph_harness::model::{evaluate, initialize, Predictor};

const XOR_CONFIG: &str = include_str!("../configs/xor.toml");

fn xor_config(extra: &[&str]) -> RunConfig {
    let overrides: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    let mut cfg = RunConfig::from_toml(XOR_CONFIG, &overrides).unwrap();
    cfg.output.checkpoint = None;
    cfg.output.metrics = None;
    cfg
}

fn predictor(solver: EvalSolver) -> Predictor {
    Predictor {
        solver,
        init: InitChoice::Zero,
        descent: InferenceConfig::gradient_descent(5000, 0.1).with_tolerance(1e-12),
        seed: 0,
    }
}

#[test]
fn trained_xor_checkpoint_classifies_all_points() {
    let out = train_on(&xor_config(&[]), &xor()).unwrap();
    let model = Checkpoint::from_bytes(&out.checkpoint.to_bytes()).unwrap().model().unwrap();
    let report = evaluate(&model, &xor(), &predictor(EvalSolver::Auto)).unwrap();
    assert_eq!(report.accuracy, 1.0);
    assert!(report.mean_error < 0.1, "{}", report.mean_error);
}

#[test]
fn exact_and_iterative_evaluation_agree_on_layered_models() {
    let out = train_on(&xor_config(&["training.epochs=200"]), &xor()).unwrap();
    let exact = evaluate(&out.model, &xor(), &predictor(EvalSolver::Exact)).unwrap();
    let iterative = evaluate(&out.model, &xor(), &predictor(EvalSolver::GradientDescent)).unwrap();
    assert_eq!(exact.accuracy, iterative.accuracy);
    for (a, b) in exact.outputs.iter().zip(&iterative.outputs) {
        for (p, q) in a.iter().zip(b.iter()) {
            assert!((p - q).abs() < 1e-4, "{p} vs {q}");
        }
    }
}

#[test]
fn untrained_models_are_near_chance() {
    let data = two_moons(200, 0.1, 5);
    let spec = LayerSpec::new(vec![2, 8, 8, 2]).unwrap();
    let kinds = parse_kinds("forward").unwrap();
    let mut accs = Vec::new();
    for seed in 0..20 {
        let m = initialize(&spec, &kinds, ActivationKind::Tanh, PredictionConvention::MatrixActivation, 1.0, seed)
            .unwrap();
        accs.push(evaluate(&m, &data, &predictor(EvalSolver::Auto)).unwrap().accuracy);
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!((0.3..=0.7).contains(&mean), "mean accuracy {mean} over {accs:?}");
}

#[test]
fn recurrent_masks_train_and_evaluate() {
    let cfg = xor_config(&[
        "model.connections=\"forward,lateral,backward\"",
        "training.epochs=20",
        "inference.steps=30",
        "inference.step_size=0.05",
    ]);
    let out = train_on(&cfg, &xor()).unwrap();
    assert_eq!(out.metrics.len(), 20);
    let report = evaluate(&out.model, &xor(), &predictor(EvalSolver::Auto)).unwrap();
    assert!((0.0..=1.0).contains(&report.accuracy));
    assert!(evaluate(&out.model, &xor(), &predictor(EvalSolver::Exact)).is_err());
}

#[test]
fn zero_learning_rate_checkpoint_matches_initialization() {
    let cfg = xor_config(&["training.learning_rate=0.0", "training.epochs=5"]);
    let out = train_on(&cfg, &xor()).unwrap();
    let init = initialize(&cfg.spec().unwrap(), &cfg.kinds().unwrap(), ActivationKind::Tanh, PredictionConvention::MatrixActivation, 1.0, 2)
        .unwrap();
    let reference = Checkpoint::capture(&init, &cfg.spec().unwrap(), &cfg.kinds().unwrap(), 5, 2).unwrap();
    assert_eq!(out.checkpoint.to_bytes(), reference.to_bytes());
}

#[test]
fn checkpoint_file_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = train_on(&xor_config(&["training.epochs=10"]), &xor()).unwrap();
    let first = dir.path().join("a.pcg");
    let second = dir.path().join("b.pcg");
    out.checkpoint.save(&first).unwrap();
    Checkpoint::load(&first).unwrap().save(&second).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(out.checkpoint.weights.len(), out.model.nonzeros());
}
