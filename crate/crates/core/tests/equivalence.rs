//! Layered network ⇔ feedforward pass, and layered network ⇔ graph embedding.

mod common;

use common::*;
use ndarray::Array1;
use pcgraph::pcg::{embed_layers, feedforward_init, hierarchical_embed};
use pcgraph::{
    ActivationKind, Backend, Clamp, InferenceConfig, InitMode, PcgState, PredictionConvention,
};
use rand::Rng;

fn max_gap(a: &[Array1<f64>], b: &[Array1<f64>]) -> f64 {
    a.iter().zip(b).flat_map(|(u, v)| u.iter().zip(v.iter()).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}

#[test]
fn exact_inference_equals_forward_pass_bitwise() {
    let mut rng = rng(1);
    for k in 0..60 {
        let conv = PredictionConvention::ALL[k % 2];
        let act = [ActivationKind::Tanh, ActivationKind::Sigmoid][(k / 2) % 2];
        let sizes = random_sizes(&mut rng, 4, 16);
        let m = random_pcn(&mut rng, &sizes, act, conv, 1.0);
        let x = random_vec(&mut rng, sizes[0]);
        let exact = m.infer(&x, None, &InferenceConfig::exact()).unwrap();
        assert_eq!(exact.state.activations, m.to_fnn().forward(&x).unwrap());
        assert_eq!(m.energy(&exact.state).unwrap(), 0.0);
    }
}

#[test]
fn gradient_descent_converges_to_forward_pass() {
    let mut rng = rng(2);
    let cfg = InferenceConfig::gradient_descent(2000, 0.05).with_init(InitMode::Zero);
    for k in 0..24 {
        let conv = PredictionConvention::ALL[k % 2];
        let sizes = random_sizes(&mut rng, 4, 16);
        let m = random_pcn(&mut rng, &sizes, ActivationKind::Tanh, conv, CONVERGENT_GAIN);
        let x = random_vec(&mut rng, sizes[0]);
        let out = m.infer(&x, None, &cfg).unwrap();
        let reference = m.to_fnn().forward(&x).unwrap();
        let gap = max_gap(&out.state.activations, &reference);
        let energy = m.energy(&out.state).unwrap();
        assert!(gap < 1e-4 && energy < 1e-8, "{sizes:?} {conv:?}: gap {gap:e} energy {energy:e} steps {}", out.steps);
    }
}

#[test]
fn embedded_energy_differs_by_input_constant() {
    let mut rng = rng(3);
    for k in 0..120 {
        let conv = PredictionConvention::ALL[k % 2];
        let act = ActivationKind::ALL[k % 4];
        let sizes = random_sizes(&mut rng, 4, 8);
        let pcn = random_pcn(&mut rng, &sizes, act, conv, 1.0);
        let pcg = hierarchical_embed(&pcn);
        let clamp = if rng.random_bool(0.5) { Clamp::Training } else { Clamp::Testing };
        let state = random_pcn_state(&mut rng, pcn.spec(), clamp);
        let flat = PcgState::from_pcn(pcn.spec(), &state).unwrap();
        let x = &state.activations[0];
        let constant = 0.5
            * match conv {
                PredictionConvention::MatrixActivation => x.iter().map(|v| (v - act.apply(0.0)).powi(2)).sum::<f64>(),
                PredictionConvention::ActivationMatrix => x.dot(x),
            };
        let gap = pcg.energy(&flat).unwrap() - pcn.energy(&state).unwrap() - constant;
        assert!(gap.abs() < 1e-12, "{gap:e}");
    }
}

#[test]
fn embedded_gradients_match_through_index_map() {
    let mut rng = rng(4);
    for k in 0..40 {
        let conv = PredictionConvention::ALL[k % 2];
        let sizes = random_sizes(&mut rng, 4, 8);
        let pcn = random_pcn(&mut rng, &sizes, ActivationKind::Tanh, conv, 1.0);
        let pcg = hierarchical_embed(&pcn);
        let spec = pcn.spec();
        let clamp = [Clamp::Training, Clamp::Testing][k % 2];
        let state = random_pcn_state(&mut rng, spec, clamp);
        let flat = PcgState::from_pcn(spec, &state).unwrap();

        let layered = embed_layers(spec, &pcn.activation_gradients(&state).unwrap()).unwrap();
        for backend in [Backend::Dense, Backend::Sparse] {
            let graph = pcg.evaluate(&flat, backend).unwrap().gradient;
            for (a, b) in layered.iter().zip(graph.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }

        let wg = pcg.weight_gradient(&flat).unwrap();
        for (l, block) in pcn.weight_gradients(&state).unwrap().iter().enumerate() {
            let rows = spec.layer_range(l + 1).start;
            let cols = spec.layer_range(l).start;
            for ((i, j), v) in block.indexed_iter() {
                assert!((wg[[rows + i, cols + j]] - v).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn embedded_dynamics_follow_the_layered_network() {
    let mut rng = rng(5);
    for k in 0..10 {
        let conv = PredictionConvention::ALL[k % 2];
        let sizes = random_sizes(&mut rng, 4, 6);
        let mut pcn = random_pcn(&mut rng, &sizes, ActivationKind::Tanh, conv, 1.0);
        let mut pcg = hierarchical_embed(&pcn);
        let spec = pcn.spec().clone();
        let x = random_vec(&mut rng, sizes[0]);
        let y = random_vec(&mut rng, *sizes.last().unwrap());
        let mut layered = pcn.init_state(&x, Some(&y), InitMode::Gaussian { std: 0.5, seed: k as u64 }).unwrap();
        let mut flat = PcgState::from_pcn(&spec, &layered).unwrap();
        for _ in 0..20 {
            pcn.descend(&mut layered, 0.1).unwrap();
            pcg.descend(&mut flat, 0.1, Backend::Dense).unwrap();
            let mapped = embed_layers(&spec, &layered.activations).unwrap();
            for (a, b) in mapped.iter().zip(flat.activations.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
            pcn = pcn.learn_step(&layered, 0.05).unwrap();
            pcg = pcg.learn_step(&flat, 0.05).unwrap();
            for (l, w) in pcn.weights().iter().enumerate() {
                let r0 = spec.layer_range(l + 1).start;
                let c0 = spec.layer_range(l).start;
                for ((i, j), v) in w.indexed_iter() {
                    assert!((pcg.weights()[[r0 + i, c0 + j]] - v).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn graph_inference_reaches_forward_pass() {
    let mut rng = rng(6);
    let cfg = InferenceConfig::gradient_descent(2000, 0.05).with_init(InitMode::Zero);
    for k in 0..6 {
        let conv = PredictionConvention::ALL[k % 2];
        let sizes = random_sizes(&mut rng, 3, 6);
        let pcn = random_pcn(&mut rng, &sizes, ActivationKind::Tanh, conv, CONVERGENT_GAIN);
        let pcg = hierarchical_embed(&pcn);
        let x = random_vec(&mut rng, sizes[0]);
        let out = pcg.infer(&x, None, &cfg).unwrap();
        let reference = embed_layers(pcn.spec(), &pcn.to_fnn().forward(&x).unwrap()).unwrap();
        for (a, b) in out.state.activations.iter().zip(reference.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn feedforward_init_zeroes_hidden_errors() {
    let mut rng = rng(7);
    for conv in PredictionConvention::ALL {
        let sizes = vec![3, 5, 4, 2];
        let pcn = random_pcn(&mut rng, &sizes, ActivationKind::Tanh, conv, 1.0);
        let x = random_vec(&mut rng, 3);
        let y = random_vec(&mut rng, 2);
        let s = pcn.feedforward_init(&x, Some(&y)).unwrap();
        let errs = pcn.layer_errors(&s).unwrap();
        assert!(errs.errors[1..3].iter().all(|e| e.iter().all(|&v| v == 0.0)));
        let mu = pcn.to_fnn().forward(&x).unwrap().pop().unwrap();
        let expected = 0.5 * (&y - &mu).dot(&(&y - &mu));
        assert!((pcn.energy(&s).unwrap() - expected).abs() < 1e-12);
        let exact_fit = pcn.feedforward_init(&x, Some(&mu)).unwrap();
        assert_eq!(pcn.energy(&exact_fit).unwrap(), 0.0);
    }
}

#[test]
fn skip_connection_feedforward_init_has_zero_hidden_errors() {
    use pcgraph::ConnectionKind;
    let mut rng = rng(8);
    let spec = pcgraph::LayerSpec::new(vec![2, 4, 3, 2]).unwrap();
    for conv in PredictionConvention::ALL {
        let g = random_graph(&mut rng, &spec, &[ConnectionKind::Forward, ConnectionKind::ForwardSkip], ActivationKind::Tanh, conv);
        let x = random_vec(&mut rng, 2);
        let y = random_vec(&mut rng, 2);
        let s = feedforward_init(&g, &spec, &x, Some(&y)).unwrap();
        let eval = g.evaluate(&s, Backend::Dense).unwrap();
        for i in g.free_nodes(Clamp::Training) {
            assert_eq!(eval.errors[i], 0.0);
        }
        let testing = feedforward_init(&g, &spec, &x, None).unwrap();
        let eval = g.evaluate(&testing, Backend::Dense).unwrap();
        assert!(eval.gradient.iter().all(|&v| v == 0.0));
    }
}
