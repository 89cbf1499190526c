#![allow(dead_code)]

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};
use pcgraph::{
    ActivationKind, Clamp, ConnectionKind, LayerSpec, Mask, PcgModel, PcgState, PcnModel, PcnState,
    PredictionConvention,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gain under which zero-initialized descent reliably settles within the
/// step budgets used in these tests.
pub const CONVERGENT_GAIN: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sizes(rng: &mut ChaCha8Rng, max_depth: usize, max_width: usize) -> Vec<usize> {
    let depth = rng.random_range(2..=max_depth);
    (0..=depth).map(|_| rng.random_range(1..=max_width)).collect()
}

/// Uniform weights with variance `gain² / max(fan_in, fan_out)`.
pub fn random_pcn(
    rng: &mut ChaCha8Rng,
    sizes: &[usize],
    act: ActivationKind,
    conv: PredictionConvention,
    gain: f64,
) -> PcnModel {
    let spec = LayerSpec::new(sizes.to_vec()).unwrap();
    let weights = (0..spec.depth())
        .map(|l| {
            let bound = gain * (3.0 / sizes[l].max(sizes[l + 1]) as f64).sqrt();
            Array2::from_shape_fn((sizes[l + 1], sizes[l]), |_| rng.random_range(-bound..bound))
        })
        .collect();
    PcnModel::new(spec, weights, act, conv).unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0))
}

pub fn random_pcn_state(rng: &mut ChaCha8Rng, spec: &LayerSpec, clamp: Clamp) -> PcnState {
    PcnState { activations: spec.sizes().iter().map(|&n| random_vec(rng, n)).collect(), clamp }
}

pub fn random_graph(
    rng: &mut ChaCha8Rng,
    spec: &LayerSpec,
    kinds: &[ConnectionKind],
    act: ActivationKind,
    conv: PredictionConvention,
) -> PcgModel {
    let mask = Mask::build(spec, &kinds.iter().copied().collect::<BTreeSet<_>>());
    let n = spec.node_count();
    let mut w = Array2::from_shape_fn((n, n), |_| rng.random_range(-0.6..0.6));
    mask.apply(&mut w);
    PcgModel::new(w, mask, act, conv, spec.input_width(), spec.output_width())
        .unwrap()
        .with_partition(spec.clone())
        .unwrap()
}

pub fn random_graph_state(rng: &mut ChaCha8Rng, n: usize, clamp: Clamp) -> PcgState {
    PcgState { activations: random_vec(rng, n), clamp }
}

/// Central differences of `f` around `x`, one coordinate at a time.
pub fn central_differences(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or the absolute gap when both are ~0.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}
