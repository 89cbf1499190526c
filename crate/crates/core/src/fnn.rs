//! Feedforward network: the layerwise forward pass.

use ndarray::{Array1, Array2};

use crate::activation::{ActivationKind, PredictionConvention};
use crate::error::{expect_len, PcError, Result};
use crate::layers::LayerSpec;

/// Checks that `weights[ℓ]` has shape `n_{ℓ+1} × n_ℓ` for every `ℓ < L`.
pub(crate) fn check_layer_weights(spec: &LayerSpec, weights: &[Array2<f64>]) -> Result<()> {
    if weights.len() != spec.depth() {
        return Err(PcError::Dimension(format!(
            "expected {} weight matrices, got {}",
            spec.depth(),
            weights.len()
        )));
    }
    for (l, w) in weights.iter().enumerate() {
        let want = (spec.width(l + 1), spec.width(l));
        if w.dim() != want {
            return Err(PcError::Dimension(format!(
                "weight {l} has shape {:?}, expected {:?}",
                w.dim(),
                want
            )));
        }
    }
    Ok(())
}

/// Forward recursion shared by [`FnnModel::forward`] and the exact PCN solver.
pub(crate) fn forward_layers(
    weights: &[Array2<f64>],
    activation: ActivationKind,
    convention: PredictionConvention,
    x: &Array1<f64>,
) -> Vec<Array1<f64>> {
    let mut out = Vec::with_capacity(weights.len() + 1);
    out.push(x.clone());
    for w in weights {
        let prev = out.last().expect("input layer present");
        let (mu, _) = convention.predict(activation, w.view(), prev.view());
        out.push(mu);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnnModel {
    spec: LayerSpec,
    weights: Vec<Array2<f64>>,
    activation: ActivationKind,
    convention: PredictionConvention,
}

impl FnnModel {
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

    /// All `L+1` layer activations, `a^0 = x`.
    pub fn forward(&self, x: &Array1<f64>) -> Result<Vec<Array1<f64>>> {
        expect_len("input", x.len(), self.spec.input_width())?;
        Ok(forward_layers(&self.weights, self.activation, self.convention, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(sizes: &[usize], act: ActivationKind, conv: PredictionConvention, seed: u64) -> FnnModel {
        let spec = LayerSpec::new(sizes.to_vec()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..spec.depth())
            .map(|l| Array2::from_shape_fn((sizes[l + 1], sizes[l]), |_| rng.random_range(-1.0..1.0)))
            .collect();
        FnnModel::new(spec, weights, act, conv).unwrap()
    }

    // Per-neuron loop written independently of the vectorized path.
    fn naive_forward(m: &FnnModel, x: &[f64]) -> Vec<Vec<f64>> {
        let f = |v: f64| m.activation().apply(v);
        let mut layers = vec![x.to_vec()];
        for w in m.weights() {
            let prev = layers.last().unwrap().clone();
            let mut next = Vec::new();
            for i in 0..w.nrows() {
                let mut s = 0.0;
                for j in 0..w.ncols() {
                    s += match m.convention() {
                        PredictionConvention::MatrixActivation => w[[i, j]] * prev[j],
                        PredictionConvention::ActivationMatrix => w[[i, j]] * f(prev[j]),
                    };
                }
                next.push(match m.convention() {
                    PredictionConvention::MatrixActivation => f(s),
                    PredictionConvention::ActivationMatrix => s,
                });
            }
            layers.push(next);
        }
        layers
    }

    #[test]
    fn zero_weights_give_zero_layers() {
        let spec = LayerSpec::new(vec![3, 4, 2]).unwrap();
        let weights = vec![Array2::zeros((4, 3)), Array2::zeros((2, 4))];
        let m = FnnModel::new(spec, weights, ActivationKind::Identity, PredictionConvention::MatrixActivation)
            .unwrap();
        let out = m.forward(&array![1.0, -2.0, 0.5]).unwrap();
        assert!(out[1].iter().chain(out[2].iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_linear_map() {
        let spec = LayerSpec::new(vec![1, 1]).unwrap();
        let m = FnnModel::new(
            spec,
            vec![array![[2.0]]],
            ActivationKind::Identity,
            PredictionConvention::MatrixActivation,
        )
        .unwrap();
        assert_eq!(m.forward(&array![3.0]).unwrap()[1], array![6.0]);
    }

    #[test]
    fn matches_per_neuron_loop() {
        for conv in PredictionConvention::ALL {
            let m = random_model(&[2, 2, 1], ActivationKind::Tanh, conv, 11);
            let x = array![0.3, -0.8];
            let fast = m.forward(&x).unwrap();
            let slow = naive_forward(&m, x.as_slice().unwrap());
            for (a, b) in fast.iter().zip(&slow) {
                for (u, v) in a.iter().zip(b) {
                    assert!((u - v).abs() <= 1e-15, "{u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn forward_composes_over_split_depth() {
        let m = random_model(&[3, 5, 4, 2], ActivationKind::Tanh, PredictionConvention::MatrixActivation, 5);
        let x = array![0.1, 0.2, -0.4];
        let full = m.forward(&x).unwrap();
        let head = FnnModel::new(
            LayerSpec::new(vec![3, 5]).unwrap(),
            m.weights()[..1].to_vec(),
            m.activation(),
            m.convention(),
        )
        .unwrap();
        let tail = FnnModel::new(
            LayerSpec::new(vec![5, 4, 2]).unwrap(),
            m.weights()[1..].to_vec(),
            m.activation(),
            m.convention(),
        )
        .unwrap();
        let mid = head.forward(&x).unwrap().pop().unwrap();
        let out = tail.forward(&mid).unwrap();
        for (a, b) in full[3].iter().zip(out[2].iter()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let m = random_model(&[4, 6, 3], ActivationKind::Sigmoid, PredictionConvention::ActivationMatrix, 3);
        let x = array![0.5, -0.5, 1.0, 2.0];
        assert_eq!(m.forward(&x).unwrap(), m.forward(&x).unwrap());
    }

    #[test]
    fn rejects_bad_shapes() {
        let spec = LayerSpec::new(vec![2, 3]).unwrap();
        assert!(matches!(
            FnnModel::new(spec.clone(), vec![Array2::zeros((2, 3))], ActivationKind::Tanh, PredictionConvention::MatrixActivation),
            Err(PcError::Dimension(_))
        ));
        let m = FnnModel::new(spec, vec![Array2::zeros((3, 2))], ActivationKind::Tanh, PredictionConvention::MatrixActivation)
            .unwrap();
        assert!(matches!(m.forward(&array![1.0]), Err(PcError::Dimension(_))));
    }
}
