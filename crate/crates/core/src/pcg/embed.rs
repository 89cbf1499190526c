//! Mapping between layered networks and flat graphs.

use ndarray::{s, Array1, Array2};

use super::{PcgModel, PcgState};
use crate::error::{expect_len, PcError, Result};
use crate::activation::PredictionConvention;
use crate::layers::LayerSpec;
use crate::linalg::matvec;
use crate::pcn::{PcnModel, PcnState};
use crate::topology::Mask;

/// Places `w^{ℓ-1}` on block `(ℓ, ℓ−1)` of an `N × N` matrix; all other
/// blocks are zero and masked.
pub fn hierarchical_embed(pcn: &PcnModel) -> PcgModel {
    let spec = pcn.spec();
    let n = spec.node_count();
    let mut weights = Array2::zeros((n, n));
    for (l, w) in pcn.weights().iter().enumerate() {
        let rows = spec.layer_range(l + 1);
        let cols = spec.layer_range(l);
        weights.slice_mut(s![rows, cols]).assign(w);
    }
    PcgModel::new(
        weights,
        Mask::hierarchical(spec),
        pcn.activation(),
        pcn.convention(),
        spec.input_width(),
        spec.output_width(),
    )
    .and_then(|g| g.with_partition(spec.clone()))
    .expect("hierarchical embedding is well formed")
}

/// Inverse of [`hierarchical_embed`]. The graph's mask must be exactly the
/// forward-only mask of `spec`.
pub fn extract_pcn(pcg: &PcgModel, spec: &LayerSpec) -> Result<PcnModel> {
    if spec.node_count() != pcg.node_count() {
        return Err(PcError::Structure(format!(
            "partition covers {} nodes, graph has {}",
            spec.node_count(),
            pcg.node_count()
        )));
    }
    if pcg.mask() != &Mask::hierarchical(spec) {
        return Err(PcError::Structure("mask is not the forward-only mask of the partition".into()));
    }
    let weights = (0..spec.depth())
        .map(|l| pcg.weights().slice(s![spec.layer_range(l + 1), spec.layer_range(l)]).to_owned())
        .collect();
    PcnModel::new(spec.clone(), weights, pcg.activation(), pcg.convention())
}

/// Concatenates per-layer vectors into the flat node order.
pub fn embed_layers(spec: &LayerSpec, layers: &[Array1<f64>]) -> Result<Array1<f64>> {
    expect_len("layer count", layers.len(), spec.depth() + 1)?;
    let mut flat = Array1::zeros(spec.node_count());
    for (l, v) in layers.iter().enumerate() {
        expect_len(&format!("layer {l}"), v.len(), spec.width(l))?;
        flat.slice_mut(s![spec.layer_range(l)]).assign(v);
    }
    Ok(flat)
}

/// Splits a flat node vector into per-layer vectors.
pub fn extract_layers(spec: &LayerSpec, flat: &Array1<f64>) -> Result<Vec<Array1<f64>>> {
    expect_len("flat vector", flat.len(), spec.node_count())?;
    Ok((0..=spec.depth()).map(|l| flat.slice(s![spec.layer_range(l)]).to_owned()).collect())
}

impl PcgState {
    pub fn from_pcn(spec: &LayerSpec, state: &PcnState) -> Result<Self> {
        Ok(Self { activations: embed_layers(spec, &state.activations)?, clamp: state.clamp })
    }

    pub fn to_pcn(&self, spec: &LayerSpec) -> Result<PcnState> {
        Ok(PcnState { activations: extract_layers(spec, &self.activations)?, clamp: self.clamp })
    }
}

/// Sets nodes layer by layer to their predictions from lower layers. Applies
/// only when every unmasked weight points from a lower layer of `spec` to a
/// strictly higher one. In training mode the output layer is set to `y`.
pub fn feedforward_init(
    model: &PcgModel,
    spec: &LayerSpec,
    x: &Array1<f64>,
    y: Option<&Array1<f64>>,
) -> Result<PcgState> {
    if spec.node_count() != model.node_count()
        || spec.input_width() != model.input_width()
        || spec.output_width() != model.output_width()
    {
        return Err(PcError::InitNotApplicable(format!(
            "partition {:?} does not match the graph",
            spec.sizes()
        )));
    }
    if !model.mask().is_feedforward(spec) {
        return Err(PcError::InitNotApplicable(
            "mask has connections that are not strictly forward".into(),
        ));
    }
    let clamp = model.check_data(x, y)?;
    let act = model.activation();
    let w = model.weights();
    let mut a = Array1::zeros(model.node_count());
    a.slice_mut(s![spec.layer_range(0)]).assign(x);
    let last = match y {
        Some(_) => spec.depth() - 1,
        None => spec.depth(),
    };
    for l in 1..=last {
        let rows = spec.layer_range(l);
        // Columns in layers ≥ l are masked, so not-yet-set nodes only meet zero weights.
        let block = w.slice(s![rows.clone(), ..]);
        let mu = match model.convention() {
            PredictionConvention::MatrixActivation => act.map(matvec(block, a.view()).view()),
            PredictionConvention::ActivationMatrix => matvec(block, act.map(a.view()).view()),
        };
        a.slice_mut(s![rows]).assign(&mu);
    }
    if let Some(y) = y {
        a.slice_mut(s![model.output_nodes()]).assign(y);
    }
    Ok(PcgState { activations: a, clamp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::topology::ConnectionKind;
    use ndarray::array;
    use std::collections::BTreeSet;

    fn fig2_pcn() -> PcnModel {
        let spec = LayerSpec::new(vec![2, 3, 3, 2]).unwrap();
        let weights = (0..3)
            .map(|l| {
                Array2::from_shape_fn((spec.width(l + 1), spec.width(l)), |(i, j)| {
                    (l * 100 + i * 10 + j) as f64 + 1.0
                })
            })
            .collect();
        PcnModel::new(spec, weights, ActivationKind::Tanh, PredictionConvention::MatrixActivation).unwrap()
    }

    #[test]
    fn smallest_embedding() {
        let spec = LayerSpec::new(vec![1, 1]).unwrap();
        let pcn = PcnModel::new(spec, vec![array![[4.5]]], ActivationKind::Tanh, PredictionConvention::MatrixActivation)
            .unwrap();
        let g = hierarchical_embed(&pcn);
        assert_eq!(g.weights(), &array![[0.0, 0.0], [4.5, 0.0]]);
    }

    #[test]
    fn fig2_embedding_blocks_and_round_trip() {
        let pcn = fig2_pcn();
        let g = hierarchical_embed(&pcn);
        assert_eq!(g.node_count(), 10);
        assert_eq!(g.mask().count(), 21);
        assert_eq!(g.weights()[[2, 0]], pcn.weights()[0][[0, 0]]);
        assert_eq!(g.weights()[[9, 7]], pcn.weights()[2][[1, 2]]);
        let back = extract_pcn(&g, pcn.spec()).unwrap();
        assert_eq!(back, pcn);
        let shapes: Vec<_> = back.weights().iter().map(|w| w.dim()).collect();
        assert_eq!(shapes, vec![(3, 2), (3, 3), (2, 3)]);
    }

    #[test]
    fn extract_rejects_extra_blocks() {
        let pcn = fig2_pcn();
        let spec = pcn.spec().clone();
        let g = hierarchical_embed(&pcn);
        let mask = Mask::build(&spec, &BTreeSet::from([ConnectionKind::Forward, ConnectionKind::Lateral]));
        let wider = PcgModel::new(g.weights().clone(), mask, g.activation(), g.convention(), 2, 2).unwrap();
        assert!(matches!(extract_pcn(&wider, &spec), Err(PcError::Structure(_))));
    }

    #[test]
    fn feedforward_init_matches_pcn() {
        let pcn = fig2_pcn();
        let g = hierarchical_embed(&pcn);
        let x = array![0.01, -0.02];
        let y = array![1.0, 0.0];
        for label in [None, Some(&y)] {
            let flat = feedforward_init(&g, pcn.spec(), &x, label).unwrap();
            let layered = pcn.feedforward_init(&x, label).unwrap();
            assert_eq!(flat.to_pcn(pcn.spec()).unwrap(), layered);
        }
    }

    #[test]
    fn layer_vectors_round_trip() {
        let spec = LayerSpec::new(vec![2, 3, 1]).unwrap();
        let flat = array![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let layers = extract_layers(&spec, &flat).unwrap();
        assert_eq!(layers[2], array![6.0]);
        assert_eq!(embed_layers(&spec, &layers).unwrap(), flat);
    }
}
