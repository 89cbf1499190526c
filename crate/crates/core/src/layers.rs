//! Layer partition of a node set.
//!
//! A [`LayerSpec`] with widths `n_0..n_L` splits `N = Σ n_ℓ` nodes into
//! consecutive index blocks `I_ℓ = {s_{ℓ-1}+1, .., s_ℓ}` where `s_ℓ` is the
//! prefix sum of widths and `s_{-1} = 0`. External indices (`α`, `i`) are
//! 1-based; layer numbers are 0-based.

use std::ops::Range;

use crate::error::{PcError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    sizes: Vec<usize>,
}

impl LayerSpec {
    /// Requires at least two layers (`L ≥ 1`) and every width ≥ 1.
    pub fn new(sizes: impl Into<Vec<usize>>) -> Result<Self> {
        let sizes = sizes.into();
        if sizes.len() < 2 {
            return Err(PcError::InvalidSpec(format!(
                "need at least an input and an output layer, got {} layer(s)",
                sizes.len()
            )));
        }
        if let Some(pos) = sizes.iter().position(|&n| n == 0) {
            return Err(PcError::InvalidSpec(format!("layer {pos} has width 0")));
        }
        Ok(Self { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of weight layers `L`.
    pub fn depth(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn width(&self, layer: usize) -> usize {
        self.sizes[layer]
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_width(&self) -> usize {
        self.sizes[self.depth()]
    }

    /// Total node count `N`.
    pub fn node_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Prefix sums `[s_{-1}, s_0, .., s_L]`, so `offsets()[ℓ]` is `s_{ℓ-1}`.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.sizes.len() + 1);
        let mut acc = 0;
        out.push(acc);
        for &n in &self.sizes {
            acc += n;
            out.push(acc);
        }
        out
    }

    /// 0-based flat index range occupied by `layer`.
    pub fn layer_range(&self, layer: usize) -> Range<usize> {
        let start: usize = self.sizes[..layer].iter().sum();
        start..start + self.sizes[layer]
    }

    /// Layer containing the 0-based flat index `idx`.
    pub fn layer_of(&self, idx: usize) -> usize {
        let mut end = 0;
        for (layer, &n) in self.sizes.iter().enumerate() {
            end += n;
            if idx < end {
                return layer;
            }
        }
        panic!("flat index {idx} outside of {} nodes", end)
    }

    /// Maps a 1-based node index `α` to `(ℓ, i)` with `i` 1-based within the layer.
    pub fn flat_to_layer(&self, alpha: usize) -> Result<(usize, usize)> {
        let n = self.node_count();
        if alpha == 0 || alpha > n {
            return Err(PcError::Domain(format!("node index {alpha} not in 1..={n}")));
        }
        let layer = self.layer_of(alpha - 1);
        let start = self.layer_range(layer).start;
        Ok((layer, alpha - start))
    }

    /// Inverse of [`flat_to_layer`](Self::flat_to_layer).
    pub fn layer_to_flat(&self, layer: usize, i: usize) -> Result<usize> {
        if layer > self.depth() {
            return Err(PcError::Domain(format!("layer {layer} not in 0..={}", self.depth())));
        }
        if i == 0 || i > self.sizes[layer] {
            return Err(PcError::Domain(format!(
                "unit {i} not in 1..={} for layer {layer}",
                self.sizes[layer]
            )));
        }
        Ok(self.layer_range(layer).start + i)
    }
}
