//! Block-structured connectivity masks over a layer partition and the cost
//! model for evaluating them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::PcError;
use crate::layers::LayerSpec;

/// A family of blocks in the partitioned `N × N` weight matrix. Block `(ℓ, k)`
/// holds the weights by which layer `k` predicts layer `ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConnectionKind {
    /// `k = ℓ − 1`
    Forward,
    /// `k < ℓ − 1`
    ForwardSkip,
    /// `k = ℓ + 1`
    Backward,
    /// `k > ℓ + 1`
    BackwardSkip,
    /// `k = ℓ`, off-diagonal entries
    Lateral,
    /// diagonal entries
    SelfLoop,
    /// everything except the diagonal
    AllToAll,
}

impl ConnectionKind {
    pub const ALL: [ConnectionKind; 7] = [
        Self::Forward,
        Self::ForwardSkip,
        Self::Backward,
        Self::BackwardSkip,
        Self::Lateral,
        Self::SelfLoop,
        Self::AllToAll,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Self::Forward => "forward",
            Self::ForwardSkip => "forwardskip",
            Self::Backward => "backward",
            Self::BackwardSkip => "backwardskip",
            Self::Lateral => "lateral",
            Self::SelfLoop => "selfloop",
            Self::AllToAll => "alltoall",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Whether node `(row, col)` in layers `(row_layer, col_layer)` belongs to this kind.
    fn contains(self, row: usize, col: usize, row_layer: usize, col_layer: usize) -> bool {
        match self {
            Self::Forward => col_layer + 1 == row_layer,
            Self::ForwardSkip => col_layer + 1 < row_layer,
            Self::Backward => row_layer + 1 == col_layer,
            Self::BackwardSkip => row_layer + 1 < col_layer,
            Self::Lateral => row_layer == col_layer && row != col,
            Self::SelfLoop => row == col,
            Self::AllToAll => row != col,
        }
    }
}

impl fmt::Display for ConnectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ConnectionKind {
    type Err = PcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == norm)
            .ok_or_else(|| PcError::Config(format!("unknown connection kind '{s}'")))
    }
}

/// Parses a comma-separated list such as `"forward,lateral"`.
pub fn parse_kinds(list: &str) -> Result<BTreeSet<ConnectionKind>, PcError> {
    let kinds = list
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect::<Result<BTreeSet<_>, _>>()?;
    if kinds.is_empty() {
        return Err(PcError::Config("at least one connection kind is required".into()));
    }
    Ok(kinds)
}

pub fn format_kinds(kinds: &BTreeSet<ConnectionKind>) -> String {
    kinds.iter().map(|k| k.tag()).collect::<Vec<_>>().join(",")
}

/// Binary `N × N` mask; `true` marks a usable (trainable) weight.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    size: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(size: usize) -> Self {
        Self { size, bits: vec![false; size * size] }
    }

    pub fn full(size: usize) -> Self {
        Self { size, bits: vec![true; size * size] }
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(size * size);
        for r in 0..size {
            for c in 0..size {
                bits.push(f(r, c));
            }
        }
        Self { size, bits }
    }

    /// Union of the block patterns for `kinds` over the partition `spec`.
    pub fn build(spec: &LayerSpec, kinds: &BTreeSet<ConnectionKind>) -> Self {
        let layer_of: Vec<usize> = (0..spec.node_count()).map(|i| spec.layer_of(i)).collect();
        Self::from_fn(spec.node_count(), |r, c| {
            kinds.iter().any(|k| k.contains(r, c, layer_of[r], layer_of[c]))
        })
    }

    /// The forward-only mask: ones exactly on blocks `(ℓ, ℓ−1)`.
    pub fn hierarchical(spec: &LayerSpec) -> Self {
        Self::build(spec, &BTreeSet::from([ConnectionKind::Forward]))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.bits[row * self.size + col] = on;
    }

    /// Number of unmasked entries `d`.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn density(&self) -> f64 {
        if self.size == 0 {
            0.0
        } else {
            self.count() as f64 / (self.size * self.size) as f64
        }
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.size == other.size && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Every unmasked entry connects a lower layer to a strictly higher one.
    pub fn is_feedforward(&self, spec: &LayerSpec) -> bool {
        if spec.node_count() != self.size {
            return false;
        }
        let layer_of: Vec<usize> = (0..self.size).map(|i| spec.layer_of(i)).collect();
        self.iter_ones().all(|(r, c)| layer_of[c] < layer_of[r])
    }

    /// `(row, col)` of unmasked entries in row-major order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.size;
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| (i / n, i % n))
    }

    /// Zeroes every masked entry of `weights` in place.
    pub fn apply(&self, weights: &mut Array2<f64>) {
        for ((r, c), w) in weights.indexed_iter_mut() {
            if !self.get(r, c) {
                *w = 0.0;
            }
        }
    }

    pub fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.size, self.size), |(r, c)| if self.get(r, c) { 1.0 } else { 0.0 })
    }
}

/// Multiply-adds per unmasked weight per inference step: one for the
/// prediction drive and one for the backward error accumulation.
pub const MADDS_PER_NONZERO: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostReport {
    pub node_count: usize,
    pub nonzeros: usize,
    pub steps: usize,
    pub madds_per_nonzero: u64,
    /// `N²·T`
    pub dense_ops: u64,
    /// `d·T·c`
    pub sparse_ops: u64,
    /// `L·M` for the forward-only network on the same partition, with
    /// `M = max_ℓ n_ℓ·n_{ℓ+1}`.
    pub fnn_ops: u64,
    pub fnn_layers: usize,
    pub fnn_max_block: usize,
}

pub fn cost_report(spec: &LayerSpec, mask: &Mask, steps: usize) -> CostReport {
    let n = mask.size();
    let d = mask.count();
    let max_block = spec.sizes().windows(2).map(|w| w[0] * w[1]).max().unwrap_or(0);
    CostReport {
        node_count: n,
        nonzeros: d,
        steps,
        madds_per_nonzero: MADDS_PER_NONZERO,
        dense_ops: (n * n * steps) as u64,
        sparse_ops: d as u64 * steps as u64 * MADDS_PER_NONZERO,
        fnn_ops: (spec.depth() * max_block) as u64,
        fnn_layers: spec.depth(),
        fnn_max_block: max_block,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> LayerSpec {
        LayerSpec::new(vec![2, 3, 3, 2]).unwrap()
    }

    fn kinds(list: &[ConnectionKind]) -> BTreeSet<ConnectionKind> {
        list.iter().copied().collect()
    }

    #[test]
    fn forward_mask_has_subdiagonal_blocks() {
        let m = Mask::hierarchical(&fig2());
        assert_eq!(m.count(), 21);
        // rows 3–5 / cols 1–2, rows 6–8 / cols 3–5, rows 9–10 / cols 6–8 (1-based)
        let blocks = [((2..5), (0..2)), ((5..8), (2..5)), ((8..10), (5..8))];
        for r in 0..10 {
            for c in 0..10 {
                let expected = blocks.iter().any(|(rs, cs)| rs.contains(&r) && cs.contains(&c));
                assert_eq!(m.get(r, c), expected, "({r},{c})");
            }
        }
        assert!(m.is_feedforward(&fig2()));
    }

    #[test]
    fn block_counts() {
        let s = fig2();
        assert_eq!(Mask::build(&s, &kinds(&[ConnectionKind::AllToAll])).count(), 90);
        assert_eq!(Mask::build(&s, &kinds(&[ConnectionKind::Lateral])).count(), 16);
        assert_eq!(Mask::build(&s, &kinds(&[ConnectionKind::SelfLoop])).count(), 10);
        // 3·2 (layer 2 from 0) + 2·2 (3 from 0) + 2·3 (3 from 1)
        assert_eq!(Mask::build(&s, &kinds(&[ConnectionKind::ForwardSkip])).count(), 16);
        assert_eq!(Mask::build(&s, &kinds(&[ConnectionKind::Backward])).count(), 21);
        assert_eq!(Mask::build(&s, &kinds(&[ConnectionKind::BackwardSkip])).count(), 16);
        let everything = Mask::build(&s, &ConnectionKind::ALL.into_iter().collect());
        assert_eq!(everything, Mask::full(10));
    }

    #[test]
    fn kinds_without_self_loops_tile_all_to_all() {
        let s = fig2();
        let parts = kinds(&[
            ConnectionKind::Forward,
            ConnectionKind::ForwardSkip,
            ConnectionKind::Backward,
            ConnectionKind::BackwardSkip,
            ConnectionKind::Lateral,
        ]);
        assert_eq!(Mask::build(&s, &parts), Mask::build(&s, &kinds(&[ConnectionKind::AllToAll])));
    }

    #[test]
    fn backward_mask_is_not_feedforward() {
        let s = fig2();
        let m = Mask::build(&s, &kinds(&[ConnectionKind::Forward, ConnectionKind::Backward]));
        assert!(!m.is_feedforward(&s));
        let skip = Mask::build(&s, &kinds(&[ConnectionKind::Forward, ConnectionKind::ForwardSkip]));
        assert!(skip.is_feedforward(&s));
    }

    #[test]
    fn parse_and_format_kinds() {
        let k = parse_kinds("lateral, forward").unwrap();
        assert_eq!(format_kinds(&k), "forward,lateral");
        assert!(parse_kinds("").is_err());
        assert!(parse_kinds("sideways").is_err());
        for kind in ConnectionKind::ALL {
            assert_eq!(ConnectionKind::from_code(kind.code()), Some(kind));
        }
    }

    #[test]
    fn cost_report_examples() {
        let s = fig2();
        let r = cost_report(&s, &Mask::hierarchical(&s), 1);
        assert_eq!(r.nonzeros, 21);
        assert_eq!(r.sparse_ops, 42);
        assert_eq!(r.fnn_max_block, 9);
        assert_eq!(r.fnn_ops, 27);
        let all = cost_report(&s, &Mask::build(&s, &kinds(&[ConnectionKind::AllToAll])), 5);
        assert_eq!(all.dense_ops, 500);
        let none = cost_report(&s, &Mask::empty(10), 7);
        assert_eq!(none.sparse_ops, 0);
        assert!(none.sparse_ops <= none.dense_ops * none.madds_per_nonzero);
    }
}
