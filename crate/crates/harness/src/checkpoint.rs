//! Binary checkpoint format, little-endian throughout:
//!
//! ```text
//! magic      4 bytes  "PCG1"
//! version    u16      1
//! activation u8       ActivationKind code
//! convention u8       0 = matrix-activation, 1 = activation-matrix
//! layers     u32      then one u32 per layer width
//! kinds      u32      then one u8 code per connection kind, strictly ascending
//! epoch      u64
//! seed       u64
//! count      u64      number of unmasked weights
//! weights    f64 × count, row-major over unmasked entries
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use pcgraph::{ActivationKind, ConnectionKind, LayerSpec, Mask, PcgModel, PredictionConvention};

use crate::error::{HarnessError, Result};

pub const MAGIC: &[u8; 4] = b"PCG1";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: LayerSpec,
    pub kinds: BTreeSet<ConnectionKind>,
    pub activation: ActivationKind,
    pub convention: PredictionConvention,
    pub epoch: u64,
    pub seed: u64,
    /// Unmasked weights in row-major order.
    pub weights: Vec<f64>,
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Checkpoint(msg.into())
}

fn convention_code(c: PredictionConvention) -> u8 {
    match c {
        PredictionConvention::MatrixActivation => 0,
        PredictionConvention::ActivationMatrix => 1,
    }
}

fn convention_from_code(code: u8) -> Option<PredictionConvention> {
    match code {
        0 => Some(PredictionConvention::MatrixActivation),
        1 => Some(PredictionConvention::ActivationMatrix),
        _ => None,
    }
}

impl Checkpoint {
    /// Captures `model`, whose mask must be the one `kinds` builds on `spec`.
    pub fn capture(
        model: &PcgModel,
        spec: &LayerSpec,
        kinds: &BTreeSet<ConnectionKind>,
        epoch: u64,
        seed: u64,
    ) -> Result<Self> {
        let mask = Mask::build(spec, kinds);
        if &mask != model.mask() {
            return Err(bad("model mask does not match the connection kinds"));
        }
        let weights = mask.iter_ones().map(|(r, c)| model.weights()[[r, c]]).collect();
        Ok(Self {
            spec: spec.clone(),
            kinds: kinds.clone(),
            activation: model.activation(),
            convention: model.convention(),
            epoch,
            seed,
            weights,
        })
    }

    pub fn mask(&self) -> Mask {
        Mask::build(&self.spec, &self.kinds)
    }

    pub fn model(&self) -> Result<PcgModel> {
        let mask = self.mask();
        if mask.count() != self.weights.len() {
            return Err(bad(format!("payload has {} weights, mask has {}", self.weights.len(), mask.count())));
        }
        let n = self.spec.node_count();
        let mut w = Array2::zeros((n, n));
        for ((r, c), v) in mask.iter_ones().zip(&self.weights) {
            w[[r, c]] = *v;
        }
        let model = PcgModel::new(
            w,
            mask,
            self.activation,
            self.convention,
            self.spec.input_width(),
            self.spec.output_width(),
        )?
        .with_partition(self.spec.clone())?;
        Ok(model)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * self.weights.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.activation.code());
        out.push(convention_code(self.convention));
        out.extend_from_slice(&(self.spec.sizes().len() as u32).to_le_bytes());
        for &n in self.spec.sizes() {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.kinds.len() as u32).to_le_bytes());
        out.extend(self.kinds.iter().map(|k| k.code()));
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.weights.len() as u64).to_le_bytes());
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let activation = ActivationKind::from_code(r.u8()?).ok_or_else(|| bad("unknown activation code"))?;
        let convention = convention_from_code(r.u8()?).ok_or_else(|| bad("unknown convention code"))?;
        let layers = r.u32()? as usize;
        let sizes = (0..layers).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let spec = LayerSpec::new(sizes).map_err(|e| bad(e.to_string()))?;
        let kind_count = r.u32()? as usize;
        let codes = r.take(kind_count)?.to_vec();
        if kind_count == 0 || codes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("connection kinds must be nonempty and strictly ascending"));
        }
        let kinds = codes
            .iter()
            .map(|&c| ConnectionKind::from_code(c).ok_or_else(|| bad(format!("unknown connection code {c}"))))
            .collect::<Result<BTreeSet<_>>>()?;
        let epoch = r.u64()?;
        let seed = r.u64()?;
        let count = r.u64()? as usize;
        let expected = Mask::build(&spec, &kinds).count();
        if count != expected {
            return Err(bad(format!("payload declares {count} weights, mask has {expected}")));
        }
        let weights = (0..count).map(|_| r.u64().map(f64::from_bits)).collect::<Result<Vec<_>>>()?;
        if r.pos != bytes.len() {
            return Err(bad(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { spec, kinds, activation, convention, epoch, seed, weights })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| bad("truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const K: usize>(&mut self) -> Result<[u8; K]> {
        Ok(self.take(K)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
}
