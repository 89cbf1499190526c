//! Element-wise activation functions and the two prediction conventions.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::PcError;
use crate::linalg::matvec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Identity,
    Tanh,
    Sigmoid,
    Relu,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [Self::Identity, Self::Tanh, Self::Sigmoid, Self::Relu];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::Tanh => x.tanh(),
            Self::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Self::Relu => x.max(0.0),
        }
    }

    /// Analytic derivative. `ReLU'(0)` is taken as 0.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Self::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
            Self::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn map(self, v: ArrayView1<f64>) -> Array1<f64> {
        v.mapv(|x| self.apply(x))
    }

    pub fn map_derivative(self, v: ArrayView1<f64>) -> Array1<f64> {
        v.mapv(|x| self.derivative(x))
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Tanh => "tanh",
            Self::Sigmoid => "sigmoid",
            Self::Relu => "relu",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Self::Identity => 0,
            Self::Tanh => 1,
            Self::Sigmoid => 2,
            Self::Relu => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.code() == code)
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ActivationKind {
    type Err = PcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.tag() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| PcError::Config(format!("unknown activation '{s}'")))
    }
}

/// Where the nonlinearity sits in a prediction.
///
/// `MatrixActivation`: `μ_i = f(Σ_j w_ij a_j)`.
/// `ActivationMatrix`: `μ_i = Σ_j w_ij f(a_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictionConvention {
    MatrixActivation,
    ActivationMatrix,
}

impl PredictionConvention {
    pub const ALL: [PredictionConvention; 2] = [Self::MatrixActivation, Self::ActivationMatrix];

    /// Returns `(μ, drive)` where `drive` is the weighted sum before any
    /// output nonlinearity: `w·a` or `w·f(a)`.
    pub fn predict(
        self,
        act: ActivationKind,
        weights: ArrayView2<f64>,
        source: ArrayView1<f64>,
    ) -> (Array1<f64>, Array1<f64>) {
        match self {
            Self::MatrixActivation => {
                let drive = matvec(weights, source);
                (act.map(drive.view()), drive)
            }
            Self::ActivationMatrix => {
                let drive = matvec(weights, act.map(source).view());
                (drive.clone(), drive)
            }
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::MatrixActivation => "matrixactivation",
            Self::ActivationMatrix => "activationmatrix",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Self::MatrixActivation => 0,
            Self::ActivationMatrix => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.code() == code)
    }
}

impl fmt::Display for PredictionConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PredictionConvention {
    type Err = PcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|c| c.tag() == norm)
            .ok_or_else(|| PcError::Config(format!("unknown convention '{s}'")))
    }
}
