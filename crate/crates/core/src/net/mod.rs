// Copyright 2026 The alphadrop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Dense networks with dropout-style multiplicative noise.
//!
//! Four layer variants share one parameterization (`θ`, bias, `log a`):
//!
//! - `plain`: `g(xθ + b)`.
//! - `bernoulli(p)`: inverted dropout on the layer input with fixed `p`.
//! - `varA`: one `N(1, a)` noise value per input entry, shared by every output
//!   unit, i.e. correlated weight noise.
//! - `varB`: independent weight noise `w ~ N(θ, aθ²)`, sampled through the
//!   induced pre-activation law (local reparameterization).

mod layer;
mod loss;
mod network;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::math::MathError;

pub use layer::{
    backward, forward_bernoulli, forward_plain, forward_var_a, forward_var_b, ForwardCache,
    LayerGrads, Noise, NoiseSource, VarDropLayer,
};
pub use loss::{
    alpha_elbo_loss, alpha_elbo_with_grads, divergence_penalty, softmax_cross_entropy, softmax_rows,
    ElboGrads, LossBreakdown,
};
pub use network::{Architecture, Network, NetworkNoise, CHECKPOINT_MAGIC};

/// Smallest admissible dropout rate `a` (lower edge of the divergence tables).
pub const RATE_MIN: f64 = crate::divergence::A_MIN;
/// Largest admissible dropout rate `a`.
pub const RATE_MAX: f64 = crate::divergence::A_MAX;
/// Initial `a` for variational layers (`p ≈ 0.048`).
pub const DEFAULT_INIT_RATE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("{what}: expected {expected} columns, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("Bernoulli dropout probability must lie in [0, 1), got {0}")]
    InvalidDropout(f64),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("{0} labels for {1} rows")]
    LabelCount(usize, usize),
    #[error("variational layers need a divergence table")]
    MissingTable,
    #[error("table was fitted for alpha {table}, run uses alpha {run}")]
    TableAlphaMismatch { table: f64, run: f64 },
    #[error("forward cache does not belong to this layer: {0}")]
    CacheMismatch(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variant {
    Plain,
    Bernoulli { p: f64 },
    VarA,
    VarB,
}

impl Variant {
    /// Whether the layer carries a divergence penalty.
    pub fn is_variational(&self) -> bool {
        matches!(self, Variant::VarA | Variant::VarB)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Plain => f.write_str("plain"),
            Variant::Bernoulli { p } => write!(f, "bernoulli:{p:?}"),
            Variant::VarA => f.write_str("varA"),
            Variant::VarB => f.write_str("varB"),
        }
    }
}

impl FromStr for Variant {
    type Err = String;

    /// Accepts `plain`, `bernoulli` (p = 0.5), `bernoulli:<p>`, `varA`, `varB`
    /// (case-insensitive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "plain" => Ok(Variant::Plain),
            "vara" | "var-a" | "a" => Ok(Variant::VarA),
            "varb" | "var-b" | "b" => Ok(Variant::VarB),
            "bernoulli" => Ok(Variant::Bernoulli { p: 0.5 }),
            other => match other.strip_prefix("bernoulli:") {
                Some(p) => p
                    .parse::<f64>()
                    .map(|p| Variant::Bernoulli { p })
                    .map_err(|_| format!("bad Bernoulli rate in {s:?}")),
                None => Err(format!("unknown variant {s:?}")),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// Logits; softmax is applied by the loss.
    Identity,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            _ => Err(format!("unknown activation {s:?}")),
        }
    }
}
