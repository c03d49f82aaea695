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

//! Layer stacks and the checkpoint format.
//!
//! A checkpoint is line-oriented ASCII:
//!
//! ```text
//! alphadrop-checkpoint v1
//! alpha <α>
//! layers <n>
//! layer <in> <out> <variant> <activation> <log_a>
//! theta <in·out reals, row-major>
//! bias <out reals>
//! ...            (layer/theta/bias repeated n times)
//! ```
//!
//! Reals use the shortest round-trip decimal form, so reloading is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::layer::{backward, ForwardCache, LayerGrads, Noise, NoiseSource, VarDropLayer};
use super::{Activation, NetError, Variant, DEFAULT_INIT_RATE};
use crate::math::{Matrix, RngStream};

pub const CHECKPOINT_MAGIC: &str = "alphadrop-checkpoint";
const CHECKPOINT_VERSION: &str = "v1";

/// Shape of a classifier: `input → hidden… → classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
    /// Applied to every dense layer, including the head.
    pub variant: Variant,
    pub init_rate: f64,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden: Vec<usize>, classes: usize, variant: Variant) -> Self {
        Self {
            input_dim,
            hidden,
            classes,
            variant,
            init_rate: DEFAULT_INIT_RATE,
        }
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(&self.hidden);
        w.push(self.classes);
        w
    }
}

/// How each layer of a training-mode pass obtains its noise.
pub enum NetworkNoise<'a> {
    Sample(&'a mut RngStream),
    /// One entry per layer, e.g. collected from earlier caches.
    Replay(&'a [Noise]),
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub alpha: f64,
    layers: Vec<VarDropLayer>,
}

impl Network {
    /// He-style initialization: `θ ~ N(0, 2/fan_in)`, zero bias,
    /// `ln a = ln(init_rate)`. ReLU on hidden layers, logits at the head.
    pub fn new(arch: &Architecture, alpha: f64, rng: &mut RngStream) -> Result<Self, NetError> {
        let widths = arch.widths();
        let n = widths.len() - 1;
        let mut layers = Vec::with_capacity(n);
        for (i, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let sd = (2.0 / fan_in as f64).sqrt();
            let theta = Matrix::from_fn(fan_in, fan_out, |_, _| sd * rng.standard_normal());
            let activation = if i + 1 == n {
                Activation::Identity
            } else {
                Activation::Relu
            };
            let mut layer = VarDropLayer::new(
                theta,
                vec![0.0; fan_out],
                arch.init_rate.ln(),
                arch.variant,
                activation,
            )?;
            layer.clamp_log_a();
            layers.push(layer);
        }
        Ok(Self { alpha, layers })
    }

    pub fn from_layers(alpha: f64, layers: Vec<VarDropLayer>) -> Result<Self, NetError> {
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(NetError::Shape {
                    what: "layer chain",
                    expected: pair[0].output_dim(),
                    got: pair[1].input_dim(),
                });
            }
        }
        Ok(Self { alpha, layers })
    }

    pub fn layers(&self) -> &[VarDropLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [VarDropLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.input_dim())
    }

    pub fn classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output_dim())
    }

    pub fn has_variational_layers(&self) -> bool {
        self.layers.iter().any(|l| l.variant.is_variational())
    }

    /// Current `a` of every layer.
    pub fn rates(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.rate().0).collect()
    }

    pub fn clamp_rates(&mut self) {
        for l in &mut self.layers {
            l.clamp_log_a();
        }
    }

    /// Deterministic (noise-mean) logits.
    pub fn forward_eval(&self, x: &Matrix) -> Result<Matrix, NetError> {
        let mut h = x.clone();
        for l in &self.layers {
            h = l.forward_eval(&h)?;
        }
        Ok(h)
    }

    pub fn forward_train(
        &self,
        x: &Matrix,
        mut noise: NetworkNoise<'_>,
    ) -> Result<(Matrix, Vec<ForwardCache>), NetError> {
        if let NetworkNoise::Replay(n) = &noise {
            if n.len() != self.layers.len() {
                return Err(NetError::CacheMismatch("one noise entry per layer"));
            }
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            let source = match &mut noise {
                NetworkNoise::Sample(rng) => NoiseSource::Sample(rng),
                NetworkNoise::Replay(n) => NoiseSource::Replay(&n[i]),
                NetworkNoise::Zero => NoiseSource::Zero,
            };
            let (out, cache) = l.forward_train(&h, source)?;
            caches.push(cache);
            h = out;
        }
        Ok((h, caches))
    }

    /// Per-layer gradients given `∂objective/∂logits`.
    pub fn backward(
        &self,
        caches: &[ForwardCache],
        d_logits: &Matrix,
    ) -> Result<Vec<LayerGrads>, NetError> {
        if caches.len() != self.layers.len() {
            return Err(NetError::CacheMismatch("one cache per layer"));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = d_logits.clone();
        for (l, c) in self.layers.iter().zip(caches).rev() {
            let g = backward(l, c, &upstream)?;
            upstream = g.input.clone();
            grads.push(g);
        }
        grads.reverse();
        Ok(grads)
    }

    /// Arg-max class per row under the deterministic forward pass.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>, NetError> {
        let logits = self.forward_eval(x)?;
        Ok((0..logits.rows())
            .map(|i| {
                let row = logits.row(i);
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
        let _ = writeln!(s, "alpha {:?}", self.alpha);
        let _ = writeln!(s, "layers {}", self.layers.len());
        for l in &self.layers {
            let _ = writeln!(
                s,
                "layer {} {} {} {} {:?}",
                l.input_dim(),
                l.output_dim(),
                l.variant,
                l.activation,
                l.log_a
            );
            s.push_str("theta");
            for v in l.theta.as_slice() {
                let _ = write!(s, " {v:?}");
            }
            s.push_str("\nbias");
            for v in &l.bias {
                let _ = write!(s, " {v:?}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, NetError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |expect: &str| -> Result<(usize, Vec<&str>), NetError> {
            let (no, line) = lines.next().ok_or_else(|| ckpt_err(0, &format!("missing {expect} line")))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.first() != Some(&expect) {
                return Err(ckpt_err(no, &format!("expected {expect:?}")));
            }
            Ok((no, fields))
        };
        let (no, head) = next(CHECKPOINT_MAGIC)?;
        if head.get(1) != Some(&CHECKPOINT_VERSION) {
            return Err(ckpt_err(no, "unsupported checkpoint version"));
        }
        let (no, f) = next("alpha")?;
        let alpha: f64 = field(&f, 1, no)?;
        let (no, f) = next("layers")?;
        let count: usize = field(&f, 1, no)?;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let (no, f) = next("layer")?;
            let k: usize = field(&f, 1, no)?;
            let l: usize = field(&f, 2, no)?;
            let variant: Variant = f
                .get(3)
                .ok_or_else(|| ckpt_err(no, "missing variant"))?
                .parse()
                .map_err(|e: String| ckpt_err(no, &e))?;
            let activation: Activation = f
                .get(4)
                .ok_or_else(|| ckpt_err(no, "missing activation"))?
                .parse()
                .map_err(|e: String| ckpt_err(no, &e))?;
            let log_a: f64 = field(&f, 5, no)?;
            let (no, f) = next("theta")?;
            let theta = parse_reals(&f[1..], k.checked_mul(l).ok_or_else(|| ckpt_err(no, "overflow"))?, no)?;
            let (no, f) = next("bias")?;
            let bias = parse_reals(&f[1..], l, no)?;
            layers.push(VarDropLayer::new(Matrix::from_vec(k, l, theta)?, bias, log_a, variant, activation)?);
        }
        if lines.any(|(_, l)| !l.trim().is_empty()) {
            return Err(ckpt_err(0, "trailing content"));
        }
        Self::from_layers(alpha, layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NetError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

fn ckpt_err(line: usize, msg: &str) -> NetError {
    NetError::Checkpoint {
        line,
        msg: msg.to_string(),
    }
}

fn field<T: std::str::FromStr>(fields: &[&str], i: usize, line: usize) -> Result<T, NetError> {
    fields
        .get(i)
        .ok_or_else(|| ckpt_err(line, "missing field"))?
        .parse()
        .map_err(|_| ckpt_err(line, &format!("bad field {i}")))
}

fn parse_reals(tokens: &[&str], expected: usize, line: usize) -> Result<Vec<f64>, NetError> {
    if tokens.len() != expected {
        return Err(ckpt_err(line, &format!("expected {expected} values, found {}", tokens.len())));
    }
    tokens
        .iter()
        .map(|t| t.parse().map_err(|_| ckpt_err(line, &format!("bad real {t:?}"))))
        .collect()
}
