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

//! First-order optimizers and early stopping.
//!
//! Optimizers walk a [`Network`] layer by layer. Each layer owns three
//! parameter slots (`theta`, `bias`, `log_a`) with their own moment buffers.
//! After every step the dropout rates are clamped back into the table domain.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::net::{LayerGrads, Network};

#[derive(Debug, Error, PartialEq)]
pub enum OptimError {
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(String),
    #[error("{what}: expected {expected} entries, got {got}")]
    Shape {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid optimizer setting {name} = {value}")]
    InvalidHyper { name: &'static str, value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    fn validate(&self) -> Result<(), OptimError> {
        check_hyper("lr", self.lr, |v| v > 0.0)?;
        check_hyper("beta1", self.beta1, |v| (0.0..1.0).contains(&v))?;
        check_hyper("beta2", self.beta2, |v| (0.0..1.0).contains(&v))?;
        check_hyper("eps", self.eps, |v| v >= 0.0)
    }
}

fn check_hyper(name: &'static str, value: f64, ok: impl Fn(f64) -> bool) -> Result<(), OptimError> {
    if value.is_finite() && ok(value) {
        Ok(())
    } else {
        Err(OptimError::InvalidHyper { name, value })
    }
}

/// Per-slot update rule over flat buffers.
pub trait Stepper {
    /// Called once before the slots of a step are visited.
    fn begin_step(&mut self);
    fn update(&mut self, slot: usize, params: &mut [f64], grads: &[f64]);
}

/// Bias-corrected Adam.
#[derive(Clone, Debug)]
pub struct Adam {
    cfg: AdamConfig,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Result<Self, OptimError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn config(&self) -> &AdamConfig {
        &self.cfg
    }
}

impl Stepper for Adam {
    fn begin_step(&mut self) {
        self.t += 1;
    }

    fn update(&mut self, slot: usize, params: &mut [f64], grads: &[f64]) {
        ensure_slot(&mut self.m, slot, params.len());
        ensure_slot(&mut self.v, slot, params.len());
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        let t = self.t as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Plain SGD with heavy-ball momentum (`momentum = 0` gives vanilla SGD).
#[derive(Clone, Debug)]
pub struct Sgd {
    lr: f64,
    momentum: f64,
    velocity: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64) -> Result<Self, OptimError> {
        check_hyper("lr", lr, |v| v > 0.0)?;
        check_hyper("momentum", momentum, |v| (0.0..1.0).contains(&v))?;
        Ok(Self {
            lr,
            momentum,
            velocity: Vec::new(),
        })
    }
}

impl Stepper for Sgd {
    fn begin_step(&mut self) {}

    fn update(&mut self, slot: usize, params: &mut [f64], grads: &[f64]) {
        ensure_slot(&mut self.velocity, slot, params.len());
        let vel = &mut self.velocity[slot];
        for i in 0..params.len() {
            vel[i] = self.momentum * vel[i] + grads[i];
            params[i] -= self.lr * vel[i];
        }
    }
}

fn ensure_slot(buf: &mut Vec<Vec<f64>>, slot: usize, len: usize) {
    if buf.len() <= slot {
        buf.resize_with(slot + 1, Vec::new);
    }
    if buf[slot].len() != len {
        buf[slot] = vec![0.0; len];
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            _ => Err(format!("unknown optimizer {s:?}")),
        }
    }
}

/// Network-level optimizer: validates gradients, steps every slot, then
/// clamps the dropout rates.
pub struct Optimizer {
    stepper: Box<dyn Stepper + Send>,
    train_a: bool,
}

impl Optimizer {
    pub fn adam(cfg: AdamConfig, train_a: bool) -> Result<Self, OptimError> {
        Ok(Self {
            stepper: Box::new(Adam::new(cfg)?),
            train_a,
        })
    }

    pub fn sgd(lr: f64, momentum: f64, train_a: bool) -> Result<Self, OptimError> {
        Ok(Self {
            stepper: Box::new(Sgd::new(lr, momentum)?),
            train_a,
        })
    }

    pub fn from_kind(kind: OptimizerKind, lr: f64, train_a: bool) -> Result<Self, OptimError> {
        match kind {
            OptimizerKind::Adam => Self::adam(AdamConfig { lr, ..AdamConfig::default() }, train_a),
            OptimizerKind::Sgd => Self::sgd(lr, 0.9, train_a),
        }
    }

    /// Apply one update. Nothing is modified if any gradient is non-finite
    /// or mis-shaped.
    pub fn step(&mut self, net: &mut Network, grads: &[LayerGrads]) -> Result<(), OptimError> {
        check_grads(net, grads)?;
        self.stepper.begin_step();
        for (i, (layer, g)) in net.layers_mut().iter_mut().zip(grads).enumerate() {
            self.stepper.update(3 * i, layer.theta.as_mut_slice(), g.theta.as_slice());
            self.stepper.update(3 * i + 1, &mut layer.bias, &g.bias);
            if self.train_a && layer.variant.is_variational() {
                self.stepper
                    .update(3 * i + 2, std::slice::from_mut(&mut layer.log_a), &[g.log_a]);
            }
        }
        net.clamp_rates();
        Ok(())
    }
}

fn check_grads(net: &Network, grads: &[LayerGrads]) -> Result<(), OptimError> {
    if grads.len() != net.layers().len() {
        return Err(OptimError::Shape {
            what: "layer gradients".into(),
            expected: net.layers().len(),
            got: grads.len(),
        });
    }
    for (i, (layer, g)) in net.layers().iter().zip(grads).enumerate() {
        if g.theta.len() != layer.theta.len() {
            return Err(OptimError::Shape {
                what: format!("layer {i} theta"),
                expected: layer.theta.len(),
                got: g.theta.len(),
            });
        }
        if g.bias.len() != layer.bias.len() {
            return Err(OptimError::Shape {
                what: format!("layer {i} bias"),
                expected: layer.bias.len(),
                got: g.bias.len(),
            });
        }
        if !g.theta.is_finite() {
            return Err(OptimError::NonFiniteGradient(format!("layer {i} theta")));
        }
        if g.bias.iter().any(|v| !v.is_finite()) {
            return Err(OptimError::NonFiniteGradient(format!("layer {i} bias")));
        }
        if !g.log_a.is_finite() {
            return Err(OptimError::NonFiniteGradient(format!("layer {i} log_a")));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopMode {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    /// New best metric; callers usually snapshot parameters here.
    Improved,
    Continue,
    Stop,
}

/// Patience-based early stopping with a 1e-6 absolute improvement threshold.
#[derive(Clone, Debug)]
pub struct EarlyStopper {
    patience: usize,
    mode: StopMode,
    best: Option<f64>,
    since_best: usize,
}

pub const IMPROVEMENT_THRESHOLD: f64 = 1e-6;

impl EarlyStopper {
    pub fn new(patience: usize, mode: StopMode) -> Self {
        Self {
            patience,
            mode,
            best: None,
            since_best: 0,
        }
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn epochs_since_best(&self) -> usize {
        self.since_best
    }

    /// The first metric always counts as an improvement. Stops once
    /// `patience` consecutive epochs fail to improve on the best value.
    pub fn update(&mut self, metric: f64) -> StopDecision {
        let improved = match self.best {
            None => true,
            Some(best) => match self.mode {
                StopMode::Min => metric < best - IMPROVEMENT_THRESHOLD,
                StopMode::Max => metric > best + IMPROVEMENT_THRESHOLD,
            },
        };
        if improved {
            self.best = Some(metric);
            self.since_best = 0;
            return StopDecision::Improved;
        }
        self.since_best += 1;
        if self.since_best >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}
