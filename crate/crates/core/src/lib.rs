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

//! Bayesian multilayer perceptrons trained with variational dropout, where
//! the KL term of the evidence lower bound is generalized to the Rényi
//! α-divergence family.
//!
//! The divergence between the Gaussian-dropout posterior and a log-uniform
//! weight prior has no closed form, so [`divergence`] estimates it by Monte
//! Carlo on a grid of dropout rates and fits a cubic polynomial in the rate
//! `a = p / (1 - p)`. Training then differentiates the polynomial.
//!
//! Module map:
//!
//! - [`math`]: matrices, random streams, special functions, polynomial fits.
//! - [`divergence`]: closed-form Gaussian divergences, the Monte-Carlo
//!   estimator, and polynomial tables.
//! - [`net`]: dense layers (plain, Bernoulli, variational A and B), manual
//!   backprop, and the α-ELBO loss.
//! - [`optim`]: Adam / SGD and early stopping.
//! - [`data`]: IDX loading, synthetic blobs, batching.
//! - [`experiment`]: run configuration, training loop, sweeps, CSV output.

#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod divergence;
pub mod experiment;
pub mod math;
pub mod net;
pub mod optim;

pub use math::{Matrix, RngStream};
