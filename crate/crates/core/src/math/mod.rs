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

//! Numerical substrate: dense matrices, seeded random streams, normal CDF,
//! log-sum-exp and least-squares polynomial fitting. Everything is `f64`.

mod matrix;
mod poly;
mod rng;
mod special;

use thiserror::Error;

pub use matrix::{matmul, Matrix};
pub use poly::{fit_least_squares_poly, poly_eval_and_grad, PolyCoeffs};
pub use rng::{derive_seed, sample_gaussian, splitmix64, RngStream};
pub use special::{erfc, log_normal_pdf, logsumexp, normal_cdf, normal_pdf, pearson};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MathError {
    #[error("{op}: dimension mismatch {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("scale must be finite and non-negative, got {0}")]
    InvalidScale(f64),
    #[error("{0}: empty input")]
    EmptyInput(&'static str),
    #[error("polynomial fit needs {needed} distinct points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("polynomial fit is singular")]
    DegenerateFit,
    #[error("{0}: non-finite input")]
    NonFinite(&'static str),
}
