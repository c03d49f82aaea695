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

//! Monte-Carlo estimate of the negative α-divergence between the
//! Gaussian-dropout weight posterior and the log-uniform prior.

use super::{AlphaSpec, DivergenceError, A_MAX};
use crate::math::{logsumexp, RngStream};

/// Draws with `|ε|` below this are redrawn.
pub const EPS_FLOOR: f64 = 1e-12;

/// One Monte-Carlo estimate with its delta-method standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    /// Number of draws rejected by the `|ε| < 1e-12` guard.
    pub resampled: u64,
}

/// Estimates `-D_α` for noise `ε ~ N(1, a)`:
///
/// ```text
/// -D_α ≈ ln 0.5 - α/(α-1) · ln c - 1/(α-1) · ln( (1/n) Σ q(ε_i)^(-α) / |ε_i| )
/// ```
///
/// where `q` is the `N(1, a)` density. The log-mean is taken as
/// `logsumexp(-α ln q(ε_i) - ln|ε_i|) - ln n`. `α` within 1e-6 of one is
/// remapped first (see [`AlphaSpec::effective_alpha`]).
pub fn neg_alpha_div_mc(
    a: f64,
    spec: &AlphaSpec,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<McEstimate, DivergenceError> {
    if !(a > 0.0 && a <= A_MAX) {
        return Err(DivergenceError::InvalidRate(a));
    }
    if n_samples == 0 {
        return Err(DivergenceError::NoSamples);
    }
    let alpha = spec.effective_alpha();
    let sd = a.sqrt();
    // ln q(ε) = -ln√(2πa) - ζ²/2 with ε = 1 + √a ζ.
    let log_norm = 0.5 * (2.0 * std::f64::consts::PI * a).ln();

    let mut resampled = 0u64;
    let mut terms = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let (zeta, eps) = loop {
            let zeta = rng.standard_normal();
            let eps = 1.0 + sd * zeta;
            if eps.abs() >= EPS_FLOOR {
                break (zeta, eps);
            }
            resampled += 1;
        };
        let log_q = -log_norm - 0.5 * zeta * zeta;
        terms.push(-alpha * log_q - eps.abs().ln());
    }

    let n = n_samples as f64;
    let log_mean = logsumexp(&terms)? - n.ln();
    let value = 0.5f64.ln() - alpha / (alpha - 1.0) * spec.c_const().ln() - log_mean / (alpha - 1.0);

    // Delta method on ln(mean w): se ≈ sd(w) / (mean(w) √n), computed on
    // w scaled by exp(-max).
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut s1, mut s2) = (0.0, 0.0);
    for t in &terms {
        let w = (t - max).exp();
        s1 += w;
        s2 += w * w;
    }
    let mean_w = s1 / n;
    let var_w = if n_samples > 1 {
        ((s2 - n * mean_w * mean_w) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let std_err = (var_w / n).sqrt() / mean_w / (alpha - 1.0).abs();

    Ok(McEstimate {
        value,
        std_err,
        resampled,
    })
}
