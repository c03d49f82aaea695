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

//! Closed-form divergences used as reference values.

use super::DivergenceError;
use crate::math::normal_cdf;

/// `|α - 1|` at or below which the two-point sign divergence switches to its
/// KL limit.
pub const KL_BRANCH_BAND: f64 = 1e-6;

/// Absolute tolerance of [`additivity_check`].
pub const ADDITIVITY_TOL: f64 = 1e-9;

/// Univariate Gaussian `N(mean, variance)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianParams {
    mean: f64,
    variance: f64,
}

impl GaussianParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self, DivergenceError> {
        if !mean.is_finite() || !(variance.is_finite() && variance > 0.0) {
            return Err(DivergenceError::InvalidGaussian { mean, variance });
        }
        Ok(Self { mean, variance })
    }

    /// The Gaussian-dropout noise law `N(1, a)`.
    pub fn dropout_noise(a: f64) -> Result<Self, DivergenceError> {
        Self::new(1.0, a)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        crate::math::log_normal_pdf(x, self.mean, self.variance).exp()
    }
}

fn check_alpha(alpha: f64) -> Result<(), DivergenceError> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(DivergenceError::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Rényi divergence `D_α(q1 ‖ q2)` between univariate Gaussians.
///
/// With `s² = α σ2² + (1 - α) σ1²`:
///
/// ```text
/// D_α = ln(σ2/σ1) + ln(σ2²/s²) / (2(α - 1)) + α (μ1 - μ2)² / (2 s²)
/// ```
///
/// Returns `+∞` when `s² ≤ 0` (the defining integral diverges). `α = 1` is
/// rejected; use [`kl_gaussian_closed_form`].
pub fn renyi_gaussian_closed_form(
    q1: GaussianParams,
    q2: GaussianParams,
    alpha: f64,
) -> Result<f64, DivergenceError> {
    check_alpha(alpha)?;
    if (alpha - 1.0).abs() < 1e-12 {
        return Err(DivergenceError::AlphaIsOne);
    }
    let (v1, v2) = (q1.variance, q2.variance);
    let mixed = alpha * v2 + (1.0 - alpha) * v1;
    if mixed <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let dm = q1.mean - q2.mean;
    Ok(0.5 * (v2 / v1).ln()
        + (v2 / mixed).ln() / (2.0 * (alpha - 1.0))
        + alpha * dm * dm / (2.0 * mixed))
}

/// `KL(q1 ‖ q2)` between univariate Gaussians.
pub fn kl_gaussian_closed_form(q1: GaussianParams, q2: GaussianParams) -> f64 {
    let dm = q1.mean - q2.mean;
    0.5 * (q2.variance / q1.variance).ln() + (q1.variance + dm * dm) / (2.0 * q2.variance) - 0.5
}

/// Divergence of the weight-sign distribution `(q0, 1 - q0)` from the fair
/// coin prior.
///
/// `-ln 0.5 + ln(q0^α + (1 - q0)^α) / (α - 1)`, switching to the two-point KL
/// when `|α - 1| ≤ 1e-6`.
pub fn sign_divergence(q0: f64, alpha: f64) -> Result<f64, DivergenceError> {
    check_alpha(alpha)?;
    if !(q0 > 0.0 && q0 < 1.0) {
        return Err(DivergenceError::DegenerateSign(q0));
    }
    let p = 1.0 - q0;
    if (alpha - 1.0).abs() <= KL_BRANCH_BAND {
        return Ok(q0 * (q0 / 0.5).ln() + p * (p / 0.5).ln());
    }
    Ok(-(0.5f64).ln() + (q0.powf(alpha) + p.powf(alpha)).ln() / (alpha - 1.0))
}

/// Probability that `ε ~ N(1, a)` is negative: `Φ(-1/√a)`.
pub fn q0_for_gaussian_dropout(a: f64) -> Result<f64, DivergenceError> {
    if !(a.is_finite() && a > 0.0) {
        return Err(DivergenceError::InvalidRate(a));
    }
    Ok(normal_cdf(-1.0 / a.sqrt()))
}

/// Whether `d_joint` equals `d1 + d2` within [`ADDITIVITY_TOL`].
pub fn additivity_check(d1: f64, d2: f64, d_joint: f64) -> bool {
    (d_joint - (d1 + d2)).abs() <= ADDITIVITY_TOL
}
