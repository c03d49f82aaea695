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

//! α-divergences between the Gaussian-dropout weight posterior and the
//! log-uniform prior.
//!
//! The closed forms in [`closed_form`] are reference values for tests. The
//! training path goes through [`neg_alpha_div_mc`] and the cubic tables in
//! [`table`].

mod closed_form;
mod mc;
pub mod table;

use thiserror::Error;

use crate::math::MathError;

pub use closed_form::{
    additivity_check, kl_gaussian_closed_form, q0_for_gaussian_dropout, renyi_gaussian_closed_form,
    sign_divergence, GaussianParams, ADDITIVITY_TOL, KL_BRANCH_BAND,
};
pub use mc::{neg_alpha_div_mc, McEstimate, EPS_FLOOR};
pub use table::{
    build_poly_table, build_poly_table_with, fit_table, production_grid, sample_curve, PolyApprox,
    TableOptions,
};

/// Smallest dropout rate `a` covered by the tables.
pub const A_MIN: f64 = 0.01;
/// Largest dropout rate `a` covered by the tables (`p = 0.5`).
pub const A_MAX: f64 = 1.0;

/// α requested within this distance of one is replaced by [`ALPHA_ONE_SUBSTITUTE`]
/// on the Monte-Carlo path.
pub const ALPHA_ONE_BAND: f64 = 1e-6;
pub const ALPHA_ONE_SUBSTITUTE: f64 = 0.999;

#[derive(Debug, Error)]
pub enum DivergenceError {
    #[error("alpha must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("alpha = 1 has no Renyi closed form here; use the KL branch")]
    AlphaIsOne,
    #[error("improper-prior constant must be finite and positive, got {0}")]
    InvalidConstant(f64),
    #[error("invalid Gaussian (mean {mean}, variance {variance})")]
    InvalidGaussian { mean: f64, variance: f64 },
    #[error("sign probability must lie strictly inside (0, 1), got {0}")]
    DegenerateSign(f64),
    #[error("dropout rate must lie in (0, {A_MAX}], got {0}")]
    InvalidRate(f64),
    #[error("at least one Monte-Carlo sample is required")]
    NoSamples,
    #[error(transparent)]
    Math(#[from] MathError),
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("table grid needs at least {min} points, got {0}", min = table::MIN_GRID_POINTS)]
    GridTooSmall(usize),
    #[error("grid point {0} outside (0, {A_MAX}]")]
    GridOutOfDomain(f64),
    #[error("alpha {alpha}: fit RMSE {fit_rmse:.6} exceeds bound {bound:.6}")]
    ResidualBound {
        alpha: f64,
        fit_rmse: f64,
        bound: f64,
        approx: Box<PolyApprox>,
    },
    #[error("table parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Divergence order α together with the improper-prior constant `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaSpec {
    alpha: f64,
    c_const: f64,
}

impl AlphaSpec {
    /// `c` defaults to 1, which removes the `ln c` term.
    pub fn new(alpha: f64) -> Result<Self, DivergenceError> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(DivergenceError::InvalidAlpha(alpha));
        }
        Ok(Self { alpha, c_const: 1.0 })
    }

    pub fn with_c(self, c_const: f64) -> Result<Self, DivergenceError> {
        if !(c_const.is_finite() && c_const > 0.0) {
            return Err(DivergenceError::InvalidConstant(c_const));
        }
        Ok(Self { c_const, ..self })
    }

    /// The α as requested.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c_const(&self) -> f64 {
        self.c_const
    }

    /// α used by the Monte-Carlo path: one is a removable singularity of the
    /// `1/(α-1)` prefactor, so values within 1e-6 of it become 0.999.
    pub fn effective_alpha(&self) -> f64 {
        effective_alpha(self.alpha)
    }
}

pub fn effective_alpha(alpha: f64) -> f64 {
    if (alpha - 1.0).abs() <= ALPHA_ONE_BAND {
        ALPHA_ONE_SUBSTITUTE
    } else {
        alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_spec_validation_and_remap() {
        assert!(AlphaSpec::new(-0.1).is_err());
        assert!(AlphaSpec::new(f64::NAN).is_err());
        assert_eq!(AlphaSpec::new(1.0).unwrap().effective_alpha(), 0.999);
        assert_eq!(AlphaSpec::new(1.0 + 5e-7).unwrap().effective_alpha(), 0.999);
        assert_eq!(AlphaSpec::new(0.99).unwrap().effective_alpha(), 0.99);
        assert_eq!(AlphaSpec::new(2.0).unwrap().c_const(), 1.0);
        assert!(AlphaSpec::new(2.0).unwrap().with_c(0.0).is_err());
    }
}
