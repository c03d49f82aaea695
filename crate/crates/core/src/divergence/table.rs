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

//! Cubic approximations of `-D_α` as a function of the dropout rate `a`.
//!
//! # File format
//!
//! Two lines of ASCII text:
//!
//! ```text
//! alphadrop-poly-table v1 alpha=0.95 a_min=0.01 a_max=1.0 n_mc_samples=100000 grid_size=100 seed=0 fit_rmse=0.0123
//! c0 c1 c2 c3
//! ```
//!
//! Keys appear in exactly this order. Reals use Rust's shortest round-trip
//! decimal form, so a save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{neg_alpha_div_mc, AlphaSpec, DivergenceError, McEstimate, TableError, A_MAX, A_MIN};
use crate::math::{fit_least_squares_poly, PolyCoeffs, RngStream};

pub const TABLE_MAGIC: &str = "alphadrop-poly-table";
pub const TABLE_VERSION: u32 = 1;
pub const DEFAULT_MC_SAMPLES: usize = 100_000;
pub const PRODUCTION_GRID_SIZE: usize = 100;
pub const MIN_GRID_POINTS: usize = 20;
/// Fit RMSE bound as a fraction of the fitted data's range.
pub const DEFAULT_MAX_REL_RMSE: f64 = 0.02;

/// `PRODUCTION_GRID_SIZE` log-spaced rates spanning `[A_MIN, A_MAX]`.
pub fn production_grid() -> Vec<f64> {
    log_grid(A_MIN, A_MAX, PRODUCTION_GRID_SIZE)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// A fitted cubic for one α, with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyApprox {
    pub alpha: f64,
    pub coeffs: PolyCoeffs,
    pub a_min: f64,
    pub a_max: f64,
    pub n_mc_samples: usize,
    pub fit_rmse: f64,
    pub grid_size: usize,
    pub seed: u64,
}

impl PolyApprox {
    /// Approximate `-D_α(a)` and its derivative in `a`.
    ///
    /// Rates outside `[a_min, a_max]` are clamped; the derivative is zero
    /// there.
    pub fn eval(&self, a: f64) -> (f64, f64) {
        let clamped = a.clamp(self.a_min, self.a_max);
        let (v, g) = self.coeffs.eval_with_grad(clamped);
        if clamped == a {
            (v, g)
        } else {
            (v, 0.0)
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{TABLE_MAGIC} v{TABLE_VERSION} alpha={:?} a_min={:?} a_max={:?} n_mc_samples={} grid_size={} seed={} fit_rmse={:?}",
            self.alpha, self.a_min, self.a_max, self.n_mc_samples, self.grid_size, self.seed, self.fit_rmse
        );
        let coeffs: Vec<String> = self.coeffs.coeffs().iter().map(|c| format!("{c:?}")).collect();
        let _ = writeln!(s, "{}", coeffs.join(" "));
        s
    }

    pub fn from_text(text: &str) -> Result<Self, TableError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some(TABLE_MAGIC) {
            return Err(parse_err(1, "not a polynomial table"));
        }
        let version = fields.next().unwrap_or_default();
        if version != format!("v{TABLE_VERSION}") {
            return Err(parse_err(1, &format!("unsupported version {version:?}")));
        }
        let mut next = |key: &str| -> Result<&str, TableError> {
            let field = fields.next().ok_or_else(|| parse_err(1, &format!("missing {key}")))?;
            field
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| parse_err(1, &format!("expected {key}=, found {field:?}")))
        };
        let alpha = parse_num(next("alpha")?, 1)?;
        let a_min = parse_num(next("a_min")?, 1)?;
        let a_max = parse_num(next("a_max")?, 1)?;
        let n_mc_samples = parse_num(next("n_mc_samples")?, 1)?;
        let grid_size = parse_num(next("grid_size")?, 1)?;
        let seed = parse_num(next("seed")?, 1)?;
        let fit_rmse = parse_num(next("fit_rmse")?, 1)?;

        let coeff_line = lines.next().ok_or_else(|| parse_err(2, "missing coefficients"))?;
        let coeffs = coeff_line
            .split_whitespace()
            .map(|t| parse_num::<f64>(t, 2))
            .collect::<Result<Vec<_>, _>>()?;
        if coeffs.len() != 4 {
            return Err(parse_err(2, &format!("expected 4 coefficients, found {}", coeffs.len())));
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(parse_err(3, "trailing content"));
        }
        if !(a_min > 0.0 && a_max <= A_MAX && a_min < a_max) {
            return Err(parse_err(1, "fit domain outside (0, 1]"));
        }
        Ok(Self {
            alpha,
            coeffs: PolyCoeffs::new(coeffs),
            a_min,
            a_max,
            n_mc_samples,
            fit_rmse,
            grid_size,
            seed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TableError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TableError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

fn parse_err(line: usize, msg: &str) -> TableError {
    TableError::Parse {
        line,
        msg: msg.to_string(),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, TableError> {
    s.parse()
        .map_err(|_| parse_err(line, &format!("bad number {s:?}")))
}

/// Knobs for [`build_poly_table_with`].
#[derive(Clone, Debug)]
pub struct TableOptions {
    pub n_samples: usize,
    pub seed: u64,
    /// `None` disables the residual check.
    pub max_rel_rmse: Option<f64>,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_MC_SAMPLES,
            seed: 0,
            max_rel_rmse: Some(DEFAULT_MAX_REL_RMSE),
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<(), TableError> {
    if grid.len() < MIN_GRID_POINTS {
        return Err(TableError::GridTooSmall(grid.len()));
    }
    if let Some(&bad) = grid.iter().find(|&&a| !(a > 0.0 && a <= A_MAX)) {
        return Err(TableError::GridOutOfDomain(bad));
    }
    Ok(())
}

/// Stream used for grid point `index` of the table for `alpha`.
///
/// Every (α, grid point) pair gets fresh draws derived from the root seed.
pub fn grid_stream(seed: u64, alpha: f64, index: usize) -> RngStream {
    RngStream::new(seed).split(alpha.to_bits()).split(index as u64)
}

/// Monte-Carlo estimates of `-D_α` at every grid point.
pub fn sample_curve(
    spec: &AlphaSpec,
    grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>, DivergenceError> {
    grid.iter()
        .enumerate()
        .map(|(i, &a)| {
            let mut rng = grid_stream(seed, spec.effective_alpha(), i);
            neg_alpha_div_mc(a, spec, n_samples, &mut rng)
        })
        .collect()
}

/// Fits a cubic to precomputed `-D_α` values; the table-building entry
/// point with the sampling step factored out.
pub fn fit_table(
    spec: &AlphaSpec,
    grid: &[f64],
    values: &[f64],
    n_samples: usize,
    seed: u64,
    max_rel_rmse: Option<f64>,
) -> Result<PolyApprox, TableError> {
    check_grid(grid)?;
    let coeffs = fit_least_squares_poly(grid, values, 3)?;
    let fit_rmse = coeffs.rmse(grid, values);
    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &a| (l.min(a), h.max(a)));
    let approx = PolyApprox {
        alpha: spec.effective_alpha(),
        coeffs,
        a_min: lo,
        a_max: hi,
        n_mc_samples: n_samples,
        fit_rmse,
        grid_size: grid.len(),
        seed,
    };
    if let Some(rel) = max_rel_rmse {
        let (vmin, vmax) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let bound = rel * (vmax - vmin);
        if fit_rmse > bound {
            return Err(TableError::ResidualBound {
                alpha: approx.alpha,
                fit_rmse,
                bound,
                approx: Box::new(approx),
            });
        }
    }
    Ok(approx)
}

/// Samples the grid and fits the cubic, enforcing the default residual
/// bound (RMSE ≤ 2% of the sampled range).
pub fn build_poly_table(
    spec: &AlphaSpec,
    grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<PolyApprox, TableError> {
    build_poly_table_with(
        spec,
        grid,
        &TableOptions {
            n_samples,
            seed,
            max_rel_rmse: Some(DEFAULT_MAX_REL_RMSE),
        },
    )
}

pub fn build_poly_table_with(
    spec: &AlphaSpec,
    grid: &[f64],
    opts: &TableOptions,
) -> Result<PolyApprox, TableError> {
    check_grid(grid)?;
    let values: Vec<f64> = sample_curve(spec, grid, opts.n_samples, opts.seed)?
        .iter()
        .map(|e| e.value)
        .collect();
    fit_table(spec, grid, &values, opts.n_samples, opts.seed, opts.max_rel_rmse)
}
