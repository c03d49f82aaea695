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

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;

use super::config::RunConfig;
use super::ExperimentError;
use crate::divergence::{effective_alpha, fit_table, production_grid, sample_curve, AlphaSpec, PolyApprox};
use crate::math::pearson;

/// Result of fitting one α.
#[derive(Clone, Debug)]
pub struct FitReport {
    pub approx: PolyApprox,
    /// Range of the sampled curve; the residual bound is relative to it.
    pub curve_range: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// File name used by `fit-poly` for the requested α.
pub fn table_file_name(alpha: f64) -> String {
    format!("alpha_{alpha:?}.poly")
}

/// Sample and fit one table per α on the production grid, in parallel.
/// Fits violating `max_rel_rmse` are still returned, flagged.
pub fn fit_poly_tables(
    alphas: &[f64],
    n_samples: usize,
    seed: u64,
    max_rel_rmse: f64,
) -> Result<Vec<FitReport>, ExperimentError> {
    if alphas.is_empty() {
        return Err(ExperimentError::Config("no alpha values given".into()));
    }
    let grid = production_grid();
    alphas
        .par_iter()
        .map(|&alpha| {
            let spec = AlphaSpec::new(alpha)?;
            let values: Vec<f64> = sample_curve(&spec, &grid, n_samples, seed)?
                .into_iter()
                .map(|e| e.value)
                .collect();
            let approx = fit_table(&spec, &grid, &values, n_samples, seed, None)?;
            let (lo, hi) = values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            let curve_range = hi - lo;
            let bound = max_rel_rmse * curve_range;
            Ok(FitReport {
                within_bound: approx.fit_rmse <= bound,
                approx,
                curve_range,
                bound,
            })
        })
        .collect()
}

/// Pearson correlation of two fitted curves over `grid`.
pub fn shape_correlation(a: &PolyApprox, b: &PolyApprox, grid: &[f64]) -> Result<f64, ExperimentError> {
    let ya: Vec<f64> = grid.iter().map(|&x| a.eval(x).0).collect();
    let yb: Vec<f64> = grid.iter().map(|&x| b.eval(x).0).collect();
    Ok(pearson(&ya, &yb)?)
}

/// Load `dir/alpha_<α>.poly`, checking it was fitted for α's effective value.
pub fn load_table_for(dir: &Path, alpha: f64) -> Result<PolyApprox, ExperimentError> {
    let path: PathBuf = dir.join(table_file_name(alpha));
    let table = PolyApprox::load(&path)?;
    let want = effective_alpha(alpha);
    if (table.alpha - want).abs() > 1e-12 {
        return Err(ExperimentError::Config(format!(
            "{}: table alpha {:?} does not match run alpha {want:?}",
            path.display(),
            table.alpha
        )));
    }
    Ok(table)
}

/// Tables for every α the configuration needs, keyed by `α.to_bits()`.
///
/// Sources in priority order: the single `table` file (only valid for one
/// α), `table_dir`, or in-process fitting with `n_mc` and `table_seed`.
/// In-process fits that miss the residual bound are kept with a warning.
pub fn tables_for_alphas(cfg: &RunConfig) -> Result<BTreeMap<u64, PolyApprox>, ExperimentError> {
    let mut out = BTreeMap::new();
    if !cfg.variants.iter().any(|v| v.is_variational()) {
        return Ok(out);
    }
    let mut alphas: Vec<f64> = Vec::new();
    for &a in &cfg.alphas {
        if !alphas.iter().any(|b| b.to_bits() == a.to_bits()) {
            alphas.push(a);
        }
    }
    if let Some(path) = &cfg.table {
        if alphas.len() != 1 {
            return Err(ExperimentError::Config("a single table file needs exactly one alpha".into()));
        }
        let table = PolyApprox::load(path)?;
        let want = effective_alpha(alphas[0]);
        if (table.alpha - want).abs() > 1e-12 {
            return Err(ExperimentError::Config(format!(
                "table alpha {:?} does not match run alpha {want:?}",
                table.alpha
            )));
        }
        out.insert(alphas[0].to_bits(), table);
        return Ok(out);
    }
    if let Some(dir) = &cfg.table_dir {
        for &a in &alphas {
            out.insert(a.to_bits(), load_table_for(dir, a)?);
        }
        return Ok(out);
    }
    let reports = fit_poly_tables(&alphas, cfg.n_mc, cfg.table_seed, cfg.max_rel_rmse)?;
    for (&alpha, report) in alphas.iter().zip(reports) {
        if !report.within_bound {
            warn!(
                "alpha {alpha:?}: fit RMSE {:.4} exceeds {:.4} ({}% of the sampled range); training with it anyway",
                report.approx.fit_rmse,
                report.bound,
                cfg.max_rel_rmse * 100.0
            );
        }
        out.insert(alpha.to_bits(), report.approx);
    }
    Ok(out)
}
