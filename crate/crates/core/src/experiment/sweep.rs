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

use log::{error, info};
use rayon::prelude::*;

use super::config::RunConfig;
use super::report::{aggregate_rows, CsvRow};
use super::train::{run_id, train_run, DataBundle, RunSpec};
use super::ExperimentError;
use crate::divergence::PolyApprox;

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    /// Run rows in (variant, α, hidden, seed) order, then aggregate rows.
    pub rows: Vec<CsvRow>,
    pub total_runs: usize,
    pub failures: Vec<(RunSpec, String)>,
}

impl SweepOutcome {
    pub fn aggregates(&self) -> impl Iterator<Item = &CsvRow> {
        self.rows.iter().filter(|r| r.kind == super::RowKind::Aggregate)
    }
}

fn run_specs(cfg: &RunConfig) -> Vec<RunSpec> {
    let mut specs = Vec::new();
    for &variant in &cfg.variants {
        for &alpha in &cfg.alphas {
            for &hidden in &cfg.hidden_sizes {
                for k in 0..cfg.seeds as u64 {
                    specs.push(RunSpec {
                        variant,
                        alpha,
                        hidden,
                        seed: cfg.seed.wrapping_add(k),
                    });
                }
            }
        }
    }
    specs
}

/// Train every (variant, α, hidden, seed) combination on up to `cfg.jobs`
/// threads. Individual failures are recorded, not propagated.
pub fn run_sweep(
    cfg: &RunConfig,
    data: &DataBundle,
    tables: &BTreeMap<u64, PolyApprox>,
) -> Result<SweepOutcome, ExperimentError> {
    cfg.validate()?;
    let specs = run_specs(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
    info!("sweep: {} runs on {} threads", specs.len(), cfg.jobs);
    let results: Vec<Result<Vec<CsvRow>, String>> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let table = tables.get(&spec.alpha.to_bits());
                train_run(cfg, spec, data, table)
                    .map(|o| CsvRow::from_outcome(&o))
                    .map_err(|e| {
                        error!("{}: {e}", run_id(spec));
                        e.to_string()
                    })
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (spec, result) in specs.iter().zip(results) {
        match result {
            Ok(r) => rows.extend(r),
            Err(msg) => {
                rows.push(CsvRow::failed(spec, &msg));
                failures.push((*spec, msg));
            }
        }
    }
    let aggregates = aggregate_rows(&rows);
    rows.extend(aggregates);
    Ok(SweepOutcome {
        rows,
        total_runs: specs.len(),
        failures,
    })
}
