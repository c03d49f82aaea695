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

//! Experiment plumbing: configuration, single training runs, sweeps over
//! (variant, α, hidden size, seed), divergence-table fitting and CSV output.

mod config;
mod report;
mod sweep;
mod tables;
mod train;

use thiserror::Error;

use crate::data::DataError;
use crate::divergence::{DivergenceError, TableError};
use crate::math::MathError;
use crate::net::NetError;
use crate::optim::OptimError;

pub use config::{DatasetKind, NoiseMode, RunConfig, SyntheticConfig};
pub use report::{aggregate_rows, write_csv, CsvRow, RowKind, CSV_COLUMNS};
pub use sweep::{run_sweep, SweepOutcome};
pub use tables::{
    fit_poly_tables, load_table_for, shape_correlation, table_file_name, tables_for_alphas,
    FitReport,
};
pub use train::{
    evaluate, load_data, run_id, train_run, DataBundle, EpochRecord, EvalMetrics, RunOutcome,
    RunSpec,
};

/// Process exit codes of the command-line tool.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const NUMERICAL: i32 = 2;
    pub const PARTIAL_SWEEP: i32 = 3;
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("non-finite training loss in run {run} at epoch {epoch}, batch {batch}: {detail}")]
    Diverged {
        run: String,
        epoch: usize,
        batch: usize,
        detail: String,
    },
    #[error("{failed} of {total} sweep runs failed")]
    PartialSweep { failed: usize, total: usize },
    #[error("{0}")]
    Io(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        use exit_code::*;
        match self {
            ExperimentError::Config(_) | ExperimentError::Data(_) | ExperimentError::Io(_) => USAGE,
            ExperimentError::Table(TableError::Io(_) | TableError::Parse { .. }) => USAGE,
            ExperimentError::Net(NetError::Io(_) | NetError::Checkpoint { .. }) => USAGE,
            ExperimentError::Net(NetError::TableAlphaMismatch { .. } | NetError::MissingTable) => USAGE,
            ExperimentError::PartialSweep { .. } => PARTIAL_SWEEP,
            _ => NUMERICAL,
        }
    }
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}

impl From<csv::Error> for ExperimentError {
    fn from(e: csv::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}
