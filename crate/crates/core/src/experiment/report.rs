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

//! CSV output.
//!
//! A file starts with `# key=value` provenance lines (the full run
//! configuration), followed by a fixed header, [`CSV_COLUMNS`]. Reals are
//! printed in shortest round-trip form with `.` as the decimal point.
//! Errors are fractions in `[0, 1]`. Multi-valued `a_values` use `;`.
//!
//! Row kinds:
//! - `run`: one per (run, epoch); test metrics only on the `selected` row
//!   unless every epoch is evaluated.
//! - `aggregate`: one per (variant, α, hidden) cell; mean and sample
//!   standard deviation of the selected rows over successful seeds.
//! - `failed`: a run that aborted; `error` carries the message.

use std::io::Write;

use super::train::{EpochRecord, RunOutcome, RunSpec};
use super::ExperimentError;
use crate::net::Variant;

pub const CSV_COLUMNS: [&str; 20] = [
    "kind",
    "run_id",
    "variant",
    "alpha",
    "hidden",
    "seed",
    "epoch",
    "selected",
    "train_nll",
    "neg_elbo",
    "div_penalty",
    "a_values",
    "val_error",
    "train_error",
    "test_error",
    "test_accuracy",
    "test_error_std",
    "test_accuracy_std",
    "n_runs",
    "error",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Run,
    Aggregate,
    Failed,
}

impl RowKind {
    fn as_str(self) -> &'static str {
        match self {
            RowKind::Run => "run",
            RowKind::Aggregate => "aggregate",
            RowKind::Failed => "failed",
        }
    }
}

/// One CSV line; `None` renders as an empty field.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub kind: RowKind,
    pub run_id: String,
    pub variant: Variant,
    pub alpha: f64,
    pub hidden: usize,
    pub seed: Option<u64>,
    pub epoch: Option<usize>,
    pub selected: Option<bool>,
    pub train_nll: Option<f64>,
    pub neg_elbo: Option<f64>,
    pub div_penalty: Option<f64>,
    pub a_values: Vec<f64>,
    pub val_error: Option<f64>,
    pub train_error: Option<f64>,
    pub test_error: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub test_error_std: Option<f64>,
    pub test_accuracy_std: Option<f64>,
    pub n_runs: Option<usize>,
    pub error: Option<String>,
}

fn real(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl CsvRow {
    fn blank(kind: RowKind, run_id: String, spec: &RunSpec) -> Self {
        Self {
            kind,
            run_id,
            variant: spec.variant,
            alpha: spec.alpha,
            hidden: spec.hidden,
            seed: None,
            epoch: None,
            selected: None,
            train_nll: None,
            neg_elbo: None,
            div_penalty: None,
            a_values: Vec::new(),
            val_error: None,
            train_error: None,
            test_error: None,
            test_accuracy: None,
            test_error_std: None,
            test_accuracy_std: None,
            n_runs: None,
            error: None,
        }
    }

    pub fn from_epoch(spec: &RunSpec, record: &EpochRecord) -> Self {
        Self {
            seed: Some(spec.seed),
            epoch: Some(record.epoch),
            selected: Some(record.selected),
            train_nll: Some(record.train_nll),
            neg_elbo: Some(record.neg_elbo),
            div_penalty: Some(record.div_penalty),
            a_values: record.a_values.clone(),
            val_error: Some(record.val_error),
            train_error: record.train_error,
            test_error: record.test_error,
            test_accuracy: record.test_error.map(|e| 1.0 - e),
            ..Self::blank(RowKind::Run, super::run_id(spec), spec)
        }
    }

    /// All epoch rows of a finished run.
    pub fn from_outcome(outcome: &RunOutcome) -> Vec<Self> {
        outcome
            .records
            .iter()
            .map(|r| Self::from_epoch(&outcome.spec, r))
            .collect()
    }

    pub fn failed(spec: &RunSpec, message: &str) -> Self {
        Self {
            seed: Some(spec.seed),
            error: Some(message.to_string()),
            ..Self::blank(RowKind::Failed, super::run_id(spec), spec)
        }
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.kind.as_str().to_string(),
            self.run_id.clone(),
            self.variant.to_string(),
            format!("{:?}", self.alpha),
            self.hidden.to_string(),
            opt(self.seed),
            opt(self.epoch),
            opt(self.selected),
            real(self.train_nll),
            real(self.neg_elbo),
            real(self.div_penalty),
            self.a_values.iter().map(|a| format!("{a:?}")).collect::<Vec<_>>().join(";"),
            real(self.val_error),
            real(self.train_error),
            real(self.test_error),
            real(self.test_accuracy),
            real(self.test_error_std),
            real(self.test_accuracy_std),
            opt(self.n_runs),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One aggregate row per cell, in first-appearance order, computed from the
/// selected `run` rows. Cells with no successful run get `n_runs = 0`.
pub fn aggregate_rows(rows: &[CsvRow]) -> Vec<CsvRow> {
    let mut cells: Vec<(RunSpec, Vec<&CsvRow>)> = Vec::new();
    for r in rows.iter().filter(|r| r.kind != RowKind::Aggregate) {
        let key = RunSpec {
            variant: r.variant,
            alpha: r.alpha,
            hidden: r.hidden,
            seed: 0,
        };
        match cells.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => cells.push((key, vec![r])),
        }
    }
    cells
        .into_iter()
        .map(|(key, members)| {
            let selected: Vec<&CsvRow> = members
                .into_iter()
                .filter(|r| r.kind == RowKind::Run && r.selected == Some(true))
                .collect();
            let id = format!("{}-a{:?}-h{}", key.variant, key.alpha, key.hidden);
            let mut row = CsvRow::blank(RowKind::Aggregate, id, &key);
            row.n_runs = Some(selected.len());
            if selected.is_empty() {
                return row;
            }
            let col = |f: fn(&CsvRow) -> Option<f64>| -> Option<Vec<f64>> {
                selected.iter().map(|r| f(r)).collect()
            };
            if let Some(v) = col(|r| r.val_error) {
                row.val_error = Some(mean_std(&v).0);
            }
            if let Some(v) = col(|r| r.train_error) {
                row.train_error = Some(mean_std(&v).0);
            }
            if let Some(v) = col(|r| r.test_error) {
                let (m, s) = mean_std(&v);
                row.test_error = Some(m);
                row.test_error_std = Some(s);
            }
            if let Some(v) = col(|r| r.test_accuracy) {
                let (m, s) = mean_std(&v);
                row.test_accuracy = Some(m);
                row.test_accuracy_std = Some(s);
            }
            row
        })
        .collect()
}

/// Write provenance comments, the header and `rows`.
pub fn write_csv<W: Write>(
    out: W,
    provenance: &[(&str, String)],
    rows: &[CsvRow],
) -> Result<(), ExperimentError> {
    let mut out = out;
    for (k, v) in provenance {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(seed: u64) -> RunSpec {
        RunSpec {
            variant: Variant::VarB,
            alpha: 0.5,
            hidden: 8,
            seed,
        }
    }

    fn record(test_error: f64, selected: bool) -> EpochRecord {
        EpochRecord {
            epoch: 1,
            train_nll: 0.25,
            neg_elbo: 10.0,
            div_penalty: -1.5,
            a_values: vec![0.05, 0.1],
            val_error: 0.2,
            train_error: selected.then_some(0.1),
            test_error: selected.then_some(test_error),
            selected,
        }
    }

    #[test]
    fn aggregate_uses_selected_rows() {
        let rows = vec![
            CsvRow::from_epoch(&spec(0), &record(0.9, false)),
            CsvRow::from_epoch(&spec(0), &record(0.1, true)),
            CsvRow::from_epoch(&spec(1), &record(0.3, true)),
            CsvRow::failed(&spec(2), "boom"),
        ];
        let agg = aggregate_rows(&rows);
        assert_eq!(agg.len(), 1);
        let a = &agg[0];
        assert_eq!(a.n_runs, Some(2));
        assert!((a.test_error.unwrap() - 0.2).abs() < 1e-15);
        assert!((a.test_error_std.unwrap() - 0.02f64.sqrt()).abs() < 1e-15);
        assert!((a.test_accuracy.unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(a.run_id, "varB-a0.5-h8");
    }

    #[test]
    fn csv_layout() {
        let rows = vec![CsvRow::from_epoch(&spec(4), &record(0.125, true)), CsvRow::failed(&spec(5), "x, y")];
        let mut buf = Vec::new();
        write_csv(&mut buf, &[("alpha", "0.5".into())], &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# alpha=0.5");
        assert_eq!(lines[1], CSV_COLUMNS.join(","));
        assert_eq!(
            lines[2],
            "run,varB-a0.5-h8-s4,varB,0.5,8,4,1,true,0.25,10.0,-1.5,0.05;0.1,0.2,0.1,0.125,0.875,,,,"
        );
        assert!(lines[3].starts_with("failed,varB-a0.5-h8-s5,"));
        assert!(lines[3].ends_with("\"x, y\""));
    }
}
