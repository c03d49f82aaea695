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

//! Flat `key = value` run configuration.
//!
//! Files hold one assignment per line; `#` starts a comment. List-valued
//! keys take comma-separated values. Command-line flags are applied on top
//! through [`RunConfig::set`], so both paths share one parser.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::ExperimentError;
use crate::divergence::table::{DEFAULT_MAX_REL_RMSE, DEFAULT_MC_SAMPLES};
use crate::net::{Variant, DEFAULT_INIT_RATE, RATE_MAX, RATE_MIN};
use crate::optim::OptimizerKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    Mnist,
    /// Separable Gaussian blobs; no files needed.
    Synthetic,
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mnist" => Ok(DatasetKind::Mnist),
            "synthetic" => Ok(DatasetKind::Synthetic),
            _ => Err(format!("unknown dataset {s:?}")),
        }
    }
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::Synthetic => "synthetic",
        })
    }
}

/// How training-mode passes draw their dropout noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseMode {
    Sample,
    /// Noise pinned at its mean; a diagnostic that turns every variant into
    /// its deterministic network.
    Zero,
}

impl FromStr for NoiseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sample" => Ok(NoiseMode::Sample),
            "zero" => Ok(NoiseMode::Zero),
            _ => Err(format!("unknown noise mode {s:?}")),
        }
    }
}

impl std::fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseMode::Sample => "sample",
            NoiseMode::Zero => "zero",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub dim: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            classes: 4,
            dim: 20,
            train: 1000,
            validation: 200,
            test: 200,
            seed: 0,
        }
    }
}

/// Everything a `train` or `sweep` invocation needs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub variants: Vec<Variant>,
    pub alphas: Vec<f64>,
    pub hidden_sizes: Vec<usize>,
    /// Hidden layers per network, each of the cell's hidden size.
    pub depth: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    /// First seed; sweeps use `seed, seed + 1, …`.
    pub seed: u64,
    pub seeds: usize,
    pub patience: usize,
    pub train_a: bool,
    pub init_a: f64,
    pub noise: NoiseMode,
    pub eval_every: bool,
    pub dataset: DatasetKind,
    pub data_dir: Option<PathBuf>,
    pub train_limit: Option<usize>,
    pub synthetic: SyntheticConfig,
    /// Prebuilt table for a single-α run.
    pub table: Option<PathBuf>,
    /// Directory of `fit-poly` outputs, looked up per α.
    pub table_dir: Option<PathBuf>,
    pub n_mc: usize,
    pub table_seed: u64,
    pub max_rel_rmse: f64,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            variants: vec![Variant::VarA],
            alphas: vec![0.1, 0.5, 0.95, 0.99, 2.0, 10.0],
            hidden_sizes: vec![64, 128, 256, 512],
            depth: 2,
            epochs: 20,
            batch_size: 128,
            lr: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            seeds: 5,
            patience: 5,
            train_a: true,
            init_a: DEFAULT_INIT_RATE,
            noise: NoiseMode::Sample,
            eval_every: false,
            dataset: DatasetKind::Mnist,
            data_dir: None,
            train_limit: None,
            synthetic: SyntheticConfig::default(),
            table: None,
            table_dir: None,
            n_mc: DEFAULT_MC_SAMPLES,
            table_seed: 0,
            max_rel_rmse: DEFAULT_MAX_REL_RMSE,
            jobs: 1,
            out: None,
            checkpoint: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ExperimentError> {
    value
        .trim()
        .parse()
        .map_err(|_| ExperimentError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ExperimentError> {
    let items: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(ExperimentError::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ExperimentError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ExperimentError::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, ExperimentError> {
    match value.trim() {
        "" | "none" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn show<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| "none".to_string(), |p| p.display().to_string())
}

impl RunConfig {
    /// Parse a config file on top of the defaults.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ExperimentError> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| ExperimentError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    /// Assign one key. Scalar aliases (`variant`, `alpha`) set one-element lists.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        match key.replace('-', "_").as_str() {
            "variant" | "variants" => {
                self.variants = parse_list(key, value)?;
            }
            "alpha" | "alphas" => self.alphas = parse_list(key, value)?,
            "hidden" | "hidden_sizes" => self.hidden_sizes = parse_list(key, value)?,
            "depth" => self.depth = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch" | "batch_size" => self.batch_size = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "optimizer" => self.optimizer = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "seeds" => self.seeds = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "train_a" => self.train_a = parse_bool(key, value)?,
            "init_a" => self.init_a = parse(key, value)?,
            "noise" => self.noise = parse(key, value)?,
            "eval_every" => self.eval_every = parse_bool(key, value)?,
            "dataset" => self.dataset = parse(key, value)?,
            "data_dir" => self.data_dir = optional(key, value)?,
            "train_limit" => self.train_limit = optional(key, value)?,
            "synthetic_classes" => self.synthetic.classes = parse(key, value)?,
            "synthetic_dim" => self.synthetic.dim = parse(key, value)?,
            "synthetic_train" => self.synthetic.train = parse(key, value)?,
            "synthetic_validation" => self.synthetic.validation = parse(key, value)?,
            "synthetic_test" => self.synthetic.test = parse(key, value)?,
            "synthetic_seed" => self.synthetic.seed = parse(key, value)?,
            "table" => self.table = optional(key, value)?,
            "table_dir" => self.table_dir = optional(key, value)?,
            "n_mc" => self.n_mc = parse(key, value)?,
            "table_seed" => self.table_seed = parse(key, value)?,
            "max_rel_rmse" => self.max_rel_rmse = parse(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            "out" => self.out = optional(key, value)?,
            "checkpoint" => self.checkpoint = optional(key, value)?,
            _ => return Err(ExperimentError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if let Some(a) = self.alphas.iter().find(|a| !a.is_finite() || **a < 0.0) {
            return bad(format!("alpha must be finite and >= 0, got {a}"));
        }
        if self.variants.is_empty() || self.alphas.is_empty() || self.hidden_sizes.is_empty() {
            return bad("variants, alphas and hidden sizes must be non-empty".into());
        }
        if self.hidden_sizes.contains(&0) {
            return bad("hidden sizes must be positive".into());
        }
        for v in &self.variants {
            if let Variant::Bernoulli { p } = v {
                if !(0.0..1.0).contains(p) {
                    return bad(format!("Bernoulli rate must lie in [0, 1), got {p}"));
                }
            }
        }
        if self.epochs == 0 || self.batch_size == 0 || self.seeds == 0 || self.jobs == 0 {
            return bad("epochs, batch, seeds and jobs must be positive".into());
        }
        if self.patience == 0 {
            return bad("patience must be positive".into());
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(RATE_MIN..=RATE_MAX).contains(&self.init_a) {
            return bad(format!("init_a must lie in [{RATE_MIN}, {RATE_MAX}], got {}", self.init_a));
        }
        if self.n_mc == 0 {
            return bad("n_mc must be positive".into());
        }
        if self.dataset == DatasetKind::Mnist && self.data_dir.is_none() {
            return bad("MNIST runs need data_dir".into());
        }
        if self.dataset == DatasetKind::Synthetic
            && (self.synthetic.classes < 2 || self.synthetic.dim < self.synthetic.classes)
        {
            return bad("synthetic data needs 2 <= classes <= dim".into());
        }
        Ok(())
    }

    /// Every setting as `(key, value)` in a fixed order, for provenance
    /// headers. Feeding these pairs back through [`set`](Self::set)
    /// reproduces the config.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("variants", join(&self.variants)),
            ("alphas", self.alphas.iter().map(|a| format!("{a:?}")).collect::<Vec<_>>().join(",")),
            ("hidden_sizes", join(&self.hidden_sizes)),
            ("depth", self.depth.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("lr", format!("{:?}", self.lr)),
            ("optimizer", self.optimizer.to_string()),
            ("seed", self.seed.to_string()),
            ("seeds", self.seeds.to_string()),
            ("patience", self.patience.to_string()),
            ("train_a", self.train_a.to_string()),
            ("init_a", format!("{:?}", self.init_a)),
            ("noise", self.noise.to_string()),
            ("eval_every", self.eval_every.to_string()),
            ("dataset", self.dataset.to_string()),
            ("data_dir", show_path(&self.data_dir)),
            ("train_limit", show(&self.train_limit)),
            ("synthetic_classes", self.synthetic.classes.to_string()),
            ("synthetic_dim", self.synthetic.dim.to_string()),
            ("synthetic_train", self.synthetic.train.to_string()),
            ("synthetic_validation", self.synthetic.validation.to_string()),
            ("synthetic_test", self.synthetic.test.to_string()),
            ("synthetic_seed", self.synthetic.seed.to_string()),
            ("table", show_path(&self.table)),
            ("table_dir", show_path(&self.table_dir)),
            ("n_mc", self.n_mc.to_string()),
            ("table_seed", self.table_seed.to_string()),
            ("max_rel_rmse", format!("{:?}", self.max_rel_rmse)),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.to_pairs() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_with_synthetic_data() {
        let cfg = RunConfig {
            dataset: DatasetKind::Synthetic,
            ..RunConfig::default()
        };
        cfg.validate().unwrap();
        assert!(RunConfig::default().validate().is_err(), "MNIST without data_dir");
    }

    #[test]
    fn file_syntax() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# comment\nalpha = 0.5, 2\n\nvariant=varB  # trailing\nfreeze-me = 1\n")
            .unwrap_err();
        cfg.apply_text("alpha = 0.5, 2\nvariant=varB\ntrain-a = no\ndata_dir = /tmp/x\n")
            .unwrap();
        assert_eq!(cfg.alphas, vec![0.5, 2.0]);
        assert_eq!(cfg.variants, vec![Variant::VarB]);
        assert!(!cfg.train_a);
        assert_eq!(cfg.data_dir.as_deref(), Some(Path::new("/tmp/x")));
        assert!(cfg.apply_text("epochs 3").is_err());
    }

    #[test]
    fn pairs_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.set("variant", "bernoulli:0.25,plain").unwrap();
        cfg.set("alpha", "0.1,1").unwrap();
        cfg.set("train_limit", "500").unwrap();
        cfg.set("lr", "0.0003").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, RunConfig { jobs: 1, out: None, checkpoint: None, ..cfg });
    }

    #[test]
    fn validation_errors() {
        let base = RunConfig {
            dataset: DatasetKind::Synthetic,
            ..RunConfig::default()
        };
        for (k, v) in [
            ("alpha", "-1"),
            ("epochs", "0"),
            ("init_a", "2"),
            ("hidden", "0"),
            ("variant", "bernoulli:1.0"),
            ("lr", "0"),
        ] {
            let mut c = base.clone();
            c.set(k, v).unwrap();
            assert!(c.validate().is_err(), "{k} = {v}");
        }
    }
}
