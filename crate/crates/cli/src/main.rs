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

//! `alphadrop`: fit divergence tables, train variational-dropout networks,
//! run sweeps and evaluate checkpoints.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure (including a table that misses its residual bound), 3 some sweep
//! runs failed.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alphadrop::data::Dataset;
use alphadrop::divergence::production_grid;
use alphadrop::experiment::{
    evaluate, exit_code, fit_poly_tables, load_data, run_sweep, shape_correlation, table_file_name,
    tables_for_alphas, train_run, write_csv, CsvRow, ExperimentError, RunConfig, RunSpec,
};
use alphadrop::net::Network;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

#[derive(Parser)]
#[command(name = "alphadrop", version, about = "Variational dropout with Rényi α-divergence penalties")]
struct Cli {
    /// More log output (-v info, -vv debug). `RUST_LOG` overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one cubic divergence table per α.
    FitPoly(FitPolyArgs),
    /// Train a single network.
    Train(RunArgs),
    /// Train every (variant, α, hidden, seed) combination and aggregate.
    Sweep(RunArgs),
    /// Evaluate a checkpoint.
    Eval(EvalArgs),
}

#[derive(Args)]
struct FitPolyArgs {
    /// Comma-separated α values.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    alpha: Vec<f64>,
    /// Monte-Carlo samples per grid point.
    #[arg(long, default_value_t = 100_000)]
    n_mc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Allowed fit RMSE as a fraction of the sampled curve's range.
    #[arg(long, default_value_t = 0.02)]
    max_rel_rmse: f64,
    /// Output directory for `alpha_<α>.poly` files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Flags shared by `train` and `sweep`; each one overrides the matching
/// config-file key.
#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// plain, bernoulli[:p], varA or varB (comma list for sweeps).
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    /// Number of hidden layers.
    #[arg(long)]
    depth: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    /// adam or sgd.
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Seeds per sweep cell.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    patience: Option<String>,
    #[arg(long, conflicts_with = "freeze_a")]
    train_a: bool,
    #[arg(long)]
    freeze_a: bool,
    /// Initial dropout rate a.
    #[arg(long)]
    init_a: Option<String>,
    /// sample, or zero to pin all noise at its mean.
    #[arg(long)]
    noise: Option<String>,
    /// Report train/test error after every epoch.
    #[arg(long)]
    eval_every: bool,
    /// mnist or synthetic.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    data_dir: Option<String>,
    /// Keep only the first N training images.
    #[arg(long)]
    train_limit: Option<String>,
    /// Prebuilt table for a single α.
    #[arg(long)]
    table: Option<String>,
    /// Directory of `fit-poly` outputs.
    #[arg(long)]
    table_dir: Option<String>,
    /// Monte-Carlo samples per grid point for in-process tables.
    #[arg(long)]
    n_mc: Option<String>,
    #[arg(long)]
    table_seed: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    /// CSV destination (stdout if absent).
    #[arg(long)]
    out: Option<String>,
    /// Checkpoint path for `train` (default: `<out>.ckpt`).
    #[arg(long)]
    checkpoint: Option<String>,
    /// Extra `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: Split,
    /// Config file describing the dataset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    data_dir: Option<String>,
    #[arg(long)]
    train_limit: Option<String>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn apply_overrides(
    cfg: &mut RunConfig,
    pairs: &[(&str, &Option<String>)],
    extra: &[String],
) -> Result<(), ExperimentError> {
    for (key, value) in pairs {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    for kv in extra {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ExperimentError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(())
}

fn build_config(args: &RunArgs) -> Result<RunConfig, ExperimentError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    apply_overrides(
        &mut cfg,
        &[
            ("variant", &args.variant),
            ("alpha", &args.alpha),
            ("hidden", &args.hidden),
            ("depth", &args.depth),
            ("epochs", &args.epochs),
            ("batch", &args.batch),
            ("lr", &args.lr),
            ("optimizer", &args.optimizer),
            ("seed", &args.seed),
            ("seeds", &args.seeds),
            ("patience", &args.patience),
            ("init_a", &args.init_a),
            ("noise", &args.noise),
            ("dataset", &args.dataset),
            ("data_dir", &args.data_dir),
            ("train_limit", &args.train_limit),
            ("table", &args.table),
            ("table_dir", &args.table_dir),
            ("n_mc", &args.n_mc),
            ("table_seed", &args.table_seed),
            ("jobs", &args.jobs),
            ("out", &args.out),
            ("checkpoint", &args.checkpoint),
        ],
        &args.set,
    )?;
    if args.train_a {
        cfg.train_a = true;
    }
    if args.freeze_a {
        cfg.train_a = false;
    }
    if args.eval_every {
        cfg.eval_every = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, ExperimentError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            ExperimentError::Io(format!("{}: {e}", p.display()))
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_fit_poly(args: &FitPolyArgs) -> Result<i32, ExperimentError> {
    if args.alpha.is_empty() {
        return Err(ExperimentError::Config("at least one --alpha is required".into()));
    }
    if !(args.max_rel_rmse.is_finite() && args.max_rel_rmse > 0.0) {
        return Err(ExperimentError::Config("--max-rel-rmse must be positive".into()));
    }
    if args.n_mc == 0 {
        return Err(ExperimentError::Config("--n-mc must be positive".into()));
    }
    fs::create_dir_all(&args.out)?;
    let reports = fit_poly_tables(&args.alpha, args.n_mc, args.seed, args.max_rel_rmse)?;
    let mut violated = false;
    println!("alpha,table_alpha,fit_rmse,curve_range,bound,status,file");
    for (&alpha, r) in args.alpha.iter().zip(&reports) {
        let path = args.out.join(table_file_name(alpha));
        r.approx.save(&path)?;
        violated |= !r.within_bound;
        println!(
            "{alpha:?},{:?},{:?},{:?},{:?},{},{}",
            r.approx.alpha,
            r.approx.fit_rmse,
            r.curve_range,
            r.bound,
            if r.within_bound { "ok" } else { "exceeds-bound" },
            path.display()
        );
    }
    if reports.len() > 1 {
        let grid = production_grid();
        println!();
        println!("alpha_x,alpha_y,shape_correlation");
        for i in 0..reports.len() {
            for j in i + 1..reports.len() {
                let rho = shape_correlation(&reports[i].approx, &reports[j].approx, &grid)?;
                println!("{:?},{:?},{rho:?}", args.alpha[i], args.alpha[j]);
            }
        }
    }
    if violated {
        warn!("at least one table exceeds the residual bound; files were written anyway");
        return Ok(exit_code::NUMERICAL);
    }
    Ok(exit_code::SUCCESS)
}

fn cmd_train(args: &RunArgs) -> Result<i32, ExperimentError> {
    let cfg = build_config(args)?;
    if cfg.variants.len() != 1 || cfg.alphas.len() != 1 || cfg.hidden_sizes.len() != 1 {
        return Err(ExperimentError::Config(
            "train takes one variant, one alpha and one hidden size; use sweep for lists".into(),
        ));
    }
    let spec = RunSpec {
        variant: cfg.variants[0],
        alpha: cfg.alphas[0],
        hidden: cfg.hidden_sizes[0],
        seed: cfg.seed,
    };
    let data = load_data(&cfg)?;
    let tables = tables_for_alphas(&cfg)?;
    let outcome = train_run(&cfg, &spec, &data, tables.get(&spec.alpha.to_bits()))?;
    write_csv(output(cfg.out.as_deref())?, &cfg.to_pairs(), &CsvRow::from_outcome(&outcome))?;
    let ckpt = cfg
        .checkpoint
        .clone()
        .or_else(|| cfg.out.as_ref().map(|o| o.with_extension("ckpt")));
    if let Some(path) = ckpt {
        outcome.network.save(&path)?;
        info!("checkpoint written to {}", path.display());
    }
    eprintln!(
        "selected epoch {}: train error {:?}, test error {:?}",
        outcome.selected_epoch, outcome.train_error, outcome.test_error
    );
    Ok(exit_code::SUCCESS)
}

fn cmd_sweep(args: &RunArgs) -> Result<i32, ExperimentError> {
    let cfg = build_config(args)?;
    let data = load_data(&cfg)?;
    let tables = tables_for_alphas(&cfg)?;
    let outcome = run_sweep(&cfg, &data, &tables)?;
    write_csv(output(cfg.out.as_deref())?, &cfg.to_pairs(), &outcome.rows)?;
    if !outcome.failures.is_empty() {
        let err = ExperimentError::PartialSweep {
            failed: outcome.failures.len(),
            total: outcome.total_runs,
        };
        eprintln!("error: {err}");
        return Ok(err.exit_code());
    }
    Ok(exit_code::SUCCESS)
}

fn cmd_eval(args: &EvalArgs) -> Result<i32, ExperimentError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    apply_overrides(
        &mut cfg,
        &[
            ("dataset", &args.dataset),
            ("data_dir", &args.data_dir),
            ("train_limit", &args.train_limit),
        ],
        &args.set,
    )?;
    let net = Network::load(&args.checkpoint)?;
    let data = load_data(&cfg)?;
    let (name, set): (&str, &Dataset) = match args.split {
        Split::Train => ("train", &data.train),
        Split::Validation => ("validation", &data.validation),
        Split::Test => ("test", &data.test),
    };
    if set.dim() != net.input_dim() && !set.is_empty() {
        return Err(ExperimentError::Config(format!(
            "checkpoint expects {} inputs, data has {}",
            net.input_dim(),
            set.dim()
        )));
    }
    let m = evaluate(&net, set)?;
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "split,n,error,accuracy")?;
    writeln!(out, "{name},{},{:?},{:?}", m.n, m.error, m.accuracy)?;
    out.flush()?;
    Ok(exit_code::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit_code::USAGE as u8 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::FitPoly(a) => cmd_fit_poly(a),
        Command::Train(a) => cmd_train(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
