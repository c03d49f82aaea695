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

use std::time::Instant;

use log::{debug, info};

use super::config::{DatasetKind, NoiseMode, RunConfig};
use super::ExperimentError;
use crate::data::{batches, load_mnist, make_synthetic_with, BatchPlan, Dataset, SyntheticSpec, MNIST_CLASSES};
use crate::divergence::{effective_alpha, PolyApprox};
use crate::math::RngStream;
use crate::net::{alpha_elbo_with_grads, Architecture, NetError, Network, NetworkNoise, Variant};
use crate::optim::{EarlyStopper, Optimizer, StopDecision, StopMode};

/// Train / validation / test splits shared read-only by every run.
#[derive(Clone, Debug)]
pub struct DataBundle {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub classes: usize,
}

pub fn load_data(cfg: &RunConfig) -> Result<DataBundle, ExperimentError> {
    match cfg.dataset {
        DatasetKind::Mnist => {
            let dir = cfg
                .data_dir
                .as_ref()
                .ok_or_else(|| ExperimentError::Config("MNIST runs need data_dir".into()))?;
            let s = load_mnist(dir, cfg.train_limit)?;
            Ok(DataBundle {
                train: s.train,
                validation: s.validation,
                test: s.test,
                classes: MNIST_CLASSES,
            })
        }
        DatasetKind::Synthetic => {
            let syn = &cfg.synthetic;
            let split = |n: usize, offset: u64| {
                make_synthetic_with(&SyntheticSpec::new(syn.classes, n, syn.dim, syn.seed.wrapping_add(offset)))
            };
            let train = split(syn.train, 0)?;
            Ok(DataBundle {
                train: cfg.train_limit.map_or_else(|| train.clone(), |l| train.take(l)),
                validation: split(syn.validation, 1)?,
                test: split(syn.test, 2)?,
                classes: syn.classes,
            })
        }
    }
}

/// One (variant, α, hidden size, seed) training run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSpec {
    pub variant: Variant,
    pub alpha: f64,
    pub hidden: usize,
    pub seed: u64,
}

pub fn run_id(spec: &RunSpec) -> String {
    format!("{}-a{:?}-h{}-s{}", spec.variant, spec.alpha, spec.hidden, spec.seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-example negative log-likelihood over the epoch's batches.
    pub train_nll: f64,
    /// Mean over batches of the minibatch negative α-ELBO.
    pub neg_elbo: f64,
    pub div_penalty: f64,
    /// Dropout rate of each variational layer after the epoch.
    pub a_values: Vec<f64>,
    pub val_error: f64,
    pub train_error: Option<f64>,
    pub test_error: Option<f64>,
    /// Parameters of this epoch were kept as the final model.
    pub selected: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub records: Vec<EpochRecord>,
    /// Best-validation parameters.
    pub network: Network,
    pub selected_epoch: usize,
    pub train_error: f64,
    pub test_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalMetrics {
    pub n: usize,
    pub error: f64,
    pub accuracy: f64,
}

const EVAL_CHUNK: usize = 2000;

/// Deterministic classification error of `net` on `data`.
pub fn evaluate(net: &Network, data: &Dataset) -> Result<EvalMetrics, ExperimentError> {
    if data.is_empty() {
        return Err(ExperimentError::Config("evaluation set is empty".into()));
    }
    let mut wrong = 0usize;
    let mut start = 0;
    while start < data.len() {
        let end = (start + EVAL_CHUNK).min(data.len());
        let pred = net.predict(&data.images().slice_rows(start, end))?;
        wrong += pred
            .iter()
            .zip(&data.labels()[start..end])
            .filter(|(p, y)| p != y)
            .count();
        start = end;
    }
    let error = wrong as f64 / data.len() as f64;
    Ok(EvalMetrics {
        n: data.len(),
        error,
        accuracy: 1.0 - error,
    })
}

/// Train one network with minibatch α-ELBO, early-stopping on validation
/// error, and return the best-validation parameters.
///
/// Streams derive from the seed alone: `split(0)` initializes, `split(1)`
/// orders batches, `split(2)` draws dropout noise.
pub fn train_run(
    cfg: &RunConfig,
    spec: &RunSpec,
    data: &DataBundle,
    table: Option<&PolyApprox>,
) -> Result<RunOutcome, ExperimentError> {
    let id = run_id(spec);
    if data.train.is_empty() {
        return Err(ExperimentError::Config("training set is empty".into()));
    }
    if spec.variant.is_variational() {
        let want = effective_alpha(spec.alpha);
        match table {
            None => return Err(ExperimentError::Config(format!("{id}: variational runs need a divergence table"))),
            Some(t) if (t.alpha - want).abs() > 1e-12 => {
                return Err(ExperimentError::Config(format!(
                    "{id}: table was fitted for alpha {:?}, run needs {want:?}",
                    t.alpha
                )))
            }
            Some(_) => {}
        }
    }
    let started = Instant::now();
    let root = RngStream::new(spec.seed);
    let mut init_rng = root.split(0);
    let mut order_rng = root.split(1);
    let mut noise_rng = root.split(2);

    let arch = Architecture {
        init_rate: cfg.init_a,
        ..Architecture::new(data.train.dim(), vec![spec.hidden; cfg.depth], data.classes, spec.variant)
    };
    let mut net = Network::new(&arch, spec.alpha, &mut init_rng)?;
    let mut opt = Optimizer::from_kind(cfg.optimizer, cfg.lr, cfg.train_a)?;
    let mut stopper = EarlyStopper::new(cfg.patience, StopMode::Min);
    // Without a validation split, early stopping watches training error.
    let watch = if data.validation.is_empty() { &data.train } else { &data.validation };

    let mut records: Vec<EpochRecord> = Vec::new();
    let mut best = (net.clone(), 0usize);

    for epoch in 1..=cfg.epochs {
        let plan = BatchPlan::shuffled(data.train.len(), cfg.batch_size, order_rng.next_u64());
        let (mut nll_sum, mut elbo_sum, mut pen_sum) = (0.0, 0.0, 0.0);
        let n_batches = plan.batch_count();
        for (b, batch) in batches(&data.train, &plan).enumerate() {
            let noise = match cfg.noise {
                NoiseMode::Sample => NetworkNoise::Sample(&mut noise_rng),
                NoiseMode::Zero => NetworkNoise::Zero,
            };
            let (logits, caches) = net.forward_train(&batch.x, noise)?;
            let elbo = alpha_elbo_with_grads(
                &logits,
                &batch.y,
                batch.n_total,
                batch.batch_size,
                net.layers(),
                spec.alpha,
                table,
            )
            .map_err(|e| match e {
                NetError::NonFinite(_) => ExperimentError::Diverged {
                    run: id.clone(),
                    epoch,
                    batch: b,
                    detail: format!("{e}; rates {:?}", net.rates()),
                },
                other => other.into(),
            })?;
            let mut grads = net.backward(&caches, &elbo.d_logits)?;
            for (g, d) in grads.iter_mut().zip(&elbo.d_log_a) {
                g.log_a += d;
            }
            opt.step(&mut net, &grads)?;
            let br = elbo.breakdown;
            nll_sum += br.nll * batch.batch_size as f64;
            elbo_sum += br.neg_elbo;
            pen_sum += br.div_penalty;
        }
        let val_error = evaluate(&net, watch)?.error;
        let (train_error, test_error) = if cfg.eval_every {
            (
                Some(evaluate(&net, &data.train)?.error),
                non_empty_error(&net, &data.test)?,
            )
        } else {
            (None, None)
        };
        let record = EpochRecord {
            epoch,
            train_nll: nll_sum / data.train.len() as f64,
            neg_elbo: elbo_sum / n_batches as f64,
            div_penalty: pen_sum / n_batches as f64,
            a_values: variational_rates(&net),
            val_error,
            train_error,
            test_error,
            selected: false,
        };
        debug!("{id} epoch {epoch}: {record:?}");
        records.push(record);
        match stopper.update(val_error) {
            StopDecision::Improved => best = (net.clone(), epoch),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                info!("{id}: early stop at epoch {epoch}, best epoch {}", best.1);
                break;
            }
        }
    }

    let (net, selected_epoch) = best;
    let train_error = evaluate(&net, &data.train)?.error;
    let test_error = non_empty_error(&net, &data.test)?;
    let row = &mut records[selected_epoch - 1];
    row.selected = true;
    row.train_error = Some(train_error);
    row.test_error = test_error;
    info!(
        "{id}: selected epoch {selected_epoch}, test error {:?}, wall time {:.1}s",
        test_error,
        started.elapsed().as_secs_f64()
    );
    Ok(RunOutcome {
        spec: *spec,
        records,
        network: net,
        selected_epoch,
        train_error,
        test_error: test_error.unwrap_or(f64::NAN),
    })
}

fn non_empty_error(net: &Network, data: &Dataset) -> Result<Option<f64>, ExperimentError> {
    if data.is_empty() {
        Ok(None)
    } else {
        Ok(Some(evaluate(net, data)?.error))
    }
}

fn variational_rates(net: &Network) -> Vec<f64> {
    net.layers()
        .iter()
        .filter(|l| l.variant.is_variational())
        .map(|l| l.rate().0)
        .collect()
}
