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

use super::{NetError, VarDropLayer};
use crate::divergence::{effective_alpha, PolyApprox};
use crate::math::{MathError, Matrix};

/// Terms of the minibatch α-ELBO.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    /// Mean negative log-likelihood over the batch.
    pub nll: f64,
    /// `(N/M) Σ_batch ln p(y|x, w)`.
    pub ll_scaled: f64,
    /// `Σ_layers K·L · D_α(a_layer)` over variational layers.
    pub div_penalty: f64,
    /// `-ll_scaled + div_penalty`; minimized during training.
    pub neg_elbo: f64,
}

#[derive(Clone, Debug)]
pub struct ElboGrads {
    pub breakdown: LossBreakdown,
    /// `∂neg_elbo/∂logits`.
    pub d_logits: Matrix,
    /// `∂div_penalty/∂ln a` per layer (zero for non-variational layers).
    pub d_log_a: Vec<f64>,
}

/// Row-wise softmax with max shift.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean cross-entropy and its gradient `(softmax - onehot) / M`.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix), NetError> {
    let (m, classes) = logits.dims();
    if labels.len() != m {
        return Err(NetError::LabelCount(labels.len(), m));
    }
    if m == 0 {
        return Err(MathError::EmptyInput("softmax_cross_entropy").into());
    }
    let mut grad = softmax_rows(logits);
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= classes {
            return Err(NetError::LabelOutOfRange { label: y, classes });
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[y];
        grad.row_mut(i)[y] -= 1.0;
    }
    let inv_m = 1.0 / m as f64;
    grad.map_inplace(|g| g * inv_m);
    Ok((total * inv_m, grad))
}

/// Divergence penalty `Σ K·L·(-poly(a))` over variational layers and its
/// gradient with respect to each layer's `ln a`.
pub fn divergence_penalty(
    layers: &[VarDropLayer],
    alpha: f64,
    table: Option<&PolyApprox>,
) -> Result<(f64, Vec<f64>), NetError> {
    let mut penalty = 0.0;
    let mut grads = vec![0.0; layers.len()];
    for (layer, g) in layers.iter().zip(grads.iter_mut()) {
        if !layer.variant.is_variational() {
            continue;
        }
        let table = table.ok_or(NetError::MissingTable)?;
        let run = effective_alpha(alpha);
        if (table.alpha - run).abs() > 1e-12 {
            return Err(NetError::TableAlphaMismatch {
                table: table.alpha,
                run,
            });
        }
        let (a, inside) = layer.rate();
        let (neg_div, slope) = table.eval(a);
        let count = layer.weight_count() as f64;
        penalty -= count * neg_div;
        if inside {
            *g = -count * slope * a;
        }
    }
    Ok((penalty, grads))
}

/// Minibatch α-ELBO with gradients for the logits and every `ln a`.
#[allow(clippy::too_many_arguments)]
pub fn alpha_elbo_with_grads(
    logits: &Matrix,
    labels: &[usize],
    n_total: usize,
    batch_size: usize,
    layers: &[VarDropLayer],
    alpha: f64,
    table: Option<&PolyApprox>,
) -> Result<ElboGrads, NetError> {
    if batch_size != logits.rows() {
        return Err(NetError::Shape {
            what: "batch size",
            expected: logits.rows(),
            got: batch_size,
        });
    }
    let (nll, mut d_logits) = softmax_cross_entropy(logits, labels)?;
    let scale = n_total as f64 / batch_size as f64;
    let ll_scaled = scale * (-nll * batch_size as f64);
    let (div_penalty, d_log_a) = divergence_penalty(layers, alpha, table)?;
    let neg_elbo = -ll_scaled + div_penalty;
    if !neg_elbo.is_finite() {
        return Err(NetError::NonFinite("neg_elbo"));
    }
    let grad_scale = scale * batch_size as f64;
    d_logits.map_inplace(|g| g * grad_scale);
    Ok(ElboGrads {
        breakdown: LossBreakdown {
            nll,
            ll_scaled,
            div_penalty,
            neg_elbo,
        },
        d_logits,
        d_log_a,
    })
}

/// Loss values only; see [`alpha_elbo_with_grads`].
pub fn alpha_elbo_loss(
    logits: &Matrix,
    labels: &[usize],
    n_total: usize,
    batch_size: usize,
    layers: &[VarDropLayer],
    alpha: f64,
    table: Option<&PolyApprox>,
) -> Result<LossBreakdown, NetError> {
    Ok(alpha_elbo_with_grads(logits, labels, n_total, batch_size, layers, alpha, table)?.breakdown)
}
