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

use super::{Activation, NetError, Variant, RATE_MAX, RATE_MIN};
use crate::math::{Matrix, RngStream};

/// Dense layer `K → L` with a per-layer trainable log dropout rate.
#[derive(Clone, Debug, PartialEq)]
pub struct VarDropLayer {
    /// `K × L` location weights.
    pub theta: Matrix,
    pub bias: Vec<f64>,
    /// `ln a`, with `a = p / (1 - p)` the Gaussian noise variance.
    pub log_a: f64,
    pub variant: Variant,
    pub activation: Activation,
}

impl VarDropLayer {
    pub fn new(
        theta: Matrix,
        bias: Vec<f64>,
        log_a: f64,
        variant: Variant,
        activation: Activation,
    ) -> Result<Self, NetError> {
        if bias.len() != theta.cols() {
            return Err(NetError::Shape {
                what: "bias",
                expected: theta.cols(),
                got: bias.len(),
            });
        }
        if let Variant::Bernoulli { p } = variant {
            if !(0.0..1.0).contains(&p) {
                return Err(NetError::InvalidDropout(p));
            }
        }
        Ok(Self {
            theta,
            bias,
            log_a,
            variant,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.theta.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.theta.cols()
    }

    /// Number of weights carrying a prior (biases excluded).
    pub fn weight_count(&self) -> usize {
        self.theta.len()
    }

    /// `a = exp(log_a)` clamped to the table domain, and whether it was
    /// already inside.
    pub fn rate(&self) -> (f64, bool) {
        let raw = self.log_a.exp();
        let a = raw.clamp(RATE_MIN, RATE_MAX);
        (a, a == raw)
    }

    pub fn clamp_log_a(&mut self) {
        self.log_a = self.log_a.clamp(RATE_MIN.ln(), RATE_MAX.ln());
    }

    fn checked_rate(&self) -> (f64, bool) {
        let (a, inside) = self.rate();
        if !inside {
            log::warn!(
                "dropout rate {} outside [{RATE_MIN}, {RATE_MAX}], clamped to {a}",
                self.log_a.exp()
            );
        }
        (a, inside)
    }

    fn check_input(&self, x: &Matrix) -> Result<(), NetError> {
        if x.cols() != self.input_dim() {
            return Err(NetError::Shape {
                what: "layer input",
                expected: self.input_dim(),
                got: x.cols(),
            });
        }
        Ok(())
    }

    fn affine(&self, x: &Matrix) -> Result<Matrix, NetError> {
        let mut z = x.matmul(&self.theta)?;
        z.add_row_vector(&self.bias)?;
        Ok(z)
    }

    /// Noise-mean forward pass (evaluation mode), identical for every variant.
    pub fn forward_eval(&self, x: &Matrix) -> Result<Matrix, NetError> {
        self.check_input(x)?;
        Ok(activate(self.activation, self.affine(x)?))
    }

    /// Training-mode forward pass for the layer's variant.
    pub fn forward_train(
        &self,
        x: &Matrix,
        noise: NoiseSource<'_>,
    ) -> Result<(Matrix, ForwardCache), NetError> {
        self.check_input(x)?;
        match self.variant {
            Variant::Plain => self.train_plain(x),
            Variant::Bernoulli { p } => self.train_bernoulli(x, p, noise),
            Variant::VarA => self.train_var_a(x, noise),
            Variant::VarB => self.train_var_b(x, noise),
        }
    }

    fn train_plain(&self, x: &Matrix) -> Result<(Matrix, ForwardCache), NetError> {
        let z = self.affine(x)?;
        let out = activate(self.activation, z.clone());
        Ok((
            out,
            ForwardCache {
                input: x.clone(),
                noise: Noise::None,
                effective_input: None,
                noise_scale: None,
                pre_activation: z,
                rate: self.rate().0,
            },
        ))
    }

    fn train_bernoulli(
        &self,
        x: &Matrix,
        p: f64,
        noise: NoiseSource<'_>,
    ) -> Result<(Matrix, ForwardCache), NetError> {
        if !(0.0..1.0).contains(&p) {
            return Err(NetError::InvalidDropout(p));
        }
        let mask = match noise {
            NoiseSource::Sample(rng) => {
                let keep = 1.0 - p;
                let mut m = Matrix::zeros(x.rows(), x.cols());
                for v in m.as_mut_slice() {
                    *v = if rng.bernoulli(keep) { 1.0 } else { 0.0 };
                }
                m
            }
            NoiseSource::Replay(Noise::Mask(m)) => {
                check_noise_dims(m, x.dims())?;
                m.clone()
            }
            NoiseSource::Replay(_) => return Err(NetError::CacheMismatch("expected a dropout mask")),
            NoiseSource::Zero => Matrix::filled(x.rows(), x.cols(), 1.0 - p),
        };
        let inv_keep = 1.0 / (1.0 - p);
        let dropped = x.zip_with(&mask, "bernoulli mask", |v, m| v * m * inv_keep)?;
        let z = self.affine(&dropped)?;
        let out = activate(self.activation, z.clone());
        Ok((
            out,
            ForwardCache {
                input: x.clone(),
                noise: Noise::Mask(mask),
                effective_input: Some(dropped),
                noise_scale: None,
                pre_activation: z,
                rate: self.rate().0,
            },
        ))
    }

    fn train_var_a(
        &self,
        x: &Matrix,
        noise: NoiseSource<'_>,
    ) -> Result<(Matrix, ForwardCache), NetError> {
        let (a, _) = self.checked_rate();
        let zeta = draw_standard(noise, x.dims())?;
        let sd = a.sqrt();
        let noisy = x.zip_with(&zeta, "varA noise", |v, z| v * (1.0 + sd * z))?;
        let z = self.affine(&noisy)?;
        let out = activate(self.activation, z.clone());
        Ok((
            out,
            ForwardCache {
                input: x.clone(),
                noise: Noise::Zeta(zeta),
                effective_input: Some(noisy),
                noise_scale: None,
                pre_activation: z,
                rate: a,
            },
        ))
    }

    fn train_var_b(
        &self,
        x: &Matrix,
        noise: NoiseSource<'_>,
    ) -> Result<(Matrix, ForwardCache), NetError> {
        let (a, _) = self.checked_rate();
        let gamma = self.affine(x)?;
        let delta = local_variance(x, &self.theta, a)?;
        if delta.as_slice().iter().any(|&d| d < 0.0) {
            return Err(NetError::NonFinite("negative local variance"));
        }
        let sqrt_delta = delta.map(f64::sqrt);
        let zeta = draw_standard(noise, gamma.dims())?;
        let mut z = gamma;
        for ((zv, s), e) in z
            .as_mut_slice()
            .iter_mut()
            .zip(sqrt_delta.as_slice())
            .zip(zeta.as_slice())
        {
            *zv += s * e;
        }
        let out = activate(self.activation, z.clone());
        Ok((
            out,
            ForwardCache {
                input: x.clone(),
                noise: Noise::Zeta(zeta),
                effective_input: None,
                noise_scale: Some(sqrt_delta),
                pre_activation: z,
                rate: a,
            },
        ))
    }
}

/// `a · (x ∘ x)(θ ∘ θ)`: the pre-activation variance under independent weight
/// noise `w_kl ~ N(θ_kl, a θ_kl²)`.
pub(crate) fn local_variance(x: &Matrix, theta: &Matrix, a: f64) -> Result<Matrix, NetError> {
    let x2 = x.map(|v| v * v);
    let t2 = theta.map(|v| v * v);
    Ok(x2.matmul(&t2)?.scale(a))
}

fn check_noise_dims(m: &Matrix, dims: (usize, usize)) -> Result<(), NetError> {
    if m.dims() != dims {
        return Err(NetError::CacheMismatch("replayed noise has the wrong shape"));
    }
    Ok(())
}

fn draw_standard(noise: NoiseSource<'_>, dims: (usize, usize)) -> Result<Matrix, NetError> {
    match noise {
        NoiseSource::Sample(rng) => {
            let mut m = Matrix::zeros(dims.0, dims.1);
            rng.fill_standard_normal(m.as_mut_slice());
            Ok(m)
        }
        NoiseSource::Replay(Noise::Zeta(m)) => {
            check_noise_dims(m, dims)?;
            Ok(m.clone())
        }
        NoiseSource::Replay(_) => Err(NetError::CacheMismatch("expected Gaussian noise")),
        NoiseSource::Zero => Ok(Matrix::zeros(dims.0, dims.1)),
    }
}

fn activate(act: Activation, mut z: Matrix) -> Matrix {
    if act == Activation::Relu {
        z.map_inplace(|v| v.max(0.0));
    }
    z
}

/// Where a training-mode forward pass gets its noise.
pub enum NoiseSource<'a> {
    Sample(&'a mut RngStream),
    /// Reuse noise captured in an earlier [`ForwardCache`] (frozen-noise
    /// gradient checks).
    Replay(&'a Noise),
    /// Noise at its mean: `ζ = 0`, or a Bernoulli mask of `1 - p` so the
    /// rescaled input equals the clean input.
    Zero,
}

/// Noise drawn by one training-mode forward pass.
#[derive(Clone, Debug, PartialEq)]
pub enum Noise {
    None,
    /// Bernoulli keep mask over the layer input (`M × K`).
    Mask(Matrix),
    /// Standard-normal draws: `M × K` for varA, `M × L` for varB.
    Zeta(Matrix),
}

/// Everything [`backward`] needs from a training-mode forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub input: Matrix,
    pub noise: Noise,
    /// The perturbed input that multiplied `θ` (Bernoulli, varA).
    pub effective_input: Option<Matrix>,
    /// `√δ` (varB).
    pub noise_scale: Option<Matrix>,
    pub pre_activation: Matrix,
    /// Clamped `a` used by the pass.
    pub rate: f64,
}

/// Gradients of a scalar objective with respect to one layer.
#[derive(Clone, Debug)]
pub struct LayerGrads {
    pub theta: Matrix,
    pub bias: Vec<f64>,
    pub log_a: f64,
    pub input: Matrix,
}

/// Pathwise gradients through one layer given `∂objective/∂output`.
pub fn backward(
    layer: &VarDropLayer,
    cache: &ForwardCache,
    upstream: &Matrix,
) -> Result<LayerGrads, NetError> {
    if upstream.dims() != cache.pre_activation.dims()
        || cache.input.cols() != layer.input_dim()
        || cache.pre_activation.cols() != layer.output_dim()
    {
        return Err(NetError::CacheMismatch("shape"));
    }
    let mut dz = upstream.clone();
    if layer.activation == Activation::Relu {
        for (g, &z) in dz.as_mut_slice().iter_mut().zip(cache.pre_activation.as_slice()) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
    }
    let bias = dz.sum_rows();
    let (_, inside) = layer.rate();

    match (layer.variant, &cache.noise) {
        (Variant::Plain, _) => Ok(LayerGrads {
            theta: cache.input.matmul_tn(&dz)?,
            bias,
            log_a: 0.0,
            input: dz.matmul_nt(&layer.theta)?,
        }),
        (Variant::Bernoulli { p }, Noise::Mask(mask)) => {
            let dropped = cache
                .effective_input
                .as_ref()
                .ok_or(NetError::CacheMismatch("missing dropped input"))?;
            let inv_keep = 1.0 / (1.0 - p);
            let d_dropped = dz.matmul_nt(&layer.theta)?;
            Ok(LayerGrads {
                theta: dropped.matmul_tn(&dz)?,
                bias,
                log_a: 0.0,
                input: d_dropped.zip_with(mask, "bernoulli backward", |g, m| g * m * inv_keep)?,
            })
        }
        (Variant::VarA, Noise::Zeta(zeta)) => {
            let noisy = cache
                .effective_input
                .as_ref()
                .ok_or(NetError::CacheMismatch("missing noisy input"))?;
            let a = cache.rate;
            let sd = a.sqrt();
            let d_noisy = dz.matmul_nt(&layer.theta)?;
            // x̃ = x ∘ (1 + √a ζ):  ∂x̃/∂ln a = x ζ √a / 2.
            let mut d_log_a = 0.0;
            let mut input = Matrix::zeros(cache.input.rows(), cache.input.cols());
            for (((di, &g), &x), &e) in input
                .as_mut_slice()
                .iter_mut()
                .zip(d_noisy.as_slice())
                .zip(cache.input.as_slice())
                .zip(zeta.as_slice())
            {
                *di = g * (1.0 + sd * e);
                d_log_a += g * x * e;
            }
            Ok(LayerGrads {
                theta: noisy.matmul_tn(&dz)?,
                bias,
                log_a: if inside { d_log_a * sd * 0.5 } else { 0.0 },
                input,
            })
        }
        (Variant::VarB, Noise::Zeta(zeta)) => {
            let sqrt_delta = cache
                .noise_scale
                .as_ref()
                .ok_or(NetError::CacheMismatch("missing local std"))?;
            let a = cache.rate;
            // b = γ + √δ ζ with δ = a (x²)(θ²).
            // h = ∂obj/∂δ = dz ζ / (2√δ), taken as 0 where δ = 0.
            let mut h = Matrix::zeros(dz.rows(), dz.cols());
            let mut d_log_a = 0.0;
            for (((hv, &g), &e), &s) in h
                .as_mut_slice()
                .iter_mut()
                .zip(dz.as_slice())
                .zip(zeta.as_slice())
                .zip(sqrt_delta.as_slice())
            {
                if s > 0.0 {
                    *hv = g * e / (2.0 * s);
                }
                // ∂δ/∂ln a = δ, so the contribution is h δ = g ζ √δ / 2.
                d_log_a += g * e * s * 0.5;
            }
            let x = &cache.input;
            let x2 = x.map(|v| v * v);
            let t2 = layer.theta.map(|v| v * v);

            let mut theta = x.matmul_tn(&dz)?;
            let var_part = x2.matmul_tn(&h)?;
            for ((t, &v), &w) in theta
                .as_mut_slice()
                .iter_mut()
                .zip(var_part.as_slice())
                .zip(layer.theta.as_slice())
            {
                *t += 2.0 * a * w * v;
            }

            let mut input = dz.matmul_nt(&layer.theta)?;
            let var_in = h.matmul_nt(&t2)?;
            for ((d, &v), &xv) in input
                .as_mut_slice()
                .iter_mut()
                .zip(var_in.as_slice())
                .zip(x.as_slice())
            {
                *d += 2.0 * a * xv * v;
            }
            Ok(LayerGrads {
                theta,
                bias,
                log_a: if inside { d_log_a } else { 0.0 },
                input,
            })
        }
        _ => Err(NetError::CacheMismatch("noise kind does not match variant")),
    }
}

/// `g(xθ + b)`, ignoring the layer's variant.
pub fn forward_plain(layer: &VarDropLayer, x: &Matrix) -> Result<Matrix, NetError> {
    layer.forward_eval(x)
}

fn with_variant(layer: &VarDropLayer, variant: Variant) -> Result<VarDropLayer, NetError> {
    let mut l = layer.clone();
    l.variant = variant;
    if let Variant::Bernoulli { p } = variant {
        if !(0.0..1.0).contains(&p) {
            return Err(NetError::InvalidDropout(p));
        }
    }
    Ok(l)
}

/// Inverted Bernoulli dropout on the input with drop probability `p`.
/// Evaluation mode never touches the noise source.
pub fn forward_bernoulli(
    layer: &VarDropLayer,
    x: &Matrix,
    p: f64,
    noise: NoiseSource<'_>,
    train: bool,
) -> Result<Matrix, NetError> {
    let l = with_variant(layer, Variant::Bernoulli { p })?;
    if train {
        Ok(l.forward_train(x, noise)?.0)
    } else {
        l.forward_eval(x)
    }
}

/// Correlated Gaussian noise `s ~ N(1, a)` on every input entry.
pub fn forward_var_a(
    layer: &VarDropLayer,
    x: &Matrix,
    noise: NoiseSource<'_>,
    train: bool,
) -> Result<Matrix, NetError> {
    let l = with_variant(layer, Variant::VarA)?;
    if train {
        Ok(l.forward_train(x, noise)?.0)
    } else {
        l.forward_eval(x)
    }
}

/// Independent weight noise via the local reparameterization
/// `b = γ + √δ ∘ ζ`.
pub fn forward_var_b(
    layer: &VarDropLayer,
    x: &Matrix,
    noise: NoiseSource<'_>,
    train: bool,
) -> Result<Matrix, NetError> {
    let l = with_variant(layer, Variant::VarB)?;
    if train {
        Ok(l.forward_train(x, noise)?.0)
    } else {
        l.forward_eval(x)
    }
}
