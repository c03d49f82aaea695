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

//! Independent numerical oracles shared by the integration suites.

#![allow(dead_code, clippy::too_many_arguments)]

use std::f64::consts::PI;
use std::path::PathBuf;

/// Adaptive Simpson quadrature on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Integrate over `[a, b]` split into `pieces` equal panels.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| adaptive_simpson(f, a + i as f64 * h, a + (i + 1) as f64 * h, tol / pieces as f64))
        .sum()
}

pub fn gauss_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Half-width of the excluded neighbourhood of ε = 0.
pub const EPS_EXCLUSION: f64 = 1e-8;

/// Deterministic value of `-D_α` for the Gaussian-dropout posterior
/// `N(1, a)` against the log-uniform prior (c = 1):
///
/// `ln 0.5 - ln( ∫_{|ε| > 1e-8} q(ε)^{1-α} / |ε| dε ) / (α - 1)`.
///
/// The integral is evaluated on each half-line with `ε = ±e^u`, which turns
/// `dε/|ε|` into `du`. For α > 1 the integrand grows like a Gaussian in the
/// tails, so the integral is infinite and the result is `-∞`.
pub fn neg_alpha_div_quadrature(alpha: f64, a: f64) -> f64 {
    assert!((alpha - 1.0).abs() > 1e-9, "alpha = 1 is singular");
    if alpha > 1.0 {
        return f64::NEG_INFINITY;
    }
    let power = 1.0 - alpha;
    let integrand = |eps: f64| {
        let log_q = -0.5 * (2.0 * PI * a).ln() - (eps - 1.0).powi(2) / (2.0 * a);
        (power * log_q).exp()
    };
    // q^{1-α} is a Gaussian bump of variance a / (1-α) around 1.
    let width = (a / power).sqrt();
    let u_lo = EPS_EXCLUSION.ln();
    let u_hi_pos = (1.0 + 40.0 * width).ln();
    let u_hi_neg = (40.0 * width).max(1.0).ln();
    let pos = integrate(&|u: f64| integrand(u.exp()), u_lo, u_hi_pos, 400, 1e-13);
    let neg = integrate(&|u: f64| integrand(-u.exp()), u_lo, u_hi_neg, 400, 1e-13);
    0.5f64.ln() - (pos + neg).ln() / (alpha - 1.0)
}

/// Squared Hellinger distance `1 - ∫ √(p q)` between two 1-D Gaussians.
pub fn hellinger_sq_quadrature(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    let span = 40.0 * v1.max(v2).sqrt();
    let lo = m1.min(m2) - span;
    let hi = m1.max(m2) + span;
    let bc = integrate(&|x| (gauss_pdf(x, m1, v1) * gauss_pdf(x, m2, v2)).sqrt(), lo, hi, 200, 1e-14);
    1.0 - bc
}

/// Rényi divergence of two `d`-dimensional Gaussians with full covariances
/// given as row-major `d × d` arrays (d ≤ 2), through determinants and a
/// linear solve.
pub fn renyi_mvn_2d(mu1: [f64; 2], s1: [[f64; 2]; 2], mu2: [f64; 2], s2: [[f64; 2]; 2], alpha: f64) -> f64 {
    let det = |m: [[f64; 2]; 2]| m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let mut star = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            star[i][j] = alpha * s2[i][j] + (1.0 - alpha) * s1[i][j];
        }
    }
    let ds = det(star);
    let inv = [[star[1][1] / ds, -star[0][1] / ds], [-star[1][0] / ds, star[0][0] / ds]];
    let d = [mu1[0] - mu2[0], mu1[1] - mu2[1]];
    let quad = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
    0.5 * alpha * quad - (ds / (det(s1).powf(1.0 - alpha) * det(s2).powf(alpha))).ln() / (2.0 * (alpha - 1.0))
}

/// MNIST directory: `ALPHADROP_MNIST_DIR` or the workspace's `data/mnist`.
pub fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("ALPHADROP_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    dir.join("train-labels-idx1-ubyte")
        .exists()
        .then_some(dir.clone())
        .or_else(|| dir.join("train-labels-idx1-ubyte.gz").exists().then_some(dir))
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}
