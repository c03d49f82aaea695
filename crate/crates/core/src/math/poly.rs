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

use super::MathError;

/// Polynomial `Σ c_k x^k`, coefficients in increasing degree.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCoeffs {
    coeffs: Vec<f64>,
}

impl PolyCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "polynomial needs at least one coefficient");
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative at `x`, both by Horner.
    pub fn eval_with_grad(&self, x: f64) -> (f64, f64) {
        let mut value = 0.0;
        let mut grad = 0.0;
        for &c in self.coeffs.iter().rev() {
            grad = grad * x + value;
            value = value * x + c;
        }
        (value, grad)
    }

    /// Root-mean-square residual against `(xs, ys)`.
    pub fn rmse(&self, xs: &[f64], ys: &[f64]) -> f64 {
        let sse: f64 = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| (self.eval(x) - y).powi(2))
            .sum();
        (sse / xs.len() as f64).sqrt()
    }
}

pub fn poly_eval_and_grad(p: &PolyCoeffs, a: f64) -> (f64, f64) {
    p.eval_with_grad(a)
}

/// Least-squares polynomial of the given degree through `(xs, ys)`.
///
/// Abscissae are mapped to `t = (x - center) / half_width` before forming the
/// normal equations, which are solved by Gaussian elimination with partial
/// pivoting; the result is expanded back to the monomial basis in `x`.
pub fn fit_least_squares_poly(
    xs: &[f64],
    ys: &[f64],
    degree: usize,
) -> Result<PolyCoeffs, MathError> {
    if xs.len() != ys.len() {
        return Err(MathError::DimensionMismatch {
            op: "fit_least_squares_poly",
            left: (xs.len(), 1),
            right: (ys.len(), 1),
        });
    }
    let n_coef = degree + 1;
    if xs.len() < n_coef {
        return Err(MathError::InsufficientPoints {
            needed: n_coef,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(MathError::NonFinite("fit_least_squares_poly"));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() < n_coef {
        return Err(MathError::InsufficientPoints {
            needed: n_coef,
            got: sorted.len(),
        });
    }

    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    let center = 0.5 * (lo + hi);
    let half_width = 0.5 * (hi - lo);
    let half_width = if half_width > 0.0 { half_width } else { 1.0 };

    // Normal equations A c = b with A_jk = Σ t^(j+k), b_j = Σ y t^j.
    let mut power_sums = vec![0.0; 2 * degree + 1];
    let mut rhs = vec![0.0; n_coef];
    for (&x, &y) in xs.iter().zip(ys) {
        let t = (x - center) / half_width;
        let mut tp = 1.0;
        for (k, s) in power_sums.iter_mut().enumerate() {
            *s += tp;
            if k < n_coef {
                rhs[k] += y * tp;
            }
            tp *= t;
        }
    }
    let mut a: Vec<Vec<f64>> = (0..n_coef)
        .map(|j| (0..n_coef).map(|k| power_sums[j + k]).collect())
        .collect();
    let scaled = solve_dense(&mut a, &mut rhs)?;

    // Expand Σ b_k ((x - center)/h)^k into monomials of x.
    let mut coeffs = vec![0.0; n_coef];
    for (k, &b) in scaled.iter().enumerate() {
        let factor = b / half_width.powi(k as i32);
        let mut binom = 1.0;
        for j in 0..=k {
            // C(k, j) x^j (-center)^(k-j)
            coeffs[j] += factor * binom * (-center).powi((k - j) as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    Ok(PolyCoeffs::new(coeffs))
}

fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>, MathError> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[pivot][col].abs() <= scale * 1e-14 {
            return Err(MathError::DegenerateFit);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}
