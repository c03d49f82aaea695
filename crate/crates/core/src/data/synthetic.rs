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

use super::{DataError, Dataset};
use crate::math::{Matrix, RngStream};

/// Gaussian blobs, one per class, clipped to `[0, 1]`.
///
/// Class `c` is centred at `high` on every coordinate `j` with
/// `j mod classes == c` and at `low` elsewhere, so the classes are linearly
/// separable whenever `(high - low)` is large next to `spread`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    pub low: f64,
    pub high: f64,
    pub spread: f64,
}

impl SyntheticSpec {
    pub fn new(classes: usize, n: usize, dim: usize, seed: u64) -> Self {
        Self {
            classes,
            n,
            dim,
            seed,
            low: 0.2,
            high: 0.8,
            spread: 0.05,
        }
    }
}

pub fn make_synthetic(classes: usize, n: usize, dim: usize, seed: u64) -> Result<Dataset, DataError> {
    make_synthetic_with(&SyntheticSpec::new(classes, n, dim, seed))
}

/// Labels cycle through the classes, so every class is present once
/// `n >= classes`.
pub fn make_synthetic_with(spec: &SyntheticSpec) -> Result<Dataset, DataError> {
    if spec.classes == 0 || spec.dim < spec.classes {
        return Err(DataError::Invalid(format!(
            "synthetic data needs 1 <= classes <= dim, got classes {} dim {}",
            spec.classes, spec.dim
        )));
    }
    if !(0.0..=1.0).contains(&spec.low) || !(0.0..=1.0).contains(&spec.high) || !(spec.spread.is_finite() && spec.spread >= 0.0) {
        return Err(DataError::Invalid("blob centres must lie in [0, 1] with spread >= 0".into()));
    }
    let mut rng = RngStream::new(spec.seed);
    let labels: Vec<usize> = (0..spec.n).map(|i| i % spec.classes).collect();
    let images = Matrix::from_fn(spec.n, spec.dim, |i, j| {
        let centre = if j % spec.classes == labels[i] { spec.high } else { spec.low };
        (centre + spec.spread * rng.standard_normal()).clamp(0.0, 1.0)
    });
    Dataset::new(images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let a = make_synthetic(3, 30, 6, 11).unwrap();
        assert_eq!(a, make_synthetic(3, 30, 6, 11).unwrap());
        assert_ne!(a, make_synthetic(3, 30, 6, 12).unwrap());
        assert!(a.images().as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(a.class_count(), 3);
    }

    #[test]
    fn empty_dataset() {
        let d = make_synthetic(4, 0, 8, 1).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.dim(), 8);
    }

    #[test]
    fn rejects_too_few_dimensions() {
        assert!(make_synthetic(5, 10, 4, 0).is_err());
        assert!(make_synthetic(0, 10, 4, 0).is_err());
    }
}
