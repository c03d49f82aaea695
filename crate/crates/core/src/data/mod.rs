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

//! Datasets: IDX (MNIST) files, synthetic Gaussian blobs, and shuffled
//! minibatching.

mod batch;
mod idx;
mod mnist;
mod synthetic;

use thiserror::Error;

use crate::math::{MathError, Matrix};

pub use batch::{batches, Batch, BatchPlan};
pub use idx::{
    load_idx_images, load_idx_labels, parse_idx_images, parse_idx_labels, write_idx_images,
    write_idx_labels, IMAGE_MAGIC, LABEL_MAGIC,
};
pub use mnist::{load_mnist, MnistSplits, VALIDATION_SIZE};
pub use synthetic::{make_synthetic, make_synthetic_with, SyntheticSpec};

/// Number of digit classes.
pub const MNIST_CLASSES: usize = 10;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error("{path}: truncated, need {needed} bytes, have {have}")]
    Truncated {
        path: String,
        needed: usize,
        have: usize,
    },
    #[error("{path}: {extra} unexpected trailing bytes")]
    TrailingData { path: String, extra: usize },
    #[error("{path}: dimensions {dims:?} overflow")]
    DimensionOverflow { path: String, dims: Vec<u32> },
    #[error("{path}: label {label} at index {index} is not a digit")]
    LabelRange {
        path: String,
        index: usize,
        label: u8,
    },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("pixel {0} outside [0, 1]")]
    PixelRange(f64),
    #[error("no file matching {0} in the data directory")]
    MissingFile(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Images as rows of reals in `[0, 1]` with one class label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    images: Matrix,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(images: Matrix, labels: Vec<usize>) -> Result<Self, DataError> {
        if images.rows() != labels.len() {
            return Err(DataError::CountMismatch {
                images: images.rows(),
                labels: labels.len(),
            });
        }
        if let Some(&v) = images.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DataError::PixelRange(v));
        }
        Ok(Self { images, labels })
    }

    pub fn images(&self) -> &Matrix {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.images.cols()
    }

    /// One more than the largest label (0 for an empty set).
    pub fn class_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: self.images.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Rows `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            images: self.images.slice_rows(start, end),
            labels: self.labels[start..end].to_vec(),
        }
    }

    /// First `n` rows (all rows if fewer).
    pub fn take(&self, n: usize) -> Dataset {
        self.slice(0, n.min(self.len()))
    }
}
