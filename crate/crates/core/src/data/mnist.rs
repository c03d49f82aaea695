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

use std::path::{Path, PathBuf};

use super::{load_idx_images, load_idx_labels, DataError, Dataset};

/// Images held out from the end of the training file for early stopping.
pub const VALIDATION_SIZE: usize = 10_000;

#[derive(Clone, Debug)]
pub struct MnistSplits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

fn find(dir: &Path, stem: &str) -> Result<PathBuf, DataError> {
    let dotted = stem.replacen("-idx", ".idx", 1);
    for name in [stem, dotted.as_str()] {
        for suffix in ["", ".gz"] {
            let p = dir.join(format!("{name}{suffix}"));
            if p.is_file() {
                return Ok(p);
            }
        }
    }
    Err(DataError::MissingFile(stem.into()))
}

fn load_pair(dir: &Path, prefix: &str) -> Result<Dataset, DataError> {
    let images = load_idx_images(find(dir, &format!("{prefix}-images-idx3-ubyte"))?)?;
    let labels = load_idx_labels(find(dir, &format!("{prefix}-labels-idx1-ubyte"))?)?;
    Dataset::new(images, labels)
}

/// Load the standard four MNIST files (plain or `.gz`) from `dir`.
///
/// The last [`VALIDATION_SIZE`] training images (or a tenth, whichever is
/// smaller, for truncated files) form the validation split. `train_limit`
/// keeps only the first images of the remaining training split.
pub fn load_mnist(dir: impl AsRef<Path>, train_limit: Option<usize>) -> Result<MnistSplits, DataError> {
    let dir = dir.as_ref();
    let full = load_pair(dir, "train")?;
    let test = load_pair(dir, "t10k")?;
    let n_val = VALIDATION_SIZE.min(full.len() / 10);
    let cut = full.len() - n_val;
    let mut train = full.slice(0, cut);
    if let Some(limit) = train_limit {
        train = train.take(limit);
    }
    Ok(MnistSplits {
        train,
        validation: full.slice(cut, full.len()),
        test,
    })
}
