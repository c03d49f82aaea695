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

use super::Dataset;
use crate::math::{Matrix, RngStream};

/// One epoch's visiting order.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchPlan {
    pub seed: u64,
    pub batch_size: usize,
    pub order: Vec<usize>,
}

impl BatchPlan {
    /// Shuffle `0..n` with a stream seeded by `seed`.
    pub fn shuffled(n: usize, batch_size: usize, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        RngStream::new(seed).shuffle(&mut order);
        Self {
            seed,
            batch_size: batch_size.max(1),
            order,
        }
    }

    /// Identity order, for evaluation passes.
    pub fn sequential(n: usize, batch_size: usize) -> Self {
        Self {
            seed: 0,
            batch_size: batch_size.max(1),
            order: (0..n).collect(),
        }
    }

    pub fn batch_count(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }
}

/// A minibatch plus the dataset size, which scales the likelihood term.
#[derive(Clone, Debug)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub x: Matrix,
    pub y: Vec<usize>,
    pub n_total: usize,
    /// Rows in this batch; the final batch may be short.
    pub batch_size: usize,
}

impl Batch {
    /// Likelihood scale `N / M` for this batch.
    pub fn scale(&self) -> f64 {
        self.n_total as f64 / self.batch_size as f64
    }
}

/// Walk the plan in order, keeping a short final batch.
pub fn batches<'a>(data: &'a Dataset, plan: &'a BatchPlan) -> impl Iterator<Item = Batch> + 'a {
    plan.order.chunks(plan.batch_size).map(move |idx| Batch {
        indices: idx.to_vec(),
        x: data.images().select_rows(idx),
        y: idx.iter().map(|&i| data.labels()[i]).collect(),
        n_total: data.len(),
        batch_size: idx.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_synthetic;

    #[test]
    fn ten_by_three() {
        let d = make_synthetic(2, 10, 2, 0).unwrap();
        let plan = BatchPlan::shuffled(10, 3, 5);
        let sizes: Vec<_> = batches(&d, &plan).map(|b| b.batch_size).collect();
        assert_eq!(sizes, [3, 3, 3, 1]);
        assert_eq!(plan.batch_count(), 4);
        let last = batches(&d, &plan).last().unwrap();
        assert_eq!(last.scale(), 10.0);
    }

    #[test]
    fn every_index_once() {
        let d = make_synthetic(3, 17, 3, 0).unwrap();
        let plan = BatchPlan::shuffled(17, 4, 99);
        let mut seen: Vec<usize> = batches(&d, &plan).flat_map(|b| b.indices).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..17).collect::<Vec<_>>());
    }

    #[test]
    fn rows_match_indices() {
        let d = make_synthetic(3, 9, 3, 4).unwrap();
        let plan = BatchPlan::shuffled(9, 4, 1);
        for b in batches(&d, &plan) {
            for (r, &i) in b.indices.iter().enumerate() {
                assert_eq!(b.x.row(r), d.images().row(i));
                assert_eq!(b.y[r], d.labels()[i]);
            }
        }
    }

    #[test]
    fn same_seed_same_plan() {
        assert_eq!(BatchPlan::shuffled(50, 8, 3), BatchPlan::shuffled(50, 8, 3));
        assert_ne!(BatchPlan::shuffled(50, 8, 3).order, BatchPlan::shuffled(50, 8, 4).order);
    }
}
