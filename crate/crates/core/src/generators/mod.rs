//! Synthetic datasets: two exactly specified count models, the categorical
//! perturbation applied to them, and an Ulam box discretization of the
//! double-gyre flow.

mod gyre;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::PairDataset;
use crate::{rng, Partition};

pub use gyre::{
    box_index, gen_double_gyre, gyre_samples, gyre_velocity, integrate, reflect, stream_function, ulam_dataset, GyreConfig,
    GyreMetadata, GyreSample,
};

/// Ground-truth input partition of a synthetic example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefaultLabels {
    pub input: Partition,
}

/// Block sizes of the three-coherent-set model.
pub const THREE_COHERENT_BLOCKS: [usize; 3] = [25, 25, 50];

/// Count of `(input j, output i)` in the three-coherent-set model.
pub fn three_coherent_count(i: usize, j: usize) -> u64 {
    let block = |s: usize| if s < 25 { 0 } else if s < 50 { 1 } else { 2 };
    match (block(i), block(j)) {
        (a, b) if a == b && a < 2 => 8,
        (2, 2) => 5,
        (2, _) | (_, 2) => 0,
        _ => 2,
    }
}

/// Expand a count function into pairs, ordered by input, then output, then
/// replicate.
fn materialize(n: usize, m: usize, count: impl Fn(usize, usize) -> u64) -> PairDataset {
    let mut records = Vec::new();
    for j in 0..n {
        for i in 0..m {
            for _ in 0..count(i, j) {
                records.push((j, i));
            }
        }
    }
    PairDataset::new(n, m, records)
}

/// 100 states in blocks of 25, 25 and 50; 250 transitions out of every
/// state (S = 25000). Perturbed with window `epsilon` when positive.
pub fn gen_three_coherent(epsilon: usize, seed: u64) -> (PairDataset, DefaultLabels) {
    let ds = materialize(100, 100, three_coherent_count);
    let labels = DefaultLabels {
        input: Partition::from_block_sizes(&THREE_COHERENT_BLOCKS),
    };
    (perturb_pairs(&ds, epsilon, seed), labels)
}

/// The three outputs (0-based, ascending) of input `j` in the interval-map
/// model: block `b` feeds block `b + 1 mod 3`, offset `c` goes to offsets
/// `3c, 3c + 1, 3c + 2 (mod 30)`.
pub fn interval_map_image(j: usize) -> [usize; 3] {
    let (b, c) = (j / 30, j % 30);
    let base = 30 * ((b + 1) % 3);
    [0, 1, 2].map(|t| base + (3 * c + t) % 30)
}

/// 90 states in three blocks of 30, each state sending 30 transitions to
/// each of its three images (S = 8100).
pub fn gen_interval_map(epsilon: usize, seed: u64) -> (PairDataset, DefaultLabels) {
    let ds = materialize(90, 90, |i, j| if interval_map_image(j).contains(&i) { 30 } else { 0 });
    let labels = DefaultLabels {
        input: Partition::from_block_sizes(&[30, 30, 30]),
    };
    (perturb_pairs(&ds, epsilon, seed), labels)
}

/// Replace every record `(x, y)` by `(x + dx mod n, y + dy mod m)` with
/// `dx`, `dy` independent and uniform on `-epsilon..=epsilon`, drawn from a
/// single stream in record order.
pub fn perturb_pairs(dataset: &PairDataset, epsilon: usize, seed: u64) -> PairDataset {
    if epsilon == 0 {
        return dataset.clone();
    }
    let mut rng = rng::stream(seed);
    let e = epsilon as i64;
    let (n, m) = (dataset.n as i64, dataset.m as i64);
    let records = dataset
        .records
        .iter()
        .map(|&(x, y)| {
            let dx = rng.random_range(-e..=e);
            let dy = rng.random_range(-e..=e);
            ((x as i64 + dx).rem_euclid(n) as usize, (y as i64 + dy).rem_euclid(m) as usize)
        })
        .collect();
    PairDataset::new(dataset.n, dataset.m, records)
}
