use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Assignment of categories to `r` clusters.
///
/// Labels are stored 0-based; [`Partition::to_one_based`] gives the external
/// form. Empty clusters are allowed (a label in `0..r` may be unused).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    clusters: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, clusters: usize) -> Result<Self> {
        if clusters == 0 {
            return Err(Error::invalid("a partition needs at least one cluster"));
        }
        if let Some((pos, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= clusters) {
            return Err(Error::invalid(format!(
                "label {} at position {} exceeds cluster count {}",
                l + 1,
                pos + 1,
                clusters
            )));
        }
        Ok(Self { labels, clusters })
    }

    /// Build from 1-based labels; the cluster count is the largest label.
    pub fn from_one_based(labels: &[usize]) -> Result<Self> {
        if let Some(pos) = labels.iter().position(|&l| l == 0) {
            return Err(Error::invalid(format!("label 0 at position {}", pos + 1)));
        }
        let r = labels.iter().copied().max().unwrap_or(1);
        Self::new(labels.iter().map(|&l| l - 1).collect(), r)
    }

    /// Contiguous blocks of the given sizes, labelled in order.
    pub fn from_block_sizes(sizes: &[usize]) -> Self {
        let labels = sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
            .collect();
        Self {
            labels,
            clusters: sizes.len().max(1),
        }
    }

    pub fn single(len: usize) -> Self {
        Self {
            labels: vec![0; len],
            clusters: 1,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn nonempty_clusters(&self) -> usize {
        self.sizes().iter().filter(|&&s| s > 0).count()
    }

    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == k).collect()
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l + 1).collect()
    }

    /// Relabel clusters in order of first appearance. Two partitions describe
    /// the same grouping iff their canonical forms are equal.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.clusters];
        let mut next = 0;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        Self {
            labels,
            clusters: self.clusters,
        }
    }

    pub fn same_grouping(&self, other: &Partition) -> bool {
        self.labels.len() == other.labels.len() && self.canonical().labels == other.canonical().labels
    }

    /// Apply `new_label = permutation[old_label]`.
    pub fn relabel(&self, permutation: &[usize]) -> Result<Self> {
        if permutation.len() != self.clusters {
            return Err(Error::shape(format!(
                "permutation of length {} for {} clusters",
                permutation.len(),
                self.clusters
            )));
        }
        Self::new(
            self.labels.iter().map(|&l| permutation[l]).collect(),
            self.clusters,
        )
    }

    /// Restrict to the positions listed in `keep` (e.g. a pruning map).
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let labels = keep
            .iter()
            .map(|&i| {
                self.labels
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::shape(format!("index {} outside partition of length {}", i, self.len())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, self.clusters)
    }
}
