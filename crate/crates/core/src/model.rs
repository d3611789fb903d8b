//! Empirical estimation: raw pairs, count matrix, left-stochastic transition
//! model and its rescalings.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Tolerance on the sum of a vector accepted as a probability vector.
pub const PROBABILITY_SUM_TOL: f64 = 1e-9;

/// Observed (input, output) category pairs.
///
/// Indices are 0-based: `x` in `0..n` is the input category, `y` in `0..m`
/// the output category. Ranges are validated by [`ingest_pairs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairDataset {
    pub n: usize,
    pub m: usize,
    pub records: Vec<(usize, usize)>,
}

impl PairDataset {
    pub fn new(n: usize, m: usize, records: Vec<(usize, usize)>) -> Self {
        Self { n, m, records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Count matrix `N` (m x n): `N[(i, j)]` is the number of pairs with input
/// `j` and output `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    counts: DMatrix<u64>,
    total: u64,
}

impl CountMatrix {
    pub fn from_matrix(counts: DMatrix<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn from_rows(m: usize, n: usize, rows: &[u64]) -> Result<Self> {
        if rows.len() != m * n {
            return Err(Error::shape(format!(
                "{} entries for a {}x{} count matrix",
                rows.len(),
                m,
                n
            )));
        }
        Ok(Self::from_matrix(DMatrix::from_row_slice(m, n, rows)))
    }

    pub fn counts(&self) -> &DMatrix<u64> {
        &self.counts
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[(i, j)]
    }

    /// Total sample count `S`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of output categories `m`.
    pub fn outputs(&self) -> usize {
        self.counts.nrows()
    }

    /// Number of input categories `n`.
    pub fn inputs(&self) -> usize {
        self.counts.ncols()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.outputs())
            .map(|i| self.counts.row(i).iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        self.counts.column_iter().map(|c| c.iter().sum()).collect()
    }

    pub fn is_pruned(&self) -> bool {
        self.total > 0
            && self.row_sums().iter().all(|&s| s > 0)
            && self.col_sums().iter().all(|&s| s > 0)
    }

    /// Nonzero entries of each column as `(row, count)`, rows ascending.
    pub fn sparse_columns(&self) -> Vec<Vec<(usize, u64)>> {
        self.counts
            .column_iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .filter(|(_, &v)| v > 0)
                    .map(|(i, &v)| (i, v))
                    .collect()
            })
            .collect()
    }
}

/// Count the pairs of a dataset into `N`.
pub fn ingest_pairs(dataset: &PairDataset) -> Result<CountMatrix> {
    if dataset.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (n, m) = (dataset.n, dataset.m);
    let mut counts = DMatrix::<u64>::zeros(m, n);
    for (index, &(x, y)) in dataset.records.iter().enumerate() {
        if x >= n || y >= m {
            return Err(Error::RecordOutOfRange {
                index: index + 1,
                x: x + 1,
                y: y + 1,
                n,
                m,
            });
        }
        counts[(y, x)] += 1;
    }
    Ok(CountMatrix::from_matrix(counts))
}

/// Result of [`prune_empty`]. `row_map[i]` / `col_map[j]` is the original
/// (0-based) index of retained row `i` / column `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pruned {
    pub counts: CountMatrix,
    pub row_map: Vec<usize>,
    pub col_map: Vec<usize>,
}

/// Drop rows and columns with zero sum, keeping the original order.
pub fn prune_empty(counts: &CountMatrix) -> Result<Pruned> {
    if counts.total() == 0 {
        return Err(Error::EmptyModel);
    }
    let row_map: Vec<usize> = counts
        .row_sums()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .map(|(i, _)| i)
        .collect();
    let col_map: Vec<usize> = counts
        .col_sums()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .map(|(j, _)| j)
        .collect();
    let src = counts.counts();
    let pruned = DMatrix::from_fn(row_map.len(), col_map.len(), |i, j| src[(row_map[i], col_map[j])]);
    Ok(Pruned {
        counts: CountMatrix::from_matrix(pruned),
        row_map,
        col_map,
    })
}

/// Left-stochastic transition model estimated from counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    /// `P` (m x n), columns sum to one.
    pub transition: DMatrix<f64>,
    /// Input distribution `p` (length n, strictly positive).
    pub input: DVector<f64>,
    /// Output distribution `q = P p` (length m, strictly positive).
    pub output: DVector<f64>,
    /// `P~ = D_q^{-1/2} P D_p^{1/2}`.
    pub rescaled: DMatrix<f64>,
    /// `P' = D_q^{-1} P D_p`, maps densities w.r.t. `p` to densities w.r.t. `q`.
    pub density: DMatrix<f64>,
}

impl TransitionModel {
    pub fn inputs(&self) -> usize {
        self.transition.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.transition.nrows()
    }

    /// Apply `D_q^{-1/2} . D_p^{1/2}` to an arbitrary m x n matrix.
    pub fn rescale(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let sp: Vec<f64> = self.input.iter().map(|v| v.sqrt()).collect();
        let sq: Vec<f64> = self.output.iter().map(|v| v.sqrt()).collect();
        DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * sp[j] / sq[i])
    }

    /// Inverse of [`TransitionModel::rescale`].
    pub fn unscale(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let sp: Vec<f64> = self.input.iter().map(|v| v.sqrt()).collect();
        let sq: Vec<f64> = self.output.iter().map(|v| v.sqrt()).collect();
        DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * sq[i] / sp[j])
    }
}

/// Maximum likelihood estimators `p`, `P`, `q` and the rescaled matrices.
pub fn estimate(counts: &CountMatrix) -> Result<TransitionModel> {
    if !counts.is_pruned() {
        return Err(Error::NotPruned);
    }
    let (m, n) = (counts.outputs(), counts.inputs());
    let s = counts.total() as f64;
    let col = counts.col_sums();
    let row = counts.row_sums();

    let transition = DMatrix::from_fn(m, n, |i, j| counts.get(i, j) as f64 / col[j] as f64);
    let input = renormalized(DVector::from_iterator(n, col.iter().map(|&c| c as f64 / s)));
    let output = renormalized(DVector::from_iterator(m, row.iter().map(|&c| c as f64 / s)));

    let mut model = TransitionModel {
        rescaled: DMatrix::zeros(m, n),
        density: DMatrix::zeros(m, n),
        transition,
        input,
        output,
    };
    model.rescaled = model.rescale(&model.transition);
    model.density = DMatrix::from_fn(m, n, |i, j| {
        model.transition[(i, j)] * model.input[j] / model.output[i]
    });
    Ok(model)
}

fn renormalized(v: DVector<f64>) -> DVector<f64> {
    let s = v.sum();
    v / s
}

/// Check that `u` is a probability vector (entries >= 0, sum within
/// [`PROBABILITY_SUM_TOL`] of one).
pub fn check_probability(u: &[f64]) -> Result<()> {
    if let Some(x) = u.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidProbability(format!("entry {x} is negative or not finite")));
    }
    let s: f64 = u.iter().sum();
    if (s - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(Error::InvalidProbability(format!("entries sum to {s}")));
    }
    Ok(())
}

/// Kullback-Leibler divergence `sum u_i log(u_i / v_i)` (natural log), with
/// `0 log 0 = 0`; `+inf` when `u` puts mass where `v` has none.
pub fn kl_divergence(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::shape(format!("KL of lengths {} and {}", u.len(), v.len())));
    }
    check_probability(u)?;
    check_probability(v)?;
    Ok(kl_unchecked(u.iter().copied(), v.iter().copied()))
}

pub(crate) fn kl_unchecked(u: impl Iterator<Item = f64>, v: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    for (a, b) in u.zip(v) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc
}
