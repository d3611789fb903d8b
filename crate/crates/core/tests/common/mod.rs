//! Independent reference computations for the integration tests. Plain loops
//! over `Vec`s, no library internals.
#![allow(dead_code)]

use coherence_core::model::CountMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major copy of the counts, `n[i][j]` = output `i`, input `j`.
pub fn table(counts: &CountMatrix) -> Vec<Vec<f64>> {
    (0..counts.outputs())
        .map(|i| (0..counts.inputs()).map(|j| counts.get(i, j) as f64).collect())
        .collect()
}

pub struct OracleModel {
    pub p_mat: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub col: Vec<f64>,
}

pub fn model(counts: &CountMatrix) -> OracleModel {
    let n = table(counts);
    let (rows, cols) = (n.len(), n[0].len());
    let col: Vec<f64> = (0..cols).map(|j| (0..rows).map(|i| n[i][j]).sum()).collect();
    let row: Vec<f64> = n.iter().map(|r| r.iter().sum()).collect();
    let s: f64 = col.iter().sum();
    OracleModel {
        p_mat: (0..rows).map(|i| (0..cols).map(|j| n[i][j] / col[j]).collect()).collect(),
        p: col.iter().map(|c| c / s).collect(),
        q: row.iter().map(|r| r / s).collect(),
        col,
    }
}

/// `D_q^{-1/2} A D_p^{1/2}`.
pub fn rescale(a: &[Vec<f64>], p: &[f64], q: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), p.len(), |i, j| a[i][j] * p[j].sqrt() / q[i].sqrt())
}

/// Singular values from the eigenvalues of the smaller Gram matrix,
/// descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let gram = if a.nrows() <= a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    let mut ev: Vec<f64> = SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// `sum N_ij log(N_ij / c_j)`.
pub fn reference_likelihood(counts: &CountMatrix) -> f64 {
    let n = table(counts);
    let m = model(counts);
    let mut total = 0.0;
    for (i, row) in n.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0.0 {
                total += c * m.p_mat[i][j].ln();
            }
        }
    }
    total
}

/// Pooled factor `lambda[i][k] = sum_{gamma(j)=k} N_ij / sum_{gamma(j)=k} c_j`.
pub fn pooled_lambda(counts: &CountMatrix, labels: &[usize], r: usize) -> Vec<Vec<f64>> {
    let n = table(counts);
    let m = model(counts);
    let mut mass = vec![0.0; r];
    for (j, &k) in labels.iter().enumerate() {
        mass[k] += m.col[j];
    }
    n.iter()
        .map(|row| {
            let mut out = vec![0.0; r];
            for (j, &k) in labels.iter().enumerate() {
                out[k] += row[j];
            }
            out.iter().zip(&mass).map(|(a, w)| if *w > 0.0 { a / w } else { f64::NAN }).collect()
        })
        .collect()
}

/// `sum N_ij log lambda[i][gamma(j)]`.
pub fn relaxed_likelihood(counts: &CountMatrix, lambda: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let n = table(counts);
    let mut total = 0.0;
    for (i, row) in n.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0.0 {
                total += c * lambda[(i, labels[j])].ln();
            }
        }
    }
    total
}

/// `lambda Gamma` as rows.
pub fn expand(lambda: &DMatrix<f64>, labels: &[usize]) -> Vec<Vec<f64>> {
    (0..lambda.nrows())
        .map(|i| labels.iter().map(|&k| lambda[(i, k)]).collect())
        .collect()
}

pub fn kl(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(&a, &b)| {
            if a == 0.0 {
                0.0
            } else if b == 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum()
}

/// Random probability vector of length `m`; with `zeros`, roughly a quarter
/// of the entries are forced to zero (at least one entry stays positive).
pub fn random_simplex(rng: &mut ChaCha8Rng, m: usize, zeros: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m)
        .map(|_| {
            if zeros && rng.random_bool(0.25) {
                0.0
            } else {
                rng.random::<f64>() + 1e-3
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[rng.random_range(0..m)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Column-stochastic `m x r` matrix.
pub fn random_stochastic(rng: &mut ChaCha8Rng, m: usize, r: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m, r);
    for k in 0..r {
        let col = random_simplex(rng, m, false);
        for i in 0..m {
            out[(i, k)] = col[i];
        }
    }
    out
}

/// Random `m x n` counts with every row and column nonempty.
pub fn random_counts(rng: &mut ChaCha8Rng, m: usize, n: usize, max: u64) -> CountMatrix {
    let mut c = DMatrix::from_fn(m, n, |_, _| rng.random_range(0..=max));
    for k in 0..m.max(n) {
        c[(k % m, k % n)] += 1;
    }
    CountMatrix::from_matrix(c)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Proptest strategy: `m x n` counts with `2 <= m, n <= max_dim`, entries in
/// `0..=max_count`, every row and column nonempty.
pub fn counts_strategy(max_dim: usize, max_count: u64) -> impl proptest::strategy::Strategy<Value = CountMatrix> {
    use proptest::prelude::*;
    (2..=max_dim, 2..=max_dim)
        .prop_flat_map(move |(m, n)| (Just(m), Just(n), proptest::collection::vec(0..=max_count, m * n)))
        .prop_map(|(m, n, entries)| {
            let mut c = DMatrix::from_row_slice(m, n, &entries);
            for k in 0..m.max(n) {
                c[(k % m, k % n)] += 1;
            }
            CountMatrix::from_matrix(c)
        })
}

/// Counts plus an affiliation with `r` states (some possibly unused).
pub fn instance_strategy(
    max_dim: usize,
    max_r: usize,
) -> impl proptest::strategy::Strategy<Value = (CountMatrix, Vec<usize>, usize)> {
    use proptest::prelude::*;
    counts_strategy(max_dim, 6).prop_flat_map(move |counts| {
        let n = counts.inputs();
        (1..=max_r.min(n)).prop_flat_map(move |r| {
            let counts = counts.clone();
            proptest::collection::vec(0..r, n).prop_map(move |labels| (counts.clone(), labels, r))
        })
    })
}
