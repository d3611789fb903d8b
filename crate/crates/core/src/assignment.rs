//! Optimal assignment on a square score matrix (Hungarian method, O(r^3)).

use nalgebra::DMatrix;

/// Permutation `perm` maximizing `sum_k scores[(k, perm[k])]`, and that sum.
///
/// Ties between optimal permutations are broken by the potential-based
/// search order, which is deterministic. Panics if `scores` is not square.
pub fn maximize(scores: &DMatrix<f64>) -> (Vec<usize>, f64) {
    let n = scores.nrows();
    assert_eq!(n, scores.ncols(), "assignment needs a square matrix");
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    // shortest augmenting path on costs -scores, 1-based with a dummy column 0
    let cost = |i: usize, j: usize| -scores[(i - 1, j - 1)];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[owner[j] - 1] = j - 1;
    }
    let value = (0..n).map(|k| scores[(k, perm[k])]).sum();
    (perm, value)
}
