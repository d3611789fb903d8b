//! Classical coherent-pair pipeline: SVD of the rescaled transition matrix,
//! rank-r truncation, k-means on singular-vector features, partition matching.

use nalgebra::{DMatrix, DVector, SVD};

use crate::kmeans::{kmeans, KMeansOutcome, KMeansSettings};
use crate::model::{estimate, CountMatrix, TransitionModel};
use crate::{assignment, rng, Error, Execution, Partition, Result};

/// Relative factor of the numerical rank cutoff `RANK_TOL * max(m, n) * sigma_1`.
pub const RANK_TOL: f64 = 1e-12;

/// Thin SVD restricted to the numerical rank `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactorization {
    /// m x s, orthonormal columns (left singular vectors).
    pub u: DMatrix<f64>,
    /// Length s, descending, all above the rank cutoff.
    pub sigma: DVector<f64>,
    /// n x s, orthonormal columns (right singular vectors).
    pub v: DMatrix<f64>,
}

impl SvdFactorization {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.sigma) * self.v.transpose()
    }
}

fn decompose(a: &DMatrix<f64>) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let (m, n) = a.shape();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let max_niter = 1000.max(100 * m.max(n));
    SVD::try_new(a.clone(), true, true, f64::EPSILON, max_niter)
        .ok_or(Error::SvdNoConvergence { rows: m, cols: n })
}

/// All `min(m, n)` singular values, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let max_niter = 1000.max(100 * m.max(n));
    let svd = SVD::try_new(a.clone(), false, false, f64::EPSILON, max_niter)
        .ok_or(Error::SvdNoConvergence { rows: m, cols: n })?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// Thin SVD with singular values below the rank cutoff dropped.
pub fn full_svd(a: &DMatrix<f64>) -> Result<SvdFactorization> {
    let (m, n) = a.shape();
    let svd = decompose(a)?;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let sigma = svd.singular_values;
    let cutoff = RANK_TOL * m.max(n) as f64 * sigma.get(0).copied().unwrap_or(0.0);
    let s = sigma.iter().take_while(|&&x| x > cutoff).count();
    Ok(SvdFactorization {
        u: u.columns(0, s).into_owned(),
        sigma: sigma.rows(0, s).into_owned(),
        v: v_t.rows(0, s).transpose(),
    })
}

/// Rank-r truncation `P~_red` and its back-transform `P_red` in the
/// coordinates of `P`.
pub fn truncate(
    svd: &SvdFactorization,
    r: usize,
    model: &TransitionModel,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if r == 0 || r > svd.rank() {
        return Err(Error::invalid(format!(
            "truncation rank {r} outside 1..={}",
            svd.rank()
        )));
    }
    let u = svd.u.columns(0, r);
    let v = svd.v.columns(0, r);
    let sigma = DMatrix::from_diagonal(&svd.sigma.rows(0, r).into_owned());
    let tilde = u * sigma * v.transpose();
    let red = model.unscale(&tilde);
    Ok((tilde, red))
}

/// Degree of r-coherence: sum of the `r` largest singular values.
pub fn degree_of_coherence(a: &DMatrix<f64>, r: usize) -> Result<f64> {
    let sv = singular_values(a)?;
    Ok(sv.iter().take(r).sum())
}

/// Outcome of [`match_partitions`].
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// Output partition relabelled so that `F_k` pairs with `E_k`.
    pub f: Partition,
    /// `permutation[k]` is the original output label paired with `E_k`.
    pub permutation: Vec<usize>,
    /// `sum_k P[Y in F_k | X in E_k]` after matching.
    pub objective: f64,
    /// `scores[(k, l)] = P[Y in F_l | X in E_k]` before relabelling.
    pub scores: DMatrix<f64>,
}

/// `scores[(k, l)] = P[Y in F_l | X in E_k]`; rows of empty input sets are 0.
pub fn coherence_scores(model: &TransitionModel, e: &Partition, f: &Partition) -> DMatrix<f64> {
    let (r_e, r_f) = (e.clusters(), f.clusters());
    let mut joint = DMatrix::<f64>::zeros(r_e, r_f);
    let mut mass = vec![0.0; r_e];
    for j in 0..model.inputs() {
        let k = e.label(j);
        let pj = model.input[j];
        mass[k] += pj;
        for i in 0..model.outputs() {
            joint[(k, f.label(i))] += pj * model.transition[(i, j)];
        }
    }
    for k in 0..r_e {
        if mass[k] > 0.0 {
            joint.row_mut(k).iter_mut().for_each(|v| *v /= mass[k]);
        }
    }
    joint
}

/// `sum_k P[Y in F_k | X in E_k]` for already matched labels.
pub fn coherence_value(model: &TransitionModel, e: &Partition, f: &Partition) -> f64 {
    coherence_scores(model, e, f).diagonal().sum()
}

/// Relabel `F` by the permutation maximizing the summed coherence.
pub fn match_partitions(model: &TransitionModel, e: &Partition, f: &Partition) -> Result<Matching> {
    if e.clusters() != f.clusters() {
        return Err(Error::invalid(format!(
            "input partition has {} labels, output partition {}",
            e.clusters(),
            f.clusters()
        )));
    }
    if e.len() != model.inputs() || f.len() != model.outputs() {
        return Err(Error::shape(format!(
            "partitions of length {}/{} for a {}x{} model",
            e.len(),
            f.len(),
            model.outputs(),
            model.inputs()
        )));
    }
    let scores = coherence_scores(model, e, f);
    let (permutation, objective) = assignment::maximize(&scores);
    let mut inverse = vec![0; permutation.len()];
    for (k, &l) in permutation.iter().enumerate() {
        inverse[l] = k;
    }
    Ok(Matching {
        f: f.relabel(&inverse)?,
        permutation,
        objective,
        scores,
    })
}

#[derive(Debug, Clone)]
pub struct ClassicalResult {
    pub model: TransitionModel,
    pub svd: SvdFactorization,
    /// Rank actually used: `min(r, numerical rank)`.
    pub rank: usize,
    pub p_tilde_red: DMatrix<f64>,
    pub p_red: DMatrix<f64>,
    pub e: Partition,
    pub f: Partition,
    pub coherence_value: f64,
    pub e_clustering: KMeansOutcome,
    pub f_clustering: KMeansOutcome,
}

/// Estimate, decompose, truncate, cluster and match, in that order.
///
/// Input features are the rows of the first `r` right singular vectors,
/// output features the rows of the first `r` left singular vectors. When the
/// numerical rank is below `r` the available vectors are used and the
/// partitions still have `r` labels.
pub fn classical_pipeline(
    counts: &CountMatrix,
    r: usize,
    seed: u64,
    execution: Execution,
) -> Result<ClassicalResult> {
    let (m, n) = (counts.outputs(), counts.inputs());
    if r == 0 || r > m.min(n) {
        return Err(Error::invalid(format!("rank {r} outside 1..={}", m.min(n))));
    }
    let model = estimate(counts)?;
    let svd = full_svd(&model.rescaled)?;
    let rank = r.min(svd.rank());
    let (p_tilde_red, p_red) = truncate(&svd, rank, &model)?;
    let settings = |stream| KMeansSettings {
        seed: rng::mix(seed, stream),
        execution,
        ..Default::default()
    };
    let e_clustering = kmeans(&svd.v.columns(0, rank).into_owned(), r, &settings(0))?;
    let f_clustering = kmeans(&svd.u.columns(0, rank).into_owned(), r, &settings(1))?;
    let matching = match_partitions(&model, &e_clustering.partition, &f_clustering.partition)?;
    Ok(ClassicalResult {
        svd,
        rank,
        p_tilde_red,
        p_red,
        e: e_clustering.partition.clone(),
        f: matching.f,
        coherence_value: matching.objective,
        e_clustering,
        f_clustering,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_counts(seed: u64, m: usize, n: usize) -> CountMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut c = DMatrix::from_fn(m, n, |_, _| rng.random_range(0..6u64));
        for k in 0..m.max(n) {
            c[(k % m, k % n)] += 1;
        }
        CountMatrix::from_matrix(c)
    }

    #[test]
    fn identity_spectrum() {
        let sv = singular_values(&DMatrix::identity(4, 4)).unwrap();
        assert!(sv.iter().all(|s| (s - 1.0).abs() < 1e-15));
    }

    #[test]
    fn factorization_invariants() {
        let model = estimate(&random_counts(1, 12, 9)).unwrap();
        let svd = full_svd(&model.rescaled).unwrap();
        let s = svd.rank();
        assert!((svd.u.transpose() * &svd.u - DMatrix::identity(s, s)).amax() < 1e-9);
        assert!((svd.v.transpose() * &svd.v - DMatrix::identity(s, s)).amax() < 1e-9);
        let err = (svd.reconstruct() - &model.rescaled).norm();
        assert!(err <= 1e-8 * model.rescaled.norm());
        assert!((svd.sigma[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rank_one_truncation_is_marginal_outer_product() {
        let model = estimate(&random_counts(2, 7, 10)).unwrap();
        let svd = full_svd(&model.rescaled).unwrap();
        let (tilde, red) = truncate(&svd, 1, &model).unwrap();
        let expected = model.output.map(f64::sqrt) * model.input.map(f64::sqrt).transpose();
        assert!((tilde - expected).amax() < 1e-8);
        // back in P coordinates the rank-one model sends everything to q
        let q_outer = &model.output * DVector::from_element(10, 1.0).transpose();
        assert!((red - q_outer).amax() < 1e-8);
    }

    #[test]
    fn full_truncation_reproduces() {
        let model = estimate(&random_counts(3, 6, 6)).unwrap();
        let svd = full_svd(&model.rescaled).unwrap();
        let (tilde, red) = truncate(&svd, svd.rank(), &model).unwrap();
        assert!((tilde - &model.rescaled).amax() < 1e-8);
        assert!((red - &model.transition).amax() < 1e-8);
        assert!(truncate(&svd, svd.rank() + 1, &model).is_err());
    }

    #[test]
    fn matching_two_clusters() {
        // 2x2 model whose conditional scores are [[0.9, 0.1], [0.2, 0.8]]
        let counts = CountMatrix::from_rows(2, 2, &[9, 2, 1, 8]).unwrap();
        let model = estimate(&counts).unwrap();
        let e = Partition::new(vec![0, 1], 2).unwrap();
        let f = Partition::new(vec![0, 1], 2).unwrap();
        let m = match_partitions(&model, &e, &f).unwrap();
        assert_eq!(m.permutation, vec![0, 1]);
        assert!((m.objective - 1.7).abs() < 1e-12);
        let swapped = Partition::new(vec![1, 0], 2).unwrap();
        let m = match_partitions(&model, &e, &swapped).unwrap();
        assert_eq!(m.f.labels(), &[0, 1]);
        assert!((m.objective - 1.7).abs() < 1e-12);
    }

    #[test]
    fn rank_one_pipeline() {
        let out = classical_pipeline(&random_counts(4, 5, 5), 1, 0, Execution::Sequential).unwrap();
        assert_eq!(out.e.nonempty_clusters(), 1);
        assert!((out.coherence_value - 1.0).abs() < 1e-12);
        assert!((degree_of_coherence(&out.model.rescaled, 1).unwrap() - 1.0).abs() < 1e-9);
    }
}
