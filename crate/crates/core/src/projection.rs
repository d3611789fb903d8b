//! The projection induced by a hard affiliation and the structural identities
//! it satisfies: `lambda * Gamma = P * Pi`, Pythagoras in the rescaled
//! Frobenius geometry, and singular-value dominance.
//!
//! Everything here materializes n x n matrices and is meant for verification
//! and reporting, not for the DBMR loop.

use nalgebra::{DMatrix, DVector};

use crate::dbmr::ReducedModel;
use crate::model::TransitionModel;
use crate::{svd, Error, Partition, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct InducedProjection {
    /// `Pi[(i, j)] = p_i [gamma(i) = gamma(j)] / w_gamma(i)` (n x n).
    pub pi: DMatrix<f64>,
    /// `D_p^{-1/2} Pi D_p^{1/2}`, symmetric.
    pub pi_tilde: DMatrix<f64>,
    /// Latent states with at least one input, ascending.
    pub active_states: Vec<usize>,
    /// `a_k[i] = p_i [gamma(i) = k]` for each active `k`, same order.
    pub eigvecs: Vec<DVector<f64>>,
}

pub fn build_projection(p: &DVector<f64>, affiliation: &Partition) -> Result<InducedProjection> {
    let n = p.len();
    if affiliation.len() != n {
        return Err(Error::shape(format!("affiliation over {} inputs, p of length {n}", affiliation.len())));
    }
    if p.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidProbability("p must be strictly positive".into()));
    }
    let labels = affiliation.labels();
    let mut mass = vec![0.0; affiliation.clusters()];
    for j in 0..n {
        mass[labels[j]] += p[j];
    }
    let pi = DMatrix::from_fn(n, n, |i, j| {
        if labels[i] == labels[j] {
            p[i] / mass[labels[i]]
        } else {
            0.0
        }
    });
    let pi_tilde = DMatrix::from_fn(n, n, |i, j| {
        if labels[i] == labels[j] {
            (p[i] * p[j]).sqrt() / mass[labels[i]]
        } else {
            0.0
        }
    });
    let active_states: Vec<usize> = (0..affiliation.clusters()).filter(|&k| mass[k] > 0.0).collect();
    let eigvecs = active_states
        .iter()
        .map(|&k| DVector::from_fn(n, |i, _| if labels[i] == k { p[i] } else { 0.0 }))
        .collect();
    Ok(InducedProjection {
        pi,
        pi_tilde,
        active_states,
        eigvecs,
    })
}

/// Max-norm residuals of the factorization identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationResiduals {
    /// `||lambda Gamma - P Pi||_max`
    pub product: f64,
    /// `||Pi p - p||_max`
    pub invariant_input: f64,
    /// `||Lambda p - q||_max`
    pub output_marginal: f64,
}

impl FactorizationResiduals {
    pub fn max(&self) -> f64 {
        self.product.max(self.invariant_input).max(self.output_marginal)
    }
}

pub fn verify_factorization(model: &TransitionModel, reduced: &ReducedModel) -> Result<FactorizationResiduals> {
    let proj = build_projection(&model.input, &reduced.affiliation)?;
    let lambda_full = reduced.product();
    Ok(FactorizationResiduals {
        product: (&lambda_full - &model.transition * &proj.pi).amax(),
        invariant_input: (&proj.pi * &model.input - &model.input).amax(),
        output_marginal: (&lambda_full * &model.input - &model.output).amax(),
    })
}

/// Both sides of `||P~ - Lambda~||_F^2 = ||P~||_F^2 - ||Lambda~||_F^2`.
pub fn pythagoras_check(p_tilde: &DMatrix<f64>, lambda_tilde: &DMatrix<f64>) -> (f64, f64) {
    let lhs = (p_tilde - lambda_tilde).norm_squared();
    let rhs = p_tilde.norm_squared() - lambda_tilde.norm_squared();
    (lhs, rhs)
}

/// Pairs `(sigma_i(P~ Pi~), sigma_i(P~))` for `i < min(m, n)`.
pub fn singular_value_dominance(p_tilde: &DMatrix<f64>, pi_tilde: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    if p_tilde.ncols() != pi_tilde.nrows() {
        return Err(Error::shape(format!(
            "P~ has {} columns, Pi~ {} rows",
            p_tilde.ncols(),
            pi_tilde.nrows()
        )));
    }
    let reduced = svd::singular_values(&(p_tilde * pi_tilde))?;
    let full = svd::singular_values(p_tilde)?;
    Ok(reduced.into_iter().zip(full).collect())
}

/// Number of singular values above the rank cutoff used by [`svd::full_svd`].
pub fn numerical_rank(a: &DMatrix<f64>) -> Result<usize> {
    let sv = svd::singular_values(a)?;
    let cutoff = svd::RANK_TOL * a.nrows().max(a.ncols()) as f64 * sv.first().copied().unwrap_or(0.0);
    Ok(sv.iter().filter(|&&s| s > cutoff).count())
}
