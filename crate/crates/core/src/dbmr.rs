//! Direct Bayesian model reduction.
//!
//! Maximizes the relaxed log-likelihood
//! `l(lambda, gamma) = sum_ij N_ij log lambda[i, gamma(j)]`
//! by alternating the two closed-form partial maximizers:
//!
//! - [`update_lambda`]: for fixed `gamma`, column `k` of `lambda` is the
//!   pooled output distribution of the inputs assigned to `k`;
//! - [`update_gamma`]: for fixed `lambda`, each input picks the latent state
//!   with the largest log-score `sum_i N_ij log lambda[i, k]`.
//!
//! Affiliations are hard and stored as a [`Partition`] of the inputs with
//! `r` labels. Neither the r x n affiliation matrix nor the projection is
//! materialized in the loop; `Lambda = lambda * Gamma` is a column gather.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{estimate, CountMatrix, TransitionModel};
use crate::{rng, svd, Error, Execution, Partition, Result};

/// Binary r x n matrix with `Gamma[(gamma(j), j)] = 1`.
pub fn affiliation_matrix(affiliation: &Partition) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(affiliation.clusters(), affiliation.len());
    for (j, &k) in affiliation.labels().iter().enumerate() {
        g[(k, j)] = 1.0;
    }
    g
}

/// Factor `lambda` (m x r) together with the affiliation it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub lambda: DMatrix<f64>,
    pub affiliation: Partition,
    /// `inactive[k]`: no input is assigned to `k`; column `k` of `lambda` is
    /// the uniform placeholder.
    pub inactive: Vec<bool>,
}

impl ReducedModel {
    pub fn states(&self) -> usize {
        self.lambda.ncols()
    }

    /// Number of latent states with at least one input.
    pub fn active_states(&self) -> usize {
        self.inactive.iter().filter(|&&x| !x).count()
    }

    /// `Lambda = lambda * Gamma` (m x n).
    pub fn product(&self) -> DMatrix<f64> {
        let labels = self.affiliation.labels();
        DMatrix::from_fn(self.lambda.nrows(), labels.len(), |i, j| self.lambda[(i, labels[j])])
    }

    /// `Lambda~ = D_q^{-1/2} Lambda D_p^{1/2}`.
    pub fn rescaled(&self, model: &TransitionModel) -> DMatrix<f64> {
        model.rescale(&self.product())
    }

    /// m x r matrix `A = D_q^{-1/2} lambda diag(sqrt(w))`, `w_k` the input
    /// mass of state `k`. `Lambda~ = A B` with `B` having orthonormal rows, so
    /// `A` carries the singular values and Frobenius norm of `Lambda~`.
    pub fn rescaled_factor(&self, model: &TransitionModel) -> DMatrix<f64> {
        let mut w = vec![0.0; self.states()];
        for (j, &k) in self.affiliation.labels().iter().enumerate() {
            w[k] += model.input[j];
        }
        DMatrix::from_fn(self.lambda.nrows(), self.states(), |i, k| {
            self.lambda[(i, k)] * w[k].sqrt() / model.output[i].sqrt()
        })
    }

    /// Singular values of `Lambda~`, descending, `min(m, r)` of them.
    pub fn rescaled_spectrum(&self, model: &TransitionModel) -> Result<Vec<f64>> {
        svd::singular_values(&self.rescaled_factor(model))
    }
}

/// Column-sparse view of a pruned count matrix plus the quantities every
/// DBMR iteration needs.
#[derive(Debug, Clone)]
pub struct DbmrProblem {
    columns: Vec<Vec<(usize, u64)>>,
    col_sums: Vec<u64>,
    outputs: usize,
    total: u64,
    pub model: TransitionModel,
    /// `l(P, Id)`, the upper bound of every relaxed likelihood.
    pub reference_likelihood: f64,
    /// `||P~||_F^2`.
    pub rescaled_norm_sq: f64,
}

impl DbmrProblem {
    pub fn new(counts: &CountMatrix) -> Result<Self> {
        let model = estimate(counts)?;
        let columns = counts.sparse_columns();
        let col_sums = counts.col_sums();
        let reference_likelihood = columns
            .iter()
            .zip(&col_sums)
            .map(|(col, &s)| {
                col.iter()
                    .map(|&(_, c)| c as f64 * (c as f64 / s as f64).ln())
                    .sum::<f64>()
            })
            .sum();
        Ok(Self {
            rescaled_norm_sq: model.rescaled.norm_squared(),
            columns,
            col_sums,
            outputs: counts.outputs(),
            total: counts.total(),
            model,
            reference_likelihood,
        })
    }

    pub fn inputs(&self) -> usize {
        self.columns.len()
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Sample count `S`.
    pub fn total(&self) -> u64 {
        self.total
    }

    fn check_affiliation(&self, affiliation: &Partition) -> Result<()> {
        if affiliation.len() != self.inputs() {
            return Err(Error::shape(format!(
                "affiliation over {} inputs for {} columns",
                affiliation.len(),
                self.inputs()
            )));
        }
        Ok(())
    }

    fn check_lambda(&self, lambda: &DMatrix<f64>) -> Result<()> {
        if lambda.nrows() != self.outputs || lambda.ncols() == 0 {
            return Err(Error::shape(format!(
                "lambda is {}x{}, expected {} rows",
                lambda.nrows(),
                lambda.ncols(),
                self.outputs
            )));
        }
        Ok(())
    }

    /// `sum_ij N_ij log lambda[i, gamma(j)]`, `-inf` if a positive count meets
    /// a zero entry.
    pub fn relaxed_likelihood(&self, lambda: &DMatrix<f64>, affiliation: &Partition) -> Result<f64> {
        self.check_lambda(lambda)?;
        self.check_affiliation(affiliation)?;
        if affiliation.clusters() != lambda.ncols() {
            return Err(Error::shape(format!(
                "affiliation has {} states, lambda {} columns",
                affiliation.clusters(),
                lambda.ncols()
            )));
        }
        let mut total = 0.0;
        for (col, &k) in self.columns.iter().zip(affiliation.labels()) {
            for &(i, c) in col {
                total += c as f64 * lambda[(i, k)].ln();
            }
        }
        Ok(total)
    }

    /// Pooled column distributions per latent state.
    pub fn update_lambda(&self, affiliation: &Partition) -> Result<ReducedModel> {
        self.check_affiliation(affiliation)?;
        let r = affiliation.clusters();
        let m = self.outputs;
        let mut pooled = vec![0u64; m * r];
        let mut mass = vec![0u64; r];
        for ((col, &s), &k) in self.columns.iter().zip(&self.col_sums).zip(affiliation.labels()) {
            mass[k] += s;
            for &(i, c) in col {
                pooled[k * m + i] += c;
            }
        }
        let inactive: Vec<bool> = mass.iter().map(|&s| s == 0).collect();
        let lambda = DMatrix::from_fn(m, r, |i, k| {
            if inactive[k] {
                1.0 / m as f64
            } else {
                pooled[k * m + i] as f64 / mass[k] as f64
            }
        });
        Ok(ReducedModel {
            lambda,
            affiliation: affiliation.clone(),
            inactive,
        })
    }

    /// Columnwise argmax of the log-scores; ties and all `-inf` columns go to
    /// the smallest state index.
    pub fn update_gamma(&self, lambda: &DMatrix<f64>) -> Result<GammaUpdate> {
        self.check_lambda(lambda)?;
        let r = lambda.ncols();
        let log_lambda = lambda.map(f64::ln);
        let mut labels = Vec::with_capacity(self.inputs());
        let mut unreachable = Vec::new();
        for (j, col) in self.columns.iter().enumerate() {
            let mut best = (0, f64::NEG_INFINITY);
            for k in 0..r {
                let mut score = 0.0;
                for &(i, c) in col {
                    score += c as f64 * log_lambda[(i, k)];
                }
                if score > best.1 {
                    best = (k, score);
                }
            }
            if best.1 == f64::NEG_INFINITY {
                unreachable.push(j);
            }
            labels.push(best.0);
        }
        Ok(GammaUpdate {
            affiliation: Partition::new(labels, r)?,
            unreachable,
        })
    }

    /// Squared Frobenius distance `||P~ - Lambda~||_F^2`.
    pub fn frobenius_gap(&self, reduced: &ReducedModel) -> f64 {
        let model = &self.model;
        let labels = reduced.affiliation.labels();
        let mut total = 0.0;
        for j in 0..self.inputs() {
            let sp = model.input[j].sqrt();
            for i in 0..self.outputs {
                let d = (model.transition[(i, j)] - reduced.lambda[(i, labels[j])]) * sp / model.output[i].sqrt();
                total += d * d;
            }
        }
        total
    }

    /// One DBMR run from `gamma0`, see [`DbmrSettings`] for the stop rule.
    pub fn run(&self, gamma0: &Partition, settings: &DbmrSettings) -> Result<(ReducedModel, DbmrTrace)> {
        if settings.h_max == 0 {
            return Err(Error::invalid("h_max must be at least 1"));
        }
        let r = gamma0.clusters();
        let mut reduced = self.update_lambda(gamma0)?;
        let mut value = self.relaxed_likelihood(&reduced.lambda, &reduced.affiliation)?;
        let mut iterates = vec![self.iterate(0, &reduced, value, settings.snapshots)?];
        let mut unreachable = 0;
        let mut converged = false;
        let mut h = 0;
        while h < settings.h_max {
            h += 1;
            let update = self.update_gamma(&reduced.lambda)?;
            unreachable += update.unreachable.len();
            reduced = self.update_lambda(&update.affiliation)?;
            let next = self.relaxed_likelihood(&reduced.lambda, &reduced.affiliation)?;
            iterates.push(self.iterate(h, &reduced, next, settings.snapshots)?);
            if next <= value + settings.tolerance {
                converged = true;
                break;
            }
            value = next;
        }
        debug_assert_eq!(reduced.states(), r);
        Ok((
            reduced,
            DbmrTrace {
                iterates,
                converged,
                iterations: h,
                unreachable_columns: unreachable,
            },
        ))
    }

    fn iterate(&self, h: usize, reduced: &ReducedModel, value: f64, snapshot: bool) -> Result<DbmrIterate> {
        let factor = reduced.rescaled_factor(&self.model);
        let spectrum = svd::singular_values(&factor)?;
        Ok(DbmrIterate {
            h,
            relaxed_likelihood: value,
            frobenius_gap: self.frobenius_gap(reduced),
            coherence: spectrum.iter().sum(),
            lambda_tilde_norm_sq: factor.norm_squared(),
            active_states: reduced.active_states(),
            gamma: snapshot.then(|| reduced.affiliation.to_one_based()),
        })
    }

    /// Independent runs from uniformly random affiliations; run `i` uses
    /// seed `mix(master_seed, i)`.
    pub fn multi_start(
        &self,
        r: usize,
        runs: usize,
        master_seed: u64,
        settings: &DbmrSettings,
    ) -> Result<MultiStart> {
        if runs == 0 {
            return Err(Error::invalid("at least one DBMR run is required"));
        }
        if r == 0 {
            return Err(Error::invalid("at least one latent state is required"));
        }
        let n = self.inputs();
        let results = settings.execution.map_indexed(runs, |i| {
            let seed = rng::mix(master_seed, i as u64);
            let gamma0 = random_affiliation(n, r, seed);
            self.run(&gamma0, settings).map(|(reduced, trace)| DbmrRun { seed, reduced, trace })
        });
        let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
        let mut best = 0;
        for (i, run) in runs.iter().enumerate() {
            if run.trace.final_likelihood() > runs[best].trace.final_likelihood() {
                best = i;
            }
        }
        Ok(MultiStart { best, runs })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaUpdate {
    pub affiliation: Partition,
    /// Inputs whose every latent score was `-inf` (assigned to state 0).
    pub unreachable: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbmrSettings {
    /// Maximal number of (gamma, lambda) update pairs.
    pub h_max: usize,
    /// Stop once an update improves the relaxed likelihood by at most this.
    /// Zero stops exactly when the value no longer increases.
    pub tolerance: f64,
    /// Keep the affiliation of every iterate in the trace.
    pub snapshots: bool,
    pub execution: Execution,
}

impl Default for DbmrSettings {
    fn default() -> Self {
        Self {
            h_max: 500,
            tolerance: 0.0,
            snapshots: true,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbmrIterate {
    pub h: usize,
    pub relaxed_likelihood: f64,
    /// `||P~ - Lambda~||_F^2`
    pub frobenius_gap: f64,
    /// Sum of the singular values of `Lambda~`.
    pub coherence: f64,
    /// `||Lambda~||_F^2`
    pub lambda_tilde_norm_sq: f64,
    pub active_states: usize,
    /// 1-based affiliation; `lambda` is recovered by [`DbmrProblem::update_lambda`].
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbmrTrace {
    /// Iterate 0 is the initial affiliation with its optimal `lambda`.
    pub iterates: Vec<DbmrIterate>,
    pub converged: bool,
    pub iterations: usize,
    pub unreachable_columns: usize,
}

impl DbmrTrace {
    pub fn final_likelihood(&self) -> f64 {
        self.iterates.last().map_or(f64::NEG_INFINITY, |it| it.relaxed_likelihood)
    }

    pub fn last(&self) -> &DbmrIterate {
        self.iterates.last().expect("trace holds the initial iterate")
    }

    pub fn is_monotone(&self) -> bool {
        self.iterates
            .windows(2)
            .all(|w| w[1].relaxed_likelihood >= w[0].relaxed_likelihood)
    }
}

#[derive(Debug, Clone)]
pub struct DbmrRun {
    pub seed: u64,
    pub reduced: ReducedModel,
    pub trace: DbmrTrace,
}

#[derive(Debug, Clone)]
pub struct MultiStart {
    /// Index of the run with the largest final relaxed likelihood (lowest
    /// index among ties).
    pub best: usize,
    pub runs: Vec<DbmrRun>,
}

impl MultiStart {
    pub fn best_run(&self) -> &DbmrRun {
        &self.runs[self.best]
    }
}

/// Affiliation with i.i.d. uniform labels in `0..r`.
pub fn random_affiliation(n: usize, r: usize, seed: u64) -> Partition {
    let mut rng = rng::stream(seed);
    let labels = (0..n).map(|_| if r == 1 { 0 } else { rng.random_range(0..r) }).collect();
    Partition::new(labels, r.max(1)).expect("labels drawn below r")
}

/// `sum_ij N_ij log Lambda_ij` for a full m x n matrix.
pub fn likelihood(counts: &CountMatrix, lambda_full: &DMatrix<f64>) -> Result<f64> {
    if lambda_full.shape() != counts.counts().shape() {
        return Err(Error::shape(format!(
            "Lambda is {:?}, counts {:?}",
            lambda_full.shape(),
            counts.counts().shape()
        )));
    }
    let mut total = 0.0;
    for (j, col) in counts.sparse_columns().iter().enumerate() {
        for &(i, c) in col {
            total += c as f64 * lambda_full[(i, j)].ln();
        }
    }
    Ok(total)
}

/// Output partition: row `i` goes to the state with the largest
/// `lambda[i, k]`, smallest `k` among ties.
pub fn output_partition(lambda: &DMatrix<f64>) -> Partition {
    let labels = (0..lambda.nrows())
        .map(|i| {
            let mut best = 0;
            for k in 1..lambda.ncols() {
                if lambda[(i, k)] > lambda[(i, best)] {
                    best = k;
                }
            }
            best
        })
        .collect();
    Partition::new(labels, lambda.ncols().max(1)).expect("argmax below column count")
}
