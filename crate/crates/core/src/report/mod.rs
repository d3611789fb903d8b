//! Experiment reports: the classical pipeline and multi-start DBMR run on the
//! same counts, compared through singular values, likelihoods and the
//! Frobenius-KL bound. Also the multi-run statistics and CSV exports.

mod image;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::{frobenius_kl_bound, BoundReport, KappaChoice};
use crate::dbmr::{output_partition, DbmrProblem, DbmrSettings, MultiStart};
use crate::model::{prune_empty, CountMatrix, Pruned};
use crate::svd::{classical_pipeline, coherence_value, singular_values, ClassicalResult};
use crate::{Error, Partition, Result};

pub use image::{render_matrix_image, write_matrix_image, PALETTE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub rank: usize,
    pub runs: usize,
    pub h_max: usize,
    /// Input/output category counts before pruning.
    pub inputs: usize,
    pub outputs: usize,
    pub samples: u64,
    /// Categories dropped because they were never observed.
    pub pruned_inputs: usize,
    pub pruned_outputs: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub example: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<usize>,
}

/// Second and third singular values of `P~` (equal to those of the
/// truncated `P~_red`) and of `Lambda~`; `None` where the matrix has fewer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularValueCriteria {
    pub p_tilde_sigma2: Option<f64>,
    pub p_tilde_sigma3: Option<f64>,
    pub lambda_tilde_sigma2: Option<f64>,
    pub lambda_tilde_sigma3: Option<f64>,
}

/// Relaxed likelihood of the optimal `lambda` for each affiliation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodCriteria {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub default: Option<f64>,
    pub svd: f64,
    pub dbmr: f64,
    pub reference: f64,
}

impl LikelihoodCriteria {
    /// Every reduced value is at most the reference value.
    pub fn bounded_by_reference(&self, tol: f64) -> bool {
        let limit = self.reference + tol * (1.0 + self.reference.abs());
        self.default.is_none_or(|v| v <= limit) && self.svd <= limit && self.dbmr <= limit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSummary {
    /// Sum of the r leading singular values of `P~`.
    pub degree_p_tilde: f64,
    /// Sum of the singular values of `Lambda~`.
    pub degree_lambda_tilde: f64,
    /// `sum_k P[Y in F_k | X in E_k]` of the matched SVD partitions.
    pub svd_pairs: f64,
    /// Same for the DBMR affiliation and its output partition.
    pub dbmr_pairs: f64,
    /// `||P~||_F^2`
    pub p_tilde_norm_sq: f64,
}

/// 1-based labels over the original categories; 0 marks a category removed
/// by pruning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSet {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub default_input: Option<Vec<usize>>,
    pub svd_input: Vec<usize>,
    pub svd_output: Vec<usize>,
    pub dbmr_input: Vec<usize>,
    pub dbmr_output: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbmrSummary {
    pub best_run: usize,
    pub best_seed: u64,
    pub iterations: usize,
    pub converged_runs: usize,
    pub active_states: usize,
    pub unreachable_columns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    /// Full spectra, descending.
    pub p_tilde_spectrum: Vec<f64>,
    pub lambda_tilde_spectrum: Vec<f64>,
    pub criteria_a: SingularValueCriteria,
    pub criteria_b: LikelihoodCriteria,
    /// Bound with the a-posteriori constant.
    pub criteria_c: BoundReport,
    /// Bound with the a-priori constant.
    pub criteria_c_prior: BoundReport,
    pub coherence: CoherenceSummary,
    pub partitions: PartitionSet,
    /// Smallest entry of the truncated SVD model `P_red` (may be negative).
    pub p_red_min: f64,
    pub dbmr: DbmrSummary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareSettings {
    pub rank: usize,
    pub runs: usize,
    pub seed: u64,
    pub dbmr: DbmrSettings,
}

/// Everything [`compare`] computed, with the report.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: ExperimentReport,
    pub pruned: Pruned,
    pub problem: DbmrProblem,
    pub classical: ClassicalResult,
    pub multi: MultiStart,
}

fn expand(partition: &Partition, map: &[usize], len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for (k, &orig) in map.iter().enumerate() {
        out[orig] = partition.label(k) + 1;
    }
    out
}

/// Run both pipelines on `counts` and assemble the report. `default_input`
/// is a ground-truth partition over the original inputs, if known.
pub fn compare(
    counts: &CountMatrix,
    default_input: Option<&Partition>,
    settings: &CompareSettings,
) -> Result<Comparison> {
    let r = settings.rank;
    let pruned = prune_empty(counts)?;
    let reduced_counts = &pruned.counts;
    let problem = DbmrProblem::new(reduced_counts)?;
    let classical = classical_pipeline(reduced_counts, r, settings.seed, settings.dbmr.execution)?;
    let multi = problem.multi_start(r, settings.runs, settings.seed, &settings.dbmr)?;
    let best = multi.best_run();
    let model = &problem.model;

    let p_spec = singular_values(&model.rescaled)?;
    let l_spec = best.reduced.rescaled_spectrum(model)?;
    let svd_reduced = problem.update_lambda(&classical.e)?;
    let default = match default_input {
        Some(p) => {
            if p.len() != counts.inputs() {
                return Err(Error::shape(format!(
                    "default partition over {} inputs, data has {}",
                    p.len(),
                    counts.inputs()
                )));
            }
            let restricted = p.restrict(&pruned.col_map)?;
            let reduced = problem.update_lambda(&restricted)?;
            Some(problem.relaxed_likelihood(&reduced.lambda, &reduced.affiliation)?)
        }
        None => None,
    };
    let dbmr_f = output_partition(&best.reduced.lambda);

    let report = ExperimentReport {
        provenance: Provenance {
            seed: settings.seed,
            rank: r,
            runs: settings.runs,
            h_max: settings.dbmr.h_max,
            inputs: counts.inputs(),
            outputs: counts.outputs(),
            samples: counts.total(),
            pruned_inputs: counts.inputs() - pruned.col_map.len(),
            pruned_outputs: counts.outputs() - pruned.row_map.len(),
            example: None,
            epsilon: None,
        },
        criteria_a: SingularValueCriteria {
            p_tilde_sigma2: p_spec.get(1).copied(),
            p_tilde_sigma3: p_spec.get(2).copied(),
            lambda_tilde_sigma2: l_spec.get(1).copied(),
            lambda_tilde_sigma3: l_spec.get(2).copied(),
        },
        criteria_b: LikelihoodCriteria {
            default,
            svd: problem.relaxed_likelihood(&svd_reduced.lambda, &svd_reduced.affiliation)?,
            dbmr: best.trace.final_likelihood(),
            reference: problem.reference_likelihood,
        },
        criteria_c: frobenius_kl_bound(&problem, &best.reduced, KappaChoice::Post)?,
        criteria_c_prior: frobenius_kl_bound(&problem, &best.reduced, KappaChoice::Pr)?,
        coherence: CoherenceSummary {
            degree_p_tilde: p_spec.iter().take(r).sum(),
            degree_lambda_tilde: l_spec.iter().sum(),
            svd_pairs: classical.coherence_value,
            dbmr_pairs: coherence_value(model, &best.reduced.affiliation, &dbmr_f),
            p_tilde_norm_sq: problem.rescaled_norm_sq,
        },
        partitions: PartitionSet {
            default_input: default_input.map(Partition::to_one_based),
            svd_input: expand(&classical.e, &pruned.col_map, counts.inputs()),
            svd_output: expand(&classical.f, &pruned.row_map, counts.outputs()),
            dbmr_input: expand(&best.reduced.affiliation, &pruned.col_map, counts.inputs()),
            dbmr_output: expand(&dbmr_f, &pruned.row_map, counts.outputs()),
        },
        p_red_min: classical.p_red.min(),
        dbmr: DbmrSummary {
            best_run: multi.best,
            best_seed: best.seed,
            iterations: best.trace.iterations,
            converged_runs: multi.runs.iter().filter(|r| r.trace.converged).count(),
            active_states: best.reduced.active_states(),
            unreachable_columns: multi.runs.iter().map(|r| r.trace.unreachable_columns).sum(),
        },
        p_tilde_spectrum: p_spec,
        lambda_tilde_spectrum: l_spec,
    };
    Ok(Comparison {
        report,
        pruned,
        problem,
        classical,
        multi,
    })
}

/// Final state of one DBMR run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub spectrum: Vec<f64>,
    /// Sum of the singular values of `Lambda~`.
    pub coherence: f64,
    pub relaxed_likelihood: f64,
    pub frobenius_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One iterate of one run, for trajectory plots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub run: usize,
    pub h: usize,
    pub relaxed_likelihood: f64,
    pub lambda_tilde_norm_sq: f64,
    pub frobenius_gap: f64,
    pub coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRunRecord {
    pub rank: usize,
    pub seed: u64,
    pub reference_likelihood: f64,
    pub p_tilde_norm_sq: f64,
    pub best_run: usize,
    pub runs: Vec<RunSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trajectories: Vec<TrajectoryPoint>,
}

impl MultiRunRecord {
    /// Every run's trace is non-decreasing in the relaxed likelihood.
    pub fn trajectories_monotone(&self) -> bool {
        self.trajectories.windows(2).all(|w| {
            w[0].run != w[1].run || w[1].relaxed_likelihood >= w[0].relaxed_likelihood
        })
    }
}

pub fn multirun(
    problem: &DbmrProblem,
    rank: usize,
    runs: usize,
    seed: u64,
    trace: bool,
    settings: &DbmrSettings,
) -> Result<MultiRunRecord> {
    let settings = DbmrSettings {
        snapshots: false,
        ..*settings
    };
    let multi = problem.multi_start(rank, runs, seed, &settings)?;
    let mut summaries = Vec::with_capacity(runs);
    let mut trajectories = Vec::new();
    for (i, run) in multi.runs.iter().enumerate() {
        let last = run.trace.last();
        summaries.push(RunSummary {
            run: i,
            seed: run.seed,
            spectrum: run.reduced.rescaled_spectrum(&problem.model)?,
            coherence: last.coherence,
            relaxed_likelihood: last.relaxed_likelihood,
            frobenius_gap: last.frobenius_gap,
            iterations: run.trace.iterations,
            converged: run.trace.converged,
        });
        if trace {
            trajectories.extend(run.trace.iterates.iter().map(|it| TrajectoryPoint {
                run: i,
                h: it.h,
                relaxed_likelihood: it.relaxed_likelihood,
                lambda_tilde_norm_sq: it.lambda_tilde_norm_sq,
                frobenius_gap: it.frobenius_gap,
                coherence: it.coherence,
            }));
        }
    }
    Ok(MultiRunRecord {
        rank,
        seed,
        reference_likelihood: problem.reference_likelihood,
        p_tilde_norm_sq: problem.rescaled_norm_sq,
        best_run: multi.best,
        runs: summaries,
        trajectories,
    })
}

/// `run,seed,sigma_1..sigma_r,coherence,relaxed_likelihood,frobenius_gap,iterations,converged`
pub fn write_spectra_csv(record: &MultiRunRecord, mut w: impl Write) -> Result<()> {
    let width = record.runs.iter().map(|r| r.spectrum.len()).max().unwrap_or(0);
    let sigmas: Vec<String> = (1..=width).map(|k| format!("sigma_{k}")).collect();
    writeln!(
        w,
        "run,seed,{}{}coherence,relaxed_likelihood,frobenius_gap,iterations,converged",
        sigmas.join(","),
        if width > 0 { "," } else { "" }
    )?;
    for r in &record.runs {
        let mut cells = vec![r.run.to_string(), r.seed.to_string()];
        cells.extend((0..width).map(|k| r.spectrum.get(k).map_or(String::new(), |v| v.to_string())));
        cells.extend([
            r.coherence.to_string(),
            r.relaxed_likelihood.to_string(),
            r.frobenius_gap.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
        ]);
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// `run,h,relaxed_likelihood,lambda_tilde_norm_sq,frobenius_gap,coherence`
pub fn write_trajectories_csv(record: &MultiRunRecord, mut w: impl Write) -> Result<()> {
    writeln!(w, "run,h,relaxed_likelihood,lambda_tilde_norm_sq,frobenius_gap,coherence")?;
    for t in &record.trajectories {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            t.run, t.h, t.relaxed_likelihood, t.lambda_tilde_norm_sq, t.frobenius_gap, t.coherence
        )?;
    }
    w.flush()?;
    Ok(())
}
