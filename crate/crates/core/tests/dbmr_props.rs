mod common;

use coherence_core::dbmr::{likelihood, random_affiliation, DbmrProblem, DbmrSettings};
use coherence_core::Partition;
use nalgebra::DMatrix;
use proptest::prelude::*;

proptest! {
    #[test]
    fn traces_are_monotone_and_bounded((counts, labels, r) in common::instance_strategy(10, 4), seed in any::<u64>()) {
        let problem = DbmrProblem::new(&counts).unwrap();
        let reference = common::reference_likelihood(&counts);
        prop_assert!((problem.reference_likelihood - reference).abs() <= 1e-9 * (1.0 + reference.abs()));
        let settings = DbmrSettings::default();
        for gamma0 in [Partition::new(labels, r).unwrap(), random_affiliation(counts.inputs(), r, seed)] {
            let (reduced, trace) = problem.run(&gamma0, &settings).unwrap();
            prop_assert!(trace.converged);
            prop_assert!(trace.iterations <= settings.h_max);
            prop_assert!(trace.is_monotone());
            for it in &trace.iterates {
                prop_assert!(it.relaxed_likelihood <= reference + 1e-9 * reference.abs());
                let gamma = Partition::from_one_based(it.gamma.as_ref().unwrap()).unwrap();
                let snapshot = problem.update_lambda(&gamma).unwrap();
                let ell = problem.relaxed_likelihood(&snapshot.lambda, &gamma).unwrap();
                prop_assert!((ell - it.relaxed_likelihood).abs() <= 1e-9 * (1.0 + ell.abs()));
            }
            let last = trace.final_likelihood();
            let oracle = common::relaxed_likelihood(&counts, &reduced.lambda, reduced.affiliation.labels());
            prop_assert!((last - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()));
        }
    }

    #[test]
    fn relaxed_equals_full_likelihood_on_hard_affiliations((counts, labels, r) in common::instance_strategy(10, 4)) {
        let problem = DbmrProblem::new(&counts).unwrap();
        let gamma = Partition::new(labels.clone(), r).unwrap();
        let reduced = problem.update_lambda(&gamma).unwrap();
        let relaxed = problem.relaxed_likelihood(&reduced.lambda, &gamma).unwrap();
        let full = likelihood(&counts, &reduced.product()).unwrap();
        prop_assert!((relaxed - full).abs() <= 1e-9 * (1.0 + full.abs()));

        let oracle = common::pooled_lambda(&counts, &labels, r);
        for (i, row) in oracle.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                if reduced.inactive[k] {
                    prop_assert!(v.is_nan());
                } else {
                    prop_assert!((reduced.lambda[(i, k)] - v).abs() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn pooled_lambda_is_optimal((counts, labels, r) in common::instance_strategy(10, 4), seed in any::<u64>()) {
        let problem = DbmrProblem::new(&counts).unwrap();
        let gamma = Partition::new(labels, r).unwrap();
        let reduced = problem.update_lambda(&gamma).unwrap();
        let best = problem.relaxed_likelihood(&reduced.lambda, &gamma).unwrap();
        let mut rng = common::rng(seed);
        let m = counts.outputs();
        for _ in 0..100 {
            let target = common::random_stochastic(&mut rng, m, r);
            let moved: DMatrix<f64> = &reduced.lambda * (1.0 - 1e-3) + target * 1e-3;
            let ell = problem.relaxed_likelihood(&moved, &gamma).unwrap();
            prop_assert!(ell <= best + 1e-9 * best.abs());
        }
    }

    #[test]
    fn gamma_update_takes_columnwise_maxima((counts, _labels, r) in common::instance_strategy(10, 4), seed in any::<u64>()) {
        let problem = DbmrProblem::new(&counts).unwrap();
        let mut rng = common::rng(seed);
        let lambda = common::random_stochastic(&mut rng, counts.outputs(), r);
        let update = problem.update_gamma(&lambda).unwrap();
        let table = common::table(&counts);
        let score = |j: usize, k: usize| -> f64 {
            table.iter().enumerate().map(|(i, row)| if row[j] > 0.0 { row[j] * lambda[(i, k)].ln() } else { 0.0 }).sum()
        };
        for j in 0..counts.inputs() {
            let chosen = score(j, update.affiliation.label(j));
            for k in 0..r {
                prop_assert!(chosen >= score(j, k) - 1e-9 * (1.0 + chosen.abs()));
            }
        }
    }
}

#[test]
fn multi_start_is_reproducible_and_sequential_matches_parallel() {
    let mut rng = common::rng(11);
    let counts = common::random_counts(&mut rng, 12, 15, 9);
    let problem = DbmrProblem::new(&counts).unwrap();
    let seq = DbmrSettings {
        execution: coherence_core::Execution::Sequential,
        ..Default::default()
    };
    let a = problem.multi_start(3, 8, 42, &seq).unwrap();
    let b = problem.multi_start(3, 8, 42, &DbmrSettings::default()).unwrap();
    assert_eq!(a.best, b.best);
    for (x, y) in a.runs.iter().zip(&b.runs) {
        assert_eq!(x.seed, y.seed);
        assert_eq!(x.reduced, y.reduced);
        assert_eq!(x.trace, y.trace);
    }
    let best = a.best_run().trace.final_likelihood();
    assert!(a.runs.iter().all(|r| r.trace.final_likelihood() <= best));
}
