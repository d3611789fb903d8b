mod common;

use coherence_core::dbmr::{DbmrProblem, DbmrSettings};
use coherence_core::generators::{gen_interval_map, gen_three_coherent};
use coherence_core::model::{ingest_pairs, prune_empty, CountMatrix};
use coherence_core::report::{self, CompareSettings, ExperimentReport, MultiRunRecord};
use nalgebra::DMatrix;

fn settings(runs: usize, seed: u64) -> CompareSettings {
    CompareSettings {
        rank: 3,
        runs,
        seed,
        dbmr: DbmrSettings {
            snapshots: false,
            ..Default::default()
        },
    }
}

#[test]
fn report_round_trips_and_is_deterministic() {
    let (ds, labels) = gen_three_coherent(4, 17);
    let counts = ingest_pairs(&ds).unwrap();
    let a = report::compare(&counts, Some(&labels.input), &settings(12, 5)).unwrap().report;
    let b = report::compare(&counts, Some(&labels.input), &settings(12, 5)).unwrap().report;
    let text = serde_json::to_string_pretty(&a).unwrap();
    assert_eq!(text, serde_json::to_string_pretty(&b).unwrap());
    let parsed: ExperimentReport = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap(), text);

    assert!(a.criteria_b.bounded_by_reference(1e-9));
    assert!(a.criteria_c.chain_holds(1e-10, 1e-9));
    assert!(a.criteria_c_prior.chain_holds(1e-10, 1e-9));
    assert_eq!(a.provenance.samples, 25_000);
    assert_eq!(a.partitions.default_input.as_ref().unwrap().len(), 100);
}

#[test]
fn interval_map_report_values() {
    let (ds, labels) = gen_interval_map(0, 0);
    let counts = ingest_pairs(&ds).unwrap();
    let cmp = report::compare(&counts, Some(&labels.input), &settings(30, 0)).unwrap();
    let r = &cmp.report;
    assert!((r.criteria_a.p_tilde_sigma2.unwrap() - 1.0).abs() <= 1e-9);
    assert!((r.criteria_a.p_tilde_sigma3.unwrap() - 1.0).abs() <= 1e-9);
    assert!((r.criteria_b.default.unwrap() + 27549.7).abs() <= 1.0);
    assert!(r.criteria_b.svd <= r.criteria_b.dbmr + 1e-9);
    assert!((r.coherence.p_tilde_norm_sq - 30.0).abs() <= 1e-9);
}

#[test]
fn pruned_categories_are_marked_zero() {
    let mut c = DMatrix::from_element(4, 5, 3u64);
    c.column_mut(2).fill(0);
    c.row_mut(1).fill(0);
    let counts = CountMatrix::from_matrix(c);
    let r = report::compare(&counts, None, &settings(4, 1)).unwrap().report;
    assert_eq!(r.provenance.pruned_inputs, 1);
    assert_eq!(r.provenance.pruned_outputs, 1);
    assert_eq!(r.partitions.dbmr_input[2], 0);
    assert_eq!(r.partitions.svd_output[1], 0);
    assert!(r.partitions.dbmr_input.iter().enumerate().all(|(j, &l)| (j == 2) == (l == 0)));
}

#[test]
fn multirun_exports() {
    let counts = prune_empty(&ingest_pairs(&gen_three_coherent(0, 0).0).unwrap()).unwrap().counts;
    let problem = DbmrProblem::new(&counts).unwrap();
    let record = report::multirun(&problem, 3, 10, 0, true, &DbmrSettings::default()).unwrap();
    assert_eq!(record.runs.len(), 10);
    assert!(record.trajectories_monotone());
    let best = &record.runs[record.best_run];
    assert!(record.runs.iter().all(|r| r.relaxed_likelihood <= best.relaxed_likelihood));
    for run in &record.runs {
        assert!((run.spectrum[1] - 1.0).abs() <= 1e-9);
    }

    let mut spectra = Vec::new();
    report::write_spectra_csv(&record, &mut spectra).unwrap();
    let spectra = String::from_utf8(spectra).unwrap();
    assert_eq!(spectra.lines().count(), 11);
    let mut traj = Vec::new();
    report::write_trajectories_csv(&record, &mut traj).unwrap();
    assert_eq!(String::from_utf8(traj).unwrap().lines().count(), record.trajectories.len() + 1);

    let text = serde_json::to_string(&record).unwrap();
    let back: MultiRunRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}
