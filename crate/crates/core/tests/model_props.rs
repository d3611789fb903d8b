mod common;

use coherence_core::model::{estimate, ingest_pairs, kl_divergence, CountMatrix};
use coherence_core::svd::full_svd;
use coherence_core::PairDataset;
use nalgebra::DVector;
use proptest::prelude::*;

proptest! {
    #[test]
    fn estimators_are_consistent(counts in common::counts_strategy(9, 7)) {
        let model = estimate(&counts).unwrap();
        for col in model.transition.column_iter() {
            prop_assert!((col.sum() - 1.0).abs() <= 1e-12);
        }
        let q = &model.transition * &model.input;
        prop_assert!((q - &model.output).amax() <= 1e-12);

        let oracle = common::model(&counts);
        for (i, row) in oracle.p_mat.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                prop_assert!((model.transition[(i, j)] - v).abs() <= 1e-15);
            }
        }
        let rescaled = common::rescale(&oracle.p_mat, &oracle.p, &oracle.q);
        prop_assert!(common::max_abs_diff(&rescaled, &model.rescaled) <= 1e-14);

        let ones_in = DVector::from_element(model.inputs(), 1.0);
        let ones_out = &model.density * ones_in;
        prop_assert!(ones_out.iter().all(|v| (v - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn top_singular_pair_is_known(counts in common::counts_strategy(9, 7)) {
        let model = estimate(&counts).unwrap();
        let svd = full_svd(&model.rescaled).unwrap();
        prop_assert!((svd.sigma[0] - 1.0).abs() <= 1e-9);
        let sqrt_p = model.input.map(f64::sqrt);
        let v1 = svd.v.column(0);
        let cos = v1.dot(&sqrt_p).abs() / (v1.norm() * sqrt_p.norm());
        prop_assert!((cos - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn kl_is_a_divergence(seed in any::<u64>(), m in 2usize..10) {
        let mut rng = common::rng(seed);
        let u = common::random_simplex(&mut rng, m, true);
        let v = common::random_simplex(&mut rng, m, false);
        let d = kl_divergence(&u, &v).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!((d - common::kl(&u, &v)).abs() <= 1e-12);
        prop_assert_eq!(kl_divergence(&u, &u).unwrap(), 0.0);
        if u != v {
            prop_assert!(d > 0.0);
        }
    }

    #[test]
    fn ingest_reproduces_counts(counts in common::counts_strategy(7, 4)) {
        let (m, n) = (counts.outputs(), counts.inputs());
        let mut records = Vec::new();
        for j in 0..n {
            for i in 0..m {
                records.extend(std::iter::repeat_n((j, i), counts.get(i, j) as usize));
            }
        }
        let back = ingest_pairs(&PairDataset::new(n, m, records)).unwrap();
        prop_assert_eq!(back, counts);
    }
}

#[test]
fn unpruned_counts_are_rejected() {
    let counts = CountMatrix::from_rows(2, 2, &[1, 0, 1, 0]).unwrap();
    assert!(estimate(&counts).is_err());
}
