mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stepup::montecarlo::{empirical_rejection_prob, Region};
use stepup::{
    order_squares, step_up, w_statistic, CutoffTable, EffectEstimates, McSettings, MethodId,
    OrderedSquares, TestConfig,
};

fn table(method: MethodId, d: &[f64]) -> CutoffTable {
    CutoffTable::new(
        method,
        TestConfig::new(15, 7, 0.05).unwrap(),
        d.to_vec(),
        500_000,
        1,
    )
    .unwrap()
}

fn reference(method: MethodId) -> CutoffTable {
    let d = match method {
        MethodId::Suf => common::REF_SUF,
        MethodId::Sufi => common::REF_SUFI,
        MethodId::Sus => common::REF_SUS,
        _ => common::REF_SUSI,
    };
    table(method, &d)
}

const STEP_UP: [MethodId; 4] = [MethodId::Suf, MethodId::Sufi, MethodId::Sus, MethodId::Susi];

#[test]
fn sequential_statistic_matches_q_form() {
    // W_{i-1,i} > d  <=>  S_nu < Q_i,  Q_i = (i-1) X_i / d - S_{i-1} + S_nu
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let nu = 7;
    for _ in 0..1000 {
        let os = common::random_squares(&mut rng, 15);
        for (i, d) in (nu + 1..=15).zip(common::REF_SUS) {
            let s_nu = os.partial_sum(nu);
            let q = (i - 1) as f64 * os.x(i) / d - os.partial_sum(i - 1) + s_nu;
            assert_eq!(w_statistic(i - 1, i, &os) > d, s_nu < q);
        }
    }
}

#[test]
fn prefix_regions_are_nested() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for method in STEP_UP {
        let full = reference(method);
        let s = method.scaling();
        for _ in 0..2000 {
            let os = common::random_squares(&mut rng, 15);
            let inside = |len: usize| {
                full.entries()
                    .take(len)
                    .any(|(m, d)| w_statistic(s.denominator_len(7, m), m, &os) > d)
            };
            for len in 1..8 {
                assert!(!inside(len) || inside(len + 1));
            }
        }
    }
}

#[test]
fn null_error_rate_near_alpha() {
    let mc = McSettings::with_seed(100_000, 4).unwrap();
    for method in [MethodId::Suf, MethodId::Sus] {
        let t = reference(method);
        let e = empirical_rejection_prob(&Region::StepUp(&t), &[0.0; 15], &mc).unwrap();
        assert!(
            (e.value - 0.05).abs() < 3.0 * e.se + 0.003,
            "{method}: {e:?}"
        );
    }
}

#[test]
fn far_effects_do_not_raise_single_test_rate() {
    let mc = McSettings::with_seed(100_000, 8).unwrap();
    let region = Region::Single {
        n: 7,
        m: 14,
        d: 60.0,
    };
    let mut lfc = vec![0.0; 15];
    lfc[14] = 1e6;
    let at_lfc = empirical_rejection_prob(&region, &lfc, &mc).unwrap();
    let mut mid = vec![0.0; 15];
    mid[14] = 2.0;
    let at_mid = empirical_rejection_prob(&region, &mid, &mc).unwrap();
    assert!(at_mid.value <= at_lfc.value + 3.0 * at_lfc.se.hypot(at_mid.se));
    assert!(
        empirical_rejection_prob(&Region::StepUp(&reference(MethodId::Suf)), &[1e6; 15], &mc)
            .is_err()
    );
}

fn estimates() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0f64..20.0, 15)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decisions_are_scale_invariant(v in estimates(), ci in 0usize..3) {
        let c = [1e-3, 1.0, 1e3][ci];
        let est = EffectEstimates::from_values(v).unwrap();
        let scaled = est.scaled_by(c).unwrap();
        for method in STEP_UP {
            let t = reference(method);
            let a = step_up(&order_squares(&est), &t, &est).unwrap();
            let b = step_up(&order_squares(&scaled), &t, &scaled).unwrap();
            prop_assert_eq!(a.m0, b.m0);
            prop_assert_eq!(a.active_labels, b.active_labels);
        }
    }

    #[test]
    fn decisions_partition_labels(v in estimates()) {
        let est = EffectEstimates::from_values(v).unwrap();
        for method in STEP_UP {
            let d = step_up(&order_squares(&est), &reference(method), &est).unwrap();
            let mut all: Vec<_> = d.active_labels.iter().chain(&d.inactive_labels).cloned().collect();
            all.sort();
            let mut want = est.labels().to_vec();
            want.sort();
            prop_assert_eq!(all, want);
        }
    }

    #[test]
    fn w_at_least_one(v in prop::collection::vec(0.0f64..50.0, 2..20)) {
        let os = OrderedSquares::from_squares(v).unwrap();
        if os.partial_sum(os.k()) > 0.0 {
            for m in 2..=os.k() {
                for n in 1..m {
                    prop_assert!(w_statistic(n, m, &os) >= 1.0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn smaller_cutoffs_reject_no_later(v in estimates(), shrink in 0.3f64..1.0) {
        let est = EffectEstimates::from_values(v).unwrap();
        let os = order_squares(&est);
        for method in STEP_UP {
            let t = reference(method);
            let lower: Vec<f64> = t.cutoffs().iter().map(|d| (d * shrink).max(1.0 + 1e-9)).collect();
            let t2 = table(method, &lower);
            if let Some(m) = step_up(&os, &t, &est).unwrap().m0 {
                let m2 = step_up(&os, &t2, &est).unwrap().m0;
                prop_assert!(m2.is_some_and(|m2| m2 <= m));
            }
        }
    }
}
