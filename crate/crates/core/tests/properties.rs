use proptest::prelude::*;
use timechange_core::bernstein::{BernsteinChar, LevyMeasure, OrderAtom};
use timechange_core::checks;
use timechange_core::mc::McSettings;
use timechange_core::models::{MarkovModel, TestFunction};
use timechange_core::sampler::RngStream;
use timechange_core::stats::{pairwise_merge, Moments};

fn measure() -> impl Strategy<Value = LevyMeasure> {
    prop_oneof![
        (0.05..0.95f64).prop_map(|b| LevyMeasure::stable(b).unwrap()),
        (0.1..5.0f64, 0.1..5.0f64).prop_map(|(c, r)| LevyMeasure::gamma(c, r).unwrap()),
        (0.05..0.95f64, 0.05..0.95f64, 0.1..1.0f64).prop_map(|(b1, b2, w)| {
            LevyMeasure::distributed_order(vec![
                OrderAtom { beta: b1, weight: w },
                OrderAtom { beta: b2, weight: 1.0 - w + 0.05 },
            ])
            .unwrap()
        }),
        (0.1..0.9f64).prop_map(|b| {
            let pts: Vec<(f64, f64)> = (0..24)
                .map(|i| {
                    let z = 1e-4 * 10f64.powf(i as f64 * 0.25);
                    (z, z.powf(-b) * (-z).exp())
                })
                .collect();
            LevyMeasure::tabulated(&pts).unwrap()
        }),
    ]
}

fn characteristics() -> impl Strategy<Value = BernsteinChar> {
    (0.0..3.0f64, prop_oneof![Just(0.0), 0.0..2.0f64], measure())
        .prop_map(|(a, k, mu)| BernsteinChar::new(a, k, mu).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn constants_are_preserved(ch in characteristics()) {
        prop_assert_eq!(checks::constant_preservation(&ch, 1.0, 1e-2), Ok(()));
    }

    #[test]
    fn eigen_decay_is_monotone(ch in characteristics(), theta in 0.01..3.0f64) {
        prop_assert_eq!(checks::monotone_decay(&ch, theta, 1.0, 1e-2), Ok(()));
    }

    #[test]
    fn paths_are_monotone(ch in characteristics(), stream in any::<u64>()) {
        prop_assert_eq!(checks::path_monotonicity(&ch, 1e-2, 300, RngStream::new(17, stream)), Ok(()));
    }

    #[test]
    fn weights_are_toeplitz(ch in characteristics(), dt in 1e-3..1e-1f64) {
        prop_assert_eq!(checks::toeplitz_weights(&ch.kernel(), dt, 30), Ok(()));
    }

    #[test]
    fn tail_integral_is_concave(ch in characteristics(), h in 1e-3..0.5f64) {
        prop_assert_eq!(checks::g_concavity(&ch.kernel(), h, 30), Ok(()));
    }

    #[test]
    fn phi_differences_alternate(ch in characteristics(), lambda in 1e-2..50.0f64, h in 1e-2..2.0f64) {
        prop_assert_eq!(checks::phi_alternating(&ch, lambda, h), Ok(()));
    }

    #[test]
    fn merge_tree_matches_sequential_moments(xs in prop::collection::vec(-10.0..10.0f64, 2..200), cut in 1usize..8) {
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let blocks: Vec<Moments> = xs
            .chunks(cut)
            .map(|c| {
                let mut m = Moments::default();
                c.iter().for_each(|&x| m.push(x));
                m
            })
            .collect();
        let merged = pairwise_merge(&blocks);
        prop_assert_eq!(merged.count, all.count);
        prop_assert!((merged.mean - all.mean).abs() < 1e-12);
        prop_assert!((merged.variance() - all.variance()).abs() < 1e-9 * all.variance().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn estimates_respect_uniform_bound(
        ch in characteristics(),
        theta in 0.0..2.0f64,
        t in 0.1..1.0f64,
        seed in any::<u64>(),
    ) {
        let model = MarkovModel::eigen(theta).unwrap();
        let settings = McSettings::new(200, seed).step(1e-2);
        prop_assert_eq!(
            checks::uniform_bound(&ch, &model, &TestFunction::Sine { mode: 1 }, &[t, 2.0 * t], 1.3, &settings),
            Ok(())
        );
    }
}
