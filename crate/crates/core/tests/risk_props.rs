use proptest::prelude::*;
use stochdom_core::risk::{cvar, dro_bruteforce, dro_value, mad, mean, semideviation1};
use stochdom_core::{dominance_gap, Interval, MetricReport, Order};

fn batch(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![(-20i32..20).prop_map(|v| v as f64 / 4.0), -5.0f64..5.0],
        1..max_len,
    )
}

// X together with a mean-preserving spread of X shifted down by `shift`:
// X dominates Y in the second order.
fn ssd_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec((-5.0f64..5.0, 0.0f64..2.0), 1..40),
        0.0f64..0.5,
    )
        .prop_map(|(pairs, shift)| {
            let xs: Vec<f64> = pairs.iter().flat_map(|p| [p.0, p.0]).collect();
            let ys: Vec<f64> = pairs
                .iter()
                .flat_map(|p| [p.0 - p.1 - shift, p.0 + p.1 - shift])
                .collect();
            (xs, ys)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn dro_closed_form_matches_vertex_enumeration(xs in batch(9), step in 1usize..20) {
        let rho = step as f64 * 0.05;
        let closed = dro_value(&xs, rho).unwrap();
        let brute = dro_bruteforce(&xs, rho).unwrap();
        prop_assert!((closed - brute).abs() <= 1e-12, "{closed} vs {brute}");
    }

    #[test]
    fn mad_is_at_most_twice_semideviation(xs in batch(50)) {
        prop_assert!(mad(&xs).unwrap() <= 2.0 * semideviation1(&xs).unwrap() + 1e-12);
    }

    #[test]
    fn cvar_is_monotone_in_alpha(xs in batch(50), a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(cvar(&xs, lo).unwrap() <= cvar(&xs, hi).unwrap() + 1e-12);
        prop_assert!((cvar(&xs, 1.0).unwrap() - mean(&xs).unwrap()).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn second_order_dominance_orders_mean_minus_semideviation((xs, ys) in ssd_pair()) {
        let lo = xs.iter().chain(&ys).copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().chain(&ys).copied().fold(f64::NEG_INFINITY, f64::max);
        let iv = Interval::new(lo - 1.0, hi + 1.0).unwrap();
        let gap = dominance_gap(Order::Second, &xs, &ys, iv).unwrap().value;
        prop_assert!(gap <= 1e-9);
        let score = |s: &[f64]| mean(s).unwrap() - semideviation1(s).unwrap();
        prop_assert!(score(&xs) >= score(&ys) - 1e-9, "{} < {}", score(&xs), score(&ys));
        prop_assert!(mean(&xs).unwrap() >= mean(&ys).unwrap() - 1e-9);
    }
}

#[test]
fn report_keys_are_stable() {
    let report = MetricReport::from_samples(&[0.1, -0.2, 0.4, 0.3]).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    let keys: Vec<&str> = json
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    for key in [
        "mean", "variance", "std", "sharpe", "mad", "semidev1", "cvar_05", "cvar_10", "cvar_25",
        "dro_005", "dro_010", "dro_050",
    ] {
        assert!(keys.contains(&key), "missing {key}");
    }
    let constant = MetricReport::from_samples(&[2.0; 5]).unwrap();
    assert_eq!(constant.sharpe, None);
    assert_eq!(constant.dro_050, 2.0);
}
