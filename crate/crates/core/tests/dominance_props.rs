use proptest::prelude::*;
use stochdom_core::{
    dominance_gap, empirical_f1, empirical_f2, l_hat, solve_utility, Interval, Order,
    PiecewiseUtility,
};

// Values on a coarse lattice so that duplicates and ties are common.
fn sample(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![(-40i32..40).prop_map(|v| v as f64 / 8.0), -5.0f64..5.0],
        1..max_len,
    )
}

fn interval() -> impl Strategy<Value = Interval> {
    (-6.0f64..4.0, 0.1f64..6.0).prop_map(|(a, w)| Interval::new(a, a + w).unwrap())
}

fn order() -> impl Strategy<Value = Order> {
    prop_oneof![Just(Order::First), Just(Order::Second)]
}

fn f(order: Order, xs: &[f64], eta: f64) -> f64 {
    match order {
        Order::First => empirical_f1(xs, eta).unwrap(),
        Order::Second => empirical_f2(xs, eta).unwrap(),
    }
}

// Direct evaluation at every sample point inside the interval, the endpoints
// and a uniform grid. The difference is piecewise linear (or constant) between
// sample points, so its maximum sits at one of these.
fn brute_force(order: Order, xs: &[f64], ys: &[f64], iv: Interval) -> f64 {
    let mut points: Vec<f64> = xs
        .iter()
        .chain(ys)
        .copied()
        .filter(|&e| iv.contains(e))
        .collect();
    points.extend((0..=2000).map(|i| iv.a + iv.width() * i as f64 / 2000.0));
    points.push(iv.b);
    points
        .into_iter()
        .map(|e| f(order, xs, e) - f(order, ys, e))
        .fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn gap_matches_pointwise_oracle(xs in sample(60), ys in sample(60), iv in interval(), k in order()) {
        let gap = dominance_gap(k, &xs, &ys, iv).unwrap();
        let oracle = brute_force(k, &xs, &ys, iv);
        prop_assert!((gap.value - oracle).abs() <= 1e-9, "{} vs {}", gap.value, oracle);
        for eta in gap.argmax() {
            prop_assert!(iv.contains(eta));
            if !gap.degenerate {
                let d = f(k, &xs, eta) - f(k, &ys, eta);
                prop_assert!((d - gap.value).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn triangle_inequality(xs in sample(40), ys in sample(40), zs in sample(40), iv in interval(), k in order()) {
        let g = |p: &[f64], q: &[f64]| dominance_gap(k, p, q, iv).unwrap().value;
        prop_assert!(g(&xs, &zs) <= g(&xs, &ys) + g(&ys, &zs) + 1e-12);
    }

    #[test]
    fn identity_and_nonnegative_sum(xs in sample(40), ys in sample(40), iv in interval(), k in order()) {
        prop_assert_eq!(dominance_gap(k, &xs, &xs, iv).unwrap().value, 0.0);
        let forward = dominance_gap(k, &xs, &ys, iv).unwrap().value;
        let backward = dominance_gap(k, &ys, &xs, iv).unwrap().value;
        prop_assert!(forward + backward >= -1e-12);
    }

    #[test]
    fn pointwise_larger_coupling_dominates(
        pairs in prop::collection::vec((-5.0f64..5.0, 0.0f64..2.0), 1..60),
        iv in interval(),
    ) {
        let ys: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let xs: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
        prop_assert!(dominance_gap(Order::First, &xs, &ys, iv).unwrap().value <= 1e-12);
        prop_assert!(dominance_gap(Order::Second, &xs, &ys, iv).unwrap().value <= 1e-12);
    }

    #[test]
    fn solver_output_is_an_admissible_utility(xs in sample(60), ys in sample(60), iv in interval()) {
        let (u, gap) = solve_utility(&xs, &ys, iv).unwrap();
        prop_assert!((l_hat(&u, &xs, &ys).unwrap() - gap.value).abs() <= 1e-12);
        let top = *u.knots().last().unwrap();
        let probe: Vec<f64> = (0..200).map(|i| iv.a - 1.0 + (iv.width() + 2.0) * i as f64 / 199.0).collect();
        let vals: Vec<f64> = probe.iter().map(|&x| u.eval(x)).collect();
        for (i, &x) in probe.iter().enumerate() {
            prop_assert!(vals[i] <= 1e-15);
            if x >= top {
                prop_assert_eq!(vals[i], 0.0);
            }
            if i > 0 {
                prop_assert!(vals[i] >= vals[i - 1] - 1e-12);
            }
            if i > 0 && i + 1 < probe.len() {
                prop_assert!(vals[i] >= 0.5 * (vals[i - 1] + vals[i + 1]) - 1e-12);
            }
        }
    }

    #[test]
    fn no_point_mass_beats_the_solver(xs in sample(60), ys in sample(60), iv in interval()) {
        let (u, _) = solve_utility(&xs, &ys, iv).unwrap();
        let best = l_hat(&u, &xs, &ys).unwrap();
        let candidates = xs.iter().chain(&ys).copied().filter(|&e| iv.contains(e)).chain([iv.a, iv.b]);
        for eta in candidates {
            let v = l_hat(&PiecewiseUtility::point_mass(eta).unwrap(), &xs, &ys).unwrap();
            prop_assert!(v <= best + 1e-12, "delta at {eta}: {v} > {best}");
        }
    }

    #[test]
    fn derivative_matches_central_difference(
        knots in prop::collection::btree_set(-50i32..50, 1..6),
        raw in prop::collection::vec(0.05f64..1.0, 6),
        x in -7.0f64..7.0,
    ) {
        let knots: Vec<f64> = knots.into_iter().map(|k| k as f64 / 10.0).collect();
        let total: f64 = raw[..knots.len()].iter().sum();
        let mass: Vec<f64> = raw[..knots.len()].iter().map(|m| m / total).collect();
        prop_assume!(knots.iter().all(|k| (k - x).abs() > 1e-4));
        let u = PiecewiseUtility::from_measure(knots, mass).unwrap();
        let h = 1e-6;
        let fd = (u.eval(x + h) - u.eval(x - h)) / (2.0 * h);
        prop_assert!((fd - u.deriv(x)).abs() <= 1e-8);
    }
}

#[test]
fn normal_second_order_cdf_at_zero() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let xs: Vec<f64> = (0..200_000)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!((empirical_f2(&xs, 0.0).unwrap() - phi0).abs() < 0.02);
    assert!((empirical_f1(&xs, 0.0).unwrap() - 0.5).abs() < 0.05);
}
