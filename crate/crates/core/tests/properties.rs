use carnot_core::capacity::{capacity_energy, capacity_variational, AnnulusSpec};
use carnot_core::conformal::{classify_by_growth, rescale_structure, ConformalFactor, Verdict};
use carnot_core::metric::{cc_distance_field, BallVolumes, GrowthProfile};
use carnot_core::sr::{build_builtin, g_tau_norm, hausdorff_dimension, horizontal_gradient};
use carnot_core::{GridChart, ScalarField, ScalarFn};
use proptest::prelude::*;

fn few(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn rank_sequence() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..4, 1..6).prop_map(|steps| {
        steps
            .iter()
            .scan(0, |acc, s| {
                *acc += s;
                Some(*acc)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn hausdorff_dimension_dominates_the_rank(ranks in rank_sequence()) {
        let m = hausdorff_dimension(&ranks).unwrap();
        let n = *ranks.last().unwrap();
        prop_assert!(m >= n);
        prop_assert_eq!(m == n, ranks.len() == 1);
    }

    #[test]
    fn g_tau_norm_is_nonincreasing_in_tau(
        v in prop::collection::vec(-3.0f64..3.0, 3),
        t1 in 0.01f64..1.0,
        t2 in 0.01f64..1.0,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(g_tau_norm(&v, 2, lo).unwrap() >= g_tau_norm(&v, 2, hi).unwrap());
    }

    #[test]
    fn classify_power_models_by_exponent(k in 0.5f64..8.0, m in 2usize..7) {
        let g = GrowthProfile::power_model(1.3, k, m).unwrap();
        let verdict = classify_by_growth(&g).unwrap().verdict;
        let expected = if k <= m as f64 { Verdict::Parabolic } else { Verdict::Hyperbolic };
        prop_assert_eq!(verdict, expected);
    }
}

proptest! {
    #![proptest_config(few(16))]

    #[test]
    fn horizontal_gradient_is_linear(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        c in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let s = build_builtin("heisenberg_cc", &[1]).unwrap();
        let chart = GridChart::new(vec![-1.0; 3], vec![1.0; 3], vec![9; 3]).unwrap();
        let u = ScalarField::from_fn(&chart, |x| c[0] * x[0] * x[1] + c[1] * x[2] * x[2] + c[2] * x[0]);
        let w = ScalarField::from_fn(&chart, |x| c[3] * (x[1] + x[2]).sin() + c[4] * x[0] * x[2] + c[5]);
        let combined = horizontal_gradient(&u.combine(a, &w, b).unwrap(), &s).unwrap();
        let gu = horizontal_gradient(&u, &s).unwrap();
        let gw = horizontal_gradient(&w, &s).unwrap();
        for ((x, y), z) in combined.components().iter().zip(gu.components()).zip(gw.components()) {
            prop_assert!((x - (a * y + b * z)).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn constant_rescaling_keeps_conformal_energy(
        lambda in 0.2f64..5.0,
        c in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let chart = GridChart::new(vec![-1.0; 3], vec![1.0; 3], vec![9; 3]).unwrap();
        for (name, p) in [("heisenberg_cc", 4.0), ("euclidean", 3.0)] {
            let s = build_builtin(name, &[if name == "euclidean" { 3 } else { 1 }]).unwrap();
            let (t, _) = rescale_structure(&s, &ConformalFactor::Constant(lambda), None).unwrap();
            let u = ScalarField::from_fn(&chart, |x| 0.5 + 0.3 * (c[0] * x[0] + c[1] * x[1] * x[2] + c[2] * x[2]).tanh());
            let e0 = capacity_energy(&s, &u, p).unwrap();
            let e1 = capacity_energy(&t, &u, p).unwrap();
            prop_assert!((e1 / e0 - 1.0).abs() <= 1e-9, "{name}: {e0} vs {e1}");
        }
    }

    #[test]
    fn ball_volume_is_monotone(r1 in 0.0f64..0.9, r2 in 0.0f64..0.9) {
        let s = build_builtin("heisenberg_cc", &[1]).unwrap();
        let chart = GridChart::new(vec![-1.2, -1.2, -0.6], vec![1.2, 1.2, 0.6], vec![17; 3]).unwrap();
        let d = cc_distance_field(&s, &chart, &[0.0; 3], &[0.4, 0.2]).unwrap();
        let balls = BallVolumes::new(&d, &ScalarFn::one());
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(balls.volume(lo).unwrap() <= balls.volume(hi).unwrap());
    }
}

proptest! {
    #![proptest_config(few(6))]

    #[test]
    fn smaller_tau_dominates_nodewise(
        ox in -0.3f64..0.3,
        oy in -0.3f64..0.3,
        ot in -0.1f64..0.1,
    ) {
        let s = build_builtin("heisenberg_cc", &[1]).unwrap();
        let chart = GridChart::new(vec![-1.0, -1.0, -0.5], vec![1.0, 1.0, 0.5], vec![17; 3]).unwrap();
        let d = cc_distance_field(&s, &chart, &[ox, oy, ot], &[0.4, 0.2, 0.1]).unwrap();
        for pair in d.per_tau().windows(2) {
            for (coarse, fine) in pair[0].values().iter().zip(pair[1].values()) {
                prop_assert!(fine >= coarse);
            }
        }
    }

    #[test]
    fn minimizer_stays_in_the_unit_interval(a in 0.2f64..0.6, width in 0.2f64..0.8, p in 1.5f64..4.0) {
        let s = build_builtin("euclidean", &[2]).unwrap();
        let chart = GridChart::new(vec![-1.8; 2], vec![1.8; 2], vec![41; 2]).unwrap();
        let d = cc_distance_field(&s, &chart, &[0.0; 2], &[0.4, 0.2]).unwrap();
        let ann = AnnulusSpec::new(vec![0.0; 2], a, a + width).unwrap();
        let est = capacity_variational(&s, &ann, p, &d).unwrap();
        let u = est.minimizer.as_ref().unwrap();
        prop_assert!(u.values().iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(est.value <= est.seed_energy * (1.0 + 1e-12));
    }

    #[test]
    fn capacity_decreases_with_the_outer_radius(b1 in 0.6f64..1.0, gap in 0.1f64..0.5) {
        let s = build_builtin("euclidean", &[2]).unwrap();
        let chart = GridChart::new(vec![-1.8; 2], vec![1.8; 2], vec![65; 2]).unwrap();
        let d = cc_distance_field(&s, &chart, &[0.0; 2], &[0.4, 0.2]).unwrap();
        let cap = |b: f64| capacity_variational(&s, &AnnulusSpec::new(vec![0.0; 2], 0.4, b).unwrap(), 2.0, &d).unwrap().value;
        prop_assert!(cap(b1 + gap) <= cap(b1));
    }

    #[test]
    fn triangle_inequality_on_node_triples(i in 0usize..4913, j in 0usize..4913, k in 0usize..4913) {
        let s = build_builtin("heisenberg_cc", &[1]).unwrap();
        let chart = GridChart::new(vec![-1.0, -1.0, -0.5], vec![1.0, 1.0, 0.5], vec![17; 3]).unwrap();
        let taus = [0.4, 0.2];
        let from = |n: usize| cc_distance_field(&s, &chart, &chart.node_coords(n), &taus).unwrap();
        let (da, db) = (from(i), from(j));
        let h = chart.spacing().iter().cloned().fold(0.0, f64::max);
        let direct = da.values()[k];
        let via = da.values()[j] + db.values()[k];
        prop_assert!(direct <= via + 2.0 * h, "{direct} > {via}");
    }
}

#[test]
fn euclidean_distance_is_invariant_under_axis_swap() {
    let s = build_builtin("euclidean", &[2]).unwrap();
    let chart = GridChart::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![33, 33]).unwrap();
    let d = cc_distance_field(&s, &chart, &[0.25, -0.5], &[0.4, 0.2]).unwrap();
    let e = cc_distance_field(&s, &chart, &[-0.5, 0.25], &[0.4, 0.2]).unwrap();
    for i in 0..33 {
        for j in 0..33 {
            let a = d.values()[chart.flat_index(&[i, j])];
            let b = e.values()[chart.flat_index(&[j, i])];
            assert_eq!(a.to_bits(), b.to_bits(), "node ({i}, {j})");
        }
    }
}

#[test]
fn refinement_changes_shrink() {
    let s = build_builtin("heisenberg_cc", &[1]).unwrap();
    let target = [0.3, 0.2, 0.4];
    let values: Vec<f64> = [17, 33, 65]
        .iter()
        .map(|&res| {
            let chart =
                GridChart::new(vec![-1.6, -1.6, -0.8], vec![1.6, 1.6, 0.8], vec![res; 3]).unwrap();
            cc_distance_field(&s, &chart, &[0.0; 3], &[0.4, 0.2, 0.1])
                .unwrap()
                .value_at(&target)
                .unwrap()
        })
        .collect();
    let (first, second) = ((values[1] - values[0]).abs(), (values[2] - values[1]).abs());
    assert!(second < first, "{values:?}");
}
