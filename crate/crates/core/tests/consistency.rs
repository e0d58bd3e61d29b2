//! Cross-checks between independently computed quantities on the same runs.

use carnot_core::capacity::{capacity_variational, isoperimetric_profile, AnnulusSpec};
use carnot_core::conformal::{
    ahlfors_gromov_check, classify_by_capacity_with, classify_by_growth, CapacityThresholds,
    Verdict,
};
use carnot_core::metric::{cc_distance_field, growth_profile_from_distance, DistanceField};
use carnot_core::sr::{build_builtin, SubRiemannianStructure};
use carnot_core::GridChart;

fn field(s: &SubRiemannianStructure, half: &[f64], res: &[usize]) -> DistanceField {
    let n = s.n();
    let lo: Vec<f64> = half.iter().map(|h| -h).collect();
    let chart = GridChart::new(lo, half.to_vec(), res.to_vec()).unwrap();
    cc_distance_field(s, &chart, &vec![0.0; n], &[0.4, 0.2, 0.1]).unwrap()
}

fn builtin_runs() -> Vec<(SubRiemannianStructure, DistanceField)> {
    [
        ("euclidean", 2usize, vec![2.0, 2.0], vec![129; 2]),
        ("euclidean", 3, vec![2.0; 3], vec![41; 3]),
        ("heisenberg_cc", 1, vec![2.2, 2.2, 0.8], vec![41; 3]),
        ("heisenberg_riemannian", 1, vec![2.2; 3], vec![41; 3]),
    ]
    .into_iter()
    .map(|(name, p, half, res)| {
        let s = build_builtin(name, &[p]).unwrap();
        let d = field(&s, &half, &res);
        (s, d)
    })
    .collect()
}

#[test]
fn ahlfors_gromov_passes_with_the_measured_profile() {
    let radii: Vec<f64> = (0..40).map(|i| 0.6 + 0.03 * i as f64).collect();
    for (s, d) in builtin_runs() {
        let g = growth_profile_from_distance(&d, s.density(), &radii, s.m()).unwrap();
        let iso = isoperimetric_profile(&s, &d, &g.volumes()).unwrap();
        let vols: Vec<(f64, f64)> = g.samples.iter().map(|x| (x.r, x.v)).collect();
        let rep = ahlfors_gromov_check(&g, &iso, &vols, radii[0], radii[39], s.m()).unwrap();
        assert!(rep.pass, "{}: {rep:?}", s.name());
    }
}

#[test]
fn capacity_and_growth_verdicts_agree() {
    // The planar series decays only like 1/ln(b/a): a tenfold decay inside the
    // chart needs a first annulus thinner than two cells, so it uses a 20% threshold.
    let planar = CapacityThresholds {
        decay: 0.2,
        ..CapacityThresholds::default()
    };
    let cases = [
        (
            "euclidean",
            2usize,
            vec![3.6; 2],
            vec![257; 2],
            0.1,
            [0.13, 0.3, 1.0, 3.0],
            planar,
        ),
        (
            "euclidean",
            3,
            vec![3.6; 3],
            vec![49; 3],
            0.3,
            [0.4, 0.8, 1.5, 3.0],
            CapacityThresholds::default(),
        ),
        // small balls are flat in t, so that axis gets twice the nodes
        (
            "heisenberg_cc",
            1,
            vec![3.6, 3.6, 2.2],
            vec![49, 49, 97],
            0.3,
            [0.4, 0.8, 1.5, 3.0],
            CapacityThresholds::default(),
        ),
    ];
    for (name, param, half, res, a, outer, thresholds) in cases {
        let s = build_builtin(name, &[param]).unwrap();
        let d = field(&s, &half, &res);
        let p = s.m() as f64;
        let series: Vec<(f64, f64)> = outer
            .iter()
            .map(|&b| {
                let ann = AnnulusSpec::new(vec![0.0; s.n()], a, b).unwrap();
                (b, capacity_variational(&s, &ann, p, &d).unwrap().value)
            })
            .collect();
        let by_capacity = classify_by_capacity_with(&series, &thresholds).unwrap();
        let radii: Vec<f64> = (0..10).map(|i| 0.3 * 10f64.powf(i as f64 / 9.0)).collect();
        let g = growth_profile_from_distance(&d, s.density(), &radii, s.m()).unwrap();
        let by_growth = classify_by_growth(&g).unwrap();
        assert_eq!(
            by_capacity.verdict,
            Verdict::Parabolic,
            "{name} capacity: {series:?}"
        );
        assert_eq!(
            by_growth.verdict,
            Verdict::Parabolic,
            "{name} growth: {by_growth:?}"
        );
    }
}
