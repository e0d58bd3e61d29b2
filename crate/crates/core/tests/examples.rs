use std::f64::consts::{E, PI};

use carnot_core::capacity::{
    capacity_variational, isoperimetric_profile, modulus_radial_bound, sandwich_check, AnnulusSpec,
    CapacityEstimate,
};
use carnot_core::conformal::{rescale_structure, ConformalFactor};
use carnot_core::metric::{cc_distance_field, coarea_check, growth_profile, DistanceField};
use carnot_core::quad::fit_power;
use carnot_core::sr::build_builtin;
use carnot_core::{Error, GridChart, ScalarField};

fn euclidean_field(n: usize, half: f64, res: usize) -> DistanceField {
    let s = build_builtin("euclidean", &[n]).unwrap();
    let chart = GridChart::new(vec![-half; n], vec![half; n], vec![res; n]).unwrap();
    cc_distance_field(&s, &chart, &vec![0.0; n], &[0.4, 0.2]).unwrap()
}

fn euclidean_capacity(
    n: usize,
    a: f64,
    b: f64,
    p: f64,
    res: usize,
) -> (CapacityEstimate, DistanceField) {
    let s = build_builtin("euclidean", &[n]).unwrap();
    let d = euclidean_field(n, 1.1 * b + 0.2, res);
    let est =
        capacity_variational(&s, &AnnulusSpec::new(vec![0.0; n], a, b).unwrap(), p, &d).unwrap();
    (est, d)
}

#[test]
fn conformal_capacity_of_the_space_annulus() {
    let (est, _) = euclidean_capacity(3, 1.0, E, 3.0, 129);
    assert!(
        (est.value / (4.0 * PI) - 1.0).abs() <= 0.10,
        "{}",
        est.value
    );
    assert!(sandwich_check(&est).pass);
}

#[test]
fn radii_must_be_ordered() {
    assert!(matches!(
        AnnulusSpec::new(vec![0.0; 2], 2.0, 1.0),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        AnnulusSpec::new(vec![0.0; 2], 1.0, 1.0),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn sandwich_detects_manufactured_violations() {
    let (est, _) = euclidean_capacity(2, 1.0, E, 2.0, 129);
    assert!(sandwich_check(&est).pass);
    let mut inflated = est.clone();
    inflated.lower = est.value * 1.5;
    assert!(!sandwich_check(&inflated).pass);
    let mut corrupted = est.clone();
    corrupted.lower = est.upper * 2.0;
    let report = sandwich_check(&corrupted);
    assert!(report.corrupted && !report.pass);
}

#[test]
fn modulus_bound_dominates_capacity() {
    let s = build_builtin("euclidean", &[2]).unwrap();
    let (est, d) = euclidean_capacity(2, 1.0, 2.0, 2.0, 257);
    let bound = modulus_radial_bound(&s, &d, 1.0, 2.0).unwrap();
    assert!(est.converged);
    assert!(bound >= est.value * 0.97, "{bound} vs {}", est.value);
    let thin = modulus_radial_bound(&s, &d, 1.0, 1.0001).unwrap();
    assert!(thin > 1e3 * bound, "{thin}");
}

#[test]
fn planar_and_spatial_isoperimetric_profiles() {
    for (n, res, tol) in [(2usize, 257usize, 0.05), (3, 65, 0.07)] {
        let s = build_builtin("euclidean", &[n]).unwrap();
        let d = euclidean_field(n, 2.0, res);
        let vols: Vec<f64> = match n {
            2 => vec![0.5, 1.0, 2.0, 4.0],
            _ => vec![0.5, 1.0, 4.0, 10.0],
        };
        let prof = isoperimetric_profile(&s, &d, &vols).unwrap();
        for &(v, p) in &prof.samples {
            let exact = match n {
                2 => 2.0 * (PI * v).sqrt(),
                _ => (36.0 * PI).cbrt() * v.powf(2.0 / 3.0),
            };
            assert!(
                (p / exact - 1.0).abs() <= tol,
                "n={n} v={v}: {p} vs {exact}"
            );
        }
    }
}

#[test]
fn heisenberg_isoperimetric_slope() {
    let s = build_builtin("heisenberg_cc", &[1]).unwrap();
    let chart = GridChart::new(vec![-2.7, -2.7, -1.0], vec![2.7, 2.7, 1.0], vec![57; 3]).unwrap();
    let d = cc_distance_field(&s, &chart, &[0.0; 3], &[0.4, 0.2, 0.1]).unwrap();
    let vols: Vec<f64> = (0..8).map(|i| 0.1 * 100f64.powf(i as f64 / 7.0)).collect();
    let prof = isoperimetric_profile(&s, &d, &vols).unwrap();
    let k = fit_power(&prof.volumes(), &prof.values()).unwrap().k;
    assert!((k - 0.75).abs() <= 0.1, "slope {k}");
}

#[test]
fn coarea_of_a_vanishing_integrand() {
    let s = build_builtin("euclidean", &[2]).unwrap();
    let d = euclidean_field(2, 2.5, 129);
    let zero = ScalarField::from_fn(d.chart(), |_| 0.0);
    let levels: Vec<f64> = (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect();
    let rep = coarea_check(d.field(), &zero, &s, &levels).unwrap();
    assert_eq!(rep.residual, 0.0);
}

#[test]
fn unit_factor_changes_nothing() {
    let s = build_builtin("heisenberg_cc", &[1]).unwrap();
    let (t, _) = rescale_structure(&s, &ConformalFactor::Constant(1.0), None).unwrap();
    let chart = GridChart::new(vec![-1.0, -1.0, -0.5], vec![1.0, 1.0, 0.5], vec![17; 3]).unwrap();
    let a = cc_distance_field(&s, &chart, &[0.0; 3], &[0.4, 0.2]).unwrap();
    let b = cc_distance_field(&t, &chart, &[0.0; 3], &[0.4, 0.2]).unwrap();
    assert_eq!(a.values(), b.values());
    assert_eq!(t.summary().m, s.summary().m);
}

#[test]
fn planar_growth_profile() {
    let s = build_builtin("euclidean", &[2]).unwrap();
    let chart = GridChart::new(vec![-2.0; 2], vec![2.0; 2], vec![129; 2]).unwrap();
    let g = growth_profile(&s, &chart, &[0.0; 2], &[0.5, 1.0, 1.5], &[0.4, 0.2]).unwrap();
    for (sample, exact) in g.samples.iter().zip([PI / 4.0, PI, 9.0 * PI / 4.0]) {
        assert!((sample.v / exact - 1.0).abs() < 0.02, "{sample:?}");
    }
    assert!(growth_profile(&s, &chart, &[0.0; 2], &[], &[0.4, 0.2]).is_err());
}
