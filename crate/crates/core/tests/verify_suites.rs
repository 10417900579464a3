use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use omega_core::catalog::{analytic_forms, sphere_spectrum, torus_spectrum, AnalyticTensor};
use omega_core::forms::{FormPair, Provenance, SpectralBasis};
use omega_core::mesh::generate::icosphere;
use omega_core::mesh::pipeline::omega_spectrum;
use omega_core::torus::{fourier_forms, TorusField};
use omega_core::verify::*;
use omega_core::OmegaError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn diag_forms(lambda: &[f64]) -> FormPair {
    let basis = SpectralBasis::new(2, lambda.to_vec(), Provenance::Synthetic).unwrap();
    FormPair::on_eigenbasis(
        Arc::new(basis),
        DMatrix::from_diagonal(&DVector::from_column_slice(lambda)),
    )
    .unwrap()
}

fn random_pair(n: usize, seed: u64) -> FormPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = || DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let a = g();
    let b = g();
    FormPair::new(&a + a.transpose(), b.transpose() * b + DMatrix::identity(n, n)).unwrap()
}

#[test]
fn minmax_on_sphere_like_diagonal_forms() {
    let forms = diag_forms(&[2.0, 6.0, 12.0, 20.0]);
    let r = check_minmax(&forms, 2, 50, 0).unwrap();
    assert!(r.passed, "{:?}", r.failures);
    let r = check_minmax(&forms, 1, 50, 1).unwrap();
    assert!(r.passed);
    assert!(check_minmax(&forms, 3, 10, 0).is_err());
}

#[test]
fn minmax_on_random_forms() {
    let r = check_minmax(&random_pair(8, 5), 3, 200, 0).unwrap();
    assert!(r.passed, "{:?}", r.failures);
    assert_eq!(r.cases, 200);
}

#[test]
fn zero_increment_and_torus_metric_increment_are_monotone() {
    let forms = random_pair(6, 2);
    assert!(check_monotone(&forms, &DMatrix::zeros(6, 6)).unwrap().passed);

    let t = TorusField::named("cap", vec![2.0 * PI, 2.0 * PI], 32).unwrap();
    let c = 0.3;
    let s = TorusField::analytic("cap+0.3g", vec![2.0 * PI, 2.0 * PI], 32, move |x| {
        let bump: f64 = x.iter().map(|xi| ((1.0 + xi.cos()) / 2.0).powi(4)).product();
        DMatrix::identity(2, 2) * (bump - 0.1 + c)
    })
    .unwrap();
    let ft = fourier_forms(&t, 4).unwrap();
    let fs = fourier_forms(&s, 4).unwrap();
    let increment = ft.basis().unwrap().dirichlet_gram() * c;
    assert!((fs.a() - ft.a() - &increment).amax() < 1e-12);
    assert!(check_monotone(&ft, &increment).unwrap().passed);

    let negative = -DMatrix::identity(6, 6);
    assert!(matches!(check_monotone(&forms, &negative), Err(OmegaError::Precondition(_))));
}

#[test]
fn product_law_on_catalog_factors() {
    let s2 = sphere_spectrum(2, 1.0, 6).unwrap();
    let f = analytic_forms(&s2, AnalyticTensor::Ricci, 4).unwrap();
    assert!(check_product_law(&f, &f).unwrap().passed);

    let flat = torus_spectrum(&[2.0 * PI, 2.0 * PI], 3.0).unwrap();
    let ff = analytic_forms(&flat, AnalyticTensor::Ricci, 3).unwrap();
    assert!(check_product_law(&ff, &f).unwrap().passed);
}

#[test]
fn lichnerowicz_equality_on_the_three_sphere() {
    let input = LichnerowiczInput::einstein(&sphere_spectrum(3, 1.0, 3).unwrap()).unwrap();
    assert_eq!((input.lambda1, input.ricci_lower), (3.0, 2.0));
    assert!((input.omega1 - 2.0 / 3.0).abs() < 1e-15);
    assert!(check_lichnerowicz(&input).passed);
}

#[test]
fn lichnerowicz_on_stretched_product_is_an_equality() {
    let r = 4.0;
    let big = sphere_spectrum(2, r, 12).unwrap();
    let unit = sphere_spectrum(2, 1.0, 12).unwrap();
    let input = LichnerowiczInput::product(&big, &unit).unwrap();
    assert!((input.lambda1 - 2.0 / (r * r)).abs() < 1e-15);
    assert!((input.lambda1 - input.ricci_lower / input.omega1).abs() < 1e-14);
    assert!(check_lichnerowicz(&input).passed);
}

#[test]
fn lichnerowicz_on_icosphere_within_two_percent() {
    let result = omega_spectrum(&icosphere(3, 1.0).unwrap(), 40, 1).unwrap();
    let input = LichnerowiczInput::mesh("icosphere", &result).unwrap();
    let report = check_lichnerowicz(&input);
    assert!(report.passed, "{:?}", report.failures);
}

#[test]
fn lichnerowicz_skips_without_positive_ricci() {
    let flat = torus_spectrum(&[1.0, 1.0], 100.0).unwrap();
    let r = check_lichnerowicz(&LichnerowiczInput::einstein(&flat).unwrap());
    assert!(r.skipped.is_some());
    assert!(r.passed);
}

#[test]
fn broken_chain_is_reported_with_its_inputs() {
    let input = LichnerowiczInput {
        label: "bogus".into(),
        dim: 2,
        ricci_lower: 1.0,
        lambda1: 1.0,
        omega1: 0.5,
        tolerance: 1e-12,
    };
    let r = check_lichnerowicz(&input);
    assert!(!r.passed);
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.failures[0].observed, vec![1.0, 2.0]);
    assert_eq!(r.failures[0].inputs["lambda1"], 1.0);
}

#[test]
fn orthogonality_and_decay_on_fixed_inputs() {
    assert!(check_orthogonality(&random_pair(7, 9)).unwrap().passed);
    let f = TorusField::named("indefinite", vec![2.0 * PI, 2.0 * PI], 16).unwrap();
    let forms = fourier_forms(&f, 3).unwrap();
    assert!(check_decay_bound(&forms, 1.0).unwrap().passed);
    let r = check_decay_bound(&forms, 0.1).unwrap();
    assert!(!r.passed, "a bound below sup S must be violated");
}

#[test]
fn every_suite_passes_at_seed_zero() {
    for report in run_all(&SuiteConfig::default()).unwrap() {
        assert!(report.passed, "{}: {:?}", report.suite, report.failures.first());
        assert_eq!(report.cases, 100);
    }
}

#[test]
fn suites_are_deterministic() {
    let strip = |mut r: VerifyReport| {
        r.wall_time_s = 0.0;
        serde_json::to_string(&r).unwrap()
    };
    let cfg = SuiteConfig { cases: 20, seed: 7 };
    for s in ["minmax", "decay-bound"] {
        assert_eq!(strip(run_suite(s, &cfg).unwrap()), strip(run_suite(s, &cfg).unwrap()));
    }
}
