use std::f64::consts::PI;

use omega_core::catalog::*;
use omega_core::forms::{solve_lambda, tensor_product_forms};

fn expanded(values: &[OmegaValue]) -> Vec<f64> {
    values
        .iter()
        .flat_map(|v| match v.multiplicity {
            Multiplicity::Finite(m) => std::iter::repeat(v.value).take(m as usize),
            Multiplicity::Unresolved => panic!("catalog multiplicities are finite"),
        })
        .collect()
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{x} vs {y}");
    }
}

#[test]
fn solved_ricci_forms_reproduce_closed_form_omega() {
    for f in [
        sphere_spectrum(2, 1.0, 6).unwrap(),
        sphere_spectrum(3, 2.0, 5).unwrap(),
        sphere_spectrum(5, 0.5, 4).unwrap(),
    ] {
        let levels = f.levels().len() - 1;
        let closed = expanded(&einstein_omega(&f, levels).unwrap());
        let solved = solve_lambda(&analytic_forms(&f, AnalyticTensor::Ricci, levels).unwrap()).unwrap();
        assert_close(&solved.positive_values(), &closed, 1e-12);
    }
}

#[test]
fn circle_values() {
    let circle = torus_spectrum(&[2.0 * PI], 10.0).unwrap();
    let v = expanded(&catalog_lambda_of_g(&circle, 2).unwrap());
    assert_close(&v, &[1.0, 1.0, 0.25, 0.25], 1e-15);
    assert!(einstein_omega(&circle, 1).unwrap().is_empty());
}

#[test]
fn tensor_top_value_is_the_larger_factor_top() {
    let s2 = sphere_spectrum(2, 1.0, 3).unwrap();
    let s3 = sphere_spectrum(3, 1.5, 3).unwrap();
    let f1 = analytic_forms(&s2, AnalyticTensor::Ricci, 3).unwrap();
    let f2 = analytic_forms(&s3, AnalyticTensor::Ricci, 3).unwrap();
    let top1 = solve_lambda(&f1).unwrap().lambda(1);
    let top2 = solve_lambda(&f2).unwrap().lambda(1);
    let product = solve_lambda(&tensor_product_forms(&f1, &f2).unwrap()).unwrap();
    assert!((product.lambda(1) - top1.max(top2)).abs() < 1e-12);
}

#[test]
fn every_catalog_omega_respects_the_ceiling() {
    for n in 2..=6 {
        let f = sphere_spectrum(n, 1.7, 3).unwrap();
        let w = einstein_omega(&f, 1).unwrap()[0].value;
        assert!((w - sharp_bound(n)).abs() < 1e-15);
    }
    let s2 = sphere_spectrum(2, 1.0, 30).unwrap();
    for (other, dim) in [(sphere_spectrum(2, 3.0, 30).unwrap(), 4), (sphere_spectrum(3, 1.0, 30).unwrap(), 5)] {
        let w = product_omega(&s2, &other, 1).unwrap()[0].value;
        assert!(w < sharp_bound(dim), "product {w} reaches the sphere value");
    }
    let flat = torus_spectrum(&[1.0, 1.0], 200.0).unwrap();
    let w = product_omega(&s2, &flat, 1).unwrap()[0].value;
    assert!(w < sharp_bound(4));
    for i in 0..50 {
        let r = 0.05 * 1.2f64.powi(i);
        assert!(unitary_omega1(3, r).unwrap() < sharp_bound(9));
    }
    for n in 1..=4 {
        assert!(heisenberg_sup(n).unwrap() < sharp_bound(2 * n as usize + 1));
    }
}

#[test]
fn homothety_leaves_omega_lists_unchanged() {
    let base = sphere_spectrum(3, 1.0, 8).unwrap();
    for a in [0.3, 2.0, 7.5] {
        let scaled = base.rescaled(a).unwrap();
        let w0 = einstein_omega(&base, 6).unwrap();
        let w1 = einstein_omega(&scaled, 6).unwrap();
        for (x, y) in w0.iter().zip(&w1) {
            assert!((x.value - y.value).abs() <= 1e-12);
            assert_eq!(x.multiplicity, y.multiplicity);
        }
        let s2 = sphere_spectrum(2, 1.0, 20).unwrap();
        let p0 = product_omega(&s2, &base, 5).unwrap();
        let p1 = product_omega(&s2.rescaled(a).unwrap(), &scaled, 5).unwrap();
        for (x, y) in p0.iter().zip(&p1) {
            assert!((x.value - y.value).abs() <= 1e-12);
        }
    }
}

#[test]
fn lichnerowicz_chain_on_positive_entries() {
    for (n, r) in [(2, 1.0), (3, 0.7), (4, 2.0), (6, 1.0)] {
        let f = sphere_spectrum(n, r, 2).unwrap();
        let a = f.einstein_const();
        let w1 = einstein_omega(&f, 1).unwrap()[0].value;
        let l1 = f.lambda1().unwrap();
        let dim = n as f64;
        assert!(l1 >= a / w1 * (1.0 - 1e-12));
        assert!(a / w1 >= dim * a / (dim - 1.0) * (1.0 - 1e-12));
    }
}

#[test]
fn heisenberg_multiplicity_is_left_open() {
    let m = HeisenbergMetric::new(vec![1.0], 1.0).unwrap();
    let w = heisenberg_omega1(&m);
    assert!(w.value > 0.0 && w.value <= heisenberg_sup(1).unwrap());
    assert!(w.c.is_some());
}
