use omega_core::mesh::eigen::eigensolve;
use omega_core::mesh::generate::{ellipsoid, flat_torus, icosphere, octahedron};
use omega_core::mesh::io::{parse_obj, parse_off, write_obj, write_off};
use omega_core::mesh::operators::MeshOperators;
use omega_core::mesh::pipeline::{blob_experiment, omega_spectrum, BlobParams};
use omega_core::OmegaError;

#[test]
fn icosphere_laplacian_approaches_sphere_spectrum() {
    let ops = MeshOperators::new(&icosphere(3, 1.0).unwrap());
    let eig = eigensolve(&ops, 12).unwrap();
    for l in &eig.eigenvalues[..3] {
        assert!((l - 2.0).abs() <= 0.03 * 2.0, "{l}");
    }
    for l in &eig.eigenvalues[3..8] {
        assert!((l - 6.0).abs() <= 0.05 * 6.0, "{l}");
    }
    for r in &eig.residuals {
        assert!(*r <= 1e-8);
    }
}

#[test]
fn octahedron_keeps_its_triples() {
    let eig = eigensolve(&MeshOperators::new(&octahedron()), 4).unwrap();
    let l = &eig.eigenvalues;
    assert!((l[0] - l[1]).abs() < 1e-8 && (l[1] - l[2]).abs() < 1e-8);
}

#[test]
fn scaling_vertices_scales_eigenvalues_and_keeps_omega() {
    let mesh = icosphere(2, 1.0).unwrap();
    let a = 2.5;
    let big = mesh.scaled(a);
    let e0 = eigensolve(&MeshOperators::new(&mesh), 20).unwrap();
    let e1 = eigensolve(&MeshOperators::new(&big), 20).unwrap();
    for (x, y) in e0.eigenvalues.iter().zip(&e1.eigenvalues) {
        assert!((x / (a * a) - y).abs() <= 1e-10 * x, "{x} {y}");
    }
    let w0 = omega_spectrum(&mesh, 20, 5).unwrap();
    let w1 = omega_spectrum(&big, 20, 5).unwrap();
    for (x, y) in w0.omega.iter().zip(&w1.omega) {
        assert!((x - y).abs() <= 1e-10);
    }
}

#[test]
fn scaling_keeps_coefficient_vectors_up_to_sign() {
    let mesh = ellipsoid(2, [3.0, 2.0, 1.0]).unwrap();
    let w0 = omega_spectrum(&mesh, 20, 3).unwrap();
    let w1 = omega_spectrum(&mesh.scaled(0.4), 20, 3).unwrap();
    for (p, q) in w0.spectrum.positive().iter().zip(w1.spectrum.positive()).take(3) {
        assert!((p.value - q.value).abs() <= 1e-10);
        // B-normalization scales coefficients by a², and each Laplacian
        // eigenvector may flip sign.
        let u = p.vector.normalize().abs();
        let v = q.vector.normalize().abs();
        assert!((u - v).amax() <= 1e-8);
    }
}

#[test]
fn galerkin_values_grow_with_the_basis() {
    let mesh = ellipsoid(3, [3.0, 2.0, 1.0]).unwrap();
    let small = omega_spectrum(&mesh, 30, 1).unwrap().omega1;
    let large = omega_spectrum(&mesh, 61, 1).unwrap().omega1;
    assert!(small <= large + 1e-10, "{small} > {large}");
}

#[test]
fn sphere_value_sits_near_one_half() {
    let r = omega_spectrum(&icosphere(4, 1.0).unwrap(), 100, 5).unwrap();
    assert!((0.48..=0.505).contains(&r.omega1), "{}", r.omega1);
    assert!(r.converged);
    assert!(r.gauss_bonnet_error < 1e-10);
}

#[test]
fn triaxial_ellipsoid_is_below_the_sphere_and_spheroid_is_not() {
    let tri = omega_spectrum(&ellipsoid(4, [3.0, 2.0, 1.0]).unwrap(), 100, 1).unwrap();
    assert!(tri.omega1 < 0.5 && tri.sharp_bound_margin > 0.0);
    // A spheroid is rotationally symmetric, so its continuum value is 1/2.
    let spheroid = omega_spectrum(&ellipsoid(4, [2.0, 1.0, 1.0]).unwrap(), 100, 1).unwrap();
    assert!((spheroid.omega1 - 0.5).abs() < 5e-3, "{}", spheroid.omega1);
}

#[test]
fn flat_torus_has_tiny_values() {
    let r = omega_spectrum(&flat_torus(24, 16, 1.0, 0.7).unwrap(), 40, 3).unwrap();
    assert!(r.omega1.abs() <= 0.05);
}

#[test]
fn obj_and_off_round_trips_give_the_same_value() {
    let mesh = icosphere(2, 1.0).unwrap();
    let w = omega_spectrum(&mesh, 30, 1).unwrap().omega1;
    let off = parse_off(&write_off(&mesh)).unwrap();
    let obj = parse_obj(&write_obj(&mesh)).unwrap();
    for m in [off, obj] {
        assert!((omega_spectrum(&m, 30, 1).unwrap().omega1 - w).abs() < 1e-9);
    }
}

#[test]
fn blob_rows_follow_the_input_order() {
    let params = BlobParams { subdiv: 4, height: 0.5, basis_size: 60 };
    let t = blob_experiment(&[0.5, 0.0], &params).unwrap();
    assert_eq!(t.rows.len(), 2);
    let plain = omega_spectrum(&icosphere(4, 1.0).unwrap(), 60, 1).unwrap().omega1;
    assert!((t.rows[1].omega1 - plain).abs() < 1e-12);
    assert!(matches!(
        blob_experiment(&[0.1, 0.2], &params),
        Err(OmegaError::Precondition(_))
    ));
}
