//! Mesh → eigenbasis → curvature form → Ω spectrum.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::eigen::{eigensolve, EigenMethod, MeshEigen};
use super::generate::blob_sphere;
use super::operators::{Diagnostic, MeshOperators};
use super::TriangleMesh;
use crate::catalog::sharp_bound;
use crate::error::{OmegaError, Result};
use crate::forms::{solve_lambda, FormPair, LambdaSpectrum, Provenance, SpectralBasis};

/// Ω₁ from N and N/2 eigenfunctions agreeing to this is flagged converged.
pub const CONVERGENCE_TOL: f64 = 5e-3;
/// Allowed decrease between consecutive rows of a blob table.
pub const MONOTONE_TOL: f64 = 1e-2;
/// Minimum number of mean edge lengths across a bump diameter.
pub const MIN_EDGES_ACROSS: f64 = 4.0;

#[derive(Clone, Debug, Serialize)]
pub struct MeshOmega {
    pub vertex_count: usize,
    pub face_count: usize,
    pub euler_characteristic: i64,
    pub gauss_bonnet_error: f64,
    pub min_curvature: f64,
    pub max_curvature: f64,
    pub basis_size: usize,
    pub eigen_method: EigenMethod,
    pub eigenvalues: Vec<f64>,
    /// Ω_1 ≥ Ω_2 ≥ … (up to `top` values; zeros once the positive part ends).
    pub omega: Vec<f64>,
    pub omega1: f64,
    /// Ω_1 from the first N/2 eigenfunctions.
    pub omega1_half: f64,
    pub converged: bool,
    /// (n − 1)/n − Ω_1 with n = 2.
    pub sharp_bound_margin: f64,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(skip)]
    pub spectrum: LambdaSpectrum,
}

/// A = Xᵀ L_K X on the eigenbasis X, B = diag(λ²).
pub fn curvature_forms(ops: &MeshOperators, eig: &MeshEigen, label: &str) -> Result<FormPair> {
    let basis = Arc::new(SpectralBasis::new(
        2,
        eig.eigenvalues.clone(),
        Provenance::Mesh(label.to_string()),
    )?);
    let lk_x = &ops.weighted_stiffness * &eig.vectors;
    let a = eig.vectors.tr_mul(&lk_x);
    FormPair::on_eigenbasis(basis, a)
}

pub fn omega_spectrum(mesh: &TriangleMesh, basis_size: usize, top: usize) -> Result<MeshOmega> {
    let ops = MeshOperators::new(mesh);
    let eig = eigensolve(&ops, basis_size)?;
    omega_from_eigen(mesh, &ops, &eig, top)
}

pub fn omega_from_eigen(
    mesh: &TriangleMesh,
    ops: &MeshOperators,
    eig: &MeshEigen,
    top: usize,
) -> Result<MeshOmega> {
    if mesh.dim() < 2 {
        return Err(OmegaError::invalid("mesh must be a surface"));
    }
    let n = eig.eigenvalues.len();
    let forms = curvature_forms(ops, eig, "mesh")?;
    let spectrum = solve_lambda(&forms)?;
    let omega1 = spectrum.lambda(1);
    let omega1_half = if n >= 2 {
        solve_lambda(&forms.truncate(n / 2)?)?.lambda(1)
    } else {
        omega1
    };
    let omega = (1..=top).map(|k| spectrum.lambda(k)).collect();
    let (min_k, max_k) = ops
        .curvature
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| (lo.min(*k), hi.max(*k)));
    Ok(MeshOmega {
        vertex_count: mesh.vertex_count(),
        face_count: mesh.face_count(),
        euler_characteristic: mesh.euler_characteristic(),
        gauss_bonnet_error: ops.gauss_bonnet_error(mesh.euler_characteristic()),
        min_curvature: min_k,
        max_curvature: max_k,
        basis_size: n,
        eigen_method: eig.method,
        eigenvalues: eig.eigenvalues.clone(),
        omega,
        omega1,
        omega1_half,
        converged: (omega1 - omega1_half).abs() <= CONVERGENCE_TOL,
        sharp_bound_margin: sharp_bound(2) - omega1,
        diagnostics: ops.diagnostics.clone(),
        spectrum,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BlobParams {
    pub subdiv: u32,
    pub height: f64,
    pub basis_size: usize,
}

impl Default for BlobParams {
    fn default() -> Self {
        BlobParams {
            subdiv: 5,
            height: super::generate::BLOB_HEIGHT,
            basis_size: 100,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BlobRow {
    pub eps: f64,
    pub omega1: f64,
    pub gap: f64,
    pub converged: bool,
    /// Bump diameter in mean edge lengths (absent for eps = 0).
    pub edges_across: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlobTable {
    pub params: BlobParams,
    pub rows: Vec<BlobRow>,
    /// Ω₁ never drops by more than MONOTONE_TOL from one row to the next.
    pub monotone: bool,
}

/// Ω₁ of the two-bump sphere for each ε, largest ε first.
pub fn blob_experiment(eps: &[f64], params: &BlobParams) -> Result<BlobTable> {
    if eps.is_empty() {
        return Err(OmegaError::invalid("no ε values given"));
    }
    if eps.iter().any(|e| !(*e >= 0.0 && *e < std::f64::consts::FRAC_PI_4)) {
        return Err(OmegaError::invalid("every ε must lie in [0, π/4)"));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(OmegaError::Precondition("ε values must be strictly decreasing".into()));
    }
    if !(params.height > 0.0) {
        return Err(OmegaError::invalid("blob height must be positive"));
    }
    let meshes: Vec<(f64, TriangleMesh)> = eps
        .iter()
        .map(|&e| Ok((e, blob_sphere(params.subdiv, e, params.height)?)))
        .collect::<Result<_>>()?;
    for (e, mesh) in &meshes {
        if *e > 0.0 {
            let across = 2.0 * e / mesh.mean_edge_length();
            if across < MIN_EDGES_ACROSS {
                return Err(OmegaError::Precondition(format!(
                    "ε = {e} spans only {across:.2} edges at subdiv {} (need {MIN_EDGES_ACROSS}); \
                     raise the subdivision level",
                    params.subdiv
                )));
            }
        }
    }
    let rows: Vec<BlobRow> = meshes
        .par_iter()
        .map(|(e, mesh)| {
            let result = omega_spectrum(mesh, params.basis_size, 1)?;
            Ok(BlobRow {
                eps: *e,
                omega1: result.omega1,
                gap: sharp_bound(2) - result.omega1,
                converged: result.converged,
                edges_across: (*e > 0.0).then(|| 2.0 * e / mesh.mean_edge_length()),
            })
        })
        .collect::<Result<_>>()?;
    let monotone = rows
        .windows(2)
        .all(|w| w[1].omega1 >= w[0].omega1 - MONOTONE_TOL);
    Ok(BlobTable {
        params: params.clone(),
        rows,
        monotone,
    })
}
