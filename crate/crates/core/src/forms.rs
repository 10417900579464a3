//! Galerkin restriction of the variational problem
//!
//! ```text
//! Λ_S(v) = ∫ S(∇v, ∇v) dμ / ‖Δv‖²
//! ```
//!
//! to the span of a truncated Laplacian eigenbasis. On such a span the two
//! quadratic forms become Gram matrices `A` (the S-form) and `B` (the
//! biharmonic form), and the successive suprema Λ_1(S) ≥ Λ_2(S) ≥ … are the
//! positive generalized eigenvalues of `A x = Λ B x`. The negative side
//! Λ_{−k}(S) = −Λ_k(−S) and the zero class come out of the same solve.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::error::{OmegaError, Result};
use crate::linalg::{
    cluster_runs, first_significant, normalize_sign, relative_asymmetry, symmetric_eigen_ascending,
    symmetrize,
};

/// Residual contract for every returned pair:
/// `‖A v − Λ B v‖ ≤ RESIDUAL_TOL · ‖B v‖ · max(1, max|Λ|)`.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Values with `|Λ| ≤ ZERO_TOL_REL · max|Λ|` are classified as zero.
pub const ZERO_TOL_REL: f64 = 1e-10;
const ASYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues this close (relative) are treated as one degenerate level
/// whose basis is canonicalized.
const CLUSTER_TOL_REL: f64 = 1e-11;
const SIGNIFICANT_COEFF: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Provenance {
    Analytic(String),
    Mesh(String),
    Torus(String),
    Synthetic,
}

/// Truncated Laplacian eigenbasis with the constant mode removed.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralBasis {
    dim_manifold: usize,
    eigenvalues: Vec<f64>,
    provenance: Provenance,
    orthonormal: bool,
}

impl SpectralBasis {
    pub fn new(dim_manifold: usize, eigenvalues: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if dim_manifold == 0 {
            return Err(OmegaError::invalid("manifold dimension must be positive"));
        }
        if eigenvalues.len() < 2 {
            return Err(OmegaError::invalid("a spectral basis needs at least two eigenvalues"));
        }
        if let Some(bad) = eigenvalues.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(OmegaError::invalid(format!(
                "eigenvalues must be finite and strictly positive, got {bad}"
            )));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(OmegaError::invalid("eigenvalues must be sorted ascending"));
        }
        Ok(Self {
            dim_manifold,
            eigenvalues,
            provenance,
            orthonormal: true,
        })
    }

    pub fn dim_manifold(&self) -> usize {
        self.dim_manifold
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// Gram matrix of ∫Δψ_iΔψ_j = λ_i λ_j δ_ij.
    pub fn biharmonic_gram(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.len(),
            self.eigenvalues.iter().map(|l| l * l),
        ))
    }

    /// Gram matrix of ∫g(∇ψ_i, ∇ψ_j) = λ_i δ_ij, i.e. the S-form of S = g.
    pub fn dirichlet_gram(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues))
    }
}

/// The S-form `A` and biharmonic form `B` on a common basis.
#[derive(Clone, Debug)]
pub struct FormPair {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    b_factor: DMatrix<f64>,
    basis: Option<Arc<SpectralBasis>>,
}

impl FormPair {
    /// Validates and stores the pair. `A` is symmetrized after the
    /// asymmetry check so that `A = Aᵀ` holds exactly.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n || b.nrows() != n || b.ncols() != n {
            return Err(OmegaError::invalid(format!(
                "forms must be square and of equal size, got A {}x{} and B {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(OmegaError::invalid("forms contain non-finite entries"));
        }
        let mut a = a;
        let mut b = b;
        for m in [&mut a, &mut b] {
            let asym = relative_asymmetry(m);
            if asym > ASYMMETRY_TOL {
                return Err(OmegaError::NotSymmetric { asymmetry: asym });
            }
            symmetrize(m);
        }
        let chol = Cholesky::<f64, Dyn>::new(b.clone()).ok_or(OmegaError::NotPositiveDefinite)?;
        let b_factor = chol.l();
        if b_factor.diagonal().iter().any(|d| !(*d > 0.0)) {
            return Err(OmegaError::NotPositiveDefinite);
        }
        Ok(Self {
            a,
            b,
            b_factor,
            basis: None,
        })
    }

    /// Forms on an L²-orthonormal Laplacian eigenbasis, where `B = diag(λ²)`.
    pub fn on_eigenbasis(basis: Arc<SpectralBasis>, a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != basis.len() {
            return Err(OmegaError::invalid(format!(
                "S-form has size {} but the basis has {} functions",
                a.nrows(),
                basis.len()
            )));
        }
        let b = basis.biharmonic_gram();
        let mut pair = Self::new(a, b)?;
        pair.basis = Some(basis);
        Ok(pair)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn basis(&self) -> Option<&Arc<SpectralBasis>> {
        self.basis.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Same `B` and basis with a different S-form.
    pub fn with_s_form(&self, a: DMatrix<f64>) -> Result<Self> {
        let mut pair = Self::new(a, self.b.clone())?;
        pair.basis = self.basis.clone();
        Ok(pair)
    }

    /// Leading `n × n` block: the Galerkin problem on the first `n` basis functions.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.dim() {
            return Err(OmegaError::invalid(format!(
                "cannot truncate a {}-dimensional form pair to {n}",
                self.dim()
            )));
        }
        let a = self.a.view((0, 0), (n, n)).into_owned();
        let b = self.b.view((0, 0), (n, n)).into_owned();
        let mut pair = Self::new(a, b)?;
        if let Some(basis) = &self.basis {
            if n >= 2 {
                pair.basis = Some(Arc::new(SpectralBasis::new(
                    basis.dim_manifold(),
                    basis.eigenvalues()[..n].to_vec(),
                    basis.provenance().clone(),
                )?));
            }
        }
        Ok(pair)
    }
}

/// One value Λ with its B-normalized associated coefficient vector.
#[derive(Clone, Debug)]
pub struct LambdaPair {
    pub value: f64,
    pub vector: DVector<f64>,
}

/// A value together with how many associated functions share it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Level {
    pub value: f64,
    pub multiplicity: usize,
}

/// Signed spectrum of the pencil `(A, B)`.
#[derive(Clone, Debug)]
pub struct LambdaSpectrum {
    positive: Vec<LambdaPair>,
    zero: Vec<DVector<f64>>,
    negative: Vec<LambdaPair>,
    zero_tol: f64,
}

impl LambdaSpectrum {
    /// Λ_1 ≥ Λ_2 ≥ … > 0.
    pub fn positive(&self) -> &[LambdaPair] {
        &self.positive
    }

    /// Λ_{−1} ≤ Λ_{−2} ≤ … < 0.
    pub fn negative(&self) -> &[LambdaPair] {
        &self.negative
    }

    pub fn zero_vectors(&self) -> &[DVector<f64>] {
        &self.zero
    }

    pub fn zero_dim(&self) -> usize {
        self.zero.len()
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    pub fn positive_values(&self) -> Vec<f64> {
        self.positive.iter().map(|p| p.value).collect()
    }

    pub fn negative_values(&self) -> Vec<f64> {
        self.negative.iter().map(|p| p.value).collect()
    }

    /// Λ_k(S) for k ≥ 1, which is 0 once the positive part is exhausted.
    pub fn lambda(&self, k: usize) -> f64 {
        assert!(k >= 1, "Λ_k is indexed from 1");
        self.positive.get(k - 1).map_or(0.0, |p| p.value)
    }

    /// All values in descending order, zeros included.
    pub fn all_values_descending(&self) -> Vec<f64> {
        let mut out = self.positive_values();
        out.extend(std::iter::repeat_n(0.0, self.zero.len()));
        out.extend(self.negative.iter().rev().map(|p| p.value));
        out
    }

    pub fn len(&self) -> usize {
        self.positive.len() + self.zero.len() + self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distinct positive values with multiplicities.
    pub fn positive_levels(&self, rel_tol: f64) -> Vec<Level> {
        levels(&self.positive_values(), rel_tol)
    }

    /// Distinct negative values with multiplicities, most negative first.
    pub fn negative_levels(&self, rel_tol: f64) -> Vec<Level> {
        levels(&self.negative_values(), rel_tol)
    }
}

/// Collapses a sorted list into levels whose members agree to `rel_tol`.
pub fn levels(sorted: &[f64], rel_tol: f64) -> Vec<Level> {
    cluster_runs(sorted, rel_tol)
        .into_iter()
        .map(|(start, len)| Level {
            value: sorted[start],
            multiplicity: len,
        })
        .collect()
}

/// Λ_S(v) = vᵀAv / vᵀBv.
pub fn rayleigh(forms: &FormPair, v: &DVector<f64>) -> Result<f64> {
    if v.len() != forms.dim() {
        return Err(OmegaError::invalid(format!(
            "vector has length {} but the forms are {}-dimensional",
            v.len(),
            forms.dim()
        )));
    }
    if v.iter().all(|x| *x == 0.0) {
        return Err(OmegaError::invalid("Λ_S is undefined on the zero vector"));
    }
    let num = v.dot(&(&forms.a * v));
    let den = v.dot(&(&forms.b * v));
    Ok(num / den)
}

/// Full signed spectrum of `A x = Λ B x`.
pub fn solve_lambda(forms: &FormPair) -> Result<LambdaSpectrum> {
    let n = forms.dim();
    let l = &forms.b_factor;

    // C = L⁻¹ A L⁻ᵀ with B = L Lᵀ.
    let linv_a = l
        .solve_lower_triangular(&forms.a)
        .ok_or(OmegaError::NotPositiveDefinite)?;
    let mut c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or(OmegaError::NotPositiveDefinite)?;
    symmetrize(&mut c);
    let (values_asc, vectors_asc) = symmetric_eigen_ascending(c);
    let lt = l.transpose();

    let mut values: Vec<f64> = values_asc.iter().rev().copied().collect();
    let mut vectors: Vec<DVector<f64>> = (0..n)
        .rev()
        .map(|j| {
            lt.solve_upper_triangular(&vectors_asc.column(j).into_owned())
                .expect("triangular factor has a positive diagonal")
        })
        .collect();

    for (start, len) in cluster_runs(&values, CLUSTER_TOL_REL) {
        if len > 1 {
            canonicalize_cluster(&forms.b, &mut vectors[start..start + len]);
        }
    }
    for v in vectors.iter_mut() {
        let norm = v.dot(&(&forms.b * &*v)).sqrt();
        *v /= norm;
        normalize_sign(v, SIGNIFICANT_COEFF);
    }

    let scale = values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let tolerance = RESIDUAL_TOL * scale.max(1.0);
    for (index, (value, v)) in values.iter().zip(&vectors).enumerate() {
        let bv = &forms.b * v;
        let residual = (&forms.a * v - &bv * *value).norm();
        if residual > tolerance * bv.norm() {
            return Err(OmegaError::ResidualTooLarge {
                index,
                residual: residual / bv.norm(),
                tolerance,
            });
        }
    }

    let zero_tol = ZERO_TOL_REL * scale;
    let mut positive = Vec::new();
    let mut zero = Vec::new();
    let mut negative = Vec::new();
    for (value, vector) in values.drain(..).zip(vectors) {
        if value > zero_tol {
            positive.push(LambdaPair { value, vector });
        } else if value < -zero_tol {
            negative.push(LambdaPair { value, vector });
        } else {
            zero.push(vector);
        }
    }
    negative.reverse();
    Ok(LambdaSpectrum {
        positive,
        zero,
        negative,
        zero_tol,
    })
}

/// Replaces a B-orthonormal basis of a degenerate eigenspace by the basis
/// obtained from projecting e_1, e_2, … in order, then orders it by the
/// index of each vector's first significant coefficient.
fn canonicalize_cluster(b: &DMatrix<f64>, cluster: &mut [DVector<f64>]) {
    let m = cluster.len();
    let n = b.nrows();
    let x = DMatrix::from_columns(cluster);
    // Column j: coordinates of the B-projection of e_j in the basis `x`.
    let coords = x.transpose() * b;
    let max_norm = coords
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(m);
    for j in 0..n {
        if accepted.len() == m {
            break;
        }
        let mut w = coords.column(j).into_owned();
        for _ in 0..2 {
            for q in &accepted {
                let proj = q.dot(&w);
                w.axpy(-proj, q, 1.0);
            }
        }
        let norm = w.norm();
        if norm > 1e-6 * max_norm {
            accepted.push(w / norm);
        }
    }
    if accepted.len() < m {
        return;
    }
    let mut rotated: Vec<DVector<f64>> = accepted.iter().map(|w| &x * w).collect();
    rotated.sort_by_key(|v| first_significant(v, SIGNIFICANT_COEFF).unwrap_or(usize::MAX));
    for (slot, v) in cluster.iter_mut().zip(rotated) {
        *slot = v;
    }
}

/// Direct implementation of the inductive definition: Λ_{i+1} is the
/// supremum of Λ_S over the B-orthogonal complement of v_1 … v_i. Works
/// through an eigen-decomposition of `B` and projected dense solves, so it
/// shares no code path with [`solve_lambda`] beyond the symmetric eigensolver.
pub fn greedy_lambda(forms: &FormPair, k: usize) -> Result<Vec<LambdaPair>> {
    let n = forms.dim();
    if k == 0 || k > n {
        return Err(OmegaError::invalid(format!("greedy count {k} must lie in 1..={n}")));
    }
    let (b_vals, b_vecs) = symmetric_eigen_ascending(forms.b.clone());
    // Columns of W are B-orthonormal: W = U D^{-1/2}.
    let mut w = b_vecs.clone();
    for (j, d) in b_vals.iter().enumerate() {
        if !(*d > 0.0) {
            return Err(OmegaError::NotPositiveDefinite);
        }
        w.column_mut(j).scale_mut(1.0 / d.sqrt());
    }

    let mut found: Vec<LambdaPair> = Vec::with_capacity(k);
    let mut zero_tol = 0.0;
    for step in 0..k {
        let q = if found.is_empty() {
            w.clone()
        } else {
            b_orthogonal_complement(&forms.b, &w, &found)
        };
        if q.ncols() == 0 {
            break;
        }
        let mut projected = q.transpose() * &forms.a * &q;
        symmetrize(&mut projected);
        let (vals, vecs) = symmetric_eigen_ascending(projected);
        if step == 0 {
            let scale = vals.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            zero_tol = ZERO_TOL_REL * scale;
        }
        let top = *vals.last().expect("nonempty projected problem");
        if top <= zero_tol {
            break;
        }
        let mut v = &q * vecs.column(vals.len() - 1);
        let norm = v.dot(&(&forms.b * &v)).sqrt();
        v /= norm;
        normalize_sign(&mut v, SIGNIFICANT_COEFF);
        found.push(LambdaPair { value: top, vector: v });
    }
    Ok(found)
}

fn b_orthogonal_complement(b: &DMatrix<f64>, w: &DMatrix<f64>, found: &[LambdaPair]) -> DMatrix<f64> {
    let mut projected = w.clone();
    for _ in 0..2 {
        for pair in found {
            let bv = b * &pair.vector;
            let coeffs = projected.transpose() * &bv;
            projected -= &pair.vector * coeffs.transpose();
        }
    }
    let mut gram = projected.transpose() * b * &projected;
    symmetrize(&mut gram);
    let (vals, vecs) = symmetric_eigen_ascending(gram);
    let max = vals.iter().fold(0.0_f64, |m, x| m.max(*x));
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-10 * max).collect();
    let mut q = DMatrix::zeros(w.nrows(), keep.len());
    for (col, &i) in keep.iter().enumerate() {
        let v = &projected * vecs.column(i) / vals[i].sqrt();
        q.set_column(col, &v);
    }
    q
}

/// S₁ ⊕ S₂ on the product of two eigenbases: the functions ψ_i ψ'_k with
/// (i, k) ≠ (0, 0), where index 0 is the constant mode of each factor.
/// Sorted by product eigenvalue λ_i + λ'_k; ties keep (i, k) order.
pub fn tensor_product_forms(f1: &FormPair, f2: &FormPair) -> Result<FormPair> {
    let (b1, b2) = match (f1.basis(), f2.basis()) {
        (Some(b1), Some(b2)) => (b1.clone(), b2.clone()),
        _ => {
            return Err(OmegaError::invalid(
                "tensor products need forms on Laplacian eigenbases",
            ))
        }
    };
    for (pair, basis) in [(f1, &b1), (f2, &b2)] {
        let expected = basis.biharmonic_gram();
        let scale = expected.amax();
        if (pair.b() - &expected).amax() > 1e-12 * scale {
            return Err(OmegaError::invalid(
                "factor biharmonic form must be diag(λ²) on an orthonormal eigenbasis",
            ));
        }
    }
    let lam1: Vec<f64> = std::iter::once(0.0).chain(b1.eigenvalues().iter().copied()).collect();
    let lam2: Vec<f64> = std::iter::once(0.0).chain(b2.eigenvalues().iter().copied()).collect();
    let ext = |m: &DMatrix<f64>| {
        let mut e = DMatrix::zeros(m.nrows() + 1, m.ncols() + 1);
        e.view_mut((1, 1), (m.nrows(), m.ncols())).copy_from(m);
        e
    };
    let a1 = ext(f1.a());
    let a2 = ext(f2.a());

    let mut index: Vec<(usize, usize)> = Vec::with_capacity(lam1.len() * lam2.len() - 1);
    for i in 0..lam1.len() {
        for k in 0..lam2.len() {
            if (i, k) != (0, 0) {
                index.push((i, k));
            }
        }
    }
    index.sort_by(|&(i, k), &(j, l)| (lam1[i] + lam2[k]).total_cmp(&(lam1[j] + lam2[l])));

    let n = index.len();
    let mut a = DMatrix::zeros(n, n);
    for (p, &(i, k)) in index.iter().enumerate() {
        for (q, &(j, l)) in index.iter().enumerate() {
            let mut v = 0.0;
            if k == l {
                v += a1[(i, j)];
            }
            if i == j {
                v += a2[(k, l)];
            }
            a[(p, q)] = v;
        }
    }
    let eigenvalues: Vec<f64> = index.iter().map(|&(i, k)| lam1[i] + lam2[k]).collect();
    let basis = SpectralBasis::new(
        b1.dim_manifold() + b2.dim_manifold(),
        eigenvalues,
        Provenance::Synthetic,
    )?;
    FormPair::on_eigenbasis(Arc::new(basis), a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// Cyclic Jacobi rotations on a dense symmetric matrix; eigenvalues only.
    fn jacobi_eigenvalues(mut m: DMatrix<f64>) -> Vec<f64> {
        let n = m.nrows();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)] * m[(i, j)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if m[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                }
            }
        }
        let mut vals: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    /// B^{-1/2} by Jacobi diagonalization with accumulated rotations.
    fn jacobi_inverse_sqrt(b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = b.nrows();
        let mut m = b.clone();
        let mut v = DMatrix::<f64>::identity(n, n);
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[(p, q)] * m[(p, q)];
                    if m[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                    let t = if theta == 0.0 {
                        1.0
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (a, bq) = (m[(k, p)], m[(k, q)]);
                        m[(k, p)] = c * a - s * bq;
                        m[(k, q)] = s * a + c * bq;
                        let (a, bq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * a - s * bq;
                        v[(k, q)] = s * a + c * bq;
                    }
                    for k in 0..n {
                        let (a, bq) = (m[(p, k)], m[(q, k)]);
                        m[(p, k)] = c * a - s * bq;
                        m[(q, k)] = s * a + c * bq;
                    }
                }
            }
            if off < 1e-30 {
                break;
            }
        }
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            n,
            (0..n).map(|i| 1.0 / m[(i, i)].sqrt()),
        ));
        &v * d * v.transpose()
    }

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        (&g + g.transpose()) * 0.5
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        &g * g.transpose() + DMatrix::identity(n, n) * (n as f64) * 0.5
    }

    fn diag_example() -> FormPair {
        let basis = Arc::new(
            SpectralBasis::new(2, vec![2.0, 6.0, 12.0], Provenance::Analytic("S2".into())).unwrap(),
        );
        let a = basis.dirichlet_gram();
        FormPair::on_eigenbasis(basis, a).unwrap()
    }

    #[test]
    fn identical_forms_give_unit_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_spd(&mut rng, 6);
        let spec = solve_lambda(&FormPair::new(b.clone(), b).unwrap()).unwrap();
        assert_eq!(spec.zero_dim(), 0);
        assert_eq!(spec.positive().len(), 6);
        for v in spec.positive_values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn metric_form_gives_reciprocal_eigenvalues() {
        let spec = solve_lambda(&diag_example()).unwrap();
        let expected = [0.5, 1.0 / 6.0, 1.0 / 12.0];
        for (got, want) in spec.positive_values().iter().zip(expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
        assert!(spec.negative().is_empty());
    }

    #[test]
    fn matches_jacobi_oracle_on_random_pencils() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_symmetric(&mut rng, 5);
            let b = random_spd(&mut rng, 5);
            let half = jacobi_inverse_sqrt(&b);
            let oracle = jacobi_eigenvalues(&half * &a * &half);
            let spec = solve_lambda(&FormPair::new(a, b).unwrap()).unwrap();
            let got = spec.all_values_descending();
            for (g, o) in got.iter().zip(&oracle) {
                assert!((g - o).abs() < 1e-10, "{got:?} vs {oracle:?}");
            }
        }
    }

    #[test]
    fn rejects_asymmetric_and_indefinite_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            FormPair::new(a, DMatrix::identity(2, 2)),
            Err(OmegaError::NotSymmetric { .. })
        ));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            FormPair::new(DMatrix::identity(2, 2), b),
            Err(OmegaError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn tiny_asymmetry_is_absorbed() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5 + 1e-14, 1.0]);
        let f = FormPair::new(a, DMatrix::identity(2, 2)).unwrap();
        assert_eq!(f.a()[(0, 1)], f.a()[(1, 0)]);
    }

    #[test]
    fn rayleigh_examples() {
        let f = FormPair::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 6.0])),
            DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 36.0])),
        )
        .unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(rayleigh(&f, &e1).unwrap(), 0.5);
        assert_eq!(rayleigh(&f, &(e1 * -3.5)).unwrap(), 0.5);
        assert!(rayleigh(&f, &DVector::zeros(2)).is_err());
        assert!(rayleigh(&f, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn rayleigh_attains_and_bounds_by_lambda_one() {
        let forms = diag_example();
        let spec = solve_lambda(&forms).unwrap();
        let top = &spec.positive()[0];
        assert!((rayleigh(&forms, &top.vector).unwrap() - top.value).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let v = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
            assert!(rayleigh(&forms, &v).unwrap() <= top.value + 1e-12);
        }
    }

    #[test]
    fn greedy_matches_eigen_on_diag_example() {
        let forms = diag_example();
        let greedy = greedy_lambda(&forms, 3).unwrap();
        let values: Vec<f64> = greedy.iter().map(|p| p.value).collect();
        let spec = solve_lambda(&forms).unwrap().positive_values();
        for (g, s) in values.iter().zip(&spec) {
            assert!((g - s).abs() < 1e-12);
        }
        assert_eq!(values.len(), 3);
    }

    #[test]
    fn greedy_stops_on_nonpositive_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = DMatrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let a = -(&g * g.transpose());
        let f = FormPair::new(a, random_spd(&mut rng, 4)).unwrap();
        assert!(greedy_lambda(&f, 4).unwrap().is_empty());
        assert!(solve_lambda(&f).unwrap().positive().is_empty());
        assert!(greedy_lambda(&f, 0).is_err());
        assert!(greedy_lambda(&f, 5).is_err());
    }

    #[test]
    fn greedy_rank_one_positive_part() {
        let u = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let a = &u * u.transpose() - DMatrix::identity(3, 3) * 0.0;
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let f = FormPair::new(a, b).unwrap();
        let greedy = greedy_lambda(&f, 1).unwrap();
        let spec = solve_lambda(&f).unwrap();
        assert_eq!(spec.positive().len(), 1);
        assert_eq!(spec.zero_dim(), 2);
        // uᵀB⁻¹u = 1 + 2 + 1/3
        assert!((greedy[0].value - (1.0 + 2.0 + 1.0 / 3.0)).abs() < 1e-12);
        assert!((spec.lambda(1) - greedy[0].value).abs() < 1e-12);
        assert_eq!(spec.lambda(2), 0.0);
    }

    #[test]
    fn degenerate_levels_are_canonical() {
        let basis = Arc::new(
            SpectralBasis::new(2, vec![2.0, 2.0, 2.0, 6.0], Provenance::Synthetic).unwrap(),
        );
        let a = basis.dirichlet_gram();
        let spec = solve_lambda(&FormPair::on_eigenbasis(basis, a).unwrap()).unwrap();
        let lv = spec.positive_levels(1e-12);
        assert_eq!(lv.len(), 2);
        assert_eq!(lv[0].multiplicity, 3);
        for (i, p) in spec.positive()[..3].iter().enumerate() {
            assert!((p.vector[i] - 0.5).abs() < 1e-12, "{}", p.vector);
        }
    }

    #[test]
    fn negative_side_is_relabelled_positive_side_of_minus_s() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_symmetric(&mut rng, 7);
        let b = random_spd(&mut rng, 7);
        let s = solve_lambda(&FormPair::new(a.clone(), b.clone()).unwrap()).unwrap();
        let m = solve_lambda(&FormPair::new(-a, b).unwrap()).unwrap();
        let neg = s.negative_values();
        let pos = m.positive_values();
        assert_eq!(neg.len(), pos.len());
        for (n, p) in neg.iter().zip(&pos) {
            assert!((n + p).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_invariants_are_enforced() {
        assert!(SpectralBasis::new(2, vec![1.0], Provenance::Synthetic).is_err());
        assert!(SpectralBasis::new(2, vec![0.0, 1.0], Provenance::Synthetic).is_err());
        assert!(SpectralBasis::new(2, vec![2.0, 1.0], Provenance::Synthetic).is_err());
        assert!(SpectralBasis::new(0, vec![1.0, 2.0], Provenance::Synthetic).is_err());
    }

    #[test]
    fn product_of_diag_examples_takes_the_max() {
        let f = diag_example();
        let basis = Arc::new(SpectralBasis::new(1, vec![1.0, 4.0], Provenance::Synthetic).unwrap());
        let zero = FormPair::on_eigenbasis(basis, DMatrix::zeros(2, 2)).unwrap();
        let p = tensor_product_forms(&f, &zero).unwrap();
        assert_eq!(p.dim(), 4 * 3 - 1);
        let spec = solve_lambda(&p).unwrap();
        assert!((spec.lambda(1) - 0.5).abs() < 1e-14);
    }
}
