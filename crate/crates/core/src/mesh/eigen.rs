//! Smallest eigenpairs of L x = λ M x with the constant mode removed.
//!
//! Small meshes use a dense symmetric solve of M^{-1/2} L M^{-1/2}. Larger
//! ones run a block Lanczos iteration with full reorthogonalization on
//! C = M^{1/2} (L + σM)^{-1} M^{1/2}, whose largest eigenvalues 1/(λ + σ)
//! belong to the smallest λ. The factorization of L + σM uses a reverse
//! Cuthill–McKee ordering.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::operators::{spmv, MeshOperators};
use crate::error::{OmegaError, Result};
use crate::linalg::{normalize_sign, symmetric_eigen_ascending};

/// Required relative residual ‖Lx − λMx‖ / ‖Lx‖.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Meshes with at most this many vertices use the dense solver.
    pub dense_limit: usize,
    pub block_size: usize,
    /// Largest Krylov basis before giving up; defaults to 4N + 120.
    pub max_basis: Option<usize>,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            dense_limit: 2000,
            block_size: 8,
            max_basis: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Dense,
    Lanczos { basis_size: usize },
}

#[derive(Clone, Debug)]
pub struct MeshEigen {
    /// λ_1 ≤ … ≤ λ_N, all positive.
    pub eigenvalues: Vec<f64>,
    /// V × N, columns M-orthonormal.
    pub vectors: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub method: EigenMethod,
}

pub fn eigensolve(ops: &MeshOperators, count: usize) -> Result<MeshEigen> {
    eigensolve_with(ops, count, &EigenOptions::default())
}

pub fn eigensolve_with(ops: &MeshOperators, count: usize, opts: &EigenOptions) -> Result<MeshEigen> {
    let n = ops.vertex_count();
    if count == 0 || count + 1 >= n {
        return Err(OmegaError::InsufficientSpectrum(format!(
            "{count} eigenpairs requested from a mesh with {n} vertices (need N < V − 1)"
        )));
    }
    let sqrt_mass: Vec<f64> = ops.mass.iter().map(|m| m.sqrt()).collect();
    let (values, vectors, method) = if n <= opts.dense_limit {
        let (v, x) = dense(ops, &sqrt_mass, count)?;
        (v, x, EigenMethod::Dense)
    } else {
        lanczos(ops, &sqrt_mass, count, opts)?
    };
    let residuals = residuals(ops, &values, &vectors);
    if let Some((index, &r)) = residuals
        .iter()
        .enumerate()
        .find(|(_, r)| !(**r <= EIGEN_RESIDUAL_TOL))
    {
        return Err(OmegaError::ResidualTooLarge {
            index,
            residual: r,
            tolerance: EIGEN_RESIDUAL_TOL,
        });
    }
    Ok(MeshEigen {
        eigenvalues: values,
        vectors,
        residuals,
        method,
    })
}

fn dense(ops: &MeshOperators, d: &[f64], count: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = ops.vertex_count();
    let mut a = DMatrix::zeros(n, n);
    for (j, col) in ops.stiffness.col_iter().enumerate() {
        for (&i, &v) in col.row_indices().iter().zip(col.values()) {
            a[(i, j)] = v / (d[i] * d[j]);
        }
    }
    let (values, vecs) = symmetric_eigen_ascending(a);
    let scale = values[n - 1].abs().max(1.0);
    if values[0].abs() > 1e-8 * scale || values[1] <= 1e-8 * scale {
        return Err(OmegaError::Precondition(
            "stiffness matrix does not have a simple zero eigenvalue".into(),
        ));
    }
    let mut x = DMatrix::zeros(n, count);
    for k in 0..count {
        let mut col = DVector::from_fn(n, |i, _| vecs[(i, k + 1)] / d[i]);
        normalize_sign(&mut col, 1e-9);
        x.set_column(k, &col);
    }
    Ok((values[1..=count].to_vec(), x))
}

/// ‖Lx − λMx‖ / ‖Lx‖ per column.
pub fn residuals(ops: &MeshOperators, values: &[f64], x: &DMatrix<f64>) -> Vec<f64> {
    (0..values.len())
        .map(|k| {
            let col: Vec<f64> = x.column(k).iter().copied().collect();
            let lx = spmv(&ops.stiffness, &col);
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..col.len() {
                let r = lx[i] - values[k] * ops.mass[i] * col[i];
                num += r * r;
                den += lx[i] * lx[i];
            }
            (num / den).sqrt()
        })
        .collect()
}

/// Reverse Cuthill–McKee ordering of a structurally symmetric matrix;
/// `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CscMatrix<f64>) -> Vec<usize> {
    let n = a.ncols();
    let adj: Vec<Vec<usize>> = a
        .col_iter()
        .enumerate()
        .map(|(j, col)| col.row_indices().iter().copied().filter(|&i| i != j).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(|x| x.len()).collect();

    let bfs_levels = |start: usize, seen: &[bool]| -> Vec<usize> {
        let mut level = vec![usize::MAX; n];
        let mut order = vec![start];
        level[start] = 0;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &w in &adj[v] {
                if !seen[w] && level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    order.push(w);
                }
            }
        }
        let last = level[*order.last().unwrap()];
        order.into_iter().filter(|&v| level[v] == last).collect()
    };

    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let mut start = (0..n)
            .filter(|&v| !seen[v])
            .min_by_key(|&v| (degree[v], v))
            .unwrap();
        // Two sweeps towards a pseudo-peripheral vertex.
        for _ in 0..2 {
            let far = bfs_levels(start, &seen);
            start = *far.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        }
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !seen[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

struct ShiftInvert {
    factor: CscCholesky<f64>,
    perm: Vec<usize>,
    sqrt_mass: Vec<f64>,
}

impl ShiftInvert {
    fn new(ops: &MeshOperators, sqrt_mass: &[f64], shift: f64) -> Result<Self> {
        let n = ops.vertex_count();
        let perm = reverse_cuthill_mckee(&ops.stiffness);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut coo = CooMatrix::new(n, n);
        for (j, col) in ops.stiffness.col_iter().enumerate() {
            for (&i, &v) in col.row_indices().iter().zip(col.values()) {
                coo.push(inv[i], inv[j], v);
            }
        }
        for (i, m) in ops.mass.iter().enumerate() {
            coo.push(inv[i], inv[i], shift * m);
        }
        let shifted = CscMatrix::from(&coo);
        let factor = CscCholesky::factor(&shifted).map_err(|_| OmegaError::NotPositiveDefinite)?;
        Ok(ShiftInvert {
            factor,
            perm,
            sqrt_mass: sqrt_mass.to_vec(),
        })
    }

    fn apply(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, b) = y.shape();
        let mut w = DMatrix::zeros(n, b);
        for c in 0..b {
            for (new, &old) in self.perm.iter().enumerate() {
                w[(new, c)] = self.sqrt_mass[old] * y[(old, c)];
            }
        }
        self.factor.solve_mut(&mut w);
        let mut out = DMatrix::zeros(n, b);
        for c in 0..b {
            for (new, &old) in self.perm.iter().enumerate() {
                out[(old, c)] = self.sqrt_mass[old] * w[(new, c)];
            }
        }
        out
    }
}

fn lanczos(
    ops: &MeshOperators,
    d: &[f64],
    count: usize,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, DMatrix<f64>, EigenMethod)> {
    let n = ops.vertex_count();
    let b = opts.block_size.max(1);
    let max_basis = opts.max_basis.unwrap_or(4 * count + 120).min(n - 1);
    let shift = 1.0 / ops.total_area();
    let op = ShiftInvert::new(ops, d, shift)?;

    // M^{1/2}·1 spans the constant mode; it is kept out of the basis.
    let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    let z0 = DVector::from_iterator(n, d.iter().map(|x| x / dn));

    let cap = max_basis + b;
    let mut q = DMatrix::zeros(n, cap);
    let mut t = DMatrix::zeros(cap, cap);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut m = 0;
    let start = DMatrix::from_fn(n, b, |_, _| StandardNormal.sample(&mut rng));
    m += append_orthonormal(&mut q, m, start, &z0, &mut rng);

    let mut applied = 0;
    let mut last_check = 0;
    let mut worst = f64::INFINITY;
    while applied < m {
        let block_end = m;
        let block = q.columns(applied, block_end - applied).into_owned();
        let mut w = op.apply(&block);
        let coeffs = q.columns(0, m).tr_mul(&w);
        for (jj, j) in (applied..block_end).enumerate() {
            for i in 0..m {
                t[(i, j)] = coeffs[(i, jj)];
                t[(j, i)] = coeffs[(i, jj)];
            }
        }
        w -= q.columns(0, m) * &coeffs;
        applied = block_end;

        let ready = applied >= count + 2 * b && applied - last_check >= 4 * b;
        if ready || applied >= max_basis {
            last_check = applied;
            let (vals, x, res) = ritz(ops, &q, &t, applied, count, d);
            worst = res.iter().cloned().fold(0.0, f64::max);
            if worst <= 0.1 * EIGEN_RESIDUAL_TOL {
                return Ok((vals, x, EigenMethod::Lanczos { basis_size: applied }));
            }
            if applied >= max_basis {
                if worst <= EIGEN_RESIDUAL_TOL {
                    return Ok((vals, x, EigenMethod::Lanczos { basis_size: applied }));
                }
                break;
            }
        }
        if m < max_basis {
            m += append_orthonormal(&mut q, m, w, &z0, &mut rng);
        }
    }
    Err(OmegaError::NoConvergence {
        iterations: applied,
        worst_residual: worst,
    })
}

/// Orthonormalizes the columns of `w` against z0, q[:, ..m] and each other
/// (two Gram–Schmidt passes), replacing collapsed columns by random ones.
/// Returns the number of columns appended.
fn append_orthonormal(
    q: &mut DMatrix<f64>,
    m: usize,
    w: DMatrix<f64>,
    z0: &DVector<f64>,
    rng: &mut ChaCha8Rng,
) -> usize {
    let n = q.nrows();
    let room = q.ncols() - m;
    let mut added = 0;
    for c in 0..w.ncols().min(room) {
        let mut v = w.column(c).into_owned();
        let mut tries = 0;
        loop {
            let before = v.norm();
            for _ in 0..2 {
                v.axpy(-z0.dot(&v), z0, 1.0);
                let basis = q.columns(0, m + added);
                let coeffs = basis.tr_mul(&v);
                v -= basis * coeffs;
            }
            let after = v.norm();
            if after > 1e-8 * before && after > 0.0 {
                v /= after;
                break;
            }
            tries += 1;
            if tries > 5 {
                return added;
            }
            v = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        }
        q.set_column(m + added, &v);
        added += 1;
    }
    added
}

/// Ritz pairs for the smallest `count` eigenvalues from the first `k`
/// basis vectors, with λ taken as the (L, M) Rayleigh quotient.
fn ritz(
    ops: &MeshOperators,
    q: &DMatrix<f64>,
    t: &DMatrix<f64>,
    k: usize,
    count: usize,
    d: &[f64],
) -> (Vec<f64>, DMatrix<f64>, Vec<f64>) {
    let n = q.nrows();
    let tk = t.view((0, 0), (k, k)).into_owned();
    let (_theta, s) = symmetric_eigen_ascending(tk);
    // Largest θ first.
    let top = DMatrix::from_fn(k, count, |i, j| s[(i, k - 1 - j)]);
    let y = q.columns(0, k) * top;
    let mut x = DMatrix::from_fn(n, count, |i, j| y[(i, j)] / d[i]);
    let mut vals = Vec::with_capacity(count);
    for j in 0..count {
        let col: Vec<f64> = x.column(j).iter().copied().collect();
        let lx = spmv(&ops.stiffness, &col);
        let num: f64 = lx.iter().zip(&col).map(|(a, b)| a * b).sum();
        let den: f64 = col.iter().zip(&ops.mass).map(|(a, m)| a * a * m).sum();
        vals.push(num / den);
        let scale = 1.0 / den.sqrt();
        let mut c = x.column(j).into_owned() * scale;
        normalize_sign(&mut c, 1e-9);
        x.set_column(j, &c);
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let x = DMatrix::from_fn(n, count, |i, j| x[(i, order[j])]);
    let res = residuals(ops, &vals, &x);
    (vals, x, res)
}
