//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricTridiagonal};

/// Eigen-decomposition of a symmetric matrix with eigenvalues in ascending
/// order and orthonormal eigenvectors as columns. Deterministic.
///
/// Householder tridiagonalization followed by implicit QL iterations
/// (EISPACK tql2). nalgebra's own `SymmetricEigen` was observed to return
/// eigenvectors with O(1e-2) residuals on matrices with tight clusters.
pub fn symmetric_eigen_ascending(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let (mut v, diag, off) = SymmetricTridiagonal::new(m).unpack();
    let mut d: Vec<f64> = diag.iter().copied().collect();
    let mut e: Vec<f64> = off.iter().copied().chain(std::iter::once(0.0)).collect();
    tql2(&mut d, &mut e, &mut v);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }
    (values, vectors)
}

/// Diagonalizes the symmetric tridiagonal matrix with diagonal `d` and
/// couplings e[i] = T[i, i+1] (e[n-1] = 0), accumulating rotations into `v`.
fn tql2(d: &mut [f64], e: &mut [f64], v: &mut DMatrix<f64>) {
    let n = d.len();
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (mut left, mut right) = v.columns_range_pair_mut(i, i + 1);
                    for (a, b) in left.iter_mut().zip(right.iter_mut()) {
                        let h = *b;
                        *b = s * *a + c * h;
                        *a = c * *a - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter > 60 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

/// Averages a square matrix with its transpose.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// max |m_ij - m_ji| / max |m_ij|, zero for the zero matrix.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Flips `v` so that its first coefficient above `rel_tol * max|v|` is positive.
pub fn normalize_sign(v: &mut DVector<f64>, rel_tol: f64) {
    if let Some(i) = first_significant(v, rel_tol) {
        if v[i] < 0.0 {
            v.neg_mut();
        }
    }
}

/// Index of the first coefficient whose magnitude exceeds `rel_tol * max|v|`.
pub fn first_significant(v: &DVector<f64>, rel_tol: f64) -> Option<usize> {
    let scale = v.amax();
    if scale == 0.0 {
        return None;
    }
    v.iter().position(|x| x.abs() > rel_tol * scale)
}

/// Groups a sorted list into runs whose neighbours agree to `rel_tol`.
/// Returns `(start, len)` pairs.
pub fn cluster_runs(values: &[f64], rel_tol: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || {
            let (a, b) = (values[i - 1], values[i]);
            (a - b).abs() > rel_tol * a.abs().max(b.abs())
        };
        if split {
            if i > start {
                runs.push((start, i - start));
            }
            start = i;
        }
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_sorted() {
        let m = DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
        let (vals, vecs) = symmetric_eigen_ascending(m);
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_residuals_on_clustered_spectrum() {
        // Random orthogonal conjugate of a spectrum with tight clusters.
        let n = 60;
        let mut state = 12345u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let g = DMatrix::from_fn(n, n, |_, _| rnd());
        let q = g.qr().q();
        let diag = DVector::from_fn(n, |i, _| [0.5, 0.5 + 1e-15, 0.1, 0.05037, 0.05039][i % 5] * (1.0 + (i / 5) as f64));
        let m = &q * DMatrix::from_diagonal(&diag) * q.transpose();
        let (vals, vecs) = symmetric_eigen_ascending(m.clone());
        for k in 0..n {
            let v = vecs.column(k);
            assert!((&m * v - v * vals[k]).norm() < 1e-13);
        }
        assert!((vecs.transpose() * &vecs - DMatrix::identity(n, n)).amax() < 1e-13);
    }

    #[test]
    fn runs_group_near_equal_values() {
        let runs = cluster_runs(&[0.5, 0.5, 0.25, 0.125, 0.125, 0.125], 1e-12);
        assert_eq!(runs, vec![(0, 2), (2, 1), (3, 3)]);
        assert!(cluster_runs(&[], 1e-12).is_empty());
    }

    #[test]
    fn sign_normalization_uses_first_significant_entry() {
        let mut v = DVector::from_vec(vec![1e-20, -2.0, 1.0]);
        normalize_sign(&mut v, 1e-9);
        assert_eq!(v[1], 2.0);
    }
}
