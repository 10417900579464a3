//! Symmetric tensor fields on flat tori: Λ spectra in the real Fourier basis
//! and the oscillatory positivity probe.

use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{OmegaError, Result};
use crate::forms::{solve_lambda, FormPair, LambdaSpectrum, Provenance, SpectralBasis};
use crate::linalg::{normalize_sign, symmetric_eigen_ascending};

/// Absolute asymmetry allowed in a sample, scaled by max(1, max|S|).
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Fourier coefficients below this fraction of the largest one do not count
/// towards the bandwidth.
pub const BANDWIDTH_TOL: f64 = 1e-10;
/// Largest frequency offset K tried by the probe.
pub const OFFSET_CAP: usize = 1 << 14;
/// Largest patch frequency N tried by the probe.
pub const PATCH_CAP: usize = 1 << 10;
/// The Gram matrix counts as positive definite when its smallest eigenvalue
/// exceeds this fraction of its largest.
pub const GRAM_TOL: f64 = 1e-9;

pub const NAMED_FIELDS: [&str; 4] = ["identity", "neg-identity", "cap", "indefinite"];

type FieldFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A symmetric n×n tensor field on ℝⁿ/∏ periods_i ℤ, sampled on a uniform
/// grid with `grid_size` points per axis. Grid points are stored with the
/// last axis varying fastest.
#[derive(Clone)]
pub struct TorusField {
    name: String,
    periods: Vec<f64>,
    grid_size: usize,
    samples: Vec<f64>,
    eval: Option<Arc<FieldFn>>,
}

impl fmt::Debug for TorusField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusField")
            .field("name", &self.name)
            .field("periods", &self.periods)
            .field("grid_size", &self.grid_size)
            .field("analytic", &self.eval.is_some())
            .finish()
    }
}

fn check_domain(periods: &[f64], grid_size: usize) -> Result<()> {
    if periods.is_empty() {
        return Err(OmegaError::invalid("a torus needs at least one period"));
    }
    if let Some(p) = periods.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(OmegaError::invalid(format!("periods must be positive, got {p}")));
    }
    if grid_size < 16 || !grid_size.is_power_of_two() {
        return Err(OmegaError::invalid(format!(
            "grid size must be a power of two ≥ 16, got {grid_size}"
        )));
    }
    Ok(())
}

impl TorusField {
    /// Samples `f` on the grid; `f` is also kept for evaluation off the grid.
    pub fn analytic<F>(name: impl Into<String>, periods: Vec<f64>, grid_size: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        check_domain(&periods, grid_size)?;
        let n = periods.len();
        let points = grid_size.pow(n as u32);
        let mut samples = Vec::with_capacity(points * n * n);
        let mut x = vec![0.0; n];
        for p in 0..points {
            grid_coords(&periods, grid_size, p, &mut x);
            let s = f(&x);
            if s.shape() != (n, n) {
                return Err(OmegaError::invalid(format!(
                    "field returned a {}×{} matrix on a {n}-torus",
                    s.nrows(),
                    s.ncols()
                )));
            }
            samples.extend(s.transpose().iter());
        }
        let mut field = Self::tabulated(name, periods, grid_size, samples)?;
        field.eval = Some(Arc::new(f));
        Ok(field)
    }

    /// `samples` holds n² row-major entries per grid point.
    pub fn tabulated(
        name: impl Into<String>,
        periods: Vec<f64>,
        grid_size: usize,
        samples: Vec<f64>,
    ) -> Result<Self> {
        check_domain(&periods, grid_size)?;
        let n = periods.len();
        let points = grid_size.pow(n as u32);
        if samples.len() != points * n * n {
            return Err(OmegaError::invalid(format!(
                "expected {} samples for {points} grid points, got {}",
                points * n * n,
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(OmegaError::invalid(format!(
                "non-finite sample at grid point {}",
                i / (n * n)
            )));
        }
        let scale = samples.iter().fold(1.0f64, |m, s| m.max(s.abs()));
        for (p, s) in samples.chunks(n * n).enumerate() {
            for a in 0..n {
                for b in a + 1..n {
                    let d = (s[a * n + b] - s[b * n + a]).abs();
                    if d > SYMMETRY_TOL * scale {
                        return Err(OmegaError::invalid(format!(
                            "sample at grid point {p} is not symmetric (asymmetry {:.3e})",
                            d / scale
                        )));
                    }
                }
            }
        }
        Ok(TorusField {
            name: name.into(),
            periods,
            grid_size,
            samples,
            eval: None,
        })
    }

    /// Reads one grid point per row, last axis fastest, with a header naming
    /// the upper-triangular entries `s11, s12, …, snn`.
    pub fn from_csv<R: Read>(
        name: impl Into<String>,
        periods: Vec<f64>,
        reader: R,
    ) -> Result<Self> {
        let n = periods.len();
        if n == 0 {
            return Err(OmegaError::invalid("a torus needs at least one period"));
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| OmegaError::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let mut column = vec![vec![usize::MAX; n]; n];
        for (c, h) in headers.iter().enumerate() {
            let idx = h
                .strip_prefix('s')
                .filter(|rest| rest.len() == 2)
                .and_then(|rest| {
                    let a = rest[..1].parse::<usize>().ok()?;
                    let b = rest[1..].parse::<usize>().ok()?;
                    (a >= 1 && b >= a && b <= n).then_some((a - 1, b - 1))
                })
                .ok_or_else(|| OmegaError::Parse {
                    line: 1,
                    message: format!("unknown column '{h}'"),
                })?;
            column[idx.0][idx.1] = c;
        }
        for a in 0..n {
            for b in a..n {
                if column[a][b] == usize::MAX {
                    return Err(OmegaError::Parse {
                        line: 1,
                        message: format!("missing column s{}{}", a + 1, b + 1),
                    });
                }
            }
        }
        let mut samples = Vec::new();
        let mut rows = 0usize;
        for (i, record) in rdr.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| OmegaError::Parse {
                line,
                message: e.to_string(),
            })?;
            let mut s = vec![0.0; n * n];
            for a in 0..n {
                for b in a..n {
                    let t = &record[column[a][b]];
                    let v: f64 = t.parse().map_err(|_| OmegaError::Parse {
                        line,
                        message: format!("bad value '{t}'"),
                    })?;
                    s[a * n + b] = v;
                    s[b * n + a] = v;
                }
            }
            samples.extend(s);
            rows += 1;
        }
        let grid_size = (rows as f64).powf(1.0 / n as f64).round() as usize;
        if grid_size.pow(n as u32) != rows {
            return Err(OmegaError::invalid(format!(
                "{rows} rows is not a full grid on a {n}-torus"
            )));
        }
        Self::tabulated(name, periods, grid_size, samples)
    }

    /// The fields used by the probe and the verification suites, on any torus:
    /// `identity` S = g, `neg-identity` S = −g, `cap` S = (∏((1 + cos θ_i)/2)⁴ − 1/10)·g
    /// with θ_i = 2πx_i/L_i, positive only near the origin, and `indefinite`
    /// S = diag(cos θ_1, −1, …, −1).
    pub fn named(name: &str, periods: Vec<f64>, grid_size: usize) -> Result<Self> {
        let n = periods.len();
        let p = periods.clone();
        match name {
            "identity" => Self::analytic(name, periods, grid_size, move |_| DMatrix::identity(n, n)),
            "neg-identity" => {
                Self::analytic(name, periods, grid_size, move |_| -DMatrix::identity(n, n))
            }
            "cap" => Self::analytic(name, periods, grid_size, move |x| {
                let bump: f64 = x
                    .iter()
                    .zip(&p)
                    .map(|(xi, li)| ((1.0 + (2.0 * PI * xi / li).cos()) / 2.0).powi(4))
                    .product();
                DMatrix::identity(n, n) * (bump - 0.1)
            }),
            "indefinite" => Self::analytic(name, periods, grid_size, move |x| {
                let mut s = -DMatrix::identity(n, n);
                s[(0, 0)] = (2.0 * PI * x[0] / p[0]).cos();
                s
            }),
            other => Err(OmegaError::invalid(format!(
                "unknown field '{other}' (expected one of {})",
                NAMED_FIELDS.join(", ")
            ))),
        }
    }

    /// The same analytic field on another grid.
    pub fn resampled(&self, grid_size: usize) -> Result<Self> {
        let f = self
            .eval
            .clone()
            .ok_or_else(|| OmegaError::invalid("a tabulated field cannot be resampled"))?;
        Self::analytic(self.name.clone(), self.periods.clone(), grid_size, move |x| f(x))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn point_count(&self) -> usize {
        self.samples.len() / (self.dim() * self.dim())
    }

    pub fn volume(&self) -> f64 {
        self.periods.iter().product()
    }

    pub fn is_analytic(&self) -> bool {
        self.eval.is_some()
    }

    pub fn sample(&self, point: usize) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.samples[point * n * n..(point + 1) * n * n])
    }

    pub fn grid_point(&self, point: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        grid_coords(&self.periods, self.grid_size, point, &mut x);
        x
    }

    /// S(x) at any point: exact for analytic fields, multilinear
    /// interpolation of the periodic samples otherwise.
    pub fn eval_at(&self, x: &[f64]) -> DMatrix<f64> {
        if let Some(f) = &self.eval {
            let wrapped: Vec<f64> = x
                .iter()
                .zip(&self.periods)
                .map(|(xi, li)| xi.rem_euclid(*li))
                .collect();
            return f(&wrapped);
        }
        let n = self.dim();
        let g = self.grid_size;
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for i in 0..n {
            let t = (x[i] / self.periods[i]).rem_euclid(1.0) * g as f64;
            let f = t.floor();
            base[i] = f as usize % g;
            frac[i] = t - f;
        }
        let mut out = DMatrix::zeros(n, n);
        for corner in 0..1usize << n {
            let mut weight = 1.0;
            let mut p = 0;
            for i in 0..n {
                let up = corner >> i & 1 == 1;
                weight *= if up { frac[i] } else { 1.0 - frac[i] };
                p = p * g + (base[i] + up as usize) % g;
            }
            if weight != 0.0 {
                out += self.sample(p) * weight;
            }
        }
        out
    }

    /// Largest per-axis frequency carrying a Fourier coefficient above
    /// BANDWIDTH_TOL relative to the largest coefficient of any entry.
    pub fn bandwidth(&self) -> usize {
        let n = self.dim();
        let g = self.grid_size;
        let points = self.point_count();
        let fft = FftPlanner::<f64>::new().plan_fft_forward(g);
        let mut spectra = Vec::new();
        for a in 0..n {
            for b in a..n {
                let mut buf: Vec<Complex<f64>> = (0..points)
                    .map(|p| Complex::new(self.samples[p * n * n + a * n + b], 0.0))
                    .collect();
                for axis in 0..n {
                    let stride = g.pow((n - 1 - axis) as u32);
                    let mut line = vec![Complex::new(0.0, 0.0); g];
                    for start in 0..points {
                        if (start / stride) % g != 0 {
                            continue;
                        }
                        for (j, c) in line.iter_mut().enumerate() {
                            *c = buf[start + j * stride];
                        }
                        fft.process(&mut line);
                        for (j, c) in line.iter().enumerate() {
                            buf[start + j * stride] = *c;
                        }
                    }
                }
                spectra.push(buf);
            }
        }
        let largest = spectra
            .iter()
            .flatten()
            .fold(0.0f64, |m, c| m.max(c.norm()));
        if largest == 0.0 {
            return 0;
        }
        let mut bw = 0;
        for spectrum in &spectra {
            for (p, c) in spectrum.iter().enumerate() {
                if c.norm() > BANDWIDTH_TOL * largest {
                    let mut rest = p;
                    for _ in 0..n {
                        let q = rest % g;
                        rest /= g;
                        bw = bw.max(q.min(g - q));
                    }
                }
            }
        }
        bw
    }

    /// Grid point, value and unit eigenvector of the largest pointwise
    /// eigenvalue of S over the grid (first point on ties).
    pub fn max_pointwise_eigen(&self) -> (usize, f64, DVector<f64>) {
        let mut best = (0, f64::NEG_INFINITY, DVector::zeros(self.dim()));
        for p in 0..self.point_count() {
            let (values, vectors) = symmetric_eigen_ascending(self.sample(p));
            let top = values.len() - 1;
            if values[top] > best.1 {
                let mut v = vectors.column(top).into_owned();
                normalize_sign(&mut v, 1e-12);
                best = (p, values[top], v);
            }
        }
        best
    }
}

fn grid_coords(periods: &[f64], grid_size: usize, point: usize, x: &mut [f64]) {
    let mut rest = point;
    for i in (0..periods.len()).rev() {
        x[i] = periods[i] * (rest % grid_size) as f64 / grid_size as f64;
        rest /= grid_size;
    }
}

/// Real Fourier mode √(2/V)·cos(k·x) or √(2/V)·sin(k·x) with
/// k_i = 2π freq_i / L_i and Laplace eigenvalue |k|².
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierMode {
    pub freq: Vec<i64>,
    pub sine: bool,
    pub eigenvalue: f64,
}

/// All nonconstant modes with max_i |freq_i| ≤ max_freq, one of ±freq each,
/// ordered by eigenvalue, then frequency, cosine first.
pub fn fourier_modes(periods: &[f64], max_freq: usize) -> Vec<FourierMode> {
    let n = periods.len();
    let m = max_freq as i64;
    let side = (2 * m + 1) as usize;
    let mut modes = Vec::new();
    for idx in 0..side.pow(n as u32) {
        let mut rest = idx;
        let mut freq = vec![0i64; n];
        for f in freq.iter_mut().rev() {
            *f = (rest % side) as i64 - m;
            rest /= side;
        }
        // Keep the representative whose first nonzero entry is positive.
        match freq.iter().find(|f| **f != 0) {
            Some(f) if *f > 0 => {}
            _ => continue,
        }
        let eigenvalue = freq
            .iter()
            .zip(periods)
            .map(|(f, l)| (2.0 * PI * *f as f64 / l).powi(2))
            .sum();
        for sine in [false, true] {
            modes.push(FourierMode {
                freq: freq.clone(),
                sine,
                eigenvalue,
            });
        }
    }
    modes.sort_by(|a, b| {
        a.eigenvalue
            .total_cmp(&b.eigenvalue)
            .then_with(|| a.freq.cmp(&b.freq))
            .then_with(|| a.sine.cmp(&b.sine))
    });
    modes
}

/// A_ij = ∫S(∇φ_i, ∇φ_j) by the grid rule and B = diag(λ_j²), after checking
/// that the rule is exact for the field's bandwidth.
pub fn fourier_forms(field: &TorusField, max_freq: usize) -> Result<FormPair> {
    if max_freq == 0 {
        return Err(OmegaError::invalid("max_freq must be at least 1"));
    }
    let g = field.grid_size();
    let bandwidth = field.bandwidth();
    if 2 * bandwidth >= g || bandwidth + 2 * max_freq >= g {
        return Err(OmegaError::BandwidthExceeded {
            bandwidth,
            max_freq,
            grid_size: g,
        });
    }
    let n = field.dim();
    let modes = fourier_modes(field.periods(), max_freq);
    let points = field.point_count();
    let volume = field.volume();
    let amp = (2.0 / volume).sqrt();
    let table: Vec<(f64, f64)> = (0..g)
        .map(|t| (2.0 * PI * t as f64 / g as f64).sin_cos())
        .collect();
    let wave: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| {
            m.freq
                .iter()
                .zip(field.periods())
                .map(|(f, l)| 2.0 * PI * *f as f64 / l)
                .collect()
        })
        .collect();

    // Row (p, b) of W holds ∂_b φ_j at grid point p; U = diag(S(p)) W.
    let rows = points * n;
    let mut w = DMatrix::zeros(rows, modes.len());
    let mut idx = vec![0i64; n];
    for p in 0..points {
        let mut rest = p;
        for i in (0..n).rev() {
            idx[i] = (rest % g) as i64;
            rest /= g;
        }
        for (j, mode) in modes.iter().enumerate() {
            let phase: i64 = mode.freq.iter().zip(&idx).map(|(f, t)| f * t).sum();
            let (sin, cos) = table[phase.rem_euclid(g as i64) as usize];
            let s = if mode.sine { amp * cos } else { -amp * sin };
            for b in 0..n {
                w[(p * n + b, j)] = s * wave[j][b];
            }
        }
    }
    let mut u = DMatrix::zeros(rows, modes.len());
    for p in 0..points {
        let s = field.sample(p);
        let block = s * w.rows(p * n, n);
        u.rows_mut(p * n, n).copy_from(&block);
    }
    let a = w.tr_mul(&u) * (volume / points as f64);
    let basis = SpectralBasis::new(
        n,
        modes.iter().map(|m| m.eigenvalue).collect(),
        Provenance::Torus(field.name().to_string()),
    )?;
    FormPair::on_eigenbasis(Arc::new(basis), a)
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierOmega {
    pub field: String,
    pub max_freq: usize,
    pub basis_size: usize,
    pub bandwidth: usize,
    /// Λ_1 ≥ Λ_2 ≥ … (up to `top` values; zeros once the positive part ends).
    pub top: Vec<f64>,
    pub positive_count: usize,
    pub negative_count: usize,
    #[serde(skip)]
    pub spectrum: LambdaSpectrum,
}

pub fn fourier_omega(field: &TorusField, max_freq: usize, top: usize) -> Result<FourierOmega> {
    let forms = fourier_forms(field, max_freq)?;
    let spectrum = solve_lambda(&forms)?;
    Ok(FourierOmega {
        field: field.name().to_string(),
        max_freq,
        basis_size: forms.dim(),
        bandwidth: field.bandwidth(),
        top: (1..=top).map(|k| spectrum.lambda(k)).collect(),
        positive_count: spectrum.positive().len(),
        negative_count: spectrum.negative().len(),
        spectrum,
    })
}

/// ψ·sin(m N ⟨X₀, x − x₀⟩) for m = offset+1 … offset+k, with ψ a product of
/// quintic smoothstep bumps in an orthonormal frame whose first axis is X₀,
/// equal to 1 on [−π/N, π/N]ⁿ and supported in (−2π/N, 2π/N)ⁿ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeFamily {
    pub k: usize,
    pub offset: usize,
    pub patch_freq: usize,
    pub center: Vec<f64>,
    pub direction: Vec<f64>,
    /// S(X₀, X₀)/2, the lower bound of S(X₀, X₀) on the patch.
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeAttempt {
    pub offset: usize,
    pub gram_min_eig: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeOutcome {
    pub field: String,
    pub family: ProbeFamily,
    pub gram_min_eig: f64,
    /// G_ab = ∫S(∇w_a, ∇w_b).
    pub gram: Vec<Vec<f64>>,
    /// H_ab = ∫Δw_a Δw_b.
    pub biharmonic: Vec<Vec<f64>>,
    pub attempts: Vec<ProbeAttempt>,
}

impl ProbeOutcome {
    /// Λ_S of Σ c_a w_a (or of its mean-zero part, which has the same
    /// gradient and Laplacian).
    pub fn lambda_of(&self, c: &[f64]) -> f64 {
        let quad = |m: &[Vec<f64>]| -> f64 {
            m.iter()
                .zip(c)
                .map(|(row, ca)| ca * row.iter().zip(c).map(|(x, cb)| x * cb).sum::<f64>())
                .sum()
        };
        quad(&self.gram) / quad(&self.biharmonic)
    }
}

/// Finds x₀, X₀ from the grid and the smallest power-of-two N whose patch
/// fits in the torus and keeps S(X₀, X₀) ≥ δ. The offset is left at 1.
pub fn probe_family(field: &TorusField, k: usize) -> Result<ProbeFamily> {
    if k == 0 {
        return Err(OmegaError::invalid("family size k must be at least 1"));
    }
    let (p, top, direction) = field.max_pointwise_eigen();
    if !(top > 0.0) {
        return Err(OmegaError::Precondition(format!(
            "S ≤ 0 everywhere on field '{}' (largest pointwise eigenvalue {top:.3e})",
            field.name()
        )));
    }
    let n = field.dim();
    let center = field.grid_point(p);
    let delta = top / 2.0;
    let frame = frame_with_first_axis(&direction);
    let min_period = field.periods().iter().cloned().fold(f64::INFINITY, f64::min);
    let reach = 4.0 * PI * (n as f64).sqrt();
    let mut patch = 1usize;
    while reach / patch as f64 >= min_period {
        patch *= 2;
    }
    const CHECK: usize = 9;
    while patch <= PATCH_CAP {
        let ok = (0..CHECK.pow(n as u32)).all(|c| {
            let mut rest = c;
            let y: Vec<f64> = (0..n)
                .map(|_| {
                    let t = rest % CHECK;
                    rest /= CHECK;
                    -2.0 * PI + 4.0 * PI * t as f64 / (CHECK - 1) as f64
                })
                .collect();
            let x = patch_point(&center, &frame, patch, &y);
            let s = field.eval_at(&x);
            direction.dot(&(&s * &direction)) >= delta
        });
        if ok {
            return Ok(ProbeFamily {
                k,
                offset: 1,
                patch_freq: patch,
                center,
                direction: direction.iter().copied().collect(),
                delta,
            });
        }
        patch *= 2;
    }
    Err(OmegaError::Inconclusive(format!(
        "no patch with N ≤ {PATCH_CAP} keeps S(X₀, X₀) ≥ δ around the grid maximum"
    )))
}

/// Orthogonal matrix with first column `v` (a Householder reflection).
fn frame_with_first_axis(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let mut h = DMatrix::identity(n, n);
    let mut u = v.clone();
    u[0] -= 1.0;
    let uu = u.dot(&u);
    if uu > 1e-30 {
        h -= &u * u.transpose() * (2.0 / uu);
    }
    h
}

fn patch_point(center: &[f64], frame: &DMatrix<f64>, patch: usize, y: &[f64]) -> Vec<f64> {
    let yv = DVector::from_column_slice(y);
    let d = frame * yv / patch as f64;
    center.iter().zip(d.iter()).map(|(c, di)| c + di).collect()
}

/// Quintic smoothstep bump in y = N·t: 1 on |y| ≤ π, 0 for |y| ≥ 2π.
/// Returns the value and first two derivatives.
fn bump(y: f64) -> (f64, f64, f64) {
    let a = y.abs();
    if a <= PI {
        return (1.0, 0.0, 0.0);
    }
    if a >= 2.0 * PI {
        return (0.0, 0.0, 0.0);
    }
    let t = (2.0 * PI - a) / PI;
    let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    (s, -y.signum() * ds / PI, dds / (PI * PI))
}

/// Gram matrices (G, H) of the family by the midpoint rule on the patch.
pub fn family_grams(field: &TorusField, family: &ProbeFamily) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = field.dim();
    let k = family.k;
    let patch = family.patch_freq;
    let direction = DVector::from_column_slice(&family.direction);
    let frame = frame_with_first_axis(&direction);
    let q1 = 8 * (family.offset + k) + 128;
    let qr: usize = if n <= 2 { 64 } else { 32 };
    let h1 = 4.0 * PI / q1 as f64;
    let hr = 4.0 * PI / qr as f64;
    let cell = h1 * hr.powi(n as i32 - 1);
    let others = qr.pow(n as u32 - 1);
    let freqs: Vec<f64> = (1..=k).map(|i| (family.offset + i) as f64).collect();

    let partials: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..q1)
        .into_par_iter()
        .map(|i1| {
            let mut g = DMatrix::zeros(k, k);
            let mut h = DMatrix::zeros(k, k);
            let mut y = vec![0.0; n];
            y[0] = -2.0 * PI + (i1 as f64 + 0.5) * h1;
            let b0 = bump(y[0]);
            if b0.0 == 0.0 && b0.1 == 0.0 {
                return (g, h);
            }
            let mut grads = vec![DVector::zeros(n); k];
            let mut laps = vec![0.0; k];
            for r in 0..others {
                let mut rest = r;
                for yi in y.iter_mut().skip(1) {
                    *yi = -2.0 * PI + ((rest % qr) as f64 + 0.5) * hr;
                    rest /= qr;
                }
                let parts: Vec<(f64, f64, f64)> = y.iter().map(|v| bump(*v)).collect();
                let psi: f64 = parts.iter().map(|p| p.0).product();
                let mut grad_psi = DVector::zeros(n);
                let mut lap_psi = 0.0;
                for i in 0..n {
                    let rest: f64 = (0..n).filter(|j| *j != i).map(|j| parts[j].0).product();
                    grad_psi[i] = parts[i].1 * rest;
                    lap_psi += parts[i].2 * rest;
                }
                if psi == 0.0 && grad_psi.iter().all(|v| *v == 0.0) && lap_psi == 0.0 {
                    continue;
                }
                let x = patch_point(&family.center, &frame, patch, &y);
                let s = frame.transpose() * field.eval_at(&x) * &frame;
                for (a, m) in freqs.iter().enumerate() {
                    let (sin, cos) = (m * y[0]).sin_cos();
                    let mut gr = &grad_psi * sin;
                    gr[0] += psi * m * cos;
                    laps[a] = sin * lap_psi + 2.0 * m * cos * grad_psi[0] - m * m * psi * sin;
                    grads[a] = gr;
                }
                for a in 0..k {
                    let sa = &s * &grads[a];
                    for b in a..k {
                        g[(a, b)] += grads[b].dot(&sa) * cell;
                        h[(a, b)] += laps[a] * laps[b] * cell;
                    }
                }
            }
            (g, h)
        })
        .collect();
    let mut g = DMatrix::zeros(k, k);
    let mut h = DMatrix::zeros(k, k);
    for (pg, ph) in partials {
        g += pg;
        h += ph;
    }
    for a in 0..k {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
            h[(a, b)] = h[(b, a)];
        }
    }
    // Back from y = N·R⁻¹(x − x₀): dx = N⁻ⁿdy, ∇ₓ = N∇_y.
    let nf = patch as f64;
    (g * nf.powi(2 - n as i32), h * nf.powi(4 - n as i32))
}

fn min_eig(m: &DMatrix<f64>) -> (f64, f64) {
    let (values, _) = symmetric_eigen_ascending(m.clone());
    let largest = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    (values[0], largest)
}

/// Doubles the offset K from 1 until the k×k Gram matrix of the family is
/// positive definite.
pub fn positivity_probe(field: &TorusField, k: usize) -> Result<ProbeOutcome> {
    let mut family = probe_family(field, k)?;
    let mut attempts = Vec::new();
    let mut offset = 1;
    while offset <= OFFSET_CAP {
        family.offset = offset;
        let (g, h) = family_grams(field, &family);
        let (lowest, largest) = min_eig(&g);
        attempts.push(ProbeAttempt {
            offset,
            gram_min_eig: lowest,
        });
        if lowest > GRAM_TOL * largest {
            let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
                m.row_iter().map(|r| r.iter().copied().collect()).collect()
            };
            return Ok(ProbeOutcome {
                field: field.name().to_string(),
                family,
                gram_min_eig: lowest,
                gram: rows(&g),
                biharmonic: rows(&h),
                attempts,
            });
        }
        offset *= 2;
    }
    Err(OmegaError::Inconclusive(format!(
        "Gram matrix not positive definite for any offset K ≤ {OFFSET_CAP}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pi() -> Vec<f64> {
        vec![2.0 * PI, 2.0 * PI]
    }

    #[test]
    fn mode_count_and_order() {
        let modes = fourier_modes(&two_pi(), 2);
        assert_eq!(modes.len(), 24);
        assert_eq!(modes[0].eigenvalue, 1.0);
        assert_eq!(modes[4].eigenvalue, 2.0);
        assert!(modes.windows(2).all(|w| w[0].eigenvalue <= w[1].eigenvalue));
    }

    #[test]
    fn identity_gives_reciprocal_eigenvalues() {
        let f = TorusField::named("identity", two_pi(), 16).unwrap();
        let r = fourier_omega(&f, 3, 6).unwrap();
        assert_eq!(r.bandwidth, 0);
        for (got, want) in r.top.iter().zip([1.0, 1.0, 1.0, 1.0, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-12, "{got}");
        }
    }

    #[test]
    fn bandwidth_of_named_fields() {
        assert_eq!(TorusField::named("cap", two_pi(), 32).unwrap().bandwidth(), 4);
        assert_eq!(TorusField::named("indefinite", two_pi(), 16).unwrap().bandwidth(), 1);
        let f = TorusField::named("cap", two_pi(), 16).unwrap();
        assert!(matches!(
            fourier_forms(&f, 6),
            Err(OmegaError::BandwidthExceeded { bandwidth: 4, .. })
        ));
    }

    #[test]
    fn interpolation_reproduces_samples() {
        let f = TorusField::named("indefinite", two_pi(), 16).unwrap();
        let t = TorusField::tabulated("t", two_pi(), 16, f.samples.clone()).unwrap();
        let x = f.grid_point(37);
        assert!((t.eval_at(&x) - f.sample(37)).norm() < 1e-15);
        let mid = [x[0] + PI / 16.0, x[1]];
        let want = (f.sample(37) + f.sample(37 + 16)) / 2.0;
        assert!((t.eval_at(&mid) - want).norm() < 1e-15);
    }

    #[test]
    fn asymmetric_samples_are_rejected() {
        let mut s = vec![0.0; 16 * 4];
        s[1] = 1.0;
        assert!(TorusField::tabulated("bad", vec![1.0], 16, vec![0.0; 15]).is_err());
        assert!(TorusField::tabulated("bad", vec![1.0, 1.0], 16, s).is_err());
        assert!(TorusField::named("identity", two_pi(), 24).is_err());
    }

    #[test]
    fn bump_is_c2_at_the_seams() {
        for y0 in [PI, 2.0 * PI] {
            let (lo, hi) = (bump(y0 - 1e-9), bump(y0 + 1e-9));
            assert!((lo.0 - hi.0).abs() < 1e-8);
            assert!((lo.1 - hi.1).abs() < 1e-6);
            assert!((lo.2 - hi.2).abs() < 1e-6);
        }
    }

    #[test]
    fn frame_is_orthogonal() {
        let v = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let r = frame_with_first_axis(&v);
        assert!((r.transpose() * &r - DMatrix::identity(3, 3)).norm() < 1e-14);
        assert!((r.column(0) - &v).norm() < 1e-15);
    }
}
