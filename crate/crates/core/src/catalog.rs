//! Closed-form spectra and Ω values.
//!
//! Covers round spheres, flat tori, products of two Einstein manifolds, the
//! bi-invariant unitary groups G_r on U(n), and left-invariant metrics on
//! Heisenberg nilmanifolds. Every `top` argument counts distinct values
//! (levels); each returned [`OmegaValue`] carries the multiplicity.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{OmegaError, Result};
use crate::forms::{FormPair, Provenance, SpectralBasis};
use crate::linalg::cluster_runs;

/// Relative tolerance under which two closed-form values are one level.
pub const LEVEL_TOL: f64 = 1e-12;

/// (n − 1)/n, the universal upper bound on Ω_1 in dimension n.
pub fn sharp_bound(dim: usize) -> f64 {
    (dim as f64 - 1.0) / dim as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumLevel {
    pub eigenvalue: f64,
    pub multiplicity: u64,
}

/// Closed Einstein manifold (Ric = a·g) given by a truncated spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct EinsteinFactor {
    label: String,
    dim: usize,
    einstein_const: f64,
    levels: Vec<SpectrumLevel>,
}

impl EinsteinFactor {
    /// `levels` must start with (0, 1) and be strictly ascending.
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        einstein_const: f64,
        levels: Vec<SpectrumLevel>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(OmegaError::invalid("dimension must be positive"));
        }
        if !einstein_const.is_finite() {
            return Err(OmegaError::invalid("Einstein constant must be finite"));
        }
        match levels.first() {
            None => return Err(OmegaError::invalid("spectrum is empty")),
            Some(first) if first.eigenvalue != 0.0 || first.multiplicity != 1 => {
                return Err(OmegaError::invalid(
                    "spectrum must start with the eigenvalue 0 of multiplicity 1",
                ))
            }
            _ => {}
        }
        for w in levels.windows(2) {
            if !(w[1].eigenvalue > w[0].eigenvalue) || !w[1].eigenvalue.is_finite() {
                return Err(OmegaError::invalid(
                    "eigenvalues must be finite, distinct and ascending",
                ));
            }
        }
        if levels.iter().any(|l| l.multiplicity == 0) {
            return Err(OmegaError::invalid("multiplicities must be positive"));
        }
        Ok(Self {
            label: label.into(),
            dim,
            einstein_const,
            levels,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn einstein_const(&self) -> f64 {
        self.einstein_const
    }

    pub fn levels(&self) -> &[SpectrumLevel] {
        &self.levels
    }

    /// λ_1, the first nonzero eigenvalue, if listed.
    pub fn lambda1(&self) -> Option<f64> {
        self.levels.get(1).map(|l| l.eigenvalue)
    }

    /// Nonzero eigenvalues repeated by multiplicity over the first
    /// `max_levels` nonzero levels.
    pub fn expanded_eigenvalues(&self, max_levels: usize) -> Vec<f64> {
        self.levels
            .iter()
            .skip(1)
            .take(max_levels)
            .flat_map(|l| std::iter::repeat_n(l.eigenvalue, l.multiplicity as usize))
            .collect()
    }

    /// Same manifold with the metric scaled by `factor²`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(OmegaError::invalid("scale factor must be positive"));
        }
        let s = factor * factor;
        let levels = self
            .levels
            .iter()
            .map(|l| SpectrumLevel {
                eigenvalue: l.eigenvalue / s,
                multiplicity: l.multiplicity,
            })
            .collect();
        Self::new(
            format!("{}*{factor}", self.label),
            self.dim,
            self.einstein_const / s,
            levels,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Multiplicity {
    Finite(u64),
    Unresolved,
}

impl Serialize for Multiplicity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Multiplicity::Finite(m) => s.serialize_u64(*m),
            Multiplicity::Unresolved => s.serialize_str("unresolved"),
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Finite(m) => write!(f, "{m}"),
            Multiplicity::Unresolved => f.write_str("unresolved"),
        }
    }
}

/// A value of Λ_l or Ω_l with its multiplicity and the index that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmegaValue {
    pub value: f64,
    pub multiplicity: Multiplicity,
    pub witness: String,
}

fn binomial(n: i64, k: i64) -> u128 {
    if n < 0 || k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Spectrum of the round sphere Sⁿ(radius): λ = k(k+n−1)/radius² with
/// multiplicity C(n+k, n) − C(n+k−2, n), and Ric = (n−1)/radius² · g.
pub fn sphere_spectrum(n: usize, radius: f64, max_level: usize) -> Result<EinsteinFactor> {
    if n == 0 {
        return Err(OmegaError::invalid("sphere dimension must be at least 1"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(OmegaError::invalid("radius must be positive"));
    }
    let r2 = radius * radius;
    let mut levels = Vec::with_capacity(max_level + 1);
    for k in 0..=max_level as i64 {
        let n_i = n as i64;
        let mult = binomial(n_i + k, n_i) - binomial(n_i + k - 2, n_i);
        let mult = u64::try_from(mult)
            .map_err(|_| OmegaError::invalid("sphere multiplicity overflows u64"))?;
        levels.push(SpectrumLevel {
            eigenvalue: (k * (k + n_i - 1)) as f64 / r2,
            multiplicity: mult,
        });
    }
    EinsteinFactor::new(
        format!("S^{n}({radius})"),
        n,
        (n as f64 - 1.0) / r2,
        levels,
    )
}

/// Flat torus ℝⁿ/∏ periods_j ℤ: eigenvalues Σ (2π m_j / periods_j)² up to
/// `max_norm`, aggregated with lattice-point multiplicities.
pub fn torus_spectrum(periods: &[f64], max_norm: f64) -> Result<EinsteinFactor> {
    if periods.is_empty() {
        return Err(OmegaError::invalid("a torus needs at least one period"));
    }
    if periods.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
        return Err(OmegaError::invalid("periods must be positive"));
    }
    if !(max_norm >= 0.0 && max_norm.is_finite()) {
        return Err(OmegaError::invalid("max_norm must be a nonnegative number"));
    }
    let wave: Vec<f64> = periods.iter().map(|p| 2.0 * PI / p).collect();
    let bounds: Vec<i64> = wave
        .iter()
        .map(|w| (max_norm.sqrt() / w).floor() as i64)
        .collect();

    let mut values = Vec::new();
    let mut m = vec![0i64; periods.len()];
    lattice_walk(&wave, &bounds, max_norm, 0, &mut m, &mut values);
    values.sort_by(f64::total_cmp);

    let mut levels = Vec::new();
    for (start, len) in cluster_runs(&values, LEVEL_TOL) {
        levels.push(SpectrumLevel {
            eigenvalue: values[start],
            multiplicity: len as u64,
        });
    }
    let label = format!(
        "T^{}({})",
        periods.len(),
        periods.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
    );
    EinsteinFactor::new(label, periods.len(), 0.0, levels)
}

fn lattice_walk(
    wave: &[f64],
    bounds: &[i64],
    max_norm: f64,
    axis: usize,
    m: &mut Vec<i64>,
    out: &mut Vec<f64>,
) {
    if axis == wave.len() {
        // Summing sorted terms makes permuted lattice points bit-identical.
        let mut terms: Vec<f64> = m
            .iter()
            .zip(wave)
            .map(|(mi, w)| (*mi as f64 * w).powi(2))
            .collect();
        terms.sort_by(f64::total_cmp);
        let value: f64 = terms.iter().sum();
        if value <= max_norm * (1.0 + 1e-14) {
            out.push(if value == 0.0 { 0.0 } else { value });
        }
        return;
    }
    for v in -bounds[axis]..=bounds[axis] {
        m[axis] = v;
        lattice_walk(wave, bounds, max_norm, axis + 1, m, out);
    }
}

/// Ω values of a single Einstein factor: Ω_l = a/λ_l when a > 0, and
/// no positive values otherwise.
pub fn einstein_omega(factor: &EinsteinFactor, top: usize) -> Result<Vec<OmegaValue>> {
    let a = factor.einstein_const();
    if a <= 0.0 {
        return Ok(Vec::new());
    }
    reciprocal_levels(factor, a, top)
}

/// Λ_l(g) = 1/λ_l, descending, one entry per distinct eigenvalue.
pub fn catalog_lambda_of_g(factor: &EinsteinFactor, top: usize) -> Result<Vec<OmegaValue>> {
    reciprocal_levels(factor, 1.0, top)
}

fn reciprocal_levels(factor: &EinsteinFactor, scale: f64, top: usize) -> Result<Vec<OmegaValue>> {
    let nonzero = &factor.levels()[1..];
    if nonzero.len() < top {
        return Err(OmegaError::InsufficientSpectrum(format!(
            "{} lists {} nonzero eigenvalue levels, {top} requested",
            factor.label(),
            nonzero.len()
        )));
    }
    Ok(nonzero
        .iter()
        .take(top)
        .map(|l| OmegaValue {
            value: scale / l.eigenvalue,
            multiplicity: Multiplicity::Finite(l.multiplicity),
            witness: format!("lambda={}", l.eigenvalue),
        })
        .collect())
}

/// The `top` largest values of
/// `{ (a₁λ_i + a₂λ'_k)/(λ_i + λ'_k)² : (i,k) ≠ (0,0), value > 0 }`
/// for the product of two Einstein manifolds with a₁ > 0.
///
/// Completeness: an unlisted pair has λ + μ > T, the smaller of the two
/// largest listed eigenvalues, so its value is below max(a₁, |a₂|)/T. Only
/// levels at or above that bound are returned.
pub fn product_omega(
    f1: &EinsteinFactor,
    f2: &EinsteinFactor,
    top: usize,
) -> Result<Vec<OmegaValue>> {
    let a1 = f1.einstein_const();
    let a2 = f2.einstein_const();
    if !(a1 > 0.0) {
        return Err(OmegaError::Precondition(format!(
            "first factor must have positive Einstein constant, got {a1}"
        )));
    }
    if top == 0 {
        return Ok(Vec::new());
    }

    struct Entry {
        value: f64,
        multiplicity: u128,
        pair: (f64, f64),
    }
    let mut entries = Vec::new();
    for l1 in f1.levels() {
        for l2 in f2.levels() {
            let (lam, mu) = (l1.eigenvalue, l2.eigenvalue);
            if lam == 0.0 && mu == 0.0 {
                continue;
            }
            let s = lam + mu;
            let value = (a1 * lam + a2 * mu) / (s * s);
            if value > 0.0 {
                entries.push(Entry {
                    value,
                    multiplicity: l1.multiplicity as u128 * l2.multiplicity as u128,
                    pair: (lam, mu),
                });
            }
        }
    }
    entries.sort_by(|x, y| {
        y.value
            .total_cmp(&x.value)
            .then(x.pair.0.total_cmp(&y.pair.0))
    });

    let t = f1.levels().last().map_or(0.0, |l| l.eigenvalue).min(
        f2.levels().last().map_or(0.0, |l| l.eigenvalue),
    );
    let bound = if t > 0.0 { a1.max(a2.abs()) / t } else { f64::INFINITY };

    let values: Vec<f64> = entries.iter().map(|e| e.value).collect();
    let mut out = Vec::with_capacity(top);
    for (start, len) in cluster_runs(&values, LEVEL_TOL) {
        if out.len() == top {
            break;
        }
        let group = &entries[start..start + len];
        let value = group[0].value;
        if value < bound {
            break;
        }
        let mult: u128 = group.iter().map(|e| e.multiplicity).sum();
        let witness = group
            .iter()
            .map(|e| format!("({},{})", e.pair.0, e.pair.1))
            .collect::<Vec<_>>()
            .join(" ");
        out.push(OmegaValue {
            value,
            multiplicity: Multiplicity::Finite(
                u64::try_from(mult).map_err(|_| OmegaError::invalid("multiplicity overflow"))?,
            ),
            witness: format!("pairs {witness}"),
        });
    }
    if out.len() < top {
        return Err(OmegaError::InsufficientSpectrum(format!(
            "only {} of {top} levels are certified by the listed spectra \
             (unlisted pairs may reach {bound:.6e}); extend both spectra",
            out.len()
        )));
    }
    Ok(out)
}

/// Left-invariant metric on a Heisenberg nilmanifold, in the normal form
/// with [X'_i, Y'_i] = d_i² Z and |Z|² = g_last.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeisenbergMetric {
    d: Vec<f64>,
    g_last: f64,
}

impl HeisenbergMetric {
    pub fn new(d: Vec<f64>, g_last: f64) -> Result<Self> {
        if d.is_empty() {
            return Err(OmegaError::invalid("Heisenberg metric needs n ≥ 1 coefficients"));
        }
        if d.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(OmegaError::invalid("all d_i must be positive"));
        }
        if !(g_last > 0.0 && g_last.is_finite()) {
            return Err(OmegaError::invalid("g_last must be positive"));
        }
        Ok(Self { d, g_last })
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn g_last(&self) -> f64 {
        self.g_last
    }

    /// (p, q, r) = (Σd_i², Σd_i⁴, Σd_i⁶).
    pub fn power_sums(&self) -> (f64, f64, f64) {
        self.d.iter().fold((0.0, 0.0, 0.0), |(p, q, r), x| {
            let x2 = x * x;
            (p + x2, q + x2 * x2, r + x2 * x2 * x2)
        })
    }

    /// Real maximizer of c ↦ Ω(c, 0, g).
    pub fn x_star(&self) -> f64 {
        let (p, q, r) = self.power_sums();
        self.g_last / (2.0 * PI) * (r / q) * ((9.0 / 16.0 + p * q / (2.0 * r)).sqrt() + 0.75)
    }

    /// The metric with the same d whose real maximizer sits at `c`.
    pub fn with_maximizer_at(d: Vec<f64>, c: f64) -> Result<Self> {
        let unit = Self::new(d, 1.0)?;
        let g = c / unit.x_star();
        Self::new(unit.d, g)
    }
}

/// Ω(c, k, g) for the Hermite-type eigenfunctions in the π_c component.
pub fn heisenberg_omega_ck(metric: &HeisenbergMetric, c: i64, k: &[u64]) -> Result<f64> {
    if c == 0 {
        return Err(OmegaError::invalid("c must be a nonzero integer"));
    }
    if k.len() != metric.n() {
        return Err(OmegaError::invalid(format!(
            "expected {} Hermite indices, got {}",
            metric.n(),
            k.len()
        )));
    }
    let g = metric.g_last;
    let c = c as f64;
    let abs_c = c.abs();
    let mut num = 2.0 * PI * PI * c * c * metric.d.iter().map(|x| x.powi(4)).sum::<f64>();
    let mut den = 4.0 * PI * PI * c * c / g;
    for (x, ki) in metric.d.iter().zip(k) {
        let level = 2.0 * *ki as f64 + 1.0;
        num -= PI * abs_c * x.powi(6) * g * level;
        den += 2.0 * PI * abs_c * x * x * level;
    }
    Ok(num / (den * den))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeisenbergOmega1 {
    pub value: f64,
    /// Maximizing integer c, when some Ω(c, 0, g) is positive.
    pub c: Option<i64>,
    pub x_star: f64,
}

/// Ω_1(g) = sup_c Ω(c, 0, g) over positive integers c, or 0 when no
/// Ω(c, 0, g) is positive.
///
/// c ↦ Ω(c, 0, g) is increasing on (0, x*) and decreasing after, so the
/// integer maximum sits next to x*; a ±1 pad absorbs rounding in x*.
pub fn heisenberg_omega1(metric: &HeisenbergMetric) -> HeisenbergOmega1 {
    let x_star = metric.x_star();
    let zeros = vec![0u64; metric.n()];
    let base = x_star.floor().min(i64::MAX as f64 / 2.0) as i64;
    let mut best: Option<(f64, i64)> = None;
    for c in [1, base - 1, base, base + 1, base + 2] {
        if c < 1 {
            continue;
        }
        let v = heisenberg_omega_ck(metric, c, &zeros).expect("c ≥ 1 and k has length n");
        if v > 0.0 && best.is_none_or(|(b, _)| v > b) {
            best = Some((v, c));
        }
    }
    match best {
        Some((value, c)) => HeisenbergOmega1 {
            value,
            c: Some(c),
            x_star,
        },
        None => HeisenbergOmega1 {
            value: 0.0,
            c: None,
            x_star,
        },
    }
}

/// Upper bound on Ω(c, 0, g) as a function of X = √(9/16 + pq/(2r)).
fn heisenberg_bound(x: f64) -> f64 {
    0.25 * (x - 0.75) / ((x - 0.25) * (x + 0.75) * (x + 0.75))
}

/// sup of Ω_1 over all left-invariant metrics on a (2n+1)-dimensional
/// Heisenberg manifold.
///
/// For n = 1, X = √17/4 is forced and the value is
/// 4(√17−3)/((√17−1)(√17+3)²) ≈ 0.02835; for n ≥ 2 the bound peaks at
/// X = 5/4 with value 1/32.
pub fn heisenberg_sup(n: i64) -> Result<f64> {
    match n {
        n if n <= 0 => Err(OmegaError::invalid("n must be a positive integer")),
        1 => Ok(heisenberg_bound(17f64.sqrt() / 4.0)),
        _ => Ok(heisenberg_bound(1.25)),
    }
}

/// Metrics approaching the supremum: d_1 = d_2 = 1, the remaining d_i = 2^{-step}
/// and g_last chosen so that c = 1 is the real maximizer.
pub fn heisenberg_extremal_metric(n: usize, step: u32) -> Result<HeisenbergMetric> {
    if n == 0 {
        return Err(OmegaError::invalid("n must be positive"));
    }
    let d: Vec<f64> = (0..n)
        .map(|i| if i < 2 { 1.0 } else { 0.5f64.powi(step as i32) })
        .collect();
    HeisenbergMetric::with_maximizer_at(d, 1.0)
}

/// Ω_1 of U(n) with the bi-invariant metric induced from S¹(r) × (SU(n), −tr).
pub fn unitary_omega1(n: u32, r: f64) -> Result<f64> {
    if n < 2 {
        return Err(OmegaError::invalid("U(n) example requires n ≥ 2"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(OmegaError::invalid("r must be positive"));
    }
    let n = n as f64;
    let n2 = n * n;
    let den = n2 + n / (r * r) - 1.0;
    let first = 0.5 * n2 * (n2 - 1.0) / (den * den);
    Ok(first.max(0.25))
}

/// Which tensor S to assemble on an Einstein factor's eigenbasis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticTensor {
    Metric,
    Ricci,
}

/// Diagonal forms of S = g or S = Ric = a·g on the factor's eigenbasis,
/// over the first `max_levels` nonzero levels.
pub fn analytic_forms(
    factor: &EinsteinFactor,
    tensor: AnalyticTensor,
    max_levels: usize,
) -> Result<FormPair> {
    let eigenvalues = factor.expanded_eigenvalues(max_levels);
    let basis = Arc::new(SpectralBasis::new(
        factor.dim(),
        eigenvalues,
        Provenance::Analytic(factor.label().to_string()),
    )?);
    let s = match tensor {
        AnalyticTensor::Metric => 1.0,
        AnalyticTensor::Ricci => factor.einstein_const(),
    };
    let a = DMatrix::from_diagonal(&DVector::from_iterator(
        basis.len(),
        basis.eigenvalues().iter().map(|l| s * l),
    ));
    FormPair::on_eigenbasis(basis, a)
}
