//! Summary statistics, hypothesis-test helpers, compensated summation, and
//! the low-discrepancy / covariance-factorization utilities shared by the
//! experiment drivers.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Neumaier-compensated accumulator; keeps long sums of mixed magnitude
/// accurate without sorting.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Moment summary of a sample, with large-sample standard errors for the
/// shape statistics (normal-theory approximations, adequate for CLT bands).
#[derive(Debug, Clone, Copy)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub sd: f64,
    /// Standardized third central moment `m3 / m2^(3/2)`.
    pub skewness: f64,
    /// `m4 / m2^2 - 3`.
    pub excess_kurtosis: f64,
    pub se_mean: f64,
    pub se_skewness: f64,
    pub se_kurtosis: f64,
}

impl Summary {
    pub fn from_sample(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 4 {
            return Err(Error::SampleShortage { needed: 4, got: n });
        }
        let nf = n as f64;
        let mean = compensated_sum(xs) / nf;
        let mut m2 = NeumaierSum::new();
        let mut m3 = NeumaierSum::new();
        let mut m4 = NeumaierSum::new();
        for &x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2.add(d2);
            m3.add(d2 * d);
            m4.add(d2 * d2);
        }
        let m2 = m2.value() / nf;
        let m3 = m3.value() / nf;
        let m4 = m4.value() / nf;
        if m2 <= 0.0 {
            return Err(Error::Numerical("degenerate sample: zero variance".into()));
        }
        Ok(Self {
            n,
            mean,
            variance: m2 * nf / (nf - 1.0),
            sd: (m2 * nf / (nf - 1.0)).sqrt(),
            skewness: m3 / m2.powf(1.5),
            excess_kurtosis: m4 / (m2 * m2) - 3.0,
            se_mean: (m2 / nf).sqrt(),
            se_skewness: (6.0 / nf).sqrt(),
            se_kurtosis: (24.0 / nf).sqrt(),
        })
    }
}

/// Mean of the product of selected coordinates over a matrix of rows;
/// repeated indices raise the power of that coordinate.
pub fn empirical_moment(rows: &[Vec<f64>], subset: &[usize]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::SampleShortage { needed: 1, got: 0 });
    }
    let width = rows[0].len();
    if subset.iter().any(|&i| i >= width) {
        return Err(Error::Input("moment index outside sample width".into()));
    }
    let mut acc = NeumaierSum::new();
    for r in rows {
        let mut p = 1.0;
        for &i in subset {
            p *= r[i];
        }
        acc.add(p);
    }
    Ok(acc.value() / rows.len() as f64)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// Survival function of the Kolmogorov distribution,
/// `P(sup |B(t)| > x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        if term < 1e-18 {
            break;
        }
        s += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: f64,
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    // Stephens' small-sample adjustment of the asymptotic distribution.
    let root = n_eff.sqrt();
    kolmogorov_sf(d * (root + 0.12 + 0.11 / root))
}

/// One-sample Kolmogorov-Smirnov statistic against the standard normal law.
pub fn ks_test_standard_normal(xs: &[f64]) -> Result<KsResult> {
    if xs.len() < 8 {
        return Err(Error::SampleShortage { needed: 8, got: xs.len() });
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in sample"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    Ok(KsResult { statistic: d, p_value: ks_p(d, n), n_effective: n })
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_test_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsResult> {
    if xs.len() < 8 || ys.len() < 8 {
        return Err(Error::SampleShortage { needed: 8, got: xs.len().min(ys.len()) });
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("no NaN"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("no NaN"));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n as f64 * m as f64) / (n as f64 + m as f64);
    Ok(KsResult { statistic: d, p_value: ks_p(d, n_eff), n_effective: n_eff })
}

#[derive(Debug, Clone, Copy)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit against expected bin counts. Bins with expected
/// count below 5 should be merged by the caller.
pub fn chi_square_gof(observed: &[f64], expected: &[f64], extra_constraints: usize) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() {
        return Err(Error::Input("bin count mismatch".into()));
    }
    if observed.len() < 2 + extra_constraints {
        return Err(Error::Input("not enough bins".into()));
    }
    if expected.iter().any(|&e| e <= 0.0) {
        return Err(Error::Input("expected counts must be positive".into()));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum();
    let dof = observed.len() - 1 - extra_constraints;
    let chi = ChiSquared::new(dof as f64)
        .map_err(|e| Error::Numerical(format!("chi-square dof: {e}")))?;
    Ok(ChiSquareResult { statistic: stat, dof, p_value: 1.0 - chi.cdf(stat) })
}

/// Least-squares line through `(x_i, y_i)`; returns `(slope, intercept)`.
pub fn ols_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Input("need two or more paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = compensated_sum(xs) / n;
    let my = compensated_sum(ys) / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Numerical("degenerate abscissae in regression".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

const HALTON_BASES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical-inverse value of `index` in the given base (van der Corput).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut out = 0.0;
    let mut scale = inv;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

/// `dim`-dimensional Halton point with 1-based index (index 0 is the origin
/// and is skipped by callers).
pub fn halton_point(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= HALTON_BASES.len(), "halton dimension limit is 16");
    (0..dim).map(|d| radical_inverse(index, HALTON_BASES[d])).collect()
}

/// Pivoted Cholesky factorization of a symmetric positive semidefinite
/// matrix: returns `L` (d x r) with `C ~ L L^T` and `r = rank(C)` at the
/// given relative tolerance. Small negative pivots within tolerance are
/// treated as zero; larger ones are an error.
pub fn pivoted_cholesky(c: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    let d = c.nrows();
    if c.ncols() != d {
        return Err(Error::Input("covariance must be square".into()));
    }
    let sym_err = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| (c[(i, j)] - c[(j, i)]).abs())
        .fold(0.0f64, f64::max);
    let scale = (0..d).map(|i| c[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
    if sym_err > 1e-8 * scale {
        return Err(Error::Numerical("covariance is not symmetric".into()));
    }
    let mut l = DMatrix::<f64>::zeros(d, d);
    let mut diag: Vec<f64> = (0..d).map(|i| c[(i, i)]).collect();
    let mut perm: Vec<usize> = (0..d).collect();
    let tol = rel_tol * scale;
    let mut rank = 0usize;
    for j in 0..d {
        // pivot on the largest remaining diagonal entry
        let p = (j..d)
            .max_by(|&a, &b| diag[perm[a]].partial_cmp(&diag[perm[b]]).unwrap())
            .unwrap();
        perm.swap(j, p);
        let pj = perm[j];
        if diag[pj] <= tol {
            if diag[pj] < -tol {
                return Err(Error::Numerical(format!(
                    "matrix is not positive semidefinite (pivot {})",
                    diag[pj]
                )));
            }
            break;
        }
        let root = diag[pj].sqrt();
        l[(pj, j)] = root;
        for i in (j + 1)..d {
            let r = perm[i];
            let mut s = c[(r, pj)];
            for k in 0..j {
                s -= l[(r, k)] * l[(pj, k)];
            }
            let v = s / root;
            l[(r, j)] = v;
            diag[r] -= v * v;
        }
        rank = j + 1;
    }
    Ok(l.columns(0, rank).into_owned())
}
