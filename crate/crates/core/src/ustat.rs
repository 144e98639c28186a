//! Sums over distinct tuples of a Poisson process (U-statistics), their
//! normalized families, exact covariances, a computable third-order
//! smooth-distance bound to the Gaussian limit, and an empirical surrogate
//! for that distance.
//!
//! Conventions: a statistic is `F_t = g(t) * S_t` with
//! `S_t = sum of f over distinct m-tuples` and `g(t) = c * t^p`. The chaos
//! kernels `f_n = C(m, n) * integral of f in m - n arguments against
//! lambda` are time-free; all `t`-dependence is explicit in the formulas:
//!
//! ```text
//! E F_t        = g(t) t^m lambda^m(f)
//! Var F_t      = g(t)^2 sum_n t^(2m-n) n! ||f_n||^2
//! Cov normalized pair = sum_n t^(1-n) n! <f_n^i, f_n^j>
//! F_hat        = t^(-(m-1/2)) (S_t - t^m lambda^m(f))   (g cancels)
//! ```
//!
//! The distance bound to the centered Gaussian with covariance
//! `C_ij = <f_1^i, f_1^j>` is
//!
//! ```text
//! (l^2/4) t^(-1/2) sum_i integral |f_1^i|^3 d lambda + sqrt(A_t B_t),
//! A_t = l sum_i [ E(F_hat_i)^2 + C_ii ],
//! B_t = sum_i sum_{n>=2} t^(1-n) n! ||f_n^i||^2,
//! ```
//!
//! valid for `t >= 1`, and decaying like `t^(-1/2)`.

use crate::chaos::{self, factorial};
use crate::error::{Error, Result};
use crate::exec::{self, stream};
use crate::measure::{Kernel, MeasureSpace, Method};
use crate::poisson::{factorial_sum, sample_poisson, PointConfiguration};
use crate::stats::{self, halton_point, normal_quantile, pivoted_cholesky, NeumaierSum};
use nalgebra::DMatrix;

/// A scaled sum over distinct `m`-tuples.
#[derive(Clone)]
pub struct UStatistic {
    kernel: Kernel,
    scale_c: f64,
    scale_p: f64,
}

impl UStatistic {
    /// `g(t) = scale_c * t^scale_p` multiplies the tuple sum.
    pub fn new(kernel: Kernel, scale_c: f64, scale_p: f64) -> Result<Self> {
        let m = kernel.arity();
        if m == 0 || m > chaos::MAX_DEGREE {
            return Err(Error::SizeLimit { n: m, limit: chaos::MAX_DEGREE });
        }
        if !kernel.is_symmetric() {
            return Err(Error::Constraint("tuple sums need a symmetric kernel".into()));
        }
        if scale_c == 0.0 || !scale_c.is_finite() || !scale_p.is_finite() {
            return Err(Error::Input("scale must be finite and nonzero".into()));
        }
        Ok(Self { kernel, scale_c, scale_p })
    }

    /// Unscaled sum over distinct tuples (`g = 1`).
    pub fn plain(kernel: Kernel) -> Result<Self> {
        Self::new(kernel, 1.0, 0.0)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn order(&self) -> usize {
        self.kernel.arity()
    }

    pub fn g(&self, t: f64) -> f64 {
        self.scale_c * t.powf(self.scale_p)
    }

    /// Value on one configuration.
    pub fn evaluate(&self, config: &PointConfiguration, t: f64) -> Result<f64> {
        Ok(self.g(t) * factorial_sum(config, &self.kernel)?)
    }
}

/// Precomputed kernel geometry for a vector of tuple-sum statistics over a
/// shared space: time-free means, chaos-kernel norms and inner products,
/// the limit covariance with its factorization, and third absolute moments
/// of the first kernels.
pub struct NormalizedFamily {
    space: MeasureSpace,
    stats: Vec<UStatistic>,
    /// `lambda^(m_i)(f_i)` with Monte Carlo standard error.
    lambda_mean: Vec<(f64, f64)>,
    /// `norms[i][n-1] = (||f_n^i||^2, se)` for `n = 1..=m_i`.
    norms: Vec<Vec<(f64, f64)>>,
    /// `inner[n-1][(i, j)] = <f_n^i, f_n^j>`, zero beyond `min(m_i, m_j)`.
    inner: Vec<DMatrix<f64>>,
    /// `integral |f_1^i|^3 d lambda`.
    abs3: Vec<f64>,
    /// Limit covariance `C = inner[0]`.
    c_matrix: DMatrix<f64>,
    /// `C ~ chol * chol^T`, rank-revealing.
    chol: DMatrix<f64>,
    warnings: Vec<String>,
}

impl NormalizedFamily {
    /// Computes every kernel integral once. `nonnegative` asserts the raw
    /// kernels are pointwise nonnegative, unlocking the unbiased
    /// third-moment path on sampling backends.
    pub fn build(
        space: &MeasureSpace,
        stats: Vec<UStatistic>,
        nonnegative: bool,
        method: Method,
    ) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::Input("need at least one statistic".into()));
        }
        let ell = stats.len();
        let max_m = stats.iter().map(UStatistic::order).max().unwrap();
        let mut warnings = Vec::new();

        let mut lambda_mean = Vec::with_capacity(ell);
        let mut norms = Vec::with_capacity(ell);
        let mut abs3 = Vec::with_capacity(ell);
        for s in &stats {
            let est = space.integrate(s.kernel(), method)?;
            lambda_mean.push((est.value, est.std_error));
            let mut per_n = Vec::with_capacity(s.order());
            for n in 1..=s.order() {
                let e = chaos::chaos_norm_sq(space, 1.0, s.kernel(), n, method)?;
                if !e.value.is_finite() {
                    return Err(Error::Numerical(format!(
                        "norm of chaos kernel {n} of {} is not finite",
                        s.kernel().name()
                    )));
                }
                per_n.push((e.value.max(0.0), e.std_error));
            }
            norms.push(per_n);
            let a3 = chaos::chaos_first_abs3(space, 1.0, s.kernel(), nonnegative, method)?;
            abs3.push(a3.value);
        }

        let mut inner = Vec::with_capacity(max_m);
        for n in 1..=max_m {
            let mut m = DMatrix::<f64>::zeros(ell, ell);
            for i in 0..ell {
                for j in i..ell {
                    if n > stats[i].order().min(stats[j].order()) {
                        continue;
                    }
                    let v = if i == j {
                        norms[i][n - 1].0
                    } else {
                        chaos::chaos_inner(
                            space,
                            1.0,
                            stats[i].kernel(),
                            stats[j].kernel(),
                            n,
                            method,
                        )?
                        .value
                    };
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            inner.push(m);
        }

        let c_matrix = inner[0].clone();
        for i in 0..ell {
            if c_matrix[(i, i)] < 1e-12 {
                warnings.push(format!(
                    "component {i} is first-order degenerate (||f_1||^2 = {:.3e}); \
                     the Gaussian limit collapses in that direction",
                    c_matrix[(i, i)]
                ));
            }
        }
        let scale = (0..ell).map(|i| c_matrix[(i, i)]).fold(0.0f64, f64::max);
        let eig = nalgebra::SymmetricEigen::new(c_matrix.clone());
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-9 * scale.max(1.0) {
            return Err(Error::Numerical(format!(
                "limit covariance has negative eigenvalue {min_eig:.3e}"
            )));
        }
        let chol = pivoted_cholesky(&c_matrix, 1e-10)?;

        Ok(Self {
            space: space.clone(),
            stats,
            lambda_mean,
            norms,
            inner,
            abs3,
            c_matrix,
            chol,
            warnings,
        })
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn statistics(&self) -> &[UStatistic] {
        &self.stats
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Limit covariance `C_ij = <f_1^i, f_1^j>`.
    pub fn covariance_limit(&self) -> &DMatrix<f64> {
        &self.c_matrix
    }

    /// `E F_t^(i) = g_i(t) t^(m_i) lambda^(m_i)(f_i)`.
    pub fn mean(&self, i: usize, t: f64) -> f64 {
        let s = &self.stats[i];
        s.g(t) * t.powi(s.order() as i32) * self.lambda_mean[i].0
    }

    /// Covariance of the raw statistics at time `t`:
    /// `g_i g_j sum_n t^(m_i + m_j - n) n! <f_n^i, f_n^j>`.
    pub fn covariance_exact(&self, t: f64) -> DMatrix<f64> {
        let ell = self.len();
        let mut out = DMatrix::<f64>::zeros(ell, ell);
        for i in 0..ell {
            for j in 0..ell {
                let (mi, mj) = (self.stats[i].order(), self.stats[j].order());
                let mut acc = 0.0;
                for n in 1..=mi.min(mj) {
                    acc += t.powi((mi + mj - n) as i32)
                        * factorial(n)
                        * self.inner[n - 1][(i, j)];
                }
                out[(i, j)] = self.stats[i].g(t) * self.stats[j].g(t) * acc;
            }
        }
        out
    }

    /// Covariance of the normalized statistics at time `t`:
    /// `sum_n t^(1-n) n! <f_n^i, f_n^j>`; converges to `C` as `t` grows.
    pub fn covariance_normalized(&self, t: f64) -> DMatrix<f64> {
        let ell = self.len();
        let mut out = DMatrix::<f64>::zeros(ell, ell);
        for i in 0..ell {
            for j in 0..ell {
                let (mi, mj) = (self.stats[i].order(), self.stats[j].order());
                let mut acc = 0.0;
                for n in 1..=mi.min(mj) {
                    acc += t.powi(1 - n as i32) * factorial(n) * self.inner[n - 1][(i, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// Normalized vector `F_hat` on one configuration:
    /// `t^(-(m_i - 1/2)) (S_i - t^(m_i) lambda^(m_i)(f_i))`.
    pub fn evaluate_normalized(
        &self,
        config: &PointConfiguration,
        t: f64,
    ) -> Result<Vec<f64>> {
        self.stats
            .iter()
            .zip(&self.lambda_mean)
            .map(|(s, &(lm, _))| {
                let raw = factorial_sum(config, s.kernel())?;
                let m = s.order() as f64;
                Ok(t.powf(-(m - 0.5)) * (raw - t.powf(m) * lm))
            })
            .collect()
    }

    /// Draws `reps` independent configurations at intensity `t` and returns
    /// the normalized vectors, deterministically in `seed` and independent
    /// of the worker count.
    pub fn sample_normalized(
        &self,
        t: f64,
        reps: usize,
        seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        let draws: Vec<Result<Vec<f64>>> =
            exec::run_replications(reps, seed, stream::EXPERIMENT, |_, rng| {
                let config = sample_poisson(&self.space, t, rng)?;
                self.evaluate_normalized(&config, t)
            });
        draws.into_iter().collect()
    }

    /// The computable third-order distance bound at time `t` (valid for
    /// `t >= 1`), with its pieces.
    pub fn d3_bound(&self, t: f64) -> Result<D3Bound> {
        if !(t > 0.0) {
            return Err(Error::Input("time must be positive".into()));
        }
        let ell = self.len() as f64;
        let first = ell * ell / 4.0 * t.powf(-0.5) * self.abs3.iter().sum::<f64>();
        let mut a_t = 0.0;
        let mut b_t = 0.0;
        for i in 0..self.len() {
            let mut second_moment = 0.0;
            for (n_idx, &(norm, _)) in self.norms[i].iter().enumerate() {
                let n = n_idx + 1;
                let term = t.powi(1 - n as i32) * factorial(n) * norm;
                second_moment += term;
                if n >= 2 {
                    b_t += term;
                }
            }
            a_t += second_moment + self.c_matrix[(i, i)];
        }
        a_t *= ell;
        Ok(D3Bound { first_term: first, a_t, b_t, value: first + (a_t * b_t).sqrt() })
    }

    /// Empirical surrogate of the smooth distance at time `t`: the largest
    /// deviation `|E g(F_hat) - E g(N)|` over a fixed registry of smooth
    /// test functions with second and third derivatives bounded by one.
    /// Gaussian expectations use a Halton sequence through the inverse
    /// normal and the rank-revealing factor of `C`. A lower bound for the
    /// true supremum, so it must stay below `d3_bound` up to sampling error.
    pub fn d3_surrogate(
        &self,
        t: f64,
        reps: usize,
        qmc_nodes: usize,
        seed: u64,
    ) -> Result<SurrogateReport> {
        if reps < 16 {
            return Err(Error::SampleShortage { needed: 16, got: reps });
        }
        if qmc_nodes == 0 {
            return Err(Error::Input("need Gaussian quadrature nodes".into()));
        }
        let samples = self.sample_normalized(t, reps, seed)?;
        let ell = self.len();
        let rank = self.chol.ncols();
        let fns = test_functions(ell);
        let mut per_function = Vec::with_capacity(fns.len());
        let mut value = 0.0f64;
        for (name, g) in &fns {
            // empirical side
            let mut acc = NeumaierSum::new();
            let mut acc2 = NeumaierSum::new();
            for row in &samples {
                let v = g(row);
                acc.add(v);
                acc2.add(v * v);
            }
            let emp = acc.value() / reps as f64;
            let emp_var = (acc2.value() / reps as f64 - emp * emp).max(0.0);
            let se = (emp_var / reps as f64).sqrt();
            // Gaussian side by low-discrepancy quadrature
            let mut gacc = NeumaierSum::new();
            let mut x = vec![0.0f64; ell];
            for idx in 1..=qmc_nodes as u64 {
                if rank == 0 {
                    gacc.add(g(&x));
                    continue;
                }
                let u = halton_point(idx, rank);
                x.iter_mut().for_each(|v| *v = 0.0);
                for (c, &uc) in u.iter().enumerate() {
                    let z = normal_quantile(uc.clamp(1e-12, 1.0 - 1e-12));
                    for (i, xi) in x.iter_mut().enumerate() {
                        *xi += self.chol[(i, c)] * z;
                    }
                }
                gacc.add(g(&x));
            }
            let gauss = gacc.value() / qmc_nodes as f64;
            let diff = (emp - gauss).abs();
            value = value.max(diff);
            per_function.push(FunctionDeviation {
                name: name.clone(),
                deviation: diff,
                std_error: se,
            });
        }
        Ok(SurrogateReport {
            value,
            per_function,
            replications: reps,
            gaussian_nodes: qmc_nodes,
        })
    }

    /// Samples the normalized family at one time point and summarizes each
    /// component: moment statistics, normality test on the exactly
    /// standardized draws, and the empirical covariance.
    pub fn clt_experiment(&self, t: f64, reps: usize, seed: u64) -> Result<CltReport> {
        let samples = self.sample_normalized(t, reps, seed)?;
        let ell = self.len();
        let cov_exact = self.covariance_normalized(t);
        let mut summaries = Vec::with_capacity(ell);
        let mut ks = Vec::with_capacity(ell);
        for i in 0..ell {
            let col: Vec<f64> = samples.iter().map(|r| r[i]).collect();
            summaries.push(stats::Summary::from_sample(&col)?);
            let sd = cov_exact[(i, i)].sqrt();
            if sd <= 0.0 {
                return Err(Error::Numerical(format!(
                    "component {i} has zero exact variance at t = {t}"
                )));
            }
            let standardized: Vec<f64> = col.iter().map(|&x| x / sd).collect();
            ks.push(stats::ks_test_standard_normal(&standardized)?);
        }
        let mut sample_cov = DMatrix::<f64>::zeros(ell, ell);
        let means: Vec<f64> = (0..ell)
            .map(|i| samples.iter().map(|r| r[i]).sum::<f64>() / reps as f64)
            .collect();
        for i in 0..ell {
            for j in 0..ell {
                let mut acc = NeumaierSum::new();
                for r in &samples {
                    acc.add((r[i] - means[i]) * (r[j] - means[j]));
                }
                sample_cov[(i, j)] = acc.value() / (reps as f64 - 1.0);
            }
        }
        Ok(CltReport { t, replications: reps, summaries, ks, sample_cov, cov_exact })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct D3Bound {
    pub first_term: f64,
    pub a_t: f64,
    pub b_t: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct FunctionDeviation {
    pub name: String,
    pub deviation: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone)]
pub struct SurrogateReport {
    /// Largest deviation over the registry.
    pub value: f64,
    pub per_function: Vec<FunctionDeviation>,
    pub replications: usize,
    pub gaussian_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct CltReport {
    pub t: f64,
    pub replications: usize,
    pub summaries: Vec<stats::Summary>,
    /// One-sample normality tests of the exactly standardized components.
    pub ks: Vec<stats::KsResult>,
    pub sample_cov: DMatrix<f64>,
    pub cov_exact: DMatrix<f64>,
}

type TestFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Fixed registry of smooth test functions on `R^l` whose second and third
/// partial derivatives are bounded by one; each entry notes why.
pub fn test_functions(ell: usize) -> Vec<(String, TestFn)> {
    let l = ell as f64;
    let mean = move |x: &[f64]| x.iter().sum::<f64>() / l;
    let mut fns: Vec<(String, TestFn)> = Vec::new();
    // linear: all higher derivatives vanish
    fns.push(("mean".into(), Box::new(mean)));
    // (sum x)^2 / (2 l^2): second partials 1/l^2
    fns.push((
        "half-square-mean".into(),
        Box::new(move |x: &[f64]| {
            let s = x.iter().sum::<f64>();
            s * s / (2.0 * l * l)
        }),
    ));
    // sum x_i^2 / (2 l): diagonal second partials 1/l
    fns.push((
        "half-sumsq".into(),
        Box::new(move |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() / (2.0 * l)),
    ));
    // x_1 x_2 / 2 (or x_1^2 / 2 when univariate): second partials 1/2 or 1
    fns.push((
        "pair-product".into(),
        Box::new(move |x: &[f64]| {
            if x.len() >= 2 {
                x[0] * x[1] / 2.0
            } else {
                x[0] * x[0] / 2.0
            }
        }),
    ));
    // sin/cos of weighted sums with |w_i| <= 1: derivatives are products
    // of the weights times a unit-bounded trig factor
    let waves: [(&str, Vec<f64>); 4] = [
        ("sin-mean", vec![1.0 / l; ell]),
        ("cos-mean", vec![1.0 / l; ell]),
        (
            "sin-alternating",
            (0..ell).map(|i| if i % 2 == 0 { 1.0 / l } else { -1.0 / l }).collect(),
        ),
        (
            "sin-ramp",
            (0..ell).map(|i| (i + 1) as f64 / (ell + 1) as f64).collect(),
        ),
    ];
    for (name, w) in waves {
        let is_cos = name.starts_with("cos");
        let w = w.clone();
        fns.push((
            name.into(),
            Box::new(move |x: &[f64]| {
                let s: f64 = x.iter().zip(&w).map(|(xi, wi)| xi * wi).sum();
                if is_cos {
                    s.cos()
                } else {
                    s.sin()
                }
            }),
        ));
    }
    // single-coordinate waves
    fns.push(("sin-first".into(), Box::new(|x: &[f64]| x[0].sin())));
    fns.push((
        "cos-last".into(),
        Box::new(|x: &[f64]| x[x.len() - 1].cos()),
    ));
    // (x/3) exp(-x^2/2) summed: |h''| < 0.5, |h'''| <= 1 (max at zero)
    fns.push((
        "damped-mean".into(),
        Box::new(move |x: &[f64]| {
            x.iter().map(|&v| v / 3.0 * (-v * v / 2.0).exp()).sum::<f64>() / l
        }),
    ));
    // sin(2x)/8: second derivative bounded by 1/2, third by 1
    fns.push((
        "sin-double-first".into(),
        Box::new(|x: &[f64]| (2.0 * x[0]).sin() / 8.0),
    ));
    fns.push((
        "sin-double-mean".into(),
        Box::new(move |x: &[f64]| {
            x.iter().map(|&v| (2.0 * v).sin()).sum::<f64>() / (8.0 * l)
        }),
    ));
    // (w . x)^2 / 2 with ramp weights below one
    fns.push((
        "half-square-ramp".into(),
        Box::new(move |x: &[f64]| {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| (i + 1) as f64 / (x.len() + 1) as f64 * v)
                .sum();
            s * s / 2.0
        }),
    ));
    // cos(mean)/2 + mean^2/4: bounds add to at most one
    fns.push((
        "cos-plus-quad".into(),
        Box::new(move |x: &[f64]| {
            let s = x.iter().sum::<f64>() / l;
            s.cos() / 2.0 + s * s / 4.0
        }),
    ));
    // exp(-|x|^2 / (2 l^2)) scaled: second derivatives bounded by 3/l^2
    fns.push((
        "gauss-bump".into(),
        Box::new(move |x: &[f64]| {
            let s: f64 = x.iter().map(|v| v * v).sum::<f64>();
            (-s / (2.0 * l * l)).exp() / 3.0
        }),
    ));
    debug_assert_eq!(fns.len(), 16);
    fns
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Point;
    use approx::assert_relative_eq;

    fn unit_atom() -> MeasureSpace {
        MeasureSpace::finite_atomic("unit-atom", vec![1.0]).unwrap()
    }

    fn pair_count_family() -> NormalizedFamily {
        let f = Kernel::constant(2, 1.0);
        let s = UStatistic::plain(f).unwrap();
        NormalizedFamily::build(&unit_atom(), vec![s], true, Method::Exact).unwrap()
    }

    fn poisson_expect(mu: f64, h: impl Fn(f64) -> f64) -> f64 {
        let cap = (mu + 40.0 * mu.sqrt().max(1.0)) as usize + 60;
        let mut pmf = (-mu).exp();
        let mut acc = 0.0;
        for k in 0..=cap {
            acc += pmf * h(k as f64);
            pmf *= mu / (k + 1) as f64;
        }
        acc
    }

    #[test]
    fn variance_formula_matches_pmf_oracle() {
        // F = N (N - 1): Var = 4 t^3 + 2 t^2
        let fam = pair_count_family();
        for t in [1.0, 1.5, 3.0] {
            let want_mean = t * t;
            assert_relative_eq!(fam.mean(0, t), want_mean, epsilon = 1e-12);
            let var = fam.covariance_exact(t)[(0, 0)];
            assert_relative_eq!(var, 4.0 * t.powi(3) + 2.0 * t * t, epsilon = 1e-10);
            let oracle = poisson_expect(t, |n| (n * (n - 1.0) - want_mean).powi(2));
            assert_relative_eq!(var, oracle, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn normalized_covariance_approaches_the_limit() {
        let fam = pair_count_family();
        // C = ||f_1||^2 = 4; normalized variance = 4 + 2 / t
        assert_relative_eq!(fam.covariance_limit()[(0, 0)], 4.0, epsilon = 1e-12);
        for t in [1.0, 10.0, 100.0] {
            let v = fam.covariance_normalized(t)[(0, 0)];
            assert_relative_eq!(v, 4.0 + 2.0 / t, epsilon = 1e-10);
        }
    }

    #[test]
    fn d3_bound_closed_form_for_pair_counts() {
        // abs3 = 8, A_t = 8 + 2/t, B_t = 2/t
        let fam = pair_count_family();
        for t in [1.0, 10.0, 100.0] {
            let b = fam.d3_bound(t).unwrap();
            assert_relative_eq!(b.first_term, 2.0 / t.sqrt(), epsilon = 1e-12);
            assert_relative_eq!(b.a_t, 8.0 + 2.0 / t, epsilon = 1e-12);
            assert_relative_eq!(b.b_t, 2.0 / t, epsilon = 1e-12);
            assert_relative_eq!(
                b.value,
                2.0 / t.sqrt() + ((8.0 + 2.0 / t) * 2.0 / t).sqrt(),
                epsilon = 1e-12
            );
        }
        // the bound decays at the root-t rate: t * bound(t)^2 stabilizes
        let b10 = fam.d3_bound(10.0).unwrap().value * 10.0f64.sqrt();
        let b1000 = fam.d3_bound(1000.0).unwrap().value * 1000.0f64.sqrt();
        assert!((b10 - b1000).abs() / b1000 < 0.01, "{b10} vs {b1000}");
    }

    #[test]
    fn degenerate_first_kernel_is_flagged() {
        // f(i, j) = +1/-1 with zero lambda-integral in each argument:
        // two atoms of mass 1, f = 1 if i == j else -1; f_1(x) =
        // 2 (mu_x - mu_other) = 0 when masses are equal
        let sp = MeasureSpace::finite_atomic("two", vec![1.0, 1.0]).unwrap();
        let f = Kernel::new("parity", 2, true, |p: &[crate::measure::Point]| {
            if p[0].atom() == p[1].atom() {
                1.0
            } else {
                -1.0
            }
        });
        let fam = NormalizedFamily::build(
            &sp,
            vec![UStatistic::plain(f).unwrap()],
            false,
            Method::Exact,
        )
        .unwrap();
        assert!(!fam.warnings().is_empty());
        assert!(fam.covariance_limit()[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn empirical_moments_match_exact_covariance() {
        let fam = pair_count_family();
        let t = 6.0;
        let reps = 20_000;
        let rows = fam.sample_normalized(t, reps, 3).unwrap();
        let mean: f64 = rows.iter().map(|r| r[0]).sum::<f64>() / reps as f64;
        let var: f64 =
            rows.iter().map(|r| (r[0] - mean) * (r[0] - mean)).sum::<f64>()
                / (reps as f64 - 1.0);
        let want = fam.covariance_normalized(t)[(0, 0)];
        // sd of the sample variance is roughly var * sqrt(2/(reps-1)) for
        // light tails; allow a generous factor for skewness
        assert!(mean.abs() < 5.0 * (want / reps as f64).sqrt(), "mean {mean}");
        assert!(
            (var - want).abs() < 8.0 * want * (2.0 / reps as f64).sqrt(),
            "var {var} want {want}"
        );
    }

    #[test]
    fn surrogate_stays_below_the_bound() {
        let fam = pair_count_family();
        let t = 25.0;
        let bound = fam.d3_bound(t).unwrap().value;
        let sur = fam.d3_surrogate(t, 4000, 8192, 7).unwrap();
        assert_eq!(sur.per_function.len(), 16);
        assert!(
            sur.value < bound,
            "surrogate {} should stay below bound {bound}",
            sur.value
        );
    }

    #[test]
    fn test_function_registry_is_stable() {
        for ell in [1usize, 2, 3] {
            let fns = test_functions(ell);
            assert_eq!(fns.len(), 16);
            let x = vec![0.25; ell];
            for (name, f) in &fns {
                let v = f(&x);
                assert!(v.is_finite(), "{name} not finite");
            }
            // registry is deterministic
            let again = test_functions(ell);
            for ((n1, f1), (n2, f2)) in fns.iter().zip(&again) {
                assert_eq!(n1, n2);
                assert_eq!(f1(&x).to_bits(), f2(&x).to_bits());
            }
        }
    }

    #[test]
    fn clt_experiment_reports_normality_at_large_t() {
        let fam = pair_count_family();
        let t = 60.0;
        let rep = fam.clt_experiment(t, 6000, 11).unwrap();
        assert_eq!(rep.summaries.len(), 1);
        // sample skewness tracks the pmf-series value (~0.51 here); the
        // estimator scatters by a few times sqrt(6 / reps)
        let var = poisson_expect(t, |n| (n * (n - 1.0) - t * t).powi(2));
        let m3 = poisson_expect(t, |n| (n * (n - 1.0) - t * t).powi(3));
        let skew_exact = m3 / var.powf(1.5);
        assert!(
            (rep.summaries[0].skewness - skew_exact).abs() < 0.15,
            "skew {} vs exact {skew_exact}",
            rep.summaries[0].skewness
        );
        // empirical covariance tracks the exact one
        assert!(
            (rep.sample_cov[(0, 0)] - rep.cov_exact[(0, 0)]).abs()
                < 0.15 * rep.cov_exact[(0, 0)]
        );
        // pair counts sit on a lattice, so KS against a continuous normal
        // needs a statistic with continuous values instead
        let sp = MeasureSpace::unit_box("u", vec![0.0], vec![1.0]).unwrap();
        let f = Kernel::new("coord-sum", 2, true, |p: &[Point]| {
            p[0].coords().unwrap()[0] + p[1].coords().unwrap()[0]
        });
        let fam = NormalizedFamily::build(
            &sp,
            vec![UStatistic::plain(f).unwrap()],
            true,
            Method::Auto { samples: 200_000, seed: 29 },
        )
        .unwrap();
        let rep = fam.clt_experiment(150.0, 4000, 13).unwrap();
        assert!(rep.ks[0].p_value > 1e-3, "ks p {}", rep.ks[0].p_value);
    }

    #[test]
    fn two_component_family_with_rank_one_limit() {
        // (F, 2F + pair count on a second kernel sharing f_1 direction):
        // simplest rank check: duplicate the statistic; C is rank one
        let f = Kernel::constant(2, 1.0);
        let s1 = UStatistic::plain(f.clone()).unwrap();
        let s2 = UStatistic::new(f, 2.0, 0.0).unwrap();
        let fam =
            NormalizedFamily::build(&unit_atom(), vec![s1, s2], true, Method::Exact)
                .unwrap();
        let c = fam.covariance_limit();
        // normalized statistics ignore g, so C is the same in both slots
        assert_relative_eq!(c[(0, 0)], 4.0, epsilon = 1e-12);
        assert_relative_eq!(c[(0, 1)], 4.0, epsilon = 1e-12);
        assert_relative_eq!(c[(1, 1)], 4.0, epsilon = 1e-12);
        // rank-one factor
        assert_eq!(fam.chol.ncols(), 1);
    }
}
