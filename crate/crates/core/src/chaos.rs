//! Pathwise multiple stochastic integrals against the compensated Poisson
//! process and the chaos kernels of sums over distinct tuples.
//!
//! For a symmetric kernel `f` of `n` arguments the multiple integral reduces
//! to `n + 1` terms,
//!
//! ```text
//! I_n(f) = sum_{j=0}^{n} (-1)^(n-j) C(n, j) T_j,
//! T_j = sum over distinct j-tuples of t^(n-j) * integral of f in the
//!       remaining n-j arguments,
//! ```
//!
//! so the cost is factorial sums of partially integrated kernels rather than
//! a walk over all argument subsets. A sum of `f` over distinct `m`-tuples
//! of the process decomposes pathwise as its mean plus `I_n` of the kernels
//! `f_n = C(m, n) * integral of f in m-n arguments against t * lambda`.
//!
//! Squared norms and inner products of chaos kernels are computed as one
//! flat integral with independent copies of the integrated-out arguments,
//! never by squaring a Monte Carlo estimate of the inner integral; this
//! keeps them unbiased under every backend.

use crate::error::{Error, Result};
use crate::measure::{IntegralEstimate, Kernel, MeasureSpace, Method, Point};
use crate::poisson::{factorial_sum, PointConfiguration};
use std::collections::HashMap;
use std::sync::Mutex;

/// Degree cap for multiple integrals; partial-integral memo tables and
/// factorial sums grow too fast beyond this.
pub const MAX_DEGREE: usize = 10;

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut out = 1.0;
    for i in 0..k {
        out = out * (n - i) as f64 / (i + 1) as f64;
    }
    out
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Kernel of `keep` arguments obtained by integrating the last `m - keep`
/// arguments of `f` against `t * lambda` and multiplying by `scale`.
/// Evaluations on atoms are memoized (sorted index key; `f` is symmetric).
fn partial_kernel(
    space: &MeasureSpace,
    t: f64,
    f: &Kernel,
    keep: usize,
    scale: f64,
    method: Method,
) -> Result<Kernel> {
    let m = f.arity();
    if keep > m {
        return Err(Error::ArityMismatch { expected: m, got: keep });
    }
    let rem = m - keep;
    let t_pow = t.powi(rem as i32);
    if rem == 0 {
        if scale == 1.0 {
            return Ok(f.clone());
        }
        let inner = f.clone();
        let mut scaled = Kernel::new(
            format!("scaled:{}", f.name()),
            m,
            f.is_symmetric(),
            move |args: &[Point]| scale * inner.eval_unchecked(args),
        );
        if let Some(c) = f.constant_value() {
            scaled = Kernel::constant(m, scale * c);
        }
        return Ok(scaled);
    }
    if let Some(c) = f.constant_value() {
        let mass = space.total_mass();
        return Ok(Kernel::constant(keep, scale * c * (t * mass).powi(rem as i32)));
    }
    let space = space.clone();
    let f = f.clone();
    let name = format!("partial:{}:{}", f.name(), keep);
    let memo: Mutex<HashMap<Vec<usize>, f64>> = Mutex::new(HashMap::new());
    let eval = move |args: &[Point]| -> f64 {
        let key: Option<Vec<usize>> = args.iter().map(|p| p.atom()).collect();
        let key = key.map(|mut k| {
            k.sort_unstable();
            k
        });
        if let Some(k) = &key {
            if let Some(&v) = memo.lock().unwrap().get(k) {
                return v;
            }
        }
        let fixed: Vec<Point> = args.to_vec();
        let fc = f.clone();
        let tail = Kernel::new("tail", rem, false, move |ys: &[Point]| {
            let mut full = Vec::with_capacity(fixed.len() + ys.len());
            full.extend_from_slice(&fixed);
            full.extend_from_slice(ys);
            fc.eval_unchecked(&full)
        });
        let v = match space.integrate(&tail, method) {
            Ok(est) => scale * t_pow * est.value,
            Err(_) => f64::NAN,
        };
        if let Some(k) = key {
            memo.lock().unwrap().insert(k, v);
        }
        v
    };
    Ok(Kernel::new(name, keep, true, eval))
}

/// Pathwise multiple integral `I_n(f)` of a symmetric kernel against the
/// compensated process at time `t`, evaluated on one configuration.
pub fn wiener_ito(
    space: &MeasureSpace,
    t: f64,
    config: &PointConfiguration,
    f: &Kernel,
    method: Method,
) -> Result<f64> {
    let n = f.arity();
    if n > MAX_DEGREE {
        return Err(Error::SizeLimit { n, limit: MAX_DEGREE });
    }
    if n == 0 {
        return f.eval(&[]);
    }
    if !f.is_symmetric() {
        return Err(Error::Constraint(
            "multiple integrals need a symmetric kernel".into(),
        ));
    }
    let mut total = 0.0;
    for j in 0..=n {
        let h = partial_kernel(space, t, f, j, 1.0, method)?;
        let t_j = factorial_sum(config, &h)?;
        let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binomial(n, j) * t_j;
    }
    if total.is_nan() {
        return Err(Error::Numerical(
            "partial integral failed inside a multiple integral".into(),
        ));
    }
    Ok(total)
}

/// `n`-th chaos kernel of the sum of `f` over distinct `m`-tuples:
/// `f_n = C(m, n) * integral of f in the last m-n arguments against
/// t * lambda`. `f_0` (the mean) is the case `n = 0`.
pub fn chaos_kernel(
    space: &MeasureSpace,
    t: f64,
    f: &Kernel,
    n: usize,
    method: Method,
) -> Result<Kernel> {
    let m = f.arity();
    if n > m {
        return Err(Error::ArityMismatch { expected: m, got: n });
    }
    if !f.is_symmetric() {
        return Err(Error::Constraint("chaos kernels need a symmetric kernel".into()));
    }
    partial_kernel(space, t, f, n, binomial(m, n), method)
}

/// Mean of the sum of `f` over distinct `m`-tuples: `t^m` times the full
/// integral of `f`.
pub fn tuple_sum_mean(
    space: &MeasureSpace,
    t: f64,
    f: &Kernel,
    method: Method,
) -> Result<IntegralEstimate> {
    let est = space.integrate(f, method)?;
    let factor = t.powi(f.arity() as i32);
    Ok(IntegralEstimate {
        value: factor * est.value,
        std_error: factor * est.std_error,
        ..est
    })
}

/// Inner product of the `n`-th chaos kernels of two tuple sums against
/// `lambda^n`, as one unbiased integral:
///
/// ```text
/// <f_n, g_n> = C(m_f, n) C(m_g, n) t^(m_f + m_g - 2n)
///              * integral of f(x, y) g(x, y') over x in X^n,
///                y in X^(m_f - n), y' in X^(m_g - n).
/// ```
pub fn chaos_inner(
    space: &MeasureSpace,
    t: f64,
    f: &Kernel,
    g: &Kernel,
    n: usize,
    method: Method,
) -> Result<IntegralEstimate> {
    let (mf, mg) = (f.arity(), g.arity());
    if n == 0 || n > mf.min(mg) {
        return Err(Error::Input(format!(
            "chaos order {n} outside 1..={}",
            mf.min(mg)
        )));
    }
    if !f.is_symmetric() || !g.is_symmetric() {
        return Err(Error::Constraint("chaos kernels need symmetric inputs".into()));
    }
    let q = n + (mf - n) + (mg - n);
    let map_f: Vec<usize> = (0..mf).collect();
    let map_g: Vec<usize> = (0..n).chain(mf..q).collect();
    let prod = Kernel::product_over(
        vec![(f.clone(), map_f), (g.clone(), map_g)],
        q,
        format!("inner:{}:{}:{n}", f.name(), g.name()),
    )?;
    let est = space.integrate(&prod, method)?;
    let factor =
        binomial(mf, n) * binomial(mg, n) * t.powi((mf + mg - 2 * n) as i32);
    Ok(IntegralEstimate {
        value: factor * est.value,
        std_error: factor.abs() * est.std_error,
        ..est
    })
}

/// Squared `lambda^n`-norm of the `n`-th chaos kernel of a tuple sum.
pub fn chaos_norm_sq(
    space: &MeasureSpace,
    t: f64,
    f: &Kernel,
    n: usize,
    method: Method,
) -> Result<IntegralEstimate> {
    chaos_inner(space, t, f, f, n, method)
}

/// Integral of `|f_1|^3` against `lambda` for the first chaos kernel of a
/// tuple sum. Exact backends integrate the inner kernel exactly; otherwise
/// the kernel must be nonnegative, in which case the cube unrolls into one
/// unbiased integral with three independent copies of the integrated-out
/// arguments.
pub fn chaos_first_abs3(
    space: &MeasureSpace,
    t: f64,
    f: &Kernel,
    nonnegative: bool,
    method: Method,
) -> Result<IntegralEstimate> {
    let m = f.arity();
    if m == 0 {
        return Err(Error::Input("tuple sums need arity at least one".into()));
    }
    if !f.is_symmetric() {
        return Err(Error::Constraint("chaos kernels need a symmetric kernel".into()));
    }
    if let Some(c) = f.constant_value() {
        let mass = space.total_mass();
        let f1 = binomial(m, 1) * c * (t * mass).powi((m - 1) as i32);
        return Ok(IntegralEstimate {
            value: f1.abs().powi(3) * mass,
            std_error: 0.0,
            nodes: 1,
            exact: true,
        });
    }
    let exact_backend = space.atom_masses().is_some();
    if exact_backend {
        let f1 = chaos_kernel(space, t, f, 1, Method::Exact)?;
        let cubed = Kernel::new("abs3", 1, true, move |p: &[Point]| {
            f1.eval_unchecked(p).abs().powi(3)
        });
        return space.integrate(&cubed, Method::Exact);
    }
    if !nonnegative {
        return Err(Error::UnsupportedMethod {
            method: "third absolute moment of a signed kernel".into(),
            backend: space.name().to_string(),
        });
    }
    // |f_1|^3 = f_1^3 for nonnegative f: three independent tails
    let q = 1 + 3 * (m - 1);
    let maps: Vec<Vec<usize>> = (0..3)
        .map(|c| {
            std::iter::once(0)
                .chain(1 + c * (m - 1)..1 + (c + 1) * (m - 1))
                .collect()
        })
        .collect();
    let prod = Kernel::product_over(
        maps.into_iter().map(|mp| (f.clone(), mp)).collect(),
        q,
        format!("abs3:{}", f.name()),
    )?;
    let est = space.integrate(&prod, method)?;
    let factor = binomial(m, 1).powi(3) * t.powi(3 * (m - 1) as i32);
    Ok(IntegralEstimate {
        value: factor * est.value,
        std_error: factor * est.std_error,
        ..est
    })
}

/// Evaluates the full chaos representation of a tuple sum on one
/// configuration: mean plus `I_n(f_n)` for `n = 1..=m`. Agrees pathwise
/// with the factorial sum itself; used as a self check and in tests.
pub fn tuple_sum_via_chaos(
    space: &MeasureSpace,
    t: f64,
    config: &PointConfiguration,
    f: &Kernel,
    method: Method,
) -> Result<f64> {
    let m = f.arity();
    let mut total = tuple_sum_mean(space, t, f, method)?.value;
    for n in 1..=m {
        let fn_kernel = chaos_kernel(space, t, f, n, method)?;
        total += wiener_ito(space, t, config, &fn_kernel, method)?;
    }
    Ok(total)
}
