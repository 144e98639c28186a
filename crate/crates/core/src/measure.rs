//! State spaces, measurable kernels, and integration against powers of the
//! intensity measure.
//!
//! A space pairs a ground set with a finite intensity measure `lambda`. Three
//! backends cover the tests and experiments: a finite atomic space (exact
//! sums), a box in `R^d` with a density (midpoint quadrature or Monte Carlo),
//! and the parameter space of affine flats hitting a ball (Monte Carlo with
//! the normalized hitting distribution as proposal).
//!
//! Time scaling enters as a plain factor: the process at time `t` has
//! intensity `t * lambda`, so integrals against `lambda_t^q` are
//! `t^q * integrate(...)`. Callers keep `t` explicit.

use crate::error::{Error, Result};
use crate::exec::{self, stream};
use rand::Rng;
use std::fmt;
use std::sync::Arc;

/// A point of a state space. Clones are cheap.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    /// Index of an atom of a finite space.
    Atom(usize),
    /// Coordinates in a box in `R^d`.
    Coords(Vec<f64>),
    /// An affine flat: orthonormal direction frame (d x k, column-major)
    /// and an offset vector in `R^d` orthogonal to the frame columns.
    Flat { frame: Vec<f64>, offset: Vec<f64>, dim: usize, k: usize },
}

impl Point {
    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Coords(c) => Some(c),
            _ => None,
        }
    }

    pub fn atom(&self) -> Option<usize> {
        match self {
            Point::Atom(i) => Some(*i),
            _ => None,
        }
    }
}

type KernelFn = dyn Fn(&[Point]) -> f64 + Send + Sync;

/// A measurable function of `arity` points. `symmetric` is a promise used by
/// fast paths; it is never inferred. A kernel that is constant on its domain
/// can carry that constant, which turns factorial-measure sums and power
/// integrals into closed forms.
#[derive(Clone)]
pub struct Kernel {
    name: String,
    arity: usize,
    symmetric: bool,
    constant: Option<f64>,
    eval: Arc<KernelFn>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("symmetric", &self.symmetric)
            .field("constant", &self.constant)
            .finish()
    }
}

impl Kernel {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        symmetric: bool,
        eval: impl Fn(&[Point]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), arity, symmetric, constant: None, eval: Arc::new(eval) }
    }

    /// Constant kernel `c` of the given arity (symmetric by construction).
    pub fn constant(arity: usize, c: f64) -> Self {
        Self {
            name: format!("const:{arity}:{c}"),
            arity,
            symmetric: true,
            constant: Some(c),
            eval: Arc::new(move |_| c),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn eval(&self, args: &[Point]) -> Result<f64> {
        if args.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: args.len() });
        }
        Ok((self.eval)(args))
    }

    /// Unchecked call used by inner loops that guarantee the arity.
    pub(crate) fn eval_unchecked(&self, args: &[Point]) -> f64 {
        (self.eval)(args)
    }

    /// Pointwise product of kernels over a shared argument list of length
    /// `q`, with each factor reading its arguments through an index map.
    /// This is the substituted product appearing in partition integrals.
    pub fn product_over(
        factors: Vec<(Kernel, Vec<usize>)>,
        q: usize,
        name: impl Into<String>,
    ) -> Result<Self> {
        for (k, map) in &factors {
            if map.len() != k.arity() {
                return Err(Error::ArityMismatch { expected: k.arity(), got: map.len() });
            }
            if map.iter().any(|&i| i >= q) {
                return Err(Error::Input("argument map exceeds product arity".into()));
            }
        }
        let constant = factors
            .iter()
            .map(|(k, _)| k.constant_value())
            .try_fold(1.0, |acc, c| c.map(|c| acc * c));
        let eval_factors: Vec<(Arc<KernelFn>, Vec<usize>)> =
            factors.into_iter().map(|(k, map)| (k.eval, map)).collect();
        let eval = move |args: &[Point]| {
            let mut prod = 1.0;
            let mut buf: Vec<Point> = Vec::new();
            for (f, map) in &eval_factors {
                buf.clear();
                buf.extend(map.iter().map(|&i| args[i].clone()));
                prod *= f(&buf);
                if prod == 0.0 {
                    break;
                }
            }
            prod
        };
        Ok(Self {
            name: name.into(),
            arity: q,
            symmetric: false,
            constant,
            eval: Arc::new(eval),
        })
    }
}

/// How to evaluate an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Exact summation; only finite atomic spaces support it.
    Exact,
    /// Tensor midpoint rule; only box spaces of small total dimension.
    Quadrature,
    /// Plain Monte Carlo with the given sample count and seed.
    MonteCarlo { samples: usize, seed: u64 },
    /// Exact when available, otherwise quadrature when cheap, otherwise
    /// Monte Carlo with the given budget.
    Auto { samples: usize, seed: u64 },
}

/// Value of an integral together with an error account.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    /// Monte Carlo standard error; zero for exact and quadrature paths.
    pub std_error: f64,
    /// Number of evaluation nodes or samples used.
    pub nodes: usize,
    pub exact: bool,
}

impl IntegralEstimate {
    fn exact(value: f64, nodes: usize) -> Self {
        Self { value, std_error: 0.0, nodes, exact: true }
    }
}

/// Parameters of the flat space: flats of dimension `k` in `R^d` hitting the
/// closed ball of radius `radius`, with intensity `gamma` per unit measure of
/// the standard isotropic parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatSpaceParams {
    pub dim: usize,
    pub k: usize,
    pub radius: f64,
    pub gamma: f64,
}

/// Volume of the unit ball in `R^q`.
pub fn unit_ball_volume(q: usize) -> f64 {
    // exact in the dimensions that actually occur; gamma drifts a few ulp
    match q {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => {
            let q = q as f64;
            std::f64::consts::PI.powf(q / 2.0)
                / statrs::function::gamma::gamma(q / 2.0 + 1.0)
        }
    }
}

impl FlatSpaceParams {
    /// Total intensity mass of flats hitting the window:
    /// `gamma * kappa_{d-k} * radius^{d-k}`.
    pub fn hitting_mass(&self) -> f64 {
        let q = self.dim - self.k;
        self.gamma * unit_ball_volume(q) * self.radius.powi(q as i32)
    }
}

#[derive(Clone)]
enum Backend {
    /// Atoms with point masses.
    FiniteAtomic { masses: Vec<f64> },
    /// Box with bounds and a bounded density against Lebesgue measure.
    /// `density_bound` dominates the density on the box.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        density: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        density_bound: f64,
        total_mass: f64,
    },
    /// Flats hitting a ball; sampling is exact under the normalized hitting
    /// distribution, so Monte Carlo uses it as the proposal.
    FlatSpace { params: FlatSpaceParams },
}

/// A state space with a finite intensity measure. Clones share the backend.
#[derive(Clone)]
pub struct MeasureSpace {
    name: String,
    backend: Backend,
}

impl fmt::Debug for MeasureSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasureSpace")
            .field("name", &self.name)
            .field("total_mass", &self.total_mass())
            .finish()
    }
}

impl MeasureSpace {
    /// Finite space with one atom per entry of `masses`.
    pub fn finite_atomic(name: impl Into<String>, masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || masses.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::Input("atom masses must be finite and nonnegative".into()));
        }
        Ok(Self { name: name.into(), backend: Backend::FiniteAtomic { masses } })
    }

    /// Axis-aligned box with Lebesgue intensity.
    pub fn unit_box(name: impl Into<String>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let vol: f64 = lo
            .iter()
            .zip(&hi)
            .map(|(&a, &b)| {
                if b > a {
                    Ok(b - a)
                } else {
                    Err(Error::Input("box bounds must satisfy lo < hi".into()))
                }
            })
            .product::<Result<f64>>()?;
        if lo.is_empty() {
            return Err(Error::Input("box must have at least one dimension".into()));
        }
        Ok(Self {
            name: name.into(),
            backend: Backend::Box {
                lo,
                hi,
                density: Arc::new(|_| 1.0),
                density_bound: 1.0,
                total_mass: vol,
            },
        })
    }

    /// Box with a density against Lebesgue measure. `total_mass` and a bound
    /// dominating the density must be supplied by the caller; both are easy
    /// for the densities used in practice and avoid a hidden integration.
    pub fn box_with_density(
        name: impl Into<String>,
        lo: Vec<f64>,
        hi: Vec<f64>,
        density: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        density_bound: f64,
        total_mass: f64,
    ) -> Result<Self> {
        if lo.is_empty() || lo.iter().zip(&hi).any(|(&a, &b)| b <= a) {
            return Err(Error::Input("box bounds must satisfy lo < hi".into()));
        }
        if !(density_bound > 0.0) || !(total_mass > 0.0) {
            return Err(Error::Input("density bound and total mass must be positive".into()));
        }
        Ok(Self {
            name: name.into(),
            backend: Backend::Box {
                lo,
                hi,
                density: Arc::new(density),
                density_bound,
                total_mass,
            },
        })
    }

    /// Space of `k`-flats in `R^d` hitting a centered ball.
    pub fn flat_space(name: impl Into<String>, params: FlatSpaceParams) -> Result<Self> {
        if params.k >= params.dim || params.dim == 0 {
            return Err(Error::Input("flat space needs 0 < k < d".into()));
        }
        if !(params.radius > 0.0) || !(params.gamma > 0.0) {
            return Err(Error::Input("radius and gamma must be positive".into()));
        }
        Ok(Self { name: name.into(), backend: Backend::FlatSpace { params } })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flat_params(&self) -> Option<&FlatSpaceParams> {
        match &self.backend {
            Backend::FlatSpace { params } => Some(params),
            _ => None,
        }
    }

    pub fn atom_masses(&self) -> Option<&[f64]> {
        match &self.backend {
            Backend::FiniteAtomic { masses } => Some(masses),
            _ => None,
        }
    }

    /// `lambda(X)`, the mass of the whole space.
    pub fn total_mass(&self) -> f64 {
        match &self.backend {
            Backend::FiniteAtomic { masses } => masses.iter().sum(),
            Backend::Box { total_mass, .. } => *total_mass,
            Backend::FlatSpace { params } => params.hitting_mass(),
        }
    }

    /// Draws one point from the normalized intensity `lambda / lambda(X)`.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.backend {
            Backend::FiniteAtomic { masses } => {
                let total: f64 = masses.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (i, &m) in masses.iter().enumerate() {
                    u -= m;
                    if u <= 0.0 {
                        return Point::Atom(i);
                    }
                }
                Point::Atom(masses.len() - 1)
            }
            Backend::Box { lo, hi, density, density_bound, .. } => {
                // rejection from the uniform proposal; exact for the box
                loop {
                    let x: Vec<f64> = lo
                        .iter()
                        .zip(hi)
                        .map(|(&a, &b)| a + (b - a) * rng.random::<f64>())
                        .collect();
                    if *density_bound <= 1.0 && density(&x) >= *density_bound {
                        return Point::Coords(x);
                    }
                    if rng.random::<f64>() * density_bound <= density(&x) {
                        return Point::Coords(x);
                    }
                }
            }
            Backend::FlatSpace { params } => crate::flats::sample_hitting_flat(params, rng),
        }
    }

    /// Integrates `f` against `lambda^q` where `q = f.arity()`.
    pub fn integrate(&self, f: &Kernel, method: Method) -> Result<IntegralEstimate> {
        let q = f.arity();
        if q == 0 {
            return Ok(IntegralEstimate::exact(f.eval(&[])?, 1));
        }
        if let Some(c) = f.constant_value() {
            return Ok(IntegralEstimate::exact(c * self.total_mass().powi(q as i32), 1));
        }
        match method {
            Method::Exact => self.integrate_exact(f),
            Method::Quadrature => self.integrate_quadrature(f),
            Method::MonteCarlo { samples, seed } => self.integrate_mc(f, samples, seed),
            Method::Auto { samples, seed } => match &self.backend {
                Backend::FiniteAtomic { .. } => self.integrate_exact(f),
                Backend::Box { lo, .. } if lo.len() * q <= 3 => self.integrate_quadrature(f),
                _ => self.integrate_mc(f, samples, seed),
            },
        }
    }

    fn integrate_exact(&self, f: &Kernel) -> Result<IntegralEstimate> {
        let Backend::FiniteAtomic { masses } = &self.backend else {
            return Err(Error::UnsupportedMethod {
                method: "exact".into(),
                backend: self.name.clone(),
            });
        };
        let q = f.arity();
        let k = masses.len();
        let mut idx = vec![0usize; q];
        let mut args: Vec<Point> = idx.iter().map(|&i| Point::Atom(i)).collect();
        let mut acc = crate::stats::NeumaierSum::new();
        let mut nodes = 0usize;
        loop {
            let w: f64 = idx.iter().map(|&i| masses[i]).product();
            if w != 0.0 {
                acc.add(w * f.eval_unchecked(&args));
            }
            nodes += 1;
            // odometer over [k]^q
            let mut d = 0;
            loop {
                if d == q {
                    return Ok(IntegralEstimate::exact(acc.value(), nodes));
                }
                idx[d] += 1;
                if idx[d] < k {
                    args[d] = Point::Atom(idx[d]);
                    break;
                }
                idx[d] = 0;
                args[d] = Point::Atom(0);
                d += 1;
            }
        }
    }

    /// Tensor midpoint rule with 64 nodes per coordinate. Only worth it for
    /// `dim * q <= 3`; beyond that Monte Carlo wins.
    fn integrate_quadrature(&self, f: &Kernel) -> Result<IntegralEstimate> {
        let Backend::Box { lo, hi, density, .. } = &self.backend else {
            return Err(Error::UnsupportedMethod {
                method: "quadrature".into(),
                backend: self.name.clone(),
            });
        };
        let d = lo.len();
        let q = f.arity();
        let total_dim = d * q;
        if total_dim > 3 {
            return Err(Error::UnsupportedMethod {
                method: format!("quadrature in {total_dim} dimensions"),
                backend: self.name.clone(),
            });
        }
        const NODES: usize = 64;
        let cell: f64 = lo
            .iter()
            .zip(hi)
            .map(|(&a, &b)| (b - a) / NODES as f64)
            .product::<f64>()
            .powi(q as i32);
        let mut idx = vec![0usize; total_dim];
        let mut acc = crate::stats::NeumaierSum::new();
        let mut nodes = 0usize;
        loop {
            let flat: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(j, &i)| {
                    let c = j % d;
                    lo[c] + (hi[c] - lo[c]) * (i as f64 + 0.5) / NODES as f64
                })
                .collect();
            let args: Vec<Point> =
                flat.chunks(d).map(|c| Point::Coords(c.to_vec())).collect();
            let w: f64 = args
                .iter()
                .map(|p| density(p.coords().expect("box point")))
                .product();
            acc.add(w * f.eval_unchecked(&args));
            nodes += 1;
            let mut dpos = 0;
            loop {
                if dpos == total_dim {
                    return Ok(IntegralEstimate::exact(acc.value() * cell, nodes));
                }
                idx[dpos] += 1;
                if idx[dpos] < NODES {
                    break;
                }
                idx[dpos] = 0;
                dpos += 1;
            }
        }
    }

    fn integrate_mc(&self, f: &Kernel, samples: usize, seed: u64) -> Result<IntegralEstimate> {
        if samples == 0 {
            return Err(Error::Input("Monte Carlo needs a positive sample budget".into()));
        }
        let q = f.arity();
        let mass = self.total_mass();
        let scale = mass.powi(q as i32);
        // Blocked evaluation: one RNG stream per block keeps the estimate
        // independent of the worker count.
        let block = 4096usize;
        let blocks = samples.div_ceil(block);
        let sums: Vec<(f64, f64, usize)> =
            exec::run_replications(blocks, seed, stream::MC_INTEGRAL, |b, rng| {
                let lo = b * block;
                let hi = ((b + 1) * block).min(samples);
                let mut s = crate::stats::NeumaierSum::new();
                let mut s2 = crate::stats::NeumaierSum::new();
                let mut args: Vec<Point> = Vec::with_capacity(q);
                for _ in lo..hi {
                    args.clear();
                    for _ in 0..q {
                        args.push(self.sample_point(rng));
                    }
                    let v = f.eval_unchecked(&args) * scale;
                    s.add(v);
                    s2.add(v * v);
                }
                (s.value(), s2.value(), hi - lo)
            });
        let n: usize = sums.iter().map(|&(_, _, c)| c).sum();
        let total: f64 = sums.iter().map(|&(s, _, _)| s).sum();
        let total2: f64 = sums.iter().map(|&(_, s2, _)| s2).sum();
        let mean = total / n as f64;
        let var = (total2 / n as f64 - mean * mean).max(0.0);
        Ok(IntegralEstimate {
            value: mean,
            std_error: (var / n as f64).sqrt(),
            nodes: n,
            exact: false,
        })
    }

    /// Integral of the substituted product `prod_i f_i(x_{map_i})` against
    /// `lambda^q`, the partition integral appearing in moment formulas.
    /// `maps[i]` routes the shared arguments into factor `i`.
    pub fn contraction_integral(
        &self,
        factors: &[(Kernel, Vec<usize>)],
        q: usize,
        method: Method,
    ) -> Result<IntegralEstimate> {
        let prod = Kernel::product_over(factors.to_vec(), q, "contraction")?;
        self.integrate(&prod, method)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::rng_for;
    use approx::assert_relative_eq;

    #[test]
    fn constant_kernel_integrates_in_closed_form() {
        let sp = MeasureSpace::finite_atomic("three", vec![0.5, 1.5, 2.0]).unwrap();
        let est = sp.integrate(&Kernel::constant(3, 2.0), Method::Exact).unwrap();
        assert_relative_eq!(est.value, 2.0 * 4.0f64.powi(3));
        assert!(est.exact);
    }

    #[test]
    fn exact_sum_over_atoms() {
        // f(i, j) = (i + 1) * (j + 1) over masses (1, 2):
        // sum = (1*1*1 + 1*2*2 + 2*2*1 + 2*2*2*2)?  compute directly below.
        let masses = vec![1.0, 2.0];
        let sp = MeasureSpace::finite_atomic("two", masses.clone()).unwrap();
        let f = Kernel::new("prod", 2, true, |p: &[Point]| {
            let a = p[0].atom().unwrap() as f64 + 1.0;
            let b = p[1].atom().unwrap() as f64 + 1.0;
            a * b
        });
        let mut want = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                want += masses[i] * masses[j] * ((i + 1) * (j + 1)) as f64;
            }
        }
        let est = sp.integrate(&f, Method::Exact).unwrap();
        assert_relative_eq!(est.value, want);
        // separable kernel: the double integral factorizes
        let one = Kernel::new("id", 1, true, |p: &[Point]| p[0].atom().unwrap() as f64 + 1.0);
        let single = sp.integrate(&one, Method::Exact).unwrap().value;
        assert_relative_eq!(est.value, single * single, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form_on_box() {
        let sp = MeasureSpace::unit_box("u", vec![0.0], vec![1.0]).unwrap();
        let f = Kernel::new("xy", 2, true, |p: &[Point]| {
            p[0].coords().unwrap()[0] * p[1].coords().unwrap()[0]
        });
        // int_0^1 int_0^1 x y dx dy = 1/4; midpoint rule is exact-ish here
        let est = sp.integrate(&f, Method::Quadrature).unwrap();
        assert_relative_eq!(est.value, 0.25, epsilon = 1e-4);
        let f3 = Kernel::new("x2", 1, true, |p: &[Point]| p[0].coords().unwrap()[0].powi(2));
        let est3 = sp.integrate(&f3, Method::Quadrature).unwrap();
        assert_relative_eq!(est3.value, 1.0 / 3.0, epsilon = 1e-4);
    }

    #[test]
    fn quadrature_rejects_high_dimension() {
        let sp = MeasureSpace::unit_box("u2", vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let f = Kernel::new("one", 2, true, |_: &[Point]| 1.0);
        assert!(matches!(
            sp.integrate(&f, Method::Quadrature),
            Err(Error::UnsupportedMethod { .. })
        ));
    }

    #[test]
    fn monte_carlo_hits_known_integral_within_error() {
        let sp = MeasureSpace::unit_box("u2", vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        // int over ([0,2]x[0,1])^2 of x1 * y2 d lambda^2 = (2 * 1) * (2 * 1/2)... direct:
        // int x1 dlam = int_0^2 int_0^1 x dx dy = 2; lam(X) = 2
        // int y2 dlam = int_0^2 int_0^1 y dy dx = 1
        // product integral = 2 * 1 = 2
        let f = Kernel::new("x1*y2", 2, false, |p: &[Point]| {
            p[0].coords().unwrap()[0] * p[1].coords().unwrap()[1]
        });
        let est = sp.integrate(&f, Method::MonteCarlo { samples: 200_000, seed: 7 }).unwrap();
        assert!(
            (est.value - 2.0).abs() < 5.0 * est.std_error.max(1e-4),
            "value {} se {}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn monte_carlo_is_deterministic_per_seed() {
        let sp = MeasureSpace::unit_box("u", vec![0.0], vec![1.0]).unwrap();
        let f = Kernel::new("sq", 1, true, |p: &[Point]| p[0].coords().unwrap()[0].powi(2));
        let m = Method::MonteCarlo { samples: 10_000, seed: 42 };
        let a = sp.integrate(&f, m).unwrap();
        let b = sp.integrate(&f, m).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let c = sp
            .integrate(&f, Method::MonteCarlo { samples: 10_000, seed: 43 })
            .unwrap();
        assert_ne!(a.value.to_bits(), c.value.to_bits());
    }

    #[test]
    fn density_sampling_respects_weights() {
        // density 2x on [0,1]: mean of samples should be 2/3
        let sp = MeasureSpace::box_with_density(
            "tilted",
            vec![0.0],
            vec![1.0],
            |x: &[f64]| 2.0 * x[0],
            2.0,
            1.0,
        )
        .unwrap();
        let mut rng = rng_for(11, stream::SAMPLING, 0);
        let n = 40_000;
        let mean: f64 = (0..n)
            .map(|_| sp.sample_point(&mut rng).coords().unwrap()[0])
            .sum::<f64>()
            / n as f64;
        assert_relative_eq!(mean, 2.0 / 3.0, epsilon = 0.01);
    }

    #[test]
    fn contraction_reduces_to_plain_product_without_identification() {
        let sp = MeasureSpace::finite_atomic("pair", vec![1.0, 1.0]).unwrap();
        let f = Kernel::new("i+1", 1, true, |p: &[Point]| p[0].atom().unwrap() as f64 + 1.0);
        // no identification: integral of f(x) f(y) = (int f)^2 = 3^2
        let est = sp
            .contraction_integral(
                &[(f.clone(), vec![0]), (f.clone(), vec![1])],
                2,
                Method::Exact,
            )
            .unwrap();
        assert_relative_eq!(est.value, 9.0);
        // full identification: integral of f(x)^2 = 1 + 4 = 5
        let est = sp
            .contraction_integral(&[(f.clone(), vec![0]), (f, vec![0])], 1, Method::Exact)
            .unwrap();
        assert_relative_eq!(est.value, 5.0);
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let f = Kernel::new("one", 2, true, |_: &[Point]| 1.0);
        assert!(matches!(
            f.eval(&[Point::Atom(0)]),
            Err(Error::ArityMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn ball_volumes_match_known_values() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-12);
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI, epsilon = 1e-12);
        assert_relative_eq!(
            unit_ball_volume(3),
            4.0 / 3.0 * std::f64::consts::PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hitting_mass_closed_form() {
        // lines in the plane (d = 2, k = 1): mass = gamma * 2 * R
        let p = FlatSpaceParams { dim: 2, k: 1, radius: 3.0, gamma: 0.5 };
        assert_relative_eq!(p.hitting_mass(), 0.5 * 2.0 * 3.0, epsilon = 1e-12);
        // planes in R^3 (d = 3, k = 2): mass = gamma * 2 * R
        let p = FlatSpaceParams { dim: 3, k: 2, radius: 2.0, gamma: 1.0 };
        assert_relative_eq!(p.hitting_mass(), 4.0, epsilon = 1e-12);
        // lines in R^3 (d = 3, k = 1): mass = gamma * pi * R^2
        let p = FlatSpaceParams { dim: 3, k: 1, radius: 2.0, gamma: 1.0 };
        assert_relative_eq!(p.hitting_mass(), std::f64::consts::PI * 4.0, epsilon = 1e-12);
    }
}
