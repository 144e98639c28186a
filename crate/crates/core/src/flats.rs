//! Stationary isotropic processes of affine flats and their intersection
//! processes.
//!
//! A `k`-flat in `R^d` is parametrized by an orthonormal direction frame and
//! an offset orthogonal to it. The invariant measure restricted to flats
//! hitting a centered ball factorizes: Haar-distributed direction, offset
//! uniform in the `(d-k)`-ball of the window radius inside the orthogonal
//! complement. The total mass of that restriction is
//! `gamma * kappa_{d-k} * R^{d-k}`.
//!
//! The intersection functional sums a section value over all `m`-subsets of
//! the process: for generic flats the intersection has dimension
//! `q = d - m (d-k)`, its trace on a centered ball of radius `rho` is a
//! `q`-ball of radius `sqrt(rho^2 - s^2)` at distance `s` from the origin,
//! and the implemented functionals (hit indicator, Hausdorff volume, chord
//! power) are closed forms in `(q, s, rho)`.

use crate::error::{Error, Result};
use crate::exec::{self, stream};
use crate::measure::{unit_ball_volume, FlatSpaceParams, Kernel, MeasureSpace, Point};
use crate::poisson;
use crate::stats::{self, NeumaierSum};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

const GEOM_TOL: f64 = 1e-9;

/// An affine `k`-flat `{ offset + frame w : w in R^k }` with orthonormal
/// `frame` columns and `offset` orthogonal to them. `k = 0` is a point.
#[derive(Debug, Clone)]
pub struct Flat {
    frame: DMatrix<f64>,
    offset: DVector<f64>,
}

impl Flat {
    pub fn new(frame: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        let d = frame.nrows();
        if offset.len() != d {
            return Err(Error::Input("frame and offset dimension mismatch".into()));
        }
        let gram = frame.transpose() * &frame;
        let k = frame.ncols();
        for i in 0..k {
            for j in 0..k {
                let want = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - want).abs() > 1e-8 {
                    return Err(Error::Input("frame columns must be orthonormal".into()));
                }
            }
        }
        let cross = frame.transpose() * &offset;
        if cross.iter().any(|v| v.abs() > 1e-8 * (1.0 + offset.norm())) {
            return Err(Error::Input("offset must be orthogonal to the frame".into()));
        }
        Ok(Self { frame, offset })
    }

    /// Builds a line or hyperplane-like flat from a frame of raw direction
    /// vectors and any point on the flat; the frame is orthonormalized and
    /// the point projected to the canonical offset.
    pub fn from_span_point(directions: DMatrix<f64>, point: DVector<f64>) -> Result<Self> {
        let d = directions.nrows();
        let k = directions.ncols();
        if point.len() != d {
            return Err(Error::Input("point dimension mismatch".into()));
        }
        let mut frame = DMatrix::<f64>::zeros(d, k);
        let mut cols = 0usize;
        for j in 0..k {
            let mut v = directions.column(j).into_owned();
            for c in 0..cols {
                let proj = frame.column(c).dot(&v);
                v -= frame.column(c) * proj;
            }
            let n = v.norm();
            if n < GEOM_TOL {
                return Err(Error::Input("direction vectors are linearly dependent".into()));
            }
            frame.set_column(cols, &(v / n));
            cols += 1;
        }
        let proj = &frame * (frame.transpose() * &point);
        Flat::new(frame, point - proj)
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    /// Dimension of the flat.
    pub fn k(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    /// Distance from the origin; the canonical offset realizes it.
    pub fn distance_to_origin(&self) -> f64 {
        self.offset.norm()
    }

    pub fn to_point(&self) -> Point {
        Point::Flat {
            frame: self.frame.as_slice().to_vec(),
            offset: self.offset.as_slice().to_vec(),
            dim: self.ambient_dim(),
            k: self.k(),
        }
    }

    pub fn from_point(p: &Point) -> Result<Self> {
        match p {
            Point::Flat { frame, offset, dim, k } => {
                let f = DMatrix::from_column_slice(*dim, *k, frame);
                let o = DVector::from_column_slice(offset);
                Flat::new(f, o)
            }
            _ => Err(Error::Input("point does not carry a flat".into())),
        }
    }

    /// Image under an orthogonal map.
    pub fn rotate(&self, rot: &DMatrix<f64>) -> Self {
        Self { frame: rot * &self.frame, offset: rot * &self.offset }
    }
}

/// Draws one flat from the normalized hitting distribution of the params'
/// ball: Haar direction (QR of a Gaussian matrix with sign correction),
/// offset uniform in the `(d-k)`-ball of the complement.
pub(crate) fn sample_hitting_flat<R: Rng + ?Sized>(
    params: &FlatSpaceParams,
    rng: &mut R,
) -> Point {
    let (d, k) = (params.dim, params.k);
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    let codim = d - k;
    let dir = loop {
        let v = DVector::from_fn(codim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            break v / n;
        }
    };
    let radius = params.radius * rng.random::<f64>().powf(1.0 / codim as f64);
    let offset = q.columns(k, codim) * (dir * radius);
    let frame = q.columns(0, k).into_owned();
    Flat { frame, offset }.to_point()
}

/// Poisson flat process at intensity `t`: count Poisson with mean
/// `t * hitting_mass`, flats iid from the hitting distribution.
pub fn sample_flats<R: Rng + ?Sized>(
    params: &FlatSpaceParams,
    t: f64,
    rng: &mut R,
) -> Result<Vec<Flat>> {
    let space = MeasureSpace::flat_space("flat-process", params.clone())?;
    let config = poisson::sample_poisson(&space, t, rng)?;
    config.points().iter().map(Flat::from_point).collect()
}

/// Result of intersecting flats.
#[derive(Debug, Clone)]
pub enum Intersection {
    /// Affine subspace of the generic dimension (or lower-order cases).
    Flat(Flat),
    /// No common point.
    Empty,
    /// Non-generic configuration: the normal system lost rank, so the
    /// intersection is higher-dimensional than generic (parallel or
    /// repeated flats). Measure zero under continuous sampling.
    Degenerate,
}

/// Intersection of flats as the solution set of the stacked normal
/// equations: each flat contributes `codim` rows. Rank and the particular
/// solution come from an SVD; an orthonormal basis of the direction space
/// comes from a pivoted Cholesky factorization of the null-space projector.
pub fn intersect(flats: &[&Flat]) -> Result<Intersection> {
    if flats.is_empty() {
        return Err(Error::Input("nothing to intersect".into()));
    }
    let d = flats[0].ambient_dim();
    if flats.iter().any(|f| f.ambient_dim() != d) {
        return Err(Error::Input("flats live in different ambient dimensions".into()));
    }
    if flats.len() == 1 {
        return Ok(Intersection::Flat(flats[0].clone()));
    }
    let rows: usize = flats.iter().map(|f| d - f.k()).sum();
    let mut a = DMatrix::<f64>::zeros(rows, d);
    let mut b = DVector::<f64>::zeros(rows);
    let mut row = 0usize;
    for f in flats {
        // rows of the complement basis of the frame: complete via the
        // projector I - F F^T factorized to an orthonormal basis
        let k = f.k();
        let proj =
            DMatrix::<f64>::identity(d, d) - f.frame() * f.frame().transpose();
        let basis = stats::pivoted_cholesky(&proj, 1e-10)
            .map_err(|e| Error::Numerical(format!("complement basis: {e}")))?;
        debug_assert_eq!(basis.ncols(), d - k);
        for c in 0..d - k {
            for j in 0..d {
                a[(row, j)] = basis[(j, c)];
            }
            b[row] = basis.column(c).dot(f.offset());
            row += 1;
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = GEOM_TOL * smax.max(1.0);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let generic_q = d.saturating_sub(rows);
    let q = d - rank;
    // Consistency first: a rank-deficient system with no solution is a pair
    // of disjoint parallels, not a degenerate overlap.
    let x0 = svd
        .solve(&b, tol)
        .map_err(|e| Error::Numerical(format!("flat solve: {e}")))?;
    let residual = (&a * &x0 - &b).norm();
    if residual > 1e-7 * (1.0 + b.norm()) {
        return Ok(Intersection::Empty);
    }
    if q > generic_q {
        return Ok(Intersection::Degenerate);
    }
    if q == 0 {
        return Ok(Intersection::Flat(Flat {
            frame: DMatrix::zeros(d, 0),
            offset: x0,
        }));
    }
    // orthonormal basis of null(A) from the projector I - V_r V_r^T
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut proj = DMatrix::<f64>::identity(d, d);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let v = vt.row(i).transpose();
            proj -= &v * v.transpose();
        }
    }
    let frame = stats::pivoted_cholesky(&proj, 1e-8)
        .map_err(|e| Error::Numerical(format!("null basis: {e}")))?;
    if frame.ncols() != q {
        return Ok(Intersection::Degenerate);
    }
    let offset = &x0 - &frame * (frame.transpose() * &x0);
    Ok(Intersection::Flat(Flat { frame, offset }))
}

/// Observation window: a closed centered ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    Ball { radius: f64 },
}

impl Window {
    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Input("window radius must be positive".into()));
        }
        Ok(Window::Ball { radius })
    }

    pub fn radius(&self) -> f64 {
        match self {
            Window::Ball { radius } => *radius,
        }
    }

    pub fn scale(&self, r: f64) -> Self {
        Window::Ball { radius: self.radius() * r }
    }
}

/// Geometric functional of the trace of a flat on the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SectionFunctional {
    /// 1 when the intersection meets the window.
    Indicator,
    /// Hausdorff volume of the trace in the intersection dimension `q`:
    /// `kappa_q (rho^2 - s^2)^{q/2}`.
    HausdorffVolume,
    /// `(chord length)^beta`; requires one-dimensional intersections.
    ChordPower { beta: f64 },
}

impl SectionFunctional {
    /// Scaling degree `alpha`: the value on `r B` and scaled flats is
    /// `r^alpha` times the value on `B`.
    pub fn homogeneity(&self, q: usize) -> f64 {
        match self {
            SectionFunctional::Indicator => 0.0,
            SectionFunctional::HausdorffVolume => q as f64,
            SectionFunctional::ChordPower { beta } => *beta,
        }
    }

    /// Checks the functional against the generic intersection dimension of
    /// `m` flats of dimension `k` in `R^d`.
    pub fn validate(&self, dim: usize, k: usize, m: usize) -> Result<()> {
        if k >= dim {
            return Err(Error::Input("flats need k < d".into()));
        }
        let codim = m * (dim - k);
        match self {
            SectionFunctional::Indicator => Ok(()),
            SectionFunctional::HausdorffVolume => {
                if codim > dim {
                    Err(Error::Constraint(format!(
                        "Hausdorff volume needs m (d - k) <= d, got {codim} > {dim}"
                    )))
                } else {
                    Ok(())
                }
            }
            SectionFunctional::ChordPower { beta } => {
                if dim < codim || dim - codim != 1 {
                    Err(Error::Constraint(
                        "chord power needs intersections of dimension one".into(),
                    ))
                } else if !beta.is_finite() {
                    Err(Error::Input("chord exponent must be finite".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Value on a `q`-flat at distance `s` from the center of a ball window
    /// of radius `rho`. Zero when the flat misses the window.
    pub fn section_value(&self, q: usize, s: f64, rho: f64) -> Result<f64> {
        if s > rho {
            return Ok(0.0);
        }
        let sq = (rho * rho - s * s).max(0.0);
        match self {
            SectionFunctional::Indicator => Ok(1.0),
            SectionFunctional::HausdorffVolume => {
                Ok(unit_ball_volume(q) * sq.powf(q as f64 / 2.0))
            }
            SectionFunctional::ChordPower { beta } => {
                if q != 1 {
                    return Err(Error::Constraint(format!(
                        "chord power on a {q}-dimensional intersection"
                    )));
                }
                Ok((2.0 * sq.sqrt()).powf(*beta))
            }
        }
    }
}

/// Value of `psi` on an intersection result within the window.
pub fn section_functional(
    psi: &SectionFunctional,
    inter: &Intersection,
    window: &Window,
) -> Result<f64> {
    match inter {
        Intersection::Empty => Ok(0.0),
        Intersection::Degenerate => Err(Error::Numerical(
            "degenerate flat intersection in a section functional".into(),
        )),
        Intersection::Flat(e) => {
            psi.section_value(e.k(), e.distance_to_origin(), window.radius())
        }
    }
}

/// Symmetric arity-`m` kernel evaluating `psi` on the window trace of the
/// intersection of its arguments. Wrapping it in a tuple-sum statistic with
/// scale `1/m!` reproduces the order-`m` intersection functional.
/// Degenerate intersections (a Lebesgue-null event under the hitting
/// distribution) surface as NaN so sampling estimators fail loudly.
pub fn zeta_kernel(m: usize, psi: SectionFunctional, window: &Window) -> Kernel {
    let psi = psi.clone();
    let window = window.clone();
    Kernel::new(format!("section:{m}"), m, true, move |args: &[Point]| {
        let flats: Result<Vec<Flat>> = args.iter().map(Flat::from_point).collect();
        let flats = match flats {
            Ok(f) => f,
            Err(_) => return f64::NAN,
        };
        let refs: Vec<&Flat> = flats.iter().collect();
        match intersect(&refs).and_then(|i| section_functional(&psi, &i, &window)) {
            Ok(v) => v,
            Err(_) => f64::NAN,
        }
    })
}

/// The order-`m` intersection functional of a configuration:
/// `sum over m-subsets of psi(window trace of the intersection)`, which is
/// the `1/m!` multiple of the sum over ordered distinct tuples.
pub fn zeta(
    flats: &[Flat],
    m: usize,
    psi: &SectionFunctional,
    window: &Window,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::Input("intersection order m must be positive".into()));
    }
    let n = flats.len();
    if n < m {
        return Ok(0.0);
    }
    let mut acc = NeumaierSum::new();
    let mut idx: Vec<usize> = (0..m).collect();
    let mut chosen: Vec<&Flat> = Vec::with_capacity(m);
    loop {
        chosen.clear();
        chosen.extend(idx.iter().map(|&i| &flats[i]));
        let inter = intersect(&chosen)?;
        acc.add(section_functional(psi, &inter, window)?);
        let mut d = m;
        loop {
            if d == 0 {
                return Ok(acc.value());
            }
            d -= 1;
            if idx[d] < n - (m - d) {
                idx[d] += 1;
                for j in d + 1..m {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Monte Carlo estimate of `E zeta_t(window)` via the closed-form mean
/// `(t^m / m!) * integral of psi d lambda^m`, sampling the `m` flats from
/// the hitting distribution of the window itself.
pub fn zeta_mean(
    params: &FlatSpaceParams,
    window: &Window,
    psi: &SectionFunctional,
    m: usize,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    psi.validate(params.dim, params.k, m)?;
    if samples == 0 {
        return Err(Error::Input("Monte Carlo needs a positive sample budget".into()));
    }
    let prop = FlatSpaceParams { radius: window.radius(), ..params.clone() };
    let mass = prop.hitting_mass();
    let m_fact: f64 = (1..=m).map(|k| k as f64).product();
    let scale = (t * mass).powi(m as i32) / m_fact;
    let block = 1024usize;
    let blocks = samples.div_ceil(block);
    let sums: Vec<Result<(f64, f64, usize)>> =
        exec::run_replications(blocks, seed, stream::MC_INTEGRAL, |bi, rng| {
            let lo = bi * block;
            let hi = ((bi + 1) * block).min(samples);
            let mut s = NeumaierSum::new();
            let mut s2 = NeumaierSum::new();
            for _ in lo..hi {
                let draws: Vec<Flat> = (0..m)
                    .map(|_| Flat::from_point(&sample_hitting_flat(&prop, rng)))
                    .collect::<Result<_>>()?;
                let refs: Vec<&Flat> = draws.iter().collect();
                let v = section_functional(psi, &intersect(&refs)?, window)? * scale;
                s.add(v);
                s2.add(v * v);
            }
            Ok((s.value(), s2.value(), hi - lo))
        });
    let mut total = 0.0;
    let mut total2 = 0.0;
    let mut count = 0usize;
    for r in sums {
        let (s, s2, c) = r?;
        total += s;
        total2 += s2;
        count += c;
    }
    let mean = total / count as f64;
    let var = (total2 / count as f64 - mean * mean).max(0.0);
    Ok((mean, (var / count as f64).sqrt()))
}

/// Shared building block of the covariance formulas:
/// `W(n) = integral of [inner_A][inner_B] d lambda^n` where
/// `inner_A = integral of psi(A cap shared cap extra) d lambda^(m-n)`.
/// The `n` shared flats are proposed from the hitting distribution of the
/// smaller window, the extras from each window's own; both proposals cover
/// the integrand support because traces outside the window vanish.
fn w_integral(
    params: &FlatSpaceParams,
    win_a: &Window,
    win_b: &Window,
    psi: &SectionFunctional,
    m: usize,
    n: usize,
    outer: usize,
    inner: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    debug_assert!(n >= 1 && n <= m);
    let rho_shared = win_a.radius().min(win_b.radius());
    let prop_s = FlatSpaceParams { radius: rho_shared, ..params.clone() };
    let prop_a = FlatSpaceParams { radius: win_a.radius(), ..params.clone() };
    let prop_b = FlatSpaceParams { radius: win_b.radius(), ..params.clone() };
    let mass_s = prop_s.hitting_mass();
    let extras = m - n;
    let scale_a = prop_a.hitting_mass().powi(extras as i32);
    let scale_b = prop_b.hitting_mass().powi(extras as i32);
    let inner = if extras == 0 { 1 } else { inner.max(1) };

    let draws: Vec<Result<f64>> =
        exec::run_replications(outer, seed, stream::MC_INTEGRAL, |_, rng| {
            let shared: Vec<Flat> = (0..n)
                .map(|_| Flat::from_point(&sample_hitting_flat(&prop_s, rng)))
                .collect::<Result<_>>()?;
            let mut inner_est = [0.0f64; 2];
            for (slot, (win, prop, scale)) in [
                (win_a, &prop_a, scale_a),
                (win_b, &prop_b, scale_b),
            ]
            .iter()
            .enumerate()
            {
                let mut acc = NeumaierSum::new();
                for _ in 0..inner {
                    let extra: Vec<Flat> = (0..extras)
                        .map(|_| Flat::from_point(&sample_hitting_flat(prop, rng)))
                        .collect::<Result<_>>()?;
                    let refs: Vec<&Flat> =
                        shared.iter().chain(extra.iter()).collect();
                    acc.add(section_functional(psi, &intersect(&refs)?, win)?);
                }
                inner_est[slot] = acc.value() / inner as f64 * scale;
            }
            Ok(inner_est[0] * inner_est[1] * mass_s.powi(n as i32))
        });
    let vals: Vec<f64> = draws.into_iter().collect::<Result<_>>()?;
    let count = vals.len() as f64;
    let mean = stats::compensated_sum(&vals) / count;
    let var = vals.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
    Ok((mean, (var / count).sqrt()))
}

/// A covariance value with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy)]
pub struct CovEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Limit covariance `C(A, B)` of the normalized intersection functionals:
/// `W(1) / ((m-1)!)^2`.
pub fn intersection_cov_limit(
    params: &FlatSpaceParams,
    win_a: &Window,
    win_b: &Window,
    psi: &SectionFunctional,
    m: usize,
    outer: usize,
    inner: usize,
    seed: u64,
) -> Result<CovEstimate> {
    psi.validate(params.dim, params.k, m)?;
    let (w1, se1) = w_integral(params, win_a, win_b, psi, m, 1, outer, inner, seed)?;
    let f: f64 = (1..m).map(|k| k as f64).product::<f64>().powi(2);
    Ok(CovEstimate { value: w1 / f, std_error: se1 / f })
}

/// Exact covariance of `(zeta_t(A), zeta_t(B))` at finite intensity:
/// `sum_{n=1}^m t^(2m-n) W(n) / (n! ((m-n)!)^2)`.
pub fn intersection_cov_exact(
    params: &FlatSpaceParams,
    t: f64,
    win_a: &Window,
    win_b: &Window,
    psi: &SectionFunctional,
    m: usize,
    outer: usize,
    inner: usize,
    seed: u64,
) -> Result<CovEstimate> {
    psi.validate(params.dim, params.k, m)?;
    let mut value = 0.0;
    let mut var = 0.0;
    for n in 1..=m {
        let (w, se) = w_integral(
            params,
            win_a,
            win_b,
            psi,
            m,
            n,
            outer,
            inner,
            exec::derive_seed(seed, stream::MC_INTEGRAL, n as u64),
        )?;
        let n_fact: f64 = (1..=n).map(|k| k as f64).product();
        let rest_fact: f64 = (1..=(m - n)).map(|k| k as f64).product();
        let coeff = t.powi((2 * m - n) as i32) / (n_fact * rest_fact * rest_fact);
        value += coeff * w;
        var += (coeff * se) * (coeff * se);
    }
    Ok(CovEstimate { value, std_error: var.sqrt() })
}

/// Two-sample comparison of the intensity and window limiting regimes: for
/// a functional homogeneous of degree `alpha`,
/// `zeta_1(r B) =d r^alpha zeta_{r^(d-k)}(B)`. The check samples both
/// fields, centers each by its own mean estimate sharing one base integral,
/// and reports a two-sample KS test on the standardized draws.
#[derive(Debug, Clone, Copy)]
pub struct ScalingReport {
    pub ks: stats::KsResult,
    pub replications: usize,
    pub alpha: f64,
    /// Window growth factor equivalent to intensity `t`.
    pub r: f64,
}

pub fn scaling_check(
    params: &FlatSpaceParams,
    window: &Window,
    psi: &SectionFunctional,
    m: usize,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<ScalingReport> {
    psi.validate(params.dim, params.k, m)?;
    if !(t > 0.0) {
        return Err(Error::Input("intensity must be positive".into()));
    }
    let codim = params.dim - params.k;
    let q = params.dim.saturating_sub(m * codim);
    let alpha = psi.homogeneity(q);
    let r = t.powf(1.0 / codim as f64);

    let proc_high = FlatSpaceParams { radius: window.radius(), ..params.clone() };
    let high: Vec<Result<f64>> =
        exec::run_replications(reps, seed, stream::EXPERIMENT, |_, rng| {
            let flats = sample_flats(&proc_high, t, rng)?;
            zeta(&flats, m, psi, window)
        });

    let grown = window.scale(r);
    let proc_grown = FlatSpaceParams { radius: grown.radius(), ..params.clone() };
    let scale = r.powf(-alpha);
    let grown_draws: Vec<Result<f64>> =
        exec::run_replications(reps, seed ^ 0x7363616c, stream::EXPERIMENT, |_, rng| {
            let flats = sample_flats(&proc_grown, 1.0, rng)?;
            Ok(zeta(&flats, m, psi, &grown)? * scale)
        });

    let a: Vec<f64> = high.into_iter().collect::<Result<_>>()?;
    let b: Vec<f64> = grown_draws.into_iter().collect::<Result<_>>()?;
    let ks = stats::ks_test_two_sample(&a, &b)?;
    Ok(ScalingReport { ks, replications: reps, alpha, r })
}
