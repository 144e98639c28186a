//! Poisson process sampling, factorial-measure sums, and a Monte Carlo
//! check of the multivariate Mecke identity.

use crate::error::{Error, Result};
use crate::exec::{self, stream};
use crate::measure::{Kernel, MeasureSpace, Point};
use crate::stats::NeumaierSum;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// A realization of a point process: a finite multiset of points. Repeated
/// atoms are stored as separate entries and count once per index in
/// factorial sums.
#[derive(Debug, Clone, Default)]
pub struct PointConfiguration {
    points: Vec<Point>,
}

impl PointConfiguration {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Adds an atom; used to realize the augmented configuration
    /// `eta + delta_x1 + ... + delta_xm` of the Mecke identity.
    pub fn push(&mut self, p: Point) {
        self.points.push(p);
    }
}

/// Draws a Poisson process with intensity `t * lambda` on the space: the
/// point count is Poisson with mean `t * lambda(X)` and points are iid from
/// the normalized intensity.
pub fn sample_poisson<R: Rng + ?Sized>(
    space: &MeasureSpace,
    t: f64,
    rng: &mut R,
) -> Result<PointConfiguration> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Input(format!("time scale must be finite and nonnegative, got {t}")));
    }
    let mean = t * space.total_mass();
    if mean > 1e8 {
        return Err(Error::Input(format!("Poisson mean {mean:.3e} exceeds the sampling budget")));
    }
    if mean == 0.0 {
        return Ok(PointConfiguration::default());
    }
    let n = Poisson::new(mean)
        .map_err(|e| Error::Input(format!("Poisson mean {mean}: {e}")))?
        .sample(rng) as usize;
    let points = (0..n).map(|_| space.sample_point(rng)).collect();
    Ok(PointConfiguration { points })
}

/// Sum of `f` over all `m`-tuples of *distinct indices* of the
/// configuration, `m = f.arity()`. With fewer than `m` points the sum is
/// empty. Three paths, fastest applicable wins:
///
/// * constant kernel `c`: `c * N (N-1) ... (N-m+1)`;
/// * symmetric kernel: `m!` times the sum over index combinations;
/// * general kernel: all ordered tuples of distinct indices.
pub fn factorial_sum(config: &PointConfiguration, f: &Kernel) -> Result<f64> {
    let m = f.arity();
    let n = config.len();
    if m == 0 {
        return f.eval(&[]);
    }
    if n < m {
        return Ok(0.0);
    }
    if let Some(c) = f.constant_value() {
        let mut falling = 1.0;
        for i in 0..m {
            falling *= (n - i) as f64;
        }
        return Ok(c * falling);
    }
    let pts = config.points();
    let mut acc = NeumaierSum::new();
    let mut args: Vec<Point> = Vec::with_capacity(m);
    if f.is_symmetric() {
        // lexicographic combinations idx[0] < ... < idx[m-1]
        let mut idx: Vec<usize> = (0..m).collect();
        loop {
            args.clear();
            args.extend(idx.iter().map(|&i| pts[i].clone()));
            acc.add(f.eval_unchecked(&args));
            // advance
            let mut d = m;
            loop {
                if d == 0 {
                    let fact: f64 = (1..=m).map(|k| k as f64).product();
                    return Ok(acc.value() * fact);
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
    // ordered tuples of distinct indices via odometer with a used mask
    let mut idx = vec![0usize; m];
    let mut used = vec![false; n];
    let mut depth = 0usize;
    loop {
        if depth == m {
            args.clear();
            args.extend(idx.iter().map(|&i| pts[i].clone()));
            acc.add(f.eval_unchecked(&args));
            depth -= 1;
            used[idx[depth]] = false;
            idx[depth] += 1;
            continue;
        }
        while idx[depth] < n && used[idx[depth]] {
            idx[depth] += 1;
        }
        if idx[depth] == n {
            if depth == 0 {
                return Ok(acc.value());
            }
            idx[depth] = 0;
            depth -= 1;
            used[idx[depth]] = false;
            idx[depth] += 1;
        } else {
            used[idx[depth]] = true;
            depth += 1;
            if depth < m {
                idx[depth] = 0;
            }
        }
    }
}

/// Monte Carlo comparison of the two sides of the multivariate Mecke
/// identity for a functional `g(x_1, ..., x_m; eta)`.
#[derive(Debug, Clone, Copy)]
pub struct MeckeReport {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    /// Discrepancy in combined standard errors.
    pub z_score: f64,
    pub replications: usize,
}

/// Estimates both sides of the Mecke identity with `reps` process draws per
/// side:
///
/// * left: `E sum_{(x_1..x_m) in eta^(m)} g(x_1..x_m; eta)`;
/// * right: `(t lambda(X))^m E g(X_1..X_m; eta + delta_{X_1} + ... +
///   delta_{X_m})` with the `X_i` iid from the normalized intensity.
pub fn mecke_check(
    space: &MeasureSpace,
    t: f64,
    m: usize,
    g: &(dyn Fn(&[Point], &PointConfiguration) -> f64 + Sync),
    reps: usize,
    seed: u64,
) -> Result<MeckeReport> {
    if reps < 2 {
        return Err(Error::SampleShortage { needed: 2, got: reps });
    }
    if m == 0 {
        return Err(Error::Input("Mecke order m must be positive".into()));
    }
    let lhs_draws: Vec<Result<f64>> =
        exec::run_replications(reps, seed, stream::MECKE, |_, rng| {
            let eta = sample_poisson(space, t, rng)?;
            // the left side is itself a factorial sum with the configuration
            // frozen into the kernel arguments
            let n = eta.len();
            if n < m {
                return Ok(0.0);
            }
            let mut acc = NeumaierSum::new();
            let mut idx = vec![0usize; m];
            let mut used = vec![false; n];
            let mut depth = 0usize;
            let pts = eta.points();
            let mut args: Vec<Point> = Vec::with_capacity(m);
            loop {
                if depth == m {
                    args.clear();
                    args.extend(idx.iter().map(|&i| pts[i].clone()));
                    acc.add(g(&args, &eta));
                    depth -= 1;
                    used[idx[depth]] = false;
                    idx[depth] += 1;
                    continue;
                }
                while idx[depth] < n && used[idx[depth]] {
                    idx[depth] += 1;
                }
                if idx[depth] == n {
                    if depth == 0 {
                        break;
                    }
                    idx[depth] = 0;
                    depth -= 1;
                    used[idx[depth]] = false;
                    idx[depth] += 1;
                } else {
                    used[idx[depth]] = true;
                    depth += 1;
                    if depth < m {
                        idx[depth] = 0;
                    }
                }
            }
            Ok(acc.value())
        });
    let rhs_scale = (t * space.total_mass()).powi(m as i32);
    let rhs_draws: Vec<Result<f64>> =
        exec::run_replications(reps, seed ^ 0x6d65636b, stream::MECKE, |_, rng| {
            let mut eta = sample_poisson(space, t, rng)?;
            let xs: Vec<Point> = (0..m).map(|_| space.sample_point(rng)).collect();
            for x in &xs {
                eta.push(x.clone());
            }
            Ok(rhs_scale * g(&xs, &eta))
        });
    let lhs: Vec<f64> = lhs_draws.into_iter().collect::<Result<_>>()?;
    let rhs: Vec<f64> = rhs_draws.into_iter().collect::<Result<_>>()?;
    let mean_se = |xs: &[f64]| {
        let n = xs.len() as f64;
        let mean = crate::stats::compensated_sum(xs) / n;
        let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (lm, ls) = mean_se(&lhs);
    let (rm, rs) = mean_se(&rhs);
    let denom = (ls * ls + rs * rs).sqrt().max(1e-300);
    Ok(MeckeReport {
        lhs: lm,
        lhs_se: ls,
        rhs: rm,
        rhs_se: rs,
        z_score: (lm - rm) / denom,
        replications: reps,
    })
}
