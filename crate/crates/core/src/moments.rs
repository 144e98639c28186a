//! Exact mixed moments and joint cumulants of multiple stochastic integrals
//! via partition sums, the set-partition moment/cumulant inversion, and
//! Gaussian (matching-sum) limit moments.
//!
//! For symmetric kernels `f_1, ..., f_l` of arities `n_1, ..., n_l`,
//!
//! ```text
//! E prod_i I_{n_i}(f_i)      = sum over non-flat partitions with all
//!                              blocks of size >= 2 of
//!                              t^{|sigma|} * integral of the identified
//!                              product (tensor f)_sigma d lambda^{|sigma|},
//! kappa(I_{n_1}, ..., I_{n_l}) = the same sum restricted to partitions
//!                              that connect all rows.
//! ```
//!
//! Every block must cross rows, so each partition's identified product has
//! exactly `|sigma|` free arguments.

use crate::chaos;
use crate::error::{Error, Result};
use crate::measure::{Kernel, MeasureSpace, Method};
use crate::partitions::{
    enumerate_partitions, substitution_map, PartitionClass, RowLayout,
};
use crate::stats;
use nalgebra::DMatrix;

/// One partition's contribution to a moment or cumulant sum.
#[derive(Debug, Clone)]
pub struct PartitionTerm {
    pub partition: String,
    pub blocks: usize,
    pub value: f64,
    pub std_error: f64,
}

/// A partition sum with per-term diagnostics.
#[derive(Debug, Clone)]
pub struct PartitionSum {
    pub value: f64,
    pub std_error: f64,
    pub terms: Vec<PartitionTerm>,
}

fn partition_sum(
    space: &MeasureSpace,
    t: f64,
    kernels: &[Kernel],
    class: PartitionClass,
    method: Method,
) -> Result<PartitionSum> {
    if kernels.is_empty() {
        return Err(Error::Input("need at least one kernel".into()));
    }
    for k in kernels {
        if k.arity() == 0 {
            return Err(Error::Input("kernels must have positive arity".into()));
        }
        if !k.is_symmetric() {
            return Err(Error::Constraint(format!(
                "kernel {} must be symmetric",
                k.name()
            )));
        }
    }
    let layout = RowLayout::new(kernels.iter().map(Kernel::arity).collect())?;
    let n = layout.n();
    let mut terms = Vec::new();
    let mut total = 0.0;
    let mut var = 0.0;
    for (term_idx, sigma) in enumerate_partitions(&layout, class)?.enumerate() {
        let map = substitution_map(&sigma, n)?;
        let q = sigma.block_count();
        debug_assert_eq!(q, *map.iter().max().unwrap() + 1);
        let factors: Vec<(Kernel, Vec<usize>)> = kernels
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let r = layout.row_range(i);
                (k.clone(), map[r].to_vec())
            })
            .collect();
        // decorrelate Monte Carlo streams across terms
        let term_method = match method {
            Method::MonteCarlo { samples, seed } => Method::MonteCarlo {
                samples,
                seed: crate::exec::derive_seed(seed, crate::exec::stream::MC_INTEGRAL, term_idx as u64),
            },
            Method::Auto { samples, seed } => Method::Auto {
                samples,
                seed: crate::exec::derive_seed(seed, crate::exec::stream::MC_INTEGRAL, term_idx as u64),
            },
            other => other,
        };
        let est = space.contraction_integral(&factors, q, term_method)?;
        let scaled = t.powi(q as i32) * est.value;
        let se = t.powi(q as i32) * est.std_error;
        total += scaled;
        var += se * se;
        terms.push(PartitionTerm {
            partition: sigma.to_string(),
            blocks: q,
            value: scaled,
            std_error: se,
        });
    }
    Ok(PartitionSum { value: total, std_error: var.sqrt(), terms })
}

/// `E prod_i I_{n_i}(f_i)` at time `t`.
pub fn mixed_moment(
    space: &MeasureSpace,
    t: f64,
    kernels: &[Kernel],
    method: Method,
) -> Result<PartitionSum> {
    partition_sum(space, t, kernels, PartitionClass::Ge2, method)
}

/// Joint cumulant `kappa(I_{n_1}(f_1), ..., I_{n_l}(f_l))` at time `t`.
pub fn joint_cumulant(
    space: &MeasureSpace,
    t: f64,
    kernels: &[Kernel],
    method: Method,
) -> Result<PartitionSum> {
    partition_sum(space, t, kernels, PartitionClass::Connected, method)
}

/// Integral of `|(tensor f)_sigma|` for every moment-formula partition; the
/// finiteness diagnostic behind the moment formulas.
#[derive(Debug, Clone)]
pub struct IntegrabilityReport {
    pub terms: Vec<PartitionTerm>,
    pub all_finite: bool,
}

pub fn integrability_report(
    space: &MeasureSpace,
    kernels: &[Kernel],
    method: Method,
) -> Result<IntegrabilityReport> {
    let abs_kernels: Vec<Kernel> = kernels
        .iter()
        .map(|k| {
            let inner = k.clone();
            Kernel::new(
                format!("abs:{}", k.name()),
                k.arity(),
                k.is_symmetric(),
                move |args| inner.eval_unchecked(args).abs(),
            )
        })
        .collect();
    let sum = partition_sum(space, 1.0, &abs_kernels, PartitionClass::Ge2, method)?;
    let all_finite = sum.terms.iter().all(|t| t.value.is_finite());
    Ok(IntegrabilityReport { terms: sum.terms, all_finite })
}

/// Joint cumulant from joint moments over subsets:
/// `kappa(X_1..X_l) = sum over partitions pi of [l] of
/// (-1)^(|pi|-1) (|pi|-1)! prod_{B in pi} m(B)`.
/// `moment_of` receives 0-based variable indices, ascending.
pub fn cumulant_from_moments(
    ell: usize,
    mut moment_of: impl FnMut(&[usize]) -> Result<f64>,
) -> Result<f64> {
    if ell == 0 {
        return Err(Error::Input("cumulant of an empty collection".into()));
    }
    let layout = RowLayout::units(ell);
    let mut total = 0.0;
    for pi in enumerate_partitions(&layout, PartitionClass::NonFlat)? {
        let p = pi.block_count();
        let sign = if (p - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let weight = sign * chaos::factorial(p - 1);
        let mut prod = 1.0;
        for b in pi.blocks() {
            prod *= moment_of(b)?;
        }
        total += weight * prod;
    }
    Ok(total)
}

/// Joint moment from joint cumulants over subsets:
/// `m(X_1..X_l) = sum over partitions pi of prod_{B in pi} kappa(B)`.
pub fn moment_from_cumulants(
    ell: usize,
    mut cumulant_of: impl FnMut(&[usize]) -> Result<f64>,
) -> Result<f64> {
    if ell == 0 {
        return Err(Error::Input("moment of an empty collection".into()));
    }
    let layout = RowLayout::units(ell);
    let mut total = 0.0;
    for pi in enumerate_partitions(&layout, PartitionClass::NonFlat)? {
        let mut prod = 1.0;
        for b in pi.blocks() {
            prod *= cumulant_of(b)?;
        }
        total += prod;
    }
    Ok(total)
}

/// Empirical joint cumulant of selected sample columns (indices may repeat
/// for powers), via the moment inversion on empirical moments.
pub fn sample_cumulant(rows: &[Vec<f64>], vars: &[usize]) -> Result<f64> {
    cumulant_from_moments(vars.len(), |subset| {
        let cols: Vec<usize> = subset.iter().map(|&p| vars[p]).collect();
        stats::empirical_moment(rows, &cols)
    })
}

/// Centered Gaussian mixed moment by the matching sum:
/// `E prod_i Z_{v_i} = sum over perfect matchings of prod of covariances`;
/// zero for odd degree, one for the empty product. This is the limit of the
/// normalized mixed moments as intensity grows.
pub fn gaussian_mixed_moment(c: &DMatrix<f64>, vars: &[usize]) -> Result<f64> {
    let ell = vars.len();
    if vars.iter().any(|&v| v >= c.nrows().min(c.ncols())) {
        return Err(Error::Input("variable index outside the covariance".into()));
    }
    if ell == 0 {
        return Ok(1.0);
    }
    if ell % 2 == 1 {
        return Ok(0.0);
    }
    let layout = RowLayout::units(ell);
    let mut total = 0.0;
    for sigma in enumerate_partitions(&layout, PartitionClass::Eq2)? {
        let mut prod = 1.0;
        for b in sigma.blocks() {
            prod *= c[(vars[b[0]], vars[b[1]])];
        }
        total += prod;
    }
    Ok(total)
}

/// Mixed-moment and cumulant evaluation for finite chaos sums
/// `F = constant + sum_k I(kernels[k])` with pairwise distinct arities.
#[derive(Clone)]
pub struct ChaosSum {
    pub constant: f64,
    pub kernels: Vec<Kernel>,
}

impl ChaosSum {
    pub fn new(constant: f64, kernels: Vec<Kernel>) -> Result<Self> {
        let mut arities: Vec<usize> = kernels.iter().map(Kernel::arity).collect();
        arities.sort_unstable();
        arities.dedup();
        if arities.len() != kernels.len() || arities.first() == Some(&0) {
            return Err(Error::Input(
                "chaos sums need kernels of pairwise distinct positive arities".into(),
            ));
        }
        if kernels.iter().any(|k| !k.is_symmetric()) {
            return Err(Error::Constraint("chaos sums need symmetric kernels".into()));
        }
        Ok(Self { constant, kernels })
    }
}

/// `E prod_i F_i` by multilinear expansion: each factor contributes either
/// its constant or one of its integrals, and the pure-integral part of each
/// term is a partition-sum mixed moment.
pub fn chaos_sum_moment(
    space: &MeasureSpace,
    t: f64,
    factors: &[ChaosSum],
    method: Method,
) -> Result<PartitionSum> {
    if factors.is_empty() {
        return Err(Error::Input("need at least one factor".into()));
    }
    // choice c_i in 0..=kernels.len(): 0 is the constant
    let mut choice = vec![0usize; factors.len()];
    let mut value = 0.0;
    let mut var = 0.0;
    let mut terms = Vec::new();
    loop {
        let mut coeff = 1.0;
        let mut chosen: Vec<Kernel> = Vec::new();
        for (i, f) in factors.iter().enumerate() {
            if choice[i] == 0 {
                coeff *= f.constant;
            } else {
                chosen.push(f.kernels[choice[i] - 1].clone());
            }
        }
        if coeff != 0.0 {
            if chosen.is_empty() {
                value += coeff;
                terms.push(PartitionTerm {
                    partition: "{}".into(),
                    blocks: 0,
                    value: coeff,
                    std_error: 0.0,
                });
            } else {
                // E of a product containing a lone integral is zero only
                // when the partition class is empty; the sum handles it.
                let ps = mixed_moment(space, t, &chosen, method)?;
                value += coeff * ps.value;
                var += (coeff * ps.std_error) * (coeff * ps.std_error);
                for term in ps.terms {
                    terms.push(PartitionTerm {
                        value: coeff * term.value,
                        std_error: coeff.abs() * term.std_error,
                        ..term
                    });
                }
            }
        }
        // odometer over choices
        let mut d = 0;
        loop {
            if d == factors.len() {
                return Ok(PartitionSum { value, std_error: var.sqrt(), terms });
            }
            choice[d] += 1;
            if choice[d] <= factors[d].kernels.len() {
                break;
            }
            choice[d] = 0;
            d += 1;
        }
    }
}

/// Joint cumulant `kappa(F_1, ..., F_l)` of chaos sums. Constants shift
/// only the first cumulant; for `l >= 2` the cumulant expands multilinearly
/// over one integral per factor.
pub fn chaos_sum_cumulant(
    space: &MeasureSpace,
    t: f64,
    factors: &[ChaosSum],
    method: Method,
) -> Result<PartitionSum> {
    if factors.is_empty() {
        return Err(Error::Input("need at least one factor".into()));
    }
    if factors.len() == 1 {
        // integrals are centered, so the mean is the constant
        return Ok(PartitionSum {
            value: factors[0].constant,
            std_error: 0.0,
            terms: vec![PartitionTerm {
                partition: "{}".into(),
                blocks: 0,
                value: factors[0].constant,
                std_error: 0.0,
            }],
        });
    }
    let mut choice = vec![0usize; factors.len()];
    let mut value = 0.0;
    let mut var = 0.0;
    let mut terms = Vec::new();
    loop {
        let chosen: Vec<Kernel> = factors
            .iter()
            .enumerate()
            .map(|(i, f)| f.kernels[choice[i]].clone())
            .collect();
        let ps = joint_cumulant(space, t, &chosen, method)?;
        value += ps.value;
        var += ps.std_error * ps.std_error;
        terms.extend(ps.terms);
        let mut d = 0;
        loop {
            if d == factors.len() {
                return Ok(PartitionSum { value, std_error: var.sqrt(), terms });
            }
            choice[d] += 1;
            if choice[d] < factors[d].kernels.len() {
                break;
            }
            choice[d] = 0;
            d += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_atom() -> MeasureSpace {
        MeasureSpace::finite_atomic("unit-atom", vec![1.0]).unwrap()
    }

    /// pmf-series oracle for E[h(N)], N ~ Poisson(mu).
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
    fn second_moment_of_degree_two_integral() {
        // E I_2(1)^2 on the unit atom at t = 1: two matchings, value 2;
        // oracle: E[(N^2 - 3N + 1)^2] for N ~ Poisson(1)
        let sp = unit_atom();
        let f = Kernel::constant(2, 1.0);
        let got = mixed_moment(&sp, 1.0, &[f.clone(), f], Method::Exact).unwrap();
        assert_eq!(got.terms.len(), 2);
        assert_relative_eq!(got.value, 2.0, epsilon = 1e-12);
        let i2 = |n: f64| n * n - 3.0 * n + 1.0;
        let oracle = poisson_expect(1.0, |n| i2(n).powi(2));
        assert_relative_eq!(oracle, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn third_moment_and_cumulant_of_degree_two_integral() {
        // twelve partitions in both classes; oracle E[I_2^3] = 12
        let sp = unit_atom();
        let f = Kernel::constant(2, 1.0);
        let ks = [f.clone(), f.clone(), f];
        let m3 = mixed_moment(&sp, 1.0, &ks, Method::Exact).unwrap();
        assert_eq!(m3.terms.len(), 12);
        assert_relative_eq!(m3.value, 12.0, epsilon = 1e-12);
        let k3 = joint_cumulant(&sp, 1.0, &ks, Method::Exact).unwrap();
        assert_eq!(k3.terms.len(), 12);
        assert_relative_eq!(k3.value, 12.0, epsilon = 1e-12);
        let i2 = |n: f64| n * n - 3.0 * n + 1.0;
        let oracle = poisson_expect(1.0, |n| i2(n).powi(3));
        assert_relative_eq!(oracle, 12.0, epsilon = 1e-8);
    }

    #[test]
    fn fourth_moment_of_compensated_count_is_poisson_central() {
        // E[(N - t)^4] = 3 t^2 + t: three matchings at t^2 plus the 4-block
        let sp = unit_atom();
        let one = Kernel::constant(1, 1.0);
        for t in [1.0, 2.5] {
            let ks = vec![one.clone(); 4];
            let got = mixed_moment(&sp, t, &ks, Method::Exact).unwrap();
            assert_eq!(got.terms.len(), 4);
            assert_relative_eq!(got.value, 3.0 * t * t + t, epsilon = 1e-10);
            let oracle = poisson_expect(t, |n| (n - t).powi(4));
            assert_relative_eq!(oracle, got.value, epsilon = 1e-7, max_relative = 1e-7);
            // fourth cumulant: the single connected partition, value t
            let k4 = joint_cumulant(&sp, t, &ks, Method::Exact).unwrap();
            assert_eq!(k4.terms.len(), 1);
            assert_relative_eq!(k4.value, t, epsilon = 1e-10);
        }
    }

    #[test]
    fn covariance_of_first_order_integrals() {
        // kappa(I_1(f), I_1(g)) = t <f, g>
        let sp = MeasureSpace::finite_atomic("two", vec![0.5, 1.5]).unwrap();
        let f = Kernel::new("f", 1, true, |p: &[crate::measure::Point]| {
            p[0].atom().unwrap() as f64 + 1.0
        });
        let g = Kernel::new("g", 1, true, |p: &[crate::measure::Point]| {
            2.0 - p[0].atom().unwrap() as f64
        });
        let t = 1.4;
        let got = joint_cumulant(&sp, t, &[f, g], Method::Exact).unwrap();
        // <f, g> = 0.5 * 1 * 2 + 1.5 * 2 * 1 = 4
        assert_relative_eq!(got.value, t * 4.0, epsilon = 1e-12);
    }

    #[test]
    fn mixed_moment_with_odd_lone_row_vanishes() {
        // E[I_1(f)] = 0: the class over a single row of size 1 is empty
        let sp = unit_atom();
        let one = Kernel::constant(1, 1.0);
        let got = mixed_moment(&sp, 1.0, &[one], Method::Exact).unwrap();
        assert_eq!(got.terms.len(), 0);
        assert_eq!(got.value, 0.0);
    }

    #[test]
    fn cumulant_moment_inversion_round_trips() {
        // moments of a known small law: use Poisson(1.3) powers
        let mu = 1.3;
        let raw = |k: usize| poisson_expect(mu, |n| n.powi(k as i32));
        // kappa_1..kappa_4 of Poisson are all mu
        for ell in 1..=4usize {
            let got = cumulant_from_moments(ell, |s| Ok(raw(s.len()))).unwrap();
            assert_relative_eq!(got, mu, epsilon = 1e-7, max_relative = 1e-7);
        }
        // and composing back recovers the raw moments
        for ell in 1..=4usize {
            let got = moment_from_cumulants(ell, |_| Ok(mu)).unwrap();
            assert_relative_eq!(got, raw(ell), epsilon = 1e-7, max_relative = 1e-7);
        }
    }

    #[test]
    fn sample_cumulants_of_synthetic_data() {
        // X ~ Poisson(2) empirically: kappa_2 and kappa_3 both near 2
        let mut rng = crate::exec::rng_for(41, crate::exec::stream::SAMPLING, 0);
        let sp = MeasureSpace::finite_atomic("a", vec![2.0]).unwrap();
        let rows: Vec<Vec<f64>> = (0..60_000)
            .map(|_| {
                let n = crate::poisson::sample_poisson(&sp, 1.0, &mut rng)
                    .unwrap()
                    .len() as f64;
                vec![n]
            })
            .collect();
        let k2 = sample_cumulant(&rows, &[0, 0]).unwrap();
        let k3 = sample_cumulant(&rows, &[0, 0, 0]).unwrap();
        assert_relative_eq!(k2, 2.0, epsilon = 0.1);
        assert_relative_eq!(k3, 2.0, epsilon = 0.35);
    }

    #[test]
    fn gaussian_moments_by_matching_sum() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        // E Z_0^2 = 2, E Z_0^4 = 3 * 4 = 12, E Z_0^3 Z_1 = 3 * 2 * 0.5 = 3
        assert_relative_eq!(gaussian_mixed_moment(&c, &[0, 0]).unwrap(), 2.0);
        assert_relative_eq!(gaussian_mixed_moment(&c, &[0, 0, 0, 0]).unwrap(), 12.0);
        assert_relative_eq!(gaussian_mixed_moment(&c, &[0, 0, 0, 1]).unwrap(), 3.0);
        assert_eq!(gaussian_mixed_moment(&c, &[0, 1, 0]).unwrap(), 0.0);
        assert_eq!(gaussian_mixed_moment(&c, &[]).unwrap(), 1.0);
    }

    #[test]
    fn chaos_sum_moments_match_tuple_sum_oracle() {
        // F = N (N - 1) on the unit atom: mean t^2, f_1 = 2t, f_2 = 1.
        // E F^2 = E[N^2 (N-1)^2] from the pmf oracle.
        let sp = unit_atom();
        for t in [1.0, 1.5] {
            let mean = t * t;
            let fsum = ChaosSum::new(
                mean,
                vec![Kernel::constant(1, 2.0 * t), Kernel::constant(2, 1.0)],
            )
            .unwrap();
            let got =
                chaos_sum_moment(&sp, t, &[fsum.clone(), fsum.clone()], Method::Exact)
                    .unwrap();
            let oracle = poisson_expect(t, |n| (n * (n - 1.0)).powi(2));
            assert_relative_eq!(got.value, oracle, epsilon = 1e-7, max_relative = 1e-7);
            // third cumulant: 32 t^4 + 32 t^3 + 4 t^2
            let k3 = chaos_sum_cumulant(
                &sp,
                t,
                &[fsum.clone(), fsum.clone(), fsum.clone()],
                Method::Exact,
            )
            .unwrap();
            let want = 32.0 * t.powi(4) + 32.0 * t.powi(3) + 4.0 * t * t;
            assert_relative_eq!(k3.value, want, epsilon = 1e-7, max_relative = 1e-7);
            // cross-check the cumulant against the pmf oracle via central
            // moments: kappa_3 = E[(F - EF)^3]
            let central = poisson_expect(t, |n| (n * (n - 1.0) - mean).powi(3));
            assert_relative_eq!(k3.value, central, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn integrability_report_flags_finite_terms() {
        let sp = unit_atom();
        let f = Kernel::constant(2, -3.0);
        let rep = integrability_report(&sp, &[f.clone(), f], Method::Exact).unwrap();
        assert!(rep.all_finite);
        assert_eq!(rep.terms.len(), 2);
        assert!(rep.terms.iter().all(|t| (t.value - 9.0).abs() < 1e-12));
    }
}
