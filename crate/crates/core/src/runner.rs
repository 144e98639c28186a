//! Experiment drivers shared by the command-line front end and the
//! integration suite.
//!
//! Each driver returns a CSV table and a JSON metadata sidecar. The CSV
//! bytes are a pure function of the experiment parameters and the master
//! seed; anything volatile (wall time, worker count, crate version) goes to
//! the metadata. That split is what makes "same seed, any worker count,
//! identical artifact" checkable by digest.

use crate::error::{Error, Result};
use crate::exec::{self, stream};
use crate::flats::{self, SectionFunctional, Window};
use crate::measure::{FlatSpaceParams, Kernel, MeasureSpace, Method};
use crate::moments;
use crate::partitions::{enumerate_partitions, PartitionClass, RowLayout};
use crate::poisson::{self, sample_poisson};
use crate::registry::MeckeFunctional;
use crate::stats::Summary;
use crate::ustat::{NormalizedFamily, UStatistic};
use serde_json::{json, Value};
use std::time::Instant;

/// One finished experiment: a CSV table and its metadata sidecar.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub csv: String,
    pub metadata: Value,
}

/// 17 significant digits, enough to round-trip an f64.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn class_label(class: PartitionClass) -> &'static str {
    match class {
        PartitionClass::NonFlat => "nonflat",
        PartitionClass::Ge2 => "ge2",
        PartitionClass::Eq2 => "eq2",
        PartitionClass::Connected => "connected",
    }
}

/// Inverse of [`class_label`].
pub fn parse_class(s: &str) -> Result<PartitionClass> {
    match s {
        "nonflat" => Ok(PartitionClass::NonFlat),
        "ge2" => Ok(PartitionClass::Ge2),
        "eq2" => Ok(PartitionClass::Eq2),
        "connected" => Ok(PartitionClass::Connected),
        _ => Err(Error::Input(format!(
            "unknown partition class {s:?}; expected nonflat | ge2 | eq2 | connected"
        ))),
    }
}

fn method_label(method: Method) -> String {
    match method {
        Method::Exact => "exact".into(),
        Method::Quadrature => "quadrature".into(),
        Method::MonteCarlo { samples, .. } => format!("mc:{samples}"),
        Method::Auto { samples, .. } => format!("auto:{samples}"),
    }
}

fn psi_label(psi: &SectionFunctional) -> String {
    match psi {
        SectionFunctional::Indicator => "indicator".into(),
        SectionFunctional::HausdorffVolume => "hausdorff".into(),
        SectionFunctional::ChordPower { beta } => format!("chordpower:{beta}"),
    }
}

fn meta(module: &str, operation: &str, seed: Option<u64>, params: Value, t0: Instant) -> Value {
    json!({
        "module": module,
        "operation": operation,
        "seed": seed,
        "parameters": params,
        "version": env!("CARGO_PKG_VERSION"),
        "runtime_ms": t0.elapsed().as_millis() as u64,
    })
}

/// Lists or counts the partitions of a row layout in one class.
pub fn partitions_table(
    sizes: &[usize],
    class: PartitionClass,
    count_only: bool,
) -> Result<RunArtifact> {
    let t0 = Instant::now();
    let layout = RowLayout::new(sizes.to_vec())?;
    let parts: Vec<_> = enumerate_partitions(&layout, class)?.collect();
    let mut csv = String::new();
    if count_only {
        csv.push_str("layout,class,count\n");
        let joined = sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
        csv.push_str(&format!("{joined},{},{}\n", class_label(class), parts.len()));
    } else {
        csv.push_str("index,partition,blocks\n");
        for (i, p) in parts.iter().enumerate() {
            csv.push_str(&format!(
                "{i},{},{}\n",
                csv_cell(&p.to_string()),
                p.block_count()
            ));
        }
    }
    let count = parts.len();
    Ok(RunArtifact {
        csv,
        metadata: meta(
            "partitions",
            if count_only { "count" } else { "enumerate" },
            None,
            json!({"layout": sizes, "class": class_label(class), "count": count}),
            t0,
        ),
    })
}

/// Mixed moment or joint cumulant of multiple stochastic integrals, with the
/// per-partition term breakdown.
pub fn moment_table(
    space: &MeasureSpace,
    t: f64,
    kernels: &[Kernel],
    method: Method,
    cumulant: bool,
) -> Result<RunArtifact> {
    let t0 = Instant::now();
    let sum = if cumulant {
        moments::joint_cumulant(space, t, kernels, method)?
    } else {
        moments::mixed_moment(space, t, kernels, method)?
    };
    let mut csv = String::from("kind,partition,blocks,value,std_error\n");
    for term in &sum.terms {
        csv.push_str(&format!(
            "term,{},{},{},{}\n",
            csv_cell(&term.partition),
            term.blocks,
            fmt(term.value),
            fmt(term.std_error)
        ));
    }
    csv.push_str(&format!("total,,,{},{}\n", fmt(sum.value), fmt(sum.std_error)));
    Ok(RunArtifact {
        csv,
        metadata: meta(
            "moments",
            if cumulant { "joint_cumulant" } else { "mixed_moment" },
            None,
            json!({
                "space": space.name(),
                "t": t,
                "kernels": kernels.iter().map(Kernel::name).collect::<Vec<_>>(),
                "method": method_label(method),
                "terms": sum.terms.len(),
                "value": sum.value,
            }),
            t0,
        ),
    })
}

/// Independent draws of one statistic, one row per replication.
pub fn simulate_table(
    space: &MeasureSpace,
    stat: &UStatistic,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<RunArtifact> {
    let t0 = Instant::now();
    let draws: Vec<Result<f64>> =
        exec::run_replications(reps, seed, stream::EXPERIMENT, |_, rng| {
            let config = sample_poisson(space, t, rng)?;
            stat.evaluate(&config, t)
        });
    let values = draws.into_iter().collect::<Result<Vec<f64>>>()?;
    let mut csv = String::from("rep,value\n");
    for (i, v) in values.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", fmt(*v)));
    }
    let summary = Summary::from_sample(&values).ok();
    Ok(RunArtifact {
        csv,
        metadata: meta(
            "ustat",
            "simulate",
            Some(seed),
            json!({
                "space": space.name(),
                "kernel": stat.kernel().name(),
                "t": t,
                "replications": reps,
                "mean": summary.as_ref().map(|s| s.mean),
                "variance": summary.as_ref().map(|s| s.variance),
            }),
            t0,
        ),
    })
}

/// Normality diagnostics of a normalized family over a `t`-grid: one row per
/// `(t, component)` with moment statistics and the normality test.
pub fn clt_table(
    family: &NormalizedFamily,
    ts: &[f64],
    reps: usize,
    seed: u64,
) -> Result<RunArtifact> {
    let t0 = Instant::now();
    let mut csv = String::from(
        "t,component,mean,variance,exact_variance,skewness,excess_kurtosis,\
         ks_statistic,ks_p_value\n",
    );
    for (idx, &t) in ts.iter().enumerate() {
        let run_seed = exec::derive_seed(seed, stream::EXPERIMENT, idx as u64);
        let rep = family.clt_experiment(t, reps, run_seed)?;
        for c in 0..family.len() {
            let s = &rep.summaries[c];
            csv.push_str(&format!(
                "{},{c},{},{},{},{},{},{},{}\n",
                fmt(t),
                fmt(s.mean),
                fmt(s.variance),
                fmt(rep.cov_exact[(c, c)]),
                fmt(s.skewness),
                fmt(s.excess_kurtosis),
                fmt(rep.ks[c].statistic),
                fmt(rep.ks[c].p_value)
            ));
        }
    }
    Ok(RunArtifact {
        csv,
        metadata: meta(
            "ustat",
            "clt_experiment",
            Some(seed),
            json!({
                "components": family.len(),
                "kernels": family
                    .statistics()
                    .iter()
                    .map(|s| s.kernel().name().to_string())
                    .collect::<Vec<_>>(),
                "t_grid": ts,
                "replications": reps,
                "warnings": family.warnings(),
            }),
            t0,
        ),
    })
}

/// Surrogate sampling budget for [`bound_table`].
#[derive(Debug, Clone, Copy)]
pub struct SurrogateOpts {
    pub reps: usize,
    pub qmc_nodes: usize,
}

/// The distance bound over a `t`-grid, optionally with the empirical
/// surrogate next to it.
pub fn bound_table(
    family: &NormalizedFamily,
    ts: &[f64],
    surrogate: Option<SurrogateOpts>,
    seed: u64,
) -> Result<RunArtifact> {
    let t0 = Instant::now();
    let mut csv = String::from(
        "t,first_term,a_t,b_t,bound,surrogate,surrogate_se\n",
    );
    for (idx, &t) in ts.iter().enumerate() {
        let b = family.d3_bound(t)?;
        let (sur, sur_se) = match surrogate {
            None => (String::new(), String::new()),
            Some(opts) => {
                let run_seed = exec::derive_seed(seed, stream::EXPERIMENT, idx as u64);
                let rep = family.d3_surrogate(t, opts.reps, opts.qmc_nodes, run_seed)?;
                let argmax_se = rep
                    .per_function
                    .iter()
                    .max_by(|a, b| a.deviation.total_cmp(&b.deviation))
                    .map(|f| f.std_error)
                    .unwrap_or(f64::NAN);
                (fmt(rep.value), fmt(argmax_se))
            }
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{sur},{sur_se}\n",
            fmt(t),
            fmt(b.first_term),
            fmt(b.a_t),
            fmt(b.b_t),
            fmt(b.value)
        ));
    }
    Ok(RunArtifact {
        csv,
        metadata: meta(
            "ustat",
            "d3_bound",
            Some(seed),
            json!({
                "components": family.len(),
                "t_grid": ts,
                "surrogate_reps": surrogate.map(|s| s.reps),
                "surrogate_qmc_nodes": surrogate.map(|s| s.qmc_nodes),
                "warnings": family.warnings(),
            }),
            t0,
        ),
    })
}

/// Both sides of the tuple-sum/integral exchange identity for one registry
/// functional.
pub fn mecke_table(
    space: &MeasureSpace,
    t: f64,
    functional: &MeckeFunctional,
    reps: usize,
    seed: u64,
) -> Result<RunArtifact> {
    let t0 = Instant::now();
    let rep = poisson::mecke_check(space, t, functional.order(), functional.func(), reps, seed)?;
    let mut csv =
        String::from("functional,order,lhs,lhs_se,rhs,rhs_se,z_score,replications\n");
    csv.push_str(&format!(
        "{},{},{},{},{},{},{},{}\n",
        csv_cell(functional.name()),
        functional.order(),
        fmt(rep.lhs),
        fmt(rep.lhs_se),
        fmt(rep.rhs),
        fmt(rep.rhs_se),
        fmt(rep.z_score),
        rep.replications
    ));
    Ok(RunArtifact {
        csv,
        metadata: meta(
            "poisson",
            "mecke_check",
            Some(seed),
            json!({
                "space": space.name(),
                "t": t,
                "functional": functional.name(),
                "order": functional.order(),
                "replications": reps,
                "z_score": rep.z_score,
            }),
            t0,
        ),
    })
}

/// Which intersection-process experiment to run.
#[derive(Debug, Clone)]
pub enum FlatsExperiment {
    /// Empirical mean of the order-`m` functional vs its closed-form mean.
    Mean { t: f64, reps: usize },
    /// Exact covariance over a `t`-grid against the `t^(2m-1)`-scaled limit.
    Cov { ts: Vec<f64>, outer: usize, inner: usize },
    /// Normality diagnostics of the normalized functional over a `t`-grid.
    Clt { ts: Vec<f64>, reps: usize, mc_samples: usize },
    /// Window-scaling distributional identity over an `r`-grid.
    Scaling { rs: Vec<f64>, reps: usize },
}

/// Intersection-process experiments; `m` is the intersection order.
pub fn flats_table(
    params: &FlatSpaceParams,
    window: &Window,
    psi: &SectionFunctional,
    m: usize,
    experiment: FlatsExperiment,
    seed: u64,
) -> Result<RunArtifact> {
    let t0 = Instant::now();
    psi.validate(params.dim, params.k, m)?;
    let base = json!({
        "dim": params.dim,
        "k": params.k,
        "radius": params.radius,
        "gamma": params.gamma,
        "window_radius": window.radius(),
        "psi": psi_label(psi),
        "m": m,
    });
    match experiment {
        FlatsExperiment::Mean { t, reps } => {
            let draws: Vec<Result<f64>> =
                exec::run_replications(reps, seed, stream::EXPERIMENT, |_, rng| {
                    let fl = flats::sample_flats(params, t, rng)?;
                    flats::zeta(&fl, m, psi, window)
                });
            let values = draws.into_iter().collect::<Result<Vec<f64>>>()?;
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (n - 1.0);
            let se = (var / n).sqrt();
            let (formula, formula_se) = flats::zeta_mean(
                params,
                window,
                psi,
                m,
                t,
                200_000,
                exec::derive_seed(seed, stream::MC_INTEGRAL, 0),
            )?;
            let z = (mean - formula) / se.hypot(formula_se);
            let mut csv = String::from(
                "t,replications,empirical_mean,empirical_se,formula_mean,formula_se,z_score\n",
            );
            csv.push_str(&format!(
                "{},{reps},{},{},{},{},{}\n",
                fmt(t),
                fmt(mean),
                fmt(se),
                fmt(formula),
                fmt(formula_se),
                fmt(z)
            ));
            Ok(RunArtifact {
                csv,
                metadata: meta("flats", "mean", Some(seed), json!({"base": base, "t": t, "replications": reps}), t0),
            })
        }
        FlatsExperiment::Cov { ts, outer, inner } => {
            let limit = flats::intersection_cov_limit(
                params,
                window,
                window,
                psi,
                m,
                outer,
                inner,
                exec::derive_seed(seed, stream::MC_INTEGRAL, u64::MAX),
            )?;
            let mut csv = String::from(
                "t,cov_exact,cov_exact_se,cov_scaled,cov_limit,cov_limit_se,ratio\n",
            );
            for (idx, &t) in ts.iter().enumerate() {
                let exact = flats::intersection_cov_exact(
                    params,
                    t,
                    window,
                    window,
                    psi,
                    m,
                    outer,
                    inner,
                    exec::derive_seed(seed, stream::MC_INTEGRAL, idx as u64),
                )?;
                let scale = t.powi(2 * m as i32 - 1);
                let scaled = exact.value / scale;
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    fmt(t),
                    fmt(exact.value),
                    fmt(exact.std_error),
                    fmt(scaled),
                    fmt(limit.value),
                    fmt(limit.std_error),
                    fmt(scaled / limit.value)
                ));
            }
            Ok(RunArtifact {
                csv,
                metadata: meta("flats", "cov", Some(seed), json!({"base": base, "t_grid": ts, "outer": outer, "inner": inner}), t0),
            })
        }
        FlatsExperiment::Clt { ts, reps, mc_samples } => {
            let space = MeasureSpace::flat_space("flats", params.clone())?;
            let kernel = flats::zeta_kernel(m, *psi, window);
            let scale_c = 1.0 / (1..=m).map(|k| k as f64).product::<f64>();
            let stat = UStatistic::new(kernel, scale_c, 0.0)?;
            let family = NormalizedFamily::build(
                &space,
                vec![stat],
                true,
                Method::MonteCarlo {
                    samples: mc_samples,
                    seed: exec::derive_seed(seed, stream::MC_INTEGRAL, 1),
                },
            )?;
            let inner = clt_table(&family, &ts, reps, seed)?;
            Ok(RunArtifact {
                csv: inner.csv,
                metadata: meta("flats", "clt", Some(seed), json!({"base": base, "t_grid": ts, "replications": reps, "mc_samples": mc_samples}), t0),
            })
        }
        FlatsExperiment::Scaling { rs, reps } => {
            let codim = (params.dim - params.k) as f64;
            let mut csv = String::from("r,t,alpha,ks_statistic,p_value,replications\n");
            for (idx, &r) in rs.iter().enumerate() {
                let t = r.powf(codim);
                let rep = flats::scaling_check(
                    params,
                    window,
                    psi,
                    m,
                    t,
                    reps,
                    exec::derive_seed(seed, stream::EXPERIMENT, idx as u64),
                )?;
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    fmt(rep.r),
                    fmt(t),
                    fmt(rep.alpha),
                    fmt(rep.ks.statistic),
                    fmt(rep.ks.p_value),
                    rep.replications
                ));
            }
            Ok(RunArtifact {
                csv,
                metadata: meta("flats", "scaling", Some(seed), json!({"base": base, "r_grid": rs, "replications": reps}), t0),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    #[test]
    fn partition_counts_in_csv() {
        let art = partitions_table(&[2, 2, 2], PartitionClass::Ge2, true).unwrap();
        assert!(art.csv.ends_with("2;2;2,ge2,12\n"), "{}", art.csv);
        let listing = partitions_table(&[2, 2], PartitionClass::Ge2, false).unwrap();
        assert_eq!(listing.csv.lines().count(), 3, "{}", listing.csv);
        assert!(listing.csv.contains("\"{1,3}{2,4}\""), "{}", listing.csv);
    }

    #[test]
    fn moment_table_totals_match_module() {
        let sp = registry::parse_space("atoms:1").unwrap();
        let f = registry::parse_kernel("const:2:1").unwrap();
        let art =
            moment_table(&sp, 1.0, &[f.clone(), f], Method::Exact, false).unwrap();
        // E I_2(1)^2 = 2 at t = 1 on a unit-mass space
        let total = art.csv.lines().last().unwrap();
        assert!(total.starts_with("total,,,2.0000000000000000e0,"), "{total}");
    }

    #[test]
    fn csv_bytes_do_not_depend_on_worker_count() {
        let sp = registry::parse_space("atoms:1").unwrap();
        let f = registry::parse_kernel("const:2:1").unwrap();
        let stat = UStatistic::plain(f).unwrap();
        let fam =
            NormalizedFamily::build(&sp, vec![stat.clone()], true, Method::Exact)
                .unwrap();
        let job = || -> (String, String, String) {
            let a = simulate_table(&sp, &stat, 3.0, 200, 11).unwrap().csv;
            let b = clt_table(&fam, &[4.0, 9.0], 400, 5).unwrap().csv;
            let c = bound_table(
                &fam,
                &[4.0, 9.0],
                Some(SurrogateOpts { reps: 200, qmc_nodes: 512 }),
                5,
            )
            .unwrap()
            .csv;
            (a, b, c)
        };
        let one = exec::with_worker_count(Some(1), job);
        let four = exec::with_worker_count(Some(4), job);
        assert_eq!(one, four);
    }

    #[test]
    fn mecke_table_reports_small_z() {
        let sp = registry::parse_space("box:0,1").unwrap();
        let h = registry::parse_mecke("pair-count").unwrap();
        let art = mecke_table(&sp, 2.0, &h, 4000, 3).unwrap();
        let z: f64 = art
            .csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(6)
            .unwrap()
            .parse()
            .unwrap();
        assert!(z.abs() < 4.0, "z = {z}\n{}", art.csv);
    }

    #[test]
    fn flats_mean_experiment_consistent() {
        let params = FlatSpaceParams { dim: 2, k: 1, radius: 1.0, gamma: 1.0 };
        let window = Window::ball(1.0).unwrap();
        let art = flats_table(
            &params,
            &window,
            &SectionFunctional::HausdorffVolume,
            1,
            FlatsExperiment::Mean { t: 3.0, reps: 3000 },
            17,
        )
        .unwrap();
        let z: f64 = art
            .csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .last()
            .unwrap()
            .parse()
            .unwrap();
        assert!(z.abs() < 4.0, "{}", art.csv);
    }
}
