//! Command-line front end over the experiment drivers in the library.
//!
//! Every run emits a CSV table and a JSON metadata sidecar (via `--out`),
//! or prints one of them to stdout. Identical parameters and seed give
//! byte-identical CSV no matter the worker count. Exit codes: 0 success,
//! 2 malformed request, 3 numerical failure (with a diagnostics file).

use clap::{Args, Parser, Subcommand, ValueEnum};
use poisson_chaos::error::Error as CoreError;
use poisson_chaos::measure::{FlatSpaceParams, Method};
use poisson_chaos::runner::{self, FlatsExperiment, RunArtifact, SurrogateOpts};
use poisson_chaos::ustat::{NormalizedFamily, UStatistic};
use poisson_chaos::{exec, registry};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pchaos",
    version,
    about = "Moments, cumulants, and limit diagnostics of Poisson functionals",
    after_help = "Spec strings (see `registry` module docs): spaces \
                  `atoms:1`, `box:0,1`, `flats:2:1:1:1`; kernels `const:2:1`, \
                  `pair-dist:0.2`, `table2:1,2,2,1`; methods `exact`, \
                  `quadrature`, `mc[:n]`, `auto[:n]`."
)]
struct Cli {
    /// Master seed; required by any subcommand that samples.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for replication loops (default: all cores). Results
    /// do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output stem; writes `<out>.csv` and `<out>.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// What to print on stdout when --out is not given.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count or list the partitions of a row layout in one class.
    Partitions {
        /// Row sizes, e.g. 2,2,2.
        #[arg(long, value_delimiter = ',', required = true)]
        layout: Vec<usize>,
        /// nonflat | ge2 | eq2 | connected.
        #[arg(long, default_value = "ge2")]
        class: String,
        /// Print the count only.
        #[arg(long)]
        count: bool,
    },
    /// Mixed moment of multiple stochastic integrals, term by term.
    Moment(MomentArgs),
    /// Joint cumulant of multiple stochastic integrals, term by term.
    Cumulant(MomentArgs),
    /// Draw a statistic repeatedly (one CSV row per replication), or check
    /// the tuple-sum/integral exchange identity with --mecke.
    Simulate {
        /// Space spec, e.g. box:0,1.
        #[arg(long)]
        space: String,
        /// Kernel spec of the tuple-sum statistic.
        #[arg(long, conflicts_with = "mecke")]
        kernel: Option<String>,
        /// Scale prefactor c in g(t) = c t^p.
        #[arg(long, default_value_t = 1.0)]
        scale_c: f64,
        /// Scale exponent p in g(t) = c t^p.
        #[arg(long, default_value_t = 0.0)]
        scale_p: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        /// Identity-check functional spec (count-cap:c | coord-sum |
        /// crowding:r | pair-prod | pair-count) instead of drawing values.
        #[arg(long)]
        mecke: Option<String>,
    },
    /// Normality diagnostics of a normalized family over a t-grid.
    Clt {
        #[command(flatten)]
        family: FamilyArgs,
        /// Intensity grid, e.g. 10,40,160,640.
        #[arg(long, value_delimiter = ',', required = true)]
        t_grid: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
    },
    /// Gaussian-distance bound over a t-grid, optionally with the sampled
    /// surrogate distance next to it.
    Bound {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        t_grid: Vec<f64>,
        /// Replications for the surrogate distance; omit to skip it.
        #[arg(long)]
        surrogate_reps: Option<usize>,
        /// Low-discrepancy nodes for the Gaussian side of the surrogate.
        #[arg(long, default_value_t = 16_384)]
        qmc_nodes: usize,
    },
    /// Intersection-process experiments for a Poisson flat process.
    Flats {
        /// Ambient dimension.
        #[arg(long)]
        d: usize,
        /// Flat dimension, 0 < k < d.
        #[arg(long)]
        k: usize,
        /// Directional intensity factor.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Window spec, e.g. ball:1.5 (only centered balls exist).
        #[arg(long)]
        window: String,
        /// Section functional: indicator | hausdorff | chordpower:beta.
        #[arg(long)]
        psi: String,
        /// Intersection order.
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum)]
        experiment: FlatsKind,
        /// Intensity for the mean experiment.
        #[arg(long)]
        t: Option<f64>,
        /// Intensity grid for cov and clt.
        #[arg(long, value_delimiter = ',')]
        t_grid: Vec<f64>,
        /// Window growth grid for scaling.
        #[arg(long, value_delimiter = ',')]
        r_grid: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        /// Outer Monte Carlo samples for covariance integrals.
        #[arg(long, default_value_t = 20_000)]
        outer: usize,
        /// Inner Monte Carlo samples for covariance integrals.
        #[arg(long, default_value_t = 50)]
        inner: usize,
        /// Monte Carlo samples for chaos-kernel integrals in the clt
        /// experiment.
        #[arg(long, default_value_t = 200_000)]
        mc_samples: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FlatsKind {
    Mean,
    Cov,
    Clt,
    Scaling,
}

#[derive(Args)]
struct MomentArgs {
    /// Space spec, e.g. atoms:1.
    #[arg(long)]
    space: String,
    /// Kernel specs, one per integral (repeat the flag).
    #[arg(long = "kernel", required = true)]
    kernels: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// exact | quadrature | mc[:n] | auto[:n].
    #[arg(long, default_value = "auto")]
    method: String,
}

#[derive(Args)]
struct FamilyArgs {
    /// Space spec shared by the family.
    #[arg(long)]
    space: String,
    /// Kernel specs, one statistic each (repeat the flag).
    #[arg(long = "kernel", required = true)]
    kernels: Vec<String>,
    /// Scale prefactors, aligned with --kernel (default 1).
    #[arg(long = "scale-c")]
    scale_c: Vec<f64>,
    /// Scale exponents, aligned with --kernel (default 0).
    #[arg(long = "scale-p")]
    scale_p: Vec<f64>,
    /// Assert all kernels are pointwise nonnegative; required for the
    /// distance bound on sampling backends.
    #[arg(long)]
    nonnegative: bool,
    /// Integration method for the kernel geometry.
    #[arg(long, default_value = "auto")]
    method: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match exec::with_worker_count(cli.workers, || dispatch(&cli)) {
        Ok((artifact, brief)) => match emit(&cli, &artifact, brief) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("cannot write artifacts: {e}");
                ExitCode::FAILURE
            }
        },
        Err(e) => failure(&cli, &e),
    }
}

/// Schema problems are exit 2; numerical ones exit 3 plus a diagnostics
/// file naming the failed operation.
fn failure(cli: &Cli, e: &CoreError) -> ExitCode {
    let schema = matches!(
        e,
        CoreError::Input(_)
            | CoreError::Constraint(_)
            | CoreError::ArityMismatch { .. }
            | CoreError::SizeLimit { .. }
            | CoreError::UnsupportedMethod { .. }
    );
    if schema {
        eprintln!("invalid request: {e}");
        return ExitCode::from(2);
    }
    let diag_path = cli
        .out
        .as_ref()
        .map(|p| p.with_extension("diag.json"))
        .unwrap_or_else(|| PathBuf::from("pchaos-diagnostics.json"));
    let diag = json!({
        "error": e.to_string(),
        "args": std::env::args().collect::<Vec<String>>(),
        "seed": cli.seed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let wrote = std::fs::write(
        &diag_path,
        serde_json::to_string_pretty(&diag).expect("diagnostics serialize") + "\n",
    );
    match wrote {
        Ok(()) => eprintln!("numerical failure: {e} (diagnostics: {})", diag_path.display()),
        Err(io) => eprintln!("numerical failure: {e} (cannot write diagnostics: {io})"),
    }
    ExitCode::from(3)
}

fn emit(cli: &Cli, artifact: &RunArtifact, brief: Option<String>) -> std::io::Result<()> {
    if let Some(out) = &cli.out {
        std::fs::write(out.with_extension("csv"), &artifact.csv)?;
        std::fs::write(
            out.with_extension("json"),
            serde_json::to_string_pretty(&artifact.metadata)? + "\n",
        )?;
        if let Some(b) = brief {
            println!("{b}");
        }
        return Ok(());
    }
    match cli.format {
        Format::Csv => match brief {
            Some(b) => println!("{b}"),
            None => print!("{}", artifact.csv),
        },
        Format::Json => println!(
            "{}",
            json!({"metadata": artifact.metadata, "csv": artifact.csv})
        ),
    }
    Ok(())
}

fn need_seed(cli: &Cli) -> Result<u64, CoreError> {
    cli.seed
        .ok_or_else(|| CoreError::Input("--seed is required for stochastic runs".into()))
}

/// Seed requirement for integration methods: sampling methods need one,
/// deterministic ones do not.
fn parse_method_with_seed(cli: &Cli, spec: &str) -> Result<Method, CoreError> {
    match spec.split(':').next() {
        Some("mc") | Some("auto") => registry::parse_method(spec, need_seed(cli)?),
        _ => registry::parse_method(spec, 0),
    }
}

fn build_family(cli: &Cli, args: &FamilyArgs) -> Result<NormalizedFamily, CoreError> {
    let space = registry::parse_space(&args.space)?;
    let method = parse_method_with_seed(cli, &args.method)?;
    let mut stats = Vec::with_capacity(args.kernels.len());
    for (i, spec) in args.kernels.iter().enumerate() {
        let kernel = registry::parse_kernel(spec)?;
        let c = args.scale_c.get(i).copied().unwrap_or(1.0);
        let p = args.scale_p.get(i).copied().unwrap_or(0.0);
        stats.push(UStatistic::new(kernel, c, p)?);
    }
    NormalizedFamily::build(&space, stats, args.nonnegative, method)
}

fn dispatch(cli: &Cli) -> Result<(RunArtifact, Option<String>), CoreError> {
    match &cli.cmd {
        Cmd::Partitions { layout, class, count } => {
            let class = runner::parse_class(class)?;
            let art = runner::partitions_table(layout, class, *count)?;
            let brief = if *count {
                art.metadata["parameters"]["count"].as_u64().map(|c| c.to_string())
            } else {
                None
            };
            Ok((art, brief))
        }
        Cmd::Moment(args) | Cmd::Cumulant(args) => {
            let cumulant = matches!(cli.cmd, Cmd::Cumulant(_));
            let space = registry::parse_space(&args.space)?;
            let method = parse_method_with_seed(cli, &args.method)?;
            let kernels = args
                .kernels
                .iter()
                .map(|s| registry::parse_kernel(s))
                .collect::<Result<Vec<_>, _>>()?;
            let art = runner::moment_table(&space, args.t, &kernels, method, cumulant)?;
            Ok((art, None))
        }
        Cmd::Simulate { space, kernel, scale_c, scale_p, t, reps, mecke } => {
            let space = registry::parse_space(space)?;
            let seed = need_seed(cli)?;
            if let Some(spec) = mecke {
                let h = registry::parse_mecke(spec)?;
                return Ok((runner::mecke_table(&space, *t, &h, *reps, seed)?, None));
            }
            let Some(kernel) = kernel else {
                return Err(CoreError::Input(
                    "simulate needs --kernel (or --mecke for the identity check)".into(),
                ));
            };
            let stat = UStatistic::new(registry::parse_kernel(kernel)?, *scale_c, *scale_p)?;
            Ok((runner::simulate_table(&space, &stat, *t, *reps, seed)?, None))
        }
        Cmd::Clt { family, t_grid, reps } => {
            let seed = need_seed(cli)?;
            let fam = build_family(cli, family)?;
            Ok((runner::clt_table(&fam, t_grid, *reps, seed)?, None))
        }
        Cmd::Bound { family, t_grid, surrogate_reps, qmc_nodes } => {
            let fam = build_family(cli, family)?;
            let surrogate = match surrogate_reps {
                None => None,
                Some(reps) => Some(SurrogateOpts { reps: *reps, qmc_nodes: *qmc_nodes }),
            };
            // the bound itself is deterministic; only the surrogate samples
            let seed = if surrogate.is_some() { need_seed(cli)? } else { cli.seed.unwrap_or(0) };
            Ok((runner::bound_table(&fam, t_grid, surrogate, seed)?, None))
        }
        Cmd::Flats {
            d,
            k,
            gamma,
            window,
            psi,
            m,
            experiment,
            t,
            t_grid,
            r_grid,
            reps,
            outer,
            inner,
            mc_samples,
        } => {
            let window = registry::parse_window(window)?;
            let psi = registry::parse_psi(psi)?;
            let params = FlatSpaceParams {
                dim: *d,
                k: *k,
                radius: window.radius(),
                gamma: *gamma,
            };
            let seed = need_seed(cli)?;
            let experiment = match experiment {
                FlatsKind::Mean => FlatsExperiment::Mean {
                    t: t.ok_or_else(|| {
                        CoreError::Input("the mean experiment needs --t".into())
                    })?,
                    reps: *reps,
                },
                FlatsKind::Cov => {
                    if t_grid.is_empty() {
                        return Err(CoreError::Input(
                            "the cov experiment needs --t-grid".into(),
                        ));
                    }
                    FlatsExperiment::Cov { ts: t_grid.clone(), outer: *outer, inner: *inner }
                }
                FlatsKind::Clt => {
                    if t_grid.is_empty() {
                        return Err(CoreError::Input(
                            "the clt experiment needs --t-grid".into(),
                        ));
                    }
                    FlatsExperiment::Clt {
                        ts: t_grid.clone(),
                        reps: *reps,
                        mc_samples: *mc_samples,
                    }
                }
                FlatsKind::Scaling => {
                    if r_grid.is_empty() {
                        return Err(CoreError::Input(
                            "the scaling experiment needs --r-grid".into(),
                        ));
                    }
                    FlatsExperiment::Scaling { rs: r_grid.clone(), reps: *reps }
                }
            };
            Ok((runner::flats_table(&params, &window, &psi, *m, experiment, seed)?, None))
        }
    }
}
