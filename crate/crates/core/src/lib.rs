//! Exact moment and cumulant computation for Poisson functionals, with
//! simulation and central-limit diagnostics at desk scale.
//!
//! The crate is organized bottom-up:
//!
//! * [`partitions`]: non-flat set-partition classes over row layouts, the
//!   combinatorial backbone of the moment formulas.
//! * [`measure`]: state spaces carrying an intensity measure, kernels, and
//!   integration (exact, quadrature, Monte Carlo).
//! * [`poisson`]: Poisson process sampling, factorial-measure sums, and a
//!   Mecke-identity self check.
//! * [`chaos`]: pathwise multiple stochastic integrals and the kernels of
//!   the chaos decomposition of a U-statistic.
//! * [`moments`]: mixed moments and joint cumulants via partition sums, and
//!   the moment/cumulant inversion.
//! * [`ustat`]: normalized U-statistic families, exact covariance, the
//!   third-order smooth-distance error bound, and CLT experiments.
//! * [`flats`]: stationary processes of affine flats, intersection-process
//!   functionals, and their limit covariances.
//! * [`stats`]: summary statistics and hypothesis-test helpers used by the
//!   experiment drivers.
//! * [`exec`]: deterministic seed derivation and replication running, with
//!   an optional data-parallel backend (feature `parallel`, on by default).
//! * [`registry`]: stable string specs for spaces, kernels, and test
//!   functionals, so runs are reproducible from their metadata.
//! * [`runner`]: experiment drivers emitting CSV tables with JSON metadata
//!   sidecars; the command-line front end is a thin wrapper around these.

pub mod chaos;
pub mod error;
pub mod exec;
pub mod flats;
pub mod measure;
pub mod moments;
pub mod partitions;
pub mod poisson;
pub mod registry;
pub mod runner;
pub mod stats;
pub mod ustat;

pub use error::{Error, Result};
