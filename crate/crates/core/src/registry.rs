//! Named constructors for spaces, kernels, window functionals, and Mecke
//! test functionals.
//!
//! The command-line driver refers to everything by a stable string spec so a
//! run is reproducible from its metadata alone. User-defined kernels enter
//! through the library API; the registry is a fixed table.
//!
//! Spec grammar (all parsers reject unknown heads with the list of valid
//! ones):
//!
//! ```text
//! space   atoms:m1,m2,...        finite atomic, the given masses
//!         box:lo,hi;lo,hi;...    uniform product box, one lo,hi pair per axis
//!         flats:d:k:R:gamma      k-flats in R^d hitting the ball of radius R
//! kernel  const:m:c              constant c in m arguments
//!         pair-dist:r            indicator of |x - y| <= r
//!         pair-gauss:w           exp(-w |x - y|^2)
//!         coord-prod:m           product of first coordinates
//!         index-pow:m:p          product of (atom index + 1)^p
//!         table1:v0,v1,...       per-atom values
//!         table2:v00,v01,...     symmetric atom matrix, row-major
//! psi     indicator | hausdorff | chordpower:beta
//! window  ball:R  (or ball:0,...,0:R; only centered balls exist)
//! mecke   count-cap:c | coord-sum | crowding:r | pair-prod | pair-count
//! method  exact | quadrature | mc:samples | auto:samples
//! ```

use crate::error::{Error, Result};
use crate::flats::{SectionFunctional, Window};
use crate::measure::{Kernel, MeasureSpace, Method, Point};
use crate::poisson::PointConfiguration;
use std::sync::Arc;

fn nums(csv: &str, what: &str) -> Result<Vec<f64>> {
    csv.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("bad {what} number {s:?}")))
        })
        .collect()
}

/// Builds a measure space from its string spec.
pub fn parse_space(spec: &str) -> Result<MeasureSpace> {
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "atoms" => MeasureSpace::finite_atomic(spec, nums(rest, "mass")?),
        "box" => {
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for axis in rest.split(';') {
                let ends = nums(axis, "box endpoint")?;
                if ends.len() != 2 {
                    return Err(Error::Input(format!(
                        "axis {axis:?} needs exactly lo,hi"
                    )));
                }
                lo.push(ends[0]);
                hi.push(ends[1]);
            }
            MeasureSpace::unit_box(spec, lo, hi)
        }
        "flats" => {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 4 {
                return Err(Error::Input("flats spec is flats:d:k:R:gamma".into()));
            }
            let dim: usize = parts[0]
                .parse()
                .map_err(|_| Error::Input("bad flat dimension".into()))?;
            let k: usize =
                parts[1].parse().map_err(|_| Error::Input("bad flat k".into()))?;
            let radius: f64 = parts[2]
                .parse()
                .map_err(|_| Error::Input("bad flat radius".into()))?;
            let gamma: f64 = parts[3]
                .parse()
                .map_err(|_| Error::Input("bad flat intensity".into()))?;
            MeasureSpace::flat_space(
                spec,
                crate::measure::FlatSpaceParams { dim, k, radius, gamma },
            )
        }
        _ => Err(Error::Input(format!(
            "unknown space {head:?}; expected atoms | box | flats"
        ))),
    }
}

fn euclid2(a: &Point, b: &Point) -> f64 {
    let (xa, xb) = (a.coords(), b.coords());
    match (xa, xb) {
        (Some(xa), Some(xb)) => {
            xa.iter().zip(xb).map(|(u, v)| (u - v) * (u - v)).sum()
        }
        _ => f64::NAN,
    }
}

/// Builds a kernel from its string spec.
pub fn parse_kernel(spec: &str) -> Result<Kernel> {
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "const" => {
            let (m, c) = rest
                .split_once(':')
                .ok_or_else(|| Error::Input("const spec is const:m:c".into()))?;
            let m: usize =
                m.parse().map_err(|_| Error::Input("bad const arity".into()))?;
            let c: f64 =
                c.parse().map_err(|_| Error::Input("bad const value".into()))?;
            if m == 0 {
                return Err(Error::Input("kernel arity must be positive".into()));
            }
            Ok(Kernel::constant(m, c))
        }
        "pair-dist" => {
            let r: f64 = rest
                .parse()
                .map_err(|_| Error::Input("bad pair-dist radius".into()))?;
            if !(r > 0.0) {
                return Err(Error::Input("pair-dist radius must be positive".into()));
            }
            Ok(Kernel::new(spec, 2, true, move |p: &[Point]| {
                if euclid2(&p[0], &p[1]) <= r * r {
                    1.0
                } else {
                    0.0
                }
            }))
        }
        "pair-gauss" => {
            let w: f64 = rest
                .parse()
                .map_err(|_| Error::Input("bad pair-gauss weight".into()))?;
            if !(w >= 0.0) {
                return Err(Error::Input("pair-gauss weight must be nonnegative".into()));
            }
            Ok(Kernel::new(spec, 2, true, move |p: &[Point]| {
                (-w * euclid2(&p[0], &p[1])).exp()
            }))
        }
        "coord-prod" => {
            let m: usize =
                rest.parse().map_err(|_| Error::Input("bad coord-prod arity".into()))?;
            if m == 0 {
                return Err(Error::Input("kernel arity must be positive".into()));
            }
            Ok(Kernel::new(spec, m, true, |p: &[Point]| {
                p.iter()
                    .map(|x| x.coords().and_then(|c| c.first().copied()).unwrap_or(f64::NAN))
                    .product()
            }))
        }
        "index-pow" => {
            let (m, pw) = rest
                .split_once(':')
                .ok_or_else(|| Error::Input("index-pow spec is index-pow:m:p".into()))?;
            let m: usize =
                m.parse().map_err(|_| Error::Input("bad index-pow arity".into()))?;
            let pw: f64 =
                pw.parse().map_err(|_| Error::Input("bad index-pow power".into()))?;
            if m == 0 {
                return Err(Error::Input("kernel arity must be positive".into()));
            }
            Ok(Kernel::new(spec, m, true, move |p: &[Point]| {
                p.iter()
                    .map(|x| match x.atom() {
                        Some(i) => ((i + 1) as f64).powf(pw),
                        None => f64::NAN,
                    })
                    .product()
            }))
        }
        "table1" => {
            let vals = nums(rest, "table")?;
            if vals.is_empty() {
                return Err(Error::Input("table1 needs values".into()));
            }
            Ok(Kernel::new(spec, 1, true, move |p: &[Point]| {
                match p[0].atom() {
                    Some(i) if i < vals.len() => vals[i],
                    _ => f64::NAN,
                }
            }))
        }
        "table2" => {
            let vals = nums(rest, "table")?;
            let k = (vals.len() as f64).sqrt().round() as usize;
            if k * k != vals.len() || k == 0 {
                return Err(Error::Input("table2 needs a square value matrix".into()));
            }
            for i in 0..k {
                for j in 0..i {
                    if (vals[i * k + j] - vals[j * k + i]).abs() > 1e-12 {
                        return Err(Error::Input("table2 matrix must be symmetric".into()));
                    }
                }
            }
            Ok(Kernel::new(spec, 2, true, move |p: &[Point]| {
                match (p[0].atom(), p[1].atom()) {
                    (Some(i), Some(j)) if i < k && j < k => vals[i * k + j],
                    _ => f64::NAN,
                }
            }))
        }
        _ => Err(Error::Input(format!(
            "unknown kernel {head:?}; expected const | pair-dist | pair-gauss | \
             coord-prod | index-pow | table1 | table2"
        ))),
    }
}

/// Section functional from its string spec.
pub fn parse_psi(spec: &str) -> Result<SectionFunctional> {
    match spec.split_once(':') {
        None => match spec {
            "indicator" => Ok(SectionFunctional::Indicator),
            "hausdorff" => Ok(SectionFunctional::HausdorffVolume),
            _ => Err(Error::Input(format!(
                "unknown functional {spec:?}; expected indicator | hausdorff | chordpower:beta"
            ))),
        },
        Some(("chordpower", beta)) => {
            let beta: f64 =
                beta.parse().map_err(|_| Error::Input("bad chord exponent".into()))?;
            Ok(SectionFunctional::ChordPower { beta })
        }
        Some((head, _)) => Err(Error::Input(format!(
            "unknown functional {head:?}; expected indicator | hausdorff | chordpower:beta"
        ))),
    }
}

/// Window from its string spec; only centered balls exist, so a center, if
/// given, must be the origin.
pub fn parse_window(spec: &str) -> Result<Window> {
    let Some(("ball", rest)) = spec.split_once(':') else {
        return Err(Error::Input(format!("unknown window {spec:?}; expected ball:R")));
    };
    let parts: Vec<&str> = rest.split(':').collect();
    let radius_str = parts.last().copied().unwrap_or("");
    let radius: f64 = radius_str
        .parse()
        .map_err(|_| Error::Input(format!("bad window radius {radius_str:?}")))?;
    if parts.len() == 2 {
        let center = nums(parts[0], "window center")?;
        if center.iter().any(|&c| c != 0.0) {
            return Err(Error::Input(
                "windows are centered balls; give a zero center or just ball:R".into(),
            ));
        }
    } else if parts.len() > 2 {
        return Err(Error::Input("window spec is ball:R or ball:center:R".into()));
    }
    Window::ball(radius)
}

/// Integration method from its string spec; `seed` feeds the sampling
/// variants.
pub fn parse_method(spec: &str, seed: u64) -> Result<Method> {
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let samples = || -> Result<usize> {
        if rest.is_empty() {
            Ok(200_000)
        } else {
            rest.parse()
                .map_err(|_| Error::Input(format!("bad sample count {rest:?}")))
        }
    };
    match head {
        "exact" => Ok(Method::Exact),
        "quadrature" => Ok(Method::Quadrature),
        "mc" => Ok(Method::MonteCarlo { samples: samples()?, seed }),
        "auto" => Ok(Method::Auto { samples: samples()?, seed }),
        _ => Err(Error::Input(format!(
            "unknown method {head:?}; expected exact | quadrature | mc[:n] | auto[:n]"
        ))),
    }
}

/// A named functional of (tuple of points, configuration) for identity
/// checks that exchange summation over process tuples with integration.
#[derive(Clone)]
pub struct MeckeFunctional {
    name: String,
    m: usize,
    g: Arc<dyn Fn(&[Point], &PointConfiguration) -> f64 + Send + Sync>,
}

impl MeckeFunctional {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn eval(&self, xs: &[Point], config: &PointConfiguration) -> f64 {
        (self.g)(xs, config)
    }

    pub fn func(
        &self,
    ) -> &(dyn Fn(&[Point], &PointConfiguration) -> f64 + Send + Sync) {
        &*self.g
    }
}

/// Builds a Mecke test functional from its string spec.
pub fn parse_mecke(spec: &str) -> Result<MeckeFunctional> {
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mk = |m: usize,
              g: Arc<dyn Fn(&[Point], &PointConfiguration) -> f64 + Send + Sync>| {
        MeckeFunctional { name: spec.to_string(), m, g }
    };
    match head {
        // depends on the configuration only: couples the tuple count to a
        // bounded function of the total count
        "count-cap" => {
            let cap: f64 =
                rest.parse().map_err(|_| Error::Input("bad count cap".into()))?;
            Ok(mk(1, Arc::new(move |_, c| (c.len() as f64).min(cap))))
        }
        // depends on the tuple only
        "coord-sum" => Ok(mk(
            1,
            Arc::new(|xs: &[Point], _| {
                xs.iter()
                    .map(|x| x.coords().and_then(|c| c.first().copied()).unwrap_or(f64::NAN))
                    .sum()
            }),
        )),
        // genuinely couples tuple and configuration
        "crowding" => {
            let r: f64 =
                rest.parse().map_err(|_| Error::Input("bad crowding radius".into()))?;
            if !(r > 0.0) {
                return Err(Error::Input("crowding radius must be positive".into()));
            }
            Ok(mk(
                1,
                Arc::new(move |xs: &[Point], c: &PointConfiguration| {
                    c.points()
                        .iter()
                        .filter(|y| euclid2(&xs[0], y) <= r * r)
                        .count() as f64
                }),
            ))
        }
        "pair-prod" => Ok(mk(
            2,
            Arc::new(|xs: &[Point], _| {
                xs.iter()
                    .map(|x| x.coords().and_then(|c| c.first().copied()).unwrap_or(f64::NAN))
                    .product()
            }),
        )),
        "pair-count" => Ok(mk(2, Arc::new(|_, _| 1.0))),
        _ => Err(Error::Input(format!(
            "unknown identity functional {head:?}; expected count-cap | coord-sum | \
             crowding | pair-prod | pair-count"
        ))),
    }
}
