//! Cross-module checks: simulated laws against exact formulas, independent
//! computation routes against each other, and the string registry against
//! hand-built objects.

use approx::assert_relative_eq;

use poisson_chaos::chaos::{self, wiener_ito};
use poisson_chaos::exec::{run_replications, stream};
use poisson_chaos::flats::{
    intersection_cov_exact, zeta, zeta_kernel, zeta_mean, Flat, SectionFunctional,
    Window,
};
use poisson_chaos::measure::{FlatSpaceParams, Kernel, MeasureSpace, Method, Point};
use poisson_chaos::moments::{self, ChaosSum};
use poisson_chaos::poisson::{mecke_check, sample_poisson};
use poisson_chaos::registry;
use poisson_chaos::ustat::{NormalizedFamily, UStatistic};

fn atoms() -> MeasureSpace {
    MeasureSpace::finite_atomic("two-atoms", vec![0.6, 0.4]).unwrap()
}

fn table1(vals: [f64; 2]) -> Kernel {
    Kernel::new("t1", 1, true, move |p: &[Point]| vals[p[0].atom().unwrap()])
}

fn table2(vals: [[f64; 2]; 2]) -> Kernel {
    Kernel::new("t2", 2, true, move |p: &[Point]| {
        vals[p[0].atom().unwrap()][p[1].atom().unwrap()]
    })
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

// E I_1(g)^2 = t <g, g>, E I_2(h)^2 = 2 t^2 ||h||^2, E I_1 I_2 = 0: the
// partition sums reproduce the isometry, and simulated pathwise integrals
// agree with both within Monte Carlo error.
#[test]
fn simulated_multiple_integrals_obey_the_isometry() {
    let sp = atoms();
    let t = 2.0;
    let g = table1([1.0, -0.5]);
    let h = table2([[0.8, -0.3], [-0.3, 0.5]]);

    let gg = 1.0 * 0.6 + 0.25 * 0.4;
    let hh = 0.64 * 0.36 + 2.0 * 0.09 * 0.24 + 0.25 * 0.16;
    let want_11 = t * gg;
    let want_22 = 2.0 * t * t * hh;

    let m11 = moments::mixed_moment(&sp, t, &[g.clone(), g.clone()], Method::Exact).unwrap();
    let m22 = moments::mixed_moment(&sp, t, &[h.clone(), h.clone()], Method::Exact).unwrap();
    let m12 = moments::mixed_moment(&sp, t, &[g.clone(), h.clone()], Method::Exact).unwrap();
    assert_relative_eq!(m11.value, want_11, epsilon = 1e-12);
    assert_relative_eq!(m22.value, want_22, epsilon = 1e-12);
    assert_eq!(m12.value, 0.0);
    assert!(m12.terms.is_empty());

    let reps = 30_000;
    let draws = run_replications(reps, 0x1507, stream::EXPERIMENT, |_, rng| {
        let cfg = sample_poisson(&sp, t, rng).unwrap();
        let i1 = wiener_ito(&sp, t, &cfg, &g, Method::Exact).unwrap();
        let i2 = wiener_ito(&sp, t, &cfg, &h, Method::Exact).unwrap();
        [i1, i2, i1 * i1, i2 * i2, i1 * i2]
    });
    let col = |k: usize| draws.iter().map(|d| d[k]).collect::<Vec<_>>();
    for (vals, want) in [
        (col(0), 0.0),
        (col(1), 0.0),
        (col(2), want_11),
        (col(3), want_22),
        (col(4), 0.0),
    ] {
        let (m, se) = mean_se(&vals);
        assert!((m - want).abs() <= 4.0 * se, "mean {m} vs {want} (se {se})");
    }
}

// Var of a tuple sum three ways: chaos-kernel norms, the cumulant partition
// sum over the chaos decomposition, and the squared-moment route.
#[test]
fn variance_routes_agree_exactly() {
    let sp = atoms();
    let f = table2([[1.0, 0.4], [0.4, 0.2]]);
    let stat = UStatistic::plain(f.clone()).unwrap();
    let fam =
        NormalizedFamily::build(&sp, vec![stat], false, Method::Exact).unwrap();
    for t in [0.7, 3.0] {
        let var_norms = fam.covariance_exact(t)[(0, 0)];

        let mean = chaos::tuple_sum_mean(&sp, t, &f, Method::Exact).unwrap().value;
        let f1 = chaos::chaos_kernel(&sp, t, &f, 1, Method::Exact).unwrap();
        let f2 = chaos::chaos_kernel(&sp, t, &f, 2, Method::Exact).unwrap();
        let cs = ChaosSum::new(mean, vec![f1, f2]).unwrap();
        let var_cum =
            moments::chaos_sum_cumulant(&sp, t, &[cs.clone(), cs.clone()], Method::Exact)
                .unwrap()
                .value;
        let second =
            moments::chaos_sum_moment(&sp, t, &[cs.clone(), cs], Method::Exact)
                .unwrap()
                .value;

        assert_relative_eq!(var_cum, var_norms, max_relative = 1e-10);
        assert_relative_eq!(second - mean * mean, var_norms, max_relative = 1e-9);
        assert_relative_eq!(fam.mean(0, t), mean, max_relative = 1e-12);
    }
}

#[test]
fn registry_mecke_functionals_satisfy_the_identity() {
    let sp = registry::parse_space("box:0,1;0,1").unwrap();
    let t = 1.5;
    for (spec, seed) in [("count-cap:4", 0x3101u64), ("pair-count", 0x3102)] {
        let g = registry::parse_mecke(spec).unwrap();
        let rep = mecke_check(&sp, t, g.order(), g.func(), 30_000, seed).unwrap();
        assert!(
            rep.z_score.abs() <= 4.0,
            "{spec}: lhs {} rhs {} z {}",
            rep.lhs,
            rep.rhs,
            rep.z_score
        );
    }
}

// The order-m intersection functional is the tuple sum of the section
// kernel with scale 1/m!; its exact variance then matches the dedicated
// shared-flat covariance estimator.
#[test]
fn intersection_family_wires_into_tuple_sums() {
    let params = FlatSpaceParams { dim: 2, k: 1, radius: 1.0, gamma: 1.0 };
    let sp = MeasureSpace::flat_space("lines", params.clone()).unwrap();
    let win = Window::ball(1.0).unwrap();
    let psi = SectionFunctional::Indicator;
    let t = 6.0;

    let kernel = zeta_kernel(2, psi, &win);
    let stat = UStatistic::new(kernel, 0.5, 0.0).unwrap();

    // pathwise: the scaled tuple sum is the subset sum
    let mut rng = poisson_chaos::exec::rng_for(0x4401, stream::SAMPLING, 0);
    let cfg = sample_poisson(&sp, t, &mut rng).unwrap();
    let flats: Vec<Flat> =
        cfg.points().iter().map(Flat::from_point).collect::<Result<_, _>>().unwrap();
    let direct = zeta(&flats, 2, &psi, &win).unwrap();
    let viastat = stat.evaluate(&cfg, t).unwrap();
    assert_relative_eq!(viastat, direct, max_relative = 1e-9, epsilon = 1e-12);

    // distributional: chaos-norm variance against the shared-flat route
    let fam = NormalizedFamily::build(
        &sp,
        vec![stat],
        true,
        Method::MonteCarlo { samples: 150_000, seed: 0x4402 },
    )
    .unwrap();
    let var_family = fam.covariance_exact(t)[(0, 0)];
    let cov = intersection_cov_exact(&params, t, &win, &win, &psi, 2, 6000, 40, 0x4403)
        .unwrap();
    let tol = 4.0 * cov.std_error + 0.04 * cov.value.abs();
    assert!(
        (var_family - cov.value).abs() <= tol,
        "family {var_family} vs shared-flat {} (se {})",
        cov.value,
        cov.std_error
    );

    // mean route: hitting-sample estimate against the family's integral
    let (mz, sz) = zeta_mean(&params, &win, &psi, 2, t, 120_000, 0x4404).unwrap();
    let tol = 4.0 * sz + 0.02 * mz.abs();
    assert!(
        (fam.mean(0, t) - mz).abs() <= tol,
        "family mean {} vs sampled {mz} (se {sz})",
        fam.mean(0, t)
    );
}

#[test]
fn window_statistics_match_closed_forms_across_geometries() {
    let win = Window::ball(1.0).unwrap();
    let t = 3.0;

    // lines in the plane, order 1: mean total chord length is t pi rho^2,
    // mean hit count is t 2 rho
    let p21 = FlatSpaceParams { dim: 2, k: 1, radius: 1.0, gamma: 1.0 };
    let (m, se) =
        zeta_mean(&p21, &win, &SectionFunctional::HausdorffVolume, 1, t, 60_000, 0x5501)
            .unwrap();
    let want = t * std::f64::consts::PI;
    assert!((m - want).abs() <= 4.0 * se, "chord mean {m} vs {want}");
    let (m, se) =
        zeta_mean(&p21, &win, &SectionFunctional::Indicator, 1, t, 60_000, 0x5502).unwrap();
    assert!((m - 2.0 * t).abs() <= 4.0 * se, "hit mean {m} vs {}", 2.0 * t);

    // planes in three-space, order 2: the intersections are lines, so the
    // Hausdorff trace and the first chord power are the same functional
    let p32 = FlatSpaceParams { dim: 3, k: 2, radius: 1.0, gamma: 1.0 };
    let (mh, sh) =
        zeta_mean(&p32, &win, &SectionFunctional::HausdorffVolume, 2, t, 40_000, 0x5503)
            .unwrap();
    let (mc, sc) = zeta_mean(
        &p32,
        &win,
        &SectionFunctional::ChordPower { beta: 1.0 },
        2,
        t,
        40_000,
        0x5504,
    )
    .unwrap();
    assert!(
        (mh - mc).abs() <= 4.0 * (sh + sc),
        "hausdorff {mh} (se {sh}) vs chord {mc} (se {sc})"
    );

    // dimension bookkeeping: chord powers and volumes reject impossible
    // geometries before any sampling happens
    assert!(zeta_mean(&p21, &win, &SectionFunctional::HausdorffVolume, 3, t, 16, 1).is_err());
    assert!(zeta_mean(&p21, &win, &SectionFunctional::ChordPower { beta: 1.0 }, 2, t, 16, 1)
        .is_err());
    assert!(zeta_mean(&p32, &win, &SectionFunctional::ChordPower { beta: 2.0 }, 1, t, 16, 1)
        .is_err());
}

// String specs and hand-built objects drive the same computation.
#[test]
fn registry_equivalents_match_hand_built_objects() {
    let sp_str = registry::parse_space("atoms:0.6,0.4").unwrap();
    let f_str = registry::parse_kernel("table2:1,0.4,0.4,0.2").unwrap();
    let sp = atoms();
    let f = table2([[1.0, 0.4], [0.4, 0.2]]);
    for t in [0.5, 2.0] {
        let a = moments::joint_cumulant(&sp_str, t, &[f_str.clone(), f_str.clone()], Method::Exact)
            .unwrap();
        let b = moments::joint_cumulant(&sp, t, &[f.clone(), f.clone()], Method::Exact).unwrap();
        assert_relative_eq!(a.value, b.value, epsilon = 1e-14);
        assert_eq!(a.terms.len(), b.terms.len());
    }

    let psi = registry::parse_psi("chordpower:1").unwrap();
    assert_eq!(psi, SectionFunctional::ChordPower { beta: 1.0 });
    let w = registry::parse_window("ball:2.5").unwrap();
    assert_eq!(w.radius(), 2.5);
    match registry::parse_method("mc:5000", 9).unwrap() {
        Method::MonteCarlo { samples, seed } => {
            assert_eq!(samples, 5000);
            assert_eq!(seed, 9);
        }
        other => panic!("expected Monte Carlo, got {other:?}"),
    }
}
