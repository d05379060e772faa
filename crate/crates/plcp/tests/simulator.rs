use std::f64::consts::PI;

use plcp::estimate::{self, Welford};
use plcp::sim::{default_window, InterferenceModel, NetworkRealization, Road, Server, Simulator, SmallCell};
use plcp_core::coverage::RatRule;
use plcp_core::geometry::{los_sbs_nearest_cdf, nlos_nearest_cdf, KernelMethod};
use plcp_core::model::{LinkClass, Rat, SystemParams};

const SIGMAS: f64 = 4.0;

fn counts<F: Fn(&NetworkRealization) -> f64>(sim: &Simulator, n: u64, f: F) -> plcp::estimate::Estimate {
    (0..n).map(|t| f(&sim.realization(t, 0))).collect::<Welford>().estimate()
}

#[test]
fn road_count_is_poisson_in_the_perimeter() {
    let p = SystemParams::default();
    let sim = Simulator::new(&p, 11).unwrap();
    let r = sim.window_radius();
    let est = counts(&sim, 4000, |net| (net.roads.len() - 1) as f64);
    let mean = 2.0 * PI * p.lambda_r * r;
    assert!(est.agrees_with(mean, SIGMAS, 0.0), "{est:?} vs {mean}");
    assert!((est.stderr * est.stderr * est.n as f64 / mean - 1.0).abs() < 0.1, "variance of a Poisson count");
}

#[test]
fn own_road_cells_have_linear_density() {
    let p = SystemParams::default();
    let sim = Simulator::new(&p, 12).unwrap();
    let reach = 200.0;
    let est = counts(&sim, 4000, |net| net.typical_cells.iter().filter(|t| t.abs() < reach).count() as f64);
    let mean = 2.0 * p.lambda_s * reach;
    assert!(est.agrees_with(mean, SIGMAS, 0.0), "{est:?} vs {mean}");
}

#[test]
fn off_road_cells_have_planar_density() {
    let p = SystemParams { lambda_r: 5e-5, lambda_s: 0.02, ..SystemParams::default() };
    let sim = Simulator::new(&p, 13).unwrap();
    let reach = 1500.0;
    let est = counts(&sim, 4000, |net| net.other_cells.iter().filter(|c| c.distance < reach).count() as f64);
    let mean = PI * p.lambda_r * p.lambda_s * PI * reach * reach;
    assert!(est.agrees_with(mean, SIGMAS, 0.0), "{est:?} vs {mean}");
}

#[test]
fn macro_cells_have_planar_density() {
    let p = SystemParams::default();
    let sim = Simulator::new(&p, 14).unwrap();
    let reach = 1000.0;
    let est = counts(&sim, 4000, |net| net.macro_cells.iter().filter(|&&d| d < reach).count() as f64);
    let mean = PI * p.lambda_m * reach * reach;
    assert!(est.agrees_with(mean, SIGMAS, 0.0), "{est:?} vs {mean}");
}

#[test]
fn nearest_distances_follow_their_laws() {
    let p = SystemParams { lambda_r: 5e-5, lambda_s: 0.01, ..SystemParams::default() };
    let outcomes = Simulator::new(&p, 15).unwrap().run(20_000);
    for x in [10.0, 50.0, 150.0] {
        let own = estimate::nearest_cdf(&outcomes, x, |o| o.nearest_typical);
        assert!(own.agrees_with(los_sbs_nearest_cdf(x, &p), SIGMAS, 1e-3), "own road at {x}: {own:?}");
    }
    for x in [100.0, 300.0, 600.0] {
        let off = estimate::nearest_cdf(&outcomes, x, |o| o.nearest_other);
        let want = nlos_nearest_cdf(x, &p, KernelMethod::Auto).unwrap();
        assert!(off.agrees_with(want, SIGMAS, 1e-3), "off road at {x}: {off:?} vs {want}");
    }
    for x in [200.0, 500.0, 1000.0] {
        let mac = estimate::nearest_cdf(&outcomes, x, |o| o.nearest_macro);
        let want = 1.0 - (-PI * p.lambda_m * x * x).exp();
        assert!(mac.agrees_with(want, SIGMAS, 1e-3), "macro at {x}: {mac:?} vs {want}");
    }
}

fn hand_built(typical: &[f64], other: &[f64], macros: &[f64]) -> NetworkRealization {
    NetworkRealization {
        window_radius: 5000.0,
        roads: vec![Road { p: 0.0, phi: 0.0 }, Road { p: 1.0, phi: 1.0 }],
        typical_cells: typical.to_vec(),
        other_cells: other.iter().map(|&distance| SmallCell { road: 1, distance }).collect(),
        macro_cells: macros.to_vec(),
    }
}

#[test]
fn association_picks_the_strongest_tier() {
    let p = SystemParams::default();
    let sim = Simulator::new(&p, 1).unwrap();

    let a = sim.associate(&hand_built(&[4000.0], &[], &[10.0])).unwrap();
    assert_eq!((a.class, a.server), (LinkClass::ML, Server::Macro(0)));

    let a = sim.associate(&hand_built(&[], &[], &[4000.0, 300.0])).unwrap();
    assert_eq!((a.class, a.server, a.distance), (LinkClass::MN, Server::Macro(1), 300.0));

    let a = sim.associate(&hand_built(&[-4000.0, 3.0], &[4000.0], &[4000.0])).unwrap();
    let want = if RatRule::new(&p).rat_at(3.0) == Rat::MmWave { LinkClass::SL_MM } else { LinkClass::SL_MU };
    assert_eq!((a.class, a.server), (want, Server::Typical(1)));

    let a = sim.associate(&hand_built(&[4000.0], &[900.0, 2.0], &[4000.0])).unwrap();
    assert_eq!((a.class, a.server), (LinkClass::SN, Server::Other(1)));

    assert!(sim.associate(&hand_built(&[], &[], &[])).is_none());
}

#[test]
fn removing_interference_never_lowers_sinr() {
    let outcomes = Simulator::new(&SystemParams::default(), 16).unwrap().run(5_000);
    let mut seen = 0;
    for o in &outcomes {
        if let Some(mm) = o.mm_sinr {
            seen += 1;
            assert!(mm.dominant >= mm.full && mm.noise_limited >= mm.dominant, "{mm:?}");
            assert_eq!(o.sinr(InterferenceModel::Full), mm.full);
        }
    }
    assert!(seen > 4_000);
}

#[test]
fn trials_are_addressable_and_seeded() {
    let p = SystemParams::default();
    let sim = Simulator::new(&p, 21).unwrap();
    let batch = sim.run(40);
    assert_eq!(sim.trial(37), batch[37]);
    assert_eq!(Simulator::new(&p, 21).unwrap().run(40), batch);
    assert_ne!(Simulator::new(&p, 22).unwrap().run(40), batch);
}

#[test]
fn doubling_the_window_leaves_coverage_unchanged() {
    let p = SystemParams::default();
    let gamma = [-10.0, 0.0, 10.0, 20.0];
    let base = Simulator::new(&p, 31).unwrap();
    let wide = Simulator::new(&p, 32).unwrap().with_window(2.0 * default_window(&p));
    let a = estimate::coverage(&base.run(20_000), &gamma, InterferenceModel::Full);
    let b = estimate::coverage(&wide.run(20_000), &gamma, InterferenceModel::Full);
    for (x, y) in a.overall.iter().zip(&b.overall) {
        let band = SIGMAS * x.stderr.hypot(y.stderr);
        assert!((x.mean - y.mean).abs() <= band.max(1e-3), "{x:?} vs {y:?}");
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let p = SystemParams { lambda_s: -1.0, ..SystemParams::default() };
    assert!(Simulator::new(&p, 1).is_err());
}
