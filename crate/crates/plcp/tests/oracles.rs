use plcp::oracle;
use plcp_core::coverage::spillover_probability;
use plcp_core::geometry::{cox_pgf, line_pgf, nlos_void_probability, pgf_spec, ppp_pgfl_annulus, KernelMethod};
use plcp_core::model::SystemParams;

const SIGMAS: f64 = 4.0;

#[test]
fn cox_pgf_against_sampling() {
    let p = SystemParams { lambda_r: 5e-5, lambda_s: 0.02, ..SystemParams::default() };
    let nu = |r: f64| 1.0 - (-r / 100.0).exp();
    let exact = cox_pgf(&nu, &p, &pgf_spec()).unwrap();
    let mc = oracle::cox_pgf(&p, nu, 3000.0, 100_000, 1);
    assert!(mc.agrees_with(exact, SIGMAS, 1e-4), "{mc:?} vs {exact}");
    assert!(exact > 0.05 && exact < 0.95, "{exact}");
}

#[test]
fn line_pgf_against_sampling() {
    let p = SystemParams { lambda_s: 0.001, ..SystemParams::default() };
    let nu = |r: f64| r * r / (r * r + 100.0 * 100.0);
    let exact = line_pgf(&nu, 50.0, &p, &pgf_spec()).unwrap();
    let mc = oracle::line_pgf(&p, nu, 50.0, 1e6, 20_000, 2);
    assert!(mc.agrees_with(exact, SIGMAS, 1e-4), "{mc:?} vs {exact}");
}

#[test]
fn planar_pgfl_against_sampling() {
    let nu = |r: f64| r / (r + 200.0);
    let exact = ppp_pgfl_annulus(&nu, 1e-6, 100.0, 2000.0, &pgf_spec()).unwrap();
    let mc = oracle::ppp_annulus(1e-6, nu, 100.0, 2000.0, 100_000, 3);
    assert!(mc.agrees_with(exact, SIGMAS, 1e-4), "{mc:?} vs {exact}");
}

#[test]
fn void_probability_against_sampling() {
    let p = SystemParams { lambda_r: 5e-5, lambda_s: 0.02, ..SystemParams::default() };
    for x in [30.0, 150.0, 400.0] {
        let exact = nlos_void_probability(x, &p, KernelMethod::Auto).unwrap();
        let mc = oracle::nlos_void(&p, x, 100_000, 4);
        assert!(mc.agrees_with(exact, SIGMAS, 1e-4), "x = {x}: {mc:?} vs {exact}");
    }
}

#[test]
fn spillover_against_sampling() {
    let p =
        SystemParams { h: 12.0, theta: 8f64.to_radians(), lambda_s: 0.03, lambda_ou: 0.02, ..SystemParams::default() };
    let exact = spillover_probability(&p).unwrap().probability;
    let mc = oracle::spillover(&p, 400_000, 5);
    assert!(mc.agrees_with(exact, SIGMAS, 1e-5), "{mc:?} vs {exact}");
}

#[test]
fn wide_beam_extends_the_window() {
    let p = SystemParams { theta: 20f64.to_radians(), ..SystemParams::default() };
    assert!(!p.spillover_feasible());
    let exact = spillover_probability(&p).unwrap();
    assert!(!exact.geometry.feasible && exact.geometry.d_hat.is_infinite());
    let mc = oracle::spillover(&p, 400_000, 6);
    assert!(mc.agrees_with(exact.probability, SIGMAS, 1e-5), "{mc:?} vs {}", exact.probability);
}
