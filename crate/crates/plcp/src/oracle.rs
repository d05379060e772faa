//! Direct Monte Carlo estimates of the quantities the analytic engine
//! computes in closed or integral form, sampled from the point processes
//! themselves.

use plcp_core::coverage::SpilloverGeometry;
use plcp_core::model::SystemParams;
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::estimate::{Estimate, Welford};
use crate::rng::{exponential, poisson, substream, Component};

fn reduce<F: Fn(u64) -> f64 + Sync + Send>(trials: u64, f: F) -> Estimate {
    let samples: Vec<f64> = (0..trials).into_par_iter().map(&f).collect();
    samples.into_iter().collect::<Welford>().estimate()
}

/// Probability that no small cell off the typical road lies within `x`.
pub fn nlos_void(params: &SystemParams, x: f64, trials: u64, seed: u64) -> Estimate {
    reduce(trials, |t| {
        let mut rng = substream(seed, Component::Oracle, 1, t);
        let roads = poisson(&mut rng, 2.0 * PI * params.lambda_r * x);
        let empty = (0..roads).all(|_| {
            let p = x * rng.random::<f64>();
            let chord = 2.0 * (x * x - p * p).sqrt();
            poisson(&mut rng, params.lambda_s * chord) == 0
        });
        if empty {
            1.0
        } else {
            0.0
        }
    })
}

/// `E ∏ ν(|x|)` over the small cells off the typical road within `radius`.
pub fn cox_pgf<F: Fn(f64) -> f64 + Sync>(
    params: &SystemParams,
    nu: F,
    radius: f64,
    trials: u64,
    seed: u64,
) -> Estimate {
    reduce(trials, |t| {
        let mut rng = substream(seed, Component::Oracle, 2, t);
        let roads = poisson(&mut rng, 2.0 * PI * params.lambda_r * radius);
        let mut product = 1.0;
        for _ in 0..roads {
            let p = radius * rng.random::<f64>();
            let half = (radius * radius - p * p).sqrt();
            let n = poisson(&mut rng, 2.0 * half * params.lambda_s);
            for _ in 0..n {
                let s = half * (2.0 * rng.random::<f64>() - 1.0);
                product *= nu((p * p + s * s).sqrt());
            }
        }
        product
    })
}

/// `E ∏ ν(|x|)` for points at density `2λ_S` on a ray of length `reach`
/// leaving a point at distance `d` in a uniform direction.
pub fn line_pgf<F: Fn(f64) -> f64 + Sync>(
    params: &SystemParams,
    nu: F,
    d: f64,
    reach: f64,
    trials: u64,
    seed: u64,
) -> Estimate {
    reduce(trials, |t| {
        let mut rng = substream(seed, Component::Oracle, 3, t);
        let c = (2.0 * PI * rng.random::<f64>()).cos();
        let n = poisson(&mut rng, 2.0 * params.lambda_s * reach);
        let mut product = 1.0;
        for _ in 0..n {
            let s = reach * rng.random::<f64>();
            product *= nu((d * d + s * s + 2.0 * s * d * c).max(0.0).sqrt());
        }
        product
    })
}

/// `E ∏ ν(|x|)` for a planar PPP of density `lambda` on the annulus
/// `r_min ≤ |x| < r_max` (finite).
pub fn ppp_annulus<F: Fn(f64) -> f64 + Sync>(
    lambda: f64,
    nu: F,
    r_min: f64,
    r_max: f64,
    trials: u64,
    seed: u64,
) -> Estimate {
    reduce(trials, |t| {
        let mut rng = substream(seed, Component::Oracle, 4, t);
        let n = poisson(&mut rng, PI * lambda * (r_max * r_max - r_min * r_min));
        (0..n)
            .map(|_| {
                let u = rng.random::<f64>();
                nu((r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt())
            })
            .product()
    })
}

/// Spillover probability of the beam-geometry model: the served user sits
/// at `Y ~ Exp(2λ_S)` from its cell, the neighbor lies at `X = 2Y + Exp(λ_S)`,
/// the neighbor's own user must fall in the zone `(d'(X), X/2)` and the next
/// cell beyond must not block the footprint.
pub fn spillover(params: &SystemParams, trials: u64, seed: u64) -> Estimate {
    let g = SpilloverGeometry::new(params);
    let ls = params.lambda_s;
    reduce(trials, |t| {
        let mut rng = substream(seed, Component::Oracle, 5, t);
        let y = exponential(&mut rng) / (2.0 * ls);
        let x = 2.0 * y + exponential(&mut rng) / ls;
        let gap = exponential(&mut rng) / ls;
        if !(x > g.d_star && x < g.d_hat) {
            return 0.0;
        }
        let near = g.d_prime(x);
        if !(near < y) {
            return 0.0;
        }
        if gap < x - g.footprint_edge(y) {
            return 0.0;
        }
        if poisson(&mut rng, params.lambda_ou * (x / 2.0 - near)) == 0 {
            return 0.0;
        }
        1.0
    })
}
