//! Counter-based random substreams.
//!
//! Every random quantity of a trial is drawn from a ChaCha8 stream selected
//! by `(seed, component, key)` with the trial index as the stream number, so
//! a trial can be regenerated on its own and in any order. Components keep
//! unrelated draws apart: adding a road changes neither the macro cells nor
//! the small cells on other roads of the same trial.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent families of draws within a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Component {
    Roads = 1,
    RoadCells = 2,
    MacroCells = 3,
    MacroFading = 4,
    RoadFading = 5,
    MmFading = 6,
    Users = 7,
    Oracle = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The stream for `(seed, component, key)` at trial `trial`.
pub fn substream(seed: u64, component: Component, key: u64, trial: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(seed ^ splitmix64(component as u64)) ^ key);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(trial);
    rng
}

/// Uniform on `(0, 1]`, safe under `ln`.
pub fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Unit-mean exponential by inversion.
pub fn exponential<R: Rng>(rng: &mut R) -> f64 {
    -open_unit(rng).ln()
}

/// Unit-mean gamma with integer shape `n`: the mean of `n` exponentials.
pub fn unit_gamma<R: Rng>(rng: &mut R, n: u32) -> f64 {
    (0..n).map(|_| exponential(rng)).sum::<f64>() / n as f64
}

/// Poisson variate by inversion of the CDF at `u`, so that counts are
/// monotone in the mean for a fixed `u`.
pub fn poisson_quantile(mean: f64, u: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    if mean < 30.0 {
        let mut p = (-mean).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf && p > 0.0 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        return k;
    }
    // Start from the mode so that nothing underflows for large means.
    let mode = mean.floor();
    let pmf_mode = (mode * mean.ln() - mean - libm::lgamma(mode + 1.0)).exp();
    let mut cdf_mode = 0.0;
    let mut p = pmf_mode;
    let mut k = mode;
    loop {
        cdf_mode += p;
        if k == 0.0 || p < 1e-18 * cdf_mode {
            break;
        }
        p *= k / mean;
        k -= 1.0;
    }
    let mut k = mode as u64;
    let mut p = pmf_mode;
    let mut cdf = cdf_mode;
    if u <= cdf_mode {
        while k > 0 {
            let below = cdf - p;
            if u > below {
                return k;
            }
            cdf = below;
            p *= k as f64 / mean;
            k -= 1;
        }
        0
    } else {
        loop {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if u <= cdf || p < 1e-300 {
                return k;
            }
        }
    }
}

pub fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    poisson_quantile(mean, rng.random::<f64>())
}
