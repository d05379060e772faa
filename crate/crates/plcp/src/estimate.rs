//! Reductions of trial outcomes into estimates with standard errors.
//!
//! Reductions run sequentially over outcomes in trial order, so results do
//! not depend on how the trials were scheduled.

use plcp_core::model::{db_to_linear, LinkClass, PerClass, Rat};
use serde::Serialize;

use crate::sim::{InterferenceModel, TrialOutcome};

/// Running mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        let stderr = if self.n == 0 { f64::NAN } else { (self.variance() / self.n as f64).sqrt() };
        Estimate { mean: if self.n == 0 { f64::NAN } else { self.mean }, stderr, n: self.n }
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut w = Welford::default();
        for x in iter {
            w.push(x);
        }
        w
    }
}

/// A Monte Carlo mean with its standard error over `n` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl Estimate {
    /// Whether `value` lies within `k` standard errors, with `floor` as a
    /// lower bound on the band for estimates with no spread.
    pub fn agrees_with(&self, value: f64, k: f64, floor: f64) -> bool {
        (self.mean - value).abs() <= (k * self.stderr).max(floor)
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Coverage estimates over a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageEstimate {
    pub gamma_db: Vec<f64>,
    pub overall: Vec<Estimate>,
    /// Coverage among trials served by each class.
    pub per_class: PerClass<Vec<Estimate>>,
}

pub fn coverage(outcomes: &[TrialOutcome], gamma_db: &[f64], model: InterferenceModel) -> CoverageEstimate {
    let thresholds: Vec<f64> = gamma_db.iter().map(|&g| db_to_linear(g)).collect();
    let mut overall = vec![Welford::default(); thresholds.len()];
    let mut per_class: PerClass<Vec<Welford>> = PerClass::from_fn(|_| vec![Welford::default(); thresholds.len()]);
    for o in outcomes {
        let sinr = o.sinr(model);
        for (k, &g) in thresholds.iter().enumerate() {
            let hit = indicator(sinr > g);
            overall[k].push(hit);
            per_class[o.class][k].push(hit);
        }
    }
    let finish = |v: &Vec<Welford>| v.iter().map(Welford::estimate).collect::<Vec<_>>();
    CoverageEstimate {
        gamma_db: gamma_db.to_vec(),
        overall: finish(&overall),
        per_class: PerClass::from_fn(|c| finish(&per_class[c])),
    }
}

/// Frequency of each serving class.
pub fn association(outcomes: &[TrialOutcome]) -> PerClass<Estimate> {
    PerClass::from_fn(|c| class_frequency(outcomes, |k| k == c))
}

/// Frequency of serving classes accepted by `pred`.
pub fn class_frequency<P: Fn(LinkClass) -> bool>(outcomes: &[TrialOutcome], pred: P) -> Estimate {
    outcomes.iter().map(|o| indicator(pred(o.class))).collect::<Welford>().estimate()
}

/// Frequency with which the nearest cell on the user's road uses mm-wave.
pub fn nearest_typical_mm(outcomes: &[TrialOutcome]) -> Estimate {
    outcomes
        .iter()
        .filter_map(|o| o.nearest_typical_rat)
        .map(|r| indicator(r == Rat::MmWave))
        .collect::<Welford>()
        .estimate()
}

/// Frequency of mm-wave among users served by a cell on their own road.
pub fn mm_given_typical(outcomes: &[TrialOutcome]) -> Estimate {
    outcomes
        .iter()
        .filter(|o| o.class == LinkClass::SL_MU || o.class == LinkClass::SL_MM)
        .map(|o| indicator(o.class == LinkClass::SL_MM))
        .collect::<Welford>()
        .estimate()
}

/// Frequency with which the dominant neighbor's beam covers a mm-wave user.
pub fn dominant_spillover(outcomes: &[TrialOutcome]) -> Estimate {
    outcomes.iter().filter_map(|o| o.mm_sinr).map(|m| indicator(m.dominant_hit)).collect::<Welford>().estimate()
}

/// Empirical CDF at `x` of a nearest distance chosen by `pick`; trials with
/// no such cell count as beyond `x`.
pub fn nearest_cdf<F: Fn(&TrialOutcome) -> Option<f64>>(outcomes: &[TrialOutcome], x: f64, pick: F) -> Estimate {
    outcomes.iter().map(|o| indicator(pick(o).is_some_and(|d| d <= x))).collect::<Welford>().estimate()
}

/// Paired coverage difference `b - a` at one threshold over trials that share
/// their random numbers.
pub fn paired_difference(a: &[TrialOutcome], b: &[TrialOutcome], gamma_db: f64, model: InterferenceModel) -> Estimate {
    let g = db_to_linear(gamma_db);
    a.iter()
        .zip(b)
        .map(|(x, y)| indicator(y.sinr(model) > g) - indicator(x.sinr(model) > g))
        .collect::<Welford>()
        .estimate()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, 8.0, -3.0, 0.5];
        let w: Welford = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 6.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 5.0;
        assert!((w.mean() - mean).abs() < 1e-14);
        assert!((w.variance() - var).abs() < 1e-12);
        let e = w.estimate();
        assert!((e.stderr - (var / 6.0).sqrt()).abs() < 1e-12);
        assert!(Welford::default().estimate().mean.is_nan());
    }
}
