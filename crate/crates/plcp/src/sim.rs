//! Monte Carlo simulator of the road-deployed network.
//!
//! A trial samples every base station inside a disc around the typical user,
//! associates by strongest mean micro-wave power, applies the RAT rule on the
//! user's own road and evaluates the SINR under each interference model.

use plcp_core::coverage::RatRule;
use plcp_core::model::{LinkClass, ModelError, Rat, SystemParams};
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::rng::{exponential, poisson, substream, unit_gamma, Component};

/// A road in normal form: the foot of the perpendicular from the origin is
/// at `p (cos φ, sin φ)` and the road runs along `(-sin φ, cos φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Road {
    pub p: f64,
    pub phi: f64,
}

impl Road {
    pub fn point(&self, t: f64) -> [f64; 2] {
        let (s, c) = self.phi.sin_cos();
        [self.p * c - t * s, self.p * s + t * c]
    }

    /// Half-length of the chord cut by the disc of radius `radius`.
    pub fn half_chord(&self, radius: f64) -> f64 {
        (radius * radius - self.p * self.p).max(0.0).sqrt()
    }
}

/// A small cell on a road other than the typical user's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallCell {
    pub road: usize,
    pub distance: f64,
}

/// Everything sampled in one trial. `roads[0]` is the typical user's road,
/// which passes through the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub window_radius: f64,
    pub roads: Vec<Road>,
    /// Positions along the typical road, sorted.
    pub typical_cells: Vec<f64>,
    pub other_cells: Vec<SmallCell>,
    /// Distances of the macro cells from the origin, in sampling order.
    pub macro_cells: Vec<f64>,
}

impl NetworkRealization {
    pub fn is_empty(&self) -> bool {
        self.typical_cells.is_empty() && self.other_cells.is_empty() && self.macro_cells.is_empty()
    }

    fn nearest_typical(&self) -> Option<usize> {
        argmin(self.typical_cells.iter().map(|t| t.abs()))
    }

    fn nearest_other(&self) -> Option<usize> {
        argmin(self.other_cells.iter().map(|c| c.distance))
    }

    fn nearest_macro(&self) -> Option<usize> {
        argmin(self.macro_cells.iter().copied())
    }
}

fn argmin<I: Iterator<Item = f64>>(values: I) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Server {
    Macro(usize),
    Typical(usize),
    Other(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Association {
    pub class: LinkClass,
    pub distance: f64,
    pub server: Server,
}

/// Interference seen by a mm-wave user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferenceModel {
    /// Every other cell on the user's road whose beam footprint covers it.
    Full,
    /// Only the nearest cell on the opposite side, when its beam spills over.
    Dominant,
    NoiseLimited,
}

impl InterferenceModel {
    pub const ALL: [InterferenceModel; 3] = [Self::Full, Self::Dominant, Self::NoiseLimited];

    pub fn label(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Dominant => "dominant",
            Self::NoiseLimited => "noise_limited",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmSinr {
    pub full: f64,
    pub dominant: f64,
    pub noise_limited: f64,
    /// Whether the dominant neighbor's beam covered the user.
    pub dominant_hit: bool,
}

/// What one trial records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub class: LinkClass,
    pub distance: f64,
    /// SINR of the micro-wave link, when the user is served over micro-wave.
    pub mu_sinr: Option<f64>,
    /// SINR of the mm-wave link, when the user is served over mm-wave.
    pub mm_sinr: Option<MmSinr>,
    pub nearest_typical: Option<f64>,
    pub nearest_other: Option<f64>,
    pub nearest_macro: Option<f64>,
    /// RAT the nearest cell on the user's road would use, whoever serves.
    pub nearest_typical_rat: Option<Rat>,
    /// Number of empty windows redrawn before this trial.
    pub resamples: u32,
}

impl TrialOutcome {
    /// SINR of the serving link; `model` only affects mm-wave links.
    pub fn sinr(&self, model: InterferenceModel) -> f64 {
        match (self.mu_sinr, self.mm_sinr) {
            (Some(s), _) => s,
            (None, Some(mm)) => match model {
                InterferenceModel::Full => mm.full,
                InterferenceModel::Dominant => mm.dominant,
                InterferenceModel::NoiseLimited => mm.noise_limited,
            },
            (None, None) => 0.0,
        }
    }
}

const MAX_RESAMPLES: u32 = 64;

#[derive(Debug, Clone)]
pub struct Simulator {
    params: SystemParams,
    seed: u64,
    window_radius: f64,
    rule: RatRule,
}

impl Simulator {
    pub fn new(params: &SystemParams, seed: u64) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Simulator { params: *params, seed, window_radius: default_window(params), rule: RatRule::new(params) })
    }

    pub fn with_window(mut self, radius: f64) -> Self {
        self.window_radius = radius;
        self
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn window_radius(&self) -> f64 {
        self.window_radius
    }

    /// Sample the network of one trial. `attempt` selects an independent
    /// redraw of the same trial.
    pub fn realization(&self, trial: u64, attempt: u32) -> NetworkRealization {
        let p = &self.params;
        let r = self.window_radius;
        let key = |k: u64| k ^ ((attempt as u64) << 48);

        let mut rng = substream(self.seed, Component::Roads, key(0), trial);
        let typical_phi = PI * rng.random::<f64>();
        let mut roads = vec![Road { p: 0.0, phi: typical_phi }];
        let n_roads = poisson(&mut rng, 2.0 * PI * p.lambda_r * r);
        for _ in 0..n_roads {
            let dist = r * rng.random::<f64>();
            let phi = 2.0 * PI * rng.random::<f64>();
            roads.push(Road { p: dist, phi });
        }

        let mut typical_cells = Vec::new();
        let mut other_cells = Vec::new();
        for (i, road) in roads.iter().enumerate() {
            let mut rng = substream(self.seed, Component::RoadCells, key(i as u64), trial);
            let half = road.half_chord(r);
            let n = poisson(&mut rng, 2.0 * half * p.lambda_s);
            for _ in 0..n {
                let t = half * (2.0 * rng.random::<f64>() - 1.0);
                if i == 0 {
                    typical_cells.push(t);
                } else {
                    let [x, y] = road.point(t);
                    other_cells.push(SmallCell { road: i, distance: x.hypot(y) });
                }
            }
        }
        typical_cells.sort_by(f64::total_cmp);

        let mut rng = substream(self.seed, Component::MacroCells, key(0), trial);
        let n_macro = poisson(&mut rng, PI * r * r * p.lambda_m);
        let macro_cells = (0..n_macro).map(|_| r * rng.random::<f64>().sqrt()).collect();

        NetworkRealization { window_radius: r, roads, typical_cells, other_cells, macro_cells }
    }

    fn mu_power(&self, class: LinkClass, d: f64) -> f64 {
        self.params.power_at_unit_distance(class) * d.max(1e-9).powf(-self.params.alpha[class])
    }

    fn macro_class(&self, d: f64) -> LinkClass {
        if d < self.params.d_m {
            LinkClass::ML
        } else {
            LinkClass::MN
        }
    }

    /// Strongest mean micro-wave power wins; a cell on the user's road then
    /// picks its RAT by distance.
    pub fn associate(&self, net: &NetworkRealization) -> Option<Association> {
        let mut best: Option<(f64, Association)> = None;
        let mut offer = |power: f64, assoc: Association| {
            if best.is_none_or(|(b, _)| power > b) {
                best = Some((power, assoc));
            }
        };
        if let Some(i) = net.nearest_macro() {
            let d = net.macro_cells[i];
            let class = self.macro_class(d);
            offer(self.mu_power(class, d), Association { class, distance: d, server: Server::Macro(i) });
        }
        if let Some(i) = net.nearest_typical() {
            let d = net.typical_cells[i].abs();
            let class = LinkClass::SL_MU;
            offer(self.mu_power(class, d), Association { class, distance: d, server: Server::Typical(i) });
        }
        if let Some(i) = net.nearest_other() {
            let d = net.other_cells[i].distance;
            let class = LinkClass::SN;
            offer(self.mu_power(class, d), Association { class, distance: d, server: Server::Other(i) });
        }
        let (_, mut assoc) = best?;
        if assoc.class == LinkClass::SL_MU && self.rule.rat_at(assoc.distance) == Rat::MmWave {
            assoc.class = LinkClass::SL_MM;
        }
        Some(assoc)
    }

    /// Micro-wave SINR with Rayleigh fading on every link; every cell other
    /// than the server interferes.
    pub fn mu_sinr(&self, net: &NetworkRealization, assoc: &Association, trial: u64) -> f64 {
        let mut signal = 0.0;
        let mut interference = 0.0;
        let mut add = |power: f64, is_server: bool| {
            if is_server {
                signal = power;
            } else {
                interference += power;
            }
        };
        let mut rng = substream(self.seed, Component::MacroFading, 0, trial);
        for (i, &d) in net.macro_cells.iter().enumerate() {
            let fade = exponential(&mut rng);
            add(fade * self.mu_power(self.macro_class(d), d), assoc.server == Server::Macro(i));
        }
        let mut rng = substream(self.seed, Component::RoadFading, 0, trial);
        for (i, &t) in net.typical_cells.iter().enumerate() {
            let fade = exponential(&mut rng);
            add(fade * self.mu_power(LinkClass::SL_MU, t.abs()), assoc.server == Server::Typical(i));
        }
        // Each road has its own fading stream so that adding roads leaves the
        // fades of existing cells unchanged.
        let mut current_road = usize::MAX;
        for (i, cell) in net.other_cells.iter().enumerate() {
            if cell.road != current_road {
                current_road = cell.road;
                rng = substream(self.seed, Component::RoadFading, cell.road as u64, trial);
            }
            let fade = exponential(&mut rng);
            add(fade * self.mu_power(LinkClass::SN, cell.distance), assoc.server == Server::Other(i));
        }
        signal / (interference + self.params.noise_mu)
    }

    /// mm-wave SINR of a user served by typical-road cell `server` under
    /// every interference model. Each cell beams to one user drawn uniformly
    /// in its cell on the road, if it has any.
    pub fn mm_sinr(&self, net: &NetworkRealization, server: usize, trial: u64) -> MmSinr {
        let p = &self.params;
        let cells = &net.typical_cells;
        let m = p.nakagami_m;
        let unit = p.power_at_unit_distance(LinkClass::SL_MM);
        let power = |t: f64| unit * t.abs().max(1e-9).powf(-p.alpha.sl_mm);
        let half = net.window_radius;

        let mut fades = substream(self.seed, Component::MmFading, 0, trial);
        let mut users = substream(self.seed, Component::Users, 0, trial);
        let server_t = cells[server];
        let opposite = |t: f64| (t < 0.0) != (server_t < 0.0);
        let dominant = argmin(cells.iter().map(|&t| if opposite(t) { t.abs() } else { f64::INFINITY }))
            .filter(|&j| opposite(cells[j]));

        let mut signal = 0.0;
        let mut full = 0.0;
        let mut dominant_term = 0.0;
        let mut dominant_hit = false;
        for (j, &t) in cells.iter().enumerate() {
            let fade = unit_gamma(&mut fades, m);
            let lo = if j == 0 { -half } else { 0.5 * (cells[j - 1] + t) };
            let hi = if j + 1 == cells.len() { half } else { 0.5 * (t + cells[j + 1]) };
            let n_users = poisson(&mut users, p.lambda_ou * (hi - lo));
            let user = lo + (hi - lo) * users.random::<f64>();
            if j == server {
                signal = fade * power(t);
                continue;
            }
            if n_users == 0 || !beam_covers(p.h, p.theta, user - t, -t) {
                continue;
            }
            let i = fade * power(t);
            full += i;
            if Some(j) == dominant {
                dominant_term = i;
                dominant_hit = true;
            }
        }
        let noise = p.noise_mm;
        MmSinr {
            full: signal / (full + noise),
            dominant: signal / (dominant_term + noise),
            noise_limited: signal / noise,
            dominant_hit,
        }
    }

    /// Sample, associate and evaluate one trial. Empty windows are redrawn.
    pub fn trial(&self, trial: u64) -> TrialOutcome {
        let mut attempt = 0;
        let mut net = self.realization(trial, attempt);
        while net.is_empty() && attempt < MAX_RESAMPLES {
            attempt += 1;
            net = self.realization(trial, attempt);
        }
        let nearest_typical = net.nearest_typical().map(|i| net.typical_cells[i].abs());
        let nearest_other = net.nearest_other().map(|i| net.other_cells[i].distance);
        let nearest_macro = net.nearest_macro().map(|i| net.macro_cells[i]);
        let mut outcome = TrialOutcome {
            class: LinkClass::MN,
            distance: f64::INFINITY,
            mu_sinr: None,
            mm_sinr: None,
            nearest_typical,
            nearest_other,
            nearest_macro,
            nearest_typical_rat: nearest_typical.map(|d| self.rule.rat_at(d)),
            resamples: attempt,
        };
        let Some(assoc) = self.associate(&net) else {
            return outcome;
        };
        outcome.class = assoc.class;
        outcome.distance = assoc.distance;
        match (assoc.class.rat(), assoc.server) {
            (Rat::MmWave, Server::Typical(i)) => outcome.mm_sinr = Some(self.mm_sinr(&net, i, trial)),
            _ => outcome.mu_sinr = Some(self.mu_sinr(&net, &assoc, trial)),
        }
        outcome
    }

    /// Trials `0..trials`, run in parallel and returned in trial order.
    pub fn run(&self, trials: u64) -> Vec<TrialOutcome> {
        (0..trials).into_par_iter().map(|t| self.trial(t)).collect()
    }
}

/// Whether a beam aimed from height `h` at a user `user` along the road
/// (relative to the cell) covers the road point `target`.
pub fn beam_covers(h: f64, theta: f64, user: f64, target: f64) -> bool {
    if user == 0.0 {
        return target.abs() <= h * (theta / 2.0).tan();
    }
    let phi = (user.abs() / h).atan();
    let lo = h * (phi - theta / 2.0).tan();
    let hi = if phi + theta / 2.0 >= FRAC_PI_2 { f64::INFINITY } else { h * (phi + theta / 2.0).tan() };
    let along = if user < 0.0 { -target } else { target };
    lo <= along && along <= hi
}

/// Radius of the sampling disc: large enough for the macro tier, the LOS
/// ball and the small-cell spacing.
pub fn default_window(params: &SystemParams) -> f64 {
    [5.0 / (PI * params.lambda_m).sqrt(), 5.0 * params.d_m, 3000.0, 5.0 / params.lambda_s]
        .into_iter()
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn road_points_lie_on_the_road() {
        let road = Road { p: 3.0, phi: 0.7 };
        let [x, y] = road.point(4.0);
        assert!(((x * x + y * y).sqrt() - 5.0).abs() < 1e-12);
        assert!((x * road.phi.cos() + y * road.phi.sin() - 3.0).abs() < 1e-12);
        assert!((road.half_chord(5.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn beam_footprint_geometry() {
        let h = 10.0;
        let theta = 10f64.to_radians();
        // Beam aimed at a user 20 m ahead covers the aim point, not the cell foot.
        assert!(beam_covers(h, theta, 20.0, 20.0));
        assert!(!beam_covers(h, theta, 20.0, 0.0));
        assert!(!beam_covers(h, theta, 20.0, -20.0));
        let far = h * ((20.0f64 / h).atan() + theta / 2.0).tan();
        assert!(beam_covers(h, theta, 20.0, far - 1e-9));
        assert!(!beam_covers(h, theta, 20.0, far + 1e-9));
        // Mirror image.
        assert!(beam_covers(h, theta, -20.0, -20.0));
        assert!(beam_covers(h, theta, 0.0, 0.5));
    }

    #[test]
    fn trials_are_reproducible_out_of_order() {
        let sim = Simulator::new(&SystemParams::default(), 11).unwrap();
        let all = sim.run(6);
        assert_eq!(all[4], sim.trial(4));
        assert_eq!(all[1], Simulator::new(&SystemParams::default(), 11).unwrap().trial(1));
        assert_ne!(all[1], Simulator::new(&SystemParams::default(), 12).unwrap().trial(1));
    }

    #[test]
    fn adding_roads_keeps_existing_cells() {
        let sparse = SystemParams { lambda_r: 2e-5, ..SystemParams::default() };
        let mut dense = sparse;
        dense.lambda_r = 4e-5;
        let a = Simulator::new(&sparse, 3).unwrap();
        let b = Simulator::new(&dense, 3).unwrap();
        for t in 0..20 {
            let na = a.realization(t, 0);
            let nb = b.realization(t, 0);
            assert_eq!(na.roads[..], nb.roads[..na.roads.len()]);
            assert_eq!(na.typical_cells, nb.typical_cells);
            assert_eq!(na.macro_cells, nb.macro_cells);
            assert!(na.other_cells.iter().all(|c| nb.other_cells.contains(c)));
        }
    }
}
