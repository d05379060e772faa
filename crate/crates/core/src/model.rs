//! Domain types shared by the analytic engine and the simulator: link classes,
//! system parameters, unit conversions and the path-loss / received-power
//! primitives.
//!
//! Everything here is in SI linear units (watts, metres, per-metre and
//! per-square-metre densities). Decibel values only appear at the edges, via
//! [`db_to_linear`] and friends.

use core::fmt;
use core::ops::{Index, IndexMut};

use libm::{log10, pow, tan};

/// Base station tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tier {
    Macro,
    Small,
}

/// Line-of-sight state of a link as seen from the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Visibility {
    Los,
    Nlos,
}

/// Radio access technology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rat {
    MicroWave,
    MmWave,
}

/// A (tier, visibility, RAT) triple.
///
/// Only five combinations are realizable: macro cells never carry mm-wave and
/// mm-wave is only used towards a LOS small cell. The constructor rejects the
/// other three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkClass {
    tier: Tier,
    visibility: Visibility,
    rat: Rat,
}

impl LinkClass {
    pub const ML: LinkClass = LinkClass::raw(Tier::Macro, Visibility::Los, Rat::MicroWave);
    pub const MN: LinkClass = LinkClass::raw(Tier::Macro, Visibility::Nlos, Rat::MicroWave);
    pub const SL_MU: LinkClass = LinkClass::raw(Tier::Small, Visibility::Los, Rat::MicroWave);
    pub const SL_MM: LinkClass = LinkClass::raw(Tier::Small, Visibility::Los, Rat::MmWave);
    pub const SN: LinkClass = LinkClass::raw(Tier::Small, Visibility::Nlos, Rat::MicroWave);

    /// All realizable classes, in a fixed order used for tables and reports.
    pub const ALL: [LinkClass; 5] = [Self::ML, Self::MN, Self::SL_MU, Self::SL_MM, Self::SN];

    /// The four micro-wave classes that take part in tier association.
    pub const MICRO_WAVE: [LinkClass; 4] = [Self::ML, Self::MN, Self::SL_MU, Self::SN];

    const fn raw(tier: Tier, visibility: Visibility, rat: Rat) -> Self {
        LinkClass { tier, visibility, rat }
    }

    pub fn new(tier: Tier, visibility: Visibility, rat: Rat) -> Result<Self, ModelError> {
        match (tier, visibility, rat) {
            (Tier::Macro, _, Rat::MmWave) | (Tier::Small, Visibility::Nlos, Rat::MmWave) => {
                Err(ModelError::InvalidLinkClass { tier, visibility, rat })
            }
            _ => Ok(Self::raw(tier, visibility, rat)),
        }
    }

    pub fn tier(self) -> Tier {
        self.tier
    }

    pub fn visibility(self) -> Visibility {
        self.visibility
    }

    pub fn rat(self) -> Rat {
        self.rat
    }

    /// The same tier and visibility in the micro-wave band.
    pub fn micro_wave(self) -> LinkClass {
        Self::raw(self.tier, self.visibility, Rat::MicroWave)
    }

    fn slot(self) -> usize {
        match (self.tier, self.visibility, self.rat) {
            (Tier::Macro, Visibility::Los, _) => 0,
            (Tier::Macro, Visibility::Nlos, _) => 1,
            (Tier::Small, Visibility::Los, Rat::MicroWave) => 2,
            (Tier::Small, Visibility::Los, Rat::MmWave) => 3,
            (Tier::Small, Visibility::Nlos, _) => 4,
        }
    }

    /// Short stable label (`ML`, `MN`, `SL-mu`, `SL-mm`, `SN`).
    pub fn label(self) -> &'static str {
        ["ML", "MN", "SL-mu", "SL-mm", "SN"][self.slot()]
    }
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One value per realizable [`LinkClass`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerClass<T> {
    pub ml: T,
    pub mn: T,
    pub sl_mu: T,
    pub sl_mm: T,
    pub sn: T,
}

impl<T> PerClass<T> {
    pub fn from_fn<F: FnMut(LinkClass) -> T>(mut f: F) -> Self {
        PerClass {
            ml: f(LinkClass::ML),
            mn: f(LinkClass::MN),
            sl_mu: f(LinkClass::SL_MU),
            sl_mm: f(LinkClass::SL_MM),
            sn: f(LinkClass::SN),
        }
    }
}

impl<T: Copy> PerClass<T> {
    pub fn splat(value: T) -> Self {
        PerClass { ml: value, mn: value, sl_mu: value, sl_mm: value, sn: value }
    }

    pub fn iter(&self) -> impl Iterator<Item = (LinkClass, T)> + '_ {
        LinkClass::ALL.into_iter().map(move |c| (c, self[c]))
    }
}

impl<T> Index<LinkClass> for PerClass<T> {
    type Output = T;

    fn index(&self, class: LinkClass) -> &T {
        match class.slot() {
            0 => &self.ml,
            1 => &self.mn,
            2 => &self.sl_mu,
            3 => &self.sl_mm,
            _ => &self.sn,
        }
    }
}

impl<T> IndexMut<LinkClass> for PerClass<T> {
    fn index_mut(&mut self, class: LinkClass) -> &mut T {
        match class.slot() {
            0 => &mut self.ml,
            1 => &mut self.mn,
            2 => &mut self.sl_mu,
            3 => &mut self.sl_mm,
            _ => &mut self.sn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelError {
    InvalidLinkClass {
        tier: Tier,
        visibility: Visibility,
        rat: Rat,
    },
    NonPositiveDistance(f64),
    /// A parameter violates its constraint.
    Parameter {
        field: &'static str,
        constraint: &'static str,
        value: f64,
    },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidLinkClass { tier, visibility, rat } => {
                write!(f, "unrealizable link class ({tier:?}, {visibility:?}, {rat:?})")
            }
            ModelError::NonPositiveDistance(d) => write!(f, "distance must be positive, got {d}"),
            ModelError::Parameter { field, constraint, value } => {
                write!(f, "parameter `{field}` = {value} violates constraint: {constraint}")
            }
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    pow(10.0, db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * log10(x)
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

/// Thermal noise power in watts for a bandwidth (Hz) and receiver noise figure (dB),
/// using a -174 dBm/Hz noise floor.
pub fn thermal_noise_watts(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_watts(-174.0 + linear_to_db(bandwidth_hz) + noise_figure_db)
}

/// Micro-wave carrier used for the default path-loss intercepts, GHz.
pub const MICRO_WAVE_CARRIER_GHZ: f64 = 2.0;
/// Mm-wave carrier used for the default path-loss intercepts, GHz.
pub const MM_WAVE_CARRIER_GHZ: f64 = 28.0;

/// 1 m intercept (dB loss) of the micro-wave street-level LOS model at `fc_ghz`.
pub fn micro_wave_intercept_db(fc_ghz: f64) -> f64 {
    28.0 + 20.0 * log10(fc_ghz)
}

/// 1 m intercept (dB loss) of the mm-wave street-canyon LOS model at `fc_ghz`.
pub fn mm_wave_intercept_db(fc_ghz: f64) -> f64 {
    32.4 + 20.0 * log10(fc_ghz)
}

/// Every scalar the model needs, in SI linear units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// MBS density, per m².
    pub lambda_m: f64,
    /// Road line-process intensity, per m². The number of roads hitting a disc
    /// of radius `x` is Poisson with mean `2π λ_R x`.
    pub lambda_r: f64,
    /// SBS density along each road, per m.
    pub lambda_s: f64,
    /// Outdoor-user density along each road, per m.
    pub lambda_ou: f64,
    /// MBS LOS-ball radius, m.
    pub d_m: f64,
    pub p_tx_macro: f64,
    pub p_tx_small: f64,
    /// Path-loss coefficient per class (linear, at 1 m).
    pub k: PerClass<f64>,
    /// Path-loss exponent per class.
    pub alpha: PerClass<f64>,
    /// Mm-wave directional antenna gain (linear).
    pub g0: f64,
    /// Mm-wave beamwidth, rad.
    pub theta: f64,
    /// SBS mounting height, m.
    pub h: f64,
    pub noise_mu: f64,
    pub noise_mm: f64,
    /// Nakagami shape of mm-wave power fading.
    pub nakagami_m: u32,
}

impl Default for SystemParams {
    fn default() -> Self {
        let k_mu = db_to_linear(-micro_wave_intercept_db(MICRO_WAVE_CARRIER_GHZ));
        let k_mm = db_to_linear(-mm_wave_intercept_db(MM_WAVE_CARRIER_GHZ));
        SystemParams {
            lambda_m: 1e-6,
            lambda_r: 1e-5,
            lambda_s: 0.1,
            lambda_ou: 0.01,
            d_m: 200.0,
            p_tx_macro: dbm_to_watts(45.0),
            p_tx_small: dbm_to_watts(30.0),
            k: PerClass { ml: k_mu, mn: k_mu, sl_mu: k_mu, sl_mm: k_mm, sn: k_mu },
            alpha: PerClass { ml: 2.0, mn: 4.0, sl_mu: 2.2, sl_mm: 2.1, sn: 4.0 },
            g0: db_to_linear(30.0),
            theta: 10.0_f64.to_radians(),
            h: 10.0,
            noise_mu: thermal_noise_watts(20e6, 7.0),
            noise_mm: thermal_noise_watts(1e9, 7.0),
            nakagami_m: 3,
        }
    }
}

impl SystemParams {
    pub fn tx_power(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Macro => self.p_tx_macro,
            Tier::Small => self.p_tx_small,
        }
    }

    pub fn noise(&self, rat: Rat) -> f64 {
        match rat {
            Rat::MicroWave => self.noise_mu,
            Rat::MmWave => self.noise_mm,
        }
    }

    /// Transmit power times path-loss coefficient times antenna gain: the
    /// received power at 1 m.
    pub fn power_at_unit_distance(&self, class: LinkClass) -> f64 {
        let gain = match class.rat() {
            Rat::MicroWave => 1.0,
            Rat::MmWave => self.g0,
        };
        gain * self.tx_power(class.tier()) * self.k[class]
    }

    /// Whether the LOS-ball construction meets the geometric condition under
    /// which the closed-form spillover window is real (`tan(θ/2) ≤ 1/8`).
    pub fn spillover_feasible(&self) -> bool {
        tan(self.theta / 2.0) <= 0.125
    }

    /// Check every documented constraint; returns the first violation.
    pub fn validate(&self) -> Result<(), ModelError> {
        fn positive(field: &'static str, value: f64) -> Result<(), ModelError> {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(ModelError::Parameter { field, constraint: "must be finite and > 0", value })
            }
        }
        positive("lambda_m", self.lambda_m)?;
        positive("lambda_r", self.lambda_r)?;
        positive("lambda_s", self.lambda_s)?;
        positive("lambda_ou", self.lambda_ou)?;
        positive("d_m", self.d_m)?;
        positive("p_tx_macro", self.p_tx_macro)?;
        positive("p_tx_small", self.p_tx_small)?;
        for (class, k) in self.k.iter() {
            positive(k_field(class), k)?;
        }
        positive("g0", self.g0)?;
        positive("h", self.h)?;
        positive("noise_mu", self.noise_mu)?;
        positive("noise_mm", self.noise_mm)?;
        if !(self.theta > 0.0 && self.theta < core::f64::consts::PI) {
            return Err(ModelError::Parameter { field: "theta", constraint: "must lie in (0, π)", value: self.theta });
        }
        for (class, alpha) in self.alpha.iter() {
            let ok = match class.visibility() {
                Visibility::Los => alpha >= 2.0,
                Visibility::Nlos => alpha > 2.0,
            };
            if !(ok && alpha.is_finite()) {
                return Err(ModelError::Parameter {
                    field: alpha_field(class),
                    constraint: match class.visibility() {
                        Visibility::Los => "LOS exponents must be >= 2",
                        Visibility::Nlos => "NLOS exponents must be > 2",
                    },
                    value: alpha,
                });
            }
        }
        if self.nakagami_m < 1 {
            return Err(ModelError::Parameter {
                field: "nakagami_m",
                constraint: "must be an integer >= 1",
                value: self.nakagami_m as f64,
            });
        }
        // Association relies on any LOS macro cell beating every NLOS one.
        let los_edge = self.k.ml * pow(self.d_m, -self.alpha.ml);
        let nlos_edge = self.k.mn * pow(self.d_m, -self.alpha.mn);
        if los_edge < nlos_edge * (1.0 - 1e-12) {
            return Err(ModelError::Parameter {
                field: "d_m",
                constraint: "LOS macro power at the LOS-ball edge must not be below NLOS power there",
                value: self.d_m,
            });
        }
        Ok(())
    }
}

fn k_field(class: LinkClass) -> &'static str {
    ["k_ml", "k_mn", "k_sl_mu", "k_sl_mm", "k_sn"][class.slot()]
}

fn alpha_field(class: LinkClass) -> &'static str {
    ["alpha_ml", "alpha_mn", "alpha_sl_mu", "alpha_sl_mm", "alpha_sn"][class.slot()]
}

/// Linear attenuation `K d^-α` of a class at distance `d`.
pub fn path_loss(class: LinkClass, d: f64, params: &SystemParams) -> Result<f64, ModelError> {
    if !(d > 0.0) {
        return Err(ModelError::NonPositiveDistance(d));
    }
    Ok(params.k[class] * pow(d, -params.alpha[class]))
}

/// Mean received power (no fading): `P_t K d^-α`, times `G_0` for mm-wave.
pub fn mean_rx_power(class: LinkClass, d: f64, params: &SystemParams) -> Result<f64, ModelError> {
    if !(d > 0.0) {
        return Err(ModelError::NonPositiveDistance(d));
    }
    Ok(params.power_at_unit_distance(class) * pow(d, -params.alpha[class]))
}

/// Distance at which `class` delivers mean power `power`.
pub fn distance_for_power(class: LinkClass, power: f64, params: &SystemParams) -> f64 {
    pow(params.power_at_unit_distance(class) / power, 1.0 / params.alpha[class])
}
