//! Association, RAT selection, spillover and SINR coverage.
//!
//! Association is by strongest mean μ-wave power among the nearest LOS or
//! NLOS macro cell, the nearest small cell on the user's own road (LOS) and
//! the nearest small cell on any other road (NLOS). A user served by a LOS
//! small cell then picks the RAT with the larger mean received power.

use alloc::vec::Vec;
use core::cell::Cell;
use core::f64::consts::{FRAC_PI_2, PI};
use core::fmt;

use libm::{atan, exp, expm1, pow, sqrt, tan};

use crate::geometry::{
    cox_pgf_conditioned, line_pgf, los_sbs_nearest_pdf, nlos_nearest_pdf, nlos_void_probability, pgf_spec,
    ppp_pgfl_annulus, ExcludeBall, FadedInterference, GeometryError, KernelMethod,
};
use crate::model::{distance_for_power, LinkClass, ModelError, PerClass, Rat, SystemParams, Tier, Visibility};
use crate::numerics::{integrate_piecewise, QuadratureError, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoverageError {
    Model(ModelError),
    /// A PGF or distance law failed; `term` names the factor.
    Geometry {
        term: &'static str,
        source: GeometryError,
    },
    Quadrature {
        term: &'static str,
        source: QuadratureError,
    },
    /// Equal LOS exponents make the RAT choice independent of distance.
    DegenerateRat {
        mm_dominates: bool,
    },
    /// A conditional quantity was requested for a class that is never selected.
    UndefinedConditional(LinkClass),
}

impl fmt::Display for CoverageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverageError::Model(e) => write!(f, "{e}"),
            CoverageError::Geometry { term, source } => write!(f, "{term}: {source}"),
            CoverageError::Quadrature { term, source } => write!(f, "{term}: {source}"),
            CoverageError::DegenerateRat { mm_dominates } => write!(
                f,
                "equal LOS small-cell exponents: {} wins at every distance",
                if *mm_dominates { "mm-wave" } else { "μ-wave" }
            ),
            CoverageError::UndefinedConditional(c) => write!(f, "class {} has zero association probability", c.label()),
        }
    }
}

impl From<ModelError> for CoverageError {
    fn from(e: ModelError) -> Self {
        CoverageError::Model(e)
    }
}

fn geo(term: &'static str) -> impl Fn(GeometryError) -> CoverageError {
    move |source| CoverageError::Geometry { term, source }
}

fn quad(term: &'static str) -> impl Fn(QuadratureError) -> CoverageError {
    move |source| CoverageError::Quadrature { term, source }
}

// ---------------------------------------------------------------------------
// Spillover.

/// The beam geometry bounding the spillover window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpilloverGeometry {
    /// Smallest inter-site distance at which spillover can occur.
    pub d_star: f64,
    /// Largest such distance; infinite when the window is not real.
    pub d_hat: f64,
    /// Whether `tan(θ/2) ≤ 1/8`, so that `d_hat` is real.
    pub feasible: bool,
    pub h: f64,
    pub theta: f64,
}

impl SpilloverGeometry {
    pub fn new(params: &SystemParams) -> Self {
        let h = params.h;
        let t = tan(params.theta / 2.0);
        let disc = h * h - 8.0 * h * h * t;
        if disc >= 0.0 {
            let root = sqrt(disc);
            SpilloverGeometry {
                d_star: ((h - root) / (2.0 * t)).max(2.0 * h * t),
                d_hat: (h + root) / (2.0 * t),
                feasible: true,
                h,
                theta: params.theta,
            }
        } else {
            SpilloverGeometry { d_star: 2.0 * h * t, d_hat: f64::INFINITY, feasible: false, h, theta: params.theta }
        }
    }

    /// Distance from the serving cell to the near edge of the spillover zone
    /// for inter-site distance `x`.
    pub fn d_prime(&self, x: f64) -> f64 {
        self.h * tan(atan(x / (2.0 * self.h)) - self.theta / 2.0)
    }

    /// Far edge of the footprint of a beam aimed at a user `y` from its cell.
    pub fn footprint_edge(&self, y: f64) -> f64 {
        let angle = self.theta / 2.0 + atan(y / self.h);
        if angle >= FRAC_PI_2 {
            f64::INFINITY
        } else {
            self.h * tan(angle)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spillover {
    pub probability: f64,
    pub geometry: SpilloverGeometry,
}

/// Probability that a neighboring cell's mm-wave beam spills over into the
/// serving cell. Outside the feasible geometry the inter-site window is
/// extended to infinity and `geometry.feasible` is false.
pub fn spillover_probability(params: &SystemParams) -> Result<Spillover, CoverageError> {
    let g = SpilloverGeometry::new(params);
    let ls = params.lambda_s;
    let lou = params.lambda_ou;
    let spec = pgf_spec().with_tol(1e-10).with_tail_cutoff(1.0 / ls);
    let inner_err = Cell::new(None);
    let outer = |x: f64| {
        let lo = g.d_prime(x);
        let hi = x / 2.0;
        if !(lo < hi) {
            return 0.0;
        }
        // The neighbor escapes the footprint with probability U; U = 1 once
        // the footprint reaches the neighbor.
        let u = |y: f64| {
            let edge = g.footprint_edge(y);
            if edge >= x {
                1.0
            } else {
                exp(-ls * (x - edge))
            }
        };
        let reach = g.h * tan(atan(x / g.h) - g.theta / 2.0);
        match integrate_piecewise(u, lo, hi, &[reach], &spec) {
            Ok(v) => 2.0 * ls * ls * exp(-ls * x) * v * -expm1(-lou * (hi - lo)),
            Err(e) => {
                inner_err.set(Some(e));
                f64::NAN
            }
        }
    };
    let mid = if g.feasible { 0.5 * (g.d_star + g.d_hat) } else { g.d_star + 1.0 / ls };
    let result = integrate_piecewise(outer, g.d_star, g.d_hat, &[mid], &spec);
    if let Some(e) = inner_err.get() {
        return Err(CoverageError::Quadrature { term: "spillover user integral", source: e });
    }
    let probability = result.map_err(quad("spillover distance integral"))?;
    Ok(Spillover { probability: probability.clamp(0.0, 1.0), geometry: g })
}

// ---------------------------------------------------------------------------
// RAT selection.

/// Which serving distances of a LOS small cell lead to mm-wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatRule {
    /// mm-wave beyond the threshold distance (mm-wave exponent is smaller).
    MmBeyond(f64),
    /// mm-wave within the threshold distance.
    MmWithin(f64),
    /// Equal exponents: one RAT at every distance.
    Fixed(Rat),
}

impl RatRule {
    pub fn new(params: &SystemParams) -> Self {
        let (a_mu, a_mm) = (params.alpha.sl_mu, params.alpha.sl_mm);
        let ratio = params.power_at_unit_distance(LinkClass::SL_MU) / params.power_at_unit_distance(LinkClass::SL_MM);
        if a_mu == a_mm {
            return RatRule::Fixed(if ratio < 1.0 { Rat::MmWave } else { Rat::MicroWave });
        }
        let c = pow(ratio, 1.0 / (a_mu - a_mm));
        if a_mu > a_mm {
            RatRule::MmBeyond(c)
        } else {
            RatRule::MmWithin(c)
        }
    }

    pub fn rat_at(&self, x: f64) -> Rat {
        let mm = match *self {
            RatRule::MmBeyond(c) => x > c,
            RatRule::MmWithin(c) => x < c,
            RatRule::Fixed(r) => r == Rat::MmWave,
        };
        if mm {
            Rat::MmWave
        } else {
            Rat::MicroWave
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match *self {
            RatRule::MmBeyond(c) | RatRule::MmWithin(c) => Some(c),
            RatRule::Fixed(_) => None,
        }
    }
}

/// Distance at which both RATs of a LOS small cell deliver equal power:
/// `(K_μ / (K_m G_0))^{1/(α_SLμ - α_SLm)}`.
pub fn rat_threshold(params: &SystemParams) -> Result<f64, CoverageError> {
    match RatRule::new(params) {
        RatRule::Fixed(r) => Err(CoverageError::DegenerateRat { mm_dominates: r == Rat::MmWave }),
        rule => Ok(rule.threshold().unwrap_or(0.0)),
    }
}

/// Probability that the nearest LOS small cell is reached over mm-wave,
/// `exp(-2λ_S c)` when mm-wave wins beyond `c`.
pub fn mmwave_selection_probability(params: &SystemParams) -> Result<f64, CoverageError> {
    let p_beyond = |c: f64| exp(-2.0 * params.lambda_s * c);
    match RatRule::new(params) {
        RatRule::MmBeyond(c) => Ok(p_beyond(c)),
        RatRule::MmWithin(c) => Ok(1.0 - p_beyond(c)),
        RatRule::Fixed(r) => Err(CoverageError::DegenerateRat { mm_dominates: r == Rat::MmWave }),
    }
}

// ---------------------------------------------------------------------------
// Association.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationReport {
    pub p_ml: f64,
    pub p_mn: f64,
    pub p_sl: f64,
    /// Complement of the other three.
    pub p_sn: f64,
    /// `P_SN` integrated directly, for checking the complement.
    pub p_sn_direct: f64,
    /// Probability of mm-wave given LOS small-cell association.
    pub p_m_given_sl: f64,
    pub p_tvr: PerClass<f64>,
    pub rat_rule: RatRule,
}

/// Association probabilities of every class.
pub fn tier_probabilities(params: &SystemParams) -> Result<AssociationReport, CoverageError> {
    Ok(*Analyzer::new(params)?.association())
}

/// Association-weighted mixture of conditional coverages.
pub fn mix_coverage(weights: &PerClass<f64>, conditional: &PerClass<f64>) -> f64 {
    LinkClass::ALL.iter().map(|&c| weights[c] * conditional[c]).sum()
}

/// Nearest-serving-distance law of one class, with the integration layout
/// found by scanning its density.
#[derive(Debug, Clone)]
struct ServingLaw {
    lo: f64,
    hi: f64,
    breaks: Vec<f64>,
    mass: f64,
}

/// Evaluation of the mm-wave interference factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MmWaveForm {
    /// Alzer bound with `η = N (N!)^{-1/N}` and the interferer's Nakagami
    /// fading averaged exactly.
    #[default]
    Alzer,
    /// `η = 1` with the factor `E[1 / (1 + γ p_G (x/y)^α)]` outside the sum.
    Simple,
}

/// Threshold grid with per-class conditional and overall coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve {
    pub gamma_db: Vec<f64>,
    /// `None` for classes that are never selected.
    pub per_class: PerClass<Option<Vec<f64>>>,
    pub overall: Vec<f64>,
}

/// Analytic engine for one parameter set: caches the association report,
/// the serving-distance laws and the spillover probability.
#[derive(Debug, Clone)]
pub struct Analyzer {
    params: SystemParams,
    kernel: KernelMethod,
    mm_form: MmWaveForm,
    outer: QuadratureSpec,
    pgf: QuadratureSpec,
    rule: RatRule,
    laws: PerClass<ServingLaw>,
    report: AssociationReport,
    spillover: Spillover,
}

const SCAN_START: f64 = 1e-3;
const SCAN_END: f64 = 1e7;
const SCAN_STEP: f64 = 1.2;
const NEGLIGIBLE: f64 = 1e-15;
/// Classes below this association probability are treated as never selected.
pub const MIN_REPORTED: f64 = 1e-12;

impl Analyzer {
    pub fn new(params: &SystemParams) -> Result<Self, CoverageError> {
        params.validate()?;
        let rule = RatRule::new(params);
        let mut a = Analyzer {
            params: *params,
            kernel: KernelMethod::Auto,
            mm_form: MmWaveForm::Alzer,
            outer: pgf_spec().with_tol(1e-7).with_abs_tol(0.0),
            pgf: pgf_spec().with_tol(1e-7),
            rule,
            laws: PerClass::from_fn(|_| ServingLaw { lo: 0.0, hi: 0.0, breaks: Vec::new(), mass: 0.0 }),
            report: AssociationReport {
                p_ml: 0.0,
                p_mn: 0.0,
                p_sl: 0.0,
                p_sn: 0.0,
                p_sn_direct: 0.0,
                p_m_given_sl: 0.0,
                p_tvr: PerClass::splat(0.0),
                rat_rule: rule,
            },
            spillover: spillover_probability(params)?,
        };
        for class in LinkClass::ALL {
            a.laws[class] = a.scan_law(class)?;
        }
        let m = |c: LinkClass| a.laws[c].mass;
        let p_sl = m(LinkClass::SL_MU) + m(LinkClass::SL_MM);
        let p_sn = (1.0 - m(LinkClass::ML) - m(LinkClass::MN) - p_sl).clamp(0.0, 1.0);
        a.report = AssociationReport {
            p_ml: m(LinkClass::ML),
            p_mn: m(LinkClass::MN),
            p_sl,
            p_sn,
            p_sn_direct: m(LinkClass::SN),
            p_m_given_sl: if p_sl > 0.0 { m(LinkClass::SL_MM) / p_sl } else { 0.0 },
            p_tvr: PerClass {
                ml: m(LinkClass::ML),
                mn: m(LinkClass::MN),
                sl_mu: m(LinkClass::SL_MU),
                sl_mm: m(LinkClass::SL_MM),
                sn: p_sn,
            },
            rat_rule: rule,
        };
        Ok(a)
    }

    pub fn with_mm_form(mut self, form: MmWaveForm) -> Self {
        self.mm_form = form;
        self
    }

    /// Relative tolerance of the serving-distance integrals and of the PGFs
    /// inside them.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.outer = self.outer.with_tol(tol);
        self.pgf = self.pgf.with_tol(tol);
        self
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn association(&self) -> &AssociationReport {
        &self.report
    }

    pub fn spillover(&self) -> &Spillover {
        &self.spillover
    }

    pub fn rat_rule(&self) -> RatRule {
        self.rule
    }

    /// Mean μ-wave power at which a class is received at distance `x`.
    fn mu_power(&self, class: LinkClass, x: f64) -> f64 {
        let class = class.micro_wave();
        self.params.power_at_unit_distance(class) * pow(x, -self.params.alpha[class])
    }

    /// Radius of the macro-free ball implied by a serving power `s`.
    fn macro_exclusion(&self, s: f64) -> f64 {
        let p = &self.params;
        let r_mn = distance_for_power(LinkClass::MN, s, p);
        if r_mn > p.d_m {
            r_mn
        } else {
            distance_for_power(LinkClass::ML, s, p).min(p.d_m)
        }
    }

    /// Density of "the nearest cell of `class` is at `x` and wins the μ-wave
    /// comparison", restricted to the RAT region for LOS small cells.
    pub fn joint_density(&self, class: LinkClass, x: f64) -> Result<f64, CoverageError> {
        let p = &self.params;
        if !(x > 0.0) {
            return Ok(0.0);
        }
        if class.tier() == Tier::Small && class.visibility() == Visibility::Los && self.rule.rat_at(x) != class.rat() {
            return Ok(0.0);
        }
        let s = self.mu_power(class, x);
        let macro_nearest = |x: f64| 2.0 * PI * p.lambda_m * x * exp(-PI * p.lambda_m * x * x);
        let (own, macro_void, sl_void, sn_void) = match (class.tier(), class.visibility()) {
            (Tier::Macro, v) => {
                let inside = x < p.d_m;
                if inside != (v == Visibility::Los) {
                    return Ok(0.0);
                }
                (macro_nearest(x), 1.0, true, true)
            }
            (Tier::Small, Visibility::Los) => (los_sbs_nearest_pdf(x, p), self.macro_void(s), false, true),
            (Tier::Small, Visibility::Nlos) => {
                let f = nlos_nearest_pdf(x, p, self.kernel).map_err(geo("NLOS nearest-distance density"))?;
                (f, self.macro_void(s), true, false)
            }
        };
        if own == 0.0 || macro_void == 0.0 {
            return Ok(0.0);
        }
        let mut v = own * macro_void;
        if sl_void {
            v *= exp(-2.0 * p.lambda_s * distance_for_power(LinkClass::SL_MU, s, p));
        }
        if sn_void && v > 0.0 {
            let r = distance_for_power(LinkClass::SN, s, p);
            v *= nlos_void_probability(r, p, self.kernel).map_err(geo("NLOS void probability"))?;
        }
        Ok(v)
    }

    fn macro_void(&self, s: f64) -> f64 {
        let r = self.macro_exclusion(s);
        exp(-PI * self.params.lambda_m * r * r)
    }

    fn support(&self, class: LinkClass) -> (f64, f64) {
        let p = &self.params;
        match (class.tier(), class.visibility()) {
            (Tier::Macro, Visibility::Los) => (0.0, p.d_m),
            (Tier::Macro, Visibility::Nlos) => (p.d_m, f64::INFINITY),
            _ => (0.0, f64::INFINITY),
        }
    }

    /// Locates the mass of a class's joint density on a log grid and
    /// integrates it.
    fn scan_law(&self, class: LinkClass) -> Result<ServingLaw, CoverageError> {
        let (lo, hi) = self.support(class);
        let mut grid = Vec::new();
        let mut x = SCAN_START;
        while x < SCAN_END {
            if x > lo && x < hi {
                grid.push(x);
            }
            x *= SCAN_STEP;
        }
        let mut weights = Vec::with_capacity(grid.len());
        for &x in &grid {
            weights.push(x * self.joint_density(class, x)?);
        }
        let peak = weights.iter().cloned().fold(0.0, f64::max);
        let empty = ServingLaw { lo, hi: lo, breaks: Vec::new(), mass: 0.0 };
        if !(peak > 0.0) {
            return Ok(empty);
        }
        let significant: Vec<usize> = (0..grid.len()).filter(|&i| weights[i] > NEGLIGIBLE * peak).collect();
        let first = significant[0];
        let last = *significant.last().unwrap_or(&first);
        let end = if hi.is_finite() { hi } else { grid.get(last + 2).copied().unwrap_or(SCAN_END) };
        let mut breaks: Vec<f64> =
            (first.saturating_sub(1)..=last).step_by(4).map(|i| grid[i]).filter(|&b| b > lo && b < end).collect();
        if let Some(c) = self.rule.threshold() {
            if class.tier() == Tier::Small && class.visibility() == Visibility::Los && c > lo && c < end {
                breaks.push(c);
            }
        }
        breaks.sort_by(f64::total_cmp);
        let mut law = ServingLaw { lo, hi: end, breaks, mass: 0.0 };
        let spec = self.outer.with_tol(1e-10);
        law.mass = self.integrate_law(&law, &spec, "association probability", |x| self.joint_density(class, x))?;
        Ok(law)
    }

    fn integrate_law<F: FnMut(f64) -> Result<f64, CoverageError>>(
        &self,
        law: &ServingLaw,
        spec: &QuadratureSpec,
        term: &'static str,
        mut f: F,
    ) -> Result<f64, CoverageError> {
        if !(law.hi > law.lo) {
            return Ok(0.0);
        }
        let err = Cell::new(None);
        let g = |x: f64| match f(x) {
            Ok(v) => v,
            Err(e) => {
                if err.get().is_none() {
                    err.set(Some(e));
                }
                f64::NAN
            }
        };
        let result = integrate_piecewise(g, law.lo, law.hi, &law.breaks, spec);
        if let Some(e) = err.get() {
            return Err(e);
        }
        result.map_err(quad(term))
    }

    /// Density of the serving distance given association with `class`. For
    /// LOS small cells the condition includes the RAT.
    pub fn serving_distance_pdf(&self, class: LinkClass, x: f64) -> Result<f64, CoverageError> {
        let mass = self.laws[class].mass;
        if !(mass > 0.0) {
            return Err(CoverageError::UndefinedConditional(class));
        }
        Ok(self.joint_density(class, x)? / mass)
    }

    /// Numerical `∫ serving_distance_pdf`, for checking normalization.
    pub fn serving_distance_mass(&self, class: LinkClass) -> Result<f64, CoverageError> {
        let law = &self.laws[class];
        self.integrate_law(law, &self.outer, "serving-distance mass", |x| self.serving_distance_pdf(class, x))
    }

    /// μ-wave coverage given association with `class` at distance `x`.
    pub fn mu_coverage_at(&self, class: LinkClass, x: f64, gamma: f64) -> Result<f64, CoverageError> {
        let p = &self.params;
        let class = class.micro_wave();
        let s = self.mu_power(class, x);
        let mut cov = exp(-gamma * p.noise_mu / s);
        if cov == 0.0 {
            return Ok(0.0);
        }
        let threshold = s / gamma;
        let nu = |c: LinkClass| FadedInterference::new(p.power_at_unit_distance(c), p.alpha[c], threshold);
        let is = |c: LinkClass| class == c;

        let rho_m = if class.tier() == Tier::Macro { x } else { self.macro_exclusion(s) };
        if rho_m < p.d_m {
            cov *= ppp_pgfl_annulus(&nu(LinkClass::ML), p.lambda_m, rho_m, p.d_m, &self.pgf)
                .map_err(geo("LOS macro interference"))?;
        }
        cov *= ppp_pgfl_annulus(&nu(LinkClass::MN), p.lambda_m, rho_m.max(p.d_m), f64::INFINITY, &self.pgf)
            .map_err(geo("NLOS macro interference"))?;

        let sl = nu(LinkClass::SL_MU);
        let e_sl = if is(LinkClass::SL_MU) { x } else { distance_for_power(LinkClass::SL_MU, s, p) };
        cov *= line_pgf(&ExcludeBall { inner: &sl, radius: e_sl }, 0.0, p, &self.pgf)
            .map_err(geo("LOS small-cell interference"))?;

        let sn = nu(LinkClass::SN);
        let e_sn = if is(LinkClass::SN) { x } else { distance_for_power(LinkClass::SN, s, p) };
        cov *= cox_pgf_conditioned(&sn, e_sn, p, &self.pgf).map_err(geo("NLOS small-cell interference"))?;
        if is(LinkClass::SN) {
            cov *= line_pgf(&ExcludeBall { inner: &sn, radius: x }, x, p, &self.pgf)
                .map_err(geo("serving-road interference"))?;
        }
        Ok(cov)
    }

    /// mm-wave coverage given LOS small-cell association at distance `x`.
    pub fn mm_coverage_at(&self, x: f64, gamma: f64) -> Result<f64, CoverageError> {
        let p = &self.params;
        let n0 = p.nakagami_m;
        let nf = n0 as f64;
        let s = self.params.power_at_unit_distance(LinkClass::SL_MM) * pow(x, -p.alpha.sl_mm);
        let pg = self.spillover.probability;
        let eta = match self.mm_form {
            MmWaveForm::Alzer => nf * pow(factorial(n0), -1.0 / nf),
            MmWaveForm::Simple => 1.0,
        };
        let outside_factor = match self.mm_form {
            MmWaveForm::Simple => self.neighbor_average(x, |q| 1.0 / (1.0 + gamma * pg * q))?,
            MmWaveForm::Alzer => 0.0,
        };
        let mut total = 0.0;
        for n in 1..=n0 {
            let k = n as f64;
            let noise = exp(-k * eta * gamma * p.noise_mm / s);
            if noise == 0.0 {
                continue;
            }
            let interference = match self.mm_form {
                MmWaveForm::Alzer => {
                    let scale = k * eta * gamma / nf;
                    let psi = self.neighbor_average(x, |q| pow(1.0 + scale * q, -nf))?;
                    1.0 - pg + pg * psi
                }
                MmWaveForm::Simple => outside_factor,
            };
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            total += sign * binomial(n0, n) * noise * interference;
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// `E[g((x/y)^α)]` over the nearest cell beyond `x` on the far side,
    /// `y - x ~ Exp(λ_S)`.
    fn neighbor_average<G: Fn(f64) -> f64>(&self, x: f64, g: G) -> Result<f64, CoverageError> {
        let ls = self.params.lambda_s;
        let alpha = self.params.alpha.sl_mm;
        let spec = self.pgf.with_tail_cutoff(1.0 / ls);
        let f = |u: f64| ls * exp(-ls * u) * g(pow(x / (x + u), alpha));
        integrate_piecewise(f, 0.0, f64::INFINITY, &[x.min(1.0 / ls)], &spec).map_err(quad("mm-wave neighbor average"))
    }

    /// Conditional coverage of one class at linear threshold `gamma`.
    pub fn conditional_coverage(&self, class: LinkClass, gamma: f64) -> Result<f64, CoverageError> {
        let law = &self.laws[class];
        if !(law.mass > 0.0) {
            return Err(CoverageError::UndefinedConditional(class));
        }
        let spec = self.outer.with_abs_tol(1e-9 * law.mass);
        let v = self.integrate_law(law, &spec, "serving-distance average", |x| {
            let f = self.joint_density(class, x)?;
            if f == 0.0 {
                return Ok(0.0);
            }
            let c = if class.rat() == Rat::MmWave {
                self.mm_coverage_at(x, gamma)?
            } else {
                self.mu_coverage_at(class, x, gamma)?
            };
            Ok(f * c)
        })?;
        Ok((v / law.mass).clamp(0.0, 1.0))
    }

    /// Whether a class carries enough association probability to report a
    /// conditional coverage.
    pub fn selected(&self, class: LinkClass) -> bool {
        self.report.p_tvr[class] > MIN_REPORTED && self.laws[class].mass > 0.0
    }

    /// Coverage of every class at one threshold (linear); `None` for
    /// classes that are never selected.
    pub fn coverage_at(&self, gamma: f64) -> Result<(PerClass<Option<f64>>, f64), CoverageError> {
        let mut per = PerClass::splat(None);
        let mut overall = 0.0;
        for class in LinkClass::ALL {
            if self.selected(class) {
                let c = self.conditional_coverage(class, gamma)?;
                per[class] = Some(c);
                overall += self.report.p_tvr[class] * c;
            }
        }
        // The NLOS small-cell weight is a complement; renormalize the mix.
        let weight: f64 = LinkClass::ALL.iter().filter(|&&c| per[c].is_some()).map(|&c| self.report.p_tvr[c]).sum();
        Ok((per, if weight > 0.0 { (overall / weight).clamp(0.0, 1.0) } else { 0.0 }))
    }

    /// Coverage over a threshold grid in dB.
    pub fn overall_coverage(&self, gamma_db: &[f64]) -> Result<CoverageCurve, CoverageError> {
        let mut curve = CoverageCurve {
            gamma_db: gamma_db.to_vec(),
            per_class: PerClass::from_fn(|_| None),
            overall: Vec::with_capacity(gamma_db.len()),
        };
        for class in LinkClass::ALL {
            if self.selected(class) {
                curve.per_class[class] = Some(Vec::with_capacity(gamma_db.len()));
            }
        }
        for &g in gamma_db {
            let (per, overall) = self.coverage_at(crate::model::db_to_linear(g))?;
            for class in LinkClass::ALL {
                if let (Some(v), Some(list)) = (per[class], curve.per_class[class].as_mut()) {
                    list.push(v);
                }
            }
            curve.overall.push(overall);
        }
        Ok(curve)
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

/// Density of the serving distance given association with `class`.
pub fn serving_distance_pdf(class: LinkClass, x: f64, params: &SystemParams) -> Result<f64, CoverageError> {
    Analyzer::new(params)?.serving_distance_pdf(class, x)
}

/// Conditional μ-wave coverage of `class` at linear threshold `gamma`.
pub fn sinr_coverage_mu(class: LinkClass, gamma: f64, params: &SystemParams) -> Result<f64, CoverageError> {
    Analyzer::new(params)?.conditional_coverage(class.micro_wave(), gamma)
}

/// Conditional mm-wave coverage at linear threshold `gamma`.
pub fn sinr_coverage_mm(gamma: f64, params: &SystemParams) -> Result<f64, CoverageError> {
    Analyzer::new(params)?.conditional_coverage(LinkClass::SL_MM, gamma)
}

/// Overall coverage over a threshold grid in dB.
pub fn overall_coverage(gamma_db: &[f64], params: &SystemParams) -> Result<CoverageCurve, CoverageError> {
    Analyzer::new(params)?.overall_coverage(gamma_db)
}
