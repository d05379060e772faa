//! Deterministic quadrature and series utilities.
//!
//! [`integrate`] is composite Newton–Cotes (trapezoid, Simpson, Boole), either
//! at a fixed panel count or with panel doubling until the estimate settles.
//! The doubling path is built from nested trapezoid sums with Richardson
//! extrapolation, which reproduces the composite Simpson and Boole sums
//! exactly while reusing every function evaluation.
//!
//! [`integrate_improper`] extends the integration range by repeated doubling
//! of the span until the added slab no longer moves the estimate.
//!
//! [`exp_series_integral`] evaluates the two chord kernels
//! `∫₀^x exp(-c√(x²-r²)) / √(x²-r²) dr` and `∫₀^x exp(-c√(x²-r²)) dr` by
//! term-wise integration of the exponential series. Terms are accumulated in
//! double-double arithmetic so the alternating sum stays accurate well past
//! the point where plain `f64` summation cancels catastrophically.

use core::f64::consts::FRAC_PI_2;
use core::fmt;

use alloc::vec::Vec;

use libm::fma;

/// Closed Newton–Cotes order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonCotes {
    /// Order 1, one subinterval per panel.
    Trapezoid,
    /// Order 2, two subintervals per panel.
    Simpson,
    /// Order 4, four subintervals per panel.
    Boole,
}

impl NewtonCotes {
    /// Subintervals per panel.
    pub fn order(self) -> usize {
        match self {
            NewtonCotes::Trapezoid => 1,
            NewtonCotes::Simpson => 2,
            NewtonCotes::Boole => 4,
        }
    }

    /// Richardson steps from the trapezoid sum to this rule.
    fn extrapolations(self) -> usize {
        match self {
            NewtonCotes::Trapezoid => 0,
            NewtonCotes::Simpson => 1,
            NewtonCotes::Boole => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Fixed panel count.
    CompositeNewtonCotes(NewtonCotes),
    /// Panel doubling until the relative change drops below `tail_tol`.
    AdaptiveSubdivision(NewtonCotes),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    /// Panels on the first pass (fixed count for the composite rule).
    pub panels: usize,
    /// Initial truncation span for improper integrals.
    pub tail_cutoff: f64,
    /// Relative tolerance for panel doubling and span doubling.
    pub tail_tol: f64,
    /// Absolute tolerance floor, for integrals whose value may vanish.
    pub abs_tol: f64,
    /// Panel cap for the adaptive rule; the last estimate is returned when hit.
    pub max_panels: usize,
    /// Span doublings allowed before an improper integral gives up.
    pub max_doublings: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rule: QuadratureRule::AdaptiveSubdivision(NewtonCotes::Simpson),
            panels: 8,
            tail_cutoff: 1.0,
            tail_tol: 1e-6,
            abs_tol: 0.0,
            max_panels: 1 << 16,
            max_doublings: 64,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = panels;
        self
    }

    pub fn with_tail_cutoff(mut self, tail_cutoff: f64) -> Self {
        self.tail_cutoff = tail_cutoff;
        self
    }

    pub fn with_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels;
        self
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if self.panels < 1 {
            return Err(QuadratureError::InvalidSpec("panels must be >= 1"));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(QuadratureError::InvalidSpec("tail_tol must lie in (0, 1)"));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(QuadratureError::InvalidSpec("abs_tol must be >= 0"));
        }
        if !(self.tail_cutoff > 0.0 && self.tail_cutoff.is_finite()) {
            return Err(QuadratureError::InvalidSpec("tail_cutoff must be finite and > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureError {
    InvalidSpec(&'static str),
    InvalidInterval {
        a: f64,
        b: f64,
    },
    /// The integrand returned a non-finite value.
    NonFinite {
        abscissa: f64,
        value: f64,
    },
    /// The span cap was reached with the estimate still moving.
    NonConvergence {
        last: f64,
        previous: f64,
        radius: f64,
    },
}

impl fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureError::InvalidSpec(msg) => write!(f, "invalid quadrature spec: {msg}"),
            QuadratureError::InvalidInterval { a, b } => write!(f, "invalid interval [{a}, {b}]"),
            QuadratureError::NonFinite { abscissa, value } => {
                write!(f, "integrand is {value} at r = {abscissa}")
            }
            QuadratureError::NonConvergence { last, previous, radius } => {
                write!(f, "improper integral did not converge by r = {radius}: last estimates {previous} and {last}")
            }
        }
    }
}

fn eval<F: FnMut(f64) -> f64>(f: &mut F, x: f64) -> Result<f64, QuadratureError> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QuadratureError::NonFinite { abscissa: x, value: v })
    }
}

/// `∫_a^b f` under `spec`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    spec.validate()?;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    match spec.rule {
        QuadratureRule::CompositeNewtonCotes(nc) => composite(&mut f, a, b, nc, spec.panels),
        QuadratureRule::AdaptiveSubdivision(nc) => romberg(&mut f, a, b, nc, spec),
    }
}

fn composite<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    nc: NewtonCotes,
    panels: usize,
) -> Result<f64, QuadratureError> {
    let (weights, norm): (&[f64], f64) = match nc {
        NewtonCotes::Trapezoid => (&[1.0, 1.0], 2.0),
        NewtonCotes::Simpson => (&[1.0, 4.0, 1.0], 6.0),
        NewtonCotes::Boole => (&[7.0, 32.0, 12.0, 32.0, 7.0], 90.0),
    };
    let q = nc.order();
    let width = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let left = a + width * p as f64;
        let mut panel = 0.0;
        for (j, w) in weights.iter().enumerate() {
            let x = if p + 1 == panels && j == q { b } else { left + width * j as f64 / q as f64 };
            panel += w * eval(f, x)?;
        }
        sum += panel * width / norm;
    }
    Ok(sum)
}

fn romberg<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    nc: NewtonCotes,
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    let steps = nc.extrapolations();
    let q = nc.order();
    let mut n = spec.panels * q;
    let mut h = (b - a) / n as f64;
    let mut trap = 0.5 * (eval(f, a)? + eval(f, b)?);
    for i in 1..n {
        trap += eval(f, a + h * i as f64)?;
    }
    trap *= h;
    // Row of the Romberg tableau for the previous level.
    let mut prev = [trap, 0.0, 0.0];
    let mut prev_estimate = f64::NAN;
    let mut level = 0usize;
    loop {
        let estimate = prev[steps.min(level)];
        if level > steps {
            let delta = (estimate - prev_estimate).abs();
            if delta <= spec.tail_tol * estimate.abs() || delta <= spec.abs_tol {
                return Ok(estimate);
            }
        }
        if level >= steps && 2 * n / q > spec.max_panels {
            return Ok(estimate);
        }
        prev_estimate = estimate;
        let mut mid = 0.0;
        for i in 0..n {
            mid += eval(f, a + h * (i as f64 + 0.5))?;
        }
        n *= 2;
        h *= 0.5;
        let mut row = [0.5 * prev[0] + h * mid, 0.0, 0.0];
        let mut factor = 4.0;
        for k in 1..=steps.min(level + 1) {
            row[k] = (factor * row[k - 1] - prev[k - 1]) / (factor - 1.0);
            factor *= 4.0;
        }
        prev = row;
        level += 1;
    }
}

/// Result of an improper integral: the estimate and the truncation point used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImproperEstimate {
    pub value: f64,
    pub cutoff: f64,
}

/// `∫_a^∞ f`, truncated at the first span `a + tail_cutoff·2^k` whose last
/// doubling changed the estimate by less than `tail_tol` relative. Slabs that
/// shrink by a stable ratio are summed in closed form instead.
pub fn integrate_improper<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<ImproperEstimate, QuadratureError> {
    spec.validate()?;
    if !a.is_finite() {
        return Err(QuadratureError::InvalidInterval { a, b: f64::INFINITY });
    }
    let mut span = spec.tail_cutoff;
    let mut value = integrate(&mut f, a, a + span, spec)?;
    let mut previous = value;
    let mut last_slab = f64::NAN;
    let mut last_ratio = f64::NAN;
    for _ in 0..spec.max_doublings {
        let slab_spec = QuadratureSpec { abs_tol: spec.abs_tol.max(spec.tail_tol * value.abs()), ..*spec };
        let slab = integrate(&mut f, a + span, a + 2.0 * span, &slab_spec)?;
        previous = value;
        value += slab;
        span *= 2.0;
        if slab.abs() <= spec.tail_tol * value.abs() || slab.abs() <= spec.abs_tol {
            return Ok(ImproperEstimate { value, cutoff: a + span });
        }
        // Power-law tails give slabs in geometric progression; sum the rest.
        let ratio = slab / last_slab;
        if ratio > 0.0 && ratio < 0.95 && (ratio - last_ratio).abs() <= 1e-3 * ratio {
            let rest = slab * ratio / (1.0 - ratio);
            let drift = rest * (ratio - last_ratio).abs() / (1.0 - ratio);
            if drift.abs() <= spec.tail_tol * (value + rest).abs() {
                return Ok(ImproperEstimate { value: value + rest, cutoff: a + span });
            }
        }
        last_ratio = ratio;
        last_slab = slab;
    }
    Err(QuadratureError::NonConvergence { last: value, previous, radius: a + span })
}

/// `∫_a^b f` split at the interior `breaks`; `b` may be `f64::INFINITY`, in
/// which case the last piece goes through [`integrate_improper`] with an
/// initial span no shorter than the distance already covered.
pub fn integrate_piecewise<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    piecewise(f, a, b, breaks, spec, false)
}

/// As [`integrate_piecewise`], but every finite piece is mapped through
/// `x = lo + (hi - lo)(3s² - 2s³)`. The map flattens square-root behaviour at
/// piece ends, which otherwise stalls Newton–Cotes refinement.
pub fn integrate_piecewise_graded<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    piecewise(f, a, b, breaks, spec, true)
}

fn piecewise<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
    graded: bool,
) -> Result<f64, QuadratureError> {
    if !(a.is_finite() && a <= b) || b.is_nan() {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    let mut points: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b && p.is_finite()).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    // Each piece is sampled a hair inside its ends so a jump located at a
    // breakpoint is seen from the correct side.
    let piece = |f: &mut F, lo: f64, hi: f64| {
        let inset = 1e-9 * (hi - lo);
        if graded {
            let w = hi - lo;
            integrate(
                |s| {
                    let x = lo + w * s * s * (3.0 - 2.0 * s);
                    let jac = 6.0 * w * s * (1.0 - s);
                    if jac == 0.0 {
                        0.0
                    } else {
                        f(x.clamp(lo + inset, hi - inset)) * jac
                    }
                },
                0.0,
                1.0,
                spec,
            )
        } else {
            integrate(|x| f(x.clamp(lo + inset, hi - inset)), lo, hi, spec)
        }
    };
    let mut total = 0.0;
    let mut left = a;
    for &p in &points {
        total += piece(&mut f, left, p)?;
        left = p;
    }
    if b.is_finite() {
        total += piece(&mut f, left, b)?;
    } else {
        let span = spec.tail_cutoff.max(left - a);
        let abs_tol = spec.abs_tol.max(spec.tail_tol * total.abs());
        let floor = left + 1e-9 * span;
        let tail =
            integrate_improper(|x| f(x.max(floor)), left, &QuadratureSpec { tail_cutoff: span, abs_tol, ..*spec })?;
        total += tail.value;
    }
    Ok(total)
}

/// Which chord kernel [`exp_series_integral`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKernel {
    /// `∫₀^x exp(-c√(x²-r²)) / √(x²-r²) dr`.
    InverseSqrt,
    /// `∫₀^x exp(-c√(x²-r²)) dr`.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEstimate {
    pub value: f64,
    /// Magnitude of the first omitted term.
    pub truncation_bound: f64,
    /// Set when the terms were still growing at the last index kept, or the
    /// first omitted term exceeds `1e-8` of the partial sum.
    pub accuracy_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesError {
    InvalidArgument { c: f64, x: f64, n_terms: usize },
}

impl fmt::Display for SeriesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesError::InvalidArgument { c, x, n_terms } => {
                write!(f, "series needs c >= 0, x > 0, n_terms >= 1; got c = {c}, x = {x}, n_terms = {n_terms}")
            }
        }
    }
}

const SERIES_WARN_RATIO: f64 = 1e-8;

/// Term-wise integral of the exponential series of a chord kernel, keeping
/// `n_terms` terms.
///
/// With `r = x sin u` both kernels reduce to Wallis integrals
/// `W_m = ∫₀^{π/2} cos^m u du`:
/// `InverseSqrt = Σ (-cx)^k W_k / k!` and `Plain = x Σ (-cx)^k W_{k+1} / k!`.
pub fn exp_series_integral(
    c: f64,
    x: f64,
    n_terms: usize,
    kernel: SeriesKernel,
) -> Result<SeriesEstimate, SeriesError> {
    if !(c >= 0.0 && c.is_finite() && x > 0.0 && x.is_finite() && n_terms >= 1) {
        return Err(SeriesError::InvalidArgument { c, x, n_terms });
    }
    let z = c * x;
    let shift = match kernel {
        SeriesKernel::InverseSqrt => 0,
        SeriesKernel::Plain => 1,
    };
    let scale = match kernel {
        SeriesKernel::InverseSqrt => 1.0,
        SeriesKernel::Plain => x,
    };
    // Wallis numbers W_{m-1}, W_m for m = shift.
    let mut wallis = WallisPair::new();
    for _ in 0..shift {
        wallis.advance();
    }
    let mut power = Dd::ONE; // z^k / k!
    let mut sum = Dd::ZERO;
    let mut last_mag = f64::INFINITY;
    let mut growing = false;
    for k in 0..n_terms {
        if k > 0 {
            power = power.mul_f64(z).div_f64(k as f64);
            wallis.advance();
        }
        let term = power.mul(wallis.current);
        let mag = term.hi.abs();
        growing = mag > last_mag;
        last_mag = mag;
        sum = if k % 2 == 0 { sum.add(term) } else { sum.sub(term) };
    }
    let next_power = power.mul_f64(z).div_f64(n_terms as f64);
    wallis.advance();
    let next = next_power.mul(wallis.current).hi.abs();
    let value = sum.to_f64();
    Ok(SeriesEstimate {
        value: scale * value,
        truncation_bound: scale * next,
        accuracy_warning: growing || next > SERIES_WARN_RATIO * value.abs(),
    })
}

/// Smallest term count whose truncation bound is below `rel_tol` times the
/// partial sum, capped at `max_terms`.
pub fn series_terms_for(c: f64, x: f64, kernel: SeriesKernel, rel_tol: f64, max_terms: usize) -> usize {
    let z = c * x;
    let shift = if kernel == SeriesKernel::Plain { 1 } else { 0 };
    let mut wallis = WallisPair::new();
    for _ in 0..shift {
        wallis.advance();
    }
    // Lower bound on the value for the stopping test: the kernels exceed
    // W_shift · exp(-z).
    let floor = wallis.current.hi * libm::exp(-z);
    let mut power = 1.0;
    for k in 1..=max_terms {
        power *= z / k as f64;
        wallis.advance();
        if power * wallis.current.hi <= rel_tol * floor && k as f64 > z {
            return k;
        }
    }
    max_terms
}

/// Consecutive Wallis numbers, `current = W_m`, `previous = W_{m-1}`.
struct WallisPair {
    m: usize,
    previous: Dd,
    current: Dd,
}

impl WallisPair {
    fn new() -> Self {
        WallisPair { m: 0, previous: Dd::ONE, current: Dd::FRAC_PI_2 }
    }

    fn advance(&mut self) {
        let m = self.m + 1;
        let next = if m == 1 { Dd::ONE } else { self.previous.mul_f64((m - 1) as f64).div_f64(m as f64) };
        self.previous = self.current;
        self.current = next;
        self.m = m;
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    const FRAC_PI_2: Dd = Dd { hi: FRAC_PI_2, lo: 6.123_233_995_736_766e-17 };

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let u = Dd::quick_two_sum(s.hi, s.lo + t.hi);
        Dd::quick_two_sum(u.hi, u.lo + t.lo)
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = fma(self.hi, o.hi, -p);
        Dd::quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = fma(self.hi, b, -p);
        Dd::quick_two_sum(p, e + self.lo * b)
    }

    fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self.sub(Dd { hi: q1, lo: 0.0 }.mul_f64(b));
        let q2 = r.hi / b;
        let r = r.sub(Dd { hi: q2, lo: 0.0 }.mul_f64(b));
        let q3 = r.hi / b;
        Dd::quick_two_sum(q1, q2).add(Dd { hi: q3, lo: 0.0 })
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::{cos, exp, sin};

    fn simpson() -> QuadratureSpec {
        QuadratureSpec::default().with_rule(QuadratureRule::CompositeNewtonCotes(NewtonCotes::Simpson))
    }

    // Independent oracle: the kernels after r = x sin u, by adaptive Boole.
    fn kernel_by_substitution(c: f64, x: f64, kernel: SeriesKernel) -> f64 {
        let spec = QuadratureSpec::default()
            .with_rule(QuadratureRule::AdaptiveSubdivision(NewtonCotes::Boole))
            .with_tol(1e-14)
            .with_max_panels(1 << 20);
        integrate(
            |u| {
                let s = x * cos(u);
                match kernel {
                    SeriesKernel::InverseSqrt => exp(-c * s),
                    SeriesKernel::Plain => x * cos(u) * exp(-c * s),
                }
            },
            0.0,
            FRAC_PI_2,
            &spec,
        )
        .unwrap()
    }

    #[test]
    fn constant_is_exact() {
        for rule in [NewtonCotes::Trapezoid, NewtonCotes::Simpson, NewtonCotes::Boole] {
            let spec = QuadratureSpec::default().with_rule(QuadratureRule::CompositeNewtonCotes(rule));
            assert_eq!(integrate(|_| 1.0, 0.0, 1.0, &spec).unwrap(), 1.0);
            let spec = QuadratureSpec::default().with_rule(QuadratureRule::AdaptiveSubdivision(rule));
            assert!((integrate(|_| 1.0, 0.0, 1.0, &spec).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn simpson_square() {
        let v = integrate(|x| x * x, 0.0, 1.0, &simpson()).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_matches_composite_rule_at_same_panels() {
        // The Romberg path must reproduce composite Boole exactly.
        let f = |x: f64| exp(sin(3.0 * x));
        let spec = QuadratureSpec::default()
            .with_rule(QuadratureRule::AdaptiveSubdivision(NewtonCotes::Boole))
            .with_panels(2)
            .with_tol(1e-13);
        let adaptive = integrate(f, 0.0, 2.0, &spec).unwrap();
        let fixed = integrate(
            f,
            0.0,
            2.0,
            &QuadratureSpec::default()
                .with_rule(QuadratureRule::CompositeNewtonCotes(NewtonCotes::Boole))
                .with_panels(256),
        )
        .unwrap();
        assert!((adaptive - fixed).abs() < 1e-12, "{adaptive} vs {fixed}");
    }

    #[test]
    fn smooth_integral_converges_for_each_order() {
        // ∫₀^π sin = 2
        for rule in [NewtonCotes::Trapezoid, NewtonCotes::Simpson, NewtonCotes::Boole] {
            let spec = QuadratureSpec::default()
                .with_rule(QuadratureRule::AdaptiveSubdivision(rule))
                .with_tol(1e-10)
                .with_max_panels(1 << 22);
            let v = integrate(sin, 0.0, core::f64::consts::PI, &spec).unwrap();
            assert!((v - 2.0).abs() < 1e-8, "{rule:?}: {v}");
        }
    }

    #[test]
    fn empty_and_invalid_intervals() {
        assert_eq!(integrate(|x| x, 2.0, 2.0, &simpson()).unwrap(), 0.0);
        assert!(matches!(integrate(|x| x, 2.0, 1.0, &simpson()), Err(QuadratureError::InvalidInterval { .. })));
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let spec = QuadratureSpec::default().with_panels(0);
        assert!(matches!(integrate(|x| x, 0.0, 1.0, &spec), Err(QuadratureError::InvalidSpec(_))));
        let spec = QuadratureSpec::default().with_tol(1.5);
        assert!(matches!(integrate(|x| x, 0.0, 1.0, &spec), Err(QuadratureError::InvalidSpec(_))));
    }

    #[test]
    fn non_finite_reports_abscissa() {
        let err = integrate(|x| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &simpson()).unwrap_err();
        match err {
            QuadratureError::NonFinite { abscissa, .. } => assert!(abscissa > 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn improper_exponential() {
        let spec = QuadratureSpec::default();
        let est = integrate_improper(|x| exp(-x), 0.0, &spec).unwrap();
        assert!((est.value - 1.0).abs() < spec.tail_tol, "{}", est.value);
        assert!(est.cutoff > 10.0);
    }

    #[test]
    fn improper_lorentzian() {
        let spec = QuadratureSpec::default();
        let est = integrate_improper(|x| 1.0 / (1.0 + x * x), 0.0, &spec).unwrap();
        assert!((est.value / FRAC_PI_2 - 1.0).abs() < spec.tail_tol, "{}", est.value);
    }

    #[test]
    fn improper_zero_integrand_is_exactly_zero() {
        let est = integrate_improper(|_| 0.0, 0.0, &QuadratureSpec::default()).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn improper_divergent_reports_last_two_estimates() {
        let spec = QuadratureSpec { max_doublings: 20, ..QuadratureSpec::default() };
        match integrate_improper(|x| 1.0 / (1.0 + x), 0.0, &spec).unwrap_err() {
            QuadratureError::NonConvergence { last, previous, .. } => assert!(last > previous),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn improper_is_stable_under_larger_cap() {
        let f = |x: f64| exp(-x) * (1.0 + sin(x));
        let spec = QuadratureSpec::default();
        let base = integrate_improper(f, 0.0, &spec).unwrap();
        for doublings in [70, 80, 120] {
            let wider = integrate_improper(f, 0.0, &QuadratureSpec { max_doublings: doublings, ..spec }).unwrap();
            assert!((wider.value - base.value).abs() <= spec.tail_tol * base.value.abs());
        }
    }

    #[test]
    fn series_at_zero_decay() {
        let plain = exp_series_integral(0.0, 7.5, 30, SeriesKernel::Plain).unwrap();
        assert!((plain.value - 7.5).abs() < 1e-14);
        let arcsine = exp_series_integral(0.0, 7.5, 30, SeriesKernel::InverseSqrt).unwrap();
        assert!((arcsine.value - FRAC_PI_2).abs() < 1e-15);
        assert!(!plain.accuracy_warning && !arcsine.accuracy_warning);
    }

    #[test]
    fn series_matches_frozen_high_precision_values() {
        // 30-digit evaluations of ∫₀^{π/2} e^{-z cos u} du and ∫₀^{π/2} cos u e^{-z cos u} du.
        let cases = [
            (2.0, 0.537_450_389_063_732_8, 0.233_644_494_805_424_83),
            (20.0, 0.050_128_016_658_669_32, 0.002_519_528_460_510_184_3),
            (0.5, 1.156_487_283_781_754, 0.679_632_754_714_987_7),
        ];
        for (z, k, m) in cases {
            let inv = exp_series_integral(z, 1.0, 120, SeriesKernel::InverseSqrt).unwrap();
            let plain = exp_series_integral(z, 1.0, 120, SeriesKernel::Plain).unwrap();
            assert!((inv.value - k).abs() < 1e-14, "z={z}: {} vs {k}", inv.value);
            assert!((plain.value - m).abs() < 1e-14, "z={z}: {} vs {m}", plain.value);
        }
    }

    #[test]
    fn series_matches_substituted_quadrature_at_reference_point() {
        for kernel in [SeriesKernel::InverseSqrt, SeriesKernel::Plain] {
            let s = exp_series_integral(0.2, 10.0, 30, kernel).unwrap();
            let q = kernel_by_substitution(0.2, 10.0, kernel);
            assert!((s.value - q).abs() < 1e-8, "{kernel:?}: {} vs {q}", s.value);
            assert!(s.truncation_bound < 1e-12);
        }
    }

    #[test]
    fn series_matches_quadrature_on_grid() {
        for &c in &[0.001, 0.01, 0.05, 0.2, 1.0] {
            for &x in &[0.5, 5.0, 20.0, 80.0, 200.0] {
                if c * x > 20.0 {
                    continue;
                }
                for kernel in [SeriesKernel::InverseSqrt, SeriesKernel::Plain] {
                    let n = series_terms_for(c, x, kernel, 1e-16, 400);
                    let s = exp_series_integral(c, x, n, kernel).unwrap();
                    let q = kernel_by_substitution(c, x, kernel);
                    assert!((s.value - q).abs() < 1e-8 * x.max(1.0), "c={c} x={x} {kernel:?}: {} vs {q}", s.value);
                    assert!(!s.accuracy_warning);
                }
            }
        }
    }

    #[test]
    fn thirty_terms_are_not_enough_at_the_grid_edge() {
        let s = exp_series_integral(1.0, 20.0, 30, SeriesKernel::InverseSqrt).unwrap();
        assert!(s.accuracy_warning);
        assert!(s.truncation_bound > 1e-3);
        assert!(series_terms_for(1.0, 20.0, SeriesKernel::InverseSqrt, 1e-16, 400) > 60);
    }

    #[test]
    fn series_rejects_bad_arguments() {
        assert!(exp_series_integral(-1.0, 1.0, 10, SeriesKernel::Plain).is_err());
        assert!(exp_series_integral(1.0, 0.0, 10, SeriesKernel::Plain).is_err());
        assert!(exp_series_integral(1.0, 1.0, 0, SeriesKernel::Plain).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn simpson_is_exact_on_cubics(
                c0 in -10.0f64..10.0, c1 in -10.0f64..10.0, c2 in -10.0f64..10.0, c3 in -10.0f64..10.0,
                a in -50.0f64..50.0, len in 0.01f64..20.0, panels in 1usize..9,
            ) {
                let b = a + len;
                let f = |x: f64| ((c3 * x + c2) * x + c1) * x + c0;
                let anti = |x: f64| (((c3 / 4.0 * x + c2 / 3.0) * x + c1 / 2.0) * x + c0) * x;
                let spec = simpson().with_panels(panels);
                let v = integrate(f, a, b, &spec).unwrap();
                let exact = anti(b) - anti(a);
                let scale = [c0, c1, c2, c3].iter().map(|c| c.abs()).sum::<f64>()
                    * (1.0 + a.abs().max(b.abs())).powi(4) * len;
                prop_assert!((v - exact).abs() <= 1e-13 * scale, "{} vs {}", v, exact);
            }
        }
    }
}
