//! Distance distributions and probability generating functionals of the
//! deployment processes.
//!
//! Conventions: roads form a Poisson line process parameterized by
//! `(p, φ) ∈ [0, ∞) × [0, 2π)` with intensity `λ_R dp dφ`, so the number of
//! roads hitting `B(0, x)` is Poisson with mean `2π λ_R x`. The typical user
//! sits at the origin on its own road; small cells on that road are the LOS
//! process, small cells on every other road the NLOS process. Macro cells
//! form a planar PPP and are LOS inside the ball of radius `D_M`.

use alloc::vec::Vec;
use core::cell::Cell;
use core::f64::consts::{FRAC_PI_2, PI};
use core::fmt;

use libm::{asin, atan2, cos, exp, expm1, sin, sqrt};

use crate::model::{LinkClass, SystemParams, Tier, Visibility};
use crate::numerics::{
    exp_series_integral, integrate, integrate_piecewise, integrate_piecewise_graded, series_terms_for, NewtonCotes,
    QuadratureError, QuadratureRule, QuadratureSpec, SeriesKernel,
};

/// A function of radius used as a PGF argument.
///
/// Admissible arguments take values in `[0, 1]`. `breakpoints` lists radii
/// where the function is non-smooth or changes scale; integrators split there.
pub trait RadialFunction {
    fn eval(&self, r: f64) -> f64;

    /// `1 - ν(r)`; implementations override this where the subtraction
    /// would cancel.
    fn complement(&self, r: f64) -> f64 {
        1.0 - self.eval(r)
    }

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Closed form of `∫_{t0}^∞ (1 - ν(√(r² + t²))) dt` for any real `t0`,
    /// where one is known.
    fn slice_integral(&self, _r: f64, _t0: f64) -> Option<f64> {
        None
    }
}

impl<F: Fn(f64) -> f64> RadialFunction for F {
    fn eval(&self, r: f64) -> f64 {
        self(r)
    }
}

/// `ν(r) = 1{r > radius}`: the PGF of this argument is a void probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutsideBall {
    pub radius: f64,
}

impl RadialFunction for OutsideBall {
    fn eval(&self, r: f64) -> f64 {
        if r > self.radius {
            1.0
        } else {
            0.0
        }
    }

    fn complement(&self, r: f64) -> f64 {
        if r > self.radius {
            0.0
        } else {
            1.0
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        alloc::vec![self.radius]
    }

    fn slice_integral(&self, r: f64, t0: f64) -> Option<f64> {
        if r > self.radius {
            return Some(0.0);
        }
        let c = sqrt(self.radius * self.radius - r * r);
        Some((c - t0.max(-c)).max(0.0))
    }
}

/// `ν(r) = r^α / (r^α + a^α)`: the Laplace transform of one Rayleigh-faded
/// interferer at distance `r` whose power relative to the threshold is `a^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadedInterference {
    pub scale: f64,
    pub alpha: f64,
}

impl FadedInterference {
    /// Argument for an interferer with mean power `p r^-α` against a
    /// threshold `s` (Laplace variable `1/s`).
    pub fn new(power_at_unit: f64, alpha: f64, threshold: f64) -> Self {
        FadedInterference { scale: libm::pow(power_at_unit / threshold, 1.0 / alpha), alpha }
    }
}

impl RadialFunction for FadedInterference {
    fn eval(&self, r: f64) -> f64 {
        1.0 / (1.0 + libm::pow(self.scale / r, self.alpha))
    }

    fn complement(&self, r: f64) -> f64 {
        1.0 / (1.0 + libm::pow(r / self.scale, self.alpha))
    }

    fn breakpoints(&self) -> Vec<f64> {
        alloc::vec![self.scale]
    }

    fn slice_integral(&self, r: f64, t0: f64) -> Option<f64> {
        let half = |s: f64| -> Option<f64> {
            if self.alpha == 2.0 {
                Some(faded_slice_alpha2(self.scale, r, s))
            } else if self.alpha == 4.0 {
                Some(faded_slice_alpha4(self.scale, r, s))
            } else {
                None
            }
        };
        if t0 >= 0.0 {
            half(t0)
        } else {
            Some(2.0 * half(0.0)? - half(-t0)?)
        }
    }
}

/// `∫_s^∞ a² / (a² + r² + t²) dt`, `s ≥ 0`.
fn faded_slice_alpha2(a: f64, r: f64, s: f64) -> f64 {
    let b = sqrt(a * a + r * r);
    a * a / b * atan2(b, s)
}

/// `∫_s^∞ a⁴ / (a⁴ + (r² + t²)²) dt`, `s ≥ 0`.
fn faded_slice_alpha4(a: f64, r: f64, s: f64) -> f64 {
    let a2 = a * a;
    // The integrand is `a² Im 1/(t² + C²)` with `C² = r² - i a²`.
    let c2 = Complex::new(r * r, -a2);
    if s * s > 4.0 * c2.abs() {
        // atan(C/s)/C = Σ (-1)^k C^{2k} / ((2k+1) s^{2k+1}); the k = 0 term is real.
        let q = c2.scale(1.0 / (s * s));
        let mut power = q;
        let mut sum = 0.0;
        for k in 1..60 {
            let term = power.im / (2 * k + 1) as f64;
            sum += if k % 2 == 1 { -term } else { term };
            if power.abs() <= 1e-17 * libm::fabs(sum) {
                break;
            }
            power = power.mul(q);
        }
        return a2 * sum / s;
    }
    if r * r > 1e6 * a2 {
        // Far field: `a⁴ ∫_s^∞ (r² + t²)^-2 dt` with relative error below `(a/r)⁴`.
        let theta = atan2(r, s);
        let u = if r > 0.0 { theta / r } else { 1.0 / s };
        let core = if theta < 1e-2 {
            let r2 = r * r;
            u * u * u / 3.0 - libm::pow(u, 5.0) * r2 / 15.0 + 2.0 * libm::pow(u, 7.0) * r2 * r2 / 315.0
        } else {
            (theta - sin(theta) * cos(theta)) / (2.0 * r * r * r)
        };
        return a2 * a2 * core;
    }
    let c = c2.sqrt();
    let angle = if s == 0.0 { Complex::new(FRAC_PI_2, 0.0) } else { c.scale(1.0 / s).atan() };
    a2 * angle.div(c).im
}

/// Minimal complex arithmetic for the closed-form slice integrals.
#[derive(Debug, Clone, Copy)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    fn abs(self) -> f64 {
        libm::hypot(self.re, self.im)
    }

    fn scale(self, k: f64) -> Self {
        Complex::new(self.re * k, self.im * k)
    }

    fn mul(self, o: Self) -> Self {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    fn div(self, o: Self) -> Self {
        let d = o.re * o.re + o.im * o.im;
        Complex::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }

    /// Principal square root.
    fn sqrt(self) -> Self {
        let m = self.abs();
        let re = sqrt(0.5 * (m + self.re));
        let im = sqrt(0.5 * (m - self.re));
        Complex::new(re, if self.im < 0.0 { -im } else { im })
    }

    fn ln(self) -> Self {
        Complex::new(libm::log(self.abs()), atan2(self.im, self.re))
    }

    /// `atan z = (i/2) (ln(1 - iz) - ln(1 + iz))`.
    fn atan(self) -> Self {
        let a = Complex::new(1.0 + self.im, -self.re).ln();
        let b = Complex::new(1.0 - self.im, self.re).ln();
        Complex::new(-0.5 * (a.im - b.im), 0.5 * (a.re - b.re))
    }
}

/// `ν` forced to 1 inside `B(0, radius)`: points there are known absent.
#[derive(Debug, Clone, Copy)]
pub struct ExcludeBall<'a, N: ?Sized> {
    pub inner: &'a N,
    pub radius: f64,
}

impl<N: RadialFunction + ?Sized> RadialFunction for ExcludeBall<'_, N> {
    fn eval(&self, r: f64) -> f64 {
        if r < self.radius {
            1.0
        } else {
            self.inner.eval(r)
        }
    }

    fn complement(&self, r: f64) -> f64 {
        if r < self.radius {
            0.0
        } else {
            self.inner.complement(r)
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.inner.breakpoints();
        b.push(self.radius);
        b
    }

    fn slice_integral(&self, r: f64, t0: f64) -> Option<f64> {
        if r >= self.radius {
            return self.inner.slice_integral(r, t0);
        }
        let c = sqrt(self.radius * self.radius - r * r);
        if t0 >= c {
            self.inner.slice_integral(r, t0)
        } else if t0 >= -c {
            self.inner.slice_integral(r, c)
        } else {
            let inside = self.inner.slice_integral(r, t0)? - self.inner.slice_integral(r, -c)?;
            Some(self.inner.slice_integral(r, c)? + inside)
        }
    }
}

/// A closure together with its breakpoints.
#[derive(Debug, Clone)]
pub struct WithBreakpoints<F> {
    pub f: F,
    pub points: Vec<f64>,
}

impl<F: Fn(f64) -> f64> RadialFunction for WithBreakpoints<F> {
    fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.points.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryError {
    /// A quadrature failed; `term` names the integral.
    Quadrature {
        term: &'static str,
        source: QuadratureError,
    },
    /// A PGF argument left `[0, 1]`.
    Inadmissible {
        r: f64,
        value: f64,
    },
    /// A series evaluation was flagged as inaccurate.
    SeriesAccuracy {
        z: f64,
        truncation_bound: f64,
    },
    InvalidArgument {
        name: &'static str,
        value: f64,
    },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::Quadrature { term, source } => write!(f, "{term}: {source}"),
            GeometryError::Inadmissible { r, value } => {
                write!(f, "PGF argument must lie in [0, 1]; got {value} at r = {r}")
            }
            GeometryError::SeriesAccuracy { z, truncation_bound } => {
                write!(f, "series at z = {z} is unreliable (next term {truncation_bound:e})")
            }
            GeometryError::InvalidArgument { name, value } => write!(f, "invalid {name}: {value}"),
        }
    }
}

fn quad(term: &'static str) -> impl Fn(QuadratureError) -> GeometryError {
    move |source| GeometryError::Quadrature { term, source }
}

/// Default accuracy for PGF and distance-law integrals.
pub fn pgf_spec() -> QuadratureSpec {
    QuadratureSpec {
        rule: QuadratureRule::AdaptiveSubdivision(NewtonCotes::Simpson),
        panels: 4,
        tail_cutoff: 1.0,
        tail_tol: 1e-8,
        abs_tol: 1e-14,
        max_panels: 1 << 14,
        max_doublings: 80,
    }
}

// ---------------------------------------------------------------------------
// Closed-form nearest-distance laws.

/// Density of the nearest LOS small cell: `2λ_S exp(-2λ_S x)`.
pub fn los_sbs_nearest_pdf(x: f64, params: &SystemParams) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    2.0 * params.lambda_s * exp(-2.0 * params.lambda_s * x)
}

pub fn los_sbs_nearest_cdf(x: f64, params: &SystemParams) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    -expm1(-2.0 * params.lambda_s * x)
}

/// Probability that at least one macro cell lies inside the LOS ball.
pub fn w1(params: &SystemParams) -> f64 {
    -expm1(-PI * params.lambda_m * params.d_m * params.d_m)
}

/// `(f_ML(x), f_MN(x))`: the nearest-macro density on `[0, D_M)` and the
/// density beyond `D_M` given the LOS ball is empty.
pub fn macro_nearest_pdfs(x: f64, params: &SystemParams) -> (f64, f64) {
    let lm = params.lambda_m;
    let d = params.d_m;
    if x < 0.0 {
        (0.0, 0.0)
    } else if x < d {
        (2.0 * PI * lm * x * exp(-PI * lm * x * x), 0.0)
    } else {
        (0.0, 2.0 * PI * lm * x * exp(-PI * lm * (x * x - d * d)))
    }
}

// ---------------------------------------------------------------------------
// Chord kernels and the NLOS nearest-distance law.

/// How the chord kernels are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    /// Double-double series for small `z`, the asymptotic expansion beyond.
    Auto,
    /// Series with a fixed term count; an accuracy warning is an error.
    Series(usize),
    /// Quadrature after `r = x sin u`.
    Quadrature,
}

const SERIES_LIMIT_Z: f64 = 40.0;

/// Normalized chord kernel at `z = c x`:
/// `InverseSqrt → ∫₀^{π/2} e^{-z cos u} du`, `Plain → ∫₀^{π/2} cos u e^{-z cos u} du`.
pub fn chord_kernel(z: f64, kernel: SeriesKernel, method: KernelMethod) -> Result<f64, GeometryError> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(GeometryError::InvalidArgument { name: "z", value: z });
    }
    let series = |n: usize| -> Result<f64, GeometryError> {
        let est = exp_series_integral(z, 1.0, n, kernel)
            .map_err(|_| GeometryError::InvalidArgument { name: "z", value: z })?;
        if est.accuracy_warning {
            return Err(GeometryError::SeriesAccuracy { z, truncation_bound: est.truncation_bound });
        }
        Ok(est.value)
    };
    match method {
        KernelMethod::Series(n) => series(n),
        KernelMethod::Quadrature => chord_kernel_quadrature(z, kernel),
        KernelMethod::Auto if z <= SERIES_LIMIT_Z => series(series_terms_for(z, 1.0, kernel, 1e-17, 400)),
        KernelMethod::Auto => Ok(chord_kernel_asymptotic(z, kernel)),
    }
}

/// Large-`z` expansions `K(z) ~ Σ ((2k-1)!!)² / z^{2k+1}` and, since the
/// plain kernel is `-K'`, `M(z) ~ Σ (2k+1) ((2k-1)!!)² / z^{2k+2}`. Both are
/// summed up to the smallest term; beyond `z = 40` that term is below `1e-30`
/// relative and the exponentially small remainder is `O(e^{-z})`.
fn chord_kernel_asymptotic(z: f64, kernel: SeriesKernel) -> f64 {
    let inv2 = 1.0 / (z * z);
    let mut coeff = 1.0 / z; // ((2k-1)!!)² / z^{2k+1}
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for k in 0..200 {
        let term = match kernel {
            SeriesKernel::InverseSqrt => coeff,
            SeriesKernel::Plain => (2 * k + 1) as f64 * coeff / z,
        };
        if term > last || term < 1e-22 * sum {
            break;
        }
        sum += term;
        last = term;
        let odd = (2 * k + 1) as f64;
        coeff *= odd * odd * inv2;
    }
    sum
}

fn chord_kernel_quadrature(z: f64, kernel: SeriesKernel) -> Result<f64, GeometryError> {
    // With v = π/2 - u the integrand is e^{-z sin v}, concentrated in v ≲ 1/z.
    let spec = QuadratureSpec::default()
        .with_rule(QuadratureRule::AdaptiveSubdivision(NewtonCotes::Boole))
        .with_panels(4)
        .with_tol(1e-13)
        .with_max_panels(1 << 18);
    let f = |v: f64| {
        let s = sin(v);
        match kernel {
            SeriesKernel::InverseSqrt => exp(-z * s),
            SeriesKernel::Plain => s * exp(-z * s),
        }
    };
    let edge = if z > 0.0 { (60.0 / z).min(FRAC_PI_2) } else { FRAC_PI_2 };
    let mut v = integrate(f, 0.0, edge, &spec).map_err(quad("chord kernel"))?;
    if edge < FRAC_PI_2 {
        v += integrate(f, edge, FRAC_PI_2, &spec.with_tol(1e-6)).map_err(quad("chord kernel tail"))?;
    }
    Ok(v)
}

/// Probability that no NLOS small cell lies in `B(0, x)`:
/// `exp(-2π λ_R (x - ∫₀^x e^{-2λ_S √(x²-r²)} dr))`.
pub fn nlos_void_probability(x: f64, params: &SystemParams, method: KernelMethod) -> Result<f64, GeometryError> {
    if x <= 0.0 {
        return Ok(1.0);
    }
    let z = 2.0 * params.lambda_s * x;
    let chord = x * chord_kernel(z, SeriesKernel::Plain, method)?;
    Ok(exp(-2.0 * PI * params.lambda_r * (x - chord)))
}

pub fn nlos_nearest_cdf(x: f64, params: &SystemParams, method: KernelMethod) -> Result<f64, GeometryError> {
    Ok(1.0 - nlos_void_probability(x, params, method)?)
}

/// Density of the nearest NLOS small cell, the derivative of
/// [`nlos_nearest_cdf`]: `2π λ_R V(x) · 2λ_S x ∫₀^x e^{-2λ_S√(x²-r²)} / √(x²-r²) dr`.
pub fn nlos_nearest_pdf(x: f64, params: &SystemParams, method: KernelMethod) -> Result<f64, GeometryError> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let z = 2.0 * params.lambda_s * x;
    let void = nlos_void_probability(x, params, method)?;
    let k = chord_kernel(z, SeriesKernel::InverseSqrt, method)?;
    Ok(2.0 * PI * params.lambda_r * void * z * k)
}

/// The variant with `+A2` inside the exponent and `λ_S` where the derivative
/// produces `2λ_S`. Kept only to show that it is not a probability density.
pub fn nlos_nearest_pdf_plus_variant(x: f64, params: &SystemParams) -> Result<f64, GeometryError> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let z = 2.0 * params.lambda_s * x;
    let a2 = x * chord_kernel(z, SeriesKernel::Plain, KernelMethod::Auto)?;
    let a3 = chord_kernel(z, SeriesKernel::InverseSqrt, KernelMethod::Auto)?;
    Ok(2.0 * PI * params.lambda_r * exp(-2.0 * PI * params.lambda_r * (x + a2)) * params.lambda_s * x * a3)
}

/// Nearest-distance law of one visibility-level class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestDistanceLaw {
    class: LinkClass,
    params: SystemParams,
    method: KernelMethod,
}

impl NearestDistanceLaw {
    /// The RAT of `class` is ignored.
    pub fn new(class: LinkClass, params: &SystemParams) -> Self {
        NearestDistanceLaw { class: class.micro_wave(), params: *params, method: KernelMethod::Auto }
    }

    pub fn with_method(mut self, method: KernelMethod) -> Self {
        self.method = method;
        self
    }

    pub fn class(&self) -> LinkClass {
        self.class
    }

    /// `(lower, upper)` of the support.
    pub fn support(&self) -> (f64, f64) {
        match (self.class.tier(), self.class.visibility()) {
            (Tier::Macro, Visibility::Los) => (0.0, self.params.d_m),
            (Tier::Macro, Visibility::Nlos) => (self.params.d_m, f64::INFINITY),
            _ => (0.0, f64::INFINITY),
        }
    }

    /// `cdf(∞)`: below 1 only for the LOS macro law.
    pub fn mass(&self) -> f64 {
        match (self.class.tier(), self.class.visibility()) {
            (Tier::Macro, Visibility::Los) => w1(&self.params),
            _ => 1.0,
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64, GeometryError> {
        let p = &self.params;
        Ok(match (self.class.tier(), self.class.visibility()) {
            (Tier::Macro, Visibility::Los) => macro_nearest_pdfs(x, p).0,
            (Tier::Macro, Visibility::Nlos) => macro_nearest_pdfs(x, p).1,
            (Tier::Small, Visibility::Los) => los_sbs_nearest_pdf(x, p),
            (Tier::Small, Visibility::Nlos) => return nlos_nearest_pdf(x, p, self.method),
        })
    }

    pub fn cdf(&self, x: f64) -> Result<f64, GeometryError> {
        let p = &self.params;
        Ok(match (self.class.tier(), self.class.visibility()) {
            (Tier::Macro, Visibility::Los) => {
                let r = x.clamp(0.0, p.d_m);
                -expm1(-PI * p.lambda_m * r * r)
            }
            (Tier::Macro, Visibility::Nlos) => {
                if x <= p.d_m {
                    0.0
                } else {
                    -expm1(-PI * p.lambda_m * (x * x - p.d_m * p.d_m))
                }
            }
            (Tier::Small, Visibility::Los) => los_sbs_nearest_cdf(x, p),
            (Tier::Small, Visibility::Nlos) => return nlos_nearest_cdf(x, p, self.method),
        })
    }

    /// Numerical `∫ pdf` over the support.
    pub fn integrated_mass(&self) -> Result<f64, GeometryError> {
        let (lo, hi) = self.support();
        let err = Cell::new(None);
        let f = |x: f64| match self.pdf(x) {
            Ok(v) => v,
            Err(e) => {
                err.set(Some(e));
                f64::NAN
            }
        };
        let scale = self.typical_scale();
        let spec = QuadratureSpec { tail_cutoff: scale, ..pgf_spec() };
        let v = integrate_piecewise(f, lo, hi, &[lo + scale], &spec);
        if let Some(e) = err.get() {
            return Err(e);
        }
        v.map_err(quad("nearest-distance mass"))
    }

    fn typical_scale(&self) -> f64 {
        let p = &self.params;
        match self.class.tier() {
            Tier::Macro => 1.0 / sqrt(PI * p.lambda_m),
            Tier::Small => match self.class.visibility() {
                Visibility::Los => 1.0 / (2.0 * p.lambda_s),
                Visibility::Nlos => {
                    // Cox intensity πλ_Rλ_S sets the nearest-point scale.
                    1.0 / sqrt(PI * p.lambda_r * p.lambda_s)
                }
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Probability generating functionals.

/// Records the first inadmissible argument value seen during a quadrature.
struct Admissibility {
    bad: Cell<Option<(f64, f64)>>,
}

impl Admissibility {
    const SLACK: f64 = 1e-12;

    fn new() -> Self {
        Admissibility { bad: Cell::new(None) }
    }

    /// `1 - ν(r)`, recording violations.
    fn one_minus<N: RadialFunction + ?Sized>(&self, nu: &N, r: f64) -> f64 {
        let c = nu.complement(r);
        if !(-Self::SLACK..=1.0 + Self::SLACK).contains(&c) {
            if self.bad.get().is_none() {
                self.bad.set(Some((r, 1.0 - c)));
            }
            return f64::NAN;
        }
        c.clamp(0.0, 1.0)
    }

    fn check(&self) -> Result<(), GeometryError> {
        match self.bad.get() {
            Some((r, value)) => Err(GeometryError::Inadmissible { r, value }),
            None => Ok(()),
        }
    }
}

fn positive_breaks(points: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = points.iter().copied().filter(|p| p.is_finite() && *p > 0.0).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// `∫_{t0}^∞ (1 - ν(√(r² + t²))) dt`.
fn line_slice_integral<N: RadialFunction + ?Sized>(
    nu: &N,
    guard: &Admissibility,
    r: f64,
    t0: f64,
    radii: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    if let Some(v) = nu.slice_integral(r, t0) {
        return Ok(v);
    }
    let mut breaks: Vec<f64> =
        radii.iter().filter(|&&b| b > r).flat_map(|&b| [sqrt(b * b - r * r), -sqrt(b * b - r * r)]).collect();
    // Interference-type arguments change scale near the foot of the slice.
    breaks.push(t0 + r.max(1.0));
    let spec = QuadratureSpec { tail_cutoff: r.max(spec.tail_cutoff), ..*spec };
    integrate_piecewise(|t| guard.one_minus(nu, sqrt(r * r + t * t)), t0, f64::INFINITY, &breaks, &spec)
}

/// Conditional PGF of the NLOS (Cox) process given that `B(0, rho)` holds no
/// point:
/// `exp(-2π λ_R ∫₀^∞ e^{-2λ_S c(r)} (1 - exp(-2λ_S ∫_{c(r)}^∞ (1 - ν(√(r²+t²))) dt)) dr)`
/// with `c(r) = √(ρ² - r²)₊`. At `rho = 0` this is [`cox_pgf`].
pub fn cox_pgf_conditioned<N: RadialFunction + ?Sized>(
    nu: &N,
    rho: f64,
    params: &SystemParams,
    spec: &QuadratureSpec,
) -> Result<f64, GeometryError> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(GeometryError::InvalidArgument { name: "rho", value: rho });
    }
    let guard = Admissibility::new();
    let mut radii = nu.breakpoints();
    radii.push(rho);
    let radii = positive_breaks(&radii);
    let two_ls = 2.0 * params.lambda_s;
    let inner_err = Cell::new(None);
    let outer = |r: f64| {
        let chord = if r < rho { sqrt(rho * rho - r * r) } else { 0.0 };
        match line_slice_integral(nu, &guard, r, chord, &radii, spec) {
            Ok(j) => exp(-two_ls * chord) * -expm1(-two_ls * j),
            Err(e) => {
                if inner_err.get().is_none() {
                    inner_err.set(Some(e));
                }
                f64::NAN
            }
        }
    };
    let result = integrate_piecewise_graded(outer, 0.0, f64::INFINITY, &radii, spec);
    guard.check()?;
    if let Some(e) = inner_err.get() {
        return Err(GeometryError::Quadrature { term: "cox line integral", source: e });
    }
    let integral = result.map_err(quad("cox outer integral"))?;
    Ok(exp(-2.0 * PI * params.lambda_r * integral))
}

/// PGF of the NLOS (Cox) process:
/// `exp(-2π λ_R ∫₀^∞ [1 - exp(-2λ_S ∫₀^∞ (1 - ν(√(r²+t²))) dt)] dr)`.
pub fn cox_pgf<N: RadialFunction + ?Sized>(
    nu: &N,
    params: &SystemParams,
    spec: &QuadratureSpec,
) -> Result<f64, GeometryError> {
    cox_pgf_conditioned(nu, 0.0, params, spec)
}

/// PGF of a PPP on a randomly oriented line through a point at distance `d`,
/// with points on one ray at density `2λ_S`:
/// `(1/2π) ∫₀^{2π} exp(-2λ_S ∫₀^∞ (1 - ν(√(d²+t²+2td cos θ))) dt) dθ`.
pub fn line_pgf<N: RadialFunction + ?Sized>(
    nu: &N,
    d: f64,
    params: &SystemParams,
    spec: &QuadratureSpec,
) -> Result<f64, GeometryError> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(GeometryError::InvalidArgument { name: "d", value: d });
    }
    let guard = Admissibility::new();
    let radii = positive_breaks(&nu.breakpoints());
    let two_ls = 2.0 * params.lambda_s;
    let inner_err = Cell::new(None);
    let ray = |theta: f64| -> Result<f64, QuadratureError> {
        let c = cos(theta);
        let s = sin(theta);
        // Along the ray the distance is √((d sin θ)² + (t + d cos θ)²).
        if let Some(v) = nu.slice_integral(d * libm::fabs(s), d * c) {
            return Ok(v);
        }
        let mut breaks = Vec::new();
        for &b in &radii {
            let disc = b * b - d * d * s * s;
            if disc >= 0.0 {
                let root = sqrt(disc);
                breaks.push(-d * c + root);
                breaks.push(-d * c - root);
            }
        }
        breaks.push(d.max(1.0));
        let spec = QuadratureSpec { tail_cutoff: d.max(spec.tail_cutoff), ..*spec };
        integrate_piecewise(
            |t| guard.one_minus(nu, sqrt((d * d + t * t + 2.0 * t * d * c).max(0.0))),
            0.0,
            f64::INFINITY,
            &breaks,
            &spec,
        )
    };
    if d == 0.0 {
        let l = ray(0.0);
        guard.check()?;
        return Ok(exp(-two_ls * l.map_err(quad("line ray integral"))?));
    }
    let integrand = |theta: f64| match ray(theta) {
        Ok(l) => exp(-two_ls * l),
        Err(e) => {
            if inner_err.get().is_none() {
                inner_err.set(Some(e));
            }
            f64::NAN
        }
    };
    // The integrand is symmetric about θ = π; tangencies to circles of
    // radius b < d sit at θ = π - asin(b/d).
    let theta_breaks: Vec<f64> = radii.iter().filter(|&&b| b < d).map(|&b| PI - asin(b / d)).collect();
    let result = integrate_piecewise_graded(integrand, 0.0, PI, &theta_breaks, spec);
    guard.check()?;
    if let Some(e) = inner_err.get() {
        return Err(GeometryError::Quadrature { term: "line ray integral", source: e });
    }
    Ok(result.map_err(quad("line angle integral"))? / PI)
}

/// PGFL of a planar PPP of density `lambda` restricted to the annulus
/// `r_min ≤ r < r_max`: `exp(-2π λ ∫ (1 - ν(r)) r dr)`. `r_max` may be infinite.
pub fn ppp_pgfl_annulus<N: RadialFunction + ?Sized>(
    nu: &N,
    lambda: f64,
    r_min: f64,
    r_max: f64,
    spec: &QuadratureSpec,
) -> Result<f64, GeometryError> {
    if !(r_min >= 0.0 && r_min <= r_max) {
        return Err(GeometryError::InvalidArgument { name: "r_min", value: r_min });
    }
    if r_min == r_max || lambda == 0.0 {
        return Ok(1.0);
    }
    let guard = Admissibility::new();
    let radii = positive_breaks(&nu.breakpoints());
    let spec = QuadratureSpec { tail_cutoff: r_min.max(spec.tail_cutoff), ..*spec };
    let result = integrate_piecewise(|r| guard.one_minus(nu, r) * r, r_min, r_max, &radii, &spec);
    guard.check()?;
    let integral = result.map_err(quad("planar PGFL integral"))?;
    Ok(exp(-2.0 * PI * lambda * integral))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn fig2() -> SystemParams {
        SystemParams { lambda_s: 0.1, lambda_r: 1e-5, ..SystemParams::default() }
    }

    fn sparse() -> SystemParams {
        SystemParams { lambda_s: 0.01, lambda_r: 1e-5, ..SystemParams::default() }
    }

    #[test]
    fn los_law_at_origin_and_normalized() {
        let p = fig2();
        assert_eq!(los_sbs_nearest_pdf(0.0, &p), 0.2);
        let law = NearestDistanceLaw::new(LinkClass::SL_MM, &p);
        assert!((law.integrated_mass().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn macro_laws_have_stated_masses() {
        let p = SystemParams::default();
        let ml = NearestDistanceLaw::new(LinkClass::ML, &p);
        let mn = NearestDistanceLaw::new(LinkClass::MN, &p);
        assert!((ml.integrated_mass().unwrap() - w1(&p)).abs() < 1e-9);
        assert!((ml.mass() - w1(&p)).abs() < 1e-15);
        assert!((mn.integrated_mass().unwrap() - 1.0).abs() < 1e-8);
        // 1 - exp(-π · 1e-6 · 200²)
        assert!((w1(&p) - 0.118_088_621_701_823_69).abs() < 1e-12);
    }

    #[test]
    fn nlos_law_normalizes() {
        let law = NearestDistanceLaw::new(LinkClass::SN, &sparse());
        let m = law.integrated_mass().unwrap();
        assert!((m - 1.0).abs() < 1e-4, "{m}");
        let law = NearestDistanceLaw::new(LinkClass::SN, &fig2());
        let m = law.integrated_mass().unwrap();
        assert!((m - 1.0).abs() < 1e-4, "{m}");
    }

    #[test]
    fn nlos_pdf_vanishes_without_roads() {
        let mut p = fig2();
        p.lambda_r = 1e-14;
        for x in [1.0, 10.0, 100.0, 1000.0] {
            assert!(nlos_nearest_pdf(x, &p, KernelMethod::Auto).unwrap() < 1e-10);
        }
    }

    #[test]
    fn nlos_pdf_is_the_derivative_of_the_cdf() {
        let p = fig2();
        for x in [5.0, 20.0, 60.0, 150.0, 300.0, 800.0] {
            let h = 1e-3 * x;
            let fd = (nlos_nearest_cdf(x + h, &p, KernelMethod::Auto).unwrap()
                - nlos_nearest_cdf(x - h, &p, KernelMethod::Auto).unwrap())
                / (2.0 * h);
            let pdf = nlos_nearest_pdf(x, &p, KernelMethod::Auto).unwrap();
            assert!((fd / pdf - 1.0).abs() < 1e-3, "x={x}: {fd} vs {pdf}");
        }
    }

    #[test]
    fn series_and_quadrature_kernels_agree() {
        let p = fig2();
        for x in [1.0, 10.0, 50.0, 100.0, 120.0, 400.0] {
            let a = nlos_nearest_pdf(x, &p, KernelMethod::Auto).unwrap();
            let q = nlos_nearest_pdf(x, &p, KernelMethod::Quadrature).unwrap();
            assert!((a - q).abs() <= 1e-9 * q.abs().max(1e-12), "x={x}: {a} vs {q}");
        }
        // A fixed 30-term series is only trusted for small c·x.
        assert!(nlos_nearest_pdf(5.0, &p, KernelMethod::Series(30)).is_ok());
        assert!(matches!(
            nlos_nearest_pdf(100.0, &p, KernelMethod::Series(30)),
            Err(GeometryError::SeriesAccuracy { .. })
        ));
    }

    #[test]
    fn asymptotic_kernels_match_quadrature() {
        for z in [40.5, 60.0, 100.0, 1e4] {
            for kernel in [SeriesKernel::InverseSqrt, SeriesKernel::Plain] {
                let a = chord_kernel(z, kernel, KernelMethod::Auto).unwrap();
                let q = chord_kernel(z, kernel, KernelMethod::Quadrature).unwrap();
                assert!((a / q - 1.0).abs() < 1e-12, "z={z} {kernel:?}: {a} vs {q}");
            }
        }
    }

    #[test]
    fn plus_variant_is_not_normalized() {
        let p = sparse();
        let spec = QuadratureSpec { tail_cutoff: 100.0, ..pgf_spec() };
        let mass =
            integrate_piecewise(|x| nlos_nearest_pdf_plus_variant(x, &p).unwrap(), 0.0, f64::INFINITY, &[], &spec)
                .unwrap();
        assert!((mass - 1.0).abs() > 0.1, "{mass}");
    }

    #[test]
    fn pgfs_at_unity() {
        let p = fig2();
        let one = |_r: f64| 1.0;
        let spec = pgf_spec();
        assert_eq!(cox_pgf(&one, &p, &spec).unwrap(), 1.0);
        assert_eq!(cox_pgf_conditioned(&one, 50.0, &p, &spec).unwrap(), 1.0);
        assert_eq!(line_pgf(&one, 30.0, &p, &spec).unwrap(), 1.0);
        assert_eq!(line_pgf(&one, 0.0, &p, &spec).unwrap(), 1.0);
        assert_eq!(ppp_pgfl_annulus(&one, 1e-6, 0.0, f64::INFINITY, &spec).unwrap(), 1.0);
    }

    #[test]
    fn cox_indicator_is_void_probability() {
        let p = fig2();
        for x in [50.0, 100.0, 200.0, 400.0] {
            let pgf = cox_pgf(&OutsideBall { radius: x }, &p, &pgf_spec()).unwrap();
            let void = nlos_void_probability(x, &p, KernelMethod::Auto).unwrap();
            assert!((pgf - void).abs() < 1e-6, "x={x}: {pgf} vs {void}");
        }
    }

    #[test]
    fn conditioned_cox_on_a_nested_ball_is_a_void_ratio() {
        // E[1{void B(x)} | void B(ρ)] = V(x) / V(ρ) for x > ρ.
        let p = fig2();
        let (rho, x) = (60.0, 150.0);
        let v = cox_pgf_conditioned(&OutsideBall { radius: x }, rho, &p, &pgf_spec()).unwrap();
        let want = nlos_void_probability(x, &p, KernelMethod::Auto).unwrap()
            / nlos_void_probability(rho, &p, KernelMethod::Auto).unwrap();
        assert!((v - want).abs() < 1e-6, "{v} vs {want}");
    }

    /// The same argument with the closed forms hidden.
    struct Numeric<'a, N: ?Sized>(&'a N);

    impl<N: RadialFunction + ?Sized> RadialFunction for Numeric<'_, N> {
        fn eval(&self, r: f64) -> f64 {
            self.0.eval(r)
        }
        fn complement(&self, r: f64) -> f64 {
            self.0.complement(r)
        }
        fn breakpoints(&self) -> Vec<f64> {
            self.0.breakpoints()
        }
    }

    #[test]
    fn faded_slice_closed_forms_match_frozen_values() {
        let cases = [
            (5.0, 4.0, 3.0, 0.0, 4.3806300822567097),
            (5.0, 4.0, 3.0, -7.0, 8.3014925636956761),
            (50.0, 4.0, 2e4, 10.0, 6.1320169020439562e-7),
            (1.0, 4.0, 0.0, 2e3, 4.1666666666665551e-11),
            (50.0, 2.0, 30.0, -20.0, 81.514091052058867),
            (5.0, 4.0, 0.0, 0.0, 5.5536036726979578),
        ];
        for (scale, alpha, r, t0, expected) in cases {
            let got = FadedInterference { scale, alpha }.slice_integral(r, t0).unwrap();
            assert!((got - expected).abs() <= 1e-10 * expected, "{scale} {alpha} {r} {t0}: {got}");
        }
        assert!(FadedInterference { scale: 5.0, alpha: 3.0 }.slice_integral(1.0, 0.0).is_none());
    }

    #[test]
    fn slice_closed_forms_match_quadrature() {
        let spec = pgf_spec().with_tol(1e-10);
        let guard = Admissibility::new();
        let faded = [FadedInterference { scale: 7.0, alpha: 4.0 }, FadedInterference { scale: 7.0, alpha: 2.0 }];
        for nu in &faded {
            let excluded = ExcludeBall { inner: nu, radius: 12.0 };
            for r in [0.0, 0.5, 6.0, 11.0, 40.0, 9e3] {
                for t0 in [-50.0, -11.0, -3.0, 0.0, 2.0, 30.0, 5e3] {
                    for (closed, radii) in [
                        (nu.slice_integral(r, t0).unwrap(), alloc::vec![7.0]),
                        (excluded.slice_integral(r, t0).unwrap(), alloc::vec![7.0, 12.0]),
                    ] {
                        let numeric = if radii.len() == 1 {
                            line_slice_integral(&Numeric(nu), &guard, r, t0, &radii, &spec)
                        } else {
                            line_slice_integral(&Numeric(&excluded), &guard, r, t0, &radii, &spec)
                        }
                        .unwrap();
                        assert!(
                            (closed - numeric).abs() <= 1e-8 * numeric.abs() + 1e-13,
                            "α={} r={r} t0={t0}: {closed} vs {numeric}",
                            nu.alpha
                        );
                    }
                }
            }
        }
        let ball = OutsideBall { radius: 5.0 };
        assert_eq!(ball.slice_integral(3.0, -10.0), Some(8.0));
        assert_eq!(ball.slice_integral(3.0, 1.0), Some(3.0));
        assert_eq!(ball.slice_integral(6.0, 0.0), Some(0.0));
    }

    #[test]
    fn closed_form_pgfs_match_quadrature() {
        let p = SystemParams { lambda_s: 0.05, ..fig2() };
        let spec = pgf_spec().with_tol(1e-9);
        let nu = FadedInterference { scale: 40.0, alpha: 4.0 };
        let closed = cox_pgf_conditioned(&nu, 25.0, &p, &spec).unwrap();
        let numeric = cox_pgf_conditioned(&Numeric(&nu), 25.0, &p, &spec).unwrap();
        assert!((closed - numeric).abs() < 1e-8, "{closed} vs {numeric}");
        let excluded = ExcludeBall { inner: &nu, radius: 30.0 };
        let closed = line_pgf(&excluded, 30.0, &p, &spec).unwrap();
        let numeric = line_pgf(&Numeric(&excluded), 30.0, &p, &spec).unwrap();
        assert!((closed - numeric).abs() < 1e-8, "{closed} vs {numeric}");
    }

    #[test]
    fn line_pgf_at_origin_collapses() {
        let p = fig2();
        let nu = FadedInterference { scale: 100.0, alpha: 2.0 };
        let l = line_pgf(&nu, 0.0, &p, &pgf_spec()).unwrap();
        // ∫₀^∞ 100²/(t²+100²) dt = 50π
        let want = exp(-2.0 * p.lambda_s * 50.0 * PI);
        assert!((l / want - 1.0).abs() < 1e-6, "{l} vs {want}");
        let near = line_pgf(&nu, 1e-9, &p, &pgf_spec()).unwrap();
        assert!((near / want - 1.0).abs() < 1e-6);
    }

    #[test]
    fn line_pgf_void_of_a_ball_around_the_anchor() {
        // ν = 1{r > b} on a ray from distance d: the expected void of B(0,b)
        // along a uniformly oriented ray, computed from the chord length.
        let p = sparse();
        let (d, b) = (30.0, 50.0);
        let l = line_pgf(&OutsideBall { radius: b }, d, &p, &pgf_spec()).unwrap();
        let spec = QuadratureSpec::default().with_tol(1e-12);
        let oracle = integrate(
            |th: f64| {
                let c = cos(th);
                let len = -d * c + sqrt(b * b - d * d * sin(th) * sin(th));
                exp(-2.0 * p.lambda_s * len)
            },
            0.0,
            PI,
            &spec,
        )
        .unwrap()
            / PI;
        assert!((l - oracle).abs() < 1e-7, "{l} vs {oracle}");
    }

    #[test]
    fn planar_void_probability() {
        let v = ppp_pgfl_annulus(&|_r: f64| 0.0, 1e-4, 10.0, 30.0, &pgf_spec()).unwrap();
        let want = exp(-1e-4 * PI * (900.0 - 100.0));
        assert!((v - want).abs() < 1e-12);
    }

    #[test]
    fn planar_pgfl_closed_form_nlos_tail() {
        // 1 - ν = 1/(1 + (r/a)^4): ∫_u^∞ r/(1+(r/a)^4) dr = a²/2 (π/2 - atan(u²/a²)).
        let a = 150.0;
        let nu = FadedInterference { scale: a, alpha: 4.0 };
        let u = 200.0;
        let v = ppp_pgfl_annulus(&nu, 1e-6, u, f64::INFINITY, &pgf_spec()).unwrap();
        let integral = a * a / 2.0 * (FRAC_PI_2 - libm::atan(u * u / (a * a)));
        let want = exp(-2.0 * PI * 1e-6 * integral);
        assert!((v / want - 1.0).abs() < 1e-7, "{v} vs {want}");
    }

    #[test]
    fn inadmissible_argument_is_rejected() {
        let p = fig2();
        let bad = |r: f64| (-r / 100.0).exp();
        let ok = |r: f64| 1.0 - (-r / 100.0).exp();
        let over = |r: f64| 1.0 + r;
        // Values in [0, 1] but 1 - ν is not integrable along a line.
        assert!(matches!(cox_pgf(&bad, &p, &pgf_spec()), Err(GeometryError::Quadrature { .. })));
        assert!(cox_pgf(&ok, &p, &pgf_spec()).is_ok());
        assert!(matches!(cox_pgf(&over, &p, &pgf_spec()), Err(GeometryError::Inadmissible { .. })));
        assert!(matches!(
            ppp_pgfl_annulus(&|_r: f64| -0.5, 1e-6, 0.0, 10.0, &pgf_spec()),
            Err(GeometryError::Inadmissible { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

            #[test]
            fn pgfs_are_monotone_and_bounded(a in 5.0f64..300.0, scale in 0.2f64..1.0) {
                let p = fig2();
                let spec = pgf_spec();
                let nu2 = FadedInterference { scale: a, alpha: 4.0 };
                let nu1 = FadedInterference { scale: a / scale, alpha: 4.0 };
                let c1 = cox_pgf(&nu1, &p, &spec).unwrap();
                let c2 = cox_pgf(&nu2, &p, &spec).unwrap();
                prop_assert!((0.0..=1.0).contains(&c1) && (0.0..=1.0).contains(&c2));
                prop_assert!(c1 <= c2 + 1e-9);
                let l1 = line_pgf(&nu1, 40.0, &p, &spec).unwrap();
                let l2 = line_pgf(&nu2, 40.0, &p, &spec).unwrap();
                prop_assert!((0.0..=1.0).contains(&l1) && l1 <= l2 + 1e-9);
                let g1 = ppp_pgfl_annulus(&nu1, 1e-5, 10.0, f64::INFINITY, &spec).unwrap();
                let g2 = ppp_pgfl_annulus(&nu2, 1e-5, 10.0, f64::INFINITY, &spec).unwrap();
                prop_assert!((0.0..=1.0).contains(&g1) && g1 <= g2 + 1e-9);
            }
        }
    }
}
