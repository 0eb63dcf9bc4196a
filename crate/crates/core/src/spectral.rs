//! Resolvents, the spectral measure of `√H`, and frequency-localized
//! half-wave kernels.
//!
//! The plane-wave integrals in the resolvent are replaced by their closed
//! forms `∫ e^{−iw·ξ}/(|ξ|² − λ² ∓ i0) dξ = ±iπ² H_0^{(1,2)}(λ|w|)`. The
//! radial spectral variable is called `λ` here and `σ` inside quadratures.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{a_factor, image_indices, BKernel, ConeParams, ConePoint};
use crate::propagator::{b_vanishes, mode_sum, Contour, KernelOptions, PropagatorError, SeriesTruncation};
use crate::quadrature::{integrate_finite, CompositeRule, QuadratureError, QuadratureResult};
use crate::specfun::{bessel_j, hankel1_0, hankel2_0, SpecFunAccuracy, SpecFunError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Boundary value of the resolvent on the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolventSign {
    /// `(H − (λ² + i0))^{−1}`.
    Incoming,
    /// `(H − (λ² − i0))^{−1}`.
    Outgoing,
}

impl ResolventSign {
    pub fn conjugate(self) -> Self {
        match self {
            Self::Incoming => Self::Outgoing,
            Self::Outgoing => Self::Incoming,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Self::Incoming => 1.0,
            Self::Outgoing => -1.0,
        }
    }
}

/// Relative weight of the diffractive term in the `a_±` form of the
/// spectral measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectralNormalization {
    /// `1/(πρ)`, as obtained from the resolvents through Stone's formula.
    #[default]
    Derived,
    /// `1/(4π³ρ)`, as originally printed.
    Printed,
}

impl SpectralNormalization {
    fn diffractive_weight(self, rho: f64) -> f64 {
        match self {
            Self::Derived => 1.0 / (PI * rho),
            Self::Printed => 1.0 / (4.0 * PI * PI * PI * rho),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub lambda: f64,
    /// `dE_{√H}(λ; x, y)/dλ`.
    pub density: Complex64,
    pub geometric_part: Option<Complex64>,
    pub diffractive_part: Option<Complex64>,
    pub abs_error_estimate: f64,
    pub converged: bool,
}

fn check_lambda(lambda: f64) -> Result<(), SpectralError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(SpectralError::Domain(format!("lambda must be > 0, got {lambda}")));
    }
    Ok(())
}

fn check_points(x: &ConePoint, y: &ConePoint) -> Result<(), SpectralError> {
    if !(x.r > 0.0 && y.r > 0.0) {
        return Err(SpectralError::Domain("cone tip excluded: r, r' must be > 0".into()));
    }
    Ok(())
}

/// `H^{(1)}` for the incoming sign, `H^{(2)}` for the outgoing one.
fn hankel(sign: ResolventSign, w: Complex64, acc: &SpecFunAccuracy) -> Result<Complex64, SpecFunError> {
    match sign {
        ResolventSign::Incoming => hankel1_0(w, acc),
        ResolventSign::Outgoing => hankel2_0(w, acc),
    }
}

/// `∫ g(s) H(κ n(s)) B(s) ds` along `contour`, with `n(s) = √(|n(s)|²)`.
fn hankel_diffractive_integral(
    sign: ResolventSign,
    kappa: Complex64,
    b: &BKernel,
    contour: Contour,
    x: &ConePoint,
    y: &ConePoint,
    opts: &KernelOptions,
) -> Result<QuadratureResult, SpectralError> {
    let rr = x.r * y.r;
    let sum2 = (x.r + y.r).powi(2);
    let failure: RefCell<Option<SpecFunError>> = RefCell::new(None);
    let res = contour.integrate(
        b,
        |s| {
            let n = (sum2 + 4.0 * rr * (0.5 * s).sinh().powi(2)).sqrt();
            match hankel(sign, kappa * n, &opts.specfun) {
                Ok(h) => h,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        },
        &opts.quadrature,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    Ok(res)
}

/// Resolvent kernel `(H − (λ² ± i0))^{−1}(x, y)`.
pub fn resolvent_kernel(
    params: &ConeParams,
    sign: ResolventSign,
    lambda: f64,
    x: &ConePoint,
    y: &ConePoint,
    opts: &KernelOptions,
) -> Result<crate::propagator::KernelValue, SpectralError> {
    params.validate().map_err(PropagatorError::from)?;
    check_lambda(lambda)?;
    check_points(x, y)?;
    let s = sign.sign();
    let i = Complex64::i();
    let kappa = Complex64::new(lambda, 0.0);
    let mut geometric = Complex64::new(0.0, 0.0);
    for img in image_indices(params, x.theta, y.theta) {
        let m = img.chordal(x.r, y.r);
        if lambda * m == 0.0 {
            return Err(SpectralError::Domain(
                "resolvent is singular at coincident points".into(),
            ));
        }
        geometric += img.weight * a_factor(params, img.j, x.theta, y.theta) * hankel(sign, kappa * m, &opts.specfun)?;
    }
    // (1/4π²)(±iπ²) = ±i/4.
    geometric *= s * i / 4.0;
    let (diffractive, err, converged) = if b_vanishes(params, opts.variant) {
        (Complex64::new(0.0, 0.0), 0.0, true)
    } else {
        let b = BKernel::new(params, opts.variant, x.theta, y.theta);
        let contour = Contour {
            beta: s * Contour::height(&b),
            rate: params.b_decay_rate() + 0.25,
        };
        let q = hankel_diffractive_integral(sign, kappa, &b, contour, x, y, opts)?;
        // −(1/(4π³ρ))(±iπ²) = ∓i/(4πρ).
        let pre = -s * i / (4.0 * PI * params.rho);
        (pre * q.value, pre.norm() * q.abs_error_estimate, q.converged)
    };
    Ok(crate::propagator::KernelValue {
        value: geometric + diffractive,
        geometric_part: Some(geometric),
        diffractive_part: Some(diffractive),
        abs_error_estimate: err,
        converged,
    })
}

/// Resolvent `(H − z)^{−1}(x, y)` at `Im z > 0`, with `κ = √z`, `Im κ > 0`.
pub fn resolvent_kernel_complex(
    params: &ConeParams,
    z: Complex64,
    x: &ConePoint,
    y: &ConePoint,
    opts: &KernelOptions,
) -> Result<Complex64, SpectralError> {
    if !(z.im > 0.0) {
        return Err(SpectralError::Domain(format!("expected Im z > 0, got {z}")));
    }
    check_points(x, y)?;
    let kappa = z.sqrt();
    let i = Complex64::i();
    let mut geometric = Complex64::new(0.0, 0.0);
    for img in image_indices(params, x.theta, y.theta) {
        let m = img.chordal(x.r, y.r);
        if m == 0.0 {
            return Err(SpectralError::Domain(
                "resolvent is singular at coincident points".into(),
            ));
        }
        geometric += img.weight * a_factor(params, img.j, x.theta, y.theta) * hankel1_0(kappa * m, &opts.specfun)?;
    }
    geometric *= i / 4.0;
    if b_vanishes(params, opts.variant) {
        return Ok(geometric);
    }
    let b = BKernel::new(params, opts.variant, x.theta, y.theta);
    let contour = Contour::real_axis(params.b_decay_rate() + kappa.im * (x.r * y.r).sqrt() * 0.5);
    let q = hankel_diffractive_integral(ResolventSign::Incoming, kappa, &b, contour, x, y, opts)?;
    Ok(geometric - i / (4.0 * PI * params.rho) * q.value)
}

/// `(λ/πi)(R(λ² + i0) − R(λ² − i0))`.
pub fn stone_density(
    params: &ConeParams,
    lambda: f64,
    x: &ConePoint,
    y: &ConePoint,
    opts: &KernelOptions,
) -> Result<SpectralSample, SpectralError> {
    let plus = resolvent_kernel(params, ResolventSign::Incoming, lambda, x, y, opts)?;
    let minus = resolvent_kernel(params, ResolventSign::Outgoing, lambda, x, y, opts)?;
    let pre = lambda / (PI * Complex64::i());
    let part = |a: Option<Complex64>, b: Option<Complex64>| Some(pre * (a? - b?));
    Ok(SpectralSample {
        lambda,
        density: pre * (plus.value - minus.value),
        geometric_part: part(plus.geometric_part, minus.geometric_part),
        diffractive_part: part(plus.diffractive_part, minus.diffractive_part),
        abs_error_estimate: pre.norm() * (plus.abs_error_estimate + minus.abs_error_estimate),
        converged: plus.converged && minus.converged,
    })
}

/// Spectral density in the `a_±` form: an image sum of
/// `a_±(λ|m|)e^{±iλ|m|}` (which sums to `2πJ_0(λ|m|)`) and a diffractive
/// integral of `a_±(λ|n|)e^{±iλ|n|} = πH_0^{(1,2)}(λ|n|)`, each leg on its own
/// deformed contour.
pub fn spectral_measure_closed(
    params: &ConeParams,
    lambda: f64,
    x: &ConePoint,
    y: &ConePoint,
    opts: &KernelOptions,
    normalization: SpectralNormalization,
) -> Result<SpectralSample, SpectralError> {
    params.validate().map_err(PropagatorError::from)?;
    check_lambda(lambda)?;
    check_points(x, y)?;
    let pre = lambda / (4.0 * PI * PI);
    let mut geometric = Complex64::new(0.0, 0.0);
    for img in image_indices(params, x.theta, y.theta) {
        let m = img.chordal(x.r, y.r);
        let j0 = bessel_j(0.0, lambda * m, &opts.specfun)?;
        geometric += img.weight * a_factor(params, img.j, x.theta, y.theta) * (2.0 * PI * j0);
    }
    geometric *= pre;
    let (diffractive, err, converged) = if b_vanishes(params, opts.variant) {
        (Complex64::new(0.0, 0.0), 0.0, true)
    } else {
        let b = BKernel::new(params, opts.variant, x.theta, y.theta);
        let kappa = Complex64::new(lambda, 0.0);
        let mut total = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        let mut converged = true;
        for sign in [ResolventSign::Incoming, ResolventSign::Outgoing] {
            let contour = Contour {
                beta: sign.sign() * Contour::height(&b),
                rate: params.b_decay_rate() + 0.25,
            };
            let q = hankel_diffractive_integral(sign, kappa, &b, contour, x, y, opts)?;
            total += PI * q.value;
            err += PI * q.abs_error_estimate;
            converged &= q.converged;
        }
        let w = -pre * normalization.diffractive_weight(params.rho);
        (w * total, w.abs() * err, converged)
    };
    Ok(SpectralSample {
        lambda,
        density: geometric + diffractive,
        geometric_part: Some(geometric),
        diffractive_part: Some(diffractive),
        abs_error_estimate: err,
        converged,
    })
}

/// Mode sum `λ Σ_k φ_k(θ) conj(φ_k(θ')) J_{ν_k}(λr) J_{ν_k}(λr')`.
pub fn spectral_measure_series(
    params: &ConeParams,
    truncation: &SeriesTruncation,
    lambda: f64,
    x: &ConePoint,
    y: &ConePoint,
    acc: &SpecFunAccuracy,
) -> Result<(SpectralSample, SeriesTruncation), SpectralError> {
    params.validate().map_err(PropagatorError::from)?;
    check_lambda(lambda)?;
    let (sum, trunc) = mode_sum(params, truncation, |m| {
        let a = bessel_j(m.nu, lambda * x.r, acc)?;
        let b = if x.r == y.r {
            a
        } else {
            bessel_j(m.nu, lambda * y.r, acc)?
        };
        Ok(m.product(params, x.theta, y.theta) * (a * b))
    })?;
    Ok((
        SpectralSample {
            lambda,
            density: lambda * sum,
            geometric_part: None,
            diffractive_part: None,
            abs_error_estimate: lambda * (trunc.tail_bound + acc.abs_tol * (2 * trunc.k_max + 1) as f64),
            converged: true,
        },
        trunc,
    ))
}

/// Truncation adequate for the spectral mode sum up to frequency `lambda_max`.
pub fn spectral_truncation(params: &ConeParams, lambda_max: f64, x: &ConePoint, y: &ConePoint) -> SeriesTruncation {
    SeriesTruncation::for_argument(params, lambda_max * x.r.max(y.r))
}

/// Shape of the dyadic window `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowProfile {
    /// Indicator of `[1/2, 1)`.
    #[default]
    Sharp,
    /// Smooth bump on `[1/2, 2]`, `φ(λ) = χ(log₂λ + 1)` for `λ ≤ 1` and
    /// `1 − χ(log₂λ)` above, with `χ` a `C^∞` step.
    Smooth,
}

/// `C^∞` step from 0 at `u ≤ 0` to 1 at `u ≥ 1`.
fn smooth_step(u: f64) -> f64 {
    let f = |v: f64| if v <= 0.0 { 0.0 } else { (-1.0 / v).exp() };
    let (a, b) = (f(u), f(1.0 - u));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

impl WindowProfile {
    pub fn value(self, lambda: f64) -> f64 {
        match self {
            Self::Sharp => {
                if (0.5..1.0).contains(&lambda) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Smooth => {
                if !(lambda > 0.5 && lambda < 2.0) {
                    return 0.0;
                }
                let u = lambda.log2();
                if u <= 0.0 {
                    smooth_step(u + 1.0)
                } else {
                    1.0 - smooth_step(u)
                }
            }
        }
    }

    pub fn support(self) -> (f64, f64) {
        match self {
            Self::Sharp => (0.5, 1.0),
            Self::Smooth => (0.5, 2.0),
        }
    }
}

/// Littlewood-Paley window `φ(2^{−j}λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LPWindow {
    pub j: i32,
    #[serde(default)]
    pub profile: WindowProfile,
}

impl LPWindow {
    pub fn new(j: i32) -> Self {
        Self {
            j,
            profile: WindowProfile::Sharp,
        }
    }

    pub fn smooth(j: i32) -> Self {
        Self {
            j,
            profile: WindowProfile::Smooth,
        }
    }

    pub fn scale(&self) -> f64 {
        2f64.powi(self.j)
    }

    pub fn value(&self, lambda: f64) -> f64 {
        self.profile.value(lambda / self.scale())
    }

    pub fn support(&self) -> (f64, f64) {
        let (a, b) = self.profile.support();
        (a * self.scale(), b * self.scale())
    }
}

/// Where the spectral density comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DensitySource {
    #[default]
    Series,
    Closed,
}

/// Windowed spectral density on a Gauss-Legendre grid over the window's
/// support, reusable for every `t`.
#[derive(Debug, Clone)]
pub struct WindowedDensity {
    pub window: LPWindow,
    rule: CompositeRule,
    /// `w_i φ(2^{−j}λ_i) dE(λ_i)`.
    weighted: Vec<Complex64>,
}

impl WindowedDensity {
    /// Panels are at most `max_panel` wide, 16 nodes each; resolving
    /// `e^{itλ}` needs `|t|·max_panel ≲ 4`.
    pub fn new(
        params: &ConeParams,
        window: LPWindow,
        x: &ConePoint,
        y: &ConePoint,
        max_panel: f64,
        source: DensitySource,
        opts: &KernelOptions,
    ) -> Result<Self, SpectralError> {
        let (lo, hi) = window.support();
        let breaks = match window.profile {
            WindowProfile::Sharp => vec![lo, hi],
            WindowProfile::Smooth => vec![lo, window.scale(), hi],
        };
        let rule = CompositeRule::new(&breaks, max_panel, 16);
        let trunc = spectral_truncation(params, hi, x, y);
        let values: Result<Vec<Complex64>, SpectralError> = rule
            .nodes
            .par_iter()
            .map(|&lambda| match source {
                DensitySource::Series => {
                    spectral_measure_series(params, &trunc, lambda, x, y, &opts.specfun).map(|(s, _)| s.density)
                }
                DensitySource::Closed => {
                    spectral_measure_closed(params, lambda, x, y, opts, SpectralNormalization::Derived)
                        .map(|s| s.density)
                }
            })
            .collect();
        let weighted = values?
            .iter()
            .zip(rule.nodes.iter().zip(&rule.weights))
            .map(|(d, (&l, &w))| d * w * window.value(l))
            .collect();
        Ok(Self { window, rule, weighted })
    }

    /// `U_j(t)(x, y) = ∫ e^{itλ} φ(2^{−j}λ) dE(λ; x, y)`.
    pub fn eval(&self, t: f64) -> Complex64 {
        self.rule
            .nodes
            .iter()
            .zip(&self.weighted)
            .map(|(&l, &w)| w * Complex64::from_polar(1.0, t * l))
            .sum()
    }
}

/// Frequency-localized half-wave kernel `U_j(t)(x, y)` by adaptive
/// quadrature over the window's support.
pub fn wave_localized_kernel(
    params: &ConeParams,
    window: LPWindow,
    t: f64,
    x: &ConePoint,
    y: &ConePoint,
    source: DensitySource,
    opts: &KernelOptions,
) -> Result<QuadratureResult, SpectralError> {
    let (lo, hi) = window.support();
    let trunc = spectral_truncation(params, hi, x, y);
    let failure: RefCell<Option<SpectralError>> = RefCell::new(None);
    let f = |lambda: f64| {
        let phi = window.value(lambda);
        if phi == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let d = match source {
            DensitySource::Series => {
                spectral_measure_series(params, &trunc, lambda, x, y, &opts.specfun).map(|(s, _)| s.density)
            }
            DensitySource::Closed => {
                spectral_measure_closed(params, lambda, x, y, opts, SpectralNormalization::Derived).map(|s| s.density)
            }
        };
        match d {
            Ok(v) => v * phi * Complex64::from_polar(1.0, t * lambda),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let res = integrate_finite(f, lo, hi, &opts.quadrature)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::heat_kernel_closed;
    use crate::specfun::hankel_split;
    use proptest::prelude::*;

    fn pt(p: &ConeParams, r: f64, th: f64) -> ConePoint {
        ConePoint::new(p, r, th).unwrap()
    }

    fn opts() -> KernelOptions {
        KernelOptions::default()
    }

    fn acc() -> SpecFunAccuracy {
        SpecFunAccuracy::default()
    }

    fn planar_distance(x: &ConePoint, y: &ConePoint) -> f64 {
        (x.r * x.r + y.r * y.r - 2.0 * x.r * y.r * (x.theta - y.theta).cos()).sqrt()
    }

    #[test]
    fn planar_resolvent_is_the_free_hankel_kernel() {
        let p = ConeParams::baseline(1.0).unwrap();
        let (x, y) = (pt(&p, 1.0, 0.3), pt(&p, 1.4, 2.0));
        let d = planar_distance(&x, &y);
        for &lambda in &[0.3, 1.0, 4.5] {
            let w = Complex64::new(lambda * d, 0.0);
            let plus = resolvent_kernel(&p, ResolventSign::Incoming, lambda, &x, &y, &opts()).unwrap();
            let want = Complex64::i() / 4.0 * hankel1_0(w, &acc()).unwrap();
            assert!((plus.value - want).norm() < 1e-12);
            let minus = resolvent_kernel(&p, ResolventSign::Outgoing, lambda, &x, &y, &opts()).unwrap();
            let want = -Complex64::i() / 4.0 * hankel2_0(w, &acc()).unwrap();
            assert!((minus.value - want).norm() < 1e-12);
        }
    }

    #[test]
    fn outgoing_resolvent_is_the_adjoint_of_incoming() {
        let p = ConeParams::new(1.5, 0.3).unwrap();
        let (x, y) = (pt(&p, 0.8, 0.4), pt(&p, 1.3, 2.9));
        for &lambda in &[0.5, 2.0] {
            let plus = resolvent_kernel(&p, ResolventSign::Incoming, lambda, &x, &y, &opts()).unwrap();
            let minus = resolvent_kernel(&p, ResolventSign::Outgoing, lambda, &y, &x, &opts()).unwrap();
            assert!(
                (plus.value - minus.value.conj()).norm() < 1e-9,
                "{} {}",
                plus.value,
                minus.value
            );
        }
    }

    #[test]
    fn resolvent_rejects_coincident_points() {
        let p = ConeParams::new(1.0, 0.5).unwrap();
        let x = pt(&p, 1.0, 0.2);
        assert!(matches!(
            resolvent_kernel(&p, ResolventSign::Incoming, 1.0, &x, &x, &opts()),
            Err(SpectralError::Domain(_))
        ));
    }

    #[test]
    fn planar_density_is_bessel_j0() {
        let p = ConeParams::baseline(1.0).unwrap();
        let (x, y) = (pt(&p, 1.0, 0.3), pt(&p, 0.7, 1.1));
        let d = planar_distance(&x, &y);
        for &lambda in &[0.5, 1.0, 3.0] {
            let want = lambda / (2.0 * PI) * bessel_j(0.0, lambda * d, &acc()).unwrap();
            let closed = spectral_measure_closed(&p, lambda, &x, &y, &opts(), SpectralNormalization::Derived).unwrap();
            assert!((closed.density - want).norm() < 1e-12);
            let tr = spectral_truncation(&p, lambda, &x, &y);
            let (series, _) = spectral_measure_series(&p, &tr, lambda, &x, &y, &acc()).unwrap();
            assert!((series.density - want).norm() < 1e-12);
        }
    }

    #[test]
    fn series_density_matches_frozen_values() {
        let cases = [
            (
                2.0,
                0.25,
                1.0,
                1.0,
                0.0,
                1.0,
                0.0,
                Complex64::new(0.162_843_753_939_611_76, 0.0),
            ),
            (
                2.0,
                0.25,
                2.5,
                0.8,
                0.7,
                1.3,
                0.0,
                Complex64::new(0.041_917_680_608_779_664, 0.007_411_407_141_675_903),
            ),
            (
                1.0,
                0.5,
                1.7,
                0.9,
                2.0,
                1.1,
                0.0,
                Complex64::new(0.005_487_174_371_561_107, 0.008_545_767_752_797_676),
            ),
        ];
        for (rho, alpha, lambda, r, th, rp, thp, want) in cases {
            let p = ConeParams::new(rho, alpha).unwrap();
            let (x, y) = (pt(&p, r, th), pt(&p, rp, thp));
            let tr = spectral_truncation(&p, lambda, &x, &y);
            let (s, _) = spectral_measure_series(&p, &tr, lambda, &x, &y, &acc()).unwrap();
            assert!((s.density - want).norm() < 1e-12, "{} vs {want}", s.density);
        }
    }

    #[test]
    fn closed_density_matches_the_mode_sum() {
        for &(rho, alpha) in &[(1.0, 0.5), (2.0, 0.25), (0.7, 0.4), (1.3, -0.2)] {
            let p = ConeParams::new(rho, alpha).unwrap();
            for &(r, th, rp, thp) in &[(1.0, 0.3, 1.2, 2.1), (0.6, 0.0, 1.5, 3.5)] {
                let (x, y) = (pt(&p, r, th), pt(&p, rp, thp));
                for &lambda in &[0.4, 1.7, 5.0] {
                    let c =
                        spectral_measure_closed(&p, lambda, &x, &y, &opts(), SpectralNormalization::Derived).unwrap();
                    let tr = spectral_truncation(&p, lambda, &x, &y);
                    let (s, _) = spectral_measure_series(&p, &tr, lambda, &x, &y, &acc()).unwrap();
                    assert!(
                        (c.density - s.density).norm() < 1e-9,
                        "rho {rho} alpha {alpha} lambda {lambda}: {} vs {}",
                        c.density,
                        s.density
                    );
                }
            }
        }
    }

    #[test]
    fn stone_formula_reproduces_the_density() {
        let p = ConeParams::new(1.0, 0.5).unwrap();
        let (x, y) = (pt(&p, 1.0, 0.3), pt(&p, 1.2, 2.1));
        for &lambda in &[0.5, 2.0] {
            let stone = stone_density(&p, lambda, &x, &y, &opts()).unwrap();
            let c = spectral_measure_closed(&p, lambda, &x, &y, &opts(), SpectralNormalization::Derived).unwrap();
            assert!((stone.density - c.density).norm() < 1e-10);
        }
    }

    #[test]
    fn printed_normalization_rescales_only_the_diffractive_part() {
        let p = ConeParams::new(1.0, 0.5).unwrap();
        let (x, y) = (pt(&p, 1.0, 0.3), pt(&p, 1.2, 2.1));
        let d = spectral_measure_closed(&p, 1.0, &x, &y, &opts(), SpectralNormalization::Derived).unwrap();
        let q = spectral_measure_closed(&p, 1.0, &x, &y, &opts(), SpectralNormalization::Printed).unwrap();
        assert_eq!(d.geometric_part, q.geometric_part);
        let ratio = d.diffractive_part.unwrap() / q.diffractive_part.unwrap();
        assert!((ratio - 4.0 * PI * PI).norm() < 1e-9);
    }

    #[test]
    fn a_plus_minus_split_recovers_j0() {
        for &w in &[0.3, 2.0, 17.0] {
            let (ap, am) = hankel_split(w, &acc()).unwrap();
            let sum = ap * Complex64::from_polar(1.0, w) + am * Complex64::from_polar(1.0, -w);
            assert!((sum - 2.0 * PI * bessel_j(0.0, w, &acc()).unwrap()).norm() < 1e-11);
        }
    }

    #[test]
    fn diagonal_density_is_positive() {
        for &(rho, alpha) in &[(1.0, 0.5), (2.5, 0.1), (0.6, 0.7)] {
            let p = ConeParams::new(rho, alpha).unwrap();
            let x = pt(&p, 0.9, 0.4);
            for &lambda in &[0.2, 1.0, 6.0] {
                let c = spectral_measure_closed(&p, lambda, &x, &x, &opts(), SpectralNormalization::Derived).unwrap();
                assert!(c.density.re > 0.0 && c.density.im.abs() < 1e-10, "{}", c.density);
            }
        }
    }

    #[test]
    fn density_is_hermitian() {
        let p = ConeParams::new(1.7, 0.35).unwrap();
        let (x, y) = (pt(&p, 0.9, 0.4), pt(&p, 1.6, 4.0));
        let a = spectral_measure_closed(&p, 1.3, &x, &y, &opts(), SpectralNormalization::Derived).unwrap();
        let b = spectral_measure_closed(&p, 1.3, &y, &x, &opts(), SpectralNormalization::Derived).unwrap();
        assert!((a.density - b.density.conj()).norm() < 1e-11);
    }

    #[test]
    fn heat_semigroup_from_the_density() {
        let p = ConeParams::new(1.0, 0.5).unwrap();
        let (x, y) = (pt(&p, 1.0, 0.3), pt(&p, 1.2, 2.1));
        let tau = 0.4;
        let tr = spectral_truncation(&p, 12.0, &x, &y);
        let rule = CompositeRule::new(&[0.0, 12.0], 0.25, 16);
        let mut total = Complex64::new(0.0, 0.0);
        for (&l, &w) in rule.nodes.iter().zip(&rule.weights) {
            let (s, _) = spectral_measure_series(&p, &tr, l, &x, &y, &acc()).unwrap();
            total += w * (-tau * l * l).exp() * s.density;
        }
        let heat = heat_kernel_closed(&p, tau, &x, &y, &opts()).unwrap();
        assert!((total - heat.value).norm() < 1e-10, "{total} vs {}", heat.value);
    }

    #[test]
    fn windowed_grid_agrees_with_adaptive_quadrature() {
        let p = ConeParams::new(1.0, 0.5).unwrap();
        let (x, y) = (pt(&p, 1.0, 0.3), pt(&p, 1.2, 2.1));
        for window in [LPWindow::new(2), LPWindow::smooth(1)] {
            let grid = WindowedDensity::new(&p, window, &x, &y, 0.1, DensitySource::Series, &opts()).unwrap();
            for &t in &[0.0, 3.0, -7.5] {
                let a = wave_localized_kernel(&p, window, t, &x, &y, DensitySource::Series, &opts()).unwrap();
                assert!((grid.eval(t) - a.value).norm() < 1e-9, "{window:?} t {t}");
            }
        }
    }

    #[test]
    fn smooth_window_is_smooth_at_the_seam() {
        let w = WindowProfile::Smooth;
        assert_eq!(w.value(1.0), 1.0);
        assert_eq!(w.value(0.5), 0.0);
        assert_eq!(w.value(2.0), 0.0);
        let h = 1e-4;
        let slope = (w.value(1.0 + h) - w.value(1.0 - h)) / (2.0 * h);
        assert!(slope.abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn windows_partition_unity(lambda in 0.02f64..50.0, smooth in any::<bool>()) {
            let profile = if smooth { WindowProfile::Smooth } else { WindowProfile::Sharp };
            let sum: f64 = (-10..=10).map(|j| LPWindow { j, profile }.value(lambda)).sum();
            prop_assert!((sum - 1.0).abs() < 1e-14);
        }

        #[test]
        fn series_density_is_hermitian(
            lambda in 0.1f64..4.0,
            r in 0.2f64..2.0,
            rp in 0.2f64..2.0,
            th in 0.0f64..6.0,
            thp in 0.0f64..6.0,
        ) {
            let p = ConeParams::new(1.3, 0.2).unwrap();
            let (x, y) = (pt(&p, r, th), pt(&p, rp, thp));
            let tr = spectral_truncation(&p, lambda, &x, &y);
            let (a, _) = spectral_measure_series(&p, &tr, lambda, &x, &y, &acc()).unwrap();
            let (b, _) = spectral_measure_series(&p, &tr, lambda, &y, &x, &acc()).unwrap();
            prop_assert!((a.density - b.density.conj()).norm() < 1e-13);
        }
    }
}
