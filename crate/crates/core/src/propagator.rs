//! Schrödinger and heat kernels on the cone.
//!
//! Two independent routes are provided:
//!
//! * the angular mode sum `Σ_k φ_k(θ) conj(φ_k(θ')) K_{ν_k}(t, r, r')`
//!   ([`schrodinger_series`], [`heat_kernel`]), and
//! * the closed form: a weighted sum over geometric images plus a diffractive
//!   integral of `B` ([`schrodinger_closed`], [`heat_kernel_closed`]).
//!
//! Time convention: `K(t)` is the kernel of `e^{−itH}`, so on the plane
//! `K(t, x, y) = (4πit)^{−1} e^{−|x−y|²/(4it)}`.
//!
//! At real `t` the diffractive factor `e^{−|n(s)|²/(4it)}` has unit modulus
//! and a phase growing like `cosh s`. The `s`-integral is therefore taken on
//! the contour `0 → iβ → iβ + ∞` with `sign β = sign t`, along which the
//! factor decays like `exp(−rr' sinh σ sin|β| / (2|t|))`. `|β|` stays below
//! half the distance to the nearest pole of `B`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{a_factor, image_indices, AngularMode, BKernel, BVariant, ConeError, ConeParams, ConePoint};
use crate::quadrature::{
    integrate_decaying, integrate_finite, integrate_oscillatory_regularized, QuadratureError, QuadratureResult,
    QuadratureSpec,
};
use crate::specfun::{bessel_i_scaled, bessel_j, SpecFunAccuracy, SpecFunError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagatorError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("mode sum not decaying at k_max = {k_max} (last terms {last_term:e})")]
    Truncation { k_max: i64, last_term: f64 },
}

/// Kernel value with its split into image and diffractive contributions.
///
/// Mode-sum evaluations have no such split; both parts are `None` there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: Complex64,
    pub geometric_part: Option<Complex64>,
    pub diffractive_part: Option<Complex64>,
    pub abs_error_estimate: f64,
    pub converged: bool,
}

/// Truncation `|k| ≤ k_max` of a mode sum and the tail estimate it produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTruncation {
    pub k_max: i64,
    pub tail_bound: f64,
}

impl SeriesTruncation {
    pub fn fixed(k_max: i64) -> Self {
        Self { k_max, tail_bound: 0.0 }
    }

    /// Enough modes that `J_ν(y)` with `y = z_max` is negligible past `ν_max`:
    /// `ν_max = e·y/2 + 40`.
    pub fn for_argument(params: &ConeParams, z_max: f64) -> Self {
        let nu_max = std::f64::consts::E * 0.5 * z_max + 40.0;
        Self::fixed(((nu_max + params.alpha.abs()) * params.rho).ceil() as i64 + 2)
    }

    /// For heat-type sums: `e^{−z}I_ν(z) ≈ e^{−ν²/(2z)}/√(2πz)`.
    pub fn for_heat_argument(params: &ConeParams, z: f64) -> Self {
        let nu_max = (2.0 * 40.0 * z).sqrt() + 40.0;
        Self::fixed(((nu_max + params.alpha.abs()) * params.rho).ceil() as i64 + 2)
    }
}

/// Options shared by kernel evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelOptions {
    pub quadrature: QuadratureSpec,
    pub specfun: SpecFunAccuracy,
    pub variant: BVariant,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            quadrature: QuadratureSpec::default(),
            specfun: SpecFunAccuracy::default(),
            variant: BVariant::DerivationConsistent,
        }
    }
}

fn check_time(t: f64) -> Result<(), PropagatorError> {
    if !t.is_finite() || t == 0.0 {
        return Err(PropagatorError::Domain(format!(
            "t must be finite and nonzero, got {t}"
        )));
    }
    Ok(())
}

fn check_radii(r: f64, r_p: f64) -> Result<(), PropagatorError> {
    if !(r.is_finite() && r_p.is_finite() && r > 0.0 && r_p > 0.0) {
        return Err(PropagatorError::Domain(format!(
            "radii must be positive (cone tip excluded), got r = {r}, r' = {r_p}"
        )));
    }
    Ok(())
}

/// Radial kernel of `e^{−itH}` on the mode `ν`, at `ε = 0`:
/// `e^{−(r²+r'²)/(4it)}/(2it) · e^{−iνπ sgn(t)/2} · J_ν(rr'/(2|t|))`.
pub fn mode_kernel(nu: f64, t: f64, r: f64, r_p: f64, acc: &SpecFunAccuracy) -> Result<Complex64, PropagatorError> {
    check_time(t)?;
    check_radii(r, r_p)?;
    let j = bessel_j(nu, r * r_p / (2.0 * t.abs()), acc)?;
    Ok(mode_prefactor(nu, t, r, r_p) * j)
}

/// `e^{−(r²+r'²)/(4it)}/(2it) · e^{−iνπ sgn(t)/2}`.
pub fn mode_prefactor(nu: f64, t: f64, r: f64, r_p: f64) -> Complex64 {
    let phase = (r * r + r_p * r_p) / (4.0 * t) - nu * FRAC_PI_2 * t.signum();
    Complex64::from_polar(1.0 / (2.0 * t.abs()), phase - FRAC_PI_2 * t.signum())
}

/// Weber closed form at `ε > 0`:
/// `e^{−(r²+r'²)/(4(ε+it))}/(2(ε+it)) · I_ν(rr'/(2(ε+it)))`.
pub fn mode_kernel_regularized(
    nu: f64,
    eps: f64,
    t: f64,
    r: f64,
    r_p: f64,
    acc: &SpecFunAccuracy,
) -> Result<Complex64, PropagatorError> {
    check_radii(r, r_p)?;
    if !(eps > 0.0) {
        return Err(PropagatorError::Domain(format!("eps must be > 0, got {eps}")));
    }
    let p = Complex64::new(eps, t);
    let z = r * r_p / (2.0 * p);
    let d = r - r_p;
    Ok((-(d * d) / (4.0 * p)).exp() / (2.0 * p) * bessel_i_scaled(nu, z, acc)?)
}

/// The regularized form evaluated on `spec.epsilon_schedule` and
/// extrapolated to `ε = 0`. Used to cross-check [`mode_kernel`].
pub fn mode_kernel_extrapolated(
    nu: f64,
    t: f64,
    r: f64,
    r_p: f64,
    spec: &QuadratureSpec,
    acc: &SpecFunAccuracy,
) -> Result<QuadratureResult, PropagatorError> {
    check_time(t)?;
    let mut failure = None;
    let res = integrate_oscillatory_regularized(
        |eps| match mode_kernel_regularized(nu, eps, t, r, r_p, acc) {
            Ok(v) => Ok(QuadratureResult {
                value: v,
                abs_error_estimate: acc.abs_tol,
                evaluations: 1,
                converged: true,
            }),
            Err(e) => {
                failure = Some(e);
                Err(QuadratureError::NonFinite { at: eps })
            }
        },
        spec,
    );
    match (res, failure) {
        (_, Some(e)) => Err(e),
        (r, None) => Ok(r?),
    }
}

/// Heat kernel on the mode `ν`: `e^{−(r−r')²/(4τ)}/(2τ) · e^{−z}I_ν(z)`, `z = rr'/(2τ)`.
pub fn heat_mode_kernel(nu: f64, tau: f64, r: f64, r_p: f64, acc: &SpecFunAccuracy) -> Result<f64, PropagatorError> {
    check_radii(r, r_p)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(PropagatorError::Domain(format!("tau must be > 0, got {tau}")));
    }
    let z = Complex64::new(r * r_p / (2.0 * tau), 0.0);
    let d = r - r_p;
    Ok((-(d * d) / (4.0 * tau)).exp() / (2.0 * tau) * bessel_i_scaled(nu, z, acc)?.re)
}

/// Sums `term(mode)` over `|k| ≤ k_max` and estimates the remainder from the
/// geometric decay of the last shells `|k| = n`.
pub(crate) fn mode_sum<F>(
    params: &ConeParams,
    truncation: &SeriesTruncation,
    mut term: F,
) -> Result<(Complex64, SeriesTruncation), PropagatorError>
where
    F: FnMut(&AngularMode) -> Result<Complex64, PropagatorError>,
{
    let k_max = truncation.k_max.max(0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut shells = Vec::with_capacity(k_max as usize + 1);
    for n in 0..=k_max {
        let mut shell = Complex64::new(0.0, 0.0);
        let mut mag = 0.0;
        for k in if n == 0 { vec![0] } else { vec![n, -n] } {
            let v = term(&AngularMode::new(params, k))?;
            shell += v;
            mag += v.norm();
        }
        sum += shell;
        shells.push(mag);
    }
    let tail = tail_estimate(&shells);
    match tail {
        Some(t) => Ok((sum, SeriesTruncation { k_max, tail_bound: t })),
        None => Err(PropagatorError::Truncation {
            k_max,
            last_term: *shells.last().unwrap_or(&0.0),
        }),
    }
}

/// Geometric tail `T q/(1−q)` from the last three shell magnitudes; `None`
/// when the shells are not decreasing and not negligible.
fn tail_estimate(shells: &[f64]) -> Option<f64> {
    let n = shells.len();
    let last = *shells.last()?;
    let scale = shells.iter().cloned().fold(0.0, f64::max);
    if last <= 1e-15 * scale || last == 0.0 {
        return Some(last);
    }
    if n < 4 {
        return None;
    }
    let q = (shells[n - 1] / shells[n - 2]).max(shells[n - 2] / shells[n - 3]);
    if !(q < 1.0) {
        return None;
    }
    Some(last * q / (1.0 - q))
}

/// Mode-sum evaluation of the Schrödinger kernel.
pub fn schrodinger_series(
    params: &ConeParams,
    truncation: &SeriesTruncation,
    t: f64,
    x: &ConePoint,
    y: &ConePoint,
    acc: &SpecFunAccuracy,
) -> Result<(KernelValue, SeriesTruncation), PropagatorError> {
    params.validate()?;
    check_time(t)?;
    check_radii(x.r, y.r)?;
    let (value, trunc) = mode_sum(params, truncation, |m| {
        Ok(m.product(params, x.theta, y.theta) * mode_kernel(m.nu, t, x.r, y.r, acc)?)
    })?;
    let err = trunc.tail_bound + acc.abs_tol * (2 * trunc.k_max + 1) as f64;
    Ok((
        KernelValue {
            value,
            geometric_part: None,
            diffractive_part: None,
            abs_error_estimate: err,
            converged: true,
        },
        trunc,
    ))
}

/// Mode-sum evaluation of the heat kernel `e^{−τH}(x, y)`.
pub fn heat_kernel(
    params: &ConeParams,
    truncation: &SeriesTruncation,
    tau: f64,
    x: &ConePoint,
    y: &ConePoint,
    acc: &SpecFunAccuracy,
) -> Result<(KernelValue, SeriesTruncation), PropagatorError> {
    params.validate()?;
    check_radii(x.r, y.r)?;
    let (value, trunc) = mode_sum(params, truncation, |m| {
        Ok(m.product(params, x.theta, y.theta) * heat_mode_kernel(m.nu, tau, x.r, y.r, acc)?)
    })?;
    let err = trunc.tail_bound + acc.abs_tol * (2 * trunc.k_max + 1) as f64;
    Ok((
        KernelValue {
            value,
            geometric_part: None,
            diffractive_part: None,
            abs_error_estimate: err,
            converged: true,
        },
        trunc,
    ))
}

/// Contour `0 → iβ → iβ + ∞` for an `s`-integral against `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Contour {
    pub beta: f64,
    /// Lower bound on the exponential decay rate along the horizontal leg.
    pub rate: f64,
}

impl Contour {
    pub fn real_axis(rate: f64) -> Self {
        Self { beta: 0.0, rate }
    }

    /// Largest admissible height in the direction `sign`, capped at `π/2`.
    pub fn height(b: &BKernel) -> f64 {
        FRAC_PI_2.min(0.5 * b.pole_distance())
    }

    /// `∫ g(s) B(s) ds` along the contour.
    pub fn integrate<G>(&self, b: &BKernel, g: G, spec: &QuadratureSpec) -> Result<QuadratureResult, QuadratureError>
    where
        G: Fn(Complex64) -> Complex64,
    {
        let i = Complex64::i();
        let mut total = QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            abs_error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        };
        if self.beta != 0.0 {
            let sign = self.beta.signum();
            let v = integrate_finite(
                |u| {
                    let s = Complex64::new(0.0, sign * u);
                    g(s) * b.eval(s).value * (i * sign)
                },
                0.0,
                self.beta.abs(),
                spec,
            )?;
            total.value += v.value;
            total.abs_error_estimate += v.abs_error_estimate;
            total.evaluations += v.evaluations;
            total.converged &= v.converged;
        }
        let beta = self.beta;
        let h = integrate_decaying(
            |sigma| {
                let s = Complex64::new(sigma, beta);
                g(s) * b.eval(s).value
            },
            0.0,
            self.rate,
            spec,
        )?;
        total.value += h.value;
        total.abs_error_estimate += h.abs_error_estimate;
        total.evaluations += h.evaluations;
        total.converged &= h.converged;
        Ok(total)
    }
}

/// Integral of `B(s)` against `e^{−|n(s)|²/(4it)}` along the deformed contour.
pub fn diffractive_integral(
    params: &ConeParams,
    variant: BVariant,
    t: f64,
    x: &ConePoint,
    y: &ConePoint,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult, PropagatorError> {
    let b = BKernel::new(params, variant, x.theta, y.theta);
    let beta = t.signum() * Contour::height(&b);
    let rr = x.r * y.r;
    let contour = Contour {
        beta,
        rate: params.b_decay_rate() + rr * beta.abs().sin() / (2.0 * t.abs()),
    };
    let sum = (x.r + y.r).powi(2);
    let res = contour.integrate(
        &b,
        |s| {
            // |n|² = (r + r')² + 4rr' sinh²(s/2).
            let n2 = sum + 4.0 * rr * (0.5 * s).sinh().powi(2);
            (Complex64::i() * n2 / (4.0 * t)).exp()
        },
        spec,
    )?;
    Ok(res)
}

pub(crate) fn b_vanishes(params: &ConeParams, variant: BVariant) -> bool {
    variant == BVariant::DerivationConsistent && params.alpha == 0.0 && params.rho == 1.0
}

/// Closed-form Schrödinger kernel: image sum plus diffractive integral.
pub fn schrodinger_closed(
    params: &ConeParams,
    t: f64,
    x: &ConePoint,
    y: &ConePoint,
    opts: &KernelOptions,
) -> Result<KernelValue, PropagatorError> {
    params.validate()?;
    check_time(t)?;
    check_radii(x.r, y.r)?;
    let it = Complex64::new(0.0, t);
    let mut geometric = Complex64::new(0.0, 0.0);
    for img in image_indices(params, x.theta, y.theta) {
        let m = img.chordal(x.r, y.r);
        geometric +=
            img.weight * a_factor(params, img.j, x.theta, y.theta) * (Complex64::i() * m * m / (4.0 * t)).exp();
    }
    geometric /= 4.0 * PI * it;
    let (diffractive, err, converged) = if b_vanishes(params, opts.variant) {
        (Complex64::new(0.0, 0.0), 0.0, true)
    } else {
        let q = diffractive_integral(params, opts.variant, t, x, y, &opts.quadrature)?;
        let pre = -1.0 / (4.0 * PI * PI * params.rho * it);
        (pre * q.value, pre.norm() * q.abs_error_estimate, q.converged)
    };
    Ok(KernelValue {
        value: geometric + diffractive,
        geometric_part: Some(geometric),
        diffractive_part: Some(diffractive),
        abs_error_estimate: err,
        converged,
    })
}

/// Geodesic distance on the cone: the shortest image chord, or `r + r'`
/// through the tip when no image exists.
pub fn geodesic_distance(params: &ConeParams, x: &ConePoint, y: &ConePoint) -> f64 {
    image_indices(params, x.theta, y.theta)
        .iter()
        .map(|img| img.chordal(x.r, y.r))
        .fold(x.r + y.r, f64::min)
}

/// Closed-form heat kernel multiplied by `e^{shift/(4τ)}`.
fn heat_closed_shifted(
    params: &ConeParams,
    tau: f64,
    x: &ConePoint,
    y: &ConePoint,
    shift: f64,
    opts: &KernelOptions,
) -> Result<KernelValue, PropagatorError> {
    params.validate()?;
    check_radii(x.r, y.r)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(PropagatorError::Domain(format!("tau must be > 0, got {tau}")));
    }
    let mut geometric = Complex64::new(0.0, 0.0);
    for img in image_indices(params, x.theta, y.theta) {
        let m = img.chordal(x.r, y.r);
        geometric += img.weight * a_factor(params, img.j, x.theta, y.theta) * (-(m * m - shift) / (4.0 * tau)).exp();
    }
    geometric /= 4.0 * PI * tau;
    let (diffractive, err, converged) = if b_vanishes(params, opts.variant) {
        (Complex64::new(0.0, 0.0), 0.0, true)
    } else {
        let b = BKernel::new(params, opts.variant, x.theta, y.theta);
        let rr = x.r * y.r;
        let base = ((x.r + y.r).powi(2) - shift) / (4.0 * tau);
        let contour = Contour::real_axis(params.b_decay_rate() + rr / (4.0 * tau));
        let q = contour.integrate(
            &b,
            |s| {
                let extra = rr * (0.5 * s.re).sinh().powi(2) / tau;
                Complex64::new((-base - extra).exp(), 0.0)
            },
            &opts.quadrature,
        )?;
        let pre = -1.0 / (4.0 * PI * PI * params.rho * tau);
        (pre * q.value, pre.abs() * q.abs_error_estimate, q.converged)
    };
    Ok(KernelValue {
        value: geometric + diffractive,
        geometric_part: Some(geometric),
        diffractive_part: Some(diffractive),
        abs_error_estimate: err,
        converged,
    })
}

/// Closed-form heat kernel (image sum and real-axis diffractive integral).
pub fn heat_kernel_closed(
    params: &ConeParams,
    tau: f64,
    x: &ConePoint,
    y: &ConePoint,
    opts: &KernelOptions,
) -> Result<KernelValue, PropagatorError> {
    heat_closed_shifted(params, tau, x, y, 0.0, opts)
}

/// `τ · |heat(τ, x, y)| · e^{d²/(4τ)}` with `d` the geodesic distance;
/// bounded for a Gaussian heat kernel.
pub fn heat_gaussian_ratio(
    params: &ConeParams,
    tau: f64,
    x: &ConePoint,
    y: &ConePoint,
    opts: &KernelOptions,
) -> Result<f64, PropagatorError> {
    let d = geodesic_distance(params, x, y);
    let v = heat_closed_shifted(params, tau, x, y, d * d, opts)?;
    Ok(tau * v.value.norm())
}

/// Closed-form kernel at many point pairs, in parallel.
pub fn schrodinger_closed_batch(
    params: &ConeParams,
    t: f64,
    pairs: &[(ConePoint, ConePoint)],
    opts: &KernelOptions,
) -> Vec<Result<KernelValue, PropagatorError>> {
    pairs
        .par_iter()
        .map(|(x, y)| schrodinger_closed(params, t, x, y, opts))
        .collect()
}
