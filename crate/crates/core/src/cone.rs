//! Geometry and flux of a flat cone `C(S¹_ρ)` with an Aharonov-Bohm potential.
//!
//! The cross-section is a circle of circumference `2πρ`; points are `(r, θ)`
//! with `θ ∈ [0, 2πρ)`. The magnetic potential is a periodic function `A(θ)`
//! whose mean is the flux `α`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used to decide that an image sits on the boundary `|ψ| = π`.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("invalid cone parameters: {0}")]
    InvalidParams(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
}

/// Periodic gauge potential with mean `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gauge {
    /// `A(θ) ≡ α`.
    #[default]
    Constant,
    /// `A(θ) = α + Σ_n a_n cos(nθ/ρ) + b_n sin(nθ/ρ)`, `n = 1, 2, …`.
    Fourier { cos: Vec<f64>, sin: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub rho: f64,
    pub alpha: f64,
    #[serde(default)]
    pub gauge: Gauge,
    /// Permits `alpha = 0` (the flux-free reduction).
    #[serde(default)]
    pub baseline: bool,
}

impl ConeParams {
    pub fn new(rho: f64, alpha: f64) -> Result<Self, ConeError> {
        let p = Self {
            rho,
            alpha,
            gauge: Gauge::Constant,
            baseline: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Flux-free cone (`α = 0`).
    pub fn baseline(rho: f64) -> Result<Self, ConeError> {
        let p = Self {
            rho,
            alpha: 0.0,
            gauge: Gauge::Constant,
            baseline: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_gauge(mut self, gauge: Gauge) -> Result<Self, ConeError> {
        self.gauge = gauge;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConeError> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(ConeError::InvalidParams(format!("rho must be > 0, got {}", self.rho)));
        }
        if !self.alpha.is_finite() || self.alpha.abs() >= 1.0 / self.rho {
            return Err(ConeError::InvalidParams(format!(
                "alpha must satisfy |alpha| < 1/rho = {}, got {}",
                1.0 / self.rho,
                self.alpha
            )));
        }
        if self.alpha == 0.0 && !self.baseline {
            return Err(ConeError::InvalidParams(
                "alpha = 0 is only allowed in baseline mode".into(),
            ));
        }
        if let Gauge::Fourier { cos, sin } = &self.gauge {
            if cos.iter().chain(sin).any(|c| !c.is_finite()) {
                return Err(ConeError::InvalidParams("gauge coefficients must be finite".into()));
            }
        }
        Ok(())
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.rho < 1.0 {
            w.push(format!(
                "rho = {} < 1: kernels are still evaluated, but the dispersive bounds are only expected for rho >= 1",
                self.rho
            ));
        }
        w
    }

    pub fn circumference(&self) -> f64 {
        2.0 * PI * self.rho
    }

    /// Reduces an angle to `[0, 2πρ)`.
    pub fn reduce_angle(&self, theta: f64) -> f64 {
        let c = self.circumference();
        let t = theta.rem_euclid(c);
        if t >= c {
            0.0
        } else {
            t
        }
    }

    /// Gauge potential `A(θ)`.
    pub fn gauge_value(&self, theta: f64) -> f64 {
        match &self.gauge {
            Gauge::Constant => self.alpha,
            Gauge::Fourier { cos, sin } => {
                let mut v = self.alpha;
                for (n, c) in cos.iter().enumerate() {
                    v += c * ((n + 1) as f64 * theta / self.rho).cos();
                }
                for (n, s) in sin.iter().enumerate() {
                    v += s * ((n + 1) as f64 * theta / self.rho).sin();
                }
                v
            }
        }
    }

    /// `∫_{θ'}^{θ} A`.
    pub fn gauge_integral(&self, theta_p: f64, theta: f64) -> f64 {
        let mut v = self.alpha * (theta - theta_p);
        if let Gauge::Fourier { cos, sin } = &self.gauge {
            for (n, c) in cos.iter().enumerate() {
                let k = (n + 1) as f64 / self.rho;
                v += c / k * ((k * theta).sin() - (k * theta_p).sin());
            }
            for (n, s) in sin.iter().enumerate() {
                let k = (n + 1) as f64 / self.rho;
                v -= s / k * ((k * theta).cos() - (k * theta_p).cos());
            }
        }
        v
    }

    /// `e^{−i(α(θ−θ') − ∫_{θ'}^{θ} A)}`; equal to 1 for the constant gauge.
    pub fn gauge_phase(&self, theta: f64, theta_p: f64) -> Complex64 {
        let phase = self.alpha * (theta - theta_p) - self.gauge_integral(theta_p, theta);
        Complex64::from_polar(1.0, -phase)
    }

    /// Smallest `ν_k` whose `sin(ν_k π)` does not vanish identically; this
    /// is the exponential decay rate of `B` in `s`.
    pub fn b_decay_rate(&self) -> f64 {
        let step = 1.0 / self.rho - self.alpha.abs();
        if self.alpha == 0.0 {
            1.0 / self.rho
        } else {
            self.alpha.abs().min(step)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub r: f64,
    pub theta: f64,
}

impl ConePoint {
    pub fn new(params: &ConeParams, r: f64, theta: f64) -> Result<Self, ConeError> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(ConeError::InvalidPoint(format!("r must be finite and >= 0, got {r}")));
        }
        if !theta.is_finite() {
            return Err(ConeError::InvalidPoint(format!("theta must be finite, got {theta}")));
        }
        Ok(Self {
            r,
            theta: params.reduce_angle(theta),
        })
    }
}

/// Angular eigenmode `φ_k` with eigenvalue `ν_k = |k/ρ + α|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularMode {
    pub k: i64,
    pub nu: f64,
    /// `k/ρ + α`, the signed frequency.
    pub shift: f64,
}

impl AngularMode {
    pub fn new(params: &ConeParams, k: i64) -> Self {
        let shift = k as f64 / params.rho + params.alpha;
        Self {
            k,
            nu: shift.abs(),
            shift,
        }
    }

    /// `φ_k(θ) = (2πρ)^{−1/2} e^{−i(θ(k/ρ+α) − ∫₀^θ A)}`.
    pub fn eigenfunction(&self, params: &ConeParams, theta: f64) -> Complex64 {
        let phase = theta * self.shift - params.gauge_integral(0.0, theta);
        Complex64::from_polar(params.circumference().sqrt().recip(), -phase)
    }

    /// `φ_k(θ) conj(φ_k(θ'))`.
    pub fn product(&self, params: &ConeParams, theta: f64, theta_p: f64) -> Complex64 {
        let phase = (theta - theta_p) * self.shift - params.gauge_integral(theta_p, theta);
        Complex64::from_polar(params.circumference().recip(), -phase)
    }
}

pub fn eigen_nu(params: &ConeParams, k: i64) -> f64 {
    AngularMode::new(params, k).nu
}

/// Modes with `ν_k ≤ nu_max`, ordered by `k`.
pub fn modes_up_to(params: &ConeParams, nu_max: f64) -> Vec<AngularMode> {
    let lo = (-(nu_max + params.alpha) * params.rho).ceil() as i64;
    let hi = ((nu_max - params.alpha) * params.rho).floor() as i64;
    (lo..=hi)
        .map(|k| AngularMode::new(params, k))
        .filter(|m| m.nu <= nu_max)
        .collect()
}

/// Geometric image `j` with `|ψ_j| ≤ π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageTerm {
    pub j: i64,
    pub weight: f64,
    pub psi: f64,
}

impl ImageTerm {
    /// `|m| = √(r² + r'² − 2rr' cos ψ)`.
    pub fn chordal(&self, r: f64, r_p: f64) -> f64 {
        // 2rr'(1 − cos ψ) = 4rr' sin²(ψ/2) avoids cancellation at small ψ.
        let d = r - r_p;
        (d * d + 4.0 * r * r_p * (0.5 * self.psi).sin().powi(2)).sqrt()
    }

    pub fn on_boundary(&self) -> bool {
        self.weight < 1.0
    }
}

pub fn image_indices(params: &ConeParams, theta: f64, theta_p: f64) -> Vec<ImageTerm> {
    let delta = theta - theta_p;
    let period = 2.0 * PI * params.rho;
    let lo = ((-PI - BOUNDARY_TOL - delta) / period).ceil() as i64;
    let hi = ((PI + BOUNDARY_TOL - delta) / period).floor() as i64;
    (lo..=hi)
        .filter_map(|j| {
            let psi = delta + j as f64 * period;
            if psi.abs() > PI + BOUNDARY_TOL {
                return None;
            }
            let weight = if (psi.abs() - PI).abs() <= BOUNDARY_TOL {
                0.5
            } else {
                1.0
            };
            Some(ImageTerm { j, weight, psi })
        })
        .collect()
}

/// `A_j = e^{i∫_{θ'}^{θ} A} e^{iα·2jρπ}`.
pub fn a_factor(params: &ConeParams, j: i64, theta: f64, theta_p: f64) -> Complex64 {
    let phase = params.gauge_integral(theta_p, theta) + params.alpha * 2.0 * j as f64 * params.rho * PI;
    Complex64::from_polar(1.0, phase)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffractiveGeometry {
    pub phi1: f64,
    pub phi2: f64,
    pub r: f64,
    pub r_p: f64,
}

impl DiffractiveGeometry {
    pub fn new(params: &ConeParams, r: f64, theta: f64, r_p: f64, theta_p: f64) -> Self {
        let delta = theta - theta_p;
        Self {
            phi1: (PI - delta) / params.rho,
            phi2: (-PI - delta) / params.rho,
            r,
            r_p,
        }
    }

    /// `|n(s)|² = r² + r'² + 2rr' cosh s`, valid for complex `s`.
    pub fn n_squared(&self, s: Complex64) -> Complex64 {
        // (r + r')² + 4rr' sinh²(s/2).
        let sum = self.r + self.r_p;
        sum * sum + 4.0 * self.r * self.r_p * (0.5 * s).sinh().powi(2)
    }

    pub fn n(&self, s: f64) -> f64 {
        self.n_squared(Complex64::new(s, 0.0)).re.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BVariant {
    /// Geometric-series closed form applied uniformly to both cells.
    #[default]
    DerivationConsistent,
    /// Sign of the `sin φ₂` terms as originally printed.
    PaperLiteral,
}

/// `φ` folded to `[0, π]` modulo `2π`.
pub fn fold_angle(phi: f64) -> f64 {
    let t = phi.rem_euclid(2.0 * PI);
    if t > PI {
        2.0 * PI - t
    } else {
        t
    }
}

/// Precomputed angular data for `B_{α,ρ}(·, θ, θ')`.
#[derive(Debug, Clone, Copy)]
pub struct BKernel {
    pub rho: f64,
    pub alpha: f64,
    pub variant: BVariant,
    pub phi1: f64,
    pub phi2: f64,
    gauge_phase: Complex64,
    cells: [Cell; 2],
    k0: f64,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    cos: f64,
    sin: f64,
    half_sin_sq: f64,
}

impl Cell {
    fn new(phi: f64) -> Self {
        // Snap exact multiples of 2π so the removable singularity at s = 0
        // cancels in the combination of both sides.
        if fold_angle(phi) <= BOUNDARY_TOL {
            Cell {
                cos: 1.0,
                sin: 0.0,
                half_sin_sq: 0.0,
            }
        } else {
            Cell {
                cos: phi.cos(),
                sin: phi.sin(),
                half_sin_sq: (0.5 * phi).sin().powi(2),
            }
        }
    }
}

/// Sample of `B` with a flag for near-singular denominators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BSample {
    pub value: Complex64,
    pub near_singular: bool,
    /// Smallest `|cosh(s/ρ) − cos φ_i|` encountered.
    pub min_denominator: f64,
}

const DENOMINATOR_FLOOR: f64 = 1e-12;

impl BKernel {
    pub fn new(params: &ConeParams, variant: BVariant, theta: f64, theta_p: f64) -> Self {
        let delta = theta - theta_p;
        let phi1 = (PI - delta) / params.rho;
        let phi2 = (-PI - delta) / params.rho;
        Self {
            rho: params.rho,
            alpha: params.alpha,
            variant,
            phi1,
            phi2,
            gauge_phase: params.gauge_phase(theta, theta_p),
            cells: [Cell::new(phi1), Cell::new(phi2)],
            k0: (params.alpha.abs() * PI).sin(),
        }
    }

    /// Distance from the real axis of the nearest pole of `B` in the complex
    /// `s` plane; poles at `s = iρ(±φ_i + 2πm)`. Cells snapped to `φ ≡ 0`
    /// cancel at `s = 0`, so their next pole is at `2πρ`.
    pub fn pole_distance(&self) -> f64 {
        [self.phi1, self.phi2]
            .iter()
            .map(|&phi| {
                let f = fold_angle(phi);
                if f <= BOUNDARY_TOL {
                    2.0 * PI * self.rho
                } else {
                    self.rho * f
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `B(s)` for complex `s` in the strip `|Im s| < pole_distance()`.
    pub fn eval(&self, s: Complex64) -> BSample {
        let i = Complex64::i();
        let a = self.alpha;
        let x = s / self.rho;
        let ex = (-x).exp();
        let sh = (0.5 * x).sinh();
        let sh2 = sh * sh;
        let denom = |c: &Cell| 2.0 * sh2 + 2.0 * c.half_sin_sq;
        let d1 = denom(&self.cells[0]);
        let d2 = denom(&self.cells[1]);
        let min_denominator = d1.norm().min(d2.norm());
        let n_plus = |c: &Cell| c.cos - ex + i * c.sin;
        let n_minus = |c: &Cell| c.cos - ex - i * c.sin;
        let (c1, c2) = (&self.cells[0], &self.cells[1]);
        let (n2x, n2y) = match self.variant {
            BVariant::DerivationConsistent => (n_plus(c2), n_minus(c2)),
            BVariant::PaperLiteral => (n_minus(c2), n_plus(c2)),
        };
        let e_pos = Complex64::from_polar(1.0, a * PI);
        let e_neg = e_pos.conj();
        let quarter_i = 1.0 / (4.0 * i);

        let up = (-s * a).exp();
        let down = (s * a).exp();
        let cell = |c: &Cell, d: Complex64, e: Complex64, nx: Complex64, ny: Complex64| {
            if c.half_sin_sq == 0.0 {
                // (up − down)(1 − e^{−x}) / (2 sinh²(x/2))
                //   = −2 e^{−x/2} sinh(αs) / sinh(x/2).
                let ratio = if sh.norm() > 1e-150 {
                    (s * a).sinh() / sh
                } else {
                    Complex64::new(2.0 * a * self.rho, 0.0)
                };
                -2.0 * e * (-0.5 * x).exp() * ratio
            } else {
                e * (up * nx - down * ny) / d
            }
        };
        let t1 = cell(c1, d1, e_pos, n_plus(c1), n_minus(c1));
        let t2 = cell(c2, d2, e_neg, n2x, n2y);
        let value = self.k0 * (-a.abs() * s).exp() + quarter_i * (t1 - t2);
        BSample {
            value: self.gauge_phase * value,
            near_singular: min_denominator < DENOMINATOR_FLOOR,
            min_denominator,
        }
    }

    pub fn eval_real(&self, s: f64) -> Complex64 {
        self.eval(Complex64::new(s, 0.0)).value
    }
}

pub fn b_kernel(
    params: &ConeParams,
    variant: BVariant,
    s: f64,
    theta: f64,
    theta_p: f64,
) -> Result<BSample, ConeError> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(ConeError::InvalidPoint(format!("s must be finite and >= 0, got {s}")));
    }
    let kernel = BKernel::new(params, variant, theta, theta_p);
    let s_eval = if s < 1e-8 && kernel.pole_distance() < 1e-6 {
        1e-8
    } else {
        s
    };
    Ok(kernel.eval(Complex64::new(s_eval, 0.0)))
}

/// Truncated mode sum `Σ_{|k|≤K} e^{−ikΔ/ρ} sin(ν_k π) e^{−sν_k}` times the
/// gauge phase. Reference value for `B`.
pub fn b_series(params: &ConeParams, s: Complex64, theta: f64, theta_p: f64, k_max: i64) -> Complex64 {
    let delta = theta - theta_p;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in -k_max..=k_max {
        let nu = eigen_nu(params, k);
        let phase = Complex64::from_polar(1.0, -(k as f64) * delta / params.rho);
        sum += phase * (nu * PI).sin() * (-s * nu).exp();
    }
    params.gauge_phase(theta, theta_p) * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eigenvalues() {
        let p = ConeParams::new(1.0, 0.5).unwrap();
        assert_eq!(eigen_nu(&p, 0), 0.5);
        assert_eq!(eigen_nu(&p, -1), 0.5);
        let p = ConeParams::new(2.0, 0.25).unwrap();
        assert!((eigen_nu(&p, 3) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn eigenvalue_set_has_period_one_over_rho() {
        // ν_k(α + 1/ρ) = ν_{k+1}(α), evaluated from the raw formula.
        for &(rho, alpha) in &[(1.0, 0.3), (2.0, -0.2), (0.7, 0.9)] {
            for k in -20..20 {
                let shifted = (k as f64 / rho + alpha + 1.0 / rho).abs();
                let p = ConeParams::new(rho, alpha).unwrap();
                assert!((shifted - eigen_nu(&p, k + 1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(ConeParams::new(1.0, 1.0).is_err());
        assert!(ConeParams::new(2.0, 0.6).is_err());
        assert!(ConeParams::new(0.0, 0.1).is_err());
        assert!(ConeParams::new(1.0, 0.0).is_err());
        assert!(ConeParams::baseline(1.0).is_ok());
        assert!(ConeParams::new(0.5, 1.5).unwrap().warnings().len() == 1);
        assert!(ConeParams::new(1.5, 0.5).unwrap().warnings().is_empty());
    }

    #[test]
    fn eigenfunctions_are_normalized_and_periodic() {
        let p = ConeParams::new(1.3, 0.4)
            .unwrap()
            .with_gauge(Gauge::Fourier {
                cos: vec![0.2, -0.1],
                sin: vec![0.3],
            })
            .unwrap();
        for k in [-3, 0, 2] {
            let m = AngularMode::new(&p, k);
            let n = 400;
            let h = p.circumference() / n as f64;
            let norm: f64 = (0..n).map(|i| m.eigenfunction(&p, i as f64 * h).norm_sqr() * h).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            let a = m.eigenfunction(&p, 0.3);
            let b = m.eigenfunction(&p, 0.3 + p.circumference());
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gauge_mean_is_the_flux() {
        let p = ConeParams::new(1.7, -0.3)
            .unwrap()
            .with_gauge(Gauge::Fourier {
                cos: vec![0.5, 0.25],
                sin: vec![-0.4, 0.1, 0.05],
            })
            .unwrap();
        let n = 1000;
        let h = p.circumference() / n as f64;
        let mean: f64 = (0..n).map(|i| p.gauge_value(i as f64 * h)).sum::<f64>() * h / p.circumference();
        assert!((mean - p.alpha).abs() < 1e-10);
        let full = p.gauge_integral(0.0, p.circumference());
        assert!((full - p.alpha * p.circumference()).abs() < 1e-12);
    }

    #[test]
    fn image_sets() {
        let p = ConeParams::new(1.0, 0.5).unwrap();
        let im = image_indices(&p, 1.0, 1.0);
        assert_eq!(im.len(), 1);
        assert_eq!((im[0].j, im[0].weight), (0, 1.0));

        let p = ConeParams::new(1.0 / 3.0, 0.5).unwrap();
        let im = image_indices(&p, 0.2, 0.2);
        assert_eq!(im.iter().map(|t| t.j).collect::<Vec<_>>(), vec![-1, 0, 1]);
        assert!(im.iter().all(|t| t.weight == 1.0));

        let p = ConeParams::new(0.5, 0.5).unwrap();
        let im = image_indices(&p, 0.2, 0.2);
        let js: Vec<_> = im.iter().map(|t| (t.j, t.weight)).collect();
        assert_eq!(js, vec![(-1, 0.5), (0, 1.0), (1, 0.5)]);
    }

    #[test]
    fn a_factor_values() {
        let p = ConeParams::baseline(1.0).unwrap();
        assert!((a_factor(&p, 3, 1.0, 0.2).norm() - 1.0).abs() < 1e-15);
        let p = ConeParams::new(1.0, 0.5).unwrap();
        assert!((a_factor(&p, 1, 0.4, 0.4) - c(-1.0)).norm() < 1e-15);
        let p = ConeParams::new(2.0, 0.25).unwrap();
        let v = a_factor(&p, -1, 0.5, 0.2);
        let expect = Complex64::from_polar(1.0, 0.25 * 0.3) * Complex64::from_polar(1.0, -PI);
        assert!((v - expect).norm() < 1e-14);
        // Dirac-comb form: the phase of image j is α·ψ_j for the constant gauge.
        let im = image_indices(&p, 0.5, 0.2);
        for t in im {
            let comb = Complex64::from_polar(1.0, p.alpha * t.psi);
            assert!((a_factor(&p, t.j, 0.5, 0.2) - comb).norm() < 1e-14);
        }
    }

    #[test]
    fn b_vanishes_on_the_plane_without_flux() {
        let p = ConeParams::baseline(1.0).unwrap();
        for s in [0.01, 0.3, 1.0, 4.0] {
            let b = b_kernel(&p, BVariant::DerivationConsistent, s, 0.9, 0.2).unwrap();
            assert!(b.value.norm() < 1e-12, "s {s}: {}", b.value);
            let lit = b_kernel(&p, BVariant::PaperLiteral, s, 0.9, 0.2).unwrap();
            assert!(lit.value.norm() > 1e-3);
        }
        // Also the α → 0⁺ limit.
        let p = ConeParams::new(1.0, 1e-9).unwrap();
        let b = b_kernel(&p, BVariant::DerivationConsistent, 0.6, 0.9, 0.2).unwrap();
        assert!(b.value.norm() < 1e-8);
    }

    #[test]
    fn b_flux_conjugation() {
        let p = ConeParams::new(1.0, 0.3).unwrap();
        let m = ConeParams::new(1.0, -0.3).unwrap();
        let b = b_kernel(&p, BVariant::DerivationConsistent, 0.8, 1.1, 0.0).unwrap();
        let bm = b_kernel(&m, BVariant::DerivationConsistent, 0.8, 1.1, 0.0).unwrap();
        assert!((bm.value.conj() - b.value).norm() < 1e-14);
        // The reflected gauge −A has flux −α.
        let g = Gauge::Fourier {
            cos: vec![0.2],
            sin: vec![0.1],
        };
        let gm = Gauge::Fourier {
            cos: vec![-0.2],
            sin: vec![-0.1],
        };
        let p = p.with_gauge(g).unwrap();
        let m = m.with_gauge(gm).unwrap();
        let b = b_kernel(&p, BVariant::DerivationConsistent, 0.8, 1.1, 0.0).unwrap();
        let bm = b_kernel(&m, BVariant::DerivationConsistent, 0.8, 1.1, 0.0).unwrap();
        assert!((bm.value.conj() - b.value).norm() < 1e-14);
        let a = a_factor(&p, 1, 1.1, 0.0);
        let am = a_factor(&m, 1, 1.1, 0.0);
        assert!((am.conj() - a).norm() < 1e-14);
    }

    #[test]
    fn b_matches_truncated_mode_sum() {
        // 401-term sum at ρ=1, α=1/2, s=1, Δθ=0.5, evaluated in 30-digit
        // arithmetic and frozen.
        let frozen = Complex64::new(0.8746408221877802, 0.22333246791577456);
        let p = ConeParams::new(1.0, 0.5).unwrap();
        let series = b_series(&p, c(1.0), 0.5, 0.0, 200);
        assert!((series - frozen).norm() < 1e-13);
        let b = b_kernel(&p, BVariant::DerivationConsistent, 1.0, 0.5, 0.0).unwrap();
        assert!((b.value - frozen).norm() < 1e-12, "{}", b.value);
        let lit = b_kernel(&p, BVariant::PaperLiteral, 1.0, 0.5, 0.0).unwrap();
        assert!((lit.value - frozen).norm() > 1e-3);
    }

    #[test]
    fn b_decay_rate_is_set_by_the_smallest_active_mode() {
        // With |α| < 1/(2ρ) the k = 0 term e^{−|α|s} dominates.
        let p = ConeParams::new(1.0, 0.2).unwrap();
        assert!((p.b_decay_rate() - 0.2).abs() < 1e-15);
        let k = BKernel::new(&p, BVariant::DerivationConsistent, 0.7, 0.0);
        let ratio = k.eval_real(30.0).norm() / k.eval_real(20.0).norm();
        assert!((ratio.ln() / 10.0 + 0.2).abs() < 1e-3);
        let p = ConeParams::new(1.0, 0.8).unwrap();
        assert!((p.b_decay_rate() - 0.2).abs() < 1e-12);
        assert_eq!(ConeParams::baseline(2.0).unwrap().b_decay_rate(), 0.5);
    }

    #[test]
    fn boundary_images_keep_b_finite() {
        let p = ConeParams::new(0.5, 0.5).unwrap();
        let k = BKernel::new(&p, BVariant::DerivationConsistent, 0.3, 0.3);
        for s in [1e-10, 1e-4, 0.1, 0.5, 2.0] {
            let v = k.eval_real(s);
            assert!(v.re.is_finite() && v.im.is_finite());
            if s >= 0.1 {
                let series = b_series(&p, c(s), 0.3, 0.3, 4000);
                assert!((v - series).norm() < 1e-8, "s {s}: {v} vs {series}");
            }
        }
        let at_zero = b_kernel(&p, BVariant::DerivationConsistent, 0.0, 0.3, 0.3).unwrap();
        assert!(at_zero.value.norm().is_finite());
    }

    #[test]
    fn b_at_complex_arguments_matches_series() {
        let p = ConeParams::new(1.4, -0.35).unwrap();
        let k = BKernel::new(&p, BVariant::DerivationConsistent, 2.0, 0.4);
        let beta = 0.5 * k.pole_distance();
        for sigma in [0.4, 1.0, 3.0] {
            for b in [beta, -beta] {
                let s = Complex64::new(sigma, b);
                let series = b_series(&p, s, 2.0, 0.4, 3000);
                assert!((k.eval(s).value - series).norm() < 1e-9, "{s}");
            }
        }
    }

    #[test]
    fn gauge_changes_only_a_unimodular_factor() {
        let p = ConeParams::new(1.2, 0.4).unwrap();
        let q = p
            .clone()
            .with_gauge(Gauge::Fourier {
                cos: vec![0.7],
                sin: vec![-0.2, 0.3],
            })
            .unwrap();
        for s in [0.1, 0.9, 2.5] {
            let a = b_kernel(&p, BVariant::DerivationConsistent, s, 1.0, 3.0).unwrap();
            let b = b_kernel(&q, BVariant::DerivationConsistent, s, 1.0, 3.0).unwrap();
            assert!((a.value.norm() - b.value.norm()).abs() < 1e-13);
        }
        assert!((a_factor(&q, 2, 1.0, 3.0).norm() - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn image_count_is_bounded(rho in 0.2f64..4.0, t in 0.0f64..1.0, tp in 0.0f64..1.0) {
            let p = ConeParams::new(rho, 0.1 / rho).unwrap();
            let (th, thp) = (t * p.circumference(), tp * p.circumference());
            let im = image_indices(&p, th, thp);
            prop_assert!(!im.is_empty() || 2.0 * PI * rho > 2.0 * PI);
            prop_assert!(im.len() as f64 <= 2.0 + (1.0 / rho).ceil());
            for term in im {
                prop_assert!(term.psi.abs() <= PI + BOUNDARY_TOL);
            }
        }

        #[test]
        fn b_equals_mode_sum(
            rho in 0.5f64..3.0,
            frac in -0.95f64..0.95,
            s in 0.2f64..3.0,
            delta in -3.0f64..3.0,
        ) {
            let alpha = if frac == 0.0 { 0.1 } else { frac / rho };
            let p = ConeParams::new(rho, alpha).unwrap();
            let rate = 1.0 / rho - alpha.abs();
            let k_max = (40.0 / (s * rate.min(1.0 / rho))).ceil() as i64 + 10;
            let series = b_series(&p, c(s), delta, 0.0, k_max);
            let b = BKernel::new(&p, BVariant::DerivationConsistent, delta, 0.0).eval_real(s);
            prop_assert!((b - series).norm() < 1e-8 * (1.0 + series.norm()), "{} vs {}", b, series);
        }

        #[test]
        fn geometric_series_cell(phi in -6.0f64..6.0, s in 0.05f64..3.0, rho in 0.5f64..2.0) {
            let z = Complex64::new(phi, s / rho);
            let mut direct = Complex64::new(0.0, 0.0);
            let mut k = 1.0;
            loop {
                let t = (Complex64::i() * k * z).exp();
                direct += t;
                if t.norm() < 1e-16 { break; }
                k += 1.0;
            }
            let closed = Complex64::new(phi.cos() - (-s / rho).exp(), phi.sin())
                / (2.0 * ((s / rho).cosh() - phi.cos()));
            prop_assert!((direct - closed).norm() < 1e-10 * (1.0 + closed.norm()));
        }

        #[test]
        fn denominator_identity(phi in -10.0f64..10.0, s in 0.0f64..5.0, rho in 0.3f64..3.0) {
            let lhs = (s / rho).cosh() - phi.cos();
            let rhs = 2.0 * (s / (2.0 * rho)).sinh().powi(2) + 2.0 * (phi / 2.0).sin().powi(2);
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
