//! Finite-mode initial data and their evolution by functional calculus.
//!
//! A datum `f = Σ_k f_k(r) φ_k(θ)` is represented through the Hankel
//! transforms `f̂_k(λ) = ∫ f_k(r) J_{ν_k}(λr) r dr`; a multiplier `m(√H)` acts
//! as `(m(√H)f)_k(r) = ∫ m(λ) f̂_k(λ) J_{ν_k}(λr) λ dλ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EstimatesError;
use crate::cone::{AngularMode, ConeParams, ConePoint};
use crate::quadrature::CompositeRule;
use crate::specfun::{bessel_j, SpecFunAccuracy, SpecFunError};
use crate::spectral::LPWindow;

/// Radial interval every profile must live in.
pub const PROFILE_SUPPORT: (f64, f64) = (0.3, 2.5);

/// Relative size of `f̂` at the spectral cutoff.
pub const SPECTRAL_TOL: f64 = 1e-10;

/// `a·e^{−(r−c)²/(2σ²)}·b((r−c)/w)` with `b(u) = e^{1 − 1/(1−u²)}` on
/// `|u| < 1`: smooth, supported in `[c − w, c + w]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub center: f64,
    pub half_width: f64,
    pub sigma: f64,
    pub amplitude: Complex64,
}

impl RadialProfile {
    pub fn new(center: f64, half_width: f64, amplitude: Complex64) -> Self {
        Self {
            center,
            half_width,
            sigma: 0.25 * half_width,
            amplitude,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn validate(&self) -> Result<(), EstimatesError> {
        let (a, b) = self.support();
        let ok = self.half_width > 0.0
            && self.sigma > 0.0
            && a >= PROFILE_SUPPORT.0 - 1e-12
            && b <= PROFILE_SUPPORT.1 + 1e-12
            && self.amplitude.norm().is_finite();
        if ok {
            Ok(())
        } else {
            Err(EstimatesError::Domain(format!(
                "profile must be supported in [{}, {}]: {self:?}",
                PROFILE_SUPPORT.0, PROFILE_SUPPORT.1
            )))
        }
    }

    pub fn value(&self, r: f64) -> Complex64 {
        let u = (r - self.center) / self.half_width;
        if u.abs() >= 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        let d = r - self.center;
        let g = (-d * d / (2.0 * self.sigma * self.sigma)).exp();
        self.amplitude * g * (1.0 - 1.0 / (1.0 - u * u)).exp()
    }

    /// Frequency beyond which `|f̂|` is below `tol` relative to its peak.
    pub fn lambda_cut(&self, tol: f64) -> f64 {
        1.25 * (2.0 * (1.0 / tol).ln()).sqrt() / self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeComponent {
    pub k: i64,
    pub profile: RadialProfile,
}

/// `f(r, θ) = Σ f_k(r) φ_k(θ)` over finitely many distinct modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDatum {
    pub components: Vec<ModeComponent>,
}

impl InitialDatum {
    pub fn validate(&self) -> Result<(), EstimatesError> {
        if self.components.is_empty() {
            return Err(EstimatesError::Domain("datum has no components".into()));
        }
        for (i, c) in self.components.iter().enumerate() {
            c.profile.validate()?;
            if self.components[..i].iter().any(|d| d.k == c.k) {
                return Err(EstimatesError::Domain(format!("mode {} repeated", c.k)));
            }
        }
        Ok(())
    }

    /// Random profiles on the given modes: centres in `[1.1, 1.7]`, half
    /// width `0.6`, complex amplitudes of modulus at most 1.
    pub fn random<R: Rng>(rng: &mut R, modes: &[i64]) -> Self {
        let components = modes
            .iter()
            .map(|&k| {
                let center = rng.random_range(1.1..1.7);
                let amp = Complex64::from_polar(rng.random_range(0.2..1.0), rng.random_range(0.0..2.0 * PI));
                ModeComponent {
                    k,
                    profile: RadialProfile::new(center, 0.6, amp),
                }
            })
            .collect();
        Self { components }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|m| ModeComponent {
                    k: m.k,
                    profile: RadialProfile {
                        amplitude: m.profile.amplitude * c,
                        ..m.profile
                    },
                })
                .collect(),
        }
    }

    pub fn lambda_cut(&self, tol: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.profile.lambda_cut(tol))
            .fold(0.0, f64::max)
    }

    pub fn value(&self, params: &ConeParams, x: &ConePoint) -> Complex64 {
        self.components
            .iter()
            .map(|c| c.profile.value(x.r) * AngularMode::new(params, c.k).eigenfunction(params, x.theta))
            .sum()
    }

    /// `‖f_k‖²_{L²(r dr)}` per component, by quadrature on the support.
    pub fn mode_masses(&self) -> Vec<(i64, f64)> {
        self.components
            .iter()
            .map(|c| {
                let rule = profile_rule(&c.profile, c.profile.lambda_cut(SPECTRAL_TOL));
                (c.k, rule.integrate(|r| c.profile.value(r).norm_sqr() * r))
            })
            .collect()
    }
}

fn profile_rule(p: &RadialProfile, lambda_max: f64) -> CompositeRule {
    let (a, b) = p.support();
    let panel = (0.5 * p.sigma).min(4.0 / lambda_max.max(1.0));
    CompositeRule::new(&[a, p.center, b], panel, 16)
}

/// Radial Gauss-Legendre rule on `[0, r_max]` resolving oscillations up to
/// frequency `lambda_max`.
pub fn radial_rule(r_max: f64, lambda_max: f64, refinement: u32) -> CompositeRule {
    let panel = (3.0 / lambda_max.max(1.0)).min(0.5) / f64::from(1u32 << refinement);
    CompositeRule::new(&[0.0, r_max], panel, 8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    /// `e^{−itH}`.
    Schrodinger,
    /// `e^{it√H}`.
    HalfWave,
    /// `e^{−tH}`.
    Heat,
}

impl Flow {
    pub fn multiplier(self, t: f64, lambda: f64) -> Complex64 {
        match self {
            Flow::Schrodinger => Complex64::from_polar(1.0, -t * lambda * lambda),
            Flow::HalfWave => Complex64::from_polar(1.0, t * lambda),
            Flow::Heat => Complex64::new((-t * lambda * lambda).exp(), 0.0),
        }
    }

    /// Largest `|d/dλ arg m(λ)|` on `[0, lambda_max]`.
    pub fn phase_rate(self, t: f64, lambda_max: f64) -> f64 {
        match self {
            Flow::Schrodinger => 2.0 * t.abs() * lambda_max,
            Flow::HalfWave => t.abs(),
            Flow::Heat => 0.0,
        }
    }
}

/// Spectral quadrature rule: `[0, lambda_max]` split at `breakpoints`,
/// panels no wider than `max_panel`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRule {
    pub lambda_max: f64,
    pub rule: CompositeRule,
}

impl SpectralRule {
    /// Resolves `m(λ) J_ν(λr)` for `r ≤ r_max` when `m` changes phase at rate
    /// at most `phase_rate`.
    pub fn new(lambda_max: f64, phase_rate: f64, r_max: f64, extra_breaks: &[f64]) -> Self {
        let max_panel = (8.0 / (phase_rate + r_max + 1.0)).min(1.0);
        let mut breaks: Vec<f64> = extra_breaks
            .iter()
            .cloned()
            .filter(|&b| b > 0.0 && b < lambda_max)
            .collect();
        breaks.push(0.0);
        breaks.push(lambda_max);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Self {
            lambda_max,
            rule: CompositeRule::new(&breaks, max_panel, 16),
        }
    }

    /// Breakpoints at the edges of every window that meets `[0, lambda_max]`.
    pub fn window_breaks(windows: &[LPWindow]) -> Vec<f64> {
        windows
            .iter()
            .flat_map(|w| {
                let (a, b) = w.support();
                [a, w.scale(), b]
            })
            .collect()
    }
}

/// `J_ν(a_i b_j)` for fixed `ν`, stored row-major in `i`.
#[derive(Debug, Clone)]
pub struct BesselTable {
    pub nu: f64,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl BesselTable {
    pub fn new(nu: f64, a: &[f64], b: &[f64], acc: &SpecFunAccuracy) -> Result<Self, SpecFunError> {
        let rows: Result<Vec<Vec<f64>>, SpecFunError> = a
            .par_iter()
            .map(|&ai| b.iter().map(|&bj| bessel_j(nu, ai * bj, acc)).collect())
            .collect();
        Ok(Self {
            nu,
            rows: a.len(),
            cols: b.len(),
            values: rows?.concat(),
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    /// `Σ_i J_ν(a_i b_j) c_i` for every `j`.
    pub fn contract_rows(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (i, c) in coeffs.iter().enumerate() {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, &j) in out.iter_mut().zip(self.row(i)) {
                *o += c * j;
            }
        }
        out
    }

    /// `Σ_j J_ν(a_i b_j) c_j` for every `i`.
    pub fn contract_cols(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(coeffs).map(|(&j, c)| c * j).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub k: i64,
    pub nu: f64,
    /// `f̂_k` at the nodes of the spectral rule.
    pub fhat: Vec<Complex64>,
}

/// A datum in the spectral representation on a fixed rule.
#[derive(Debug, Clone)]
pub struct SpectralDatum {
    pub params: ConeParams,
    pub rule: SpectralRule,
    pub modes: Vec<ModeSpectrum>,
}

impl SpectralDatum {
    pub fn new(
        params: &ConeParams,
        datum: &InitialDatum,
        rule: SpectralRule,
        acc: &SpecFunAccuracy,
    ) -> Result<Self, EstimatesError> {
        params.validate()?;
        datum.validate()?;
        let modes: Result<Vec<ModeSpectrum>, EstimatesError> = datum
            .components
            .iter()
            .map(|c| {
                let mode = AngularMode::new(params, c.k);
                let r = profile_rule(&c.profile, rule.lambda_max);
                let weighted: Vec<Complex64> = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(&x, &w)| c.profile.value(x) * (w * x))
                    .collect();
                let table = BesselTable::new(mode.nu, &rule.rule.nodes, &r.nodes, acc)?;
                Ok(ModeSpectrum {
                    k: c.k,
                    nu: mode.nu,
                    fhat: table.contract_cols(&weighted),
                })
            })
            .collect();
        Ok(Self {
            params: params.clone(),
            rule,
            modes: modes?,
        })
    }

    /// Datum with `f̂_k = shape(λ)` on a single mode, given directly in the
    /// spectral variable.
    pub fn from_spectrum<F: Fn(f64) -> Complex64>(params: &ConeParams, k: i64, rule: SpectralRule, shape: F) -> Self {
        let mode = AngularMode::new(params, k);
        let fhat = rule.rule.nodes.iter().map(|&l| shape(l)).collect();
        Self {
            params: params.clone(),
            rule,
            modes: vec![ModeSpectrum { k, nu: mode.nu, fhat }],
        }
    }

    /// `Σ_k ∫ w(λ)|f̂_k(λ)|² λ dλ`.
    pub fn weighted_norm_sq<W: Fn(f64) -> f64>(&self, weight: W) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                self.rule
                    .rule
                    .nodes
                    .iter()
                    .zip(&self.rule.rule.weights)
                    .zip(&m.fhat)
                    .map(|((&l, &w), f)| w * weight(l) * f.norm_sqr() * l)
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.weighted_norm_sq(|_| 1.0).sqrt()
    }

    /// `‖H^{s/2} f‖_{L²}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.weighted_norm_sq(|l| l.powf(2.0 * s)).sqrt()
    }

    /// Per-mode coefficients `w_i λ_i m(λ_i) f̂_k(λ_i)`.
    pub fn coefficients<M: Fn(f64) -> Complex64>(&self, mode: usize, m: &M) -> Vec<Complex64> {
        let r = &self.rule.rule;
        r.nodes
            .iter()
            .zip(&r.weights)
            .zip(&self.modes[mode].fhat)
            .map(|((&l, &w), f)| m(l) * f * (w * l))
            .collect()
    }

    /// `(m(√H)f)_k` at `radii`, one vector per mode.
    pub fn apply<M: Fn(f64) -> Complex64>(
        &self,
        m: M,
        radii: &[f64],
        acc: &SpecFunAccuracy,
    ) -> Result<Vec<Vec<Complex64>>, EstimatesError> {
        self.modes
            .iter()
            .enumerate()
            .map(|(i, mode)| {
                let table = BesselTable::new(mode.nu, &self.rule.rule.nodes, radii, acc)?;
                Ok(table.contract_rows(&self.coefficients(i, &m)))
            })
            .collect()
    }

    /// Same as [`apply`](Self::apply) with precomputed tables, one per mode,
    /// of shape `(spectral nodes) × (radii)`.
    pub fn apply_with<M: Fn(f64) -> Complex64>(&self, m: M, tables: &[BesselTable]) -> Vec<Vec<Complex64>> {
        self.modes
            .iter()
            .enumerate()
            .map(|(i, _)| tables[i].contract_rows(&self.coefficients(i, &m)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub k: i64,
    pub nu: f64,
    pub radii: Vec<f64>,
    pub values: Vec<Complex64>,
}

/// Mode-wise `(e^{−itH}f)_k`, `(e^{it√H}f)_k` or `(e^{−tH}f)_k` at `radii`.
pub fn evolve_datum(
    params: &ConeParams,
    flow: Flow,
    datum: &InitialDatum,
    t: f64,
    radii: &[f64],
    acc: &SpecFunAccuracy,
) -> Result<Vec<ModeSolution>, EstimatesError> {
    if !t.is_finite() {
        return Err(EstimatesError::Domain(format!("t must be finite, got {t}")));
    }
    let lambda_max = datum.lambda_cut(SPECTRAL_TOL);
    let r_max = radii.iter().cloned().fold(PROFILE_SUPPORT.1, f64::max);
    let rule = SpectralRule::new(lambda_max, flow.phase_rate(t, lambda_max), r_max, &[]);
    let spec = SpectralDatum::new(params, datum, rule, acc)?;
    let values = spec.apply(|l| flow.multiplier(t, l), radii, acc)?;
    Ok(spec
        .modes
        .iter()
        .zip(values)
        .map(|(m, v)| ModeSolution {
            k: m.k,
            nu: m.nu,
            radii: radii.to_vec(),
            values: v,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSample {
    pub t: f64,
    pub k: i64,
    pub initial: f64,
    pub evolved: f64,
    pub relative_defect: f64,
}

/// Per-mode `∫|u_k(t, r)|² r dr` against `∫|f_k(r)|² r dr`, both in physical
/// space.
pub fn mass_conservation(
    params: &ConeParams,
    datum: &InitialDatum,
    times: &[f64],
    acc: &SpecFunAccuracy,
) -> Result<Vec<MassSample>, EstimatesError> {
    let lambda_max = datum.lambda_cut(SPECTRAL_TOL);
    let initial = datum.mode_masses();
    let mut out = Vec::new();
    for &t in times {
        let r_max = PROFILE_SUPPORT.1 + 2.0 * t.abs() * lambda_max + 1.0;
        let radial = radial_rule(r_max, lambda_max, 0);
        let sol = evolve_datum(params, Flow::Schrodinger, datum, t, &radial.nodes, acc)?;
        for (s, &(k, m0)) in sol.iter().zip(&initial) {
            let m = s
                .values
                .iter()
                .zip(radial.nodes.iter().zip(&radial.weights))
                .map(|(u, (&r, &w))| w * r * u.norm_sqr())
                .sum::<f64>();
            out.push(MassSample {
                t,
                k,
                initial: m0,
                evolved: m,
                relative_defect: (m - m0).abs() / m0,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    /// `‖√H u(t)‖² = ⟨Hu(t), u(t)⟩`.
    pub potential: f64,
    /// `‖∂_t u(t)‖²`.
    pub kinetic: f64,
    pub energy: f64,
}

/// Energy of `u(t) = cos(t√H)f + sin(t√H)/√H g` in physical space. The
/// potential term is taken as `⟨Hu, u⟩` since `u`, `Hu` and `∂_t u` stay
/// inside the light cone of the data while `√H u` does not.
pub fn wave_energy(
    params: &ConeParams,
    f: &InitialDatum,
    g: &InitialDatum,
    times: &[f64],
    acc: &SpecFunAccuracy,
) -> Result<Vec<EnergySample>, EstimatesError> {
    let lambda_max = f.lambda_cut(SPECTRAL_TOL).max(g.lambda_cut(SPECTRAL_TOL));
    let t_max = times.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let r_max = PROFILE_SUPPORT.1 + t_max + 1.0;
    let radial = radial_rule(r_max, lambda_max, 0);
    let rule = SpectralRule::new(lambda_max, t_max, r_max, &[]);
    let fs = SpectralDatum::new(params, f, rule.clone(), acc)?;
    let gs = SpectralDatum::new(params, g, rule, acc)?;
    let mut ks: Vec<i64> = fs.modes.iter().chain(&gs.modes).map(|m| m.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let tables: Vec<BesselTable> = ks
        .iter()
        .map(|&k| BesselTable::new(AngularMode::new(params, k).nu, &fs.rule.rule.nodes, &radial.nodes, acc))
        .collect::<Result<_, _>>()?;
    // Σ_k ∫ conj(a_k) b_k r dr.
    let inner = |a: &[Vec<Complex64>], b: &[Vec<Complex64>]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(u, v)| {
                u.iter()
                    .zip(v)
                    .zip(radial.nodes.iter().zip(&radial.weights))
                    .map(|((x, y), (&r, &w))| w * r * (x.conj() * y).re)
                    .sum::<f64>()
            })
            .sum()
    };
    let synth = |mf: &dyn Fn(f64) -> f64, mg: &dyn Fn(f64) -> f64| -> Vec<Vec<Complex64>> {
        ks.iter()
            .zip(&tables)
            .map(|(&k, table)| {
                let mut c = vec![Complex64::new(0.0, 0.0); fs.rule.rule.len()];
                for (s, m) in [(&fs, mf), (&gs, mg)] {
                    if let Some(i) = s.modes.iter().position(|x| x.k == k) {
                        for (ci, v) in c.iter_mut().zip(s.coefficients(i, &|l| Complex64::new(m(l), 0.0))) {
                            *ci += v;
                        }
                    }
                }
                table.contract_rows(&c)
            })
            .collect()
    };
    let mut out = Vec::new();
    for &t in times {
        let u = synth(&|l| (t * l).cos(), &|l| (t * l).sin() / l);
        let hu = synth(&|l| l * l * (t * l).cos(), &|l| l * (t * l).sin());
        let ut = synth(&|l| -l * (t * l).sin(), &|l| (t * l).cos());
        let (potential, kinetic) = (inner(&u, &hu), inner(&ut, &ut));
        out.push(EnergySample {
            t,
            potential,
            kinetic,
            energy: potential + kinetic,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> ConeParams {
        ConeParams::new(1.0, 0.5).unwrap()
    }

    fn datum(seed: u64, modes: &[i64]) -> InitialDatum {
        InitialDatum::random(&mut ChaCha8Rng::seed_from_u64(seed), modes)
    }

    #[test]
    fn profile_support_enforced() {
        assert!(RadialProfile::new(1.4, 0.6, Complex64::new(1.0, 0.0))
            .validate()
            .is_ok());
        assert!(RadialProfile::new(0.5, 0.6, Complex64::new(1.0, 0.0))
            .validate()
            .is_err());
        let p = RadialProfile::new(1.4, 0.6, Complex64::new(1.0, 0.0));
        assert_eq!(p.value(0.8), Complex64::new(0.0, 0.0));
        assert!((p.value(1.4).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn repeated_mode_rejected() {
        let mut d = datum(3, &[0, 1]);
        d.components[1].k = 0;
        assert!(d.validate().is_err());
    }

    #[test]
    fn zero_time_round_trip() {
        let p = params();
        let d = datum(1, &[-1, 0, 2]);
        let radii: Vec<f64> = (0..40).map(|i| 0.35 + 0.05 * i as f64).collect();
        let acc = SpecFunAccuracy::default();
        let sol = evolve_datum(&p, Flow::Schrodinger, &d, 0.0, &radii, &acc).unwrap();
        for (s, c) in sol.iter().zip(&d.components) {
            for (&r, v) in radii.iter().zip(&s.values) {
                assert!(
                    (v - c.profile.value(r)).norm() < 1e-6,
                    "k={} r={r} {} {}",
                    s.k,
                    v,
                    c.profile.value(r)
                );
            }
        }
    }

    #[test]
    fn schrodinger_mass_conserved() {
        let d = datum(2, &[-1, 0, 1]);
        let samples = mass_conservation(&params(), &d, &[0.02, 0.1], &SpecFunAccuracy::default()).unwrap();
        for s in samples {
            assert!(s.relative_defect < 1e-6, "{s:?}");
        }
    }

    #[test]
    fn wave_energy_constant() {
        let f = datum(4, &[-1, 0, 1]);
        let g = datum(5, &[0, 1]);
        let e = wave_energy(&params(), &f, &g, &[0.0, 0.5, 1.5], &SpecFunAccuracy::default()).unwrap();
        for s in &e {
            assert!((s.energy - e[0].energy).abs() <= 1e-5 * e[0].energy, "{s:?}");
        }
    }

    #[test]
    fn evolution_is_linear_in_scaling() {
        let p = params();
        let d = datum(6, &[0, 1]);
        let c = Complex64::new(-0.7, 2.3);
        let radii = [0.5, 1.0, 1.7, 2.9];
        let acc = SpecFunAccuracy::default();
        let a = evolve_datum(&p, Flow::HalfWave, &d, 0.8, &radii, &acc).unwrap();
        let b = evolve_datum(&p, Flow::HalfWave, &d.scaled(c), 0.8, &radii, &acc).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for (u, v) in x.values.iter().zip(&y.values) {
                assert!((u * c - v).norm() <= 1e-12 * (1.0 + v.norm()));
            }
        }
    }

    #[test]
    fn sobolev_norm_zero_is_l2() {
        let p = params();
        let d = datum(7, &[0]);
        let lam = d.lambda_cut(SPECTRAL_TOL);
        let s = SpectralDatum::new(
            &p,
            &d,
            SpectralRule::new(lam, 0.0, 3.0, &[]),
            &SpecFunAccuracy::default(),
        )
        .unwrap();
        let mass: f64 = d.mode_masses().iter().map(|m| m.1).sum();
        assert!((s.l2_norm() - mass.sqrt()).abs() < 1e-8 * mass.sqrt());
        assert_eq!(s.sobolev_norm(0.0), s.l2_norm());
    }
}
