//! Mixed space-time norms and Littlewood-Paley square functions of evolved
//! data.
//!
//! For `|t| ≥ t_*` the Schrödinger flow is evaluated in the far-field form
//! `u_k(t, r) = e^{−iν_kπ sgn t/2}(2it)^{−1} e^{ir²/(4t)} g_k(r/(2|t|))` with
//! `g_k(ξ) = ∫ J_{ν_k}(ξr') e^{ir'²/(4t)} f_k(r') r' dr'`, which turns
//! `‖u(t)‖_{L^p}^p` into `(2|t|)^{2−p} ∫∫ |Σ_k e^{−iν_kπ sgn t/2} g_k φ_k|^p`.
//! Below `t_*` and for the wave equation the spectral form is used.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::evolution::{
    radial_rule, BesselTable, InitialDatum, SpectralDatum, SpectralRule, PROFILE_SUPPORT, SPECTRAL_TOL,
};
use super::EstimatesError;
use crate::cone::{AngularMode, ConeParams};
use crate::quadrature::CompositeRule;
use crate::specfun::SpecFunAccuracy;
use crate::spectral::LPWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFamily {
    Schrodinger,
    Wave,
}

/// Exponents `(q, r)`; `f64::INFINITY` stands for `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissiblePair {
    pub q: f64,
    pub r: f64,
    pub family: PairFamily,
    /// Regularity `2(1/2 − 1/r) − 1/q` for the wave family, 0 otherwise.
    pub s: f64,
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

impl AdmissiblePair {
    /// `2/q = 1 − 2/r`, `q > 2`.
    pub fn schrodinger(q: f64, r: f64) -> Result<Self, EstimatesError> {
        let ok = q > 2.0 && r >= 2.0 && (2.0 * inv(q) - (1.0 - 2.0 * inv(r))).abs() < 1e-12;
        if !ok {
            return Err(EstimatesError::Domain(format!(
                "({q}, {r}) is not a Schrödinger-admissible pair"
            )));
        }
        Ok(Self {
            q,
            r,
            family: PairFamily::Schrodinger,
            s: 0.0,
        })
    }

    /// `2/q ≤ 1/2 − 1/r`, `q > 2`, with `s = 2(1/2 − 1/r) − 1/q`.
    pub fn wave(q: f64, r: f64) -> Result<Self, EstimatesError> {
        let ok = q > 2.0 && r >= 2.0 && r.is_finite() && 2.0 * inv(q) <= 0.5 - inv(r) + 1e-12;
        if !ok {
            return Err(EstimatesError::Domain(format!(
                "({q}, {r}) is not a wave-admissible pair"
            )));
        }
        Ok(Self {
            q,
            r,
            family: PairFamily::Wave,
            s: 2.0 * (0.5 - inv(r)) - inv(q),
        })
    }

    /// Exponent `e` of the decay `‖u(t)‖_{L^r}^q ~ |t|^{−e}`.
    pub fn decay_power(&self) -> f64 {
        match self.family {
            PairFamily::Schrodinger => self.q * (1.0 - 2.0 * inv(self.r)),
            PairFamily::Wave => 0.5 * self.q * (1.0 - 2.0 * inv(self.r)),
        }
    }
}

/// Discretization of the space-time norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzGrid {
    /// Each level halves the time panels and the radial panels.
    pub refinement: u32,
    /// Truncation `T` of the time integral to `[−T, T]`.
    pub time_max: f64,
    /// Switch from the spectral to the far-field Schrödinger form.
    pub small_time: f64,
    /// Relative size of the reported tail that is acceptable.
    pub tail_target: f64,
}

impl StrichartzGrid {
    pub fn schrodinger() -> Self {
        Self {
            refinement: 0,
            time_max: 1e3,
            small_time: 0.05,
            tail_target: 0.01,
        }
    }

    pub fn wave() -> Self {
        Self {
            refinement: 0,
            time_max: 12.0,
            small_time: 0.0,
            tail_target: 0.01,
        }
    }

    pub fn refined(&self) -> Self {
        Self {
            refinement: self.refinement + 1,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzReport {
    pub pair: AdmissiblePair,
    pub quotient: f64,
    /// `‖u‖_{L^q_t L^r_x([−T, T])}`.
    pub numerator: f64,
    pub denominator: f64,
    pub time_max: f64,
    /// Estimate of `∫_{|t|>T} ‖u(t)‖_{L^r}^q dt` from the decay rate,
    /// `‖u(±T)‖^q·T/(e − 1)`.
    pub tail_estimate: f64,
    /// `(1 + tail/∫_{−T}^{T})^{1/q} − 1`.
    pub tail_fraction: f64,
    pub time_nodes: usize,
    pub refinement: u32,
}

/// Angular samples `φ_k(θ_m)` on a uniform grid, exact for `|u|^p` with even
/// `p` up to the given degree.
struct AngularGrid {
    weight: f64,
    phis: Vec<Vec<Complex64>>,
}

impl AngularGrid {
    fn new(params: &ConeParams, ks: &[i64], refinement: u32) -> Self {
        let span = ks.iter().max().unwrap_or(&0) - ks.iter().min().unwrap_or(&0);
        let n = ((4 * span + 8) as usize) << refinement;
        let period = params.circumference();
        let phis = ks
            .iter()
            .map(|&k| {
                let mode = AngularMode::new(params, k);
                (0..n)
                    .map(|m| mode.eigenfunction(params, period * m as f64 / n as f64))
                    .collect()
            })
            .collect();
        Self {
            weight: period / n as f64,
            phis,
        }
    }

    /// `∫∫|Σ_k u_k(r) φ_k(θ)|^p μ(dr) dθ`, or the sup when `p = ∞`.
    fn lp_power(&self, radial: &[Vec<Complex64>], measure: &[f64], p: f64) -> f64 {
        let n = self.phis.first().map_or(0, |v| v.len());
        let mut total = 0.0f64;
        for (j, &mu) in measure.iter().enumerate() {
            for m in 0..n {
                let v: Complex64 = radial.iter().zip(&self.phis).map(|(u, ph)| u[j] * ph[m]).sum();
                let a = v.norm();
                if p.is_infinite() {
                    total = total.max(a);
                } else {
                    total += mu * self.weight * a.powf(p);
                }
            }
        }
        total
    }
}

/// `Σ_i w_i g(t_i)` over `[0, T]`: Gauss-Legendre on `[0, t_*]` and in `ln t`
/// on `[t_*, T]`, or uniform panels when `t_* = 0`.
fn time_rule(grid: &StrichartzGrid, log_panel: f64, linear_panel: f64) -> Vec<(f64, f64)> {
    let scale = f64::from(1u32 << grid.refinement);
    let mut out = Vec::new();
    if grid.small_time > 0.0 {
        let small = CompositeRule::new(&[0.0, grid.small_time], grid.small_time / scale, 8);
        out.extend(small.nodes.iter().cloned().zip(small.weights.iter().cloned()));
        let logs = CompositeRule::new(&[grid.small_time.ln(), grid.time_max.ln()], log_panel / scale, 8);
        out.extend(
            logs.nodes
                .iter()
                .zip(&logs.weights)
                .map(|(&u, &w)| (u.exp(), w * u.exp())),
        );
    } else {
        let lin = CompositeRule::new(&[0.0, grid.time_max], linear_panel / scale, 8);
        out.extend(lin.nodes.iter().cloned().zip(lin.weights.iter().cloned()));
    }
    out
}

/// Bessel tables shared by all Schrödinger data on a fixed set of modes.
pub struct SchrodingerWorkspace {
    params: ConeParams,
    ks: Vec<i64>,
    grid: StrichartzGrid,
    rule: SpectralRule,
    /// Radial nodes for the spectral form, `r ≤ R(t_*)`.
    radial: CompositeRule,
    /// Source nodes on the profile support.
    source: CompositeRule,
    /// Far-field variable `ξ`.
    xi: CompositeRule,
    near: Vec<BesselTable>,
    far: Vec<BesselTable>,
    analysis: Vec<BesselTable>,
    angular: AngularGrid,
}

impl SchrodingerWorkspace {
    /// `lambda_max` must dominate the spectral cutoff of every datum used.
    pub fn new(
        params: &ConeParams,
        ks: &[i64],
        lambda_max: f64,
        grid: &StrichartzGrid,
        acc: &SpecFunAccuracy,
    ) -> Result<Self, EstimatesError> {
        params.validate()?;
        if !(grid.small_time > 0.0 && grid.time_max > grid.small_time) {
            return Err(EstimatesError::Domain("need 0 < small_time < time_max".into()));
        }
        let ts = grid.small_time;
        let r_near = PROFILE_SUPPORT.1 + 2.0 * ts * lambda_max + 1.0;
        let rule = SpectralRule::new(lambda_max, 2.0 * ts * lambda_max, r_near, &[]);
        let radial = radial_rule(r_near, lambda_max, grid.refinement);
        let xi_max = lambda_max + PROFILE_SUPPORT.1 / (2.0 * ts) + 1.0;
        let xi = CompositeRule::new(&[0.0, xi_max], 0.5 / f64::from(1u32 << grid.refinement), 8);
        let source_rate = xi_max + PROFILE_SUPPORT.1 / (2.0 * ts);
        let source = CompositeRule::new(&[PROFILE_SUPPORT.0, PROFILE_SUPPORT.1], 8.0 / source_rate, 16);
        let mut near = Vec::new();
        let mut far = Vec::new();
        let mut analysis = Vec::new();
        for &k in ks {
            let nu = AngularMode::new(params, k).nu;
            near.push(BesselTable::new(nu, &rule.rule.nodes, &radial.nodes, acc)?);
            far.push(BesselTable::new(nu, &xi.nodes, &source.nodes, acc)?);
            analysis.push(BesselTable::new(nu, &rule.rule.nodes, &source.nodes, acc)?);
        }
        Ok(Self {
            params: params.clone(),
            ks: ks.to_vec(),
            grid: grid.clone(),
            rule,
            radial,
            source,
            xi,
            near,
            far,
            analysis,
            angular: AngularGrid::new(params, ks, grid.refinement),
        })
    }

    fn profiles(&self, datum: &InitialDatum) -> Result<Vec<Vec<Complex64>>, EstimatesError> {
        datum.validate()?;
        if datum.lambda_cut(SPECTRAL_TOL) > self.rule.lambda_max * (1.0 + 1e-12) {
            return Err(EstimatesError::Domain("datum is not resolved by the workspace".into()));
        }
        self.ks
            .iter()
            .map(|&k| {
                let c = datum.components.iter().find(|c| c.k == k);
                Ok(self
                    .source
                    .nodes
                    .iter()
                    .zip(&self.source.weights)
                    .map(|(&r, &w)| c.map_or(Complex64::new(0.0, 0.0), |c| c.profile.value(r) * (w * r)))
                    .collect())
            })
            .collect::<Result<_, EstimatesError>>()
            .and_then(|v: Vec<Vec<Complex64>>| {
                if datum.components.iter().any(|c| !self.ks.contains(&c.k)) {
                    Err(EstimatesError::Domain("datum uses a mode outside the workspace".into()))
                } else {
                    Ok(v)
                }
            })
    }

    /// `‖u(t)‖_{L^p}^p` (or `‖u(t)‖_{L^∞}` for `p = ∞`).
    fn lp_at(&self, weighted: &[Vec<Complex64>], fhat: &[Vec<Complex64>], t: f64, p: f64) -> f64 {
        if t.abs() < self.grid.small_time {
            let radial: Vec<Vec<Complex64>> = fhat
                .iter()
                .zip(&self.near)
                .map(|(f, table)| {
                    let c: Vec<Complex64> = self
                        .rule
                        .rule
                        .nodes
                        .iter()
                        .zip(&self.rule.rule.weights)
                        .zip(f)
                        .map(|((&l, &w), f)| f * Complex64::from_polar(w * l, -t * l * l))
                        .collect();
                    table.contract_rows(&c)
                })
                .collect();
            let measure: Vec<f64> = self
                .radial
                .nodes
                .iter()
                .zip(&self.radial.weights)
                .map(|(r, w)| r * w)
                .collect();
            return self.angular.lp_power(&radial, &measure, p);
        }
        let sgn = t.signum();
        let radial: Vec<Vec<Complex64>> = weighted
            .iter()
            .zip(&self.far)
            .zip(&self.ks)
            .map(|((f, table), &k)| {
                let nu = AngularMode::new(&self.params, k).nu;
                let c: Vec<Complex64> = self
                    .source
                    .nodes
                    .iter()
                    .zip(f)
                    .map(|(&r, f)| f * Complex64::from_polar(1.0, r * r / (4.0 * t)))
                    .collect();
                let phase = Complex64::from_polar(1.0, -nu * PI * sgn / 2.0);
                table.contract_cols(&c).into_iter().map(|g| g * phase).collect()
            })
            .collect();
        let measure: Vec<f64> = self.xi.nodes.iter().zip(&self.xi.weights).map(|(x, w)| x * w).collect();
        let v = self.angular.lp_power(&radial, &measure, p);
        let scale = 2.0 * t.abs();
        if p.is_infinite() {
            v / scale
        } else {
            v * scale.powf(2.0 - p)
        }
    }

    /// `‖u‖_{L^q_t L^r_x} / ‖u_0‖_{L²}` for `u = e^{−itH}u_0`.
    pub fn quotient(&self, pair: &AdmissiblePair, datum: &InitialDatum) -> Result<StrichartzReport, EstimatesError> {
        if pair.family != PairFamily::Schrodinger {
            return Err(EstimatesError::Domain("expected a Schrödinger pair".into()));
        }
        let weighted = self.profiles(datum)?;
        let fhat: Vec<Vec<Complex64>> = weighted
            .iter()
            .zip(&self.analysis)
            .map(|(f, table)| table.contract_cols(f))
            .collect();
        let denominator = datum.mode_masses().iter().map(|m| m.1).sum::<f64>().sqrt();
        let times = time_rule(&self.grid, 1.0, 1.0);
        let p = pair.r;
        let norm_at = |t: f64| -> f64 {
            let v = self.lp_at(&weighted, &fhat, t, p);
            if p.is_infinite() {
                v
            } else {
                v.powf(1.0 / p)
            }
        };
        let mut report = StrichartzReport {
            pair: *pair,
            quotient: 0.0,
            numerator: 0.0,
            denominator,
            time_max: self.grid.time_max,
            tail_estimate: 0.0,
            tail_fraction: 0.0,
            time_nodes: 2 * times.len() + 1,
            refinement: self.grid.refinement,
        };
        if pair.q.is_infinite() {
            let mut sup = norm_at(0.0);
            for &(t, _) in &times {
                sup = sup.max(norm_at(t)).max(norm_at(-t));
            }
            report.numerator = sup;
        } else {
            let q = pair.q;
            let mut integral = 0.0;
            for &(t, w) in &times {
                integral += w * (norm_at(t).powf(q) + norm_at(-t).powf(q));
            }
            let e = pair.decay_power();
            let big = self.grid.time_max;
            let tail = (norm_at(big).powf(q) + norm_at(-big).powf(q)) * big / (e - 1.0);
            report.numerator = integral.powf(1.0 / q);
            report.tail_estimate = tail;
            report.tail_fraction = (1.0 + tail / integral).powf(1.0 / q) - 1.0;
        }
        report.quotient = report.numerator / denominator;
        Ok(report)
    }
}

/// Bessel tables shared by all wave data on a fixed set of modes.
pub struct WaveWorkspace {
    ks: Vec<i64>,
    grid: StrichartzGrid,
    rule: SpectralRule,
    radial: CompositeRule,
    tables: Vec<BesselTable>,
    angular: AngularGrid,
    params: ConeParams,
    acc: SpecFunAccuracy,
}

impl WaveWorkspace {
    pub fn new(
        params: &ConeParams,
        ks: &[i64],
        lambda_max: f64,
        grid: &StrichartzGrid,
        acc: &SpecFunAccuracy,
    ) -> Result<Self, EstimatesError> {
        params.validate()?;
        let r_max = PROFILE_SUPPORT.1 + grid.time_max + 1.0;
        let rule = SpectralRule::new(lambda_max, grid.time_max, r_max, &[]);
        let radial = radial_rule(r_max, lambda_max, grid.refinement);
        let tables = ks
            .iter()
            .map(|&k| BesselTable::new(AngularMode::new(params, k).nu, &rule.rule.nodes, &radial.nodes, acc))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            ks: ks.to_vec(),
            grid: grid.clone(),
            rule,
            radial,
            tables,
            angular: AngularGrid::new(params, ks, grid.refinement),
            params: params.clone(),
            acc: *acc,
        })
    }

    fn spectrum(&self, datum: &InitialDatum) -> Result<Vec<Vec<Complex64>>, EstimatesError> {
        let s = SpectralDatum::new(&self.params, datum, self.rule.clone(), &self.acc)?;
        let zeros = vec![Complex64::new(0.0, 0.0); self.rule.rule.len()];
        for m in &s.modes {
            if !self.ks.contains(&m.k) {
                return Err(EstimatesError::Domain("datum uses a mode outside the workspace".into()));
            }
        }
        Ok(self
            .ks
            .iter()
            .map(|k| {
                s.modes
                    .iter()
                    .find(|m| m.k == *k)
                    .map_or(zeros.clone(), |m| m.fhat.clone())
            })
            .collect())
    }

    /// `‖u‖_{L^q_t L^r_x} / (‖f‖_{Ḣ^s} + ‖g‖_{Ḣ^{s−1}})` for
    /// `u = cos(t√H)f + sin(t√H)/√H g`.
    pub fn quotient(
        &self,
        pair: &AdmissiblePair,
        f: &InitialDatum,
        g: &InitialDatum,
    ) -> Result<StrichartzReport, EstimatesError> {
        if pair.family != PairFamily::Wave {
            return Err(EstimatesError::Domain("expected a wave pair".into()));
        }
        let fhat = self.spectrum(f)?;
        let ghat = self.spectrum(g)?;
        let norm = |h: &[Vec<Complex64>], s: f64| -> f64 {
            h.iter()
                .map(|v| {
                    self.rule
                        .rule
                        .nodes
                        .iter()
                        .zip(&self.rule.rule.weights)
                        .zip(v)
                        .map(|((&l, &w), x)| w * l.powf(2.0 * s) * x.norm_sqr() * l)
                        .sum::<f64>()
                })
                .sum::<f64>()
                .sqrt()
        };
        let denominator = norm(&fhat, pair.s) + norm(&ghat, pair.s - 1.0);
        let p = pair.r;
        let norm_at = |t: f64| -> f64 {
            let reach = PROFILE_SUPPORT.1 + t.abs() + 1.0;
            let active = self.radial.nodes.partition_point(|&r| r <= reach);
            let radial: Vec<Vec<Complex64>> = (0..self.ks.len())
                .map(|i| {
                    let c: Vec<Complex64> = self
                        .rule
                        .rule
                        .nodes
                        .iter()
                        .zip(&self.rule.rule.weights)
                        .zip(fhat[i].iter().zip(&ghat[i]))
                        .map(|((&l, &w), (a, b))| (a * (t * l).cos() + b * ((t * l).sin() / l)) * (w * l))
                        .collect();
                    let mut out = vec![Complex64::new(0.0, 0.0); active];
                    for (ci, c) in c.iter().enumerate() {
                        let row = &self.tables[i].row(ci)[..active];
                        for (o, &j) in out.iter_mut().zip(row) {
                            *o += c * j;
                        }
                    }
                    out
                })
                .collect();
            let measure: Vec<f64> = self.radial.nodes[..active]
                .iter()
                .zip(&self.radial.weights)
                .map(|(r, w)| r * w)
                .collect();
            let v = self.angular.lp_power(&radial, &measure, p);
            if p.is_infinite() {
                v
            } else {
                v.powf(1.0 / p)
            }
        };
        let times = time_rule(&self.grid, 1.0, 0.5);
        let q = pair.q;
        let mut report = StrichartzReport {
            pair: *pair,
            quotient: 0.0,
            numerator: 0.0,
            denominator,
            time_max: self.grid.time_max,
            tail_estimate: 0.0,
            tail_fraction: 0.0,
            time_nodes: 2 * times.len(),
            refinement: self.grid.refinement,
        };
        if q.is_infinite() {
            let mut sup = 0.0f64;
            for &(t, _) in &times {
                sup = sup.max(norm_at(t)).max(norm_at(-t));
            }
            report.numerator = sup;
        } else {
            let mut integral = 0.0;
            for &(t, w) in &times {
                integral += w * (norm_at(t).powf(q) + norm_at(-t).powf(q));
            }
            let big = self.grid.time_max;
            let tail = (norm_at(big).powf(q) + norm_at(-big).powf(q)) * big / (pair.decay_power() - 1.0);
            report.numerator = integral.powf(1.0 / q);
            report.tail_estimate = tail;
            report.tail_fraction = (1.0 + tail / integral).powf(1.0 / q) - 1.0;
        }
        report.quotient = report.numerator / denominator;
        Ok(report)
    }
}

/// Data for a single Strichartz quotient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrichartzData {
    Schrodinger { datum: InitialDatum },
    Wave { f: InitialDatum, g: InitialDatum },
}

fn modes_of(data: &[&InitialDatum]) -> Vec<i64> {
    let mut ks: Vec<i64> = data.iter().flat_map(|d| d.components.iter().map(|c| c.k)).collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// One quotient with a workspace built for the datum alone.
pub fn strichartz_quotient(
    params: &ConeParams,
    pair: &AdmissiblePair,
    data: &StrichartzData,
    grid: &StrichartzGrid,
    acc: &SpecFunAccuracy,
) -> Result<StrichartzReport, EstimatesError> {
    match (data, pair.family) {
        (StrichartzData::Schrodinger { datum }, PairFamily::Schrodinger) => {
            let ws = SchrodingerWorkspace::new(params, &modes_of(&[datum]), datum.lambda_cut(SPECTRAL_TOL), grid, acc)?;
            ws.quotient(pair, datum)
        }
        (StrichartzData::Wave { f, g }, PairFamily::Wave) => {
            let lambda = f.lambda_cut(SPECTRAL_TOL).max(g.lambda_cut(SPECTRAL_TOL));
            let ws = WaveWorkspace::new(params, &modes_of(&[f, g]), lambda, grid, acc)?;
            ws.quotient(pair, f, g)
        }
        _ => Err(EstimatesError::Domain("pair family does not match the data".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareFunctionReport {
    pub p: f64,
    /// `‖f‖_{L^p}`.
    pub f_norm: f64,
    /// `‖(Σ_j |φ_j(√H) f|²)^{1/2}‖_{L^p}`.
    pub square_norm: f64,
    /// `square_norm / f_norm`.
    pub ratio: f64,
}

/// Bessel tables for square functions of data on fixed modes, evaluated on
/// `r ≤ r_max`.
pub struct SquareFunctionWorkspace {
    ks: Vec<i64>,
    windows: Vec<LPWindow>,
    rule: SpectralRule,
    radial: CompositeRule,
    tables: Vec<BesselTable>,
    angular: AngularGrid,
}

impl SquareFunctionWorkspace {
    pub fn new(
        params: &ConeParams,
        ks: &[i64],
        windows: &[LPWindow],
        lambda_max: f64,
        r_max: f64,
        refinement: u32,
        acc: &SpecFunAccuracy,
    ) -> Result<Self, EstimatesError> {
        params.validate()?;
        let rule = SpectralRule::new(lambda_max, 0.0, r_max, &SpectralRule::window_breaks(windows));
        let radial = radial_rule(r_max, lambda_max, refinement);
        let tables = ks
            .iter()
            .map(|&k| BesselTable::new(AngularMode::new(params, k).nu, &rule.rule.nodes, &radial.nodes, acc))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            ks: ks.to_vec(),
            windows: windows.to_vec(),
            rule,
            radial,
            tables,
            angular: AngularGrid::new(params, ks, refinement),
        })
    }

    pub fn rule(&self) -> &SpectralRule {
        &self.rule
    }

    /// Spectral representation of a physical datum on this workspace's rule.
    pub fn spectral(
        &self,
        params: &ConeParams,
        datum: &InitialDatum,
        acc: &SpecFunAccuracy,
    ) -> Result<SpectralDatum, EstimatesError> {
        SpectralDatum::new(params, datum, self.rule.clone(), acc)
    }

    /// Both sides of the square-function inequality at exponent `p`. At
    /// `p = 2` they are computed spectrally; otherwise in physical space,
    /// with `f` synthesized from its spectrum on the same grid.
    pub fn check(&self, datum: &SpectralDatum, p: f64) -> Result<SquareFunctionReport, EstimatesError> {
        if datum.rule != self.rule {
            return Err(EstimatesError::Domain(
                "datum was built on a different spectral rule".into(),
            ));
        }
        if datum.modes.iter().any(|m| !self.ks.contains(&m.k)) {
            return Err(EstimatesError::Domain("datum uses a mode outside the workspace".into()));
        }
        if p == 2.0 {
            let f2 = datum.weighted_norm_sq(|_| 1.0);
            let s2: f64 = self
                .windows
                .iter()
                .map(|w| datum.weighted_norm_sq(|l| w.value(l).powi(2)))
                .sum();
            return Ok(SquareFunctionReport {
                p,
                f_norm: f2.sqrt(),
                square_norm: s2.sqrt(),
                ratio: (s2 / f2).sqrt(),
            });
        }
        let table_index = |k: i64| self.ks.iter().position(|&x| x == k).unwrap_or(0);
        let synth = |m: &dyn Fn(f64) -> f64| -> Vec<Vec<Complex64>> {
            self.ks
                .iter()
                .map(|&k| match datum.modes.iter().position(|mm| mm.k == k) {
                    Some(i) => {
                        let c = datum.coefficients(i, &|l| Complex64::new(m(l), 0.0));
                        self.tables[table_index(k)].contract_rows(&c)
                    }
                    None => vec![Complex64::new(0.0, 0.0); self.radial.len()],
                })
                .collect()
        };
        let measure: Vec<f64> = self
            .radial
            .nodes
            .iter()
            .zip(&self.radial.weights)
            .map(|(r, w)| r * w)
            .collect();
        let f_norm = self.angular.lp_power(&synth(&|_| 1.0), &measure, p).powf(1.0 / p);
        let n_theta = self.angular.phis.first().map_or(0, |v| v.len());
        let mut sq = vec![0.0f64; self.radial.len() * n_theta];
        for w in &self.windows {
            let parts = synth(&|l| w.value(l));
            for j in 0..self.radial.len() {
                for m in 0..n_theta {
                    let v: Complex64 = parts.iter().zip(&self.angular.phis).map(|(u, ph)| u[j] * ph[m]).sum();
                    sq[j * n_theta + m] += v.norm_sqr();
                }
            }
        }
        let mut total = 0.0;
        for (j, &mu) in measure.iter().enumerate() {
            for m in 0..n_theta {
                total += mu * self.angular.weight * sq[j * n_theta + m].powf(0.5 * p);
            }
        }
        let square_norm = total.powf(1.0 / p);
        Ok(SquareFunctionReport {
            p,
            f_norm,
            square_norm,
            ratio: square_norm / f_norm,
        })
    }
}

/// Dyadic windows covering `[2^{j_min − 1}, 2^{j_max}]`.
pub fn windows_covering(j_min: i32, j_max: i32) -> Vec<LPWindow> {
    (j_min..=j_max).map(LPWindow::new).collect()
}

/// Square-function check with a workspace built for this datum alone.
pub fn square_function_check(
    params: &ConeParams,
    datum: &InitialDatum,
    windows: &[LPWindow],
    p: f64,
    r_max: f64,
    acc: &SpecFunAccuracy,
) -> Result<SquareFunctionReport, EstimatesError> {
    if !(p == 2.0 || p == 4.0) {
        return Err(EstimatesError::Domain(format!("p must be 2 or 4, got {p}")));
    }
    let lambda = datum.lambda_cut(SPECTRAL_TOL);
    let ks = modes_of(&[datum]);
    let ws = SquareFunctionWorkspace::new(params, &ks, windows, lambda, r_max, 0, acc)?;
    let s = ws.spectral(params, datum, acc)?;
    ws.check(&s, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Gauge;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> ConeParams {
        ConeParams::new(1.0, 0.5).unwrap()
    }

    fn datum(seed: u64, modes: &[i64]) -> InitialDatum {
        InitialDatum::random(&mut ChaCha8Rng::seed_from_u64(seed), modes)
    }

    fn acc() -> SpecFunAccuracy {
        SpecFunAccuracy::default()
    }

    #[test]
    fn admissibility() {
        assert!(AdmissiblePair::schrodinger(4.0, 4.0).is_ok());
        assert!(AdmissiblePair::schrodinger(f64::INFINITY, 2.0).is_ok());
        assert!(AdmissiblePair::schrodinger(2.0, f64::INFINITY).is_err());
        assert!(AdmissiblePair::schrodinger(4.0, 3.0).is_err());
        let w = AdmissiblePair::wave(8.0, 4.0).unwrap();
        assert!((w.s - 0.375).abs() < 1e-15);
        assert!(AdmissiblePair::wave(4.0, 4.0).is_err());
        assert!(AdmissiblePair::wave(2.0, 10.0).is_err());
        assert_eq!(AdmissiblePair::schrodinger(4.0, 4.0).unwrap().decay_power(), 2.0);
    }

    #[test]
    fn mass_pair_quotient_is_one() {
        let d = datum(11, &[-1, 0, 1]);
        let pair = AdmissiblePair::schrodinger(f64::INFINITY, 2.0).unwrap();
        let data = StrichartzData::Schrodinger { datum: d };
        let r = strichartz_quotient(&params(), &pair, &data, &StrichartzGrid::schrodinger(), &acc()).unwrap();
        assert!((r.quotient - 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn quotient_homogeneous_and_gauge_invariant() {
        let p = params();
        let d = datum(12, &[0, 1]);
        let grid = StrichartzGrid::schrodinger();
        let pair = AdmissiblePair::schrodinger(4.0, 4.0).unwrap();
        let ws = SchrodingerWorkspace::new(&p, &[0, 1], d.lambda_cut(SPECTRAL_TOL), &grid, &acc()).unwrap();
        let a = ws.quotient(&pair, &d).unwrap();
        let b = ws.quotient(&pair, &d.scaled(Complex64::new(3.0, -4.0))).unwrap();
        assert!((a.quotient - b.quotient).abs() <= 1e-10 * a.quotient);
        assert!(a.tail_fraction < grid.tail_target);
        let gauged = p
            .clone()
            .with_gauge(Gauge::Fourier {
                cos: vec![0.3],
                sin: vec![-0.2, 0.1],
            })
            .unwrap();
        let wg = SchrodingerWorkspace::new(&gauged, &[0, 1], d.lambda_cut(SPECTRAL_TOL), &grid, &acc()).unwrap();
        let c = wg.quotient(&pair, &d).unwrap();
        assert!((a.quotient - c.quotient).abs() <= 1e-10 * a.quotient);
    }

    #[test]
    fn wave_quotient_finite() {
        let p = params();
        let data = StrichartzData::Wave {
            f: datum(13, &[0, 1]),
            g: datum(14, &[0]),
        };
        let pair = AdmissiblePair::wave(8.0, 4.0).unwrap();
        let r = strichartz_quotient(&p, &pair, &data, &StrichartzGrid::wave(), &acc()).unwrap();
        assert!(r.quotient.is_finite() && r.quotient > 0.0);
        assert!(r.tail_fraction < 0.01, "{r:?}");
        let wrong = AdmissiblePair::schrodinger(4.0, 4.0).unwrap();
        assert!(strichartz_quotient(&p, &wrong, &data, &StrichartzGrid::wave(), &acc()).is_err());
    }

    #[test]
    fn square_function_plancherel() {
        let d = datum(15, &[-1, 0, 1]);
        let windows = windows_covering(-6, 7);
        let r = square_function_check(&params(), &d, &windows, 2.0, 3.0, &acc()).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-6, "{r:?}");
        assert!(square_function_check(&params(), &d, &windows, 3.0, 3.0, &acc()).is_err());
    }

    #[test]
    fn single_window_square_function_is_identity() {
        let p = params();
        let windows = windows_covering(-1, 3);
        let ws = SquareFunctionWorkspace::new(&p, &[1], &windows, 8.0, 4.0, 0, &acc()).unwrap();
        let bump = |l: f64| {
            let u = (l - 1.5) / 0.4;
            if u.abs() < 1.0 {
                Complex64::new((1.0 - 1.0 / (1.0 - u * u)).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        let s = SpectralDatum::from_spectrum(&p, 1, ws.rule().clone(), bump);
        for q in [2.0, 4.0] {
            let r = ws.check(&s, q).unwrap();
            assert!((r.ratio - 1.0).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn square_function_p4_bounded() {
        let d = datum(16, &[0, 1]);
        let r = square_function_check(&params(), &d, &windows_covering(-6, 7), 4.0, 6.0, &acc()).unwrap();
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
    }
}
