//! Acceptance suite: one outcome per criterion, shared by the `selftest`
//! command and the `acceptance` test target.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{BVariant, ConeParams, ConePoint, Gauge};
use crate::estimates::{
    b_integral_bounds, default_windows, dispersive_scan_schrodinger, mass_conservation, wave_decay_fit,
    wave_dispersive_scan, wave_energy, AdmissiblePair, InitialDatum, ScanGrid, SchrodingerWorkspace, StrichartzGrid,
    WaveWorkspace, SPECTRAL_TOL,
};
use crate::propagator::{mode_kernel, schrodinger_closed, schrodinger_series, KernelOptions, SeriesTruncation};
use crate::quadrature::{
    geometric_schedule, integrate_oscillatory_regularized, integrate_with_envelope, QuadratureSpec,
};
use crate::specfun::{bessel_j, SpecFunAccuracy};
use crate::spectral::{
    spectral_measure_closed, spectral_measure_series, spectral_truncation, stone_density, LPWindow,
    SpectralNormalization,
};

/// Flux configurations used by the oracle and scan criteria.
pub const FLUX_CONFIGS: [(f64, f64); 4] = [(1.0, 0.3), (1.0, 0.5), (2.0, 0.25), (0.5, 0.6)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelftestOptions {
    /// Fewer samples and coarser grids; for smoke tests only.
    pub quick: bool,
    pub seed: u64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            quick: false,
            seed: 20240611,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    /// Set when the criterion cannot hold as stated; the reason is given.
    pub expected_failure: Option<String>,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{status} [{:>2}] {}: {} ({:.1} s)",
            self.id, self.title, self.detail, self.seconds
        );
        if let (false, Some(reason)) = (self.passed, &self.expected_failure) {
            s.push_str(&format!(" [expected: {reason}]"));
        }
        s
    }

    /// Passed, or failed only for a documented reason.
    pub fn acceptable(&self) -> bool {
        self.passed || self.expected_failure.is_some()
    }
}

pub const CRITERIA: [(u32, &str); 10] = [
    (1, "free reduction"),
    (2, "oracle equivalence"),
    (3, "Weber identity"),
    (4, "dispersive bound"),
    (5, "B-integral bounds"),
    (6, "Stone consistency"),
    (7, "wave localized dispersive"),
    (8, "conservation laws"),
    (9, "Strichartz sampling"),
    (10, "symmetries"),
];

pub fn run_all(opts: &SelftestOptions) -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|&(id, _)| run_criterion(id, opts)).collect()
}

pub fn run_criterion(id: u32, opts: &SelftestOptions) -> CriterionOutcome {
    let title = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map_or("unknown criterion", |c| c.1)
        .to_string();
    let start = Instant::now();
    let result = match id {
        1 => free_reduction(opts),
        2 => oracle_equivalence(opts),
        3 => weber_identity(opts),
        4 => dispersive_bound(opts),
        5 => b_bounds(opts),
        6 => stone_consistency(opts),
        7 => wave_dispersive(opts),
        8 => conservation(opts),
        9 => strichartz_sampling(opts),
        10 => symmetries(opts),
        _ => Err(format!("no criterion {id}")),
    };
    let (passed, detail, expected_failure) = match result {
        Ok(c) => (c.passed, c.detail, c.expected_failure),
        Err(e) => (false, format!("error: {e}"), None),
    };
    CriterionOutcome {
        id,
        title,
        passed,
        expected_failure,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

struct Check {
    passed: bool,
    detail: String,
    expected_failure: Option<String>,
}

impl Check {
    fn new(passed: bool, detail: String) -> Self {
        Self {
            passed,
            detail,
            expected_failure: None,
        }
    }
}

type CheckResult = Result<Check, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn point(p: &ConeParams, r: f64, theta: f64) -> Result<ConePoint, String> {
    ConePoint::new(p, r, theta).map_err(err)
}

fn random_point<R: Rng>(rng: &mut R, p: &ConeParams) -> Result<ConePoint, String> {
    let r = rng.random_range(0.2..3.0);
    let theta = rng.random_range(0.0..p.circumference());
    point(p, r, theta)
}

fn random_time<R: Rng>(rng: &mut R) -> f64 {
    let t = rng.random_range(0.2..3.0);
    if rng.random_bool(0.5) {
        t
    } else {
        -t
    }
}

fn free_kernel(t: f64, x: &ConePoint, y: &ConePoint) -> Complex64 {
    let d2 = x.r * x.r + y.r * y.r - 2.0 * x.r * y.r * (x.theta - y.theta).cos();
    (Complex64::i() * d2 / (4.0 * t)).exp() / (4.0 * PI * Complex64::new(0.0, t))
}

fn free_reduction(_: &SelftestOptions) -> CheckResult {
    let p = ConeParams::baseline(1.0).map_err(err)?;
    let opts = KernelOptions::default();
    let mut worst = 0.0f64;
    let mut nonzero_diffraction = 0;
    let mut count = 0;
    for i in 0..10 {
        let t = (if i % 2 == 0 { 1.0 } else { -1.0 }) * 0.05 * 1.8f64.powi(i);
        for j in 0..10 {
            let x = point(&p, 0.25 + 0.3 * j as f64, 0.61 * j as f64)?;
            let y = point(&p, 2.9 - 0.25 * j as f64, 2.0 * PI - 0.37 * (j * j) as f64 % (2.0 * PI))?;
            let k = schrodinger_closed(&p, t, &x, &y, &opts).map_err(err)?;
            let exact = free_kernel(t, &x, &y);
            worst = worst.max((k.value - exact).norm() / exact.norm());
            if k.diffractive_part != Some(Complex64::new(0.0, 0.0)) {
                nonzero_diffraction += 1;
            }
            count += 1;
        }
    }
    Ok(Check::new(
        worst <= 1e-8 && nonzero_diffraction == 0,
        format!("{count} points, max relative error {worst:.2e}, nonzero diffractive parts {nonzero_diffraction}"),
    ))
}

fn oracle_equivalence(opts: &SelftestOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = if opts.quick { 4 } else { 20 };
    let consistent = KernelOptions::default();
    let literal = KernelOptions {
        variant: BVariant::PaperLiteral,
        ..KernelOptions::default()
    };
    let acc = SpecFunAccuracy::default();
    let mut worst_ratio = 0.0f64;
    let mut literal_ok = true;
    let mut parts = Vec::new();
    for &(rho, alpha) in &FLUX_CONFIGS {
        let p = ConeParams::new(rho, alpha).map_err(err)?;
        let mut literal_failures = 0;
        let mut sin_phi2_nonzero = false;
        for _ in 0..n {
            let t = random_time(&mut rng);
            let x = random_point(&mut rng, &p)?;
            let y = random_point(&mut rng, &p)?;
            let tr = SeriesTruncation::for_argument(&p, x.r * y.r / (2.0 * t.abs()));
            let (s, _) = schrodinger_series(&p, &tr, t, &x, &y, &acc).map_err(err)?;
            let bound = 1e-5 * (1.0 + 1.0 / t.abs());
            let c = schrodinger_closed(&p, t, &x, &y, &consistent).map_err(err)?;
            worst_ratio = worst_ratio.max((c.value - s.value).norm() / bound);
            let l = schrodinger_closed(&p, t, &x, &y, &literal).map_err(err)?;
            if (l.value - s.value).norm() > bound {
                literal_failures += 1;
            }
            let phi2 = (-PI - (x.theta - y.theta)) / rho;
            sin_phi2_nonzero |= phi2.sin().abs() > 1e-6;
        }
        if sin_phi2_nonzero && literal_failures == 0 {
            literal_ok = false;
        }
        parts.push(format!("({rho},{alpha}): literal misses {literal_failures}/{n}"));
    }
    Ok(Check::new(
        worst_ratio <= 1.0 && literal_ok,
        format!("max |closed-series|/bound {worst_ratio:.2e}; {}", parts.join(", ")),
    ))
}

/// `∫₀^∞ e^{−(ε+it)s²} J_ν(rs) J_ν(r's) s ds` by adaptive quadrature, per ε,
/// then extrapolated to `ε = 0`.
fn weber_quadrature(nu: f64, t: f64, r: f64, rp: f64, acc: &SpecFunAccuracy) -> Result<Complex64, String> {
    let spec = QuadratureSpec {
        epsilon_schedule: geometric_schedule(0.1, 8),
        extrapolation_order: 6,
        ..QuadratureSpec::default()
    };
    let inner = QuadratureSpec::with_tolerances(1e-14, 1e-13);
    let res = integrate_oscillatory_regularized(
        |eps| {
            let p = Complex64::new(eps, t);
            integrate_with_envelope(
                |s| {
                    let a = bessel_j(nu, r * s, acc).unwrap_or(f64::NAN);
                    let b = bessel_j(nu, rp * s, acc).unwrap_or(f64::NAN);
                    (-p * s * s).exp() * (a * b * s)
                },
                0.0,
                1.0,
                |s| (-eps * s * s).exp() * (1.0 + s),
                &inner,
            )
        },
        &spec,
    )
    .map_err(err)?;
    Ok(res.value)
}

pub const WEBER_TUPLES: [(f64, f64, f64, f64); 10] = [
    (0.5, 0.7, 1.0, 1.2),
    (0.0, 0.3, 0.5, 0.8),
    (1.5, -0.6, 1.3, 0.9),
    (2.25, 1.0, 2.0, 1.5),
    (0.3, -0.25, 0.7, 0.4),
    (3.5, 0.5, 1.8, 2.2),
    (0.75, 1.5, 2.5, 0.6),
    (1.0, -1.2, 0.9, 0.9),
    (0.1, 0.4, 1.6, 2.0),
    (2.8, -0.8, 1.1, 2.6),
];

fn weber_identity(opts: &SelftestOptions) -> CheckResult {
    let acc = SpecFunAccuracy::default();
    let n = if opts.quick { 3 } else { WEBER_TUPLES.len() };
    let mut worst = 0.0f64;
    for &(nu, t, r, rp) in &WEBER_TUPLES[..n] {
        let q = weber_quadrature(nu, t, r, rp, &acc)?;
        let closed = mode_kernel(nu, t, r, rp, &acc).map_err(err)?;
        worst = worst.max((q - closed).norm());
    }
    Ok(Check::new(
        worst <= 1e-8,
        format!("{n} tuples, max |quadrature - closed| {worst:.2e}"),
    ))
}

fn dispersive_bound(_: &SelftestOptions) -> CheckResult {
    let opts = KernelOptions::default();
    let grid = ScanGrid::default();
    let base = dispersive_scan_schrodinger(
        &ConeParams::baseline(1.0).map_err(err)?,
        BVariant::default(),
        &grid,
        &opts,
    )
    .map_err(err)?;
    let base_err = (base.sup_statistic - 1.0 / (4.0 * PI)).abs();
    let mut ok = base_err <= 1e-6 && base.converged && base.violations.is_empty();
    let mut parts = vec![format!("baseline |sup - 1/4pi| {base_err:.1e}")];
    for &(rho, alpha) in &FLUX_CONFIGS {
        let p = ConeParams::new(rho, alpha).map_err(err)?;
        let r = dispersive_scan_schrodinger(&p, BVariant::default(), &grid, &opts).map_err(err)?;
        ok &= r.sup_statistic.is_finite() && r.converged && r.violations.is_empty();
        parts.push(format!(
            "({rho},{alpha}) sup {:.5} delta {:.1e}",
            r.sup_statistic, r.refinement_delta
        ));
    }
    Ok(Check::new(ok, parts.join(", ")))
}

fn b_bounds(opts: &SelftestOptions) -> CheckResult {
    let spec = QuadratureSpec::default();
    let fractions: &[f64] = if opts.quick {
        &[-0.9, 0.5]
    } else {
        &[-0.9, -0.5, 0.1, 0.5, 0.9]
    };
    let mut count = 0;
    let mut worst = 0.0f64;
    let mut all_converged = true;
    for rho in [0.5, 1.0, 2.0] {
        for &f in fractions {
            let p = ConeParams::new(rho, f / rho).map_err(err)?;
            for c in [0.3, 1.0, 2.5] {
                let r = b_integral_bounds(&p, BVariant::default(), c * rho, 0.0, &spec).map_err(err)?;
                all_converged &= r.converged;
                worst = worst.max(r.stability_delta / r.abs_b_integral.max(1.0));
                for comp in &r.components {
                    match comp.value {
                        Some(v) => worst = worst.max(comp.delta / v.abs().max(1.0)),
                        None => all_converged = false,
                    }
                }
                count += 1;
            }
        }
    }
    Ok(Check::new(
        all_converged && worst <= 1e-6,
        format!("{count} configurations, all converged: {all_converged}, max halving delta {worst:.1e}"),
    ))
}

fn stone_consistency(opts: &SelftestOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 6);
    let kopts = KernelOptions::default();
    let n = if opts.quick { 3 } else { 10 };
    let mut worst_twice = 0.0f64;
    let mut worst_once = 0.0f64;
    let mut worst_series = 0.0f64;
    for i in 0..n {
        let (rho, alpha) = FLUX_CONFIGS[i % FLUX_CONFIGS.len()];
        let p = ConeParams::new(rho, alpha).map_err(err)?;
        let lambda = rng.random_range(0.5..4.0);
        let x = point(&p, rng.random_range(0.3..2.5), rng.random_range(0.0..p.circumference()))?;
        let y = point(&p, rng.random_range(0.3..2.5), rng.random_range(0.0..p.circumference()))?;
        let stone = stone_density(&p, lambda, &x, &y, &kopts).map_err(err)?.density;
        let dens = spectral_measure_closed(&p, lambda, &x, &y, &kopts, SpectralNormalization::Derived)
            .map_err(err)?
            .density;
        let (series, _) = spectral_measure_series(
            &p,
            &spectral_truncation(&p, lambda, &x, &y),
            lambda,
            &x,
            &y,
            &kopts.specfun,
        )
        .map_err(err)?;
        let scale = dens.norm().max(1e-3);
        worst_series = worst_series.max((stone - series.density).norm() / scale);
        worst_twice = worst_twice.max((stone - 2.0 * dens).norm() / scale);
        worst_once = worst_once.max((stone - dens).norm() / scale);
    }
    let mut min_diag = f64::INFINITY;
    for i in 0..2 * n {
        let (rho, alpha) = FLUX_CONFIGS[i % FLUX_CONFIGS.len()];
        let p = ConeParams::new(rho, alpha).map_err(err)?;
        let lambda = rng.random_range(0.2..6.0);
        let x = point(&p, rng.random_range(0.2..3.0), rng.random_range(0.0..p.circumference()))?;
        let d = spectral_measure_closed(&p, lambda, &x, &x, &kopts, SpectralNormalization::Derived).map_err(err)?;
        min_diag = min_diag.min(d.density.re);
    }
    let tol = 1e-6;
    let diag_ok = min_diag >= -1e-8;
    let mut check = Check::new(
        worst_twice <= tol && diag_ok,
        format!(
            "max rel |stone - 2 density| {worst_twice:.2e}, max rel |stone - density| {worst_once:.2e} \
             (series density {worst_series:.2e}), \
             min diagonal density {min_diag:.3e}"
        ),
    );
    if worst_once <= tol && worst_series <= tol && diag_ok {
        check.expected_failure = Some("the Stone formula yields the density itself, not twice it".into());
    }
    Ok(check)
}

fn wave_dispersive(opts: &SelftestOptions) -> CheckResult {
    let p = ConeParams::new(1.0, 0.5).map_err(err)?;
    let kopts = KernelOptions::default();
    let (grid, windows) = if opts.quick {
        (
            ScanGrid {
                level: 0,
                ..ScanGrid::wave()
            },
            vec![LPWindow::new(-1), LPWindow::new(1)],
        )
    } else {
        (ScanGrid::wave(), default_windows())
    };
    let scan = wave_dispersive_scan(&p, &windows, &grid, &kopts).map_err(err)?;
    let spread = scan.extras.get("window_spread").copied().unwrap_or(f64::INFINITY);
    let (times, offsets): (Vec<f64>, Vec<f64>) = if opts.quick {
        (vec![10.0, 100.0], (-2..=2).map(|i| 0.25 * i as f64).collect())
    } else {
        (
            (0..=4).map(|i| 10f64.powf(1.0 + 0.25 * i as f64)).collect(),
            (-10..=10).map(|i| 0.1 * i as f64).collect(),
        )
    };
    let fit = wave_decay_fit(&p, LPWindow::new(2), &times, &[1.0, 2.0], &offsets, &kopts).map_err(err)?;
    let ok = scan.sup_statistic.is_finite() && scan.converged && spread <= 3.0 && (0.4..=0.6).contains(&fit.exponent);
    Ok(Check::new(
        ok,
        format!(
            "normalized sup {:.4} (delta {:.1e}), window spread {spread:.2}, decay exponent {:.3}",
            scan.sup_statistic, scan.refinement_delta, fit.exponent
        ),
    ))
}

fn conservation(opts: &SelftestOptions) -> CheckResult {
    let p = ConeParams::new(1.0, 0.5).map_err(err)?;
    let acc = SpecFunAccuracy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 8);
    let n = if opts.quick { 1 } else { 3 };
    let mut mass = 0.0f64;
    let mut energy = 0.0f64;
    let mut quotient = 0.0f64;
    let grid = StrichartzGrid::schrodinger();
    let pair = AdmissiblePair::schrodinger(f64::INFINITY, 2.0).map_err(err)?;
    for _ in 0..n {
        let d = InitialDatum::random(&mut rng, &[-1, 0, 1]);
        for s in mass_conservation(&p, &d, &[0.02, 0.05, 0.1], &acc).map_err(err)? {
            mass = mass.max(s.relative_defect);
        }
        let f = InitialDatum::random(&mut rng, &[0, 1]);
        let g = InitialDatum::random(&mut rng, &[-1, 0]);
        let e = wave_energy(&p, &f, &g, &[0.0, 0.5, 1.0, 2.0], &acc).map_err(err)?;
        for s in &e {
            energy = energy.max((s.energy - e[0].energy).abs() / e[0].energy);
        }
        let ws = SchrodingerWorkspace::new(&p, &[-1, 0, 1], d.lambda_cut(SPECTRAL_TOL), &grid, &acc).map_err(err)?;
        quotient = quotient.max((ws.quotient(&pair, &d).map_err(err)?.quotient - 1.0).abs());
    }
    Ok(Check::new(
        mass <= 1e-6 && energy <= 1e-5 && quotient <= 1e-6,
        format!("max mass defect {mass:.1e}, max energy drift {energy:.1e}, |(inf,2) quotient - 1| {quotient:.1e}"),
    ))
}

fn strichartz_sampling(opts: &SelftestOptions) -> CheckResult {
    let p = ConeParams::new(1.0, 0.5).map_err(err)?;
    let acc = SpecFunAccuracy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 9);
    let n = if opts.quick { 2 } else { 20 };
    let s_modes = [-1, 0, 1];
    let data: Vec<InitialDatum> = (0..n).map(|_| InitialDatum::random(&mut rng, &s_modes)).collect();
    let lambda = data.iter().map(|d| d.lambda_cut(SPECTRAL_TOL)).fold(0.0, f64::max);
    let pair = AdmissiblePair::schrodinger(4.0, 4.0).map_err(err)?;
    let mut s_max = [0.0f64; 2];
    let mut s_change = 0.0f64;
    let mut s_tail = 0.0f64;
    let base = StrichartzGrid::schrodinger();
    let fine = base.refined();
    let ws0 = SchrodingerWorkspace::new(&p, &s_modes, lambda, &base, &acc).map_err(err)?;
    let ws1 = SchrodingerWorkspace::new(&p, &s_modes, lambda, &fine, &acc).map_err(err)?;
    for d in &data {
        let a = ws0.quotient(&pair, d).map_err(err)?;
        let b = ws1.quotient(&pair, d).map_err(err)?;
        s_max[0] = s_max[0].max(a.quotient);
        s_max[1] = s_max[1].max(b.quotient);
        s_change = s_change.max((b.quotient - a.quotient).abs() / b.quotient);
        s_tail = s_tail.max(b.tail_fraction);
    }

    let w_modes = [0, 1];
    let wdata: Vec<(InitialDatum, InitialDatum)> = (0..n)
        .map(|_| {
            (
                InitialDatum::random(&mut rng, &w_modes),
                InitialDatum::random(&mut rng, &w_modes),
            )
        })
        .collect();
    let lambda = wdata
        .iter()
        .map(|(f, g)| f.lambda_cut(SPECTRAL_TOL).max(g.lambda_cut(SPECTRAL_TOL)))
        .fold(0.0, f64::max);
    let wpair = AdmissiblePair::wave(8.0, 4.0).map_err(err)?;
    let wbase = StrichartzGrid::wave();
    let wfine = wbase.refined();
    let wws0 = WaveWorkspace::new(&p, &w_modes, lambda, &wbase, &acc).map_err(err)?;
    let wws1 = WaveWorkspace::new(&p, &w_modes, lambda, &wfine, &acc).map_err(err)?;
    let mut w_max = [0.0f64; 2];
    let mut w_change = 0.0f64;
    let mut w_tail = 0.0f64;
    for (f, g) in &wdata {
        let a = wws0.quotient(&wpair, f, g).map_err(err)?;
        let b = wws1.quotient(&wpair, f, g).map_err(err)?;
        w_max[0] = w_max[0].max(a.quotient);
        w_max[1] = w_max[1].max(b.quotient);
        w_change = w_change.max((b.quotient - a.quotient).abs() / b.quotient);
        w_tail = w_tail.max(b.tail_fraction);
    }
    let ok = s_max[1].is_finite() && w_max[1].is_finite() && s_change < 0.1 && w_change < 0.1;
    Ok(Check::new(
        ok,
        format!(
            "{n} data; (4,4) max {:.4} (refined {:.4}, change {s_change:.1e}, tail {s_tail:.1e}); \
             wave (8,4) s=3/8 max {:.4} (refined {:.4}, change {w_change:.1e}, tail {w_tail:.1e})",
            s_max[0], s_max[1], w_max[0], w_max[1]
        ),
    ))
}

fn symmetries(opts: &SelftestOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 10);
    let kopts = KernelOptions::default();
    let n = if opts.quick { 2 } else { 5 };
    let mut adjoint = 0.0f64;
    let mut flux = 0.0f64;
    let mut gauge = 0.0f64;
    for &(rho, alpha) in &FLUX_CONFIGS {
        let p = ConeParams::new(rho, alpha).map_err(err)?;
        let m = ConeParams::new(rho, -alpha).map_err(err)?;
        let g = p
            .clone()
            .with_gauge(Gauge::Fourier {
                cos: vec![0.4, -0.1],
                sin: vec![0.25],
            })
            .map_err(err)?;
        for _ in 0..n {
            let t = random_time(&mut rng);
            let x = random_point(&mut rng, &p)?;
            let y = random_point(&mut rng, &p)?;
            let k = schrodinger_closed(&p, t, &x, &y, &kopts).map_err(err)?.value;
            let k_adj = schrodinger_closed(&p, -t, &y, &x, &kopts).map_err(err)?.value;
            adjoint = adjoint.max((k - k_adj.conj()).norm());
            let k_flux = schrodinger_closed(&m, -t, &x, &y, &kopts).map_err(err)?.value;
            flux = flux.max((k - k_flux.conj()).norm());
            let k_gauge = schrodinger_closed(&g, t, &x, &y, &kopts).map_err(err)?.value;
            gauge = gauge.max((k.norm() - k_gauge.norm()).abs());
        }
    }
    Ok(Check::new(
        adjoint <= 1e-8 && flux <= 1e-8 && gauge <= 1e-10,
        format!("adjoint {adjoint:.1e}, flux conjugation {flux:.1e}, gauge moduli {gauge:.1e}"),
    ))
}
