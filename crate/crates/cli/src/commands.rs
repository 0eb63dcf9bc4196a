use std::path::Path;

use clap::{Args, ValueEnum};
use conekernel::cone::ConePoint;
use conekernel::estimates::{
    b_integral_bounds, dispersive_scan_schrodinger, heat_gaussian_scan, wave_dispersive_scan, AdmissiblePair,
    InitialDatum, SchrodingerWorkspace, StrichartzGrid, StrichartzReport, WaveWorkspace, SPECTRAL_TOL,
};
use conekernel::propagator::{schrodinger_closed, schrodinger_series, SeriesTruncation};
use conekernel::selftest::{run_criterion, SelftestOptions, CRITERIA};
use conekernel::spectral::{
    resolvent_kernel, spectral_measure_closed, spectral_measure_series, spectral_truncation, stone_density, LPWindow,
    ResolventSign, SpectralNormalization,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{json_record, num, CsvTable, Provenance, Sink};
use crate::CliError;

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (r, th) = s
        .split_once(',')
        .ok_or_else(|| format!("expected r,theta, got {s:?}"))?;
    let r = r.trim().parse::<f64>().map_err(|e| format!("bad radius {r:?}: {e}"))?;
    let th = th.trim().parse::<f64>().map_err(|e| format!("bad angle {th:?}: {e}"))?;
    Ok((r, th))
}

fn cone_point(cfg: &RunConfig, p: (f64, f64)) -> Result<ConePoint, CliError> {
    Ok(ConePoint::new(&cfg.params()?, p.0, p.1)?)
}

fn complex_cols(v: Complex64) -> [String; 3] {
    [num(v.re), num(v.im), num(v.norm())]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Both,
    Closed,
    Series,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Time; repeat for several.
    #[arg(long = "t", required = true, allow_hyphen_values = true)]
    times: Vec<f64>,
    /// First point as r,theta.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    x: (f64, f64),
    /// Second point as r,theta.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    y: (f64, f64),
    #[arg(long, value_enum, default_value = "both")]
    route: Route,
}

const KERNEL_COLUMNS: [&str; 11] = [
    "t",
    "x_r",
    "x_theta",
    "y_r",
    "y_theta",
    "route",
    "k_max",
    "re",
    "im",
    "abs",
    "err_estimate",
];

pub fn kernel(cfg: &RunConfig, a: &KernelArgs, out: Option<&Path>) -> Result<(), CliError> {
    let params = cfg.params()?;
    let opts = cfg.kernel_options();
    let (x, y) = (cone_point(cfg, a.x)?, cone_point(cfg, a.y)?);
    let prov = Provenance::new(cfg);
    let mut sink = Sink::open(out)?;
    let mut table = CsvTable::new(&mut sink, &prov, &KERNEL_COLUMNS)?;
    let mut unconverged = Vec::new();
    for &t in &a.times {
        let base = [num(t), num(x.r), num(x.theta), num(y.r), num(y.theta)];
        if a.route != Route::Series {
            let k = schrodinger_closed(&params, t, &x, &y, &opts)?;
            if !k.converged {
                unconverged.push(format!("closed form at t = {t}"));
            }
            let mut row: Vec<String> = base.to_vec();
            row.extend(["closed".into(), String::new()]);
            row.extend(complex_cols(k.value));
            row.push(num(k.abs_error_estimate));
            table.row(&row)?;
        }
        if a.route != Route::Closed {
            let tr = SeriesTruncation::for_argument(&params, x.r * y.r / (2.0 * t.abs()));
            let (k, tr) = schrodinger_series(&params, &tr, t, &x, &y, &opts.specfun)?;
            let mut row: Vec<String> = base.to_vec();
            row.extend(["series".into(), tr.k_max.to_string()]);
            row.extend(complex_cols(k.value));
            row.push(num(k.abs_error_estimate));
            table.row(&row)?;
        }
    }
    sink.finish()?;
    if unconverged.is_empty() {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "not converged: {}",
            unconverged.join("; ")
        )))
    }
}

pub fn compare(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let params = cfg.params()?;
    let opts = cfg.kernel_options();
    let c = &cfg.compare;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let prov = Provenance::new(cfg);
    let mut sink = Sink::open(out)?;
    let mut table = CsvTable::new(
        &mut sink,
        &prov,
        &[
            "sample",
            "t",
            "x_r",
            "x_theta",
            "y_r",
            "y_theta",
            "k_max",
            "closed_re",
            "closed_im",
            "series_re",
            "series_im",
            "abs_diff",
            "bound",
        ],
    )?;
    let mut worst_diff = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for i in 0..c.samples {
        let mut t = rng.random_range(c.t_min..=c.t_max);
        if rng.random_bool(0.5) {
            t = -t;
        }
        let x = ConePoint::new(
            &params,
            rng.random_range(c.r_min..=c.r_max),
            rng.random_range(0.0..params.circumference()),
        )?;
        let y = ConePoint::new(
            &params,
            rng.random_range(c.r_min..=c.r_max),
            rng.random_range(0.0..params.circumference()),
        )?;
        let closed = schrodinger_closed(&params, t, &x, &y, &opts)?;
        let tr = SeriesTruncation::for_argument(&params, x.r * y.r / (2.0 * t.abs()));
        let (series, tr) = schrodinger_series(&params, &tr, t, &x, &y, &opts.specfun)?;
        let diff = (closed.value - series.value).norm();
        let bound = 1e-5 * (1.0 + 1.0 / t.abs());
        worst_diff = worst_diff.max(diff);
        worst_ratio = worst_ratio.max(diff / bound);
        table.row(&[
            i.to_string(),
            num(t),
            num(x.r),
            num(x.theta),
            num(y.r),
            num(y.theta),
            tr.k_max.to_string(),
            num(closed.value.re),
            num(closed.value.im),
            num(series.value.re),
            num(series.value.im),
            num(diff),
            num(bound),
        ])?;
    }
    sink.finish()?;
    eprintln!(
        "max |closed - series| = {worst_diff:.3e}; max ratio to 1e-5(1+1/|t|) = {worst_ratio:.3e} over {} samples",
        c.samples
    );
    if worst_ratio <= 1.0 {
        Ok(())
    } else {
        Err(CliError::NonConvergence(
            "closed form and series disagree beyond tolerance".into(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Both,
    Incoming,
    Outgoing,
}

#[derive(Debug, Args)]
pub struct ResolventArgs {
    /// Spectral parameter λ > 0; repeat for several.
    #[arg(long = "lambda", required = true)]
    lambdas: Vec<f64>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    x: (f64, f64),
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    y: (f64, f64),
    #[arg(long, value_enum, default_value = "both")]
    sign: SignArg,
}

pub fn resolvent(cfg: &RunConfig, a: &ResolventArgs, out: Option<&Path>) -> Result<(), CliError> {
    let params = cfg.params()?;
    let opts = cfg.kernel_options();
    let (x, y) = (cone_point(cfg, a.x)?, cone_point(cfg, a.y)?);
    let signs: Vec<ResolventSign> = match a.sign {
        SignArg::Both => vec![ResolventSign::Incoming, ResolventSign::Outgoing],
        SignArg::Incoming => vec![ResolventSign::Incoming],
        SignArg::Outgoing => vec![ResolventSign::Outgoing],
    };
    let prov = Provenance::new(cfg);
    let mut sink = Sink::open(out)?;
    let mut table = CsvTable::new(
        &mut sink,
        &prov,
        &[
            "lambda",
            "x_r",
            "x_theta",
            "y_r",
            "y_theta",
            "sign",
            "re",
            "im",
            "abs",
            "err_estimate",
        ],
    )?;
    let mut unconverged = 0;
    for &lambda in &a.lambdas {
        for &s in &signs {
            let k = resolvent_kernel(&params, s, lambda, &x, &y, &opts)?;
            unconverged += usize::from(!k.converged);
            let label = match s {
                ResolventSign::Incoming => "incoming",
                ResolventSign::Outgoing => "outgoing",
            };
            let mut row = vec![
                num(lambda),
                num(x.r),
                num(x.theta),
                num(y.r),
                num(y.theta),
                label.into(),
            ];
            row.extend(complex_cols(k.value));
            row.push(num(k.abs_error_estimate));
            table.row(&row)?;
        }
    }
    sink.finish()?;
    if unconverged == 0 {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "{unconverged} resolvent evaluations did not converge"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DensityRoute {
    All,
    Closed,
    Series,
    Stone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Derived,
    Printed,
}

#[derive(Debug, Args)]
pub struct SpecmeasureArgs {
    /// Spectral parameter λ > 0; repeat for several.
    #[arg(long = "lambda", required = true)]
    lambdas: Vec<f64>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    x: (f64, f64),
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    y: (f64, f64),
    #[arg(long, value_enum, default_value = "all")]
    route: DensityRoute,
    /// Prefactor of the diffractive term in the closed form.
    #[arg(long, value_enum, default_value = "derived")]
    normalization: NormalizationArg,
}

pub fn specmeasure(cfg: &RunConfig, a: &SpecmeasureArgs, out: Option<&Path>) -> Result<(), CliError> {
    let params = cfg.params()?;
    let opts = cfg.kernel_options();
    let (x, y) = (cone_point(cfg, a.x)?, cone_point(cfg, a.y)?);
    let norm = match a.normalization {
        NormalizationArg::Derived => SpectralNormalization::Derived,
        NormalizationArg::Printed => SpectralNormalization::Printed,
    };
    let prov = Provenance::new(cfg);
    let mut sink = Sink::open(out)?;
    let mut table = CsvTable::new(
        &mut sink,
        &prov,
        &[
            "lambda",
            "x_r",
            "x_theta",
            "y_r",
            "y_theta",
            "route",
            "re",
            "im",
            "abs",
            "err_estimate",
        ],
    )?;
    let mut unconverged = 0;
    for &lambda in &a.lambdas {
        let mut samples = Vec::new();
        if matches!(a.route, DensityRoute::All | DensityRoute::Closed) {
            samples.push(("closed", spectral_measure_closed(&params, lambda, &x, &y, &opts, norm)?));
        }
        if matches!(a.route, DensityRoute::All | DensityRoute::Series) {
            let tr = spectral_truncation(&params, lambda, &x, &y);
            samples.push((
                "series",
                spectral_measure_series(&params, &tr, lambda, &x, &y, &opts.specfun)?.0,
            ));
        }
        if matches!(a.route, DensityRoute::All | DensityRoute::Stone) {
            samples.push(("stone", stone_density(&params, lambda, &x, &y, &opts)?));
        }
        for (label, s) in samples {
            unconverged += usize::from(!s.converged);
            let mut row = vec![
                num(lambda),
                num(x.r),
                num(x.theta),
                num(y.r),
                num(y.theta),
                label.into(),
            ];
            row.extend(complex_cols(s.density));
            row.push(num(s.abs_error_estimate));
            table.row(&row)?;
        }
    }
    sink.finish()?;
    if unconverged == 0 {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "{unconverged} density evaluations did not converge"
        )))
    }
}

fn emit_report<T: Serialize>(
    cfg: &RunConfig,
    kind: &str,
    records: &[T],
    converged: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let prov = Provenance::new(cfg);
    let mut sink = Sink::open(out)?;
    for r in records {
        json_record(&mut sink, &prov, kind, r)?;
    }
    sink.finish()?;
    if converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "{kind} did not converge; see the violations field"
        )))
    }
}

pub fn dispersive(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let r = dispersive_scan_schrodinger(&cfg.params()?, cfg.cone.variant, &cfg.scan, &cfg.kernel_options())?;
    let ok = r.converged;
    emit_report(cfg, "scan_report", &[r], ok, out)
}

pub fn heat_scan(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let r = heat_gaussian_scan(&cfg.params()?, &cfg.scan, &cfg.kernel_options())?;
    let ok = r.converged;
    emit_report(cfg, "scan_report", &[r], ok, out)
}

#[derive(Debug, Args)]
pub struct WaveArgs {
    /// Use the smooth partition of unity instead of sharp dyadic windows.
    #[arg(long)]
    smooth: bool,
}

pub fn wave_dispersive(cfg: &RunConfig, a: &WaveArgs, out: Option<&Path>) -> Result<(), CliError> {
    let windows: Vec<LPWindow> = (cfg.wave.j_min..=cfg.wave.j_max)
        .map(|j| {
            if a.smooth {
                LPWindow::smooth(j)
            } else {
                LPWindow::new(j)
            }
        })
        .collect();
    let r = wave_dispersive_scan(&cfg.params()?, &windows, &cfg.wave.grid, &cfg.kernel_options())?;
    let ok = r.converged;
    emit_report(cfg, "scan_report", &[r], ok, out)
}

#[derive(Debug, Args)]
pub struct BBoundsArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long = "theta-p", default_value_t = 0.0, allow_hyphen_values = true)]
    theta_p: f64,
}

pub fn b_bounds(cfg: &RunConfig, a: &BBoundsArgs, out: Option<&Path>) -> Result<(), CliError> {
    let r = b_integral_bounds(&cfg.params()?, cfg.cone.variant, a.theta, a.theta_p, &cfg.quadrature)?;
    let ok = r.converged || r.components.iter().any(|c| c.value.is_none());
    emit_report(cfg, "b_bounds_report", &[r], ok, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Schrodinger,
    Wave,
}

#[derive(Debug, Args)]
pub struct StrichartzArgs {
    #[arg(long, value_enum, default_value = "schrodinger")]
    family: FamilyArg,
    /// Time exponent; `inf` for ∞.
    #[arg(long, default_value_t = 4.0)]
    q: f64,
    /// Space exponent; `inf` for ∞.
    #[arg(long, default_value_t = 4.0)]
    r: f64,
}

#[derive(Debug, Serialize)]
struct StrichartzSummary {
    samples: usize,
    max_quotient: f64,
    max_tail_fraction: f64,
}

pub fn strichartz(cfg: &RunConfig, a: &StrichartzArgs, out: Option<&Path>) -> Result<(), CliError> {
    let params = cfg.params()?;
    let s = &cfg.strichartz;
    let mut modes = s.modes.clone();
    modes.sort_unstable();
    modes.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let acc = cfg.specfun;
    let mut reports: Vec<StrichartzReport> = Vec::with_capacity(s.samples);
    match a.family {
        FamilyArg::Schrodinger => {
            let pair = AdmissiblePair::schrodinger(a.q, a.r)?;
            let grid = StrichartzGrid {
                refinement: s.refinement,
                ..StrichartzGrid::schrodinger()
            };
            let data: Vec<InitialDatum> = (0..s.samples).map(|_| InitialDatum::random(&mut rng, &modes)).collect();
            let lambda = data.iter().map(|d| d.lambda_cut(SPECTRAL_TOL)).fold(0.0, f64::max);
            let ws = SchrodingerWorkspace::new(&params, &modes, lambda, &grid, &acc)?;
            for d in &data {
                reports.push(ws.quotient(&pair, d)?);
            }
        }
        FamilyArg::Wave => {
            let pair = AdmissiblePair::wave(a.q, a.r)?;
            let grid = StrichartzGrid {
                refinement: s.refinement,
                ..StrichartzGrid::wave()
            };
            let data: Vec<(InitialDatum, InitialDatum)> = (0..s.samples)
                .map(|_| {
                    (
                        InitialDatum::random(&mut rng, &modes),
                        InitialDatum::random(&mut rng, &modes),
                    )
                })
                .collect();
            let lambda = data
                .iter()
                .map(|(f, g)| f.lambda_cut(SPECTRAL_TOL).max(g.lambda_cut(SPECTRAL_TOL)))
                .fold(0.0, f64::max);
            let ws = WaveWorkspace::new(&params, &modes, lambda, &grid, &acc)?;
            for (f, g) in &data {
                reports.push(ws.quotient(&pair, f, g)?);
            }
        }
    }
    let summary = StrichartzSummary {
        samples: reports.len(),
        max_quotient: reports.iter().map(|r| r.quotient).fold(0.0, f64::max),
        max_tail_fraction: reports.iter().map(|r| r.tail_fraction).fold(0.0, f64::max),
    };
    let prov = Provenance::new(cfg);
    let mut sink = Sink::open(out)?;
    for r in &reports {
        json_record(&mut sink, &prov, "strichartz_report", r)?;
    }
    json_record(&mut sink, &prov, "strichartz_summary", &summary)?;
    sink.finish()?;
    if summary.max_quotient.is_finite() {
        Ok(())
    } else {
        Err(CliError::NonConvergence("non-finite Strichartz quotient".into()))
    }
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Fewer samples and coarser grids.
    #[arg(long)]
    quick: bool,
    /// Run only these criteria.
    #[arg(long = "criterion")]
    criteria: Vec<u32>,
}

pub fn selftest(cfg: &RunConfig, a: &SelftestArgs, out: Option<&Path>) -> Result<(), CliError> {
    let opts = SelftestOptions {
        quick: a.quick || cfg.selftest.quick,
        ..cfg.selftest.clone()
    };
    let ids: Vec<u32> = if a.criteria.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        a.criteria.clone()
    };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(CliError::Validation(format!("no criterion {bad}")));
    }
    let mut sink = Sink::open(out)?;
    let mut failures = 0;
    for id in ids {
        let o = run_criterion(id, &opts);
        sink.text(&o.line())?;
        failures += usize::from(!o.acceptable());
    }
    sink.finish()?;
    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!("{failures} criteria failed")))
    }
}
