//! Measured errors and their estimates for every (method, step size) cell.

use std::path::{Path, PathBuf};

use oscerr::estimator::{block_envelope, detect_breakdown, envelope_fit, measure_global_error, ReferenceSpec};
use oscerr::rk::{builtin, Trajectory};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::estimate::{estimate_series, Route};
use crate::output::write_csv;
use crate::plot::{emit_plot, PlotStyle};
use crate::problem::Problem;

/// Width of the blocks compared when looking for the breakdown time.
const BLOCK: f64 = 10.0;
/// Breakdown is sought from here on, with this relative tolerance.
const BREAKDOWN_FROM: f64 = 100.0;
const BREAKDOWN_TOLERANCE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitSummary {
    pub amplitude: f64,
    pub exponent: f64,
    pub window: [f64; 2],
    pub peaks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellReport {
    pub method: String,
    pub h: f64,
    pub stride: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<Route>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate_csv: Option<PathBuf>,
    pub plots: Vec<PathBuf>,
    /// Envelope fit of the first error component.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    /// Start of the persistent disagreement between measured and estimated envelopes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<f64>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub problem: String,
    pub y0: [f64; 2],
    pub t_end: f64,
    pub reference_method: String,
    pub reference_h: f64,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.failure.is_some()).count()
    }
}

fn cell_stem(method: &str, h: f64) -> String {
    format!("{method}_h{h}")
}

/// Block maxima of `measured` and `estimated` paired on common blocks.
fn paired_blocks(times: &[f64], measured: &[f64], est_times: &[f64], estimated: &[f64], t_end: f64) -> Vec<(f64, f64, f64)> {
    let m = block_envelope(times, measured, BLOCK, BLOCK);
    let e = block_envelope(est_times, estimated, BLOCK, BLOCK);
    let first_full = est_times.first().map_or(f64::INFINITY, |t| *t);
    m.into_iter()
        .filter(|(t, _)| *t - BLOCK / 2.0 >= first_full && *t + BLOCK / 2.0 <= t_end)
        .filter_map(|(t, v)| e.iter().find(|(s, _)| (s - t).abs() < 1e-9).map(|&(_, w)| (t, v, w)))
        .collect()
}

fn run_cell(config: &ExperimentConfig, problem: &Problem, method: &str, h: f64) -> CellReport {
    let stride = config.stride_for(h);
    let mut report = CellReport {
        method: method.to_string(),
        h,
        stride,
        route: None,
        error_csv: None,
        estimate_csv: None,
        plots: Vec::new(),
        fit: None,
        breakdown: None,
        warnings: Vec::new(),
        failure: None,
    };
    if let Err(e) = fill_cell(config, problem, &mut report) {
        report.failure = Some(e.to_string());
    }
    report
}

fn fill_cell(config: &ExperimentConfig, problem: &Problem, report: &mut CellReport) -> Result<()> {
    let (h, stride) = (report.h, report.stride);
    let tableau = builtin(&report.method)?;
    let reference = ReferenceSpec { tableau: builtin(&config.reference_method)?, h: config.reference_h };
    let sys = problem.system();
    let errors = measure_global_error(&tableau, &sys, &problem.initial_state(), 0.0, h, config.t_end, &reference, stride)?;
    let stem = cell_stem(&report.method, h);
    let error_path = config.output_dir.join(format!("{stem}_error.csv"));
    write_csv(
        Some(&error_path),
        &["t".into(), "err1".into(), "err2".into()],
        errors.times.iter().zip(&errors.errors).map(|(t, e)| vec![*t, e[0], e[1]]),
    )?;
    report.error_csv = Some(error_path.clone());
    if let Some(t) = errors.failure {
        return Err(CliError::Core(oscerr::Error::Divergence { step: (t / h).round() as usize, t }));
    }
    let err1 = errors.component(0);
    let t_last = errors.times.last().copied().unwrap_or(0.0);
    let window = [config.fit_window[0], config.fit_window[1].min(t_last)];
    match envelope_fit(&errors.times, &err1, (window[0], window[1])) {
        Ok(f) => report.fit = Some(FitSummary { amplitude: f.amplitude, exponent: f.exponent, window, peaks: f.peaks }),
        Err(e) => report.warnings.push(format!("no envelope fit: {e}")),
    }

    let traj = Trajectory { t0: 0.0, h: h * stride as f64, stride: 1, states: errors.reference.clone() };
    let (route, est) = estimate_series(problem, &tableau, h, &errors.times, &traj)?;
    report.route = Some(route);
    let estimate_path = config.output_dir.join(format!("{stem}_estimate.csv"));
    write_csv(
        Some(&estimate_path),
        &["t".into(), "est1".into(), "est2".into(), "est1_leading_only".into()],
        est.times.iter().zip(&est.full).zip(&est.leading).map(|((t, f), l)| vec![*t, f[0], f[1], l[0]]),
    )?;
    report.estimate_csv = Some(estimate_path.clone());
    let est1: Vec<f64> = est.full.iter().map(|v| v[0]).collect();
    let blocks = paired_blocks(&errors.times, &err1, &est.times, &est1, config.t_end);
    report.breakdown = detect_breakdown(&blocks, BREAKDOWN_FROM, BREAKDOWN_TOLERANCE);

    if config.plot {
        let paths: [&Path; 2] = [&error_path, &estimate_path];
        let two_panel = config.output_dir.join(format!("{stem}.svg"));
        report.warnings.extend(emit_plot(&paths, PlotStyle::TwoPanel { split: 50.0 }, &two_panel)?);
        report.plots.push(two_panel);
        let loglog = config.output_dir.join(format!("{stem}_loglog.svg"));
        emit_plot(&paths, PlotStyle::LogLog, &loglog)?;
        report.plots.push(loglog);
    }
    Ok(())
}

/// Runs every (method, step size) cell on up to `config.workers` threads.
/// A failing cell is recorded in its report; the others still run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let problem = Problem::new(config.problem, config.y0)?;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| CliError::io(&config.output_dir, e))?;
    let cells: Vec<(&str, f64)> =
        config.methods.iter().flat_map(|m| config.step_sizes.iter().map(move |h| (m.as_str(), *h))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", config.workers)))?;
    let cells = pool.install(|| cells.par_iter().map(|&(m, h)| run_cell(config, &problem, m, h)).collect());
    let report = ExperimentReport {
        problem: config.problem.to_string(),
        y0: config.y0,
        t_end: config.t_end,
        reference_method: config.reference_method.clone(),
        reference_h: config.reference_h,
        cells,
    };
    let path = config.output_dir.join("report.toml");
    let text = toml::to_string_pretty(&report).map_err(|e| CliError::Config { path: path.display().to_string(), message: e.to_string() })?;
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}
