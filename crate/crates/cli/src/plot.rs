//! Static SVG plots derived from CSV files.

use std::path::Path;

use oscerr::estimator::{block_envelope, envelope_fit};
use plotters::coord::combinators::IntoLogRange;
use plotters::prelude::*;

use crate::error::{CliError, Result};
use crate::output::{read_csv, Table};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlotStyle {
    /// Signed curves; left panel `t ∈ [t0, split]`, right panel the whole run.
    TwoPanel { split: f64 },
    /// Block envelopes on log-log axes, with the fitted slope of the first curve.
    LogLog,
}

#[derive(Clone, Debug)]
struct Curve {
    label: String,
    dashed: bool,
    times: Vec<f64>,
    values: Vec<f64>,
}

/// Linear interpolation of `(times, values)` at `t`, `None` outside the data.
fn interpolate(times: &[f64], values: &[f64], t: f64) -> Option<f64> {
    let k = times.partition_point(|x| *x < t);
    if k < times.len() && times[k] == t {
        return Some(values[k]);
    }
    if k == 0 || k == times.len() {
        return None;
    }
    let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    Some(values[k - 1] + w * (values[k] - values[k - 1]))
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    // a later start is fine as long as the samples coincide
    let Some(offset) = a.iter().position(|t| (t - b.first().copied().unwrap_or(f64::NAN)).abs() <= 1e-9 * t.abs().max(1.0)) else {
        return b.is_empty();
    };
    a.len() >= offset + b.len() && a[offset..offset + b.len()].iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0))
}

/// Curves from the first data column of each table and from any
/// `*_leading_only` column (drawn dashed).
fn curves(tables: &[(String, Table)], warnings: &mut Vec<String>) -> Result<Vec<Curve>> {
    let base = tables.first().map(|(_, t)| t.columns[0].clone()).unwrap_or_default();
    let mut out = Vec::new();
    for (name, table) in tables {
        if table.header.first().map(String::as_str) != Some("t") || table.header.len() < 2 {
            return Err(CliError::Usage(format!("{name}: first column must be t, followed by data columns")));
        }
        let times = &table.columns[0];
        let resample = !same_grid(&base, times);
        if resample {
            warnings.push(format!("{name}: time grid differs from the first file; resampled by linear interpolation"));
        }
        let picked = std::iter::once(1).chain((2..table.header.len()).filter(|&i| table.header[i].ends_with("_leading_only")));
        for i in picked {
            let values = &table.columns[i];
            let (t, v): (Vec<f64>, Vec<f64>) = if resample {
                base.iter().filter_map(|&t| interpolate(times, values, t).map(|v| (t, v))).unzip()
            } else {
                (times.clone(), values.clone())
            };
            out.push(Curve { label: format!("{name}: {}", table.header[i]), dashed: table.header[i].ends_with("_leading_only"), times: t, values: v });
        }
    }
    Ok(out)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(lo < hi) {
        let mid = if lo.is_finite() { lo } else { 0.0 };
        return (mid - 1.0, mid + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn plot_err<E: std::fmt::Debug>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Plot { path: path.display().to_string(), message: format!("{e:?}") }
}

const COLOURS: [RGBColor; 6] = [BLACK, RED, BLUE, GREEN, MAGENTA, CYAN];

fn linear_panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    curves: &[Curve],
    (t0, t1): (f64, f64),
    caption: &str,
) -> std::result::Result<(), DrawingAreaErrorKind<DB::ErrorType>> {
    fn visible(c: &Curve, t0: f64, t1: f64) -> impl Iterator<Item = (f64, f64)> + Clone + '_ {
        c.times.iter().zip(&c.values).filter(move |(t, _)| **t >= t0 && **t <= t1).map(|(t, v)| (*t, *v))
    }
    let (y0, y1) = range(curves.iter().flat_map(|c| visible(c, t0, t1).map(|p| p.1)));
    let mut chart = ChartBuilder::on(area)
        .caption(caption, ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(70)
        .build_cartesian_2d(t0..t1, y0..y1)?;
    let span = (y1 - y0).abs();
    chart
        .configure_mesh()
        .x_desc("t")
        .y_label_formatter(&|v| if v.abs() < 1e-9 * span { "0".to_string() } else { format!("{v:.1e}") })
        .draw()?;
    for (k, c) in curves.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        if c.dashed {
            chart
                .draw_series(DashedLineSeries::new(visible(c, t0, t1), 6, 4, colour.stroke_width(1)))?
                .label(c.label.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], colour));
        } else {
            chart
                .draw_series(LineSeries::new(visible(c, t0, t1), colour.stroke_width(1)))?
                .label(c.label.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], colour));
        }
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    Ok(())
}

/// Reads `csv_paths` and writes an SVG to `out`. Returns warnings, for
/// instance about resampled time grids.
pub fn emit_plot(csv_paths: &[&Path], style: PlotStyle, out: &Path) -> Result<Vec<String>> {
    let mut tables = Vec::new();
    for p in csv_paths {
        let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        tables.push((name, read_csv(p)?));
    }
    let mut warnings = Vec::new();
    let curves = curves(&tables, &mut warnings)?;
    if curves.iter().all(|c| c.times.is_empty()) {
        return Err(CliError::Usage("nothing to plot: the CSV files have no rows".into()));
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let err = plot_err(out);
    let (t_lo, t_hi) = range(curves.iter().flat_map(|c| c.times.iter().copied()));
    let (t_lo, t_hi) = (t_lo.max(curves.iter().filter_map(|c| c.times.first()).copied().fold(f64::INFINITY, f64::min)), t_hi);
    match style {
        PlotStyle::TwoPanel { split } => {
            let root = SVGBackend::new(out, (1400, 520)).into_drawing_area();
            root.fill(&WHITE).map_err(&err)?;
            let (left, right) = root.split_horizontally(700);
            linear_panel(&left, &curves, (t_lo, split.min(t_hi)), &format!("t in [{t_lo}, {}]", split.min(t_hi))).map_err(&err)?;
            linear_panel(&right, &curves, (t_lo, t_hi), &format!("t in [{t_lo}, {t_hi:.0}]")).map_err(&err)?;
            root.present().map_err(&err)?;
        }
        PlotStyle::LogLog => {
            let width = ((t_hi - t_lo) / 100.0).max(1e-9);
            let envelopes: Vec<(Curve, Vec<(f64, f64)>)> = curves
                .iter()
                .map(|c| {
                    let env = block_envelope(&c.times, &c.values, t_lo.max(width), width)
                        .into_iter()
                        .filter(|(t, v)| *t > 0.0 && *v > 0.0)
                        .collect();
                    (c.clone(), env)
                })
                .collect();
            let all: Vec<(f64, f64)> = envelopes.iter().flat_map(|e| e.1.iter().copied()).collect();
            if all.is_empty() {
                return Err(CliError::Usage("no positive values to draw on log axes".into()));
            }
            let (x0, x1) = all.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.0), b.max(p.0)));
            let (y0, y1) = all.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.1), b.max(p.1)));
            let fit = envelope_fit(&curves[0].times, &curves[0].values, (x0, x1)).ok();
            let caption = match fit {
                Some(f) => format!("envelopes; {} grows with slope {:.3}", curves[0].label, f.exponent),
                None => "envelopes".to_string(),
            };
            let root = SVGBackend::new(out, (900, 600)).into_drawing_area();
            root.fill(&WHITE).map_err(&err)?;
            let mut chart = ChartBuilder::on(&root)
                .caption(caption, ("sans-serif", 18))
                .margin(10)
                .x_label_area_size(35)
                .y_label_area_size(70)
                .build_cartesian_2d((x0 * 0.95..x1 * 1.05).log_scale(), (y0 * 0.8..y1 * 1.25).log_scale())
                .map_err(&err)?;
            chart
                .configure_mesh()
                .x_desc("t")
                .x_labels(8)
                .x_label_formatter(&|v| format!("{v:.0}"))
                .y_label_formatter(&|v| format!("{v:.1e}"))
                .draw()
                .map_err(&err)?;
            for (k, (c, env)) in envelopes.iter().enumerate() {
                let colour = COLOURS[k % COLOURS.len()];
                let style = colour.stroke_width(if c.dashed { 1 } else { 2 });
                chart
                    .draw_series(LineSeries::new(env.iter().copied(), style))
                    .map_err(&err)?
                    .label(c.label.clone())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], colour));
            }
            if let Some(f) = fit {
                let line = [x0, x1].map(|t| (t, f.amplitude * t.powf(f.exponent)));
                chart
                    .draw_series(DashedLineSeries::new(line, 8, 6, BLACK.mix(0.6).stroke_width(1)))
                    .map_err(&err)?
                    .label(format!("fit {:.3e} t^{:.3}", f.amplitude, f.exponent))
                    .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK.mix(0.6)));
            }
            chart
                .configure_series_labels()
                .position(SeriesLabelPosition::UpperLeft)
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(&err)?;
            root.present().map_err(&err)?;
        }
    }
    Ok(warnings)
}
