use crate::error::{Error, Result};

/// Power law `amplitude · t^exponent` fitted to oscillation peaks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeFit {
    pub amplitude: f64,
    pub exponent: f64,
    pub peaks: usize,
}

/// Local maxima `(t, |v|)` of `|v|`, with `t` in `[lo, hi]`.
pub fn peaks(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let n = times.len().min(values.len());
    (1..n.saturating_sub(1))
        .filter(|&k| times[k] >= lo && times[k] <= hi)
        .filter(|&k| {
            let (a, b, c) = (values[k - 1].abs(), values[k].abs(), values[k + 1].abs());
            b > 0.0 && b >= a && b > c
        })
        .map(|k| (times[k], values[k].abs()))
        .collect()
}

/// Least-squares fit of `log peak = log amplitude + exponent · log t` over
/// the peaks of `|values|` in `window`. Needs at least ten peaks.
pub fn envelope_fit(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<EnvelopeFit> {
    let pk = peaks(times, values, window.0, window.1);
    if pk.len() < 10 {
        return Err(Error::Fit(format!("{} peaks in [{}, {}], need at least 10", pk.len(), window.0, window.1)));
    }
    if pk.iter().any(|p| p.0 <= 0.0) {
        return Err(Error::Fit("envelope fit needs positive times".into()));
    }
    let n = pk.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, v) in &pk {
        let (x, y) = (t.ln(), v.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(Error::Fit("all peaks at the same time".into()));
    }
    let exponent = (n * sxy - sx * sy) / det;
    let intercept = (sy - exponent * sx) / n;
    Ok(EnvelopeFit { amplitude: intercept.exp(), exponent, peaks: pk.len() })
}

/// Maximum of `|v|` over consecutive blocks of width `width` starting at
/// `start`; returns `(block midpoint, max)` for every non-empty block.
pub fn block_envelope(times: &[f64], values: &[f64], start: f64, width: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut current: Option<(i64, f64)> = None;
    for (&t, &v) in times.iter().zip(values) {
        if t < start {
            continue;
        }
        let k = ((t - start) / width).floor() as i64;
        match current {
            Some((j, m)) if j == k => current = Some((j, m.max(v.abs()))),
            Some((j, m)) => {
                out.push((start + (j as f64 + 0.5) * width, m));
                current = Some((k, v.abs()));
            }
            None => current = Some((k, v.abs())),
        }
    }
    if let Some((j, m)) = current {
        out.push((start + (j as f64 + 0.5) * width, m));
    }
    out
}

/// Root-mean-square of `measured/estimated − 1` over paired envelopes.
pub fn rms_relative_deviation(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (mut acc, mut n) = (0.0, 0usize);
    for (m, e) in pairs {
        acc += (m / e - 1.0).powi(2);
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        (acc / n as f64).sqrt()
    }
}

/// Start of the persistent departure of `measured/estimated` from 1.
///
/// `blocks` holds `(t, measured, estimated)` envelopes in time order. The
/// result is the time of the first block at or after `from` whose ratio lies
/// outside `[1 − tolerance, 1 + tolerance]` and from which no later block
/// returns inside. `None` if the last block still agrees.
pub fn detect_breakdown(blocks: &[(f64, f64, f64)], from: f64, tolerance: f64) -> Option<f64> {
    let mut onset = None;
    for &(t, m, e) in blocks.iter().filter(|b| b.0 >= from) {
        let off = !((m / e - 1.0).abs() <= tolerance);
        match (off, onset) {
            (true, None) => onset = Some(t),
            (false, _) => onset = None,
            _ => {}
        }
    }
    onset
}
