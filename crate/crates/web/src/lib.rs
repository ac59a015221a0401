//! Browser demo: B-series coefficient tables, measured against estimated
//! global error, and the periodic wave `w_n`.
//!
//! Every export is an ordinary Rust function, so the crate is tested on the
//! host; errors cross into JavaScript as strings.

use std::sync::Arc;

use oscerr::bseries::{modified_equation_coeffs, order4_combination, rk_bseries, Rational};
use oscerr::estimator::{linosc_estimate, order_of_modified, ErrorEstimate};
use oscerr::oscillators::{fit_action_angle, wn_build, EmdenFowlerProblem, LinearOscillatorProblem, LinearOscillatorSystem};
use oscerr::rk::{builtin, design_tuned_3stage, integrate, ButcherTableau, OdeSystem};
use oscerr::trees::catalog;
use wasm_bindgen::prelude::*;

type Result<T> = std::result::Result<T, String>;

fn text(e: oscerr::Error) -> String {
    e.to_string()
}

/// Built-in method names, or `c2=P/Q` for the tuned three-stage design.
fn tableau(spec: &str) -> Result<ButcherTableau> {
    match spec.trim().strip_prefix("c2=") {
        Some(c2) => {
            let c2: Rational = c2.trim().parse().map_err(|_| format!("c2 {c2:?} is not a fraction"))?;
            design_tuned_3stage(&c2).map_err(text)
        }
        None => builtin(spec.trim()).map_err(text),
    }
}

/// `a(τ)` and `b(τ)` for every tree up to some order.
#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    pub method: String,
    pub order: usize,
    /// `3b(τ₄ᵃ) − 3b(τ₄ᵇ) + b(τ₄ᶜ) − 4b(blt₄)`, as a fraction.
    pub tuning: String,
    pub trees: Vec<String>,
    pub a: Vec<String>,
    pub b: Vec<String>,
}

#[wasm_bindgen]
pub fn coefficient_table(spec: &str, max_order: usize) -> Result<CoefficientTable> {
    if !(1..=8).contains(&max_order) {
        return Err(format!("order {max_order} is outside 1..=8"));
    }
    let tab = tableau(spec)?;
    let order = max_order.max(4);
    let a = rk_bseries(&tab, order).map_err(text)?;
    let b = modified_equation_coeffs(&a, order).map_err(text)?;
    let mut out = CoefficientTable {
        method: tab.name().to_string(),
        order: tab.order().map_err(text)?,
        tuning: order4_combination(&b).map_err(text)?.to_string(),
        trees: Vec::new(),
        a: Vec::new(),
        b: Vec::new(),
    };
    let cat = catalog();
    for id in 0..cat.count_up_to(max_order) {
        let t = cat.tree(id);
        out.trees.push(t.encoding());
        out.a.push(a.get(t).map_err(text)?.to_string());
        out.b.push(b.get(t).map_err(text)?.to_string());
    }
    Ok(out)
}

/// First component of the measured and estimated global error. `estimate`
/// and `leading` are NaN where the estimate does not apply.
#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct ErrorCurve {
    pub t: Vec<f64>,
    pub measured: Vec<f64>,
    pub estimate: Vec<f64>,
    pub leading: Vec<f64>,
}

const MAX_STEPS: f64 = 2e6;

/// Runs `spec` at step `h` on `y'' + t y³ = 0` (`problem = "emden"`) or the
/// Airy equation (`"airy"`), both from `(1, 0)`, against RK4 at `h/10`, and
/// returns about `points` samples with the matching estimate.
#[wasm_bindgen]
pub fn error_curve(problem: &str, spec: &str, h: f64, t_end: f64, points: usize) -> Result<ErrorCurve> {
    if !(h > 0.0 && t_end > 0.0 && h < t_end) || !t_end.is_finite() {
        return Err(format!("need 0 < h < t_end, got h = {h}, t_end = {t_end}"));
    }
    if t_end / h > MAX_STEPS {
        return Err(format!("{:.0} steps is too many for the demo", t_end / h));
    }
    let tab = tableau(spec)?;
    let reference = builtin("rk4").map_err(text)?;
    // samples about 0.02 apart, which the reference fits need
    let stride = ((0.02 / h).round() as usize).max(1);
    match problem {
        "emden" => {
            let p = EmdenFowlerProblem::cubic();
            let sys = oscerr::oscillators::ef_system(&p);
            let (t, measured, exact) = run_pair(&tab, &reference, &sys, &p.initial_state(), h, t_end, stride)?;
            let est = ErrorEstimate::closed_form(tab.name()).map_err(|_| {
                format!("closed-form estimates exist for runge2, heun3 and tuned3, not {}", tab.name())
            })?;
            let wave = Arc::new(wn_build(3, 1 << 12).map_err(text)?);
            let r = fit_action_angle(&p, &exact, wave).map_err(text)?;
            let from = est.valid_from.max(r.t_min);
            let mut curve = ErrorCurve { t: Vec::new(), measured: Vec::new(), estimate: Vec::new(), leading: Vec::new() };
            for (k, &tk) in t.iter().enumerate() {
                let v = if tk >= from { Some(est.evaluate(&p, &r, h, tk).map_err(text)?) } else { None };
                curve.push(tk, measured[k], v.map(|v| (v.full[0], v.leading[0])));
            }
            Ok(curve.thin(points))
        }
        "airy" => {
            let p = LinearOscillatorProblem::airy(1.0, 0.0);
            let sys = LinearOscillatorSystem::new(&p);
            let (t, measured, exact) = run_pair(&tab, &reference, &sys, &p.initial_state(), h, t_end, stride)?;
            let probe = modified_equation_coeffs(&rk_bseries(&tab, 6).map_err(text)?, 6).map_err(text)?;
            let order = order_of_modified(&probe).map_err(text)?.max(1);
            if order > 4 {
                return Err(format!("the demo handles methods up to order 4, {} has order {order}", tab.name()));
            }
            let b = modified_equation_coeffs(&rk_bseries(&tab, 2 * order).map_err(text)?, 2 * order).map_err(text)?;
            let from = p.t_min.max(1.0);
            let fitted = p.clone().with_s0(p.fit_s0(&exact, from.max(0.1 * t_end)).map_err(text)?);
            let mut curve = ErrorCurve { t: Vec::new(), measured: Vec::new(), estimate: Vec::new(), leading: Vec::new() };
            for (k, &tk) in t.iter().enumerate() {
                let v = if tk >= from { Some(linosc_estimate(&fitted, &b, order, h, tk).map_err(text)?) } else { None };
                curve.push(tk, measured[k], v.map(|v| (v.error[0], v.leading[0])));
            }
            Ok(curve.thin(points))
        }
        other => Err(format!("unknown problem {other:?}, expected emden or airy")),
    }
}

impl ErrorCurve {
    fn push(&mut self, t: f64, measured: f64, estimate: Option<(f64, f64)>) {
        let (e, l) = estimate.unwrap_or((f64::NAN, f64::NAN));
        self.t.push(t);
        self.measured.push(measured);
        self.estimate.push(e);
        self.leading.push(l);
    }

    fn thin(self, points: usize) -> Self {
        let every = self.t.len().div_ceil(points.max(2)).max(1);
        let pick = |v: Vec<f64>| v.into_iter().step_by(every).collect();
        ErrorCurve { t: pick(self.t), measured: pick(self.measured), estimate: pick(self.estimate), leading: pick(self.leading) }
    }
}

/// Sample times, first error component and the reference trajectory. The
/// two runs are sequential: threads are unavailable in the browser.
fn run_pair<S: OdeSystem>(
    method: &ButcherTableau,
    reference: &ButcherTableau,
    sys: &S,
    y0: &[f64],
    h: f64,
    t_end: f64,
    stride: usize,
) -> Result<(Vec<f64>, Vec<f64>, oscerr::rk::Trajectory)> {
    let run = integrate(method, sys, y0, 0.0, h, t_end, stride).map_err(text)?;
    let exact = integrate(reference, sys, y0, 0.0, h / 10.0, t_end, 10 * stride).map_err(text)?;
    let n = run.len().min(exact.len());
    let t = (0..n).map(|k| run.time(k)).collect();
    let e = (0..n).map(|k| run.states[k][0] - exact.states[k][0]).collect();
    Ok((t, e, exact))
}

/// One period of `w_n` with its period and the constant `χ`.
#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct WaveCurve {
    pub period: f64,
    pub chi: f64,
    pub theta: Vec<f64>,
    pub w: Vec<f64>,
    pub wp: Vec<f64>,
}

#[wasm_bindgen]
pub fn wave_curve(n: u32, points: usize) -> Result<WaveCurve> {
    if n > 15 {
        return Err(format!("n = {n} is above the demo limit of 15"));
    }
    let table = wn_build(n, 1 << 12).map_err(text)?;
    let m = points.max(2);
    let theta: Vec<f64> = (0..m).map(|k| table.period() * k as f64 / (m - 1) as f64).collect();
    Ok(WaveCurve {
        period: table.period(),
        chi: table.chi(),
        w: theta.iter().map(|&x| table.w(x)).collect(),
        wp: theta.iter().map(|&x| table.wp(x)).collect(),
        theta,
    })
}
