//! Error estimates on a sample grid, by whichever route the problem allows.

use std::sync::Arc;

use num_traits::Zero;
use oscerr::bseries::{modified_equation_coeffs, rk_bseries, CoefficientMap};
use oscerr::estimator::{elementary_integrals_numeric, error_series, linosc_estimate, order_of_modified, ErrorEstimate};
use oscerr::oscillators::{fit_action_angle, wn_build, ReferenceOscillation, WAVE_RESOLUTION};
use oscerr::rk::{ButcherTableau, Trajectory};
use oscerr::trees::{catalog, RootedTree};

use crate::error::Result;
use crate::problem::Problem;

/// How an estimate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Closed-form envelopes for `y'' + t y³ = 0`.
    ClosedForm,
    /// Liouville–Green formula for linear oscillators.
    Linear,
    /// The tree series with numerically integrated elementary integrals.
    Numeric,
}

/// `(t, full estimate, lowest-power term alone)`; times before the estimate
/// applies are skipped.
#[derive(Clone, Debug, Default)]
pub struct EstimateSeries {
    pub times: Vec<f64>,
    pub full: Vec<[f64; 2]>,
    pub leading: Vec<[f64; 2]>,
}

/// Modified-equation coefficients up to order `2p` and the order `p`.
pub fn modified_coefficients(method: &ButcherTableau) -> Result<(CoefficientMap, usize)> {
    let probe = modified_equation_coeffs(&rk_bseries(method, 6)?, 6)?;
    let p = order_of_modified(&probe)?.clamp(1, 5);
    let order = 2 * p;
    Ok((modified_equation_coeffs(&rk_bseries(method, order)?, order)?, p))
}

/// Fits the action-angle parameters of an Emden–Fowler trajectory.
pub fn fit_reference(problem: &Problem, reference: &Trajectory) -> Result<Option<ReferenceOscillation>> {
    match problem {
        Problem::Emden(p) => {
            let wave = Arc::new(wn_build(p.n, WAVE_RESOLUTION)?);
            Ok(Some(fit_action_angle(p, reference, wave)?))
        }
        Problem::Linear(_) => Ok(None),
    }
}

pub fn route(problem: &Problem, method: &ButcherTableau) -> Route {
    match problem {
        Problem::Emden(p) if p.n == 3 && p.nu == 1.0 && ErrorEstimate::closed_form(method.name()).is_ok() => Route::ClosedForm,
        Problem::Emden(_) => Route::Numeric,
        Problem::Linear(_) => Route::Linear,
    }
}

/// Estimates `E_h` on `times`, using `reference` (an accurate trajectory
/// sampled on the same grid) for any fitted constants.
pub fn estimate_series(
    problem: &Problem,
    method: &ButcherTableau,
    h: f64,
    times: &[f64],
    reference: &Trajectory,
) -> Result<(Route, EstimateSeries)> {
    let route = route(problem, method);
    let mut out = EstimateSeries::default();
    match (route, problem) {
        (Route::ClosedForm, Problem::Emden(p)) => {
            let r = fit_reference(problem, reference)?.expect("Emden-Fowler problems fit a reference");
            let est = ErrorEstimate::closed_form(method.name())?;
            let from = est.valid_from.max(r.t_min);
            for &t in times.iter().filter(|t| **t >= from) {
                let v = est.evaluate(p, &r, h, t)?;
                out.times.push(t);
                out.full.push(v.full);
                out.leading.push(v.leading);
            }
        }
        (Route::Linear, Problem::Linear(p)) => {
            let (b, order) = modified_coefficients(method)?;
            let from = p.t_min.max(1.0);
            let fit_from = times.last().map_or(from, |t| from.max(0.1 * t));
            let fitted = p.clone().with_s0(p.fit_s0(reference, fit_from)?);
            for &t in times.iter().filter(|t| **t >= from) {
                let v = linosc_estimate(&fitted, &b, order, h, t)?;
                out.times.push(t);
                out.full.push(v.error);
                out.leading.push(v.leading);
            }
        }
        _ => {
            let (b, p) = modified_coefficients(method)?;
            let cat = catalog();
            let trees: Vec<RootedTree> = (cat.count_up_to(1)..cat.count_up_to(2 * p))
                .map(|id| cat.tree(id).clone())
                .filter(|t| b.get(t).is_ok_and(|v| !v.is_zero()))
                .collect();
            let Some(&t_end) = times.last() else { return Ok((route, out)) };
            let spacing = if times.len() > 1 { times[1] - times[0] } else { t_end.max(1e-3) };
            let stride = (spacing / 2e-4).ceil().max(1.0) as usize;
            let h_fine = spacing / stride as f64;
            let sys = problem.system();
            let (_, ints) =
                elementary_integrals_numeric(&sys, &sys, &trees, &problem.initial_state(), times[0], t_end, h_fine, stride)?;
            for &t in ints.first().map_or(&[][..], |s| &s.times[..]) {
                let full = error_series(&b, &ints, h, t, 2 * p)?;
                let leading = error_series(&b, &ints, h, t, p + 1)?;
                out.times.push(t);
                out.full.push([full[0], full[1]]);
                out.leading.push([leading[0], leading[1]]);
            }
        }
    }
    Ok((route, out))
}
