use std::thread;

use crate::error::{Error, Result};
use crate::oscillators::{xt_map, EmdenFowlerProblem, ReferenceOscillation};
use crate::rk::{builtin, integrate_with, ButcherTableau, OdeSystem};

/// The run that stands in for the exact solution.
#[derive(Clone, Debug)]
pub struct ReferenceSpec {
    pub tableau: ButcherTableau,
    pub h: f64,
}

impl Default for ReferenceSpec {
    /// Classical RK4 with `h = 1e-4`.
    fn default() -> Self {
        ReferenceSpec { tableau: builtin("rk4").expect("rk4 is built in"), h: 1e-4 }
    }
}

/// Pointwise `method − reference` on a shared grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorTrajectory {
    pub times: Vec<f64>,
    pub errors: Vec<Vec<f64>>,
    /// Reference states at the same times.
    pub reference: Vec<Vec<f64>>,
    /// Time at which either run diverged; samples stop there.
    pub failure: Option<f64>,
}

impl ErrorTrajectory {
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.errors.iter().map(|e| e[i]).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

type Run = (Vec<Vec<f64>>, Option<f64>);

fn sampled_run<S: OdeSystem + ?Sized>(
    tableau: &ButcherTableau,
    ode: &S,
    y0: &[f64],
    t0: f64,
    h: f64,
    t_end: f64,
    every: usize,
) -> Result<Run> {
    let mut samples = Vec::new();
    let outcome = integrate_with(tableau, ode, y0, t0, h, t_end, |k, y| {
        if k % every == 0 {
            samples.push(y.to_vec());
        }
        true
    });
    match outcome {
        Ok(_) => Ok((samples, None)),
        Err(Error::Divergence { t, .. }) => Ok((samples, Some(t))),
        Err(e) => Err(e),
    }
}

/// Runs `method` at step `h` and the reference concurrently and returns
/// their difference every `sample_every` method steps.
///
/// The reference step must divide `h` an integer number of times; ten or more
/// is advisable so that the reference error is negligible.
#[allow(clippy::too_many_arguments)]
pub fn measure_global_error<S: OdeSystem + Sync + ?Sized>(
    method: &ButcherTableau,
    ode: &S,
    y0: &[f64],
    t0: f64,
    h: f64,
    t_end: f64,
    reference: &ReferenceSpec,
    sample_every: usize,
) -> Result<ErrorTrajectory> {
    if sample_every == 0 {
        return Err(Error::Argument("sample_every must be at least 1".into()));
    }
    if !(h > 0.0) || !(reference.h > 0.0) {
        return Err(Error::Argument("step sizes must be positive".into()));
    }
    let ratio = h / reference.h;
    let steps = ratio.round();
    if steps < 1.0 || (ratio - steps).abs() > 1e-9 * steps {
        return Err(Error::Argument(format!(
            "reference step {} must divide the method step {h}",
            reference.h
        )));
    }
    let ref_every = sample_every * steps as usize;
    let (run, reference_run) = thread::scope(|s| {
        let r = s.spawn(|| sampled_run(&reference.tableau, ode, y0, t0, reference.h, t_end, ref_every));
        let m = sampled_run(method, ode, y0, t0, h, t_end, sample_every);
        (m, r.join().unwrap_or_else(|_| Err(Error::Argument("reference run panicked".into()))))
    });
    let (approx, fail_m) = run?;
    let (exact, fail_r) = reference_run?;
    let failure = match (fail_m, fail_r) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let n = approx.len().min(exact.len());
    let times = (0..n).map(|k| t0 + (k * sample_every) as f64 * h).collect();
    let errors = approx
        .iter()
        .zip(&exact)
        .map(|(a, e)| a.iter().zip(e).map(|(x, y)| x - y).collect())
        .collect();
    Ok(ErrorTrajectory { times, errors, reference: exact[..n].to_vec(), failure })
}

/// `DX_t⁻¹ E_h(t)`: the error expressed as changes of `(c₁, c₂)`. Samples
/// before `t_min`, or where `DX_t` is singular, are `None`.
pub fn parameter_space_error(
    errors: &ErrorTrajectory,
    reference: &ReferenceOscillation,
    problem: &EmdenFowlerProblem,
) -> Vec<(f64, Option<[f64; 2]>)> {
    errors
        .times
        .iter()
        .zip(&errors.errors)
        .map(|(&t, e)| (t, xt_map(problem, reference, t).ok().map(|m| m.apply_inverse(e))))
        .collect()
}
