use num_traits::ToPrimitive;

use crate::bseries::{rat, Rational};
use crate::error::{Error, Result};
use crate::oscillators::{EmdenFowlerProblem, ReferenceOscillation};

/// Periodic factor multiplying an envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseShape {
    /// `sd'(t̃)`
    SdPrime,
    /// `sd³(t̃)`
    SdCubed,
}

impl PhaseShape {
    /// Largest absolute value over a period.
    pub fn peak(self) -> f64 {
        match self {
            PhaseShape::SdPrime => 1.0,
            PhaseShape::SdCubed => 2.0 * std::f64::consts::SQRT_2,
        }
    }
}

/// One component of one `h^k` term:
/// `coefficient · √2 · c₁^c1_power · χ^[uses_chi] · t^t_exponent · shape(t̃)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeTerm {
    pub coefficient: Rational,
    pub c1_power: i32,
    pub uses_chi: bool,
    pub t_exponent: Rational,
    pub shape: PhaseShape,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateTerm {
    pub h_power: u32,
    pub components: [EnvelopeTerm; 2],
}

/// A closed-form global-error estimate for `y'' + t y³ = 0`, written in the
/// normalisation of the Jacobi function `sd(·|½)` (see
/// [`ReferenceOscillation::sd_parameters`]).
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub method: String,
    pub terms: Vec<EstimateTerm>,
    pub valid_from: f64,
}

/// Value of an estimate at one time: all terms, and the lowest power of `h` alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateValue {
    pub full: [f64; 2],
    pub leading: [f64; 2],
}

fn term(h_power: u32, first: (i64, i64, i32, bool, i64), second: (i64, i64, i32, bool, i64)) -> EstimateTerm {
    let env = |(n, d, k, chi, e6): (i64, i64, i32, bool, i64), shape| EnvelopeTerm {
        coefficient: rat(n, d),
        c1_power: k,
        uses_chi: chi,
        t_exponent: rat(e6, 6),
        shape,
    };
    EstimateTerm { h_power, components: [env(first, PhaseShape::SdPrime), env(second, PhaseShape::SdCubed)] }
}

/// Names accepted by [`ErrorEstimate::closed_form`].
pub const CLOSED_FORM_METHODS: [&str; 3] = ["runge2", "heun3", "tuned3"];

impl ErrorEstimate {
    /// The built-in estimates for Runge's second-order method, Heun's
    /// third-order method and the tuned third-order method.
    pub fn closed_form(method: &str) -> Result<Self> {
        // (numerator, denominator, power of c₁, χ factor, 6 × exponent of t)
        let terms = match method {
            "runge2" => vec![
                term(2, (4, 15, 4, true, 11), (-8, 45, 5, true, 13)),
                term(3, (256, 6237, 6, false, 21), (-512, 18711, 7, false, 23)),
            ],
            "heun3" => vec![
                term(3, (-512, 35721, 6, false, 21), (1024, 107163, 7, false, 23)),
                term(4, (50208, 229635, 6, false, 15), (-60416, 688905, 7, false, 17)),
                term(5, (557056, 34543665, 8, true, 25), (-1114112, 103630995, 9, true, 27)),
            ],
            "tuned3" => vec![
                term(4, (-5008, 25515, 6, false, 15), (10016, 76545, 7, false, 17)),
                term(5, (-78848, 1279395, 8, true, 25), (157696, 3838185, 9, true, 27)),
            ],
            other => {
                return Err(Error::Argument(format!(
                    "no closed-form estimate for '{other}', expected one of {}",
                    CLOSED_FORM_METHODS.join(", ")
                )))
            }
        };
        Ok(ErrorEstimate { method: method.to_string(), terms, valid_from: 1.0 })
    }

    fn check(&self, problem: &EmdenFowlerProblem, reference: &ReferenceOscillation, t: f64) -> Result<()> {
        if problem.n != 3 || problem.nu != 1.0 || reference.wave.n() != 3 {
            return Err(Error::Argument("closed-form estimates exist only for n = 3, nu = 1".into()));
        }
        if t < self.valid_from.max(reference.t_min) {
            return Err(Error::Domain(format!("estimate needs t >= {}, got {t}", self.valid_from)));
        }
        Ok(())
    }

    /// Signed amplitudes (before the periodic factor) of every term.
    fn amplitudes(&self, reference: &ReferenceOscillation, h: f64, t: f64) -> Vec<(u32, [f64; 2])> {
        let (c1, _, chi, _) = reference.sd_parameters();
        self.terms
            .iter()
            .map(|term| {
                let amp = |c: &EnvelopeTerm| {
                    let chi = if c.uses_chi { chi } else { 1.0 };
                    c.coefficient.to_f64().unwrap_or(f64::NAN)
                        * std::f64::consts::SQRT_2
                        * c1.powi(c.c1_power)
                        * chi
                        * t.powf(c.t_exponent.to_f64().unwrap_or(f64::NAN))
                        * h.powi(term.h_power as i32)
                };
                (term.h_power, [amp(&term.components[0]), amp(&term.components[1])])
            })
            .collect()
    }

    /// The estimate of `E_h(t)`, signed and with its oscillation.
    pub fn evaluate(
        &self,
        problem: &EmdenFowlerProblem,
        reference: &ReferenceOscillation,
        h: f64,
        t: f64,
    ) -> Result<EstimateValue> {
        self.check(problem, reference, t)?;
        let phase = reference.sd_phase(problem, t);
        let (sd, sdp) = reference.sd_eval(phase);
        let shape = [sdp, sd * sd * sd];
        let mut full = [0.0; 2];
        let mut leading = [0.0; 2];
        let lowest = self.terms.iter().map(|t| t.h_power).min().unwrap_or(0);
        for (p, amp) in self.amplitudes(reference, h, t) {
            for i in 0..2 {
                full[i] += amp[i] * shape[i];
                if p == lowest {
                    leading[i] += amp[i] * shape[i];
                }
            }
        }
        Ok(EstimateValue { full, leading })
    }

    /// Peak of `|E_h|` over the oscillation passing through `t`.
    pub fn envelope(&self, problem: &EmdenFowlerProblem, reference: &ReferenceOscillation, h: f64, t: f64) -> Result<EstimateValue> {
        self.check(problem, reference, t)?;
        let mut full = [0.0; 2];
        let mut leading = [0.0; 2];
        let lowest = self.terms.iter().map(|t| t.h_power).min().unwrap_or(0);
        for (p, amp) in self.amplitudes(reference, h, t) {
            for i in 0..2 {
                full[i] += amp[i];
                if p == lowest {
                    leading[i] += amp[i];
                }
            }
        }
        let peaks = [PhaseShape::SdPrime.peak(), PhaseShape::SdCubed.peak()];
        Ok(EstimateValue {
            full: [full[0].abs() * peaks[0], full[1].abs() * peaks[1]],
            leading: [leading[0].abs() * peaks[0], leading[1].abs() * peaks[1]],
        })
    }
}

/// The closed-form estimate of `method_id` at time `t`.
pub fn closed_form_estimate_ef(
    method_id: &str,
    problem: &EmdenFowlerProblem,
    reference: &ReferenceOscillation,
    h: f64,
    t: f64,
) -> Result<EstimateValue> {
    ErrorEstimate::closed_form(method_id)?.evaluate(problem, reference, h, t)
}
