use std::f64::consts::TAU;
use std::sync::Arc;

use super::emden::EmdenFowlerProblem;
use crate::error::{Error, Result};
use crate::rk::{builtin, OdeSystem, Stepper, Trajectory};

/// `2^(1/4)`, the scale between `w₃` and the Jacobi function `sd(·|½)`.
pub const SD_SCALE: f64 = 1.189_207_115_002_721;

/// Samples per period of the stored `w_n` table.
pub const WAVE_RESOLUTION: usize = 1 << 14;

const ENERGY_TOLERANCE: f64 = 1e-9;
const SUBSTEPS: usize = 4;

/// `u'' + u^n = 0` as a first-order system.
struct Normalized {
    n: i32,
}

impl OdeSystem for Normalized {
    fn dimension(&self) -> usize {
        2
    }
    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0].powi(self.n);
    }
    fn jacobian(&self, y: &[f64], jac: &mut [f64]) {
        jac.copy_from_slice(&[0.0, 1.0, -(self.n as f64) * y[0].powi(self.n - 1), 0.0]);
    }
}

/// One period of `w_n`, the solution of `u'' + u^n = 0` with `u(0) = 0`,
/// `u'(0) = 1`, sampled uniformly and interpolated by cubic Hermite pieces.
#[derive(Clone, Debug)]
pub struct WaveTable {
    n: u32,
    period: f64,
    chi: f64,
    spacing: f64,
    w: Vec<f64>,
    wp: Vec<f64>,
    max_energy_residual: f64,
}

/// Builds the table of `w_n` with `resolution` samples per period.
///
/// The half period is located as the first positive zero of `w` and refined
/// by root bracketing on the length of the final RK4 step; the table is then
/// filled by RK4 with several substeps per sample. Fails if the invariant
/// `w'² + 2 w^(n+1)/(n+1) = 1` drifts by more than `1e-9`.
pub fn wn_build(n: u32, resolution: usize) -> Result<WaveTable> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::Argument(format!("n must be an odd integer above 1, got {n}")));
    }
    if resolution < 64 {
        return Err(Error::Argument(format!("resolution {resolution} is too coarse")));
    }
    let sys = Normalized { n: n as i32 };
    let rk4 = builtin("rk4")?;
    let mut stepper = Stepper::new(&rk4, 2);

    // march to the first sign change of w after t = 0
    let h = 2.5e-4;
    let mut y = [0.0, 1.0];
    let mut t = 0.0;
    loop {
        let mut next = y;
        stepper.step(&sys, &mut next, h);
        if next[0] <= 0.0 {
            break;
        }
        y = next;
        t += h;
        if t > 1e3 {
            return Err(Error::Resolution("w_n does not return to zero".into()));
        }
    }
    let w_after = |tau: f64, stepper: &mut Stepper| {
        let mut z = y;
        stepper.step(&sys, &mut z, tau);
        z[0]
    };
    // Illinois variant of regula falsi on the last step length
    let (mut lo, mut hi) = (0.0, h);
    let (mut flo, mut fhi) = (y[0], w_after(h, &mut stepper));
    let mut side = 0;
    let mut tau = hi;
    for _ in 0..100 {
        tau = (lo * fhi - hi * flo) / (fhi - flo);
        let f = w_after(tau, &mut stepper);
        if f == 0.0 || (hi - lo) < 1e-17 {
            break;
        }
        if f > 0.0 {
            lo = tau;
            flo = f;
            if side == -1 {
                fhi /= 2.0;
            }
            side = -1;
        } else {
            hi = tau;
            fhi = f;
            if side == 1 {
                flo /= 2.0;
            }
            side = 1;
        }
        if (hi - lo).abs() < 1e-16 {
            break;
        }
    }
    let period = 2.0 * (t + tau);

    let spacing = period / resolution as f64;
    let sub = spacing / SUBSTEPS as f64;
    let mut w = Vec::with_capacity(resolution);
    let mut wp = Vec::with_capacity(resolution);
    let mut z = [0.0f64, 1.0];
    let np1 = n as f64 + 1.0;
    let mut max_residual: f64 = 0.0;
    for _ in 0..resolution {
        let residual = (z[1] * z[1] + 2.0 * z[0].powi(n as i32 + 1) / np1 - 1.0).abs();
        max_residual = max_residual.max(residual);
        if residual > ENERGY_TOLERANCE {
            return Err(Error::Resolution(format!("energy drift {residual:e} exceeds {ENERGY_TOLERANCE:e}")));
        }
        w.push(z[0]);
        wp.push(z[1]);
        for _ in 0..SUBSTEPS {
            stepper.step(&sys, &mut z, sub);
        }
    }
    if z[0].abs() > 1e-8 || (z[1] - 1.0).abs() > 1e-8 {
        return Err(Error::Resolution(format!("table does not close after one period: ({}, {})", z[0], z[1])));
    }
    let chi = w.iter().map(|x| x * x).sum::<f64>() / resolution as f64;
    Ok(WaveTable { n, period, chi, spacing, w, wp, max_energy_residual: max_residual })
}

impl WaveTable {
    pub fn n(&self) -> u32 {
        self.n
    }

    /// The period `4K`.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Mean of `w²` over one period.
    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn resolution(&self) -> usize {
        self.w.len()
    }

    /// Largest deviation from the energy identity over the stored samples.
    pub fn max_energy_residual(&self) -> f64 {
        self.max_energy_residual
    }

    /// Stored samples `(θ_k, w(θ_k), w'(θ_k))`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.w.len()).map(move |k| (k as f64 * self.spacing, self.w[k], self.wp[k]))
    }

    fn wpp(&self, w: f64) -> f64 {
        -w.powi(self.n as i32)
    }

    /// `(w(θ), w'(θ))` for any real `θ`.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let len = self.w.len();
        let x = theta.rem_euclid(self.period) / self.spacing;
        let k = (x.floor() as usize).min(len - 1);
        let s = x - k as f64;
        let k1 = (k + 1) % len;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d = self.spacing;
        let w = h00 * self.w[k] + h10 * d * self.wp[k] + h01 * self.w[k1] + h11 * d * self.wp[k1];
        let wp = h00 * self.wp[k]
            + h10 * d * self.wpp(self.w[k])
            + h01 * self.wp[k1]
            + h11 * d * self.wpp(self.w[k1]);
        (w, wp)
    }

    pub fn w(&self, theta: f64) -> f64 {
        self.eval(theta).0
    }

    pub fn wp(&self, theta: f64) -> f64 {
        self.eval(theta).1
    }

    /// The phase `θ ∈ [0, 4K)` whose point `(w(θ), w'(θ))` is closest to `(p, q)`.
    pub fn phase_of(&self, p: f64, q: f64) -> f64 {
        let mut best = (f64::INFINITY, 0usize);
        for k in 0..self.w.len() {
            let d = (self.w[k] - p).powi(2) + (self.wp[k] - q).powi(2);
            if d < best.0 {
                best = (d, k);
            }
        }
        let nn = self.n as i32;
        let mut theta = best.1 as f64 * self.spacing;
        for _ in 0..8 {
            let (w, wp) = self.eval(theta);
            let wpp = -w.powi(nn);
            let wppp = -(self.n as f64) * w.powi(nn - 1) * wp;
            let g = (w - p) * wp + (wp - q) * wpp;
            let dg = wp * wp + (w - p) * wpp + wpp * wpp + (wp - q) * wppp;
            if dg <= 0.0 {
                break;
            }
            let step = g / dg;
            theta -= step.clamp(-self.spacing, self.spacing);
            if step.abs() < 1e-15 {
                break;
            }
        }
        theta.rem_euclid(self.period)
    }
}

/// The asymptotic Emden–Fowler solution
/// `y(t) ≈ A c₁^(2/(n−1)) t^(−γ) w_n(c₁ t^(1+2γ) + c₂)` for a particular
/// trajectory, with `A = (1+2γ)^(2/(n−1))`.
#[derive(Clone, Debug)]
pub struct ReferenceOscillation {
    pub wave: Arc<WaveTable>,
    pub c1: f64,
    pub c2: f64,
    /// Earliest time at which the asymptotic form is evaluated.
    pub t_min: f64,
}

impl ReferenceOscillation {
    pub fn new(wave: Arc<WaveTable>, c1: f64, c2: f64) -> Self {
        ReferenceOscillation { wave, c1, c2, t_min: 1.0 }
    }

    pub fn period4k(&self) -> f64 {
        self.wave.period()
    }

    pub fn chi(&self) -> f64 {
        self.wave.chi()
    }

    /// The fast phase `c₁ t^(1+2γ) + c₂`.
    pub fn phase(&self, problem: &EmdenFowlerProblem, t: f64) -> f64 {
        self.c1 * t.powf(problem.beta()) + self.c2
    }

    /// Asymptotic `(y(t), y'(t))`, keeping only leading terms.
    pub fn solution(&self, problem: &EmdenFowlerProblem, t: f64) -> [f64; 2] {
        let n = problem.n as f64;
        let q = 2.0 / (n - 1.0);
        let (w, wp) = self.wave.eval(self.phase(problem, t));
        let a = problem.scale();
        let g = problem.gamma();
        [
            a * self.c1.powf(q) * t.powf(-g) * w,
            a * problem.beta() * self.c1.powf(1.0 + q) * t.powf(g) * wp,
        ]
    }

    /// For `n = 3`, `w₃(x) = 2^(−1/4) sd(2^(1/4) x | ½)`. Writing the
    /// asymptotic solution in terms of `sd` rescales the parameters: this
    /// returns `(c₁, c₂, χ, 4K)` in that normalisation, where `χ` is the mean
    /// of `sd²` and `4K` the period of `sd`.
    pub fn sd_parameters(&self) -> (f64, f64, f64, f64) {
        let k = SD_SCALE;
        (k * self.c1, k * self.c2, k * k * self.wave.chi(), k * self.wave.period())
    }

    /// `c₁ t^(1+2γ) + c₂` in the `sd` normalisation.
    pub fn sd_phase(&self, problem: &EmdenFowlerProblem, t: f64) -> f64 {
        SD_SCALE * self.phase(problem, t)
    }

    /// `(sd(x|½), sd'(x|½))` from the `w₃` table.
    pub fn sd_eval(&self, x: f64) -> (f64, f64) {
        let (w, wp) = self.wave.eval(x / SD_SCALE);
        (SD_SCALE * w, wp)
    }

    /// Peak value of `|y|` near time `t`.
    pub fn amplitude(&self, problem: &EmdenFowlerProblem, t: f64) -> f64 {
        let n = problem.n as f64;
        let wmax = ((n + 1.0) / 2.0).powf(1.0 / (n + 1.0));
        problem.scale() * self.c1.powf(2.0 / (n - 1.0)) * t.powf(-problem.gamma()) * wmax
    }
}

/// Action-angle coordinates `(u, du/ds, s)` of one trajectory sample.
fn to_slow_coordinates(problem: &EmdenFowlerProblem, y: &[f64]) -> (f64, f64, f64) {
    let t = y[2];
    let (g, beta, a) = (problem.gamma(), problem.beta(), problem.scale());
    let u = y[0] * t.powf(g) / a;
    let up = (y[1] / a + g * t.powf(-g - 1.0) * u) / (beta * t.powf(g));
    (u, up, t.powf(beta))
}

/// Fits `(c₁, c₂)` to an accurate trajectory of the autonomous system.
///
/// The trajectory is mapped to `u'' + u^n ≈ 0` coordinates. `c₁` follows from
/// the energy `E = u^(n+1)/(n+1) + u'²/2 = c₁^(2(n+1)/(n−1)) / 2` averaged over
/// the last three periods; `c₂` is the circular mean of the phase offsets
/// measured on the final period.
pub fn fit_action_angle(
    problem: &EmdenFowlerProblem,
    trajectory: &Trajectory,
    wave: Arc<WaveTable>,
) -> Result<ReferenceOscillation> {
    if wave.n() != problem.n {
        return Err(Error::Argument(format!("w table is for n = {}, problem has n = {}", wave.n(), problem.n)));
    }
    let last = trajectory.states.last().ok_or_else(|| Error::Fit("empty trajectory".into()))?;
    if last[2] < 20.0 {
        return Err(Error::Fit(format!("trajectory ends at t = {}, need at least 20", last[2])));
    }
    let n = problem.n as f64;
    let energy = |u: f64, up: f64| u.powi(problem.n as i32 + 1) / (n + 1.0) + 0.5 * up * up;
    let c1_of = |e: f64| (2.0 * e).powf((n - 1.0) / (2.0 * (n + 1.0)));

    let slow: Vec<(f64, f64, f64)> = trajectory
        .states
        .iter()
        .filter(|y| y[2] >= 1.0)
        .map(|y| to_slow_coordinates(problem, y))
        .collect();
    let (u_end, up_end, s_end) = *slow.last().ok_or_else(|| Error::Fit("no samples after t = 1".into()))?;
    let guess = c1_of(energy(u_end, up_end));
    if !(guess > 0.0) || !guess.is_finite() {
        return Err(Error::Fit("trajectory carries no oscillation energy".into()));
    }
    let slow_period = wave.period() / guess;
    let window: Vec<&(f64, f64, f64)> = slow.iter().filter(|x| x.2 >= s_end - 3.0 * slow_period).collect();
    let crossings = window.windows(2).filter(|p| (p[0].0 > 0.0) != (p[1].0 > 0.0)).count();
    if window.len() < 30 || slow.first().is_none_or(|x| x.2 > s_end - 3.0 * slow_period) || crossings < 4 {
        return Err(Error::Fit("trajectory does not cover three oscillations".into()));
    }
    let mean_e = window.iter().map(|x| energy(x.0, x.1)).sum::<f64>() / window.len() as f64;
    let c1 = c1_of(mean_e);

    let q = 2.0 / (n - 1.0);
    let (su, sup) = (c1.powf(q), c1.powf(1.0 + q));
    let period = wave.period();
    let (mut cx, mut cy) = (0.0, 0.0);
    for &&(u, up, s) in window.iter().filter(|x| x.2 >= s_end - wave.period() / c1) {
        let theta = wave.phase_of(u / su, up / sup);
        let c2 = (theta - c1 * s).rem_euclid(period);
        let ang = TAU * c2 / period;
        cx += ang.cos();
        cy += ang.sin();
    }
    let c2 = (cy.atan2(cx) / TAU * period).rem_euclid(period);
    Ok(ReferenceOscillation::new(wave, c1, c2))
}
