use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use super::{falling, split_products, ElementaryDifferentials};
use crate::error::{Error, Result};
use crate::rk::{OdeSystem, Trajectory};

/// `g^(k)(t)`, the k-th derivative of the stiffness coefficient.
pub type Stiffness = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;
type Phase = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `y'' + g(t) y = 0`.
#[derive(Clone)]
pub struct LinearOscillatorProblem {
    pub name: String,
    g: Stiffness,
    theta: Option<Phase>,
    pub y0: f64,
    pub y0p: f64,
    /// Initial vector of the Liouville–Green approximation.
    pub s0: [f64; 2],
    /// `g` is positive from here on.
    pub t_min: f64,
}

impl fmt::Debug for LinearOscillatorProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOscillatorProblem")
            .field("name", &self.name)
            .field("y0", &self.y0)
            .field("y0p", &self.y0p)
            .field("s0", &self.s0)
            .field("t_min", &self.t_min)
            .finish()
    }
}

impl LinearOscillatorProblem {
    /// A problem with arbitrary `g`; `g(t, k)` must return the k-th derivative.
    pub fn new(
        name: impl Into<String>,
        g: impl Fn(f64, usize) -> f64 + Send + Sync + 'static,
        y0: f64,
        y0p: f64,
        t_min: f64,
    ) -> Self {
        LinearOscillatorProblem {
            name: name.into(),
            g: Arc::new(g),
            theta: None,
            y0,
            y0p,
            s0: [1.0, 0.0],
            t_min,
        }
    }

    /// `y'' + c t^e y = 0` with `c > 0`, `e ≥ 0`.
    pub fn power(c: f64, e: f64, y0: f64, y0p: f64) -> Result<Self> {
        if !(c > 0.0) || !(e >= 0.0) {
            return Err(Error::Argument(format!("power-law stiffness needs c > 0 and e >= 0, got c = {c}, e = {e}")));
        }
        let g = move |t: f64, k: usize| {
            let f = falling(e, k);
            if f == 0.0 {
                0.0
            } else {
                c * f * t.powf(e - k as f64)
            }
        };
        let q = e / 2.0 + 1.0;
        let mut p = LinearOscillatorProblem::new(format!("power:c={c},e={e}"), g, y0, y0p, if e > 0.0 { 1.0 } else { 0.0 });
        p.theta = Some(Arc::new(move |t: f64| c.sqrt() * t.powf(q) / q));
        Ok(p)
    }

    /// The Airy equation `y'' + t y = 0`.
    pub fn airy(y0: f64, y0p: f64) -> Self {
        let mut p = Self::power(1.0, 1.0, y0, y0p).expect("valid constants");
        p.name = "airy".into();
        p
    }

    /// The harmonic oscillator `y'' + ω² y = 0`; here the Liouville–Green
    /// form is exact and `s0 = (ω^(1/2) y0, ω^(−1/2) y0p)`.
    pub fn constant(omega2: f64, y0: f64, y0p: f64) -> Result<Self> {
        let mut p = Self::power(omega2, 0.0, y0, y0p)?;
        p.name = format!("harmonic:omega2={omega2}");
        p.s0 = [y0 * omega2.powf(0.25), y0p * omega2.powf(-0.25)];
        Ok(p)
    }

    pub fn g(&self, t: f64) -> f64 {
        (self.g)(t, 0)
    }

    pub fn g_derivative(&self, t: f64, k: usize) -> f64 {
        (self.g)(t, k)
    }

    /// `θ(t) = ∫₀ᵗ √g(s) ds`, with negative values of `g` counted as zero.
    pub fn theta(&self, t: f64) -> f64 {
        match &self.theta {
            Some(f) => f(t),
            None => integrate_graded(|s| self.g(s).max(0.0).sqrt(), 0.0, t),
        }
    }

    /// `∫_{t0}^{t} g(s)^e ds`.
    pub fn g_power_integral(&self, t0: f64, t: f64, e: f64) -> f64 {
        integrate_graded(|s| self.g(s).max(0.0).powf(e), t0, t)
    }

    pub fn initial_state(&self) -> Vec<f64> {
        vec![self.y0, self.y0p, 0.0]
    }

    pub fn with_s0(mut self, s0: [f64; 2]) -> Self {
        self.s0 = s0;
        self
    }

    /// Estimates `s0` from an accurate trajectory by undoing the scaling and
    /// rotation on every sample in `[t_from, ∞)` and averaging.
    pub fn fit_s0(&self, trajectory: &Trajectory, t_from: f64) -> Result<[f64; 2]> {
        let mut acc = [0.0; 2];
        let mut count = 0usize;
        for y in trajectory.states.iter().filter(|y| y[2] >= t_from.max(self.t_min)) {
            let g = self.g(y[2]);
            if g <= 0.0 {
                continue;
            }
            let v = [y[0] * g.powf(0.25), y[1] * g.powf(-0.25)];
            let (s, c) = self.theta(y[2]).sin_cos();
            // R(θ)⁻¹ = R(−θ)
            acc[0] += c * v[0] - s * v[1];
            acc[1] += s * v[0] + c * v[1];
            count += 1;
        }
        if count == 0 {
            return Err(Error::Fit(format!("no samples with positive g after t = {t_from}")));
        }
        Ok([acc[0] / count as f64, acc[1] / count as f64])
    }
}

/// Composite 5-point Gauss–Legendre quadrature on panels that cluster
/// quadratically toward `a`, which copes with `√s`-type endpoint behaviour.
pub(crate) fn integrate_graded(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    if a == b {
        return 0.0;
    }
    let panels = 400;
    let node = |k: usize| a + (b - a) * (k as f64 / panels as f64).powi(2);
    let mut sum = 0.0;
    for k in 0..panels {
        let (lo, hi) = (node(k), node(k + 1));
        let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
        sum += half * X.iter().zip(W).map(|(x, w)| w * f(mid + half * x)).sum::<f64>();
    }
    sum
}

/// `y₁' = y₂`, `y₂' = −g(y₃) y₁`, `y₃' = 1`.
#[derive(Clone, Debug)]
pub struct LinearOscillatorSystem {
    problem: LinearOscillatorProblem,
}

impl LinearOscillatorSystem {
    pub fn new(problem: &LinearOscillatorProblem) -> Self {
        LinearOscillatorSystem { problem: problem.clone() }
    }

    pub fn problem(&self) -> &LinearOscillatorProblem {
        &self.problem
    }
}

impl OdeSystem for LinearOscillatorSystem {
    fn dimension(&self) -> usize {
        3
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -self.problem.g(y[2]) * y[0];
        dy[2] = 1.0;
    }

    fn jacobian(&self, y: &[f64], jac: &mut [f64]) {
        jac.fill(0.0);
        jac[1] = 1.0;
        jac[3] = -self.problem.g(y[2]);
        jac[5] = -self.problem.g_derivative(y[2], 1) * y[0];
    }
}

impl ElementaryDifferentials for LinearOscillatorSystem {
    fn derivative_action(&self, y: &[f64], dirs: &[&[f64]], out: &mut [f64]) {
        let m = dirs.len();
        out[0] = match m {
            0 => y[1],
            1 => dirs[0][1],
            _ => 0.0,
        };
        out[2] = if m == 0 { 1.0 } else { 0.0 };
        // g(y₃) y₁ is linear in y₁, so at most one direction hits y₁
        let sums = split_products(dirs, 0, 2);
        let mut acc = self.problem.g_derivative(y[2], m) * y[0] * sums[0];
        if m >= 1 {
            acc += self.problem.g_derivative(y[2], m - 1) * sums[1];
        }
        out[1] = -acc;
    }
}

/// `R(θ) = [[cos θ, sin θ], [−sin θ, cos θ]]` applied to `v`.
pub fn rotate(theta: f64, v: [f64; 2]) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
}

/// The Liouville–Green approximation `y = Λ(t) R(θ(t)) s0` and the solution
/// of opposite phase `yR = Λ(t) R(θ(t) + π/2) s0`, with
/// `Λ(t) = diag(g^(−1/4), g^(1/4))`.
pub fn liouville_green(problem: &LinearOscillatorProblem, t: f64) -> Result<([f64; 2], [f64; 2])> {
    let g = problem.g(t);
    if !(g > 0.0) || t < problem.t_min {
        return Err(Error::Domain(format!("Liouville-Green form needs g(t) > 0 and t >= {}, got t = {t}", problem.t_min)));
    }
    let (lo, hi) = (g.powf(-0.25), g.powf(0.25));
    let th = problem.theta(t);
    let a = rotate(th, problem.s0);
    let b = rotate(th + FRAC_PI_2, problem.s0);
    Ok(([lo * a[0], hi * a[1]], [lo * b[0], hi * b[1]]))
}
