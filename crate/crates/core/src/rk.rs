//! Explicit Runge–Kutta tableaux and fixed-step integration.
//!
//! Tableau entries are exact rationals so they can feed the B-series checks
//! directly; integration converts them to `f64` once. Systems are autonomous:
//! time, when present, is carried as an ordinary state component.

use num_traits::{One, ToPrimitive, Zero};

use crate::bseries::{
    method_order, modified_equation_coeffs, order4_combination, rat, rk_bseries, Rational,
};
use crate::error::{Error, Result};
use crate::trees::{named, RootedTree};

#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    name: String,
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    c: Vec<Rational>,
}

impl ButcherTableau {
    /// Validates shape, explicitness and the row-sum convention `c_i = Σ_j a_ij`.
    pub fn new(
        name: impl Into<String>,
        a: Vec<Vec<Rational>>,
        b: Vec<Rational>,
        c: Vec<Rational>,
    ) -> Result<Self> {
        let s = b.len();
        if s == 0 || c.len() != s || a.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::Argument("tableau dimensions do not match".into()));
        }
        for (i, row) in a.iter().enumerate() {
            if row[i..].iter().any(|x| !x.is_zero()) {
                return Err(Error::Argument(format!("row {} is not strictly lower triangular", i + 1)));
            }
            if row.iter().sum::<Rational>() != c[i] {
                return Err(Error::Argument(format!("row {} does not sum to c_{}", i + 1, i + 1)));
            }
        }
        Ok(ButcherTableau { name: name.into(), a, b, c })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[Vec<Rational>] {
        &self.a
    }

    pub fn b(&self) -> &[Rational] {
        &self.b
    }

    pub fn c(&self) -> &[Rational] {
        &self.c
    }

    /// Order of accuracy, from the B-series coefficients up to order 8.
    pub fn order(&self) -> Result<usize> {
        method_order(&rk_bseries(self, 8)?)
    }
}

fn r(n: i64, d: i64) -> Rational {
    rat(n, d)
}

fn lower(rows: &[&[(i64, i64)]]) -> Vec<Vec<Rational>> {
    let s = rows.len();
    rows.iter()
        .map(|row| {
            let mut v = vec![Rational::zero(); s];
            for (j, &(n, d)) in row.iter().enumerate() {
                v[j] = r(n, d);
            }
            v
        })
        .collect()
}

fn make(name: &str, a: &[&[(i64, i64)]], b: &[(i64, i64)]) -> ButcherTableau {
    let a = lower(a);
    let c = a.iter().map(|row| row.iter().sum()).collect();
    let b = b.iter().map(|&(n, d)| r(n, d)).collect();
    ButcherTableau::new(name, a, b, c).expect("library tableau is valid")
}

/// Runge's second-order midpoint method, Heun's third-order method, the
/// third-order method tuned for the cubic Emden–Fowler oscillator, and the
/// classical fourth-order method.
pub fn builtin_methods() -> Vec<ButcherTableau> {
    vec![
        make("runge2", &[&[], &[(1, 2)]], &[(0, 1), (1, 1)]),
        make("heun3", &[&[], &[(1, 3)], &[(0, 1), (2, 3)]], &[(1, 4), (0, 1), (3, 4)]),
        make("tuned3", &[&[], &[(1, 1)], &[(9, 4), (-3, 4)]], &[(7, 18), (5, 6), (-2, 9)]),
        make(
            "rk4",
            &[&[], &[(1, 2)], &[(0, 1), (1, 2)], &[(0, 1), (0, 1), (1, 1)]],
            &[(1, 6), (1, 3), (1, 3), (1, 6)],
        ),
    ]
}

pub fn builtin(name: &str) -> Result<ButcherTableau> {
    builtin_methods()
        .into_iter()
        .find(|t| t.name == name)
        .ok_or_else(|| Error::Argument(format!("unknown method {name:?} (expected runge2, heun3, tuned3 or rk4)")))
}

/// The explicit three-stage method of order three with second abscissa `c2`
/// whose order-four modified-equation coefficients also satisfy
/// `3b(τ₄ᵃ) − 3b(τ₄ᵇ) + b(τ₄ᶜ) − 4b(blt₄) = 0`.
///
/// The order-three conditions fix the weights and `a32` in terms of `(c2, c3)`;
/// the extra condition is then quadratic in `c3` with roots `c3 = c2`
/// (excluded) and `c3 = 1 + 1/(2 c2)`.
pub fn design_tuned_3stage(c2: &Rational) -> Result<ButcherTableau> {
    let one = Rational::one();
    let two = r(2, 1);
    let three = r(3, 1);
    let six = r(6, 1);
    if c2.is_zero() || *c2 == r(2, 3) || *c2 == r(-1, 2) {
        return Err(Error::DegenerateParameter(format!("c2 = {c2}")));
    }
    let c3 = &one + (&one / (&two * c2));
    if c3 == *c2 {
        return Err(Error::DegenerateParameter(format!("c2 = c3 = {c2}")));
    }
    let b2 = (&three * &c3 - &two) / (&six * c2 * (&c3 - c2));
    let b3 = (&two - &three * c2) / (&six * &c3 * (&c3 - c2));
    let b1 = &one - &b2 - &b3;
    let a32 = &c3 * (&c3 - c2) / (c2 * (&two - &three * c2));
    let a31 = &c3 - &a32;
    let z = Rational::zero();
    let a = vec![
        vec![z.clone(), z.clone(), z.clone()],
        vec![c2.clone(), z.clone(), z.clone()],
        vec![a31, a32, z.clone()],
    ];
    let tableau = ButcherTableau::new(format!("tuned3[c2={c2}]"), a, vec![b1, b2, b3], vec![z, c2.clone(), c3])?;

    let b = modified_equation_coeffs(&rk_bseries(&tableau, 4)?, 4)?;
    let order3 = b.get(&RootedTree::leaf())?.is_one()
        && [named::blt(2), named::bushy3(), named::blt(3)]
            .iter()
            .all(|t| b.get(t).map(|v| v.is_zero()).unwrap_or(false));
    if !order3 || !order4_combination(&b)?.is_zero() {
        return Err(Error::DegenerateParameter(format!("c2 = {c2} violates the tuning conditions")));
    }
    Ok(tableau)
}

/// An autonomous system `y' = f(y)` with its Jacobian.
pub trait OdeSystem {
    fn dimension(&self) -> usize;

    fn rhs(&self, y: &[f64], dy: &mut [f64]);

    /// Row-major `d × d` Jacobian of `f`.
    fn jacobian(&self, y: &[f64], jac: &mut [f64]);

    /// Rejects states outside the domain of `f`.
    fn check_state(&self, _y: &[f64]) -> Result<()> {
        Ok(())
    }
}

impl<T: OdeSystem + ?Sized> OdeSystem for &T {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        (**self).rhs(y, dy)
    }
    fn jacobian(&self, y: &[f64], jac: &mut [f64]) {
        (**self).jacobian(y, jac)
    }
    fn check_state(&self, y: &[f64]) -> Result<()> {
        (**self).check_state(y)
    }
}

/// Samples `y(t0 + k·stride·h)` of a fixed-step run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub h: f64,
    pub stride: usize,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + (k * self.stride) as f64 * self.h
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(|k| self.time(k))
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Component `i` of every sample.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|y| y[i]).collect()
    }
}

/// A tableau converted to `f64` with reusable stage storage.
pub struct Stepper {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

impl Stepper {
    pub fn new(tableau: &ButcherTableau, dimension: usize) -> Self {
        let f = |x: &Rational| x.to_f64().expect("finite tableau entry");
        Stepper {
            a: tableau.a.iter().map(|row| row.iter().map(f).collect()).collect(),
            b: tableau.b.iter().map(f).collect(),
            k: vec![vec![0.0; dimension]; tableau.stages()],
            tmp: vec![0.0; dimension],
        }
    }

    /// Advances `y` in place by one step of size `h`.
    pub fn step<S: OdeSystem + ?Sized>(&mut self, ode: &S, y: &mut [f64], h: f64) {
        let s = self.b.len();
        for i in 0..s {
            self.tmp.copy_from_slice(y);
            for j in 0..i {
                let aij = self.a[i][j];
                if aij != 0.0 {
                    for (t, kj) in self.tmp.iter_mut().zip(&self.k[j]) {
                        *t += h * aij * kj;
                    }
                }
            }
            ode.rhs(&self.tmp, &mut self.k[i]);
        }
        for (i, bi) in self.b.iter().enumerate() {
            if *bi != 0.0 {
                for (yv, ki) in y.iter_mut().zip(&self.k[i]) {
                    *yv += h * bi * ki;
                }
            }
        }
    }
}

/// One step of `tableau` from `y`.
pub fn step<S: OdeSystem + ?Sized>(tableau: &ButcherTableau, ode: &S, y: &[f64], h: f64) -> Result<Vec<f64>> {
    if h < 0.0 || !h.is_finite() {
        return Err(Error::Argument(format!("step size must be finite and nonnegative, got {h}")));
    }
    ode.check_state(y)?;
    let mut out = y.to_vec();
    Stepper::new(tableau, y.len()).step(ode, &mut out, h);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: 0, t: h });
    }
    Ok(out)
}

/// Number of whole steps of size `h` in `[t0, t_end]`, forgiving round-off in
/// the ratio.
pub fn step_count(t0: f64, h: f64, t_end: f64) -> Result<usize> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Argument(format!("step size must be positive, got {h}")));
    }
    let ratio = (t_end - t0) / h;
    if !ratio.is_finite() || ratio > 1e12 {
        return Err(Error::Argument(format!("(t_end - t0)/h = {ratio} is out of range")));
    }
    if ratio <= 0.0 {
        return Ok(0);
    }
    let near = ratio.round();
    Ok(if (ratio - near).abs() <= 1e-9 * near.max(1.0) { near as usize } else { ratio.floor() as usize })
}

/// Integrates with fixed step `h`, calling `observe(k, y_k)` after every
/// step (and once for `k = 0`). Stops early when `observe` returns `false`.
pub fn integrate_with<S, F>(
    tableau: &ButcherTableau,
    ode: &S,
    y0: &[f64],
    t0: f64,
    h: f64,
    t_end: f64,
    mut observe: F,
) -> Result<usize>
where
    S: OdeSystem + ?Sized,
    F: FnMut(usize, &[f64]) -> bool,
{
    if y0.len() != ode.dimension() {
        return Err(Error::Argument(format!(
            "initial state has {} components, system has {}",
            y0.len(),
            ode.dimension()
        )));
    }
    ode.check_state(y0)?;
    let n = step_count(t0, h, t_end)?;
    let mut stepper = Stepper::new(tableau, y0.len());
    let mut y = y0.to_vec();
    if !observe(0, &y) {
        return Ok(0);
    }
    for k in 1..=n {
        stepper.step(ode, &mut y, h);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: k, t: t0 + k as f64 * h });
        }
        if !observe(k, &y) {
            return Ok(k);
        }
    }
    Ok(n)
}

/// Fixed-step run sampled every `stride` steps.
pub fn integrate<S: OdeSystem + ?Sized>(
    tableau: &ButcherTableau,
    ode: &S,
    y0: &[f64],
    t0: f64,
    h: f64,
    t_end: f64,
    stride: usize,
) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::Argument("stride must be at least 1".into()));
    }
    let mut states = Vec::new();
    integrate_with(tableau, ode, y0, t0, h, t_end, |k, y| {
        if k % stride == 0 {
            states.push(y.to_vec());
        }
        true
    })?;
    Ok(Trajectory { t0, h, stride, states })
}
