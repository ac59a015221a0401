use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::oscillators::{DifferentialProgram, ElementaryDifferentials};
use crate::rk::{builtin, integrate_with, OdeSystem, Trajectory};
use crate::trees::RootedTree;

/// Samples of the elementary integral `I_τ(t) = ∫_{t0}^t DΦ_s^t F(τ)(y(s)) ds`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementaryIntegralSample {
    pub tree: RootedTree,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl ElementaryIntegralSample {
    /// Index of the sample at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let (first, last) = (*self.times.first()?, *self.times.last()?);
        if self.times.len() == 1 {
            return ((t - first).abs() < 1e-9).then_some(0);
        }
        let dt = (last - first) / (self.times.len() - 1) as f64;
        let k = ((t - first) / dt).round();
        if k < 0.0 || k as usize >= self.times.len() || (first + k * dt - t).abs() > 1e-6 * dt {
            return None;
        }
        Some(k as usize)
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[i]).collect()
    }
}

/// `y' = f(y)` together with `I_k' = J(y) I_k + F(τ_k)(y)` for every tree.
struct Augmented<'a, S: ?Sized, D: ?Sized> {
    ode: &'a S,
    differentials: &'a D,
    program: DifferentialProgram,
    trees: usize,
    scratch: RefCell<(Vec<f64>, Vec<f64>)>,
}

impl<S, D> OdeSystem for Augmented<'_, S, D>
where
    S: OdeSystem + ?Sized,
    D: ElementaryDifferentials + ?Sized,
{
    fn dimension(&self) -> usize {
        self.ode.dimension() * (1 + self.trees)
    }

    fn rhs(&self, z: &[f64], dz: &mut [f64]) {
        let d = self.ode.dimension();
        let (y, integrals) = z.split_at(d);
        let (dy, dints) = dz.split_at_mut(d);
        self.ode.rhs(y, dy);
        let mut scratch = self.scratch.borrow_mut();
        let (jac, values) = &mut *scratch;
        self.ode.jacobian(y, jac);
        self.program.evaluate(self.differentials, y, values);
        for k in 0..self.trees {
            let f = self.program.value(k, values);
            let i = &integrals[k * d..(k + 1) * d];
            for (r, out) in dints[k * d..(k + 1) * d].iter_mut().enumerate() {
                *out = f[r] + jac[r * d..(r + 1) * d].iter().zip(i).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }

    /// Central differences of `rhs`; the integrators never call this.
    fn jacobian(&self, z: &[f64], jac: &mut [f64]) {
        let n = z.len();
        let (mut zp, mut zm) = (z.to_vec(), z.to_vec());
        let (mut fp, mut fm) = (vec![0.0; n], vec![0.0; n]);
        for c in 0..n {
            let eps = 1e-6 * (1.0 + z[c].abs());
            zp[c] = z[c] + eps;
            zm[c] = z[c] - eps;
            self.rhs(&zp, &mut fp);
            self.rhs(&zm, &mut fm);
            for r in 0..n {
                jac[r * n + c] = (fp[r] - fm[r]) / (2.0 * eps);
            }
            zp[c] = z[c];
            zm[c] = z[c];
        }
    }

    fn check_state(&self, z: &[f64]) -> Result<()> {
        self.ode.check_state(&z[..self.ode.dimension()])
    }
}

/// Computes the elementary integrals of several trees at once by integrating
/// the variational equation `I' = J(y) I + F(τ)(y)`, `I(t0) = 0`, alongside
/// `y` with RK4 at step `h_fine`. Every `stride`-th step is sampled.
///
/// `ode` supplies `f` and its Jacobian; `differentials` supplies `F(τ)`,
/// which lets the leading-order recurrences stand in for the exact ones.
#[allow(clippy::too_many_arguments)]
pub fn elementary_integrals_numeric<S, D>(
    ode: &S,
    differentials: &D,
    trees: &[RootedTree],
    y0: &[f64],
    t0: f64,
    t_end: f64,
    h_fine: f64,
    stride: usize,
) -> Result<(Trajectory, Vec<ElementaryIntegralSample>)>
where
    S: OdeSystem + ?Sized,
    D: ElementaryDifferentials + ?Sized,
{
    if stride == 0 {
        return Err(Error::Argument("stride must be at least 1".into()));
    }
    let d = ode.dimension();
    if y0.len() != d || differentials.dimension() != d {
        return Err(Error::Argument(format!("initial state has {} components, system has {d}", y0.len())));
    }
    let program = DifferentialProgram::new(trees, d);
    let scratch = RefCell::new((vec![0.0; d * d], vec![0.0; program.scratch_len()]));
    let aug = Augmented { ode, differentials, program, trees: trees.len(), scratch };
    let mut z0 = vec![0.0; aug.dimension()];
    z0[..d].copy_from_slice(y0);
    let mut states = Vec::new();
    let mut times = Vec::new();
    let mut values: Vec<Vec<Vec<f64>>> = vec![Vec::new(); trees.len()];
    integrate_with(&builtin("rk4")?, &aug, &z0, t0, h_fine, t_end, |k, z| {
        if k % stride == 0 {
            states.push(z[..d].to_vec());
            times.push(t0 + k as f64 * h_fine);
            for (j, v) in values.iter_mut().enumerate() {
                v.push(z[(j + 1) * d..(j + 2) * d].to_vec());
            }
        }
        true
    })?;
    let samples = trees
        .iter()
        .zip(values)
        .map(|(tree, values)| ElementaryIntegralSample { tree: tree.clone(), times: times.clone(), values })
        .collect();
    Ok((Trajectory { t0, h: h_fine, stride, states }, samples))
}

/// `I_τ` for a single tree using the system's exact elementary differentials.
pub fn elementary_integral_numeric<S>(
    ode: &S,
    tree: &RootedTree,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    h_fine: f64,
    stride: usize,
) -> Result<ElementaryIntegralSample>
where
    S: ElementaryDifferentials + ?Sized,
{
    let trees = [tree.clone()];
    let (_, mut s) = elementary_integrals_numeric(ode, ode, &trees, y0, t0, t_end, h_fine, stride)?;
    Ok(s.remove(0))
}
