use super::wave::ReferenceOscillation;
use super::{falling, split_products, ElementaryDifferentials};
use crate::error::{Error, Result};
use crate::rk::OdeSystem;
use crate::trees::RootedTree;

/// `y'' + t^ν y^n = 0` with `n` odd, `n ≥ 3` and `ν > −(n+3)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmdenFowlerProblem {
    pub n: u32,
    pub nu: f64,
    pub y0: f64,
    pub y0p: f64,
}

impl EmdenFowlerProblem {
    pub fn new(n: u32, nu: f64, y0: f64, y0p: f64) -> Result<Self> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::Argument(format!("n must be an odd integer above 1, got {n}")));
        }
        if !(nu > -(n as f64 + 3.0) / 2.0) || !nu.is_finite() {
            return Err(Error::Argument(format!("nu must exceed -(n+3)/2, got {nu}")));
        }
        Ok(EmdenFowlerProblem { n, nu, y0, y0p })
    }

    /// The configuration used throughout the experiments: `y'' + t y³ = 0`,
    /// `y(0) = 1`, `y'(0) = 0`.
    pub fn cubic() -> Self {
        EmdenFowlerProblem { n: 3, nu: 1.0, y0: 1.0, y0p: 0.0 }
    }

    /// `γ = ν / (n + 3)`.
    pub fn gamma(&self) -> f64 {
        self.nu / (self.n as f64 + 3.0)
    }

    /// Exponent `1 + 2γ` of the slow time `s = t^(1+2γ)`.
    pub fn beta(&self) -> f64 {
        1.0 + 2.0 * self.gamma()
    }

    /// Prefactor `(1+2γ)^(2/(n−1))` of the transformation `y = A t^(−γ) u(t^(1+2γ))`.
    pub fn scale(&self) -> f64 {
        self.beta().powf(2.0 / (self.n as f64 - 1.0))
    }

    /// Initial state `(y(0), y'(0), 0)` of the autonomous system.
    pub fn initial_state(&self) -> Vec<f64> {
        vec![self.y0, self.y0p, 0.0]
    }
}

/// `y₁' = y₂`, `y₂' = −y₃^ν y₁^n`, `y₃' = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmdenFowlerSystem {
    n: u32,
    nu: f64,
    integer_nu: Option<i32>,
}

pub fn ef_system(problem: &EmdenFowlerProblem) -> EmdenFowlerSystem {
    EmdenFowlerSystem::new(problem.n, problem.nu)
}

impl EmdenFowlerSystem {
    pub fn new(n: u32, nu: f64) -> Self {
        let integer_nu = (nu.fract() == 0.0 && nu.abs() < 1e6).then_some(nu as i32);
        EmdenFowlerSystem { n, nu, integer_nu }
    }

    /// `y₃^(ν−j)`.
    fn time_power(&self, y3: f64, j: usize) -> f64 {
        match self.integer_nu {
            Some(k) => y3.powi(k - j as i32),
            None => y3.powf(self.nu - j as f64),
        }
    }

    /// The elementary differential with every derivative in the `y₃`
    /// direction dropped, which keeps only the fastest-growing terms along
    /// oscillating solutions. Each odd-height vertex with `k ≤ n` children
    /// contributes `n!/(n−k)! y₃^ν y₁^(n−k)`; a vertex at even height must
    /// have at most one child and more children make the result vanish.
    pub fn leading_differential(&self, tree: &RootedTree, y: &[f64]) -> [f64; 3] {
        let (f1, f2) = self.leading_parts(tree, y);
        [f1, f2, if tree.order() == 1 { 1.0 } else { 0.0 }]
    }

    fn leading_parts(&self, tree: &RootedTree, y: &[f64]) -> (f64, f64) {
        let children = tree.children();
        let k = children.len();
        let f1 = match k {
            0 => y[1],
            1 => self.leading_parts(&children[0], y).1,
            _ => 0.0,
        };
        let f2 = if k > self.n as usize {
            0.0
        } else {
            let coeff = falling(self.n as f64, k);
            let prod: f64 = children.iter().map(|c| self.leading_parts(c, y).0).product();
            -coeff * self.time_power(y[2], 0) * y[0].powi(self.n as i32 - k as i32) * prod
        };
        (f1, f2)
    }
}

impl OdeSystem for EmdenFowlerSystem {
    fn dimension(&self) -> usize {
        3
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -self.time_power(y[2], 0) * y[0].powi(self.n as i32);
        dy[2] = 1.0;
    }

    fn jacobian(&self, y: &[f64], jac: &mut [f64]) {
        let n = self.n as i32;
        jac.fill(0.0);
        jac[1] = 1.0;
        jac[3] = -(n as f64) * self.time_power(y[2], 0) * y[0].powi(n - 1);
        jac[5] = if self.nu == 0.0 { 0.0 } else { -self.nu * self.time_power(y[2], 1) * y[0].powi(n) };
    }

    fn check_state(&self, y: &[f64]) -> Result<()> {
        if self.integer_nu.is_none() && y[2] < 0.0 {
            return Err(Error::Domain(format!("t^nu undefined for t = {} and nu = {}", y[2], self.nu)));
        }
        Ok(())
    }
}

impl EmdenFowlerSystem {
    fn action(&self, y: &[f64], dirs: &[&[f64]], out: &mut [f64], leading_only: bool) {
        let m = dirs.len();
        out[0] = match m {
            0 => y[1],
            1 => dirs[0][1],
            _ => 0.0,
        };
        out[2] = if m == 0 { 1.0 } else { 0.0 };
        // ∂^i_{y1} ∂^j_{y3} (y3^ν y1^n) = n^(i) ν^(j) y1^(n−i) y3^(ν−j), with i + j = m
        let sums = split_products(dirs, 0, 2);
        let lowest = if leading_only { m } else { 0 };
        let mut acc = 0.0;
        for (i, s) in sums.iter().enumerate().take(m + 1).skip(lowest) {
            let j = m - i;
            let c = falling(self.n as f64, i) * falling(self.nu, j);
            if c != 0.0 && *s != 0.0 {
                acc += c * y[0].powi(self.n as i32 - i as i32) * self.time_power(y[2], j) * s;
            }
        }
        out[1] = -acc;
    }

    /// The same system, but with elementary differentials that drop every
    /// derivative in the `y₃` direction.
    pub fn leading_order(&self) -> LeadingOrder<'_> {
        LeadingOrder(self)
    }
}

impl ElementaryDifferentials for EmdenFowlerSystem {
    fn derivative_action(&self, y: &[f64], dirs: &[&[f64]], out: &mut [f64]) {
        self.action(y, dirs, out, false)
    }
}

/// See [`EmdenFowlerSystem::leading_order`].
#[derive(Clone, Copy, Debug)]
pub struct LeadingOrder<'a>(&'a EmdenFowlerSystem);

impl OdeSystem for LeadingOrder<'_> {
    fn dimension(&self) -> usize {
        3
    }
    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        self.0.rhs(y, dy)
    }
    fn jacobian(&self, y: &[f64], jac: &mut [f64]) {
        self.0.jacobian(y, jac)
    }
    fn check_state(&self, y: &[f64]) -> Result<()> {
        self.0.check_state(y)
    }
}

impl ElementaryDifferentials for LeadingOrder<'_> {
    fn derivative_action(&self, y: &[f64], dirs: &[&[f64]], out: &mut [f64]) {
        self.0.action(y, dirs, out, true)
    }
}

/// `X_t(c)` with its Jacobian and inverse Jacobian with respect to the
/// action-angle parameters `c = (c₁, c₂)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XtMap {
    pub value: [f64; 2],
    pub jacobian: [[f64; 2]; 2],
    pub inverse_jacobian: [[f64; 2]; 2],
}

impl XtMap {
    pub fn apply_inverse(&self, v: &[f64]) -> [f64; 2] {
        let m = &self.inverse_jacobian;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }
}

/// Maps the parameters `(c₁, c₂)` of `reference` to the asymptotic solution
/// `(y, y')` at time `t`.
pub fn xt_map(problem: &EmdenFowlerProblem, reference: &ReferenceOscillation, t: f64) -> Result<XtMap> {
    if t < reference.t_min {
        return Err(Error::Domain(format!("X_t needs t >= {}, got {t}", reference.t_min)));
    }
    let n = problem.n as f64;
    let (g, beta, a) = (problem.gamma(), problem.beta(), problem.scale());
    let q = 2.0 / (n - 1.0);
    let (c1, c2) = (reference.c1, reference.c2);
    let tb = t.powf(beta);
    let (w, wp) = reference.wave.eval(c1 * tb + c2);
    let wpp = -w.powi(problem.n as i32);

    let lead1 = a * c1.powf(q) * t.powf(-g);
    let lead2 = a * beta * c1.powf(1.0 + q) * t.powf(g);
    let value = [lead1 * w, lead2 * wp];
    let d11 = a * q * c1.powf(q - 1.0) * t.powf(-g) * w + lead1 * wp * tb;
    let d12 = lead1 * wp;
    let d21 = a * beta * (1.0 + q) * c1.powf(q) * t.powf(g) * wp + lead2 * wpp * tb;
    let d22 = lead2 * wpp;
    let det = d11 * d22 - d12 * d21;
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Domain(format!("DX_t is singular at t = {t}")));
    }
    Ok(XtMap {
        value,
        jacobian: [[d11, d12], [d21, d22]],
        inverse_jacobian: [[d22 / det, -d12 / det], [-d21 / det, d11 / det]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillators::elementary_differential;
    use crate::trees::{enumerate_trees, named::*};

    fn sys() -> EmdenFowlerSystem {
        ef_system(&EmdenFowlerProblem::cubic())
    }

    #[test]
    fn rhs_values() {
        let mut dy = [0.0; 3];
        sys().rhs(&[1.0, 0.0, 0.0], &mut dy);
        assert_eq!(dy, [0.0, 0.0, 1.0]);
        sys().rhs(&[1.0, 2.0, 4.0], &mut dy);
        assert_eq!(dy, [2.0, -4.0, 1.0]);
    }

    #[test]
    fn jacobian_row() {
        let mut j = [0.0; 9];
        sys().jacobian(&[1.0, 2.0, 4.0], &mut j);
        assert_eq!(&j[3..6], &[-12.0, 0.0, -1.0]);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let s = EmdenFowlerSystem::new(5, 0.5);
        let y = [0.7, -0.3, 2.2];
        let mut j = [0.0; 9];
        s.jacobian(&y, &mut j);
        for col in 0..3 {
            let eps = 1e-6;
            let (mut yp, mut ym) = (y, y);
            yp[col] += eps;
            ym[col] -= eps;
            let (mut fp, mut fm) = ([0.0; 3], [0.0; 3]);
            s.rhs(&yp, &mut fp);
            s.rhs(&ym, &mut fm);
            for row in 0..3 {
                let fd = (fp[row] - fm[row]) / (2.0 * eps);
                assert!((fd - j[row * 3 + col]).abs() <= 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn fractional_nu_rejects_negative_time() {
        let s = EmdenFowlerSystem::new(3, 0.5);
        assert!(matches!(s.check_state(&[1.0, 0.0, -1.0]), Err(Error::Domain(_))));
        assert!(sys().check_state(&[1.0, 0.0, -1.0]).is_ok());
    }

    #[test]
    fn problem_validation() {
        assert!(EmdenFowlerProblem::new(2, 1.0, 1.0, 0.0).is_err());
        assert!(EmdenFowlerProblem::new(1, 1.0, 1.0, 0.0).is_err());
        assert!(EmdenFowlerProblem::new(3, -3.0, 1.0, 0.0).is_err());
        let p = EmdenFowlerProblem::new(3, -2.9, 1.0, 0.0).unwrap();
        assert!(p.gamma() > -0.5);
    }

    // Table of elementary differentials for y'' + t y³ = 0 at a generic state.
    #[test]
    fn full_differentials_of_small_trees() {
        let (y1, y2, y3) = (0.8, -1.3, 2.5);
        let y = [y1, y2, y3];
        let f = |t: &RootedTree| elementary_differential(&sys(), t, &y);
        let close = |a: &[f64], b: [f64; 3]| a.iter().zip(b).all(|(x, e)| (x - e).abs() < 1e-12);

        assert!(close(&f(&blt(2)), [-y1.powi(3) * y3, -3.0 * y1 * y1 * y2 * y3 - y1.powi(3), 0.0]));
        assert!(close(&f(&bushy3()), [0.0, -6.0 * y1 * y2 * y2 * y3 - 6.0 * y1 * y1 * y2, 0.0]));
        assert!(close(&f(&blt(3)), [-3.0 * y1 * y1 * y2 * y3 - y1.powi(3), 3.0 * y1.powi(5) * y3 * y3, 0.0]));
        assert!(close(&f(&bushy4()), [0.0, -6.0 * y2.powi(3) * y3 - 18.0 * y1 * y2 * y2, 0.0]));
        assert!(close(
            &f(&tau4b()),
            [0.0, 6.0 * y1.powi(4) * y2 * y3 * y3 + 3.0 * y1.powi(5) * y3, 0.0]
        ));
        assert!(close(&f(&tau4c()), [-6.0 * y1 * y2 * y2 * y3 - 6.0 * y1 * y1 * y2, 0.0, 0.0]));
        assert!(close(
            &f(&blt(4)),
            [3.0 * y1.powi(5) * y3 * y3, 9.0 * y1.powi(4) * y2 * y3 * y3 + 3.0 * y1.powi(5) * y3, 0.0]
        ));
    }

    #[test]
    fn leading_differentials_drop_time_derivatives() {
        let (y1, y2, y3) = (0.8, -1.3, 2.5);
        let y = [y1, y2, y3];
        let s = sys();
        let l = s.leading_differential(&blt(2), &y);
        assert!((l[0] + y1.powi(3) * y3).abs() < 1e-12);
        assert!((l[1] + 3.0 * y1 * y1 * y2 * y3).abs() < 1e-12);
        let l = s.leading_differential(&bushy3(), &y);
        assert!((l[1] + 6.0 * y1 * y2 * y2 * y3).abs() < 1e-12);
    }

    #[test]
    fn too_many_children_at_odd_height_vanish() {
        // a chain whose odd-height vertex carries four leaves, with n = 3
        let t = RootedTree::from_children(vec![RootedTree::bushy(5)]);
        let l = sys().leading_differential(&t, &[0.8, -1.3, 2.5]);
        assert_eq!(l, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn only_tall_trees_have_two_nonzero_components() {
        let y = [0.8, -1.3, 2.5];
        for group in enumerate_trees(6).unwrap() {
            for t in group {
                let l = sys().leading_differential(&t, &y);
                let both = l[0] != 0.0 && l[1] != 0.0;
                assert_eq!(both, t.is_tall(), "{t}");
            }
        }
    }

    #[test]
    fn truncated_action_reproduces_leading_recurrence() {
        let s = EmdenFowlerSystem::new(5, 2.0);
        let y = [0.8, -1.3, 2.5];
        for group in enumerate_trees(6).unwrap() {
            for t in group {
                let a = s.leading_differential(&t, &y);
                let b = elementary_differential(&s.leading_order(), &t, &y);
                for k in 0..3 {
                    assert!((a[k] - b[k]).abs() <= 1e-12 * (1.0 + a[k].abs()), "{t}");
                }
            }
        }
    }
}
