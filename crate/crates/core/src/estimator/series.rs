use num_traits::{ToPrimitive, Zero};

use super::ElementaryIntegralSample;
use crate::bseries::CoefficientMap;
use crate::error::{Error, Result};
use crate::oscillators::{liouville_green, LinearOscillatorProblem};
use crate::trees::{catalog, named::blt};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `Σ h^(ρ−1) b(τ) α(τ)/ρ! · I_τ(t)` over `2 ≤ ρ ≤ max_order`.
///
/// Trees with `b(τ) = 0` contribute nothing and need no integral; any other
/// tree missing from `integrals` is a coverage error. `t` must lie on the
/// common sample grid.
pub fn error_series(
    b: &CoefficientMap,
    integrals: &[ElementaryIntegralSample],
    h: f64,
    t: f64,
    max_order: usize,
) -> Result<Vec<f64>> {
    if max_order > b.max_order() {
        return Err(Error::Coverage { covered: b.max_order(), requested: max_order });
    }
    let cat = catalog();
    let mut sum: Option<Vec<f64>> = None;
    for id in cat.count_up_to(1)..cat.count_up_to(max_order) {
        let tree = cat.tree(id);
        let coeff = b.get(tree)?;
        if coeff.is_zero() {
            continue;
        }
        let sample = integrals
            .iter()
            .find(|s| &s.tree == tree)
            .ok_or(Error::Coverage { covered: tree.order() - 1, requested: tree.order() })?;
        let k = sample
            .index_of(t)
            .ok_or_else(|| Error::Domain(format!("t = {t} is not on the sample grid of tree {tree}")))?;
        let rho = tree.order();
        let w = h.powi(rho as i32 - 1) * coeff.to_f64().unwrap_or(f64::NAN) * tree.stats().alpha as f64 / factorial(rho);
        let acc = sum.get_or_insert_with(|| vec![0.0; sample.values[k].len()]);
        for (a, v) in acc.iter_mut().zip(&sample.values[k]) {
            *a += w * v;
        }
    }
    let dim = integrals.first().and_then(|s| s.values.first()).map_or(0, Vec::len);
    Ok(sum.unwrap_or_else(|| vec![0.0; dim]))
}

/// The two bracketed scalar factors of the linear-oscillator estimate:
/// `E_h(t) ≈ odd · yR(t) + even · y(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearEstimate {
    pub odd: f64,
    pub even: f64,
    /// `odd · yR + even · y`.
    pub error: [f64; 2],
    /// The `h^p` term alone; it vanishes when `b(blt_{p+1}) = 0`.
    pub leading: [f64; 2],
}

/// Global-error estimate for `y'' + g(t) y = 0`, valid when `g` is positive
/// and slowly varying for large `t` (`|g^(ℓ)| = o(g^(1/ℓ))`; not checked):
///
/// `Σ_{p≤2r<2p} (−1)^r b(blt_{2r+1})/(2r+1)! h^{2r} ∫₀ᵗ g^{r+½} · yR`
/// `+ Σ_{p≤2r+1<2p} (−1)^{r+1} b(blt_{2r+2})/(2r+2)! h^{2r+1} ∫₀ᵗ g^{r+1} · y`.
pub fn linosc_estimate(problem: &LinearOscillatorProblem, b: &CoefficientMap, p: usize, h: f64, t: f64) -> Result<LinearEstimate> {
    if 2 * p > b.max_order() {
        return Err(Error::Coverage { covered: b.max_order(), requested: 2 * p });
    }
    let (y, yr) = liouville_green(problem, t)?;
    let mut odd = 0.0;
    let mut even = 0.0;
    let mut leading = [0.0; 2];
    for k in p..2 * p {
        let r = k / 2;
        let bk = b.get(&blt(k + 1))?.to_f64().unwrap_or(f64::NAN);
        let (value, basis) = if k % 2 == 0 {
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            (sign * bk / factorial(k + 1) * h.powi(k as i32) * problem.g_power_integral(0.0, t, r as f64 + 0.5), yr)
        } else {
            let sign = if r % 2 == 0 { -1.0 } else { 1.0 };
            (sign * bk / factorial(k + 1) * h.powi(k as i32) * problem.g_power_integral(0.0, t, r as f64 + 1.0), y)
        };
        if k % 2 == 0 {
            odd += value;
        } else {
            even += value;
        }
        if k == p {
            leading = [value * basis[0], value * basis[1]];
        }
    }
    Ok(LinearEstimate {
        odd,
        even,
        error: [odd * yr[0] + even * y[0], odd * yr[1] + even * y[1]],
        leading,
    })
}

/// The order `p` of the method with modified-equation coefficients `b`.
pub fn order_of_modified(b: &CoefficientMap) -> Result<usize> {
    // b vanishes on 2 ≤ ρ ≤ p exactly when a matches the exact flow there
    let cat = catalog();
    for order in 2..=b.max_order() {
        if cat.ids_of_order(order).any(|id| !b.get(cat.tree(id)).map(|v| v.is_zero()).unwrap_or(true)) {
            return Ok(order - 1);
        }
    }
    Ok(b.max_order())
}
