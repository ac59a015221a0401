//! B-series coefficient algebra.
//!
//! A coefficient map `c` stands for the formal series
//!
//! ```text
//! B(c, y) = c(∅) y + Σ_τ h^ρ(τ) / ρ(τ)! · α(τ) · c(τ) · F(τ)(y)
//! ```
//!
//! With this normalisation the exact flow has `c(τ) = 1` for every tree and a
//! Runge–Kutta method has `c(τ) = γ(τ) φ(τ)`, with `φ` the elementary weight.
//!
//! The Lie derivative and the modified-equation recursion are evaluated in
//! the density-scaled form `ĉ(τ) = c(τ) / γ(τ)`, in which differentiating
//! along a field reduces to a plain sum over the edge cuts of each tree.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rk::ButcherTableau;
use crate::trees::{catalog, named, RootedTree, MAX_ORDER};

pub type Rational = BigRational;

pub(crate) fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact coefficients on every tree up to `max_order`, plus the value at the
/// empty tree.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMap {
    empty: Rational,
    values: Vec<Rational>,
    max_order: usize,
}

impl CoefficientMap {
    /// All entries zero.
    pub fn zeros(max_order: usize) -> Result<Self> {
        check_order(max_order)?;
        let n = catalog().count_up_to(max_order);
        Ok(CoefficientMap { empty: Rational::zero(), values: vec![Rational::zero(); n], max_order })
    }

    /// Builds a map from a function of the tree.
    pub fn from_fn(
        max_order: usize,
        empty: Rational,
        mut f: impl FnMut(&RootedTree) -> Rational,
    ) -> Result<Self> {
        check_order(max_order)?;
        let cat = catalog();
        let values = (0..cat.count_up_to(max_order)).map(|id| f(cat.tree(id))).collect();
        Ok(CoefficientMap { empty, values, max_order })
    }

    /// The field `B(c, y) = h f(y)`: one on the single vertex, zero elsewhere.
    pub fn unit_field(max_order: usize) -> Result<Self> {
        let mut m = Self::zeros(max_order)?;
        m.values[0] = Rational::one();
        Ok(m)
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn empty_value(&self) -> &Rational {
        &self.empty
    }

    pub fn set_empty_value(&mut self, v: Rational) {
        self.empty = v;
    }

    pub fn get(&self, tree: &RootedTree) -> Result<&Rational> {
        self.values.get(self.index(tree)?).ok_or(Error::Coverage {
            covered: self.max_order,
            requested: tree.order(),
        })
    }

    pub fn set(&mut self, tree: &RootedTree, v: Rational) -> Result<()> {
        let i = self.index(tree)?;
        self.values[i] = v;
        Ok(())
    }

    fn index(&self, tree: &RootedTree) -> Result<usize> {
        if tree.order() > self.max_order {
            return Err(Error::Coverage { covered: self.max_order, requested: tree.order() });
        }
        Ok(catalog().id(tree).expect("catalog holds every tree up to MAX_ORDER"))
    }

    /// Entries in catalog order (by tree order, then level sequence).
    pub fn iter(&self) -> impl Iterator<Item = (&'static RootedTree, &Rational)> {
        let cat = catalog();
        self.values.iter().enumerate().map(move |(i, v)| (cat.tree(i), v))
    }

    /// Drops entries above `max_order`.
    pub fn truncate(&self, max_order: usize) -> Result<Self> {
        if max_order > self.max_order {
            return Err(Error::Coverage { covered: self.max_order, requested: max_order });
        }
        check_order(max_order)?;
        Ok(CoefficientMap {
            empty: self.empty.clone(),
            values: self.values[..catalog().count_up_to(max_order)].to_vec(),
            max_order,
        })
    }

    fn scaled(&self) -> Vec<Rational> {
        let cat = catalog();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v / int(cat.tree(i).stats().gamma))
            .collect()
    }

    fn from_scaled(empty: Rational, scaled: Vec<Rational>, max_order: usize) -> Self {
        let cat = catalog();
        let values = scaled
            .into_iter()
            .enumerate()
            .map(|(i, v)| v * int(cat.tree(i).stats().gamma))
            .collect();
        CoefficientMap { empty, values, max_order }
    }
}

fn check_order(max_order: usize) -> Result<()> {
    if !(1..=MAX_ORDER).contains(&max_order) {
        return Err(Error::Argument(format!(
            "coefficient order must lie in 1..={MAX_ORDER}, got {max_order}"
        )));
    }
    Ok(())
}

/// Coefficients of the exact flow: one everywhere, including the empty tree.
pub fn exact_solution_coeffs(max_order: usize) -> Result<CoefficientMap> {
    CoefficientMap::from_fn(max_order, Rational::one(), |_| Rational::one())
}

/// Elementary weight `φ(τ) = Σ b_i Φ_i(τ)` of an explicit tableau.
pub fn elementary_weight(tableau: &ButcherTableau, tree: &RootedTree) -> Rational {
    stage_weights(tableau, tree)
        .iter()
        .zip(tableau.b())
        .map(|(phi, b)| phi * b)
        .sum()
}

/// `Φ_i(τ)` for every stage `i`.
fn stage_weights(tableau: &ButcherTableau, tree: &RootedTree) -> Vec<Rational> {
    let s = tableau.stages();
    let mut phi = vec![Rational::one(); s];
    for child in tree.children() {
        let inner = stage_weights(tableau, child);
        for (i, p) in phi.iter_mut().enumerate() {
            let row: Rational = (0..s).map(|j| &tableau.a()[i][j] * &inner[j]).sum();
            *p *= row;
        }
    }
    phi
}

/// B-series coefficients `a(τ) = γ(τ) φ(τ)` of a Runge–Kutta method.
pub fn rk_bseries(tableau: &ButcherTableau, max_order: usize) -> Result<CoefficientMap> {
    check_order(max_order)?;
    let cat = catalog();
    let n = cat.count_up_to(max_order);
    let s = tableau.stages();

    // (A Φ(τ))_i for every tree; children always precede their parents
    let mut a_phi: Vec<Vec<Rational>> = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for id in 0..n {
        let tree = cat.tree(id);
        let mut phi = vec![Rational::one(); s];
        for child in tree.children() {
            let cid = cat.id(child).expect("child in catalog");
            for (p, q) in phi.iter_mut().zip(&a_phi[cid]) {
                *p *= q;
            }
        }
        let weight: Rational = phi.iter().zip(tableau.b()).map(|(p, b)| p * b).sum();
        values.push(weight * int(tree.stats().gamma));
        a_phi.push(
            (0..s)
                .map(|i| (0..s).map(|j| &tableau.a()[i][j] * &phi[j]).sum())
                .collect(),
        );
    }
    Ok(CoefficientMap { empty: Rational::one(), values, max_order })
}

/// Coefficients of `d/dt B(c, y(t))` along the formal flow of `y' = B(b, y)`.
///
/// In scaled form the derivative on a tree `θ` is `c(∅) b̂(θ)` plus, for every
/// edge of `θ`, the product of `ĉ` on the part kept at the root with `b̂` on
/// the part cut off. The result covers the smaller of the two input orders and
/// vanishes on the empty tree.
pub fn lie_derivative(b: &CoefficientMap, c: &CoefficientMap) -> Result<CoefficientMap> {
    if !b.empty.is_zero() {
        return Err(Error::Argument(format!(
            "the field must vanish on the empty tree, got b(∅) = {}",
            b.empty
        )));
    }
    let max_order = b.max_order.min(c.max_order);
    let n = catalog().count_up_to(max_order);
    let (bs, cs) = (b.scaled(), c.scaled());
    let out = (0..n).map(|id| scaled_derivative_at(id, &c.empty, &cs, &bs)).collect();
    Ok(CoefficientMap::from_scaled(Rational::zero(), out, max_order))
}

fn scaled_derivative_at(id: usize, c_empty: &Rational, cs: &[Rational], bs: &[Rational]) -> Rational {
    let mut acc = c_empty * &bs[id];
    for &(rem, pend) in catalog().cuts(id) {
        if !cs[rem].is_zero() && !bs[pend].is_zero() {
            acc += &cs[rem] * &bs[pend];
        }
    }
    acc
}

/// Coefficients of the modified vector field `(1/h) B(b, ·)` of a method
/// with B-series coefficients `a`, from
/// `b(τ) = a(τ) − Σ_{j=2}^{ρ(τ)} ∂_b^{j−1} b(τ) / j!`.
pub fn modified_equation_coeffs(a: &CoefficientMap, max_order: usize) -> Result<CoefficientMap> {
    check_order(max_order)?;
    if max_order > a.max_order {
        return Err(Error::Coverage { covered: a.max_order, requested: max_order });
    }
    let leaf = a.values[0].clone();
    if !leaf.is_one() {
        return Err(Error::InconsistentMethod(leaf.to_string()));
    }

    let cat = catalog();
    let n = cat.count_up_to(max_order);
    let gamma: Vec<Rational> = (0..n).map(|id| int(cat.tree(id).stats().gamma)).collect();
    let inv_fact: Vec<Rational> = (0..=max_order)
        .map(|j| Rational::new(BigInt::one(), (1..=j as u64).product::<u64>().into()))
        .collect();

    // powers[k][id] holds the scaled value of ∂_b^k b; powers[0] is b itself
    let mut powers: Vec<Vec<Rational>> = vec![vec![Rational::zero(); n]; max_order];
    powers[0][0] = Rational::one();

    for order in 2..=max_order {
        for id in cat.ids_of_order(order) {
            for k in 1..order {
                let mut acc = Rational::zero();
                for &(rem, pend) in cat.cuts(id) {
                    let (lhs, rhs) = (&powers[k - 1][rem], &powers[0][pend]);
                    if !lhs.is_zero() && !rhs.is_zero() {
                        acc += lhs * rhs;
                    }
                }
                powers[k][id] = acc;
            }
            let mut value = a.values[id].clone();
            for j in 2..=order {
                value -= &powers[j - 1][id] * &gamma[id] * &inv_fact[j];
            }
            powers[0][id] = value / &gamma[id];
        }
    }
    let b = powers.swap_remove(0);
    Ok(CoefficientMap::from_scaled(Rational::zero(), b, max_order))
}

/// Largest `p` with `a(τ) = 1` on every tree of order at most `p`.
pub fn method_order(a: &CoefficientMap) -> Result<usize> {
    let cat = catalog();
    for order in 1..=a.max_order {
        if cat.ids_of_order(order).any(|id| !a.values[id].is_one()) {
            return Ok(order - 1);
        }
    }
    Err(Error::Coverage { covered: a.max_order, requested: a.max_order + 1 })
}

/// Coefficients `a − e` of the local error; zero on the empty tree.
pub fn local_error_coeffs(a: &CoefficientMap, max_order: usize) -> Result<CoefficientMap> {
    let mut out = a.truncate(max_order)?;
    out.empty = Rational::zero();
    for v in &mut out.values {
        *v -= Rational::one();
    }
    Ok(out)
}

/// `3 b(τ₄ᵃ) − 3 b(τ₄ᵇ) + b(τ₄ᶜ) − 4 b(blt₄)`: the combination of order-four
/// modified-equation coefficients that multiplies the `h³` term of the global
/// error on the cubic Emden–Fowler oscillator.
pub fn order4_combination(b: &CoefficientMap) -> Result<Rational> {
    Ok(int(3) * b.get(&named::bushy4())? - int(3) * b.get(&named::tau4b())?
        + b.get(&named::tau4c())?
        - int(4) * b.get(&named::blt(4))?)
}
