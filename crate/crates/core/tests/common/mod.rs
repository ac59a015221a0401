//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;
use oscerr::bseries::{CoefficientMap, Rational};
use oscerr::trees::{catalog, RootedTree};
use rand::Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

// ---------------------------------------------------------------------------
// Jacobi elliptic functions by the arithmetic-geometric mean

/// `(sn, cn, dn)(u | m)` by the descending Landen/AGM scheme.
pub fn jacobi(u: f64, m: f64) -> (f64, f64, f64) {
    let mut a = vec![1.0];
    let mut c = vec![m.sqrt()];
    let mut b = (1.0 - m).sqrt();
    while c.last().unwrap().abs() > 1e-17 && a.len() < 40 {
        let (an, bn) = (*a.last().unwrap(), b);
        a.push((an + bn) / 2.0);
        c.push((an - bn) / 2.0);
        b = (an * bn).sqrt();
    }
    let n = a.len() - 1;
    let mut phi = 2f64.powi(n as i32) * a[n] * u;
    let mut prev = phi;
    for k in (1..=n).rev() {
        prev = phi;
        phi = (phi + (c[k] / a[k] * phi.sin()).asin()) / 2.0;
    }
    let (sn, cn) = phi.sin_cos();
    let dn = if n == 0 { 1.0 } else { cn / (prev - phi).cos() };
    (sn, cn, dn)
}

/// Complete elliptic integral of the first kind `K(m) = π / (2 AGM(1, √(1−m)))`.
pub fn complete_k(m: f64) -> f64 {
    let (mut a, mut b) = (1.0f64, (1.0 - m).sqrt());
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let next = ((a + b) / 2.0, (a * b).sqrt());
        a = next.0;
        b = next.1;
    }
    std::f64::consts::PI / (2.0 * a)
}

/// `sd = sn / dn`, with its derivative `cn / dn²`.
pub fn sd(u: f64, m: f64) -> (f64, f64) {
    let (s, c, d) = jacobi(u, m);
    (s / d, c / (d * d))
}

// ---------------------------------------------------------------------------
// Trees by exhaustive labelling

fn tree_from_parents(parents: &[usize], root: usize, n: usize) -> RootedTree {
    fn build(v: usize, kids: &[Vec<usize>]) -> RootedTree {
        if kids[v].is_empty() {
            RootedTree::leaf()
        } else {
            RootedTree::from_children(kids[v].iter().map(|&c| build(c, kids)).collect())
        }
    }
    let mut kids = vec![Vec::new(); n];
    for v in 0..n {
        if v != root {
            kids[parents[v]].push(v);
        }
    }
    build(root, &kids)
}

/// Monotone labellings of every tree with `n` vertices, counted by shape.
/// Every vertex gets a parent with a smaller label, which produces each
/// monotonically labelled tree exactly once.
pub fn monotone_labellings(n: usize) -> HashMap<RootedTree, u64> {
    let mut out = HashMap::new();
    let mut parents = vec![0usize; n];
    fn rec(i: usize, n: usize, parents: &mut Vec<usize>, out: &mut HashMap<RootedTree, u64>) {
        if i == n {
            *out.entry(tree_from_parents(parents, 0, n)).or_insert(0) += 1;
            return;
        }
        for p in 0..i {
            parents[i] = p;
            rec(i + 1, n, parents, out);
        }
    }
    rec(1, n, &mut parents, &mut out);
    out
}

/// All labellings (rooted, any labels) counted by shape; the count of a
/// shape is `n!/σ`.
pub fn all_labellings(n: usize) -> HashMap<RootedTree, u64> {
    let mut out = HashMap::new();
    let total = n.pow(n as u32 - 1);
    for root in 0..n {
        'parents: for code in 0..total {
            let mut parents = vec![usize::MAX; n];
            let mut rest = code;
            for (v, p) in parents.iter_mut().enumerate() {
                if v != root {
                    *p = rest % n;
                    rest /= n;
                }
            }
            // every vertex must reach the root without revisiting
            for v in 0..n {
                let mut u = v;
                for _ in 0..n {
                    if u == root {
                        break;
                    }
                    u = parents[u];
                }
                if u != root {
                    continue 'parents;
                }
            }
            if (0..n).any(|v| v != root && parents[v] == v) {
                continue;
            }
            *out.entry(tree_from_parents(&parents, root, n)).or_insert(0) += 1;
        }
    }
    out
}

/// Density as the product of subtree sizes.
pub fn density(tree: &RootedTree) -> u64 {
    fn walk(t: &RootedTree) -> (u64, u64) {
        let mut size = 1;
        let mut prod = 1;
        for c in t.children() {
            let (s, p) = walk(c);
            size += s;
            prod *= p;
        }
        (size, prod * size)
    }
    walk(tree).1
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

// ---------------------------------------------------------------------------
// Polynomial vector fields in two variables, exact arithmetic

pub type Poly = BTreeMap<(u32, u32), Rational>;
pub type Field = [Poly; 2];

fn clean(mut p: Poly) -> Poly {
    p.retain(|_, v| !v.is_zero());
    p
}

pub fn add(a: &Poly, b: &Poly) -> Poly {
    let mut out = a.clone();
    for (k, v) in b {
        *out.entry(*k).or_insert_with(Rational::zero) += v;
    }
    clean(out)
}

pub fn scale(a: &Poly, s: &Rational) -> Poly {
    clean(a.iter().map(|(k, v)| (*k, v * s)).collect())
}

pub fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ka, va) in a {
        for (kb, vb) in b {
            *out.entry((ka.0 + kb.0, ka.1 + kb.1)).or_insert_with(Rational::zero) += va * vb;
        }
    }
    clean(out)
}

pub fn deriv(a: &Poly, var: usize) -> Poly {
    clean(
        a.iter()
            .filter_map(|(&(i, j), v)| {
                let e = if var == 0 { i } else { j };
                (e > 0).then(|| {
                    let k = if var == 0 { (i - 1, j) } else { (i, j - 1) };
                    (k, v * Rational::from_integer(e.into()))
                })
            })
            .collect(),
    )
}

/// A dense random field of total degree `deg` with small rational coefficients.
pub fn random_field(rng: &mut impl Rng, deg: u32) -> Field {
    let mut comp = || {
        let mut p = Poly::new();
        for i in 0..=deg {
            for j in 0..=deg - i {
                p.insert((i, j), q(rng.gen_range(-5..=5), rng.gen_range(1..=4)));
            }
        }
        clean(p)
    };
    [comp(), comp()]
}

/// `F(τ)` as polynomials: `f^(m)[F(τ_1), …, F(τ_m)]`.
pub fn elementary_poly(f: &Field, tree: &RootedTree) -> Field {
    let inner: Vec<Field> = tree.children().iter().map(|c| elementary_poly(f, c)).collect();
    let mut out: Field = [Poly::new(), Poly::new()];
    for (i, slot) in out.iter_mut().enumerate() {
        // sum over all index tuples (j_1, …, j_m) ∈ {0,1}^m
        let m = inner.len();
        for mask in 0..(1usize << m) {
            let mut term = f[i].clone();
            for k in 0..m {
                term = deriv(&term, (mask >> k) & 1);
            }
            for (k, child) in inner.iter().enumerate() {
                term = mul(&term, &child[(mask >> k) & 1]);
            }
            *slot = add(slot, &term);
        }
    }
    out
}

fn weight(tree: &RootedTree) -> Rational {
    q(tree.stats().alpha as i64, factorial(tree.order()) as i64)
}

/// Grade `k` part of `B(c, y) − c(∅) y`.
fn grade(c: &CoefficientMap, polys: &HashMap<RootedTree, Field>, k: usize) -> Field {
    let mut out: Field = [Poly::new(), Poly::new()];
    let cat = catalog();
    for id in cat.ids_of_order(k) {
        let t = cat.tree(id);
        let w = weight(t) * c.get(t).unwrap();
        for i in 0..2 {
            out[i] = add(&out[i], &scale(&polys[t][i], &w));
        }
    }
    out
}

/// Checks, grade by grade up to `order`, that
/// `d/dt B(c, y(t))` along `y' = B(b, y)` equals `B(∂_b c, y)`.
/// Returns the first grade at which they differ.
pub fn lie_derivative_mismatch(
    f: &Field,
    b: &CoefficientMap,
    c: &CoefficientMap,
    c_empty: &Rational,
    lie: &CoefficientMap,
    order: usize,
) -> Option<usize> {
    let cat = catalog();
    let polys: HashMap<RootedTree, Field> =
        (0..cat.count_up_to(order)).map(|id| (cat.tree(id).clone(), elementary_poly(f, cat.tree(id)))).collect();
    let bgrades: Vec<Field> = (0..=order).map(|k| if k == 0 { Default::default() } else { grade(b, &polys, k) }).collect();
    for k in 1..=order {
        // c(∅) y contributes c(∅) · B_k(b)
        let mut lhs: Field = [scale(&bgrades[k][0], c_empty), scale(&bgrades[k][1], c_empty)];
        for rho in 1..k {
            for id in cat.ids_of_order(rho) {
                let t = cat.tree(id);
                let w = weight(t) * c.get(t).unwrap();
                if w.is_zero() {
                    continue;
                }
                let v = &bgrades[k - rho];
                for i in 0..2 {
                    let dir = add(&mul(&deriv(&polys[t][i], 0), &v[0]), &mul(&deriv(&polys[t][i], 1), &v[1]));
                    lhs[i] = add(&lhs[i], &scale(&dir, &w));
                }
            }
        }
        let rhs = grade(lie, &polys, k);
        if lhs != rhs {
            return Some(k);
        }
    }
    None
}

pub fn random_map(rng: &mut impl Rng, order: usize, empty: Rational, leaf: Option<Rational>) -> CoefficientMap {
    let mut m = CoefficientMap::from_fn(order, empty, |_| q(rng.gen_range(-7..=7), rng.gen_range(1..=5))).unwrap();
    if let Some(v) = leaf {
        m.set(&RootedTree::leaf(), v).unwrap();
    }
    m
}
