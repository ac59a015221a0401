//! Test problems and their asymptotic solutions: the Emden–Fowler oscillator
//! `y'' + t^ν y^n = 0` and the linear oscillator `y'' + g(t) y = 0`, both
//! written as autonomous first-order systems in `(y, y', t)`.

mod emden;
mod linear;
mod wave;

pub use emden::{ef_system, xt_map, EmdenFowlerProblem, EmdenFowlerSystem, LeadingOrder, XtMap};
pub use self::linear::{liouville_green, rotate, LinearOscillatorProblem, LinearOscillatorSystem};
pub use wave::{fit_action_angle, wn_build, ReferenceOscillation, WaveTable, SD_SCALE, WAVE_RESOLUTION};

use std::collections::HashMap;

use crate::rk::OdeSystem;
use crate::trees::RootedTree;

/// Trees of order at most 10 have at most 9 children per vertex.
pub(crate) const MAX_CHILDREN: usize = 9;

/// Systems that can apply their higher derivatives to a list of directions.
pub trait ElementaryDifferentials: OdeSystem {
    /// `f^(m)(y)[v_1, …, v_m]` written to `out`; for `m = 0` this is `f(y)`.
    fn derivative_action(&self, y: &[f64], dirs: &[&[f64]], out: &mut [f64]);
}

/// The elementary differential `F(τ)(y) = f^(m)(y)[F(τ_1)(y), …, F(τ_m)(y)]`.
pub fn elementary_differential<S: ElementaryDifferentials + ?Sized>(
    ode: &S,
    tree: &RootedTree,
    y: &[f64],
) -> Vec<f64> {
    let inner: Vec<Vec<f64>> = tree
        .children()
        .iter()
        .map(|c| elementary_differential(ode, c, y))
        .collect();
    let dirs: Vec<&[f64]> = inner.iter().map(Vec::as_slice).collect();
    let mut out = vec![0.0; ode.dimension()];
    ode.derivative_action(y, &dirs, &mut out);
    out
}

/// A set of trees flattened into their distinct subtrees, children first, so
/// that all elementary differentials at one state cost one pass and no
/// allocation.
#[derive(Clone, Debug)]
pub struct DifferentialProgram {
    dimension: usize,
    children: Vec<Vec<usize>>,
    roots: Vec<usize>,
}

impl DifferentialProgram {
    pub fn new(trees: &[RootedTree], dimension: usize) -> Self {
        fn visit(t: &RootedTree, index: &mut HashMap<RootedTree, usize>, children: &mut Vec<Vec<usize>>) -> usize {
            if let Some(&k) = index.get(t) {
                return k;
            }
            let kids = t.children().iter().map(|c| visit(c, index, children)).collect();
            children.push(kids);
            index.insert(t.clone(), children.len() - 1);
            children.len() - 1
        }
        let mut index = HashMap::new();
        let mut children = Vec::new();
        let roots = trees.iter().map(|t| visit(t, &mut index, &mut children)).collect();
        DifferentialProgram { dimension, children, roots }
    }

    /// Length of the scratch buffer `evaluate` needs.
    pub fn scratch_len(&self) -> usize {
        self.children.len() * self.dimension
    }

    /// Fills `scratch` with every subtree's elementary differential at `y`.
    pub fn evaluate<S: ElementaryDifferentials + ?Sized>(&self, ode: &S, y: &[f64], scratch: &mut [f64]) {
        let d = self.dimension;
        for (k, kids) in self.children.iter().enumerate() {
            let (done, rest) = scratch.split_at_mut(k * d);
            let mut dirs: [&[f64]; MAX_CHILDREN] = [&[]; MAX_CHILDREN];
            for (slot, &c) in dirs.iter_mut().zip(kids) {
                *slot = &done[c * d..(c + 1) * d];
            }
            ode.derivative_action(y, &dirs[..kids.len()], &mut rest[..d]);
        }
    }

    /// `F(τ_k)(y)` for the k-th input tree after `evaluate`.
    pub fn value<'a>(&self, k: usize, scratch: &'a [f64]) -> &'a [f64] {
        let r = self.roots[k];
        &scratch[r * self.dimension..(r + 1) * self.dimension]
    }
}

/// Coefficients of `x^i` in `Π_k (v_k[free] + x v_k[fixed])`: entry `i` sums,
/// over all ways to pick `i` of the directions, the product of their
/// `fixed` components with the `free` components of the rest.
/// Only the first `dirs.len() + 1` entries are meaningful.
pub(crate) fn split_products(dirs: &[&[f64]], fixed: usize, free: usize) -> [f64; MAX_CHILDREN + 1] {
    let mut poly = [0.0; MAX_CHILDREN + 1];
    poly[0] = 1.0;
    for (m, v) in dirs.iter().enumerate() {
        for i in (0..=m + 1).rev() {
            let keep = if i <= m { poly[i] * v[free] } else { 0.0 };
            let take = if i > 0 { poly[i - 1] * v[fixed] } else { 0.0 };
            poly[i] = keep + take;
        }
    }
    poly
}

/// `x (x−1) ⋯ (x−k+1)`.
pub(crate) fn falling(x: f64, k: usize) -> f64 {
    (0..k).map(|i| x - i as f64).product()
}
