//! Unlabelled rooted trees in canonical form.
//!
//! A tree is stored as its canonical level sequence: the depths of the
//! vertices in depth-first order, where the subtrees of every vertex are
//! visited in descending order of their own level sequences. Two trees are
//! isomorphic exactly when their level sequences are equal, so the sequence
//! doubles as the hash key and the total order.
//!
//! The combinatorial statistics used by B-series (order, density, symmetry,
//! number of monotone labellings and the number of odd-height vertices) are
//! computed once at construction.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest order handled by [`enumerate_trees`] and the shared [`catalog`].
pub const MAX_ORDER: usize = 10;

/// Statistics of a rooted tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreeStats {
    /// Number of vertices.
    pub rho: usize,
    /// Number of monotone labellings, `rho! / (sigma * gamma)`.
    pub alpha: u64,
    /// Order of the automorphism group.
    pub sigma: u64,
    /// Density.
    pub gamma: u64,
    /// Number of vertices at odd distance from the root.
    pub d_prime: usize,
}

#[derive(Clone)]
pub struct RootedTree {
    levels: Vec<u8>,
    children: Vec<RootedTree>,
    stats: TreeStats,
}

impl RootedTree {
    /// The single-vertex tree.
    pub fn leaf() -> Self {
        RootedTree {
            levels: vec![0],
            children: Vec::new(),
            stats: TreeStats { rho: 1, alpha: 1, sigma: 1, gamma: 1, d_prime: 0 },
        }
    }

    /// Joins `children` below a new root. The children may be given in any order.
    pub fn from_children(mut children: Vec<RootedTree>) -> Self {
        children.sort_by(|a, b| b.levels.cmp(&a.levels));

        let rho = 1 + children.iter().map(|c| c.stats.rho).sum::<usize>();
        let mut levels = Vec::with_capacity(rho);
        levels.push(0);
        for c in &children {
            levels.extend(c.levels.iter().map(|d| d + 1));
        }

        let gamma = children.iter().fold(rho as u64, |acc, c| acc * c.stats.gamma);
        let mut sigma = children.iter().map(|c| c.stats.sigma).product::<u64>();
        // children are sorted, so equal subtrees are adjacent
        let mut run = 1u64;
        for w in children.windows(2) {
            if w[0].levels == w[1].levels {
                run += 1;
                sigma *= run;
            } else {
                run = 1;
            }
        }
        let d_prime = children.iter().map(|c| c.stats.rho - c.stats.d_prime).sum();
        let alpha = (factorial(rho) / (sigma as u128 * gamma as u128)) as u64;

        RootedTree { levels, children, stats: TreeStats { rho, alpha, sigma, gamma, d_prime } }
    }

    /// The branchless chain with `order` vertices.
    pub fn tall(order: usize) -> Self {
        assert!(order >= 1, "trees have at least one vertex");
        (1..order).fold(Self::leaf(), |t, _| Self::from_children(vec![t]))
    }

    /// A root with `order - 1` leaves attached.
    pub fn bushy(order: usize) -> Self {
        assert!(order >= 1, "trees have at least one vertex");
        Self::from_children(vec![Self::leaf(); order - 1])
    }

    /// Builds a tree from a level sequence, canonicalising it.
    pub fn from_levels(levels: &[u8]) -> Result<Self> {
        if levels.first() != Some(&0) {
            return Err(Error::Argument("level sequence must start with depth 0".into()));
        }
        for (i, w) in levels.windows(2).enumerate() {
            if w[1] == 0 || w[1] > w[0] + 1 {
                return Err(Error::Argument(format!(
                    "invalid depth {} at position {} of level sequence",
                    w[1],
                    i + 1
                )));
            }
        }
        Ok(Self::build(levels))
    }

    fn build(levels: &[u8]) -> Self {
        let base = levels[0];
        let mut children = Vec::new();
        let mut start = None;
        for (i, &d) in levels.iter().enumerate().skip(1) {
            if d == base + 1 {
                if let Some(s) = start {
                    children.push(Self::build(&levels[s..i]));
                }
                start = Some(i);
            }
        }
        if let Some(s) = start {
            children.push(Self::build(&levels[s..]));
        }
        Self::from_children(children)
    }

    pub fn order(&self) -> usize {
        self.stats.rho
    }

    pub fn stats(&self) -> TreeStats {
        self.stats
    }

    pub fn children(&self) -> &[RootedTree] {
        &self.children
    }

    /// Canonical level sequence.
    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    /// Canonical encoding, one digit per vertex (e.g. `0121`).
    pub fn encoding(&self) -> String {
        self.levels
            .iter()
            .map(|&d| char::from_digit(d as u32, 36).expect("depth below 36"))
            .collect()
    }

    pub fn is_tall(&self) -> bool {
        self.levels.iter().enumerate().all(|(i, &d)| d as usize == i)
    }

    /// Every way of cutting one edge of the tree.
    ///
    /// Each entry is `(remainder, pendant)`: the pendant is the subtree hanging
    /// below the cut edge and the remainder is what stays attached to the root.
    /// There is one entry per edge, so symmetric edges produce repeated entries.
    pub fn edge_cuts(&self) -> Vec<(RootedTree, RootedTree)> {
        let mut cuts = Vec::with_capacity(self.stats.rho.saturating_sub(1));
        for (i, child) in self.children.iter().enumerate() {
            let others = |replacement: Option<RootedTree>| {
                let mut v: Vec<RootedTree> = self
                    .children
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, c)| c.clone())
                    .collect();
                v.extend(replacement);
                RootedTree::from_children(v)
            };
            cuts.push((others(None), child.clone()));
            for (rem, pend) in child.edge_cuts() {
                cuts.push((others(Some(rem)), pend));
            }
        }
        cuts
    }
}

impl PartialEq for RootedTree {
    fn eq(&self, other: &Self) -> bool {
        self.levels == other.levels
    }
}

impl Eq for RootedTree {}

impl Hash for RootedTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.levels.hash(state);
    }
}

impl PartialOrd for RootedTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Trees are ordered by number of vertices first, then by level sequence.
impl Ord for RootedTree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.stats
            .rho
            .cmp(&other.stats.rho)
            .then_with(|| self.levels.cmp(&other.levels))
    }
}

impl fmt::Debug for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RootedTree({})", self.encoding())
    }
}

impl fmt::Display for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encoding())
    }
}

/// Parses a level sequence such as `0121` or `0,1,2,1`.
impl FromStr for RootedTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let levels: Vec<u8> = if s.contains(',') {
            s.split(',')
                .map(|p| p.trim().parse::<u8>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Argument(format!("bad tree encoding {s:?}: {e}")))?
        } else {
            s.chars()
                .map(|c| c.to_digit(36).map(|d| d as u8))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Argument(format!("bad tree encoding {s:?}")))?
        };
        RootedTree::from_levels(&levels)
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// All trees with at most `max_order` vertices, grouped by order.
///
/// Within each order the trees are sorted by level sequence, so the output is
/// identical across runs.
pub fn enumerate_trees(max_order: usize) -> Result<Vec<Vec<RootedTree>>> {
    if !(1..=MAX_ORDER).contains(&max_order) {
        return Err(Error::Argument(format!(
            "max_order must lie in 1..={MAX_ORDER}, got {max_order}"
        )));
    }
    let mut by_order: Vec<Vec<RootedTree>> = vec![vec![RootedTree::leaf()]];
    for n in 2..=max_order {
        // a tree of order n is a root over a multiset of trees of total order n - 1
        let pool: Vec<&RootedTree> = by_order.iter().flatten().collect();
        let mut out = Vec::new();
        let mut stack = Vec::new();
        forests(&pool, n - 1, 0, &mut stack, &mut out);
        out.sort();
        by_order.push(out);
    }
    Ok(by_order)
}

fn forests(
    pool: &[&RootedTree],
    remaining: usize,
    from: usize,
    stack: &mut Vec<RootedTree>,
    out: &mut Vec<RootedTree>,
) {
    if remaining == 0 {
        out.push(RootedTree::from_children(stack.clone()));
        return;
    }
    for (i, t) in pool.iter().enumerate().skip(from) {
        if t.order() <= remaining {
            stack.push((*t).clone());
            forests(pool, remaining - t.order(), i, stack, out);
            stack.pop();
        }
    }
}

/// A numbered list of all trees up to [`MAX_ORDER`], with precomputed edge
/// cuts. Identifiers are assigned by increasing order, so the trees of order
/// at most `k` always occupy the prefix `0..count_up_to(k)`.
pub struct TreeCatalog {
    trees: Vec<RootedTree>,
    ids: HashMap<Vec<u8>, usize>,
    cuts: Vec<Vec<(usize, usize)>>,
    prefix: Vec<usize>,
}

impl TreeCatalog {
    fn build() -> Self {
        let groups = enumerate_trees(MAX_ORDER).expect("MAX_ORDER is in range");
        let mut prefix = vec![0];
        let mut trees = Vec::new();
        for g in groups {
            trees.extend(g);
            prefix.push(trees.len());
        }
        let ids: HashMap<Vec<u8>, usize> =
            trees.iter().enumerate().map(|(i, t)| (t.levels.clone(), i)).collect();
        let cuts = trees
            .iter()
            .map(|t| {
                t.edge_cuts()
                    .iter()
                    .map(|(r, p)| (ids[&r.levels], ids[&p.levels]))
                    .collect()
            })
            .collect();
        TreeCatalog { trees, ids, cuts, prefix }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Number of trees with at most `order` vertices.
    pub fn count_up_to(&self, order: usize) -> usize {
        self.prefix[order.min(MAX_ORDER)]
    }

    pub fn tree(&self, id: usize) -> &RootedTree {
        &self.trees[id]
    }

    pub fn id(&self, tree: &RootedTree) -> Option<usize> {
        self.ids.get(&tree.levels).copied()
    }

    /// Edge cuts of tree `id` as `(remainder_id, pendant_id)` pairs.
    pub fn cuts(&self, id: usize) -> &[(usize, usize)] {
        &self.cuts[id]
    }

    /// Identifiers of the trees with exactly `order` vertices.
    pub fn ids_of_order(&self, order: usize) -> std::ops::Range<usize> {
        self.prefix[order - 1]..self.prefix[order]
    }

    pub fn iter(&self) -> impl Iterator<Item = &RootedTree> {
        self.trees.iter()
    }
}

/// The shared catalog of all trees up to [`MAX_ORDER`].
pub fn catalog() -> &'static TreeCatalog {
    static CATALOG: OnceLock<TreeCatalog> = OnceLock::new();
    CATALOG.get_or_init(TreeCatalog::build)
}

/// Named trees of order at most four, matching the usual pictures.
pub mod named {
    use super::RootedTree;

    pub fn blt(order: usize) -> RootedTree {
        RootedTree::tall(order)
    }

    /// Root with two leaves.
    pub fn bushy3() -> RootedTree {
        RootedTree::bushy(3)
    }

    /// Root with three leaves.
    pub fn bushy4() -> RootedTree {
        RootedTree::bushy(4)
    }

    /// Root with a leaf and a two-vertex chain.
    pub fn tau4b() -> RootedTree {
        RootedTree::from_children(vec![RootedTree::leaf(), RootedTree::tall(2)])
    }

    /// Root with a single child that carries two leaves.
    pub fn tau4c() -> RootedTree {
        RootedTree::from_children(vec![RootedTree::bushy(3)])
    }
}
