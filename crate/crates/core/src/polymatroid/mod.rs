//! Polymatroids given by a rank oracle, and Edmonds' greedy basis.
//!
//! Items are indexed `0..L`. A [`Polymatroid`] wraps a [`RankFunction`]
//! together with its cached rank `K = f(E)` and the largest singleton value,
//! which decides whether the instance is normalized (`f({e}) <= 1`).

mod axioms;
mod families;
mod io;

pub use axioms::{check_polymatroid_axioms, AxiomReport, AxiomViolation};
pub use families::{
    make_coverage_polymatroid, make_graphic_matroid, make_paired_flow_polymatroid,
    make_partition_matroid, make_uniform_matroid, CoverageMap, CoverageRank, Edge,
    GraphTopology, GraphicRank, PairedFlowRank, PartitionRank, UniformRank, UnionFind,
};
pub(crate) use families::flow_pair_count;
pub use io::{load_coverage_map, load_edge_list, parse_coverage_map, parse_edge_list, ParseError};

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::scalar::Scalar;

/// Largest ground set for which subset checks run exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Default cap on the ground-set size for permutation enumeration (8! orders).
pub const DEFAULT_VERTEX_LIMIT: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolymatroidError {
    #[error("expected a vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("weight of item {item} is negative ({value})")]
    NegativeWeight { item: usize, value: f64 },
    #[error("weight of item {item} is not finite")]
    NonFiniteWeight { item: usize },
    #[error("rank oracle returned marginal {marginal} for item {item}")]
    InvalidMarginal { item: usize, marginal: f64 },
    #[error("order is not a permutation of 0..{0}")]
    InvalidOrder(usize),
    #[error("ground set of {size} items exceeds the enumeration limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("f(empty set) = {0}, expected 0")]
    NonZeroEmpty(f64),
    #[error("f({{{item}}}) = {value} exceeds 1; construct in unnormalized mode")]
    Unnormalized { item: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Set function over items `0..ground_size()`.
///
/// `rank` receives distinct item indices in arbitrary order.
pub trait RankFunction<S: Scalar>: Send + Sync + fmt::Debug {
    fn ground_size(&self) -> usize;

    fn rank(&self, items: &[usize]) -> S;

    /// Stateful evaluator for marginal gains along a growing prefix. The
    /// default re-evaluates the whole prefix; families override it with an
    /// incremental version.
    fn prefix_evaluator(&self) -> Box<dyn PrefixEvaluator<S> + '_> {
        Box::new(RecomputingPrefix::new(self))
    }
}

/// Incremental evaluation of `f(prefix + e) - f(prefix)`.
pub trait PrefixEvaluator<S> {
    /// Appends `item` to the prefix and returns its marginal gain.
    fn push(&mut self, item: usize) -> S;
}

struct RecomputingPrefix<'a, S: Scalar, F: RankFunction<S> + ?Sized> {
    oracle: &'a F,
    items: Vec<usize>,
    value: S,
}

impl<'a, S: Scalar, F: RankFunction<S> + ?Sized> RecomputingPrefix<'a, S, F> {
    fn new(oracle: &'a F) -> Self {
        Self {
            oracle,
            items: Vec::with_capacity(oracle.ground_size()),
            value: oracle.rank(&[]),
        }
    }
}

impl<S: Scalar, F: RankFunction<S> + ?Sized> PrefixEvaluator<S> for RecomputingPrefix<'_, S, F> {
    fn push(&mut self, item: usize) -> S {
        self.items.push(item);
        let next = self.oracle.rank(&self.items);
        let gain = next - self.value;
        self.value = next;
        gain
    }
}

/// Rank oracle backed by a closure over item lists. Useful for ad hoc
/// set functions in tests and for checking candidate oracles.
pub struct FnRank<S, F> {
    size: usize,
    f: F,
    _marker: std::marker::PhantomData<fn() -> S>,
}

impl<S, F> FnRank<S, F>
where
    S: Scalar,
    F: Fn(&[usize]) -> S + Send + Sync,
{
    pub fn new(size: usize, f: F) -> Self {
        Self {
            size,
            f,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<S, F> fmt::Debug for FnRank<S, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnRank").field("size", &self.size).finish()
    }
}

impl<S, F> RankFunction<S> for FnRank<S, F>
where
    S: Scalar,
    F: Fn(&[usize]) -> S + Send + Sync,
{
    fn ground_size(&self) -> usize {
        self.size
    }

    fn rank(&self, items: &[usize]) -> S {
        (self.f)(items)
    }
}

/// A ground set with a rank oracle. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct Polymatroid<S: Scalar> {
    oracle: Arc<dyn RankFunction<S>>,
    rank: S,
    max_singleton: S,
    normalized: bool,
}

impl<S: Scalar> fmt::Debug for Polymatroid<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Polymatroid")
            .field("oracle", &self.oracle)
            .field("rank", &self.rank)
            .field("max_singleton", &self.max_singleton)
            .field("normalized", &self.normalized)
            .finish()
    }
}

impl<S: Scalar> Polymatroid<S> {
    /// Wraps an oracle that must satisfy `f(e) <= 1` for every item.
    pub fn new<F: RankFunction<S> + 'static>(oracle: F) -> Result<Self, PolymatroidError> {
        let m = Self::new_unnormalized(oracle)?;
        if !m.normalized {
            let tol = S::tolerance();
            let item = (0..m.len())
                .find(|&e| m.oracle.rank(&[e]) > S::one() + tol)
                .unwrap_or(0);
            return Err(PolymatroidError::Unnormalized {
                item,
                value: m.max_singleton.to_f64_lossy(),
            });
        }
        Ok(m)
    }

    /// Wraps an oracle without requiring `f(e) <= 1`.
    pub fn new_unnormalized<F: RankFunction<S> + 'static>(
        oracle: F,
    ) -> Result<Self, PolymatroidError> {
        let l = oracle.ground_size();
        if l == 0 {
            return Err(PolymatroidError::InvalidParameter(
                "ground set must be non-empty".into(),
            ));
        }
        let empty = oracle.rank(&[]);
        if empty.abs_value() > S::tolerance() {
            return Err(PolymatroidError::NonZeroEmpty(empty.to_f64_lossy()));
        }
        let all: Vec<usize> = (0..l).collect();
        let rank = oracle.rank(&all);
        let max_singleton = (0..l)
            .map(|e| oracle.rank(&[e]))
            .fold(S::zero(), S::max_of);
        let normalized = max_singleton <= S::one() + S::tolerance();
        Ok(Self {
            oracle: Arc::new(oracle),
            rank,
            max_singleton,
            normalized,
        })
    }

    /// Ground-set size `L`.
    pub fn len(&self) -> usize {
        self.oracle.ground_size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `K = f(E)`.
    pub fn rank(&self) -> S {
        self.rank
    }

    /// `max_e f({e})`; at most 1 for normalized instances.
    pub fn max_singleton(&self) -> S {
        self.max_singleton
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn eval(&self, items: &[usize]) -> S {
        self.oracle.rank(items)
    }

    pub fn oracle(&self) -> &dyn RankFunction<S> {
        self.oracle.as_ref()
    }

    fn eval_mask(&self, mask: u64, buf: &mut Vec<usize>) -> S {
        buf.clear();
        buf.extend((0..self.len()).filter(|e| mask >> e & 1 == 1));
        self.oracle.rank(buf)
    }
}

/// Vertex of the base polyhedron together with the item order that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis<S> {
    pub x: Vec<S>,
    pub order: Vec<usize>,
}

impl<S: Scalar> Basis<S> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `<w, x>`.
    pub fn value(&self, w: &[S]) -> S {
        dot(w, &self.x)
    }

    pub fn total(&self) -> S {
        self.x.iter().fold(S::zero(), |acc, &v| acc + v)
    }

    /// Items with a strictly positive contribution.
    pub fn support(&self) -> Vec<usize> {
        self.x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > S::zero())
            .map(|(e, _)| e)
            .collect()
    }
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (&u, &v)| acc + u * v)
}

fn check_len(expected: usize, found: usize) -> Result<(), PolymatroidError> {
    if expected != found {
        return Err(PolymatroidError::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_weights<S: Scalar>(l: usize, w: &[S]) -> Result<(), PolymatroidError> {
    check_len(l, w.len())?;
    for (item, v) in w.iter().enumerate() {
        if !v.is_finite_value() {
            return Err(PolymatroidError::NonFiniteWeight { item });
        }
        if *v < S::zero() {
            return Err(PolymatroidError::NegativeWeight {
                item,
                value: v.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// Items sorted by decreasing score; equal scores keep the lower index first.
pub fn ranked_order<S: Scalar>(scores: &[S]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps index order among ties
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

/// Runs the greedy assignment along an explicit item order:
/// `x(e_i) = f({e_1..e_i}) - f({e_1..e_{i-1}})`.
pub fn greedy_by_order<S: Scalar>(
    m: &Polymatroid<S>,
    order: &[usize],
) -> Result<Basis<S>, PolymatroidError> {
    let l = m.len();
    check_len(l, order.len())?;
    let mut seen = vec![false; l];
    for &e in order {
        if e >= l || seen[e] {
            return Err(PolymatroidError::InvalidOrder(l));
        }
        seen[e] = true;
    }

    let tol = S::tolerance();
    let mut x = vec![S::zero(); l];
    let mut prefix = m.oracle.prefix_evaluator();
    for &e in order {
        let gain = prefix.push(e);
        if !gain.is_finite_value() || gain < S::zero() - tol {
            return Err(PolymatroidError::InvalidMarginal {
                item: e,
                marginal: gain.to_f64_lossy(),
            });
        }
        x[e] = if gain < S::zero() { S::zero() } else { gain };
    }
    Ok(Basis {
        x,
        order: order.to_vec(),
    })
}

/// Greedy on arbitrary finite scores, which may be negative. Learners use
/// this for confidence bounds on transformed costs.
pub fn greedy_by_scores<S: Scalar>(
    m: &Polymatroid<S>,
    scores: &[S],
) -> Result<Basis<S>, PolymatroidError> {
    check_len(m.len(), scores.len())?;
    if let Some(item) = scores.iter().position(|v| !v.is_finite_value()) {
        return Err(PolymatroidError::NonFiniteWeight { item });
    }
    greedy_by_order(m, &ranked_order(scores))
}

/// Maximum-weight basis (Edmonds' greedy algorithm).
pub fn greedy_max_basis<S: Scalar>(
    m: &Polymatroid<S>,
    w: &[S],
) -> Result<Basis<S>, PolymatroidError> {
    check_weights(m.len(), w)?;
    greedy_by_order(m, &ranked_order(w))
}

/// `max_e w(e) - w`.
pub fn complement_weights<S: Scalar>(w: &[S]) -> Vec<S> {
    let top = w.iter().copied().fold(S::zero(), S::max_of);
    w.iter().map(|&v| top - v).collect()
}

/// Minimum-weight basis via the maximum-weight basis of `max_e w(e) - w`.
pub fn greedy_min_basis<S: Scalar>(
    m: &Polymatroid<S>,
    w: &[S],
) -> Result<Basis<S>, PolymatroidError> {
    check_weights(m.len(), w)?;
    greedy_max_basis(m, &complement_weights(w))
}

/// `x >= 0` and `sum_{e in X} x(e) <= f(X)` for every subset `X`.
///
/// Exhaustive over all `2^L` subsets; fails with `TooLarge` above
/// [`EXHAUSTIVE_LIMIT`]. Use [`is_independent_sampled`] for larger sets.
pub fn is_independent<S: Scalar>(m: &Polymatroid<S>, x: &[S]) -> Result<bool, PolymatroidError> {
    let l = m.len();
    check_len(l, x.len())?;
    if l > EXHAUSTIVE_LIMIT {
        return Err(PolymatroidError::TooLarge {
            size: l,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let tol = S::tolerance();
    if x.iter().any(|&v| v < S::zero() - tol) {
        return Ok(false);
    }
    let mut buf = Vec::with_capacity(l);
    for mask in 0u64..(1u64 << l) {
        if !subset_fits(m, x, mask, &mut buf, tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Independence check over `budget` random subsets (each item included
/// with probability 1/2) plus all singletons and the full set.
pub fn is_independent_sampled<S: Scalar, R: Rng + ?Sized>(
    m: &Polymatroid<S>,
    x: &[S],
    budget: usize,
    rng: &mut R,
) -> Result<bool, PolymatroidError> {
    let l = m.len();
    check_len(l, x.len())?;
    let tol = S::tolerance();
    if x.iter().any(|&v| v < S::zero() - tol) {
        return Ok(false);
    }
    let fits = |items: &[usize]| {
        let lhs = items.iter().fold(S::zero(), |acc, &e| acc + x[e]);
        lhs <= m.eval(items) + tol
    };
    if !(0..l).all(|e| fits(&[e])) || !fits(&(0..l).collect::<Vec<_>>()) {
        return Ok(false);
    }
    let mut items = Vec::with_capacity(l);
    for _ in 0..budget {
        items.clear();
        items.extend((0..l).filter(|_| rng.random::<bool>()));
        if !fits(&items) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn subset_fits<S: Scalar>(m: &Polymatroid<S>, x: &[S], mask: u64, buf: &mut Vec<usize>, tol: S) -> bool {
    let f = m.eval_mask(mask, buf);
    let lhs = buf.iter().fold(S::zero(), |acc, &e| acc + x[e]);
    lhs <= f + tol
}

/// Independent and `|sum x - K| <= tolerance`.
pub fn is_basis<S: Scalar>(m: &Polymatroid<S>, x: &[S]) -> Result<bool, PolymatroidError> {
    if !is_independent(m, x)? {
        return Ok(false);
    }
    let total = x.iter().fold(S::zero(), |acc, &v| acc + v);
    Ok((total - m.rank()).abs_value() <= S::tolerance())
}

/// All greedy bases, one run per item permutation, deduplicated. These are
/// exactly the vertices of the base polyhedron.
pub fn enumerate_vertices<S: Scalar>(m: &Polymatroid<S>) -> Result<Vec<Basis<S>>, PolymatroidError> {
    enumerate_vertices_with_limit(m, DEFAULT_VERTEX_LIMIT)
}

pub fn enumerate_vertices_with_limit<S: Scalar>(
    m: &Polymatroid<S>,
    limit: usize,
) -> Result<Vec<Basis<S>>, PolymatroidError> {
    let l = m.len();
    if l > limit {
        return Err(PolymatroidError::TooLarge { size: l, limit });
    }
    let tol = S::tolerance();
    let same = |a: &[S], b: &[S]| a.iter().zip(b).all(|(&u, &v)| (u - v).abs_value() <= tol);

    let mut vertices: Vec<Basis<S>> = Vec::new();
    let mut order: Vec<usize> = (0..l).collect();
    loop {
        let basis = greedy_by_order(m, &order)?;
        if !vertices.iter().any(|v| same(&v.x, &basis.x)) {
            vertices.push(basis);
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    Ok(vertices)
}

/// Advances to the next lexicographic permutation; `false` after the last.
pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
