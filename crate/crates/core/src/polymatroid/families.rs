use super::{Polymatroid, PolymatroidError, PrefixEvaluator, RankFunction};
use crate::scalar::Scalar;

/// `f(X) = min(|X|, K)`.
#[derive(Debug, Clone)]
pub struct UniformRank {
    size: usize,
    k: usize,
}

impl<S: Scalar> RankFunction<S> for UniformRank {
    fn ground_size(&self) -> usize {
        self.size
    }

    fn rank(&self, items: &[usize]) -> S {
        S::from_count(items.len().min(self.k))
    }

    fn prefix_evaluator(&self) -> Box<dyn PrefixEvaluator<S> + '_> {
        Box::new(UniformPrefix { k: self.k, count: 0 })
    }
}

struct UniformPrefix {
    k: usize,
    count: usize,
}

impl<S: Scalar> PrefixEvaluator<S> for UniformPrefix {
    fn push(&mut self, _item: usize) -> S {
        self.count += 1;
        if self.count <= self.k {
            S::one()
        } else {
            S::zero()
        }
    }
}

pub fn make_uniform_matroid<S: Scalar>(l: usize, k: usize) -> Result<Polymatroid<S>, PolymatroidError> {
    if k == 0 || k > l {
        return Err(PolymatroidError::InvalidParameter(format!(
            "uniform matroid needs 1 <= K <= L, got L={l}, K={k}"
        )));
    }
    Polymatroid::new(UniformRank { size: l, k })
}

/// `f(X) = number of blocks hit by X`.
#[derive(Debug, Clone)]
pub struct PartitionRank {
    part_of: Vec<usize>,
    parts: usize,
}

impl PartitionRank {
    pub fn part_of(&self, item: usize) -> usize {
        self.part_of[item]
    }
}

impl<S: Scalar> RankFunction<S> for PartitionRank {
    fn ground_size(&self) -> usize {
        self.part_of.len()
    }

    fn rank(&self, items: &[usize]) -> S {
        let mut hit = vec![false; self.parts];
        let mut n = 0;
        for &e in items {
            let p = self.part_of[e];
            if !hit[p] {
                hit[p] = true;
                n += 1;
            }
        }
        S::from_count(n)
    }

    fn prefix_evaluator(&self) -> Box<dyn PrefixEvaluator<S> + '_> {
        Box::new(PartitionPrefix {
            rank: self,
            hit: vec![false; self.parts],
        })
    }
}

struct PartitionPrefix<'a> {
    rank: &'a PartitionRank,
    hit: Vec<bool>,
}

impl<S: Scalar> PrefixEvaluator<S> for PartitionPrefix<'_> {
    fn push(&mut self, item: usize) -> S {
        let p = self.rank.part_of[item];
        if self.hit[p] {
            S::zero()
        } else {
            self.hit[p] = true;
            S::one()
        }
    }
}

/// Partition matroid allowing one item per block. `parts` must partition `0..L`.
pub fn make_partition_matroid<S: Scalar>(parts: &[Vec<usize>]) -> Result<Polymatroid<S>, PolymatroidError> {
    let l: usize = parts.iter().map(Vec::len).sum();
    if l == 0 || parts.iter().any(Vec::is_empty) {
        return Err(PolymatroidError::InvalidParameter(
            "partition blocks must be non-empty".into(),
        ));
    }
    let mut part_of = vec![usize::MAX; l];
    for (p, block) in parts.iter().enumerate() {
        for &e in block {
            if e >= l {
                return Err(PolymatroidError::InvalidParameter(format!(
                    "item {e} outside 0..{l}; blocks do not partition the ground set"
                )));
            }
            if part_of[e] != usize::MAX {
                return Err(PolymatroidError::InvalidParameter(format!(
                    "item {e} appears in more than one block"
                )));
            }
            part_of[e] = p;
        }
    }
    Polymatroid::new(PartitionRank {
        part_of,
        parts: parts.len(),
    })
}

/// Undirected edge with its mean latency in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub mean_latency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphTopology {
    pub node_count: usize,
    pub edges: Vec<Edge>,
}

impl GraphTopology {
    pub fn new(node_count: usize, edges: Vec<Edge>) -> Result<Self, PolymatroidError> {
        if node_count == 0 {
            return Err(PolymatroidError::InvalidParameter("graph has no nodes".into()));
        }
        for (i, e) in edges.iter().enumerate() {
            if e.u >= node_count || e.v >= node_count {
                return Err(PolymatroidError::InvalidParameter(format!(
                    "edge {i} ({}, {}) has an endpoint outside 0..{node_count}",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(PolymatroidError::InvalidParameter(format!(
                    "edge {i} is a self-loop on node {}",
                    e.u
                )));
            }
            if !(e.mean_latency.is_finite() && e.mean_latency >= 0.0) {
                return Err(PolymatroidError::InvalidParameter(format!(
                    "edge {i} has invalid mean latency {}",
                    e.mean_latency
                )));
            }
        }
        Ok(Self { node_count, edges })
    }

    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.node_count);
        let merges = self.edges.iter().filter(|e| uf.union(e.u, e.v)).count();
        self.node_count - merges
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    pub fn mean_latencies(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.mean_latency).collect()
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; `false` if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Forest rank over the edges of a graph.
#[derive(Debug, Clone)]
pub struct GraphicRank {
    graph: GraphTopology,
}

impl GraphicRank {
    pub fn graph(&self) -> &GraphTopology {
        &self.graph
    }
}

impl<S: Scalar> RankFunction<S> for GraphicRank {
    fn ground_size(&self) -> usize {
        self.graph.edges.len()
    }

    fn rank(&self, items: &[usize]) -> S {
        let mut uf = UnionFind::new(self.graph.node_count);
        let n = items
            .iter()
            .filter(|&&i| {
                let e = self.graph.edges[i];
                uf.union(e.u, e.v)
            })
            .count();
        S::from_count(n)
    }

    fn prefix_evaluator(&self) -> Box<dyn PrefixEvaluator<S> + '_> {
        Box::new(GraphicPrefix {
            edges: &self.graph.edges,
            uf: UnionFind::new(self.graph.node_count),
        })
    }
}

struct GraphicPrefix<'a> {
    edges: &'a [Edge],
    uf: UnionFind,
}

impl<S: Scalar> PrefixEvaluator<S> for GraphicPrefix<'_> {
    fn push(&mut self, item: usize) -> S {
        let e = self.edges[item];
        if self.uf.union(e.u, e.v) {
            S::one()
        } else {
            S::zero()
        }
    }
}

/// Graphic matroid: items are edges, bases are spanning forests.
pub fn make_graphic_matroid<S: Scalar>(graph: &GraphTopology) -> Result<Polymatroid<S>, PolymatroidError> {
    let graph = GraphTopology::new(graph.node_count, graph.edges.clone())?;
    if graph.edges.is_empty() {
        return Err(PolymatroidError::InvalidParameter("graph has no edges".into()));
    }
    Polymatroid::new(GraphicRank { graph })
}

/// Source nodes paired as `(0,1), (2,3), ...`; each node carries at most 1,
/// each pair at most 3/2, and the total flow at most `K`:
/// `f(X) = min(sum_i min(|X ∩ pair_i|, 3/2), K)`.
#[derive(Debug, Clone)]
pub struct PairedFlowRank<S> {
    size: usize,
    k: S,
}

fn three_halves<S: Scalar>() -> S {
    S::from_count(3) / S::from_count(2)
}

impl<S: Scalar> PairedFlowRank<S> {
    pub fn capacity(&self) -> S {
        self.k
    }
}

impl<S: Scalar> RankFunction<S> for PairedFlowRank<S> {
    fn ground_size(&self) -> usize {
        self.size
    }

    fn rank(&self, items: &[usize]) -> S {
        let mut count = vec![0u8; self.size / 2];
        for &e in items {
            count[e / 2] += 1;
        }
        let cap = three_halves::<S>();
        let total = count
            .iter()
            .fold(S::zero(), |acc, &c| acc + S::from_count(c as usize).min_of(cap));
        total.min_of(self.k)
    }

    fn prefix_evaluator(&self) -> Box<dyn PrefixEvaluator<S> + '_> {
        Box::new(PairedFlowPrefix {
            k: self.k,
            cap: three_halves(),
            count: vec![0; self.size / 2],
            uncapped: S::zero(),
        })
    }
}

struct PairedFlowPrefix<S> {
    k: S,
    cap: S,
    count: Vec<u8>,
    uncapped: S,
}

impl<S: Scalar> PrefixEvaluator<S> for PairedFlowPrefix<S> {
    fn push(&mut self, item: usize) -> S {
        let pair = item / 2;
        let before_pair = S::from_count(self.count[pair] as usize).min_of(self.cap);
        self.count[pair] += 1;
        let after_pair = S::from_count(self.count[pair] as usize).min_of(self.cap);
        let before = self.uncapped.min_of(self.k);
        self.uncapped += after_pair - before_pair;
        self.uncapped.min_of(self.k) - before
    }
}

/// Flow polymatroid with `L` source nodes and maximum flow `K`, where `K`
/// is a positive multiple of 3/2 and at most `3L/4`.
pub fn make_paired_flow_polymatroid<S: Scalar>(l: usize, k: S) -> Result<Polymatroid<S>, PolymatroidError> {
    if l == 0 || !l.is_multiple_of(2) {
        return Err(PolymatroidError::InvalidParameter(format!(
            "flow polymatroid needs an even number of source nodes, got {l}"
        )));
    }
    flow_pair_count(k)?;
    if k > three_halves::<S>() * S::from_count(l / 2) {
        return Err(PolymatroidError::InvalidParameter(format!(
            "maximum flow {k} exceeds 3L/4 = {}",
            0.75 * l as f64
        )));
    }
    Polymatroid::new(PairedFlowRank { size: l, k })
}

/// `K / (3/2)` when it is a positive integer.
pub(crate) fn flow_pair_count<S: Scalar>(k: S) -> Result<usize, PolymatroidError> {
    let q = k / three_halves::<S>();
    let qf = q.to_f64_lossy();
    let rounded = qf.round();
    let back = S::from_f64(rounded).unwrap_or_else(S::zero);
    if !(rounded >= 1.0) || (q - back).abs_value() > S::tolerance() {
        return Err(PolymatroidError::InvalidParameter(format!(
            "maximum flow {k} is not a positive multiple of 3/2"
        )));
    }
    Ok(rounded as usize)
}

/// Topics covered by each item.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMap {
    topics_of: Vec<Vec<usize>>,
    topic_count: usize,
}

impl CoverageMap {
    pub fn new(topics_of: Vec<Vec<usize>>, topic_count: usize) -> Result<Self, PolymatroidError> {
        if topic_count == 0 {
            return Err(PolymatroidError::InvalidParameter("no topics".into()));
        }
        if topics_of.is_empty() {
            return Err(PolymatroidError::InvalidParameter("no items".into()));
        }
        let mut topics_of = topics_of;
        for (item, topics) in topics_of.iter_mut().enumerate() {
            if topics.is_empty() {
                return Err(PolymatroidError::InvalidParameter(format!(
                    "item {item} covers no topic"
                )));
            }
            if let Some(&t) = topics.iter().find(|&&t| t >= topic_count) {
                return Err(PolymatroidError::InvalidParameter(format!(
                    "item {item} has topic {t} outside 0..{topic_count}"
                )));
            }
            topics.sort_unstable();
            topics.dedup();
        }
        Ok(Self {
            topics_of,
            topic_count,
        })
    }

    pub fn item_count(&self) -> usize {
        self.topics_of.len()
    }

    pub fn topic_count(&self) -> usize {
        self.topic_count
    }

    pub fn topics_of(&self, item: usize) -> &[usize] {
        &self.topics_of[item]
    }
}

/// `f(X) = |union of topics of X|`.
#[derive(Debug, Clone)]
pub struct CoverageRank {
    map: CoverageMap,
}

impl CoverageRank {
    pub fn new(map: CoverageMap) -> Self {
        Self { map }
    }

    pub fn map(&self) -> &CoverageMap {
        &self.map
    }
}

impl<S: Scalar> RankFunction<S> for CoverageRank {
    fn ground_size(&self) -> usize {
        self.map.item_count()
    }

    fn rank(&self, items: &[usize]) -> S {
        let mut covered = vec![false; self.map.topic_count];
        let mut n = 0;
        for &e in items {
            for &t in self.map.topics_of(e) {
                if !covered[t] {
                    covered[t] = true;
                    n += 1;
                }
            }
        }
        S::from_count(n)
    }

    fn prefix_evaluator(&self) -> Box<dyn PrefixEvaluator<S> + '_> {
        Box::new(CoveragePrefix {
            map: &self.map,
            covered: vec![false; self.map.topic_count],
        })
    }
}

struct CoveragePrefix<'a> {
    map: &'a CoverageMap,
    covered: Vec<bool>,
}

impl<S: Scalar> PrefixEvaluator<S> for CoveragePrefix<'_> {
    fn push(&mut self, item: usize) -> S {
        let mut gain = 0;
        for &t in self.map.topics_of(item) {
            if !self.covered[t] {
                self.covered[t] = true;
                gain += 1;
            }
        }
        S::from_count(gain)
    }
}

/// Topic-coverage polymatroid. Items covering several topics have
/// `f({e}) > 1`, so the result is built in unnormalized mode whenever that
/// happens; check [`Polymatroid::max_singleton`].
pub fn make_coverage_polymatroid<S: Scalar>(map: &CoverageMap) -> Result<Polymatroid<S>, PolymatroidError> {
    Polymatroid::new_unnormalized(CoverageRank::new(map.clone()))
}
