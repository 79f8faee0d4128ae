//! Stochastic weight generators and the instances they are paired with.
//!
//! Every environment carries its mean weights in native units (rewards,
//! costs, milliseconds) and an [`Objective`]. Learners always maximize:
//! for minimization the weights they see are `cap - w`, which keeps the
//! ordering of greedy reversed and the regret unchanged.

use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::polymatroid::{
    self, make_coverage_polymatroid, make_graphic_matroid, make_paired_flow_polymatroid,
    make_partition_matroid, make_uniform_matroid, CoverageMap, Edge, GraphTopology, ParseError,
    Polymatroid, PolymatroidError,
};
use crate::scalar::Real;

/// Portable counter-based generator used for every random stream.
pub type StreamRng = ChaCha8Rng;

/// Substream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Error)]
pub enum EnvironmentError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("graph is disconnected ({0} components)")]
    Disconnected(usize),
    #[error(transparent)]
    Polymatroid(#[from] PolymatroidError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentKind {
    BernoulliVector,
    FlowCost,
    Latency,
    UserCoverage,
    PartitionBandit,
    UniformBandit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective<F> {
    Maximize,
    /// Minimize cost; learners see `cap - w`.
    Minimize { cap: F },
}

/// Binary user × item incidence: `watched[u][e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsMatrix {
    user_count: usize,
    item_count: usize,
    watched: Vec<Vec<bool>>,
}

impl RatingsMatrix {
    pub fn new(watched: Vec<Vec<bool>>) -> Result<Self, EnvironmentError> {
        let user_count = watched.len();
        if user_count == 0 {
            return Err(EnvironmentError::InvalidParameter("ratings matrix has no users".into()));
        }
        let item_count = watched[0].len();
        if item_count == 0 || watched.iter().any(|row| row.len() != item_count) {
            return Err(EnvironmentError::DimensionMismatch(
                "every user row must have the same positive number of items".into(),
            ));
        }
        Ok(Self {
            user_count,
            item_count,
            watched,
        })
    }

    pub fn user_count(&self) -> usize {
        self.user_count
    }

    pub fn item_count(&self) -> usize {
        self.item_count
    }

    pub fn watched(&self, user: usize, item: usize) -> bool {
        self.watched[user][item]
    }

    /// Fraction of users who watched each item.
    pub fn item_popularity(&self) -> Vec<f64> {
        (0..self.item_count)
            .map(|e| {
                let n = self.watched.iter().filter(|row| row[e]).count();
                n as f64 / self.user_count as f64
            })
            .collect()
    }
}

/// One `user_id item_id` pair per line, 0-based; each listed pair is a watch.
pub fn parse_ratings(text: &str) -> Result<RatingsMatrix, ParseError> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    let (mut users, mut items) = (0, 0);
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let malformed = |message: String| ParseError::Malformed { line, message };
        if fields.len() != 2 {
            return Err(malformed(format!("expected `user_id item_id`, got {} fields", fields.len())));
        }
        let id = |s: &str| s.parse::<usize>().map_err(|_| malformed(format!("invalid id `{s}`")));
        let (u, e) = (id(fields[0])?, id(fields[1])?);
        if !seen.insert((u, e)) {
            return Err(malformed(format!("duplicate pair ({u}, {e})")));
        }
        users = users.max(u + 1);
        items = items.max(e + 1);
        pairs.push((u, e));
    }
    if pairs.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut watched = vec![vec![false; items]; users];
    for (u, e) in pairs {
        watched[u][e] = true;
    }
    RatingsMatrix::new(watched).map_err(|e| ParseError::Invalid(e.to_string()))
}

pub fn load_ratings(path: impl AsRef<Path>) -> Result<RatingsMatrix, ParseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_ratings(&text)
}

#[derive(Debug, Clone)]
enum Sampler {
    Bernoulli,
    /// `mean - 1 + Exp(1)`.
    ShiftedExponential,
    Users(Arc<RatingsMatrix>),
}

#[derive(Debug, Clone)]
pub struct Environment<F> {
    kind: EnvironmentKind,
    mean_weights: Vec<F>,
    objective: Objective<F>,
    sampler: Sampler,
}

fn uniform01<F: Real, R: Rng + ?Sized>(rng: &mut R) -> F {
    F::from_f64_lossy(rng.random::<f64>())
}

impl<F: Real> Environment<F> {
    /// Independent Bernoulli weights with the given means.
    pub fn bernoulli(means: Vec<F>, objective: Objective<F>) -> Result<Self, EnvironmentError> {
        Self::bernoulli_kind(EnvironmentKind::BernoulliVector, means, objective)
    }

    fn bernoulli_kind(
        kind: EnvironmentKind,
        means: Vec<F>,
        objective: Objective<F>,
    ) -> Result<Self, EnvironmentError> {
        if let Some(e) = means.iter().position(|&p| !(p >= F::zero() && p <= F::one())) {
            return Err(EnvironmentError::InvalidParameter(format!(
                "Bernoulli mean of item {e} is outside [0, 1]"
            )));
        }
        Ok(Self {
            kind,
            mean_weights: means,
            objective,
            sampler: Sampler::Bernoulli,
        })
    }

    pub fn kind(&self) -> EnvironmentKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.mean_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_weights.is_empty()
    }

    /// `E[w]` in native units.
    pub fn mean_weights(&self) -> &[F] {
        &self.mean_weights
    }

    pub fn objective(&self) -> Objective<F> {
        self.objective
    }

    pub fn is_minimization(&self) -> bool {
        matches!(self.objective, Objective::Minimize { .. })
    }

    /// Draws one weight vector in native units.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<F> {
        match &self.sampler {
            Sampler::Bernoulli => self
                .mean_weights
                .iter()
                .map(|&p| if uniform01::<F, _>(rng) < p { F::one() } else { F::zero() })
                .collect(),
            Sampler::ShiftedExponential => self
                .mean_weights
                .iter()
                .map(|&m| {
                    // inverse CDF of Exp(1)
                    let u: F = uniform01(rng);
                    m - F::one() - (F::one() - u).ln()
                })
                .collect(),
            Sampler::Users(ratings) => {
                let user = rng.random_range(0..ratings.user_count() as u64) as usize;
                (0..ratings.item_count())
                    .map(|e| if ratings.watched(user, e) { F::one() } else { F::zero() })
                    .collect()
            }
        }
    }

    /// Native weights mapped to the maximization scale the learner uses.
    pub fn to_learner(&self, w: &[F]) -> Vec<F> {
        match self.objective {
            Objective::Maximize => w.to_vec(),
            Objective::Minimize { cap } => w.iter().map(|&v| cap - v).collect(),
        }
    }

    /// Mean weights on the learner's scale.
    pub fn learner_means(&self) -> Vec<F> {
        self.to_learner(&self.mean_weights)
    }

    /// Number of entries of `w` that fall outside the transform's range
    /// (`w > cap`) and therefore map to negative learner weights.
    pub fn cap_exceedances(&self, w: &[F]) -> usize {
        match self.objective {
            Objective::Maximize => 0,
            Objective::Minimize { cap } => w.iter().filter(|&&v| v > cap).count(),
        }
    }
}

fn check_unit_gap<F: Real>(delta: F, upper: F, what: &str) -> Result<(), EnvironmentError> {
    if !(delta > F::zero() && delta < upper) {
        return Err(EnvironmentError::InvalidParameter(format!(
            "{what} needs 0 < delta < {upper}, got {delta}"
        )));
    }
    Ok(())
}

/// Flow network with `l` source nodes and maximum flow `k`. Costs are
/// Bernoulli with mean `0.5 - delta/2` on the first `4k/3` nodes and
/// `0.5 + delta/2` elsewhere. Minimization with cap 1.
pub fn make_flow_env<F: Real>(l: usize, k: F, delta: F) -> Result<(Environment<F>, Polymatroid<F>), EnvironmentError> {
    if !(delta >= F::zero() && delta < F::one()) {
        return Err(EnvironmentError::InvalidParameter(format!(
            "flow environment needs 0 <= delta < 1, got {delta}"
        )));
    }
    let m = make_paired_flow_polymatroid(l, k)?;
    // 4K/3 = 2 * (K / (3/2)), integral by construction
    let cheap = 2 * polymatroid::flow_pair_count(k)?;
    let two = F::one() + F::one();
    let half = F::one() / two;
    let means = (0..l)
        .map(|e| if e < cheap { half - delta / two } else { half + delta / two })
        .collect();
    let env = Environment::bernoulli_kind(EnvironmentKind::FlowCost, means, Objective::Minimize { cap: F::one() })?;
    Ok((env, m))
}

/// `k` blocks of `l/k` consecutive items; the first item of each block has
/// mean 0.5, the rest `0.5 - delta`.
pub fn make_partition_bandit_env<F: Real>(
    l: usize,
    k: usize,
    delta: F,
) -> Result<(Environment<F>, Polymatroid<F>), EnvironmentError> {
    if k == 0 || l == 0 || !l.is_multiple_of(k) {
        return Err(EnvironmentError::InvalidParameter(format!(
            "partition bandit needs L/K to be an integer, got L={l}, K={k}"
        )));
    }
    let half = F::one() / (F::one() + F::one());
    check_unit_gap(delta, half, "partition bandit")?;
    let size = l / k;
    let parts: Vec<Vec<usize>> = (0..k).map(|p| (p * size..(p + 1) * size).collect()).collect();
    let m = make_partition_matroid(&parts)?;
    let means = (0..l)
        .map(|e| if e % size == 0 { half } else { half - delta })
        .collect();
    let env = Environment::bernoulli_kind(EnvironmentKind::PartitionBandit, means, Objective::Maximize)?;
    Ok((env, m))
}

/// Rank-`k` uniform matroid; the first `k` items have mean 0.5, the rest
/// `0.5 - delta`.
pub fn make_uniform_bandit_env<F: Real>(
    l: usize,
    k: usize,
    delta: F,
) -> Result<(Environment<F>, Polymatroid<F>), EnvironmentError> {
    let half = F::one() / (F::one() + F::one());
    check_unit_gap(delta, half, "uniform bandit")?;
    let m = make_uniform_matroid(l, k)?;
    let means = (0..l).map(|e| if e < k { half } else { half - delta }).collect();
    let env = Environment::bernoulli_kind(EnvironmentKind::UniformBandit, means, Objective::Maximize)?;
    Ok((env, m))
}

/// Spanning trees over a connected graph with latencies
/// `mean - 1 + Exp(1)`. Minimization; the learner sees `cap - latency`.
pub fn make_latency_env<F: Real>(
    graph: &GraphTopology,
    cap: F,
) -> Result<(Environment<F>, Polymatroid<F>), EnvironmentError> {
    let components = graph.component_count();
    if components != 1 {
        return Err(EnvironmentError::Disconnected(components));
    }
    let means: Vec<F> = graph.edges.iter().map(|e| F::from_f64_lossy(e.mean_latency)).collect();
    let top = means.iter().copied().fold(F::zero(), F::max);
    if !(cap >= top) {
        return Err(EnvironmentError::InvalidParameter(format!(
            "cap {cap} is below the largest mean latency {top}"
        )));
    }
    let m = make_graphic_matroid(graph)?;
    let env = Environment {
        kind: EnvironmentKind::Latency,
        mean_weights: means,
        objective: Objective::Minimize { cap },
        sampler: Sampler::ShiftedExponential,
    };
    Ok((env, m))
}

/// Diverse recommendation: topic-coverage polymatroid (unnormalized when
/// items span several topics) and a uniformly drawn user per episode.
pub fn make_coverage_env<F: Real>(
    ratings: &RatingsMatrix,
    coverage: &CoverageMap,
) -> Result<(Environment<F>, Polymatroid<F>), EnvironmentError> {
    if ratings.item_count() != coverage.item_count() {
        return Err(EnvironmentError::DimensionMismatch(format!(
            "ratings cover {} items, coverage map {}",
            ratings.item_count(),
            coverage.item_count()
        )));
    }
    let m = make_coverage_polymatroid(coverage)?;
    let means = ratings
        .item_popularity()
        .into_iter()
        .map(F::from_f64_lossy)
        .collect();
    let env = Environment {
        kind: EnvironmentKind::UserCoverage,
        mean_weights: means,
        objective: Objective::Maximize,
        sampler: Sampler::Users(Arc::new(ratings.clone())),
    };
    Ok((env, m))
}

/// Connected random graph: a random spanning tree plus `extra_edges`
/// distinct chords, integer mean latencies in `1..=max_latency` ms.
pub fn synthetic_graph(
    nodes: usize,
    extra_edges: usize,
    max_latency: u32,
    seed: u64,
) -> Result<GraphTopology, EnvironmentError> {
    if nodes < 2 || max_latency == 0 {
        return Err(EnvironmentError::InvalidParameter(
            "synthetic graph needs at least 2 nodes and a positive latency range".into(),
        ));
    }
    let possible = nodes * (nodes - 1) / 2;
    if nodes - 1 + extra_edges > possible {
        return Err(EnvironmentError::InvalidParameter(format!(
            "{nodes} nodes admit at most {possible} edges"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let latency = |rng: &mut StreamRng| 1.0 + rng.random_range(0..max_latency as u64) as f64;
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(nodes - 1 + extra_edges);
    for v in 1..nodes {
        let u = rng.random_range(0..v as u64) as usize;
        seen.insert((u, v));
        edges.push(Edge { u, v, mean_latency: latency(&mut rng) });
    }
    while edges.len() < nodes - 1 + extra_edges {
        let a = rng.random_range(0..nodes as u64) as usize;
        let b = rng.random_range(0..nodes as u64) as usize;
        let (u, v) = (a.min(b), a.max(b));
        if u == v || !seen.insert((u, v)) {
            continue;
        }
        edges.push(Edge { u, v, mean_latency: latency(&mut rng) });
    }
    Ok(GraphTopology::new(nodes, edges)?)
}

/// Random ratings and genre map shaped like a pool of frequently and rarely
/// watched items: the first half of the items has popularity in
/// `[0.2, 0.8)`, the second half in `[0, 0.05)`. Each item covers 1 to 3
/// topics, every topic is covered when `items >= topics`, and each user
/// watches each item independently with its popularity.
pub fn synthetic_ratings(
    users: usize,
    items: usize,
    topics: usize,
    seed: u64,
) -> Result<(RatingsMatrix, CoverageMap), EnvironmentError> {
    if users == 0 || items == 0 || topics == 0 {
        return Err(EnvironmentError::InvalidParameter(
            "synthetic ratings need positive users, items and topics".into(),
        ));
    }
    let mut rng = stream_rng(seed, 1);
    let topics_of: Vec<Vec<usize>> = (0..items)
        .map(|e| {
            let count = 1 + rng.random_range(0..3u64) as usize;
            let mut ts: Vec<usize> = (0..count)
                .map(|_| rng.random_range(0..topics as u64) as usize)
                .collect();
            // round-robin first topic so every topic appears when items >= topics
            ts[0] = e % topics;
            ts
        })
        .collect();
    let popularity: Vec<f64> = (0..items)
        .map(|e| {
            let u: f64 = rng.random();
            if e < items.div_ceil(2) {
                0.2 + 0.6 * u
            } else {
                0.05 * u
            }
        })
        .collect();
    let watched = (0..users)
        .map(|_| popularity.iter().map(|&p| rng.random::<f64>() < p).collect())
        .collect();
    let map = CoverageMap::new(topics_of, topics)?;
    Ok((RatingsMatrix::new(watched)?, map))
}
