//! Optimistic polymatroid maximization and the baselines it is compared to.
//!
//! All learners work on the maximization scale: for minimization problems
//! the caller passes `cap - w` (see [`crate::environments::Environment::to_learner`]).
//! Feedback is semi-bandit: the weight of every item with `x(e) > 0` is
//! revealed after the episode.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environments::StreamRng;
use crate::polymatroid::{greedy_by_order, greedy_by_scores, greedy_max_basis, Basis, Polymatroid, PolymatroidError};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum BanditError {
    #[error("bandit state is not initialized")]
    Uninitialized,
    #[error("expected {expected} weights, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("epsilon must lie in [0, 1], got {0}")]
    InvalidEpsilon(f64),
    #[error("epsilon-greedy policy needs an epsilon")]
    MissingEpsilon,
    #[error(transparent)]
    Polymatroid(#[from] PolymatroidError),
}

/// Sufficient statistics of the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditState<F> {
    /// Episodes played so far. The next episode has index `t + 1`.
    pub t: u64,
    /// `T(e)`: number of times item `e` has been observed.
    pub counts: Vec<u64>,
    /// `ŵ(e)`: running mean of the observed weights.
    pub means: Vec<F>,
}

impl<F: Real> BanditState<F> {
    /// State with nothing observed.
    pub fn empty(l: usize) -> Self {
        Self {
            t: 0,
            counts: vec![0; l],
            means: vec![F::zero(); l],
        }
    }

    /// One observation of every item, counted as no episode.
    pub fn from_observation(w0: &[F]) -> Self {
        Self {
            t: 0,
            counts: vec![1; w0.len()],
            means: w0.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn is_initialized(&self) -> bool {
        !self.counts.is_empty() && (self.t > 0 || self.counts.iter().all(|&c| c > 0))
    }

    /// Folds in the weights of every item in the support of `x`.
    pub fn observe(&mut self, x: &[F], w: &[F]) -> Vec<usize> {
        let mut observed = Vec::new();
        for (e, (&xe, &we)) in x.iter().zip(w).enumerate() {
            if xe > F::zero() {
                let old = F::from_u64(self.counts[e]).expect("count fits in scalar");
                self.counts[e] += 1;
                let new = old + F::one();
                self.means[e] = (old * self.means[e] + we) / new;
                observed.push(e);
            }
        }
        observed
    }
}

/// `sqrt(2 ln(elapsed) / count)`; zero while `elapsed <= 1`.
///
/// `count == 0` only happens for items whose singleton rank is zero, which
/// never receive weight; they get the radius of a single observation.
pub fn confidence_radius<F: Real>(elapsed: F, count: u64) -> F {
    if elapsed <= F::one() {
        return F::zero();
    }
    let count = F::from_u64(count.max(1)).expect("count fits in scalar");
    ((F::one() + F::one()) * elapsed.ln() / count).sqrt()
}

/// Upper confidence bounds for episode `state.t + 1`:
/// `U(e) = ŵ(e) + sqrt(2 ln(t) / T(e))`.
pub fn ucb_values<F: Real>(state: &BanditState<F>) -> Result<Vec<F>, BanditError> {
    if !state.is_initialized() {
        return Err(BanditError::Uninitialized);
    }
    let elapsed = F::from_u64(state.t).expect("episode count fits in scalar");
    Ok(state
        .means
        .iter()
        .zip(&state.counts)
        .map(|(&m, &c)| m + confidence_radius(elapsed, c))
        .collect())
}

/// One played episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<F> {
    /// 1-based episode index.
    pub t: u64,
    pub basis: Basis<F>,
    /// Scores the basis was chosen by; empty for fixed-order episodes.
    pub scores: Vec<F>,
    /// Realized weights on the learner's scale.
    pub weights: Vec<F>,
    pub observed: Vec<usize>,
    /// `<w_t, x_t>`.
    pub payoff: F,
}

fn check_len<F>(state: &BanditState<F>, w: &[F]) -> Result<(), BanditError> {
    if state.counts.len() != w.len() {
        return Err(BanditError::DimensionMismatch {
            expected: state.counts.len(),
            found: w.len(),
        });
    }
    Ok(())
}

fn play<F: Real>(
    state: &mut BanditState<F>,
    basis: Basis<F>,
    scores: Vec<F>,
    w: &[F],
) -> EpisodeRecord<F> {
    let observed = state.observe(&basis.x, w);
    state.t += 1;
    let payoff = basis.value(w);
    EpisodeRecord {
        t: state.t,
        basis,
        scores,
        weights: w.to_vec(),
        observed,
        payoff,
    }
}

/// One OPM episode: greedy on the UCBs, then semi-bandit update with `w`.
pub fn opm_step<F: Real>(
    state: &mut BanditState<F>,
    m: &Polymatroid<F>,
    w: &[F],
) -> Result<EpisodeRecord<F>, BanditError> {
    check_len(state, w)?;
    let u = ucb_values(state)?;
    let basis = greedy_by_scores(m, &u)?;
    Ok(play(state, basis, u, w))
}

/// With probability `epsilon` the scores are i.i.d. `U[0, 1)`, otherwise the
/// empirical means.
pub fn epsilon_greedy_step<F: Real, R: Rng + ?Sized>(
    state: &mut BanditState<F>,
    m: &Polymatroid<F>,
    w: &[F],
    epsilon: f64,
    rng: &mut R,
) -> Result<EpisodeRecord<F>, BanditError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(BanditError::InvalidEpsilon(epsilon));
    }
    check_len(state, w)?;
    if !state.is_initialized() {
        return Err(BanditError::Uninitialized);
    }
    let scores: Vec<F> = if rng.random::<f64>() < epsilon {
        (0..state.len()).map(|_| F::from_f64_lossy(rng.random::<f64>())).collect()
    } else {
        state.means.clone()
    };
    let basis = greedy_by_scores(m, &scores)?;
    Ok(play(state, basis, scores, w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Observe one full weight vector before the first episode.
    #[default]
    FullVector,
    /// Play `L` forced episodes; episode `e` puts item `e` first.
    Staged,
}

/// Initial statistics. `draw` yields learner-scale weight vectors. Staged
/// initialization returns the forced episodes so their regret can be counted.
pub fn initialize<F: Real>(
    m: &Polymatroid<F>,
    mode: InitMode,
    mut draw: impl FnMut() -> Vec<F>,
) -> Result<(BanditState<F>, Vec<EpisodeRecord<F>>), BanditError> {
    let l = m.len();
    match mode {
        InitMode::FullVector => {
            let w0 = draw();
            if w0.len() != l {
                return Err(BanditError::DimensionMismatch { expected: l, found: w0.len() });
            }
            Ok((BanditState::from_observation(&w0), Vec::new()))
        }
        InitMode::Staged => {
            let mut state = BanditState::empty(l);
            let mut records = Vec::with_capacity(l);
            for first in 0..l {
                let w = draw();
                check_len(&state, &w)?;
                let order: Vec<usize> = std::iter::once(first).chain((0..l).filter(|&e| e != first)).collect();
                let basis = greedy_by_order(m, &order)?;
                records.push(play(&mut state, basis, Vec::new(), &w));
            }
            Ok((state, records))
        }
    }
}

/// Optimal basis under known means.
pub fn oracle_policy<F: Real>(m: &Polymatroid<F>, means: &[F]) -> Result<Basis<F>, BanditError> {
    Ok(greedy_max_basis(m, means)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Opm,
    EpsilonGreedy,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub init_mode: InitMode,
    /// Seed of the policy's own random stream; defaults to the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
}

impl PolicyConfig {
    pub fn opm() -> Self {
        Self {
            kind: PolicyKind::Opm,
            epsilon: None,
            init_mode: InitMode::FullVector,
            rng_seed: None,
        }
    }

    pub fn epsilon_greedy(epsilon: f64) -> Self {
        Self {
            kind: PolicyKind::EpsilonGreedy,
            epsilon: Some(epsilon),
            ..Self::opm()
        }
    }

    pub fn oracle() -> Self {
        Self {
            kind: PolicyKind::Oracle,
            ..Self::opm()
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            PolicyKind::Opm => "opm".into(),
            PolicyKind::EpsilonGreedy => format!("epsilon_greedy_{}", self.epsilon.unwrap_or(f64::NAN)),
            PolicyKind::Oracle => "oracle".into(),
        }
    }

    pub fn validate(&self) -> Result<(), BanditError> {
        match (self.kind, self.epsilon) {
            (PolicyKind::EpsilonGreedy, None) => Err(BanditError::MissingEpsilon),
            (PolicyKind::EpsilonGreedy, Some(eps)) if !(0.0..=1.0).contains(&eps) => {
                Err(BanditError::InvalidEpsilon(eps))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
enum Policy<F> {
    Opm,
    EpsilonGreedy(f64),
    Oracle(Basis<F>),
}

/// A configured policy with its state and private random stream.
#[derive(Debug, Clone)]
pub struct Learner<F> {
    policy: Policy<F>,
    state: BanditState<F>,
    rng: StreamRng,
}

impl<F: Real> Learner<F> {
    /// `means` is only used by the oracle policy. Returns the forced
    /// episodes of staged initialization alongside the learner.
    pub fn new(
        config: &PolicyConfig,
        m: &Polymatroid<F>,
        means: &[F],
        draw: impl FnMut() -> Vec<F>,
        rng: StreamRng,
    ) -> Result<(Self, Vec<EpisodeRecord<F>>), BanditError> {
        config.validate()?;
        let (policy, (state, records)) = match config.kind {
            PolicyKind::Oracle => (
                Policy::Oracle(oracle_policy(m, means)?),
                (BanditState::empty(m.len()), Vec::new()),
            ),
            PolicyKind::Opm => (Policy::Opm, initialize(m, config.init_mode, draw)?),
            PolicyKind::EpsilonGreedy => (
                Policy::EpsilonGreedy(config.epsilon.ok_or(BanditError::MissingEpsilon)?),
                initialize(m, config.init_mode, draw)?,
            ),
        };
        Ok((Self { policy, state, rng }, records))
    }

    pub fn state(&self) -> &BanditState<F> {
        &self.state
    }

    pub fn step(&mut self, m: &Polymatroid<F>, w: &[F]) -> Result<EpisodeRecord<F>, BanditError> {
        match &self.policy {
            Policy::Opm => opm_step(&mut self.state, m, w),
            Policy::EpsilonGreedy(eps) => epsilon_greedy_step(&mut self.state, m, w, *eps, &mut self.rng),
            Policy::Oracle(basis) => {
                check_len(&self.state, w)?;
                Ok(play(&mut self.state, basis.clone(), Vec::new(), w))
            }
        }
    }
}
