//! Combinatorial semi-bandits on polymatroids.
//!
//! [`polymatroid`] holds rank oracles and the greedy algorithm,
//! [`bandit`] the optimistic learner and its baselines, [`environments`]
//! the stochastic weight models, [`analysis`] regret accounting and bounds,
//! and [`experiment`] the seeded multi-run harness behind the CLI.
//!
//! The combinatorial layer is generic over [`scalar::Scalar`] (floats and
//! exact rationals); learning code is generic over [`scalar::Real`].

pub mod analysis;
pub mod bandit;
pub mod environments;
pub mod experiment;
pub mod polymatroid;
pub mod scalar;

pub use scalar::{Real, Scalar};

/// Exact rational scalar.
pub type Rational = num_rational::Ratio<i64>;

pub type Polymatroid64 = polymatroid::Polymatroid<f64>;
pub type Basis64 = polymatroid::Basis<f64>;
pub type PolymatroidQ = polymatroid::Polymatroid<Rational>;
pub type BasisQ = polymatroid::Basis<Rational>;
pub type Environment64 = environments::Environment<f64>;
pub type BanditState64 = bandit::BanditState<f64>;
pub type GapStructure64 = analysis::GapStructure<f64>;
