//! Experiment configuration, seeded multi-run execution and output files.
//!
//! A run `r` draws its weights from ChaCha8 stream `(base_seed, r)` and its
//! policy randomness from stream `(policy seed, r | 2^63)`, so every output
//! byte is fixed by the configuration and the seed regardless of `--jobs`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    compute_gaps, decompose_episode, gap_dependent_bound, gap_dependent_coefficients, gap_free_bound,
    lower_bound_gap_dependent, lower_bound_gap_free, AnalysisError, GapStructure, RegretReport, ReportRow,
};
use crate::bandit::{BanditError, InitMode, Learner, PolicyConfig};
use crate::environments::{
    load_ratings, make_coverage_env, make_flow_env, make_latency_env, make_partition_bandit_env,
    make_uniform_bandit_env, stream_rng, synthetic_graph, synthetic_ratings, Environment, EnvironmentError,
    EnvironmentKind, Objective,
};
use crate::polymatroid::{
    check_polymatroid_axioms, load_coverage_map, load_edge_list, make_coverage_polymatroid,
    make_graphic_matroid, make_paired_flow_polymatroid, make_partition_matroid, make_uniform_matroid, CoverageMap,
    ParseError, Polymatroid, PolymatroidError,
};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Subsets examined by the axiom check before it switches to sampling.
pub const AXIOM_BUDGET: usize = 1 << 16;

const POLICY_STREAM: u64 = 1 << 63;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    ConfigParse { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("diagnostic violation: {0}")]
    Diagnostic(String),
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
    #[error(transparent)]
    Polymatroid(#[from] PolymatroidError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PolymatroidSpec {
    Uniform {
        #[serde(alias = "L")]
        l: usize,
        #[serde(alias = "K")]
        k: usize,
    },
    Partition { parts: Vec<Vec<usize>> },
    PairedFlow {
        #[serde(alias = "L")]
        l: usize,
        #[serde(alias = "K")]
        k: f64,
    },
    Graphic { edge_list: PathBuf },
    /// Either an inline `topics` list per item or a `map` file.
    Coverage {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        topics: Option<Vec<Vec<usize>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        map: Option<PathBuf>,
    },
}

fn coverage_map(topics: &Option<Vec<Vec<usize>>>, map: &Option<PathBuf>) -> Result<CoverageMap, ExperimentError> {
    match (topics, map) {
        (Some(topics), None) => {
            let count = topics.iter().flatten().map(|&t| t + 1).max().unwrap_or(0);
            Ok(CoverageMap::new(topics.clone(), count)?)
        }
        (None, Some(path)) => Ok(load_coverage_map(path)?),
        _ => Err(ExperimentError::Config(
            "coverage polymatroid needs exactly one of `topics` and `map`".into(),
        )),
    }
}

impl PolymatroidSpec {
    pub fn build(&self) -> Result<Polymatroid<f64>, ExperimentError> {
        Ok(match self {
            Self::Uniform { l, k } => make_uniform_matroid(*l, *k)?,
            Self::Partition { parts } => make_partition_matroid(parts)?,
            Self::PairedFlow { l, k } => make_paired_flow_polymatroid(*l, *k)?,
            Self::Graphic { edge_list } => make_graphic_matroid(&load_edge_list(edge_list)?)?,
            Self::Coverage { topics, map } => make_coverage_polymatroid(&coverage_map(topics, map)?)?,
        })
    }

    fn resolve(&mut self, base: &Path) {
        match self {
            Self::Graphic { edge_list } => *edge_list = base.join(&*edge_list),
            Self::Coverage { map: Some(path), .. } => *path = base.join(&*path),
            _ => {}
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let mut spec: Self = parse_structured(path)?;
        spec.resolve(path.parent().unwrap_or(Path::new(".")));
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticGraph {
    pub nodes: usize,
    pub extra_edges: usize,
    #[serde(default = "default_max_latency")]
    pub max_latency: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_latency() -> u32 {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticRatings {
    pub users: usize,
    pub items: usize,
    pub topics: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentSpec {
    Flow {
        #[serde(alias = "L")]
        l: usize,
        #[serde(alias = "K")]
        k: f64,
        delta: f64,
    },
    PartitionBandit {
        #[serde(alias = "L")]
        l: usize,
        #[serde(alias = "K")]
        k: usize,
        delta: f64,
    },
    UniformBandit {
        #[serde(alias = "L")]
        l: usize,
        #[serde(alias = "K")]
        k: usize,
        delta: f64,
    },
    BernoulliVector {
        means: Vec<f64>,
        polymatroid: PolymatroidSpec,
        /// Treat the weights as costs (cap 1).
        #[serde(default)]
        minimize: bool,
    },
    /// Exactly one of `edge_list` and `synthetic`. `cap` defaults to the
    /// largest mean latency.
    Latency {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edge_list: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        synthetic: Option<SyntheticGraph>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<f64>,
    },
    /// Either both `ratings` and `coverage` files, or `synthetic`.
    UserCoverage {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratings: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coverage: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        synthetic: Option<SyntheticRatings>,
    },
}

impl EnvironmentSpec {
    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                *path = base.join(&*path);
            }
        };
        match self {
            Self::BernoulliVector { polymatroid, .. } => polymatroid.resolve(base),
            Self::Latency { edge_list, .. } => join(edge_list),
            Self::UserCoverage { ratings, coverage, .. } => {
                join(ratings);
                join(coverage);
            }
            _ => {}
        }
    }

    pub fn build(&self) -> Result<(Environment<f64>, Polymatroid<f64>), ExperimentError> {
        Ok(match self {
            Self::Flow { l, k, delta } => make_flow_env(*l, *k, *delta)?,
            Self::PartitionBandit { l, k, delta } => make_partition_bandit_env(*l, *k, *delta)?,
            Self::UniformBandit { l, k, delta } => make_uniform_bandit_env(*l, *k, *delta)?,
            Self::BernoulliVector { means, polymatroid, minimize } => {
                let m = polymatroid.build()?;
                if m.len() != means.len() {
                    return Err(ExperimentError::Config(format!(
                        "{} means for a ground set of {} items",
                        means.len(),
                        m.len()
                    )));
                }
                let objective = if *minimize { Objective::Minimize { cap: 1.0 } } else { Objective::Maximize };
                (Environment::bernoulli(means.clone(), objective)?, m)
            }
            Self::Latency { edge_list, synthetic, cap } => {
                let graph = match (edge_list, synthetic) {
                    (Some(path), None) => load_edge_list(path)?,
                    (None, Some(s)) => synthetic_graph(s.nodes, s.extra_edges, s.max_latency, s.seed)?,
                    _ => {
                        return Err(ExperimentError::Config(
                            "latency environment needs exactly one of `edge_list` and `synthetic`".into(),
                        ))
                    }
                };
                let top = graph.mean_latencies().into_iter().fold(0.0, f64::max);
                make_latency_env(&graph, cap.unwrap_or(top))?
            }
            Self::UserCoverage { ratings, coverage, synthetic } => match (ratings, coverage, synthetic) {
                (Some(r), Some(c), None) => make_coverage_env(&load_ratings(r)?, &load_coverage_map(c)?)?,
                (None, None, Some(s)) => {
                    let (r, c) = synthetic_ratings(s.users, s.items, s.topics, s.seed)?;
                    make_coverage_env(&r, &c)?
                }
                _ => {
                    return Err(ExperimentError::Config(
                        "user_coverage needs `ratings` and `coverage`, or `synthetic`".into(),
                    ))
                }
            },
        })
    }

    /// `(L, K, Δ)` when the instance admits the closed-form lower bounds.
    fn lower_bound_params(&self) -> Option<(usize, usize, f64)> {
        match *self {
            Self::PartitionBandit { l, k, delta } => Some((l, k, delta)),
            Self::UniformBandit { l, k, delta } if k > 0 && l % k == 0 => Some((l, k, delta)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Every episode.
    #[default]
    All,
    /// Log-spaced checkpoints.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    #[serde(default)]
    pub decomposition_check: bool,
    #[serde(default)]
    pub axiom_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: u64,
    pub runs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(default)]
    pub trace: TraceMode,
    #[serde(default = "default_points_per_decade")]
    pub points_per_decade: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub environment: EnvironmentSpec,
    pub policies: Vec<PolicyConfig>,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

fn default_points_per_decade() -> u32 {
    20
}

fn parse_structured<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ExperimentError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|message| ExperimentError::ConfigParse {
        path: path.display().to_string(),
        message,
    })
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the extension is `.json`. Relative data
    /// paths are resolved against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let mut cfg: Self = parse_structured(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.environment.resolve(base);
        if let Some(out) = &cfg.output_dir {
            cfg.output_dir = Some(base.join(out));
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::ConfigParse {
            path: "<string>".into(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> Result<String, ExperimentError> {
        toml::to_string(self).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n == 0 || self.runs == 0 {
            return Err(ExperimentError::Config("n and runs must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(ExperimentError::Config("at least one policy is required".into()));
        }
        if self.trace == TraceMode::Log && self.points_per_decade == 0 {
            return Err(ExperimentError::Config("points_per_decade must be positive".into()));
        }
        for p in &self.policies {
            p.validate()?;
        }
        let mut labels: Vec<String> = self.policies.iter().map(PolicyConfig::label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.policies.len() {
            return Err(ExperimentError::Config("policy labels must be distinct".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, without the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Episodes at which traces are recorded; always ends at `n`.
pub fn checkpoints(n: u64, mode: TraceMode, per_decade: u32) -> Vec<u64> {
    match mode {
        TraceMode::All => (1..=n).collect(),
        TraceMode::Log => {
            let mut points = Vec::new();
            let mut i = 0u32;
            loop {
                let t = 10f64.powf(i as f64 / per_decade as f64).round() as u64;
                if t >= n {
                    break;
                }
                if points.last() != Some(&t) {
                    points.push(t);
                }
                i += 1;
            }
            points.push(n);
            points
        }
    }
}

/// A built environment with everything needed to score runs.
#[derive(Debug, Clone)]
pub struct Instance {
    pub env: Environment<f64>,
    pub polymatroid: Polymatroid<f64>,
    /// Gaps on the learner's (maximization) scale.
    pub gaps: GapStructure<f64>,
    /// `(a, b)` of the gap-dependent bound `a ln n + b`, absent when every gap is zero.
    pub bound_coefficients: Option<(f64, f64)>,
    pub lower_bound_params: Option<(usize, usize, f64)>,
}

impl Instance {
    pub fn build(spec: &EnvironmentSpec) -> Result<Self, ExperimentError> {
        let (env, polymatroid) = spec.build()?;
        let gaps = compute_gaps(&polymatroid, &env.learner_means())?;
        let bound_coefficients = gap_dependent_coefficients(&gaps).ok();
        Ok(Self {
            env,
            polymatroid,
            gaps,
            bound_coefficients,
            lower_bound_params: spec.lower_bound_params(),
        })
    }

    pub fn bound_gap_dep(&self, n: u64) -> Option<f64> {
        self.bound_coefficients.map(|(a, b)| a * (n as f64).ln() + b)
    }

    pub fn bound_gap_free(&self, n: u64) -> f64 {
        gap_free_bound(self.polymatroid.rank(), self.polymatroid.len(), n).expect("n >= 1")
    }

    /// Optimal value in native units (a cost for minimization).
    pub fn optimal_native_value(&self) -> f64 {
        self.gaps.x_star.value(self.env.mean_weights())
    }
}

/// Outcome of a single seeded run of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: u64,
    pub report: RegretReport,
    pub final_regret: f64,
    pub final_return: f64,
    pub realized_regret: f64,
    /// Draws with `w > cap` on minimization problems.
    pub cap_exceedances: u64,
    pub decomposition_checks: u64,
}

/// Plays `n` episodes (staged initialization episodes included).
pub fn simulate_run(
    instance: &Instance,
    policy: &PolicyConfig,
    n: u64,
    base_seed: u64,
    run: u64,
    points: &[u64],
    decomposition_check: bool,
) -> Result<RunResult, ExperimentError> {
    let Instance { env, polymatroid: m, gaps, .. } = instance;
    let mut rng = stream_rng(base_seed, run);
    let policy_rng = stream_rng(policy.rng_seed.unwrap_or(base_seed), run | POLICY_STREAM);
    let mut exceed = 0u64;
    let mut draw = |rng: &mut _| {
        let w = env.sample(rng);
        exceed += env.cap_exceedances(&w) as u64;
        w
    };
    let learner_means = env.learner_means();
    let (mut learner, init_records) =
        Learner::new(policy, m, &learner_means, || env.to_learner(&draw(&mut rng)), policy_rng)?;

    let optimum = gaps.optimal_value();
    let mut regret = 0.0;
    let mut realized = 0.0;
    let mut total_return = 0.0;
    let mut rows = Vec::with_capacity(points.len());
    let mut next_point = points.iter().peekable();
    let mut checks = 0;

    let mut init = init_records.into_iter();
    for t in 1..=n {
        let (record, native) = match init.next() {
            Some(rec) => {
                let native = match env.objective() {
                    Objective::Maximize => rec.weights.clone(),
                    Objective::Minimize { cap } => rec.weights.iter().map(|&v| cap - v).collect(),
                };
                (rec, native)
            }
            None => {
                let native = draw(&mut rng);
                (learner.step(m, &env.to_learner(&native))?, native)
            }
        };
        regret += optimum - record.basis.value(&gaps.w_bar);
        realized += gaps.x_star.value(&record.weights) - record.payoff;
        total_return += record.basis.value(&native);
        if decomposition_check {
            let scores = (!record.scores.is_empty()).then_some(&record.scores[..]);
            decompose_episode(m, gaps, &record.basis.order, scores).map_err(|e| {
                ExperimentError::Diagnostic(format!("{} run {run} episode {t}: {e}", policy.label()))
            })?;
            checks += 1;
        }
        if next_point.peek() == Some(&&t) {
            next_point.next();
            rows.push(ReportRow {
                episode: t,
                regret_cum: regret,
                return_per_step: total_return / t as f64,
                bound_gap_dep: instance.bound_gap_dep(t),
                bound_gap_free: Some(instance.bound_gap_free(t)),
            });
        }
    }
    Ok(RunResult {
        run,
        report: RegretReport { rows },
        final_regret: regret,
        final_return: total_return / n as f64,
        realized_regret: realized,
        cap_exceedances: exceed,
        decomposition_checks: checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanStderr {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Self { mean, stderr }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub label: String,
    pub policy: PolicyConfig,
    pub init_mode: InitMode,
    pub regret: MeanStderr,
    pub realized_regret: MeanStderr,
    pub return_per_step: MeanStderr,
    pub cap_exceedances: u64,
    pub decomposition_checks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub gap_dependent: Option<f64>,
    pub gap_dependent_leading: Option<f64>,
    pub gap_free: f64,
    pub lower_gap_dependent: Option<f64>,
    pub lower_gap_free: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFlags {
    pub unnormalized: bool,
    pub max_singleton: f64,
    pub leading_zero_contribution: bool,
    pub min_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub code_version: String,
    pub config_hash: String,
    pub base_seed: u64,
    pub environment: EnvironmentKind,
    pub items: usize,
    pub rank: f64,
    pub n: u64,
    pub runs: u64,
    pub optimal_return_per_step: f64,
    pub bounds: BoundSummary,
    pub flags: InstanceFlags,
    pub policies: Vec<PolicySummary>,
}

#[derive(Debug, Clone)]
pub struct PolicyOutcome {
    pub label: String,
    pub runs: Vec<RunResult>,
    /// Checkpoint-wise mean over runs.
    pub mean: RegretReport,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: ExperimentSummary,
    pub policies: Vec<PolicyOutcome>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
    /// Overrides the config seed.
    pub seed: Option<u64>,
    /// Print progress to stderr.
    pub progress: bool,
}

/// Seed precedence: explicit option, config, then `POLYBANDIT_SEED`, then 0.
pub fn resolve_seed(cli: Option<u64>, cfg: &ExperimentConfig) -> Result<u64, ExperimentError> {
    if let Some(s) = cli.or(cfg.base_seed) {
        return Ok(s);
    }
    match std::env::var("POLYBANDIT_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| ExperimentError::Config(format!("POLYBANDIT_SEED is not a u64: `{v}`"))),
        Err(_) => Ok(0),
    }
}

fn mean_report(runs: &[RunResult]) -> RegretReport {
    let count = runs.len() as f64;
    let first = &runs[0].report.rows;
    let rows = (0..first.len())
        .map(|i| {
            let avg = |f: fn(&ReportRow) -> f64| runs.iter().map(|r| f(&r.report.rows[i])).sum::<f64>() / count;
            ReportRow {
                episode: first[i].episode,
                regret_cum: avg(|r| r.regret_cum),
                return_per_step: avg(|r| r.return_per_step),
                bound_gap_dep: first[i].bound_gap_dep,
                bound_gap_free: first[i].bound_gap_free,
            }
        })
        .collect();
    RegretReport { rows }
}

/// Runs every policy `runs` times in memory.
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutcome, ExperimentError> {
    cfg.validate()?;
    let base_seed = resolve_seed(opts.seed, cfg)?;
    let instance = Instance::build(&cfg.environment)?;
    if cfg.diagnostics.axiom_check {
        let report = check_polymatroid_axioms(&instance.polymatroid, AXIOM_BUDGET, base_seed);
        if !report.is_ok() {
            return Err(ExperimentError::Diagnostic(format!("axiom check failed: {:?}", report.violations)));
        }
    }
    let points = checkpoints(cfg.n, cfg.trace, cfg.points_per_decade);
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(j) = opts.jobs {
            builder = builder.num_threads(j);
        }
        builder.build().map_err(|e| ExperimentError::Config(e.to_string()))?
    };

    let mut outcomes = Vec::with_capacity(cfg.policies.len());
    let mut summaries = Vec::with_capacity(cfg.policies.len());
    for policy in &cfg.policies {
        let label = policy.label();
        let runs: Vec<RunResult> = pool.install(|| {
            (0..cfg.runs)
                .into_par_iter()
                .map(|r| {
                    simulate_run(
                        &instance,
                        policy,
                        cfg.n,
                        base_seed,
                        r,
                        &points,
                        cfg.diagnostics.decomposition_check,
                    )
                })
                .collect::<Result<_, _>>()
        })?;
        let collect = |f: fn(&RunResult) -> f64| runs.iter().map(f).collect::<Vec<_>>();
        let summary = PolicySummary {
            label: label.clone(),
            policy: policy.clone(),
            init_mode: policy.init_mode,
            regret: MeanStderr::of(&collect(|r| r.final_regret)),
            realized_regret: MeanStderr::of(&collect(|r| r.realized_regret)),
            return_per_step: MeanStderr::of(&collect(|r| r.final_return)),
            cap_exceedances: runs.iter().map(|r| r.cap_exceedances).sum(),
            decomposition_checks: runs.iter().map(|r| r.decomposition_checks).sum(),
        };
        if opts.progress {
            eprintln!(
                "{label}: regret {:.2} ± {:.2}, return per step {:.4}",
                summary.regret.mean, summary.regret.stderr, summary.return_per_step.mean
            );
            if summary.cap_exceedances > 0 {
                eprintln!("warning: {label}: {} draws exceeded the cost cap", summary.cap_exceedances);
            }
        }
        summaries.push(summary);
        outcomes.push(PolicyOutcome {
            label,
            mean: mean_report(&runs),
            runs,
        });
    }

    let m = &instance.polymatroid;
    let gap_bound = gap_dependent_bound(&instance.gaps, cfg.n).ok();
    let lower = instance.lower_bound_params.and_then(|(l, k, delta)| {
        let dep = lower_bound_gap_dependent(l, k, delta).ok()? * (cfg.n as f64).ln();
        let free = lower_bound_gap_free(l, k, cfg.n).ok()?;
        Some((dep, free))
    });
    let summary = ExperimentSummary {
        code_version: CODE_VERSION.into(),
        config_hash: cfg.hash(),
        base_seed,
        environment: instance.env.kind(),
        items: m.len(),
        rank: m.rank(),
        n: cfg.n,
        runs: cfg.runs,
        optimal_return_per_step: instance.optimal_native_value(),
        bounds: BoundSummary {
            gap_dependent: gap_bound.map(|b| b.full),
            gap_dependent_leading: gap_bound.map(|b| b.leading),
            gap_free: instance.bound_gap_free(cfg.n),
            lower_gap_dependent: lower.map(|l| l.0),
            lower_gap_free: lower.map(|l| l.1),
        },
        flags: InstanceFlags {
            unnormalized: !m.is_normalized(),
            max_singleton: m.max_singleton(),
            leading_zero_contribution: instance.gaps.leading_zero_contribution,
            min_gap: instance.gaps.min_gap,
        },
        policies: summaries,
    };
    Ok(ExperimentOutcome {
        summary,
        policies: outcomes,
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    fs::write(path, contents).map_err(io_error(path))
}

/// Writes `summary.json`, `<policy>/mean.csv`, `<policy>/run_NNNN.csv`, the
/// resolved `config.toml`, and a timestamped `run.log`.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    outcome: &ExperimentOutcome,
    dir: &Path,
    started: SystemTime,
) -> Result<(), ExperimentError> {
    let summary = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    write_file(&dir.join("summary.json"), format!("{summary}\n").as_bytes())?;
    write_file(&dir.join("config.toml"), cfg.to_toml()?.as_bytes())?;
    for p in &outcome.policies {
        let sub = dir.join(&p.label);
        write_file(&sub.join("mean.csv"), p.mean.to_csv_string().as_bytes())?;
        for r in &p.runs {
            write_file(&sub.join(format!("run_{:04}.csv", r.run)), r.report.to_csv_string().as_bytes())?;
        }
    }
    let secs = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let mut log = String::new();
    let _ = writeln!(log, "started_unix {:.3}", secs(started));
    let _ = writeln!(log, "finished_unix {:.3}", secs(SystemTime::now()));
    let _ = writeln!(log, "config_hash {}", outcome.summary.config_hash);
    let path = dir.join("run.log");
    let mut file = fs::File::create(&path).map_err(io_error(&path))?;
    file.write_all(log.as_bytes()).map_err(io_error(&path))
}

/// Executes the experiment and writes its files when `out` (or the
/// config's `output_dir`) is set.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    out: Option<&Path>,
) -> Result<ExperimentOutcome, ExperimentError> {
    let started = SystemTime::now();
    let outcome = execute(cfg, opts)?;
    if let Some(dir) = out.or(cfg.output_dir.as_deref()) {
        write_outputs(cfg, &outcome, dir, started)?;
    }
    Ok(outcome)
}
