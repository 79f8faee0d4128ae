//! Regret accounting, gaps, the per-episode exchange decomposition and
//! closed-form regret bounds.
//!
//! Everything here works on the maximization scale. Minimization instances
//! pass their transformed means (`cap - w̄`), which leaves regret unchanged.

use std::f64::consts::PI;
use std::io::{self, Write};

use thiserror::Error;

use crate::bandit::EpisodeRecord;
use crate::polymatroid::{dot, greedy_by_order, greedy_by_scores, ranked_order, Basis, Polymatroid, PolymatroidError};
use crate::scalar::{Real, Scalar};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no positive gap: every suboptimal item ties with the optimum")]
    ZeroGap,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty episode log")]
    EmptyLog,
    #[error("sequence must be positive and non-increasing (index {0})")]
    NonMonotone(usize),
    #[error(transparent)]
    Polymatroid(#[from] PolymatroidError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
}

fn check_len(expected: usize, found: usize) -> Result<(), AnalysisError> {
    if expected != found {
        return Err(AnalysisError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Items ordered by decreasing mean, the optimal basis, and for every item
/// `e` the index `ρ(e)`: the last position in that order holding an item
/// with a larger mean and a positive optimal contribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GapStructure<S> {
    pub w_bar: Vec<S>,
    /// Items by decreasing `w̄`, ties to the lower index.
    pub order: Vec<usize>,
    pub x_star: Basis<S>,
    /// 1-based position into `order`; 0 when no such item exists.
    pub rho: Vec<usize>,
    /// `min_e Δ_{e,ρ(e)}` over items with `ρ(e) > 0`.
    pub min_gap: Option<S>,
    /// The best item has no optimal contribution, so items ranked above
    /// the first contributing one all get `ρ = 0`.
    pub leading_zero_contribution: bool,
}

impl<S: Scalar> GapStructure<S> {
    pub fn len(&self) -> usize {
        self.w_bar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_bar.is_empty()
    }

    /// `Δ_{e,e*} = w̄(e*) - w̄(e)`.
    pub fn gap(&self, e: usize, e_star: usize) -> S {
        self.w_bar[e_star] - self.w_bar[e]
    }

    /// `Δ_{e,ρ(e)}`, if `ρ(e) > 0`.
    pub fn leading_gap(&self, e: usize) -> Option<S> {
        match self.rho[e] {
            0 => None,
            r => Some(self.gap(e, self.order[r - 1])),
        }
    }

    /// Items `e*` at positions `1..=ρ(e)`.
    pub fn dominating(&self, e: usize) -> &[usize] {
        &self.order[..self.rho[e]]
    }

    /// `<w̄, x*>`.
    pub fn optimal_value(&self) -> S {
        self.x_star.value(&self.w_bar)
    }
}

pub fn compute_gaps<S: Scalar>(m: &Polymatroid<S>, w_bar: &[S]) -> Result<GapStructure<S>, AnalysisError> {
    check_len(m.len(), w_bar.len())?;
    let x_star = greedy_by_scores(m, w_bar)?;
    let order = ranked_order(w_bar);
    let rho: Vec<usize> = (0..w_bar.len())
        .map(|e| {
            (1..=order.len())
                .rev()
                .find(|&j| {
                    let i = order[j - 1];
                    w_bar[i] > w_bar[e] && x_star.x[i] > S::zero()
                })
                .unwrap_or(0)
        })
        .collect();
    let leading_zero_contribution = order.first().is_some_and(|&i| x_star.x[i] <= S::zero());
    let mut gaps = GapStructure {
        w_bar: w_bar.to_vec(),
        order,
        x_star,
        rho,
        min_gap: None,
        leading_zero_contribution,
    };
    gaps.min_gap = (0..w_bar.len())
        .filter_map(|e| gaps.leading_gap(e))
        .fold(None, |acc: Option<S>, g| Some(acc.map_or(g, |a| a.min_of(g))));
    Ok(gaps)
}

/// `R(x, w) = <w, x*> - <w, x>`.
pub fn instantaneous_regret<S: Scalar>(x: &[S], x_star: &[S], w: &[S]) -> Result<S, AnalysisError> {
    check_len(w.len(), x.len())?;
    check_len(w.len(), x_star.len())?;
    Ok(dot(w, x_star) - dot(w, x))
}

/// Running sum of `<w̄, x*> - <w̄, x_t>`.
pub fn cumulative_regret<F: Real>(
    records: &[EpisodeRecord<F>],
    x_star: &[F],
    w_bar: &[F],
) -> Result<Vec<F>, AnalysisError> {
    let mut total = F::zero();
    records
        .iter()
        .map(|r| {
            total += instantaneous_regret(&r.basis.x, x_star, w_bar)?;
            Ok(total)
        })
        .collect()
}

/// Running sum of `<w_t, x*> - <w_t, x_t>` on the realized weights.
pub fn realized_regret<F: Real>(records: &[EpisodeRecord<F>], x_star: &[F]) -> Result<Vec<F>, AnalysisError> {
    let mut total = F::zero();
    records
        .iter()
        .map(|r| {
            total += instantaneous_regret(&r.basis.x, x_star, &r.weights)?;
            Ok(total)
        })
        .collect()
}

/// Cumulative mean of `values`: entry `i` is the average of the first `i + 1`.
pub fn running_average<F: Real>(values: &[F]) -> Result<Vec<F>, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::EmptyLog);
    }
    let mut total = F::zero();
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            total += v;
            total / F::from_usize(i + 1).expect("episode count fits in scalar")
        })
        .collect())
}

/// Cumulative payoff divided by the number of episodes so far.
pub fn per_step_return<F: Real>(records: &[EpisodeRecord<F>]) -> Result<Vec<F>, AnalysisError> {
    running_average(&records.iter().map(|r| r.payoff).collect::<Vec<_>>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionCheck {
    /// `y_0 = x*`.
    StartIsOptimal,
    /// `y_L = x`.
    EndIsChosen,
    /// Entries non-negative and summing to the rank.
    Basis,
    /// `y_{k-1} - y_k` vanishes on `A_{k-1}`.
    SignPrefix,
    /// `y_{k-1}(a_k) - y_k(a_k) <= 0`.
    SignChosen,
    /// `y_{k-1}(i) - y_k(i) >= 0` off `A_k`.
    SignRest,
    /// The change at `a_k` balances the changes elsewhere.
    Balance,
    /// `δ(e, e*) = 0` when `x*(e*) = 0`.
    ZeroOptimal,
    /// Per-step regret below its gap-weighted exchange.
    StepBound,
    /// Episode regret below the summed bound.
    EpisodeBound,
    /// `Σ δ <= K`.
    TotalExchange,
    /// `Σ_{e*} δ(e, e*) <= x(e) <= 1`.
    ItemExchange,
    /// `δ(e, e*) > 0` only for observed `e`.
    Observed,
    /// `δ(e, e*) > 0` only when `U(e) >= U(e*)`.
    Optimism,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{check:?} violated at step {step}, item {item}: {lhs} vs {rhs}")]
pub struct DecompositionError {
    pub check: DecompositionCheck,
    pub step: usize,
    pub item: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// The interpolation between `x*` and `x` together with the exchange
/// fractions `δ(e, e*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeDecomposition<S> {
    /// `y_0 ..= y_L`; `y_k` is greedy along `a_1..a_k` followed by the
    /// optimal order without those items.
    pub augmentations: Vec<Vec<S>>,
    /// `delta[e][e*]`.
    pub delta: Vec<Vec<S>>,
    /// `<w̄, x*> - <w̄, x>`.
    pub regret: S,
    /// `Σ_e Σ_{e* <= ρ(e)} Δ_{e,e*} δ(e, e*)`.
    pub per_episode_bound: S,
}

/// Builds every augmentation between the optimal basis and the greedy basis
/// of `chosen_order`, and checks each identity of the regret decomposition.
/// When `scores` are the values that produced `chosen_order`, the optimism
/// claim is checked too.
pub fn decompose_episode<S: Scalar>(
    m: &Polymatroid<S>,
    gaps: &GapStructure<S>,
    chosen_order: &[usize],
    scores: Option<&[S]>,
) -> Result<ExchangeDecomposition<S>, AnalysisError> {
    let l = m.len();
    check_len(l, gaps.len())?;
    let tol = S::tolerance();
    let floor = tol / S::from_count(1000);
    let fail = |check, step, item, lhs: S, rhs: S| {
        Err(AnalysisError::Decomposition(DecompositionError {
            check,
            step,
            item,
            lhs: lhs.to_f64_lossy(),
            rhs: rhs.to_f64_lossy(),
        }))
    };

    let x = greedy_by_order(m, chosen_order)?;
    let mut in_prefix = vec![false; l];
    let mut augmentations = Vec::with_capacity(l + 1);
    for k in 0..=l {
        if k > 0 {
            in_prefix[chosen_order[k - 1]] = true;
        }
        let order: Vec<usize> = chosen_order[..k]
            .iter()
            .copied()
            .chain(gaps.order.iter().copied().filter(|&i| !in_prefix[i]))
            .collect();
        let y = greedy_by_order(m, &order)?.x;
        let total = y.iter().fold(S::zero(), |a, &v| a + v);
        if (total - m.rank()).abs_value() > tol {
            return fail(DecompositionCheck::Basis, k, 0, total, m.rank());
        }
        if let Some(i) = y.iter().position(|&v| v < S::zero()) {
            return fail(DecompositionCheck::Basis, k, i, y[i], S::zero());
        }
        augmentations.push(y);
    }
    for i in 0..l {
        if (augmentations[0][i] - gaps.x_star.x[i]).abs_value() > tol {
            return fail(DecompositionCheck::StartIsOptimal, 0, i, augmentations[0][i], gaps.x_star.x[i]);
        }
        if (augmentations[l][i] - x.x[i]).abs_value() > tol {
            return fail(DecompositionCheck::EndIsChosen, l, i, augmentations[l][i], x.x[i]);
        }
    }

    let mut delta = vec![vec![S::zero(); l]; l];
    let mut in_prefix = vec![false; l];
    let mut per_episode_bound = S::zero();
    for k in 1..=l {
        let a = chosen_order[k - 1];
        let (prev, next) = (&augmentations[k - 1], &augmentations[k]);
        let d: Vec<S> = prev.iter().zip(next).map(|(&p, &q)| p - q).collect();
        for i in 0..l {
            if in_prefix[i] && d[i].abs_value() > tol {
                return fail(DecompositionCheck::SignPrefix, k, i, d[i], S::zero());
            }
        }
        if d[a] > tol {
            return fail(DecompositionCheck::SignChosen, k, a, d[a], S::zero());
        }
        in_prefix[a] = true;
        let mut rest = S::zero();
        for i in (0..l).filter(|&i| !in_prefix[i]) {
            if d[i] < S::zero() - tol {
                return fail(DecompositionCheck::SignRest, k, i, d[i], S::zero());
            }
            rest += d[i];
            if d[i] > floor {
                delta[a][i] = d[i];
            }
        }
        if (d[a] + rest).abs_value() > tol {
            return fail(DecompositionCheck::Balance, k, a, d[a], S::zero() - rest);
        }
        for i in 0..l {
            if delta[a][i] > S::zero() && gaps.x_star.x[i] <= S::zero() {
                return fail(DecompositionCheck::ZeroOptimal, k, i, delta[a][i], S::zero());
            }
        }
        let step_bound = gaps
            .dominating(a)
            .iter()
            .fold(S::zero(), |acc, &i| acc + gaps.gap(a, i) * delta[a][i]);
        let step_regret = dot(&gaps.w_bar, &d);
        if step_regret > step_bound + tol {
            return fail(DecompositionCheck::StepBound, k, a, step_regret, step_bound);
        }
        per_episode_bound += step_bound;
    }

    let regret = gaps.optimal_value() - x.value(&gaps.w_bar);
    if regret > per_episode_bound + tol {
        return fail(DecompositionCheck::EpisodeBound, l, 0, regret, per_episode_bound);
    }
    let total = delta.iter().flatten().fold(S::zero(), |a, &v| a + v);
    if total > m.rank() + tol {
        return fail(DecompositionCheck::TotalExchange, l, 0, total, m.rank());
    }
    for e in 0..l {
        let row = delta[e].iter().fold(S::zero(), |a, &v| a + v);
        let cap = if m.is_normalized() { x.x[e].min_of(S::one()) } else { x.x[e] };
        if row > cap + tol {
            return fail(DecompositionCheck::ItemExchange, l, e, row, cap);
        }
        for e_star in 0..l {
            if delta[e][e_star] <= S::zero() {
                continue;
            }
            if x.x[e] <= S::zero() {
                return fail(DecompositionCheck::Observed, l, e, delta[e][e_star], S::zero());
            }
            if let Some(u) = scores {
                if u[e] < u[e_star] {
                    return fail(DecompositionCheck::Optimism, l, e, u[e], u[e_star]);
                }
            }
        }
    }

    Ok(ExchangeDecomposition {
        augmentations,
        delta,
        regret,
        per_episode_bound,
    })
}

/// Gap-dependent upper bound in both forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapDependentBound<F> {
    /// `Σ_e 16/Δ_{e,ρ(e)} ln n + Σ_e Σ_{e* <= ρ(e)} Δ_{e,e*} 4π²/3`.
    pub full: F,
    /// `L (16/Δ) ln n` with `Δ` the smallest leading gap.
    pub leading: F,
}

/// Coefficients `(a, b)` of the full gap-dependent bound `a ln n + b`.
pub fn gap_dependent_coefficients<F: Real>(gaps: &GapStructure<F>) -> Result<(F, F), AnalysisError> {
    if gaps.min_gap.is_none() {
        return Err(AnalysisError::ZeroGap);
    }
    let sixteen = F::from_f64_lossy(16.0);
    let constant = F::from_f64_lossy(4.0 / 3.0 * PI * PI);
    let (mut a, mut b) = (F::zero(), F::zero());
    for e in 0..gaps.len() {
        if let Some(g) = gaps.leading_gap(e) {
            a += sixteen / g;
            for &e_star in gaps.dominating(e) {
                b += gaps.gap(e, e_star) * constant;
            }
        }
    }
    Ok((a, b))
}

fn ln_episodes<F: Real>(n: u64) -> Result<F, AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::InvalidParameter("n must be at least 1".into()));
    }
    Ok(F::from_u64(n).expect("episode count fits in scalar").ln())
}

/// `L (16/Δ) ln n`.
pub fn gap_dependent_leading<F: Real>(l: usize, delta: F, n: u64) -> Result<F, AnalysisError> {
    if !(delta > F::zero()) {
        return Err(AnalysisError::ZeroGap);
    }
    Ok(F::from_count(l) * F::from_f64_lossy(16.0) / delta * ln_episodes(n)?)
}

pub fn gap_dependent_bound<F: Real>(gaps: &GapStructure<F>, n: u64) -> Result<GapDependentBound<F>, AnalysisError> {
    let (a, b) = gap_dependent_coefficients(gaps)?;
    let log_n = ln_episodes::<F>(n)?;
    let min_gap = gaps.min_gap.ok_or(AnalysisError::ZeroGap)?;
    Ok(GapDependentBound {
        full: a * log_n + b,
        leading: gap_dependent_leading(gaps.len(), min_gap, n)?,
    })
}

/// `8 sqrt(K L n ln n) + (4/3) π² L²`.
pub fn gap_free_bound<F: Real>(k: F, l: usize, n: u64) -> Result<F, AnalysisError> {
    let log_n = ln_episodes::<F>(n)?;
    let l = F::from_count(l);
    let n = F::from_u64(n).expect("episode count fits in scalar");
    Ok(F::from_f64_lossy(8.0) * (k * l * n * log_n).sqrt() + F::from_f64_lossy(4.0 / 3.0 * PI * PI) * l * l)
}

fn check_blocks(l: usize, k: usize) -> Result<(), AnalysisError> {
    if k == 0 || k > l || !l.is_multiple_of(k) {
        return Err(AnalysisError::InvalidParameter(format!(
            "lower bounds need L/K to be an integer, got L={l}, K={k}"
        )));
    }
    Ok(())
}

/// Coefficient `(L - K) / (4Δ)` of `ln n` in the gap-dependent lower bound.
pub fn lower_bound_gap_dependent<F: Real>(l: usize, k: usize, delta: F) -> Result<F, AnalysisError> {
    check_blocks(l, k)?;
    let half = F::one() / (F::one() + F::one());
    if !(delta > F::zero() && delta < half) {
        return Err(AnalysisError::InvalidParameter(format!("need 0 < delta < 0.5, got {delta}")));
    }
    Ok(F::from_count(l - k) / (F::from_f64_lossy(4.0) * delta))
}

/// `min(sqrt(K L n), K n) / 20`.
pub fn lower_bound_gap_free<F: Real>(l: usize, k: usize, n: u64) -> Result<F, AnalysisError> {
    check_blocks(l, k)?;
    let (l, k, n) = (F::from_count(l), F::from_count(k), F::from_u64(n).expect("episode count fits in scalar"));
    Ok((k * l * n).sqrt().min(k * n) / F::from_f64_lossy(20.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceReport<F> {
    /// `1/Δ_1 + Σ_{k>=2} Δ_k (1/Δ_k² - 1/Δ_{k-1}²)`.
    pub lhs: F,
    /// `2/Δ_K`.
    pub rhs: F,
    pub holds: bool,
}

pub fn check_sequence_inequality<F: Real>(deltas: &[F]) -> Result<SequenceReport<F>, AnalysisError> {
    if deltas.is_empty() {
        return Err(AnalysisError::InvalidParameter("empty sequence".into()));
    }
    for (i, &d) in deltas.iter().enumerate() {
        if !(d > F::zero()) || (i > 0 && d > deltas[i - 1]) {
            return Err(AnalysisError::NonMonotone(i));
        }
    }
    let mut lhs = F::one() / deltas[0];
    for w in deltas.windows(2) {
        let (prev, d) = (w[0], w[1]);
        lhs += d * (F::one() / (d * d) - F::one() / (prev * prev));
    }
    let rhs = (F::one() + F::one()) / deltas[deltas.len() - 1];
    Ok(SequenceReport {
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

pub const CSV_HEADER: &str = "episode,regret_cum,return_per_step,bound_gap_dep,bound_gap_free";

/// One checkpoint of a regret trace. Missing bounds are written as empty
/// fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub episode: u64,
    pub regret_cum: f64,
    pub return_per_step: f64,
    pub bound_gap_dep: Option<f64>,
    pub bound_gap_free: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub rows: Vec<ReportRow>,
}

impl RegretReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.episode,
                r.regret_cum,
                r.return_per_step,
                opt(r.bound_gap_dep),
                opt(r.bound_gap_free)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymatroid::{make_partition_matroid, make_uniform_matroid, FnRank};
    use num_rational::Ratio;

    #[test]
    fn uniform_gaps() {
        let m = make_uniform_matroid::<f64>(4, 2).unwrap();
        let gaps = compute_gaps(&m, &[0.5, 0.5, 0.4, 0.4]).unwrap();
        assert_eq!(gaps.rho, vec![0, 0, 2, 2]);
        assert!((gaps.leading_gap(2).unwrap() - 0.1).abs() < 1e-12);
        assert!((gaps.min_gap.unwrap() - 0.1).abs() < 1e-12);
        assert!(!gaps.leading_zero_contribution);
    }

    #[test]
    fn partition_gaps_equal_delta() {
        let m = make_partition_matroid::<f64>(&[vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let w = [0.5, 0.3, 0.3, 0.5, 0.3, 0.3];
        let gaps = compute_gaps(&m, &w).unwrap();
        for e in [1, 2, 4, 5] {
            assert!((gaps.leading_gap(e).unwrap() - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_means_have_no_gap() {
        let m = make_uniform_matroid::<f64>(3, 1).unwrap();
        let gaps = compute_gaps(&m, &[0.3; 3]).unwrap();
        assert_eq!(gaps.min_gap, None);
        assert!(matches!(gap_dependent_bound(&gaps, 100), Err(AnalysisError::ZeroGap)));
    }

    #[test]
    fn zero_contribution_leader_is_flagged() {
        // item 0 is a loop
        let f = FnRank::new(3, |items: &[usize]| items.iter().any(|&e| e != 0) as u8 as f64);
        let m = Polymatroid::new(f).unwrap();
        let gaps = compute_gaps(&m, &[0.9, 0.8, 0.1]).unwrap();
        assert!(gaps.leading_zero_contribution);
        assert_eq!(gaps.x_star.x, vec![0.0, 1.0, 0.0]);
        assert_eq!(gaps.rho, vec![0, 0, 2]);

        let m = make_uniform_matroid::<f64>(2, 1).unwrap();
        let gaps = compute_gaps(&m, &[0.9, 0.8]).unwrap();
        assert!(!gaps.leading_zero_contribution);
        assert_eq!(gaps.rho, vec![0, 1]);
    }

    #[test]
    fn swap_on_two_items() {
        let m = make_uniform_matroid::<f64>(2, 1).unwrap();
        let gaps = compute_gaps(&m, &[0.7, 0.4]).unwrap();
        let d = decompose_episode(&m, &gaps, &[1, 0], None).unwrap();
        assert_eq!(d.delta[1][0], 1.0);
        assert!((d.per_episode_bound - 0.3).abs() < 1e-12);
        assert!((d.regret - 0.3).abs() < 1e-12);

        let d = decompose_episode(&m, &gaps, &[0, 1], None).unwrap();
        assert!(d.delta.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(d.per_episode_bound, 0.0);
    }

    #[test]
    fn decomposition_is_exact_on_rationals() {
        let m = make_uniform_matroid::<Ratio<i64>>(4, 2).unwrap();
        let r = |a, b| Ratio::new(a, b);
        let w = [r(1, 2), r(1, 2), r(2, 5), r(2, 5)];
        let gaps = compute_gaps(&m, &w).unwrap();
        let d = decompose_episode(&m, &gaps, &[3, 0, 2, 1], None).unwrap();
        assert_eq!(d.regret, r(1, 10));
        assert_eq!(d.per_episode_bound, r(1, 10));
    }

    #[test]
    fn optimism_violation_is_reported() {
        let m = make_uniform_matroid::<f64>(2, 1).unwrap();
        let gaps = compute_gaps(&m, &[0.7, 0.4]).unwrap();
        let err = decompose_episode(&m, &gaps, &[1, 0], Some(&[0.9, 0.1][..]))
            .unwrap_err();
        assert!(matches!(
            err,
            AnalysisError::Decomposition(DecompositionError { check: DecompositionCheck::Optimism, .. })
        ));
    }

    #[test]
    fn table_bound_columns() {
        let round = |v: f64| v.round();
        assert_eq!(round(gap_dependent_leading(16, 0.5, 10_000).unwrap()), 4716.0);
        assert_eq!(round(gap_dependent_leading(16, 0.25, 10_000).unwrap()), 9431.0);
        assert_eq!(round(gap_dependent_leading(32, 0.5, 10_000).unwrap()), 9431.0);
        assert_eq!(round(gap_dependent_leading(32, 0.25, 10_000).unwrap()), 18863.0);
        assert_eq!(gap_dependent_leading(16, 0.5, 1).unwrap(), 0.0);
        assert!(gap_dependent_leading(16, 0.0, 10).is_err());
    }

    #[test]
    fn lower_bounds() {
        assert_eq!(lower_bound_gap_dependent(16, 4, 0.25).unwrap(), 12.0);
        assert_eq!(lower_bound_gap_dependent(4, 4, 0.25).unwrap(), 0.0);
        assert!(lower_bound_gap_dependent(16, 3, 0.25).is_err());
        assert!(lower_bound_gap_dependent(16, 4, 0.5).is_err());
        assert_eq!(lower_bound_gap_free::<f64>(4, 1, 1).unwrap(), 0.05);
    }

    #[test]
    fn sequence_inequality() {
        let r = check_sequence_inequality(&[0.3f64, 0.3, 0.3]).unwrap();
        assert!((r.lhs - 1.0 / 0.3).abs() < 1e-12 && r.holds);
        let r = check_sequence_inequality(&[0.5]).unwrap();
        assert_eq!((r.lhs, r.rhs), (2.0, 4.0));
        assert!(matches!(check_sequence_inequality(&[0.1, 0.2]), Err(AnalysisError::NonMonotone(1))));
        assert!(check_sequence_inequality(&[0.1, 0.0]).is_err());
    }

    #[test]
    fn running_average_values() {
        assert_eq!(running_average(&[2.0, 2.0, 2.0]).unwrap(), vec![2.0; 3]);
        assert_eq!(running_average(&[1.0, 3.0]).unwrap(), vec![1.0, 2.0]);
        assert!(matches!(running_average::<f64>(&[]), Err(AnalysisError::EmptyLog)));
    }

    #[test]
    fn csv_layout() {
        let report = RegretReport {
            rows: vec![ReportRow {
                episode: 1,
                regret_cum: 0.5,
                return_per_step: 1.25,
                bound_gap_dep: None,
                bound_gap_free: Some(10.0),
            }],
        };
        assert_eq!(report.to_csv_string(), format!("{CSV_HEADER}\n1,0.5,1.25,,10\n"));
    }
}
