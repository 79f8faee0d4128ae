use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Polymatroid;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum AxiomViolation {
    EmptyNonZero { value: f64 },
    /// `f(subset) > f(superset)`.
    Monotonicity {
        subset: Vec<usize>,
        superset: Vec<usize>,
        f_subset: f64,
        f_superset: f64,
    },
    /// `f(X) + f(Y) < f(X ∪ Y) + f(X ∩ Y)`.
    Submodularity {
        x: Vec<usize>,
        y: Vec<usize>,
        lhs: f64,
        rhs: f64,
    },
    Normalization { item: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub exhaustive: bool,
    /// Number of subset pairs examined.
    pub checks: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Maximum number of violations kept in a report.
const MAX_WITNESSES: usize = 16;

fn items_of(mask: u64, l: usize) -> Vec<usize> {
    (0..l).filter(|e| mask >> e & 1 == 1).collect()
}

/// Checks `f(∅) = 0`, monotonicity, submodularity and (for normalized
/// instances) `f({e}) <= 1`.
///
/// Runs exhaustively when `2^L <= budget`, using the local forms
/// `f(X) <= f(X+e)` and `f(X+e) + f(X+e') >= f(X+e+e') + f(X)`, which are
/// equivalent to the global axioms. Otherwise draws `budget` random pairs.
pub fn check_polymatroid_axioms<S: Scalar>(m: &Polymatroid<S>, budget: usize, seed: u64) -> AxiomReport {
    let l = m.len();
    let tol = S::tolerance();
    let mut violations = Vec::new();
    let push = |v: AxiomViolation, violations: &mut Vec<AxiomViolation>| {
        if violations.len() < MAX_WITNESSES {
            violations.push(v);
        }
    };

    let empty = m.eval(&[]);
    if empty.abs_value() > tol {
        push(AxiomViolation::EmptyNonZero { value: empty.to_f64_lossy() }, &mut violations);
    }
    if m.is_normalized() {
        for e in 0..l {
            let v = m.eval(&[e]);
            if v > S::one() + tol {
                push(AxiomViolation::Normalization { item: e, value: v.to_f64_lossy() }, &mut violations);
            }
        }
    }

    let exhaustive = l < 63 && (1u64 << l) as u128 <= budget as u128;
    let mut checks = 0;
    if exhaustive {
        let mut buf = Vec::with_capacity(l);
        let table: Vec<S> = (0u64..1 << l).map(|mask| m.eval_mask(mask, &mut buf)).collect();
        for mask in 0u64..1 << l {
            let fx = table[mask as usize];
            for e in (0..l).filter(|e| mask >> e & 1 == 0) {
                let with_e = mask | 1 << e;
                let fe = table[with_e as usize];
                checks += 1;
                if fx > fe + tol {
                    push(
                        AxiomViolation::Monotonicity {
                            subset: items_of(mask, l),
                            superset: items_of(with_e, l),
                            f_subset: fx.to_f64_lossy(),
                            f_superset: fe.to_f64_lossy(),
                        },
                        &mut violations,
                    );
                }
                for f in (e + 1..l).filter(|f| mask >> f & 1 == 0) {
                    let with_f = mask | 1 << f;
                    let both = with_e | 1 << f;
                    let lhs = fe + table[with_f as usize];
                    let rhs = table[both as usize] + fx;
                    checks += 1;
                    if lhs + tol < rhs {
                        push(
                            AxiomViolation::Submodularity {
                                x: items_of(with_e, l),
                                y: items_of(with_f, l),
                                lhs: lhs.to_f64_lossy(),
                                rhs: rhs.to_f64_lossy(),
                            },
                            &mut violations,
                        );
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..budget {
            let x: Vec<bool> = (0..l).map(|_| rng.random()).collect();
            let y: Vec<bool> = (0..l).map(|_| rng.random()).collect();
            let pick = |p: &dyn Fn(usize) -> bool| (0..l).filter(|&e| p(e)).collect::<Vec<_>>();
            let xs = pick(&|e| x[e]);
            let ys = pick(&|e| y[e]);
            let union = pick(&|e| x[e] || y[e]);
            let inter = pick(&|e| x[e] && y[e]);
            let (fx, fy, fu, fi) = (m.eval(&xs), m.eval(&ys), m.eval(&union), m.eval(&inter));
            checks += 1;
            if fx + fy + tol < fu + fi {
                push(
                    AxiomViolation::Submodularity {
                        x: xs.clone(),
                        y: ys,
                        lhs: (fx + fy).to_f64_lossy(),
                        rhs: (fu + fi).to_f64_lossy(),
                    },
                    &mut violations,
                );
            }
            // chain X∩Y ⊆ X ⊆ X∪Y
            for (sub, fsub, sup, fsup) in [(&inter, fi, &xs, fx), (&xs, fx, &union, fu)] {
                if fsub > fsup + tol {
                    push(
                        AxiomViolation::Monotonicity {
                            subset: sub.clone(),
                            superset: sup.clone(),
                            f_subset: fsub.to_f64_lossy(),
                            f_superset: fsup.to_f64_lossy(),
                        },
                        &mut violations,
                    );
                }
            }
        }
    }

    AxiomReport {
        exhaustive,
        checks,
        violations,
    }
}
