//! Partition bookkeeping shared by the state- and control-constrained
//! active-set solvers.

use crate::options::ActiveSetSizes;

/// Role of an index in one active-set iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activity {
    Inactive,
    /// Held at the lower bound.
    Lower,
    /// Held at the upper bound.
    Upper,
}

/// Split indices by the predictors `y_+ = mult + c (upper - v)` and
/// `y_- = mult + c (lower - v)`: lower-active where `y_- > 0`, upper-active
/// where `y_+ < 0`, inactive otherwise.
pub fn partition(value: &[f64], multiplier: &[f64], lower: &[f64], upper: &[f64], c: f64) -> Vec<Activity> {
    (0..value.len())
        .map(|k| {
            let y_minus = multiplier[k] + c * (lower[k] - value[k]);
            let y_plus = multiplier[k] + c * (upper[k] - value[k]);
            if y_minus > 0.0 {
                Activity::Lower
            } else if y_plus < 0.0 {
                Activity::Upper
            } else {
                Activity::Inactive
            }
        })
        .collect()
}

pub fn sizes(p: &[Activity]) -> ActiveSetSizes {
    ActiveSetSizes {
        lower: p.iter().filter(|&&a| a == Activity::Lower).count(),
        upper: p.iter().filter(|&&a| a == Activity::Upper).count(),
    }
}

/// `max(tol_+, tol_-)`: the largest amount by which `value` leaves
/// `[lower, upper]`, zero if feasible.
pub fn feasibility_violation(value: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    value
        .iter()
        .zip(lower.iter().zip(upper))
        .fold(0.0, |m, (&v, (&lo, &up))| m.max(v - up).max(lo - v))
}

/// Max-norm of `mult - min(0, mult + c (upper - v)) - max(0, mult + c (lower - v))`.
pub fn complementarity_norm(value: &[f64], multiplier: &[f64], lower: &[f64], upper: &[f64], c: f64) -> f64 {
    (0..value.len()).fold(0.0, |m, k| {
        let l = multiplier[k];
        let r = l - (l + c * (upper[k] - value[k])).min(0.0) - (l + c * (lower[k] - value[k])).max(0.0);
        m.max(r.abs())
    })
}

/// Stagnation guard for the block update.
///
/// The plain update changes every index whose predictor disagrees with the
/// current partition. When the number of such indices has not dropped below
/// its best value for `patience` consecutive steps, only the largest such
/// index is changed until the count improves again. This is the backup rule
/// of block principal pivoting and rules out cycling for positive definite
/// problems.
#[derive(Debug, Clone)]
pub struct Safeguard {
    best: usize,
    budget: usize,
    patience: usize,
    single_steps: usize,
}

impl Safeguard {
    pub const DEFAULT_PATIENCE: usize = 3;

    pub fn new(patience: usize) -> Self {
        Self {
            best: usize::MAX,
            budget: patience,
            patience,
            single_steps: 0,
        }
    }

    /// Number of single-index steps taken so far.
    pub fn single_steps(&self) -> usize {
        self.single_steps
    }

    /// Record one proposal. Returns `false` once the number of changed
    /// indices has failed to improve on its best value for more than
    /// `patience` consecutive steps.
    pub fn allows_block_step(&mut self, current: &[Activity], proposal: &[Activity]) -> bool {
        let changed = (0..current.len()).filter(|&k| current[k] != proposal[k]).count();
        if changed < self.best {
            self.best = changed;
            self.budget = self.patience;
            return true;
        }
        if self.budget > 0 {
            self.budget -= 1;
            return true;
        }
        false
    }

    /// Partition for the next solve, given the one just solved with and the
    /// proposal computed from its solution.
    pub fn next(&mut self, current: &[Activity], proposal: Vec<Activity>) -> Vec<Activity> {
        if self.allows_block_step(current, &proposal) {
            return proposal;
        }
        self.single_steps += 1;
        let mut next = current.to_vec();
        if let Some(k) = (0..current.len()).rev().find(|&k| current[k] != proposal[k]) {
            next[k] = proposal[k];
        }
        next
    }
}
