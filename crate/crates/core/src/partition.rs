//! Balanced integer partition of a sample budget over checkpoints.

use serde::Serialize;

use crate::error::{Error, Result};

/// Allocation `{k_j}` of `k` draws over `t` checkpoints plus the round-robin
/// draw order. Checkpoint 0 is the latest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionPlan {
    pub k: usize,
    pub t: usize,
    pub allocation: Vec<usize>,
    pub schedule: Vec<usize>,
}

impl PartitionPlan {
    /// Draws assigned to each checkpoint, recomputed from the schedule.
    pub fn schedule_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.t];
        for &j in &self.schedule {
            counts[j] += 1;
        }
        counts
    }

    /// Largest per-checkpoint draw count.
    pub fn max_draws(&self) -> usize {
        self.allocation.iter().copied().max().unwrap_or(0)
    }
}

/// The first `k mod t` checkpoints (the latest ones) get `⌊k/t⌋ + 1` draws,
/// the rest `⌊k/t⌋`. Draw `m` goes to checkpoint `m mod t`.
pub fn balanced_partition(k: usize, t: usize) -> Result<PartitionPlan> {
    if k < 1 || t < 1 {
        return Err(Error::InvalidBudget { k, t });
    }
    let base = k / t;
    let extras = k % t;
    let allocation = (0..t).map(|j| base + usize::from(j < extras)).collect();
    let schedule = (0..k).map(|m| m % t).collect();
    Ok(PartitionPlan {
        k,
        t,
        allocation,
        schedule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// All length-t vectors of nonnegative integers summing to k.
    fn compositions(k: usize, t: usize) -> Vec<Vec<usize>> {
        if t == 1 {
            return vec![vec![k]];
        }
        let mut out = Vec::new();
        for first in 0..=k {
            for mut rest in compositions(k - first, t - 1) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }

    #[test]
    fn exact_divisibility() {
        let plan = balanced_partition(64, 8).unwrap();
        assert_eq!(plan.allocation, vec![8; 8]);
        assert_eq!(plan.schedule.len(), 64);
    }

    #[test]
    fn single_checkpoint() {
        let plan = balanced_partition(5, 1).unwrap();
        assert_eq!(plan.allocation, vec![5]);
        assert_eq!(plan.schedule, vec![0; 5]);
    }

    #[test]
    fn seven_over_three_matches_enumeration() {
        let candidates: Vec<Vec<usize>> = compositions(7, 3)
            .into_iter()
            .filter(|v| v.iter().max().unwrap() - v.iter().min().unwrap() <= 1)
            .filter(|v| v.windows(2).all(|w| w[0] >= w[1]))
            .collect();
        assert_eq!(candidates, vec![vec![3, 2, 2]]);
        assert_eq!(balanced_partition(7, 3).unwrap().allocation, candidates[0]);
    }

    #[test]
    fn more_checkpoints_than_draws() {
        let plan = balanced_partition(3, 5).unwrap();
        assert_eq!(plan.allocation, vec![1, 1, 1, 0, 0]);
        assert_eq!(plan.schedule, vec![0, 1, 2]);
    }

    #[test]
    fn zero_budget_is_invalid() {
        assert!(matches!(balanced_partition(0, 3), Err(Error::InvalidBudget { .. })));
        assert!(matches!(balanced_partition(3, 0), Err(Error::InvalidBudget { .. })));
    }

    #[test]
    fn invariants_hold_exhaustively() {
        for k in 1..=200 {
            for t in 1..=50 {
                let plan = balanced_partition(k, t).unwrap();
                assert_eq!(plan.allocation.iter().sum::<usize>(), k);
                let max = *plan.allocation.iter().max().unwrap();
                let min = *plan.allocation.iter().min().unwrap();
                assert!(max - min <= 1);
                for (j, &kj) in plan.allocation.iter().enumerate() {
                    let expected = k / t + usize::from(j < k % t);
                    assert_eq!(kj, expected, "k={k} t={t} j={j}");
                }
                assert_eq!(plan.schedule_counts(), plan.allocation);
                if t > k {
                    assert!(plan.allocation[..k].iter().all(|&x| x == 1));
                    assert!(plan.allocation[k..].iter().all(|&x| x == 0));
                }
            }
        }
    }
}
