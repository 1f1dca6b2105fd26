//! Pass@k and Pass@k|t: the unbiased estimator from correct counts and the
//! closed form from known per-checkpoint pass rates.

use serde::Serialize;

use crate::dataset::{CorrectCounts, EvalDataset};
use crate::error::{Error, Result};
use crate::partition::balanced_partition;

/// Estimated Pass@k|t with its per-problem terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassEstimate {
    pub k: usize,
    pub t: usize,
    pub value: f64,
    pub per_problem: Vec<f64>,
}

impl PassEstimate {
    fn from_terms(k: usize, t: usize, per_problem: Vec<f64>) -> Result<Self> {
        if per_problem.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let value = per_problem.iter().sum::<f64>() / per_problem.len() as f64;
        Ok(Self {
            k,
            t,
            value,
            per_problem,
        })
    }
}

/// Per-checkpoint single-sample pass rates `r[i][j]`, checkpoints latest first.
#[derive(Debug, Clone, PartialEq)]
pub struct TruePassRate {
    num_problems: usize,
    num_checkpoints: usize,
    rates: Vec<f64>,
}

impl TruePassRate {
    pub fn new(num_problems: usize, num_checkpoints: usize, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != num_problems * num_checkpoints {
            return Err(Error::ShapeMismatch(format!(
                "{} rates for {num_problems} problems x {num_checkpoints} checkpoints",
                rates.len()
            )));
        }
        if num_checkpoints == 0 {
            return Err(Error::ShapeMismatch("at least one checkpoint is required".into()));
        }
        if let Some(r) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidConfig(format!("pass rate {r} outside [0, 1]")));
        }
        Ok(Self {
            num_problems,
            num_checkpoints,
            rates,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_problems = rows.len();
        let num_checkpoints = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_checkpoints) {
            return Err(Error::ShapeMismatch("rate rows differ in length".into()));
        }
        Self::new(num_problems, num_checkpoints, rows.into_iter().flatten().collect())
    }

    pub fn num_problems(&self) -> usize {
        self.num_problems
    }

    pub fn num_checkpoints(&self) -> usize {
        self.num_checkpoints
    }

    pub fn get(&self, problem: usize, checkpoint: usize) -> f64 {
        self.rates[problem * self.num_checkpoints + checkpoint]
    }

    pub fn row(&self, problem: usize) -> &[f64] {
        let start = problem * self.num_checkpoints;
        &self.rates[start..start + self.num_checkpoints]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rates
    }
}

/// Probability that `kj` draws without replacement from `n` samples, `c` of
/// them correct, contain no correct sample: `C(n-c, kj) / C(n, kj)`.
pub fn survival_ratio(n: usize, c: usize, kj: usize) -> Result<f64> {
    if c > n || kj > n {
        return Err(Error::InvalidCounts { n, c, kj });
    }
    Ok(survival_unchecked(n, c, kj))
}

// Telescoping product of (n-c-m)/(n-m); a zero factor appears iff kj > n-c.
fn survival_unchecked(n: usize, c: usize, kj: usize) -> f64 {
    if kj > n - c {
        return 0.0;
    }
    let mut ratio = 1.0;
    for m in 0..kj {
        ratio *= (n - c - m) as f64 / (n - m) as f64;
    }
    ratio
}

/// Standard unbiased Pass@k at a single checkpoint.
pub fn pass_at_k(dataset: &EvalDataset, k: usize, checkpoint: usize) -> Result<PassEstimate> {
    pass_at_k_counts(dataset.correct_counts(), k, checkpoint)
}

pub fn pass_at_k_counts(counts: &CorrectCounts, k: usize, checkpoint: usize) -> Result<PassEstimate> {
    if k < 1 {
        return Err(Error::InvalidBudget { k, t: 1 });
    }
    let n = counts.samples_per_cell();
    if k > n {
        return Err(Error::BudgetExceedsSamples { kj: k, n });
    }
    if checkpoint >= counts.num_checkpoints() {
        return Err(Error::NotEnoughCheckpoints {
            requested: checkpoint + 1,
            available: counts.num_checkpoints(),
        });
    }
    let per_problem = (0..counts.num_problems())
        .map(|i| 1.0 - survival_unchecked(n, counts.get(i, checkpoint), k))
        .collect();
    PassEstimate::from_terms(k, 1, per_problem)
}

/// Unbiased Pass@k|t: per problem `1 - Π_j C(N-C_ij, k_j) / C(N, k_j)` over
/// the `t` latest checkpoints with the balanced allocation of `k`.
pub fn pass_at_k_given_t(dataset: &EvalDataset, k: usize, t: usize) -> Result<PassEstimate> {
    pass_at_k_given_t_counts(dataset.correct_counts(), k, t)
}

pub fn pass_at_k_given_t_counts(counts: &CorrectCounts, k: usize, t: usize) -> Result<PassEstimate> {
    let plan = balanced_partition(k, t)?;
    if t > counts.num_checkpoints() {
        return Err(Error::NotEnoughCheckpoints {
            requested: t,
            available: counts.num_checkpoints(),
        });
    }
    let n = counts.samples_per_cell();
    if plan.max_draws() > n {
        return Err(Error::BudgetExceedsSamples {
            kj: plan.max_draws(),
            n,
        });
    }
    let per_problem = (0..counts.num_problems())
        .map(|i| {
            let row = counts.row(i);
            let survival = plan
                .allocation
                .iter()
                .zip(row)
                .fold(1.0, |acc, (&kj, &c)| acc * survival_unchecked(n, c, kj));
            1.0 - survival
        })
        .collect();
    PassEstimate::from_terms(k, t, per_problem)
}

/// Pass@k|t from known rates: `E_i[1 - Π_j (1 - r_ij)^k_j]`.
pub fn exact_pass_at_k_given_t(rates: &TruePassRate, k: usize, t: usize) -> Result<PassEstimate> {
    let plan = balanced_partition(k, t)?;
    if t > rates.num_checkpoints() {
        return Err(Error::NotEnoughCheckpoints {
            requested: t,
            available: rates.num_checkpoints(),
        });
    }
    let per_problem = (0..rates.num_problems())
        .map(|i| {
            let survival = plan
                .allocation
                .iter()
                .zip(rates.row(i))
                .fold(1.0, |acc, (&kj, &r)| acc * (1.0 - r).powi(kj as i32));
            1.0 - survival
        })
        .collect();
    PassEstimate::from_terms(k, t, per_problem)
}
