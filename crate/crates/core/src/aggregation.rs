//! Maj@k|t and BoN@k|t by seeded Monte Carlo resampling without replacement.
//!
//! Each replicate `r` draws from its own ChaCha8 stream `(seed, r)`, so
//! replicates are independent, may run in parallel, and are reduced in
//! replicate order. Results are bit-reproducible for a fixed seed.

use std::collections::HashMap;
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::EvalDataset;
use crate::error::{Error, Result};
use crate::partition::{balanced_partition, PartitionPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Majority,
    BestOfN,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Majority => "majority",
            Strategy::BestOfN => "best_of_n",
        })
    }
}

/// How a majority vote between equally frequent answers is settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Uniform choice among tied answers from the replicate's stream.
    #[default]
    UniformRandom,
    /// The tied answer drawn from the latest checkpoint; earliest draw after that.
    PreferLatest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationEstimate {
    pub k: usize,
    pub t: usize,
    pub strategy: Strategy,
    pub value: f64,
    pub replicates: usize,
    pub std_error: f64,
}

/// One drawn sample: (checkpoint, sample index), checkpoint 0 = latest.
type Draw = (usize, usize);

fn validate(dataset: &EvalDataset, k: usize, t: usize, replicates: usize) -> Result<PartitionPlan> {
    let plan = balanced_partition(k, t)?;
    if t > dataset.num_checkpoints() {
        return Err(Error::NotEnoughCheckpoints {
            requested: t,
            available: dataset.num_checkpoints(),
        });
    }
    if plan.max_draws() > dataset.samples_per_cell() {
        return Err(Error::BudgetExceedsSamples {
            kj: plan.max_draws(),
            n: dataset.samples_per_cell(),
        });
    }
    if replicates < 1 {
        return Err(Error::InvalidReplicates);
    }
    Ok(plan)
}

fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

fn simulate<F>(
    dataset: &EvalDataset,
    plan: &PartitionPlan,
    strategy: Strategy,
    replicates: usize,
    seed: u64,
    score: F,
) -> AggregationEstimate
where
    F: Fn(&mut ChaCha8Rng, usize, &[Draw]) -> bool + Sync,
{
    let n = dataset.samples_per_cell();
    let problems = dataset.num_problems();
    let accuracies: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let mut draws = Vec::with_capacity(plan.k);
            let mut hits = 0usize;
            for problem in 0..problems {
                draws.clear();
                for (j, &kj) in plan.allocation.iter().enumerate() {
                    draws.extend(index::sample(&mut rng, n, kj).into_iter().map(|s| (j, s)));
                }
                hits += usize::from(score(&mut rng, problem, &draws));
            }
            hits as f64 / problems as f64
        })
        .collect();

    let (value, std_error) = mean_and_std_error(&accuracies);
    AggregationEstimate {
        k: plan.k,
        t: plan.t,
        strategy,
        value,
        replicates,
        std_error,
    }
}

/// Mean and standard error (sample standard deviation / sqrt(R)), summed in order.
pub(crate) fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

struct Tally {
    count: usize,
    correct: usize,
    first_checkpoint: usize,
}

/// Most frequent answer among the draws; returns whether it counts as correct.
fn vote(dataset: &EvalDataset, problem: usize, draws: &[Draw], tie_rule: TieRule, rng: &mut ChaCha8Rng) -> bool {
    let mut tallies: Vec<Tally> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    for &(j, s) in draws {
        let sample = &dataset.cell(problem, j)[s];
        let idx = *slot.entry(sample.answer.as_str()).or_insert_with(|| {
            tallies.push(Tally {
                count: 0,
                correct: 0,
                first_checkpoint: j,
            });
            tallies.len() - 1
        });
        let t = &mut tallies[idx];
        t.count += 1;
        t.correct += usize::from(sample.correct);
        t.first_checkpoint = t.first_checkpoint.min(j);
    }

    let top = tallies.iter().map(|t| t.count).max().unwrap_or(0);
    let tied: Vec<&Tally> = tallies.iter().filter(|t| t.count == top).collect();
    let winner = match (tied.len(), tie_rule) {
        (0, _) => return false,
        (1, _) => tied[0],
        (len, TieRule::UniformRandom) => tied[rng.random_range(0..len)],
        (_, TieRule::PreferLatest) => tied
            .iter()
            .min_by_key(|t| t.first_checkpoint)
            .copied()
            .expect("tied is non-empty"),
    };
    // strict majority of the winner's drawn correctness bits
    2 * winner.correct > winner.count
}

/// Maj@k|t with the default tie rule (uniform among tied answers).
pub fn majority_at_k_given_t(
    dataset: &EvalDataset,
    k: usize,
    t: usize,
    replicates: usize,
    seed: u64,
) -> Result<AggregationEstimate> {
    majority_at_k_given_t_with(dataset, k, t, replicates, seed, TieRule::default())
}

pub fn majority_at_k_given_t_with(
    dataset: &EvalDataset,
    k: usize,
    t: usize,
    replicates: usize,
    seed: u64,
    tie_rule: TieRule,
) -> Result<AggregationEstimate> {
    let plan = validate(dataset, k, t, replicates)?;
    Ok(simulate(dataset, &plan, Strategy::Majority, replicates, seed, |rng, problem, draws| {
        vote(dataset, problem, draws, tie_rule, rng)
    }))
}

/// BoN@k|t: the drawn record with the highest reward decides. Reward ties go
/// to the lowest (checkpoint, sample) index.
pub fn best_of_n_at_k_given_t(
    dataset: &EvalDataset,
    k: usize,
    t: usize,
    replicates: usize,
    seed: u64,
) -> Result<AggregationEstimate> {
    let plan = validate(dataset, k, t, replicates)?;
    if let Some((i, j, s)) = dataset.first_missing_reward() {
        return Err(Error::MissingReward {
            problem: dataset.problems()[i].clone(),
            checkpoint: j,
            sample: s,
        });
    }
    Ok(simulate(dataset, &plan, Strategy::BestOfN, replicates, seed, |_, problem, draws| {
        best_draw(dataset, problem, draws).is_some_and(|(j, s)| dataset.cell(problem, j)[s].correct)
    }))
}

fn best_draw(dataset: &EvalDataset, problem: usize, draws: &[Draw]) -> Option<Draw> {
    let reward = |&(j, s): &Draw| dataset.cell(problem, j)[s].reward.unwrap_or(f64::NEG_INFINITY);
    let mut best: Option<Draw> = None;
    for d in draws {
        best = match best {
            None => Some(*d),
            Some(b) if reward(d) > reward(&b) || (reward(d) == reward(&b) && *d < b) => Some(*d),
            keep => keep,
        };
    }
    best
}
