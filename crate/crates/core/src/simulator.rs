//! Synthetic checkpoint datasets with known per-checkpoint pass rates.
//!
//! Rates and correctness bits come from seeded ChaCha8 streams. Correctness
//! bits for problem `i` use stream `2i` and answers/rewards use stream
//! `2i + 1`, so [`simulate_counts`] and [`simulate_dataset`] agree on every
//! correct count for the same seed.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::dataset::{CorrectCounts, EvalDataset, Sample};
use crate::error::{Error, Result};
use crate::estimator::TruePassRate;

/// Answer given by every correct simulated sample.
pub const GOLD_ANSWER: &str = "GOLD";
/// Wrong answer shared by colliding wrong samples.
pub const SHARED_WRONG_ANSWER: &str = "WRONG-SHARED";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateModel {
    IidUniform,
    Beta { alpha: f64, beta: f64 },
    /// `r_ij = clamp(base_rate + amplitude * sin(2π (j + phase_i) / period))`
    /// with `phase_i` uniform on `[0, period)`.
    Oscillating {
        base_rate: f64,
        amplitude: f64,
        period: f64,
    },
}

impl RateModel {
    fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            RateModel::IidUniform => Ok(()),
            RateModel::Beta { alpha, beta } => {
                if finite_pos(alpha) && finite_pos(beta) {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!(
                        "beta parameters must be positive, got ({alpha}, {beta})"
                    )))
                }
            }
            RateModel::Oscillating {
                base_rate,
                amplitude,
                period,
            } => {
                if !(0.0..=1.0).contains(&base_rate) {
                    Err(Error::InvalidConfig(format!("base rate {base_rate} outside [0, 1]")))
                } else if !(amplitude.is_finite() && amplitude >= 0.0) {
                    Err(Error::InvalidConfig(format!("amplitude {amplitude} must be >= 0")))
                } else if !finite_pos(period) {
                    Err(Error::InvalidConfig(format!("period {period} must be > 0")))
                } else {
                    Ok(())
                }
            }
        }
    }
}

impl fmt::Display for RateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateModel::IidUniform => f.write_str("iid_uniform"),
            RateModel::Beta { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
            RateModel::Oscillating {
                base_rate,
                amplitude,
                period,
            } => write!(f, "oscillating:{base_rate},{amplitude},{period}"),
        }
    }
}

/// Parses `iid_uniform`, `beta:ALPHA,BETA` or `oscillating:BASE,AMPLITUDE,PERIOD`.
impl FromStr for RateModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let params = || -> Result<Vec<f64>> {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidConfig(format!("rate model {s:?}: {e}")))
                })
                .collect()
        };
        let model = match name {
            "iid_uniform" | "iid" | "uniform" if args.is_empty() => RateModel::IidUniform,
            "beta" => match params()?.as_slice() {
                &[alpha, beta] => RateModel::Beta { alpha, beta },
                _ => return Err(Error::InvalidConfig(format!("expected beta:ALPHA,BETA, got {s:?}"))),
            },
            "oscillating" => match params()?.as_slice() {
                &[base_rate, amplitude, period] => RateModel::Oscillating {
                    base_rate,
                    amplitude,
                    period,
                },
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "expected oscillating:BASE,AMPLITUDE,PERIOD, got {s:?}"
                    )))
                }
            },
            _ => return Err(Error::InvalidConfig(format!("unknown rate model {s:?}"))),
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_problems: usize,
    pub num_checkpoints: usize,
    pub samples_per_cell: usize,
    pub rate_model: RateModel,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_problems == 0 || self.num_checkpoints == 0 || self.samples_per_cell == 0 {
            return Err(Error::InvalidConfig(
                "problems, checkpoints and samples per cell must all be at least 1".into(),
            ));
        }
        self.rate_model.validate()
    }
}

/// Seeded rate matrix for `config`, checkpoints latest first.
pub fn simulate_rates(config: &SimConfig) -> Result<TruePassRate> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (p, t) = (config.num_problems, config.num_checkpoints);
    let mut rates = Vec::with_capacity(p * t);
    match config.rate_model {
        RateModel::IidUniform => rates.extend((0..p * t).map(|_| rng.random::<f64>())),
        RateModel::Beta { alpha, beta } => {
            let dist = Beta::new(alpha, beta).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            rates.extend((0..p * t).map(|_| dist.sample(&mut rng).clamp(0.0, 1.0)));
        }
        RateModel::Oscillating {
            base_rate,
            amplitude,
            period,
        } => {
            for _ in 0..p {
                let phase = rng.random::<f64>() * period;
                rates.extend((0..t).map(|j| {
                    let r = base_rate + amplitude * (2.0 * PI * (j as f64 + phase) / period).sin();
                    r.clamp(0.0, 1.0)
                }));
            }
        }
    }
    TruePassRate::new(p, t, rates)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("samples per cell must be at least 1".into()));
    }
    Ok(())
}

/// Correctness bits of problem `i`: N Bernoulli(r_ij) draws per checkpoint.
fn problem_bits(rates: &TruePassRate, n: usize, seed: u64, problem: usize) -> Vec<bool> {
    let mut rng = stream(seed, 2 * problem as u64);
    rates
        .row(problem)
        .iter()
        .flat_map(|&r| (0..n).map(move |_| r))
        .map(|r| rng.random::<f64>() < r)
        .collect()
}

/// Only the correct counts of [`simulate_dataset`], without building records.
pub fn simulate_counts(rates: &TruePassRate, n: usize, seed: u64) -> Result<CorrectCounts> {
    check_n(n)?;
    let counts = (0..rates.num_problems())
        .flat_map(|i| {
            problem_bits(rates, n, seed, i)
                .chunks(n)
                .map(|cell| cell.iter().filter(|&&b| b).count())
                .collect::<Vec<_>>()
        })
        .collect();
    CorrectCounts::new(n, rates.num_problems(), rates.num_checkpoints(), counts)
}

pub fn simulate_dataset(rates: &TruePassRate, n: usize, seed: u64) -> Result<EvalDataset> {
    simulate_dataset_with(rates, n, seed, 0.0)
}

/// Like [`simulate_dataset`], but each wrong sample answers
/// [`SHARED_WRONG_ANSWER`] with probability `collision_rate` instead of a
/// unique wrong string.
pub fn simulate_dataset_with(
    rates: &TruePassRate,
    n: usize,
    seed: u64,
    collision_rate: f64,
) -> Result<EvalDataset> {
    check_n(n)?;
    if !(0.0..=1.0).contains(&collision_rate) {
        return Err(Error::InvalidConfig(format!(
            "collision rate {collision_rate} outside [0, 1]"
        )));
    }
    let t = rates.num_checkpoints();
    let mut samples = Vec::with_capacity(rates.num_problems() * t * n);
    for i in 0..rates.num_problems() {
        let mut rng = stream(seed, 2 * i as u64 + 1);
        for (draw, correct) in problem_bits(rates, n, seed, i).into_iter().enumerate() {
            let sample = if correct {
                Sample {
                    answer: GOLD_ANSWER.to_string(),
                    correct,
                    reward: Some(0.6 + 0.4 * rng.random::<f64>()),
                }
            } else {
                let reward = 0.7 * rng.random::<f64>();
                let answer = if collision_rate > 0.0 && rng.random::<f64>() < collision_rate {
                    SHARED_WRONG_ANSWER.to_string()
                } else {
                    format!("WRONG-{draw}")
                };
                Sample {
                    answer,
                    correct,
                    reward: Some(reward),
                }
            };
            samples.push(sample);
        }
    }
    let problems = (0..rates.num_problems()).map(|i| format!("sim-{i:04}")).collect();
    EvalDataset::from_cube(problems, t, n, samples)
}

/// Rates from `config.seed` and a dataset from the next seed.
pub fn simulate(config: &SimConfig) -> Result<(TruePassRate, EvalDataset)> {
    let rates = simulate_rates(config)?;
    let dataset = simulate_dataset(&rates, config.samples_per_cell, config.seed.wrapping_add(1))?;
    Ok((rates, dataset))
}
