//! Checkpoint-aware evaluation for fine-tuned models.
//!
//! Given per-checkpoint generation records (answer, correctness bit,
//! optional reward), this crate computes:
//!
//! * Pass@k|t, the probability of at least one correct answer when `k`
//!   samples are spread round-robin over the `t` latest checkpoints, with an
//!   unbiased estimator from per-cell correct counts ([`estimator`]);
//! * Maj@k|t and BoN@k|t by seeded resampling ([`aggregation`]);
//! * forgetting scores over greedy trajectories ([`dynamics`]);
//! * synthetic datasets with known pass rates ([`simulator`]);
//! * sweeps and CSV/JSON reports ([`report`]).
//!
//! Checkpoint index 0 is the latest checkpoint everywhere except in
//! [`TrajectoryMatrix`], whose columns run chronologically.

pub mod aggregation;
pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod partition;
pub mod report;
pub mod simulator;

pub use aggregation::{
    best_of_n_at_k_given_t, majority_at_k_given_t, majority_at_k_given_t_with, AggregationEstimate,
    Strategy, TieRule,
};
pub use dataset::{
    load_dataset, load_dataset_path, load_trajectories, load_trajectories_path, CheckpointLabel,
    CorrectCounts, EvalDataset, GenerationRecord, Sample, TrajectoryMatrix,
};
pub use dynamics::{forgetting_report, lost_score, ForgettingReport, Transition};
pub use error::{Error, Result};
pub use estimator::{
    exact_pass_at_k_given_t, pass_at_k, pass_at_k_given_t, survival_ratio, PassEstimate,
    TruePassRate,
};
pub use partition::{balanced_partition, PartitionPlan};
pub use report::{compare_pools, sweep, Metric, MetricReport, MetricRow, ReportMetadata};
pub use simulator::{simulate_dataset, simulate_rates, RateModel, SimConfig};
