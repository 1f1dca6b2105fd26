//! Temporal forgetting over greedy trajectories.
//!
//! Scores are kept as integer problem counts; percentages are derived from
//! those counts and only rounded when serialized.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::dataset::TrajectoryMatrix;
use crate::error::{Error, Result};

/// Correctness change between two consecutive checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Transition {
    Forget,
    Improve,
    BothCorrect,
    BothWrong,
}

impl Transition {
    pub fn classify(before: bool, after: bool) -> Self {
        match (before, after) {
            (true, false) => Transition::Forget,
            (false, true) => Transition::Improve,
            (true, true) => Transition::BothCorrect,
            (false, false) => Transition::BothWrong,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Transition::Forget => "forget",
            Transition::Improve => "improve",
            Transition::BothCorrect => "both_correct",
            Transition::BothWrong => "both_wrong",
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn one_decimal<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_to(*v, 1))
}

fn one_decimal_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_some(&round_to(*v, 1)),
        None => s.serialize_none(),
    }
}

pub(crate) fn round_to(v: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (v * scale).round() / scale
}

/// Problem counts behind a [`ForgettingReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ForgettingCounts {
    pub problems: usize,
    pub final_correct: usize,
    pub ever_correct: usize,
    pub ever_forgotten: usize,
    pub lost: Option<usize>,
}

impl ForgettingCounts {
    /// Ever correct but wrong at the final checkpoint.
    pub fn forgotten_at_end(&self) -> usize {
        self.ever_correct - self.final_correct
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForgettingReport {
    #[serde(serialize_with = "one_decimal")]
    pub p_ft: f64,
    #[serde(serialize_with = "one_decimal")]
    pub p_ecs: f64,
    #[serde(serialize_with = "one_decimal")]
    pub p_tfs: f64,
    #[serde(serialize_with = "one_decimal_opt")]
    pub p_lost: Option<f64>,
    #[serde(serialize_with = "one_decimal")]
    pub ever_forgotten_pct: f64,
    pub counts: ForgettingCounts,
    #[serde(skip)]
    pub transitions: Vec<Vec<Transition>>,
}

fn percent(count: usize, total: usize) -> f64 {
    (100 * count) as f64 / total as f64
}

/// P_FT, P_ECS, P_TFS, P_Lost (when base correctness is present) and the
/// per-step event sequence of every problem.
pub fn forgetting_report(traj: &TrajectoryMatrix) -> Result<ForgettingReport> {
    let problems = traj.num_problems();
    if problems == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut final_correct = 0;
    let mut ever_correct = 0;
    let mut ever_forgotten = 0;
    let mut transitions = Vec::with_capacity(problems);
    for i in 0..problems {
        let row = traj.row(i);
        let events: Vec<Transition> = row
            .windows(2)
            .map(|w| Transition::classify(w[0], w[1]))
            .collect();
        final_correct += usize::from(row[row.len() - 1]);
        ever_correct += usize::from(row.iter().any(|&b| b));
        ever_forgotten += usize::from(events.contains(&Transition::Forget));
        transitions.push(events);
    }
    let lost = traj
        .base_correct()
        .map(|base| lost_count(base, &traj.final_column()))
        .transpose()?;

    let counts = ForgettingCounts {
        problems,
        final_correct,
        ever_correct,
        ever_forgotten,
        lost,
    };
    let p_ft = percent(final_correct, problems);
    let p_ecs = percent(ever_correct, problems);
    Ok(ForgettingReport {
        p_ft,
        p_ecs,
        // exact float identity with the two reported scores
        p_tfs: p_ecs - p_ft,
        p_lost: lost.map(|l| percent(l, problems)),
        ever_forgotten_pct: percent(ever_forgotten, problems),
        counts,
        transitions,
    })
}

fn lost_count(base: &[bool], final_: &[bool]) -> Result<usize> {
    if base.len() != final_.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} base entries vs {} final entries",
            base.len(),
            final_.len()
        )));
    }
    Ok(base.iter().zip(final_).filter(|&(&b, &f)| b && !f).count())
}

/// Percentage of problems correct for the base model but wrong after fine-tuning.
pub fn lost_score(base: &[bool], final_: &[bool]) -> Result<f64> {
    let lost = lost_count(base, final_)?;
    if base.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(percent(lost, base.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn traj(rows: Vec<Vec<bool>>) -> TrajectoryMatrix {
        let problems = (0..rows.len()).map(|i| format!("q{i}")).collect();
        TrajectoryMatrix::new(problems, rows, None).unwrap()
    }

    #[test]
    fn four_step_oscillation() {
        let report = forgetting_report(&traj(vec![vec![true, false, true, false]])).unwrap();
        assert_eq!(report.p_ecs, 100.0);
        assert_eq!(report.p_ft, 0.0);
        assert_eq!(report.p_tfs, 100.0);
        assert_eq!(report.ever_forgotten_pct, 100.0);
        assert_eq!(
            report.transitions[0],
            vec![Transition::Forget, Transition::Improve, Transition::Forget]
        );
        assert!(report.p_lost.is_none());
    }

    #[test]
    fn single_checkpoint_is_degenerate() {
        let report = forgetting_report(&traj(vec![vec![true], vec![false]])).unwrap();
        assert_eq!(report.p_ecs, report.p_ft);
        assert_eq!(report.p_tfs, 0.0);
        assert!(report.transitions.iter().all(Vec::is_empty));
    }

    #[test]
    fn empty_is_rejected() {
        let t = TrajectoryMatrix::new(vec![], vec![], None).unwrap();
        assert!(matches!(forgetting_report(&t), Err(Error::EmptyDataset)));
    }

    #[test]
    fn lost_score_examples() {
        assert_eq!(lost_score(&[false; 4], &[true, false, true, false]).unwrap(), 0.0);
        let v = [true, false, true, true];
        assert_eq!(lost_score(&v, &v).unwrap(), 0.0);
        let base = [true, true, false, true];
        let fin = [false, true, false, false];
        let by_hand = base.iter().zip(&fin).filter(|(b, f)| **b && !**f).count();
        assert_eq!(by_hand, 2);
        assert_eq!(lost_score(&base, &fin).unwrap(), 50.0);
        assert!(matches!(lost_score(&base, &fin[..3]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn report_includes_lost_when_base_present() {
        let t = traj(vec![vec![true, false], vec![false, true], vec![true, true]])
            .with_base(vec![true, true, false])
            .unwrap();
        let r = forgetting_report(&t).unwrap();
        assert_eq!(r.counts.lost, Some(1));
        assert!((r.p_lost.unwrap() - 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn serialization_rounds_to_one_decimal() {
        let t = traj(vec![vec![true, false], vec![false, false], vec![true, true]]);
        let json = serde_json::to_value(forgetting_report(&t).unwrap()).unwrap();
        assert_eq!(json["p_ecs"], 66.7);
        assert_eq!(json["p_ft"], 33.3);
        assert_eq!(json["p_tfs"], 33.3);
        assert_eq!(json["p_lost"], serde_json::Value::Null);
    }

    fn arb_traj() -> impl Strategy<Value = (Vec<Vec<bool>>, Vec<bool>)> {
        (1usize..12, 1usize..7).prop_flat_map(|(p, t)| {
            (
                proptest::collection::vec(proptest::collection::vec(any::<bool>(), t), p),
                proptest::collection::vec(any::<bool>(), p),
            )
        })
    }

    proptest! {
        #[test]
        fn identities_hold((rows, base) in arb_traj()) {
            let t = traj(rows.clone()).with_base(base.clone()).unwrap();
            let r = forgetting_report(&t).unwrap();
            prop_assert_eq!(r.p_tfs, r.p_ecs - r.p_ft);
            prop_assert!(0.0 <= r.p_ft && r.p_ft <= r.p_ecs && r.p_ecs <= 100.0);
            for (i, row) in rows.iter().enumerate() {
                let ever = row.iter().any(|&b| b);
                let last = *row.last().unwrap();
                if ever && !last {
                    prop_assert!(r.transitions[i].contains(&Transition::Forget));
                }
                prop_assert_eq!(r.transitions[i].len(), row.len() - 1);
            }

            // P_Lost depends only on base and final columns
            let flattened: Vec<Vec<bool>> = rows.iter().map(|row| {
                let mut v = vec![false; row.len()];
                *v.last_mut().unwrap() = *row.last().unwrap();
                v
            }).collect();
            let r2 = forgetting_report(&traj(flattened).with_base(base.clone()).unwrap()).unwrap();
            prop_assert_eq!(r.p_lost, r2.p_lost);

            // problem order
            let mut rev_rows = rows.clone();
            rev_rows.reverse();
            let mut rev_base = base.clone();
            rev_base.reverse();
            let r3 = forgetting_report(&traj(rev_rows).with_base(rev_base).unwrap()).unwrap();
            prop_assert_eq!(r.p_ft, r3.p_ft);
            prop_assert_eq!(r.p_ecs, r3.p_ecs);
            prop_assert_eq!(r.p_tfs, r3.p_tfs);
            prop_assert_eq!(r.p_lost, r3.p_lost);
            prop_assert_eq!(r.ever_forgotten_pct, r3.ever_forgotten_pct);
        }
    }
}
