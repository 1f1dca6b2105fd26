//! Independent enumeration oracles for the estimator and the aggregators.

use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use temporal_sampling::{
    balanced_partition, best_of_n_at_k_given_t, majority_at_k_given_t, pass_at_k_given_t,
    CheckpointLabel, EvalDataset, GenerationRecord, Sample,
};

/// Every way of picking one k_j-subset per checkpoint, as sample-index lists.
fn draw_combinations(n: usize, allocation: &[usize]) -> Vec<Vec<(usize, usize)>> {
    let mut combos = vec![Vec::new()];
    for (j, &kj) in allocation.iter().enumerate() {
        let subsets: Vec<Vec<usize>> = (0u32..(1 << n))
            .filter(|m| m.count_ones() as usize == kj)
            .map(|m| (0..n).filter(|s| m & (1 << s) != 0).collect())
            .collect();
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                subsets.iter().map(move |sub| {
                    let mut c = prefix.clone();
                    c.extend(sub.iter().map(|&s| (j, s)));
                    c
                })
            })
            .collect();
    }
    combos
}

/// Expected majority score of one draw with ties split uniformly.
fn majority_score(cells: &[&[Sample]], draws: &[(usize, usize)]) -> f64 {
    let mut tally: HashMap<&str, (usize, usize)> = HashMap::new();
    for &(j, s) in draws {
        let sample = &cells[j][s];
        let e = tally.entry(sample.answer.as_str()).or_default();
        e.0 += 1;
        e.1 += usize::from(sample.correct);
    }
    let top = tally.values().map(|v| v.0).max().unwrap();
    let tied: Vec<_> = tally.values().filter(|v| v.0 == top).collect();
    tied.iter().filter(|v| 2 * v.1 > v.0).count() as f64 / tied.len() as f64
}

fn bon_score(cells: &[&[Sample]], draws: &[(usize, usize)]) -> f64 {
    let best = draws
        .iter()
        .copied()
        .max_by(|a, b| {
            let ra = cells[a.0][a.1].reward.unwrap();
            let rb = cells[b.0][b.1].reward.unwrap();
            // higher reward wins; on ties the lower index wins
            ra.partial_cmp(&rb).unwrap().then(b.cmp(a))
        })
        .unwrap();
    f64::from(u8::from(cells[best.0][best.1].correct))
}

fn exact<F>(ds: &EvalDataset, k: usize, t: usize, score: F) -> f64
where
    F: Fn(&[&[Sample]], &[(usize, usize)]) -> f64,
{
    let plan = balanced_partition(k, t).unwrap();
    let combos = draw_combinations(ds.samples_per_cell(), &plan.allocation);
    let per_problem: Vec<f64> = (0..ds.num_problems())
        .map(|i| {
            let cells: Vec<&[Sample]> = (0..t).map(|j| ds.cell(i, j)).collect();
            combos.iter().map(|c| score(&cells, c)).sum::<f64>() / combos.len() as f64
        })
        .collect();
    per_problem.iter().sum::<f64>() / per_problem.len() as f64
}

fn random_dataset(seed: u64, problems: usize, t: usize, n: usize) -> EvalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for i in 0..problems {
        for j in 0..t {
            for s in 0..n {
                let answer = ["a", "b", "c"][rng.random_range(0..3)];
                records.push(GenerationRecord {
                    problem_id: format!("p{i}"),
                    checkpoint: CheckpointLabel::Index(j),
                    sample_index: s as u32,
                    answer: answer.to_string(),
                    correct: answer == "a" || rng.random_bool(0.1),
                    // coarse grid so reward ties occur
                    reward: Some(f64::from(rng.random_range(0..4u8)) / 4.0),
                });
            }
        }
    }
    EvalDataset::from_records(records).unwrap()
}

#[test]
fn pass_estimator_matches_draw_enumeration() {
    for n in 1..=4 {
        // one problem per correct-count pair
        let mut records = Vec::new();
        for c0 in 0..=n {
            for c1 in 0..=n {
                for (j, c) in [c0, c1].into_iter().enumerate() {
                    for s in 0..n {
                        records.push(GenerationRecord {
                            problem_id: format!("c{c0}-{c1}"),
                            checkpoint: CheckpointLabel::Index(j),
                            sample_index: s as u32,
                            answer: s.to_string(),
                            correct: s < c,
                            reward: None,
                        });
                    }
                }
            }
        }
        let ds = EvalDataset::from_records(records).unwrap();
        for t in 1..=2 {
            for k in 1..=4 {
                let plan = balanced_partition(k, t).unwrap();
                if plan.max_draws() > n {
                    assert!(pass_at_k_given_t(&ds, k, t).is_err());
                    continue;
                }
                let est = pass_at_k_given_t(&ds, k, t).unwrap();
                let combos = draw_combinations(n, &plan.allocation);
                for i in 0..ds.num_problems() {
                    let hits = combos
                        .iter()
                        .filter(|c| c.iter().any(|&(j, s)| ds.cell(i, j)[s].correct))
                        .count();
                    let want = hits as f64 / combos.len() as f64;
                    assert!(
                        (est.per_problem[i] - want).abs() <= 1e-12,
                        "n={n} t={t} k={k} problem {}",
                        ds.problems()[i]
                    );
                }
            }
        }
    }
}

#[test]
fn majority_monte_carlo_matches_enumeration() {
    for (seed, n, t, k) in [(1, 3, 1, 3), (2, 4, 2, 3), (3, 4, 2, 4), (4, 2, 2, 2), (5, 4, 1, 2)] {
        let ds = random_dataset(seed, 4, t, n);
        let want = exact(&ds, k, t, majority_score);
        let got = majority_at_k_given_t(&ds, k, t, 40_000, seed).unwrap();
        assert!(
            (got.value - want).abs() <= 4.0 * got.std_error.max(1e-12),
            "seed {seed}: {} vs exact {want} (se {})",
            got.value,
            got.std_error
        );
    }
}

#[test]
fn best_of_n_monte_carlo_matches_enumeration() {
    for (seed, n, t, k) in [(11, 3, 1, 2), (12, 4, 2, 3), (13, 4, 2, 2), (14, 3, 2, 4)] {
        let ds = random_dataset(seed, 4, t, n);
        let want = exact(&ds, k, t, bon_score);
        let got = best_of_n_at_k_given_t(&ds, k, t, 40_000, seed).unwrap();
        assert!(
            (got.value - want).abs() <= 4.0 * got.std_error.max(1e-12),
            "seed {seed}: {} vs exact {want} (se {})",
            got.value,
            got.std_error
        );
    }
}

#[test]
fn single_draw_majority_equals_best_of_n_with_constant_rewards() {
    let ds = random_dataset(77, 6, 2, 4);
    let flat: Vec<GenerationRecord> = ds
        .records()
        .map(|mut r| {
            r.reward = Some(0.5);
            r
        })
        .collect();
    let ds = EvalDataset::from_records(flat).unwrap();
    for t in 1..=2 {
        let maj = majority_at_k_given_t(&ds, 1, t, 3_000, 5).unwrap();
        let bon = best_of_n_at_k_given_t(&ds, 1, t, 3_000, 5).unwrap();
        assert_eq!(maj.value.to_bits(), bon.value.to_bits());
        assert_eq!(maj.std_error.to_bits(), bon.std_error.to_bits());
    }
}

#[test]
fn std_error_shrinks_with_replicates() {
    let ds = random_dataset(8, 5, 2, 4);
    let small = majority_at_k_given_t(&ds, 3, 2, 200, 1).unwrap();
    let large = majority_at_k_given_t(&ds, 3, 2, 20_000, 1).unwrap();
    assert!(large.std_error < small.std_error);
    assert!((0.0..=1.0).contains(&large.value));
}

fn arb_records() -> impl Strategy<Value = Vec<GenerationRecord>> {
    (1usize..5, 1usize..4, 1usize..4).prop_flat_map(|(p, t, n)| {
        proptest::collection::vec(
            ("[a-z0-9/. ]{0,6}", any::<bool>(), proptest::option::of(-1e6f64..1e6)),
            p * t * n,
        )
        .prop_map(move |cells| {
            cells
                .into_iter()
                .enumerate()
                .map(|(pos, (answer, correct, reward))| GenerationRecord {
                    problem_id: format!("prob \"{}\"", pos / (t * n)),
                    checkpoint: CheckpointLabel::Index((pos / n) % t),
                    sample_index: (pos % n) as u32,
                    answer,
                    correct,
                    reward,
                })
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn jsonl_round_trip(mut records in arb_records(), rotate in 0usize..50) {
        let ds = EvalDataset::from_records(records.clone()).unwrap();
        let text = ds.to_jsonl_string();
        let reloaded = temporal_sampling::load_dataset(text.as_bytes()).unwrap();
        prop_assert_eq!(&reloaded, &ds);
        prop_assert_eq!(reloaded.to_jsonl_string(), text);
        prop_assert_eq!(
            ds.records().filter(|r| r.correct).count(),
            ds.correct_counts().total()
        );

        // record order within each problem does not matter
        let block = ds.num_checkpoints() * ds.samples_per_cell();
        records.chunks_mut(block).for_each(|c| c.rotate_left(rotate % block));
        let shuffled = EvalDataset::from_records(records).unwrap();
        prop_assert_eq!(shuffled.digest(), ds.digest());
    }
}
