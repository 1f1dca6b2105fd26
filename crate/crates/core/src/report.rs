//! Metric sweeps, model-pool comparison and CSV/JSON report output.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::aggregation::{best_of_n_at_k_given_t, majority_at_k_given_t};
use crate::dataset::EvalDataset;
use crate::dynamics::round_to;
use crate::error::{Error, Result};
use crate::estimator::pass_at_k_given_t;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const UNIT_FRACTION: &str = "fraction";
pub const UNIT_PERCENT: &str = "percent";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Pass,
    Majority,
    Bon,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Pass => "pass",
            Metric::Majority => "majority",
            Metric::Bon => "bon",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pass" => Ok(Metric::Pass),
            "majority" | "maj" => Ok(Metric::Majority),
            "bon" | "best_of_n" => Ok(Metric::Bon),
            _ => Err(Error::InvalidConfig(format!("unknown metric {s:?}"))),
        }
    }
}

fn six_decimals<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_to(*v, 6))
}

fn six_decimals_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_some(&round_to(*v, 6)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub k: usize,
    pub t: usize,
    #[serde(serialize_with = "six_decimals")]
    pub value: f64,
    #[serde(serialize_with = "six_decimals_opt")]
    pub std_error: Option<f64>,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub dataset: Option<String>,
    pub dataset_hash: Option<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Unix seconds; left empty for deterministic output.
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn new(metadata: ReportMetadata, mut rows: Vec<MetricRow>) -> Self {
        sort_rows(&mut rows);
        Self { metadata, rows }
    }

    pub fn push(&mut self, row: MetricRow) {
        self.rows.push(row);
        sort_rows(&mut self.rows);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Rows as CSV with header `metric,k,t,value,std_error,unit`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "k", "t", "value", "std_error", "unit"])
            .expect("in-memory csv");
        for row in &self.rows {
            w.write_record([
                row.metric.clone(),
                row.k.to_string(),
                row.t.to_string(),
                format!("{:.6}", round_to(row.value, 6)),
                row.std_error
                    .map(|s| format!("{:.6}", round_to(s, 6)))
                    .unwrap_or_default(),
                row.unit.clone(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is UTF-8")
    }

    pub fn rows_from_csv(text: &str) -> Result<Vec<MetricRow>> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        reader
            .deserialize::<CsvRow>()
            .enumerate()
            .map(|(i, r)| {
                let r = r.map_err(|e| Error::Parse {
                    line: i + 2,
                    message: e.to_string(),
                })?;
                Ok(MetricRow {
                    metric: r.metric,
                    k: r.k,
                    t: r.t,
                    value: r.value,
                    std_error: r.std_error,
                    unit: r.unit,
                })
            })
            .collect()
    }
}

#[derive(Deserialize)]
struct CsvRow {
    metric: String,
    k: usize,
    t: usize,
    value: f64,
    std_error: Option<f64>,
    unit: String,
}

fn sort_rows(rows: &mut [MetricRow]) {
    rows.sort_by(|a, b| (&a.metric, a.t, a.k).cmp(&(&b.metric, b.t, b.k)));
}

impl ReportMetadata {
    /// Metadata carrying the dataset's content digest and this tool's version.
    pub fn for_dataset(dataset: &EvalDataset, seed: Option<u64>) -> Self {
        Self {
            dataset: None,
            dataset_hash: Some(dataset.digest()),
            seed,
            tool_version: TOOL_VERSION.to_string(),
            timestamp: None,
        }
    }
}

/// Evaluates one metric on every (k, t) pair. Pass rows are closed form
/// and carry no standard error.
pub fn sweep(
    dataset: &EvalDataset,
    metric: Metric,
    k_values: &[usize],
    t_values: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<MetricReport> {
    let mut rows = Vec::with_capacity(k_values.len() * t_values.len());
    for &t in t_values {
        for &k in k_values {
            let annotate = |source: Error| Error::SweepCell {
                metric: metric.name().to_string(),
                k,
                t,
                source: Box::new(source),
            };
            let (value, std_error) = match metric {
                Metric::Pass => (pass_at_k_given_t(dataset, k, t).map_err(annotate)?.value, None),
                Metric::Majority => {
                    let e = majority_at_k_given_t(dataset, k, t, replicates, seed).map_err(annotate)?;
                    (e.value, Some(e.std_error))
                }
                Metric::Bon => {
                    let e = best_of_n_at_k_given_t(dataset, k, t, replicates, seed).map_err(annotate)?;
                    (e.value, Some(e.std_error))
                }
            };
            rows.push(MetricRow {
                metric: metric.name().to_string(),
                k,
                t,
                value,
                std_error,
                unit: UNIT_FRACTION.to_string(),
            });
        }
    }
    let seed = (metric != Metric::Pass).then_some(seed);
    Ok(MetricReport::new(ReportMetadata::for_dataset(dataset, seed), rows))
}

/// Pools the latest checkpoint of each dataset into one dataset whose
/// checkpoint `j` is `datasets[j]`. Problems follow the first dataset's order.
pub fn pool_datasets(datasets: &[EvalDataset]) -> Result<EvalDataset> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::PoolMismatch("the pool is empty".into()))?;
    let n = first.samples_per_cell();
    let mut sorted_first: Vec<&String> = first.problems().iter().collect();
    sorted_first.sort();

    let mut positions = Vec::with_capacity(datasets.len());
    for (m, ds) in datasets.iter().enumerate() {
        if ds.samples_per_cell() != n {
            return Err(Error::PoolMismatch(format!(
                "member {m} has {} samples per cell, member 0 has {n}",
                ds.samples_per_cell()
            )));
        }
        let mut sorted: Vec<&String> = ds.problems().iter().collect();
        sorted.sort();
        if sorted != sorted_first {
            return Err(Error::PoolMismatch(format!(
                "member {m} does not share member 0's problem list"
            )));
        }
        let index: std::collections::HashMap<&str, usize> = ds
            .problems()
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i))
            .collect();
        positions.push(index);
    }

    let t = datasets.len();
    let mut samples = Vec::with_capacity(first.num_problems() * t * n);
    for problem in first.problems() {
        for (ds, index) in datasets.iter().zip(&positions) {
            samples.extend_from_slice(ds.cell(index[problem.as_str()], 0));
        }
    }
    EvalDataset::from_cube(first.problems().to_vec(), t, n, samples)
}

pub const POOL_METRIC: &str = "majority_pool";

/// Majority accuracy under round-robin over a pool of models, each dataset
/// acting as one checkpoint.
pub fn compare_pools(
    datasets: &[EvalDataset],
    k: usize,
    replicates: usize,
    seed: u64,
) -> Result<MetricReport> {
    let pooled = pool_datasets(datasets)?;
    let t = datasets.len();
    let est = majority_at_k_given_t(&pooled, k, t, replicates, seed).map_err(|source| Error::SweepCell {
        metric: POOL_METRIC.to_string(),
        k,
        t,
        source: Box::new(source),
    })?;
    let row = MetricRow {
        metric: POOL_METRIC.to_string(),
        k,
        t,
        value: est.value,
        std_error: Some(est.std_error),
        unit: UNIT_FRACTION.to_string(),
    };
    Ok(MetricReport::new(ReportMetadata::for_dataset(&pooled, Some(seed)), vec![row]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CheckpointLabel, GenerationRecord};

    fn small() -> EvalDataset {
        let mut recs = Vec::new();
        for (i, p) in ["a", "b", "c"].iter().enumerate() {
            for j in 0..2 {
                for s in 0..4usize {
                    let correct = (i + j + s) % 3 == 0;
                    recs.push(GenerationRecord {
                        problem_id: p.to_string(),
                        checkpoint: CheckpointLabel::Index(j),
                        sample_index: s as u32,
                        answer: if correct { "ok".into() } else { format!("w{j}{s}") },
                        correct,
                        reward: Some(s as f64 / 4.0),
                    });
                }
            }
        }
        EvalDataset::from_records(recs).unwrap()
    }

    #[test]
    fn pass_at_one_is_mean_rate() {
        let ds = small();
        let report = sweep(&ds, Metric::Pass, &[1], &[1], 1, 0).unwrap();
        assert_eq!(report.rows.len(), 1);
        let c = ds.correct_counts();
        let mean = (0..3).map(|i| c.get(i, 0) as f64 / 4.0).sum::<f64>() / 3.0;
        assert!((report.rows[0].value - mean).abs() < 1e-12);
        assert!(report.rows[0].std_error.is_none());
        assert_eq!(report.metadata.dataset_hash.as_deref(), Some(ds.digest().as_str()));
    }

    #[test]
    fn empty_sweep_is_empty() {
        let report = sweep(&small(), Metric::Majority, &[], &[1, 2], 10, 0).unwrap();
        assert!(report.rows.is_empty());
    }

    #[test]
    fn rows_are_sorted_by_metric_t_k() {
        let report = sweep(&small(), Metric::Majority, &[4, 1, 2], &[2, 1], 20, 0).unwrap();
        let keys: Vec<(usize, usize)> = report.rows.iter().map(|r| (r.t, r.k)).collect();
        assert_eq!(keys, vec![(1, 1), (1, 2), (1, 4), (2, 1), (2, 2), (2, 4)]);
        assert!(report.rows.iter().all(|r| r.std_error.is_some()));
    }

    #[test]
    fn sweep_errors_name_the_cell() {
        match sweep(&small(), Metric::Pass, &[1, 5], &[1], 1, 0) {
            Err(Error::SweepCell { k: 5, t: 1, source, .. }) => {
                assert!(matches!(*source, Error::BudgetExceedsSamples { .. }))
            }
            other => panic!("expected SweepCell, got {other:?}"),
        }
    }

    #[test]
    fn csv_and_json_agree() {
        let mut report = sweep(&small(), Metric::Bon, &[1, 2, 3], &[1, 2], 37, 9).unwrap();
        report.push(MetricRow {
            metric: "pass".into(),
            k: 1,
            t: 1,
            value: 1.0 / 3.0,
            std_error: None,
            unit: UNIT_FRACTION.into(),
        });
        let from_csv = MetricReport::rows_from_csv(&report.to_csv()).unwrap();
        let from_json = MetricReport::from_json(&report.to_json()).unwrap();
        assert_eq!(from_csv, from_json.rows);
        assert_eq!(from_json.metadata, report.metadata);
        assert_eq!(from_csv[0].metric, "bon");
        assert_eq!(from_csv.last().unwrap().value, 0.333333);
    }

    #[test]
    fn pool_of_one_is_plain_majority() {
        let ds = small();
        let pooled = compare_pools(std::slice::from_ref(&ds), 3, 200, 4).unwrap();
        let direct = majority_at_k_given_t(&ds, 3, 1, 200, 4).unwrap();
        assert_eq!(pooled.rows[0].value, direct.value);
        assert_eq!(pooled.rows[0].t, 1);
    }

    #[test]
    fn pool_mismatch() {
        let ds = small();
        let mut recs: Vec<GenerationRecord> = ds.records().collect();
        for r in &mut recs {
            if r.problem_id == "c" {
                r.problem_id = "z".into();
            }
        }
        let other = EvalDataset::from_records(recs).unwrap();
        assert!(matches!(compare_pools(&[ds.clone(), other], 2, 10, 0), Err(Error::PoolMismatch(_))));
        assert!(matches!(compare_pools(&[], 2, 10, 0), Err(Error::PoolMismatch(_))));
    }

    #[test]
    fn pool_reorders_problems() {
        let ds = small();
        let mut recs: Vec<GenerationRecord> = ds.records().collect();
        recs.reverse();
        let shuffled = EvalDataset::from_records(recs).unwrap();
        assert_ne!(shuffled.problems(), ds.problems());
        let pooled = pool_datasets(&[ds.clone(), shuffled]).unwrap();
        for i in 0..ds.num_problems() {
            assert_eq!(pooled.cell(i, 0), ds.cell(i, 0));
            assert_eq!(pooled.cell(i, 1), ds.cell(i, 0));
        }
    }
}
