//! Generation records, the evaluation cube and greedy trajectories.
//!
//! Two checkpoint orientations live here. [`EvalDataset`] and the JSONL
//! `checkpoint` field use sampling order: index 0 is the latest checkpoint,
//! larger indices are older. [`TrajectoryMatrix`] stores columns in
//! chronological order: column 0 is the earliest checkpoint, the last column
//! is the final one. [`load_trajectories`] and
//! [`EvalDataset::to_trajectories`] are the only places that convert.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Reserved checkpoint label for base-model records in trajectory files.
pub const BASE_LABEL: &str = "base";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckpointLabel {
    /// Sampling-order index, 0 = latest.
    Index(usize),
    Base,
}

impl fmt::Display for CheckpointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckpointLabel::Index(i) => write!(f, "{i}"),
            CheckpointLabel::Base => f.write_str(BASE_LABEL),
        }
    }
}

impl std::str::FromStr for CheckpointLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == BASE_LABEL {
            return Ok(CheckpointLabel::Base);
        }
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("checkpoint must be a decimal index or \"base\", got {s:?}"));
        }
        s.parse::<usize>()
            .map(CheckpointLabel::Index)
            .map_err(|e| format!("checkpoint {s:?}: {e}"))
    }
}

/// One sampled response.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub problem_id: String,
    pub checkpoint: CheckpointLabel,
    pub sample_index: u32,
    /// Canonical answer string; compared byte-exactly.
    pub answer: String,
    pub correct: bool,
    pub reward: Option<f64>,
}

/// A record inside a validated cube. Position carries problem, checkpoint and sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub answer: String,
    pub correct: bool,
    pub reward: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCheckpoint {
    Text(String),
    Number(u64),
}

#[derive(Deserialize)]
struct RawRecord {
    problem_id: String,
    checkpoint: RawCheckpoint,
    sample: u32,
    answer: String,
    correct: bool,
    #[serde(default)]
    reward: Option<f64>,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    problem_id: &'a str,
    checkpoint: String,
    sample: u32,
    answer: &'a str,
    correct: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reward: Option<f64>,
}

/// Parsed JSONL stream plus the count of ignored unknown fields.
struct ParsedStream {
    records: Vec<(usize, GenerationRecord)>,
    unknown_fields: usize,
}

fn parse_records<R: BufRead>(reader: R) -> Result<ParsedStream> {
    let mut records = Vec::new();
    let mut unknown_fields = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let checkpoint = match raw.checkpoint {
            RawCheckpoint::Text(s) => s.parse().map_err(|message| Error::Parse {
                line: line_no,
                message,
            })?,
            RawCheckpoint::Number(n) => CheckpointLabel::Index(n as usize),
        };
        unknown_fields += raw.extra.len();
        records.push((
            line_no,
            GenerationRecord {
                problem_id: raw.problem_id,
                checkpoint,
                sample_index: raw.sample,
                answer: raw.answer,
                correct: raw.correct,
                reward: raw.reward,
            },
        ));
    }
    Ok(ParsedStream {
        records,
        unknown_fields,
    })
}

/// Per-cell correct counts `C[i][j]` with the uniform sample count `N`.
///
/// Row-major over (problem, checkpoint), checkpoints in sampling order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectCounts {
    samples_per_cell: usize,
    num_problems: usize,
    num_checkpoints: usize,
    counts: Vec<usize>,
}

impl CorrectCounts {
    pub fn new(
        samples_per_cell: usize,
        num_problems: usize,
        num_checkpoints: usize,
        counts: Vec<usize>,
    ) -> Result<Self> {
        if samples_per_cell == 0 {
            return Err(Error::ShapeMismatch("samples per cell must be at least 1".into()));
        }
        if num_checkpoints == 0 {
            return Err(Error::ShapeMismatch("at least one checkpoint is required".into()));
        }
        if counts.len() != num_problems * num_checkpoints {
            return Err(Error::ShapeMismatch(format!(
                "{} counts for {num_problems} problems x {num_checkpoints} checkpoints",
                counts.len()
            )));
        }
        if let Some(&c) = counts.iter().find(|&&c| c > samples_per_cell) {
            return Err(Error::InvalidCounts {
                n: samples_per_cell,
                c,
                kj: 0,
            });
        }
        Ok(Self {
            samples_per_cell,
            num_problems,
            num_checkpoints,
            counts,
        })
    }

    pub fn samples_per_cell(&self) -> usize {
        self.samples_per_cell
    }

    pub fn num_problems(&self) -> usize {
        self.num_problems
    }

    pub fn num_checkpoints(&self) -> usize {
        self.num_checkpoints
    }

    pub fn get(&self, problem: usize, checkpoint: usize) -> usize {
        self.counts[problem * self.num_checkpoints + checkpoint]
    }

    /// Counts of one problem across checkpoints, latest first.
    pub fn row(&self, problem: usize) -> &[usize] {
        let start = problem * self.num_checkpoints;
        &self.counts[start..start + self.num_checkpoints]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Validated (problem x checkpoint x sample) cube.
///
/// Immutable after construction. Problems keep first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalDataset {
    problems: Vec<String>,
    samples: Vec<Sample>,
    counts: CorrectCounts,
    unknown_fields: usize,
}

impl EvalDataset {
    /// Builds a dataset from records in any order, enforcing the cube invariants.
    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = GenerationRecord>,
    {
        Self::build(records.into_iter().map(|r| (0, r)), 0)
    }

    /// Builds a dataset from a dense cube laid out as [problem][checkpoint][sample].
    pub fn from_cube(
        problems: Vec<String>,
        num_checkpoints: usize,
        samples_per_cell: usize,
        samples: Vec<Sample>,
    ) -> Result<Self> {
        if problems.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if samples.len() != problems.len() * num_checkpoints * samples_per_cell {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for {} problems x {num_checkpoints} checkpoints x {samples_per_cell} samples",
                samples.len(),
                problems.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = problems.iter().find(|p| !seen.insert(p.as_str())) {
            return Err(Error::DuplicateRecord {
                problem: dup.clone(),
                checkpoint: "0".into(),
                sample: 0,
            });
        }
        let counts = samples
            .chunks(samples_per_cell.max(1))
            .map(|cell| cell.iter().filter(|s| s.correct).count())
            .collect();
        let counts = CorrectCounts::new(samples_per_cell, problems.len(), num_checkpoints, counts)?;
        Ok(Self {
            problems,
            samples,
            counts,
            unknown_fields: 0,
        })
    }

    fn build<I>(records: I, unknown_fields: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, GenerationRecord)>,
    {
        let mut problems: Vec<String> = Vec::new();
        let mut problem_index: HashMap<String, usize> = HashMap::new();
        let mut cells: HashMap<(usize, usize), BTreeMap<u32, Sample>> = HashMap::new();
        let mut max_checkpoint = None;

        for (line, rec) in records {
            let checkpoint = match rec.checkpoint {
                CheckpointLabel::Index(j) => j,
                CheckpointLabel::Base => return Err(Error::ReservedCheckpoint { line }),
            };
            let pi = match problem_index.get(&rec.problem_id) {
                Some(&pi) => pi,
                None => {
                    problems.push(rec.problem_id.clone());
                    problem_index.insert(rec.problem_id.clone(), problems.len() - 1);
                    problems.len() - 1
                }
            };
            max_checkpoint = max_checkpoint.max(Some(checkpoint));
            let cell = cells.entry((pi, checkpoint)).or_default();
            if cell.contains_key(&rec.sample_index) {
                return Err(Error::DuplicateRecord {
                    problem: rec.problem_id,
                    checkpoint: checkpoint.to_string(),
                    sample: rec.sample_index,
                });
            }
            cell.insert(
                rec.sample_index,
                Sample {
                    answer: rec.answer,
                    correct: rec.correct,
                    reward: rec.reward,
                },
            );
        }

        let Some(max_checkpoint) = max_checkpoint else {
            return Err(Error::EmptyDataset);
        };
        let num_checkpoints = max_checkpoint + 1;
        let samples_per_cell = cells
            .get(&(0, 0))
            .map(BTreeMap::len)
            .ok_or_else(|| Error::MissingCell {
                problem: problems[0].clone(),
                checkpoint: "0".into(),
            })?;

        let mut samples = Vec::with_capacity(problems.len() * num_checkpoints * samples_per_cell);
        let mut counts = Vec::with_capacity(problems.len() * num_checkpoints);
        for (pi, problem) in problems.iter().enumerate() {
            for j in 0..num_checkpoints {
                let cell = cells.remove(&(pi, j)).ok_or_else(|| Error::MissingCell {
                    problem: problem.clone(),
                    checkpoint: j.to_string(),
                })?;
                if cell.len() != samples_per_cell {
                    return Err(Error::RaggedCell {
                        problem: problem.clone(),
                        checkpoint: j,
                        expected: samples_per_cell,
                        found: cell.len(),
                    });
                }
                let mut correct = 0;
                for (expected, (idx, sample)) in cell.into_iter().enumerate() {
                    if idx as usize != expected {
                        return Err(Error::SampleGap {
                            problem: problem.clone(),
                            checkpoint: j,
                            missing: expected,
                        });
                    }
                    correct += usize::from(sample.correct);
                    samples.push(sample);
                }
                counts.push(correct);
            }
        }

        let counts = CorrectCounts::new(samples_per_cell, problems.len(), num_checkpoints, counts)?;
        Ok(Self {
            problems,
            samples,
            counts,
            unknown_fields,
        })
    }

    pub fn problems(&self) -> &[String] {
        &self.problems
    }

    pub fn num_problems(&self) -> usize {
        self.problems.len()
    }

    pub fn num_checkpoints(&self) -> usize {
        self.counts.num_checkpoints()
    }

    /// The uniform per-cell sample count `N`.
    pub fn samples_per_cell(&self) -> usize {
        self.counts.samples_per_cell()
    }

    pub fn correct_counts(&self) -> &CorrectCounts {
        &self.counts
    }

    /// Number of unknown JSON fields ignored while loading.
    pub fn unknown_fields(&self) -> usize {
        self.unknown_fields
    }

    /// Samples of cell (problem, checkpoint), ordered by sample index.
    pub fn cell(&self, problem: usize, checkpoint: usize) -> &[Sample] {
        let n = self.samples_per_cell();
        let start = (problem * self.num_checkpoints() + checkpoint) * n;
        &self.samples[start..start + n]
    }

    pub fn has_rewards(&self) -> bool {
        self.samples.iter().all(|s| s.reward.is_some())
    }

    /// First record without a reward, as (problem, checkpoint, sample).
    pub(crate) fn first_missing_reward(&self) -> Option<(usize, usize, usize)> {
        let n = self.samples_per_cell();
        let t = self.num_checkpoints();
        self.samples
            .iter()
            .position(|s| s.reward.is_none())
            .map(|pos| (pos / (n * t), (pos / n) % t, pos % n))
    }

    /// Records in canonical order: problem order, then checkpoint, then sample.
    pub fn records(&self) -> impl Iterator<Item = GenerationRecord> + '_ {
        let n = self.samples_per_cell();
        let t = self.num_checkpoints();
        self.samples.iter().enumerate().map(move |(pos, s)| GenerationRecord {
            problem_id: self.problems[pos / (n * t)].clone(),
            checkpoint: CheckpointLabel::Index((pos / n) % t),
            sample_index: (pos % n) as u32,
            answer: s.answer.clone(),
            correct: s.correct,
            reward: s.reward,
        })
    }

    /// Writes the canonical JSONL form.
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for rec in self.records() {
            write_record(&mut writer, &rec)?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Hex SHA-256 of the canonical JSONL form.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for rec in self.records() {
            let mut line = Vec::new();
            write_record(&mut line, &rec).expect("writing to a Vec cannot fail");
            hasher.update(&line);
        }
        hex::encode(hasher.finalize())
    }

    /// Reinterprets a one-sample-per-cell dataset as greedy trajectories,
    /// reversing checkpoints into chronological order.
    pub fn to_trajectories(&self) -> Result<TrajectoryMatrix> {
        if self.samples_per_cell() != 1 {
            return Err(Error::NotGreedy {
                problem: self.problems[0].clone(),
                checkpoint: "0".into(),
                found: self.samples_per_cell(),
            });
        }
        let t = self.num_checkpoints();
        let rows = (0..self.num_problems())
            .map(|i| (0..t).rev().map(|j| self.cell(i, j)[0].correct).collect())
            .collect();
        TrajectoryMatrix::new(self.problems.clone(), rows, None)
    }
}

pub fn write_record<W: Write>(mut writer: W, rec: &GenerationRecord) -> Result<()> {
    let out = OutRecord {
        problem_id: &rec.problem_id,
        checkpoint: rec.checkpoint.to_string(),
        sample: rec.sample_index,
        answer: &rec.answer,
        correct: rec.correct,
        reward: rec.reward,
    };
    serde_json::to_writer(&mut writer, &out).map_err(std::io::Error::from)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Loads a JSONL record stream into a validated [`EvalDataset`].
pub fn load_dataset<R: BufRead>(reader: R) -> Result<EvalDataset> {
    let parsed = parse_records(reader)?;
    EvalDataset::build(parsed.records, parsed.unknown_fields)
}

pub fn load_dataset_path(path: impl AsRef<Path>) -> Result<EvalDataset> {
    let file = std::fs::File::open(path)?;
    load_dataset(std::io::BufReader::new(file))
}

/// Boolean (problem x checkpoint) correctness under greedy decoding.
///
/// Columns are chronological: 0 = earliest, last = final checkpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryMatrix {
    problems: Vec<String>,
    num_checkpoints: usize,
    correct: Vec<bool>,
    base_correct: Option<Vec<bool>>,
}

impl TrajectoryMatrix {
    /// `rows[i]` is problem i's trajectory in chronological order.
    pub fn new(
        problems: Vec<String>,
        rows: Vec<Vec<bool>>,
        base_correct: Option<Vec<bool>>,
    ) -> Result<Self> {
        if rows.len() != problems.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} trajectories for {} problems",
                rows.len(),
                problems.len()
            )));
        }
        let num_checkpoints = rows.first().map_or(1, Vec::len);
        if num_checkpoints == 0 {
            return Err(Error::ShapeMismatch("trajectories need at least one checkpoint".into()));
        }
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != num_checkpoints) {
            return Err(Error::ShapeMismatch(format!(
                "problem {:?} has {} checkpoints, expected {num_checkpoints}",
                problems[i],
                row.len()
            )));
        }
        if let Some(base) = &base_correct {
            if base.len() != problems.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} base entries for {} problems",
                    base.len(),
                    problems.len()
                )));
            }
        }
        Ok(Self {
            problems,
            num_checkpoints,
            correct: rows.into_iter().flatten().collect(),
            base_correct,
        })
    }

    pub fn problems(&self) -> &[String] {
        &self.problems
    }

    pub fn num_problems(&self) -> usize {
        self.problems.len()
    }

    pub fn num_checkpoints(&self) -> usize {
        self.num_checkpoints
    }

    /// Problem i's trajectory, earliest first.
    pub fn row(&self, problem: usize) -> &[bool] {
        let start = problem * self.num_checkpoints;
        &self.correct[start..start + self.num_checkpoints]
    }

    pub fn get(&self, problem: usize, checkpoint: usize) -> bool {
        self.row(problem)[checkpoint]
    }

    /// Correctness at the final (chronologically last) checkpoint.
    pub fn final_column(&self) -> Vec<bool> {
        (0..self.num_problems())
            .map(|i| self.get(i, self.num_checkpoints - 1))
            .collect()
    }

    pub fn base_correct(&self) -> Option<&[bool]> {
        self.base_correct.as_deref()
    }

    pub fn with_base(mut self, base: Vec<bool>) -> Result<Self> {
        if base.len() != self.problems.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} base entries for {} problems",
                base.len(),
                self.problems.len()
            )));
        }
        self.base_correct = Some(base);
        Ok(self)
    }
}

/// Loads greedy trajectories. The `checkpoint` field is read in sampling
/// order (0 = final) and reversed into chronological columns. Records under
/// the `"base"` label fill `base_correct`.
pub fn load_trajectories<R: BufRead>(reader: R) -> Result<TrajectoryMatrix> {
    let parsed = parse_records(reader)?;
    let mut problems: Vec<String> = Vec::new();
    let mut problem_index: HashMap<String, usize> = HashMap::new();
    let mut cells: HashMap<(usize, CheckpointLabel), Vec<bool>> = HashMap::new();
    let mut max_checkpoint = None;
    let mut saw_base = false;

    for (_, rec) in parsed.records {
        let pi = *problem_index.entry(rec.problem_id.clone()).or_insert_with(|| {
            problems.push(rec.problem_id.clone());
            problems.len() - 1
        });
        match rec.checkpoint {
            CheckpointLabel::Index(j) => max_checkpoint = max_checkpoint.max(Some(j)),
            CheckpointLabel::Base => saw_base = true,
        }
        cells.entry((pi, rec.checkpoint)).or_default().push(rec.correct);
    }

    let Some(max_checkpoint) = max_checkpoint else {
        return Err(Error::EmptyDataset);
    };
    let t = max_checkpoint + 1;

    let single = |pi: usize, label: CheckpointLabel| -> Result<bool> {
        match cells.get(&(pi, label)).map(Vec::as_slice) {
            None => Err(Error::MissingCell {
                problem: problems[pi].clone(),
                checkpoint: label.to_string(),
            }),
            Some([bit]) => Ok(*bit),
            Some(bits) => Err(Error::NotGreedy {
                problem: problems[pi].clone(),
                checkpoint: label.to_string(),
                found: bits.len(),
            }),
        }
    };

    let mut rows = Vec::with_capacity(problems.len());
    for pi in 0..problems.len() {
        let row = (0..t)
            .rev()
            .map(|j| single(pi, CheckpointLabel::Index(j)))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let base = if saw_base {
        Some(
            (0..problems.len())
                .map(|pi| single(pi, CheckpointLabel::Base))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    TrajectoryMatrix::new(problems, rows, base)
}

pub fn load_trajectories_path(path: impl AsRef<Path>) -> Result<TrajectoryMatrix> {
    let file = std::fs::File::open(path)?;
    load_trajectories(std::io::BufReader::new(file))
}
