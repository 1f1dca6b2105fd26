use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate record (problem {problem:?}, checkpoint {checkpoint}, sample {sample})")]
    DuplicateRecord {
        problem: String,
        checkpoint: String,
        sample: u32,
    },

    #[error("ragged cell (problem {problem:?}, checkpoint {checkpoint}): expected {expected} samples, found {found}")]
    RaggedCell {
        problem: String,
        checkpoint: usize,
        expected: usize,
        found: usize,
    },

    #[error("sample indices of cell (problem {problem:?}, checkpoint {checkpoint}) are not contiguous from 0: missing sample {missing}")]
    SampleGap {
        problem: String,
        checkpoint: usize,
        missing: usize,
    },

    #[error("missing cell (problem {problem:?}, checkpoint {checkpoint})")]
    MissingCell { problem: String, checkpoint: String },

    #[error("checkpoint label \"base\" is only valid in trajectory files (line {line})")]
    ReservedCheckpoint { line: usize },

    #[error("cell (problem {problem:?}, checkpoint {checkpoint}) has {found} samples; trajectories need exactly one")]
    NotGreedy {
        problem: String,
        checkpoint: String,
        found: usize,
    },

    #[error("dataset has no problems")]
    EmptyDataset,

    #[error("invalid budget: k = {k}, t = {t} (both must be at least 1)")]
    InvalidBudget { k: usize, t: usize },

    #[error("invalid counts: N = {n}, C = {c}, k_j = {kj}")]
    InvalidCounts { n: usize, c: usize, kj: usize },

    #[error("budget of {kj} draws from one checkpoint exceeds the {n} available samples")]
    BudgetExceedsSamples { kj: usize, n: usize },

    #[error("requested {requested} checkpoints but only {available} are available")]
    NotEnoughCheckpoints { requested: usize, available: usize },

    #[error("replicates must be at least 1")]
    InvalidReplicates,

    #[error("record (problem {problem:?}, checkpoint {checkpoint}, sample {sample}) has no reward")]
    MissingReward {
        problem: String,
        checkpoint: usize,
        sample: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("pool mismatch: {0}")]
    PoolMismatch(String),

    #[error("{metric} at k = {k}, t = {t}: {source}")]
    SweepCell {
        metric: String,
        k: usize,
        t: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for I/O failures, false for validation failures.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::SweepCell { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
