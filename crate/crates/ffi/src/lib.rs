//! C ABI over `temporal_sampling`.
//!
//! Every fallible function returns a [`TsStatus`] and writes its result
//! through an out-pointer. On failure a human-readable message is available
//! from [`ts_last_error`] on the same thread. Datasets and trajectory
//! matrices are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use temporal_sampling::aggregation::TieRule;
use temporal_sampling::dataset::{load_trajectories, TrajectoryMatrix};
use temporal_sampling::error::Error;
use temporal_sampling::{
    balanced_partition, best_of_n_at_k_given_t, forgetting_report, load_dataset,
    majority_at_k_given_t_with, pass_at_k, pass_at_k_given_t, survival_ratio,
    AggregationEstimate, EvalDataset, PassEstimate,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    BufferTooSmall = 3,
    Parse = 10,
    DuplicateRecord = 11,
    RaggedCell = 12,
    SampleGap = 13,
    MissingCell = 14,
    ReservedCheckpoint = 15,
    NotGreedy = 16,
    EmptyDataset = 17,
    InvalidBudget = 20,
    InvalidCounts = 21,
    BudgetExceedsSamples = 22,
    NotEnoughCheckpoints = 23,
    InvalidReplicates = 24,
    MissingReward = 25,
    ShapeMismatch = 26,
    InvalidConfig = 27,
    PoolMismatch = 28,
    Io = 30,
    Panic = 99,
}

impl From<&Error> for TsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => TsStatus::Parse,
            Error::DuplicateRecord { .. } => TsStatus::DuplicateRecord,
            Error::RaggedCell { .. } => TsStatus::RaggedCell,
            Error::SampleGap { .. } => TsStatus::SampleGap,
            Error::MissingCell { .. } => TsStatus::MissingCell,
            Error::ReservedCheckpoint { .. } => TsStatus::ReservedCheckpoint,
            Error::NotGreedy { .. } => TsStatus::NotGreedy,
            Error::EmptyDataset => TsStatus::EmptyDataset,
            Error::InvalidBudget { .. } => TsStatus::InvalidBudget,
            Error::InvalidCounts { .. } => TsStatus::InvalidCounts,
            Error::BudgetExceedsSamples { .. } => TsStatus::BudgetExceedsSamples,
            Error::NotEnoughCheckpoints { .. } => TsStatus::NotEnoughCheckpoints,
            Error::InvalidReplicates => TsStatus::InvalidReplicates,
            Error::MissingReward { .. } => TsStatus::MissingReward,
            Error::ShapeMismatch(_) => TsStatus::ShapeMismatch,
            Error::InvalidConfig(_) => TsStatus::InvalidConfig,
            Error::PoolMismatch(_) => TsStatus::PoolMismatch,
            Error::SweepCell { source, .. } => TsStatus::from(source.as_ref()),
            Error::Io(_) => TsStatus::Io,
        }
    }
}

/// Tie rule for majority voting.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsTieRule {
    /// Uniformly random among tied answers.
    UniformRandom = 0,
    /// The tied answer first seen at the latest checkpoint.
    PreferLatest = 1,
}

/// Opaque evaluation dataset.
pub struct TsDataset(EvalDataset);

/// Opaque correctness trajectories (one greedy sample per checkpoint).
pub struct TsTrajectories(TrajectoryMatrix);

/// Monte Carlo estimate of an aggregated metric.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TsAggregate {
    pub value: f64,
    pub std_error: f64,
    pub replicates: usize,
}

/// Forgetting metrics in percent. `p_lost` is meaningful only when
/// `has_p_lost` is true.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TsForgettingReport {
    pub p_ft: f64,
    pub p_ecs: f64,
    pub p_tfs: f64,
    pub p_lost: f64,
    pub has_p_lost: bool,
    pub ever_forgotten_pct: f64,
    pub problems: usize,
    pub final_correct: usize,
    pub ever_correct: usize,
    pub ever_forgotten: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Internal failure: status plus message.
struct Failure(TsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(TsStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TsStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal panic: {message}"));
            TsStatus::Panic
        }
    }
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null("data"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn path_arg(path: *const c_char) -> Result<String, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure(TsStatus::InvalidUtf8, "path is not valid UTF-8".into()))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Copies `values` into a caller buffer that must hold at least `values.len()`.
unsafe fn fill<T: Copy>(buf: *mut T, buf_len: usize, values: &[T]) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if buf_len < values.len() {
        return Err(Failure(
            TsStatus::BufferTooSmall,
            format!("buffer holds {buf_len} values, {} needed", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

unsafe fn dataset<'a>(ds: *const TsDataset) -> Result<&'a EvalDataset, Failure> {
    ds.as_ref().map(|d| &d.0).ok_or_else(|| null("dataset"))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ts_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses JSONL generation records from a memory buffer.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_dataset_load_jsonl(
    data: *const u8,
    len: usize,
    out: *mut *mut TsDataset,
) -> TsStatus {
    guard(|| {
        let ds = load_dataset(bytes(data, len)?)?;
        write_out(out, Box::into_raw(Box::new(TsDataset(ds))))
    })
}

/// Loads a JSONL dataset from a file path.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_dataset_load_path(path: *const c_char, out: *mut *mut TsDataset) -> TsStatus {
    guard(|| {
        let ds = temporal_sampling::dataset::load_dataset_path(path_arg(path)?)?;
        write_out(out, Box::into_raw(Box::new(TsDataset(ds))))
    })
}

/// Releases a dataset. NULL is ignored.
///
/// # Safety
/// `ds` must come from a `ts_dataset_load_*` call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ts_dataset_free(ds: *mut TsDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of problems, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ts_dataset_num_problems(ds: *const TsDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.num_problems())
}

/// Number of checkpoints, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ts_dataset_num_checkpoints(ds: *const TsDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.num_checkpoints())
}

/// Samples per (problem, checkpoint) cell, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ts_dataset_samples_per_cell(ds: *const TsDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.samples_per_cell())
}

/// Writes the per-checkpoint draw counts of budget `k` over `t` checkpoints
/// into `allocation`, which must hold `t` values.
///
/// # Safety
/// `allocation` must point to `allocation_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ts_balanced_partition(
    k: usize,
    t: usize,
    allocation: *mut usize,
    allocation_len: usize,
) -> TsStatus {
    guard(|| {
        let plan = balanced_partition(k, t)?;
        fill(allocation, allocation_len, &plan.allocation)
    })
}

/// Probability that `kj` draws without replacement from `n` samples, `c` of
/// them correct, are all wrong.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_survival_ratio(n: usize, c: usize, kj: usize, out: *mut f64) -> TsStatus {
    guard(|| write_out(out, survival_ratio(n, c, kj)?))
}

unsafe fn write_pass(
    est: PassEstimate,
    value: *mut f64,
    per_problem: *mut f64,
    per_problem_len: usize,
) -> Result<(), Failure> {
    if !per_problem.is_null() {
        fill(per_problem, per_problem_len, &est.per_problem)?;
    }
    write_out(value, est.value)
}

/// Pass@k at one checkpoint (0 = latest). `per_problem` may be NULL;
/// otherwise it must hold one value per problem.
///
/// # Safety
/// `ds` must be a live handle; `value` must be writable; `per_problem`, when
/// not NULL, must point to `per_problem_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ts_pass_at_k(
    ds: *const TsDataset,
    k: usize,
    checkpoint: usize,
    value: *mut f64,
    per_problem: *mut f64,
    per_problem_len: usize,
) -> TsStatus {
    guard(|| write_pass(pass_at_k(dataset(ds)?, k, checkpoint)?, value, per_problem, per_problem_len))
}

/// Pass@k|t: budget `k` split over the `t` latest checkpoints.
///
/// # Safety
/// Same contract as [`ts_pass_at_k`].
#[no_mangle]
pub unsafe extern "C" fn ts_pass_at_k_given_t(
    ds: *const TsDataset,
    k: usize,
    t: usize,
    value: *mut f64,
    per_problem: *mut f64,
    per_problem_len: usize,
) -> TsStatus {
    guard(|| write_pass(pass_at_k_given_t(dataset(ds)?, k, t)?, value, per_problem, per_problem_len))
}

fn to_c(est: AggregationEstimate) -> TsAggregate {
    TsAggregate {
        value: est.value,
        std_error: est.std_error,
        replicates: est.replicates,
    }
}

/// Maj@k|t estimated from `replicates` seeded Monte Carlo draws.
/// `tie_rule` is a [`TsTieRule`] value.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_majority_at_k_given_t(
    ds: *const TsDataset,
    k: usize,
    t: usize,
    replicates: usize,
    seed: u64,
    tie_rule: u32,
    out: *mut TsAggregate,
) -> TsStatus {
    guard(|| {
        let rule = match tie_rule {
            r if r == TsTieRule::UniformRandom as u32 => TieRule::UniformRandom,
            r if r == TsTieRule::PreferLatest as u32 => TieRule::PreferLatest,
            other => return Err(Failure(TsStatus::InvalidConfig, format!("unknown tie rule {other}"))),
        };
        let est = majority_at_k_given_t_with(dataset(ds)?, k, t, replicates, seed, rule)?;
        write_out(out, to_c(est))
    })
}

/// BoN@k|t estimated from `replicates` seeded Monte Carlo draws. Every
/// record needs a reward.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_best_of_n_at_k_given_t(
    ds: *const TsDataset,
    k: usize,
    t: usize,
    replicates: usize,
    seed: u64,
    out: *mut TsAggregate,
) -> TsStatus {
    guard(|| write_out(out, to_c(best_of_n_at_k_given_t(dataset(ds)?, k, t, replicates, seed)?)))
}

/// Parses greedy trajectory records (optionally with "base" records) from a
/// memory buffer.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_trajectories_load_jsonl(
    data: *const u8,
    len: usize,
    out: *mut *mut TsTrajectories,
) -> TsStatus {
    guard(|| {
        let traj = load_trajectories(bytes(data, len)?)?;
        write_out(out, Box::into_raw(Box::new(TsTrajectories(traj))))
    })
}

/// Loads trajectories from a file path.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_trajectories_load_path(
    path: *const c_char,
    out: *mut *mut TsTrajectories,
) -> TsStatus {
    guard(|| {
        let traj = temporal_sampling::dataset::load_trajectories_path(path_arg(path)?)?;
        write_out(out, Box::into_raw(Box::new(TsTrajectories(traj))))
    })
}

/// Releases trajectories. NULL is ignored.
///
/// # Safety
/// `traj` must come from a `ts_trajectories_load_*` call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ts_trajectories_free(traj: *mut TsTrajectories) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Forgetting metrics of a trajectory matrix.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_forgetting_report(
    traj: *const TsTrajectories,
    out: *mut TsForgettingReport,
) -> TsStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("trajectories"))?;
        let r = forgetting_report(&traj.0)?;
        write_out(
            out,
            TsForgettingReport {
                p_ft: r.p_ft,
                p_ecs: r.p_ecs,
                p_tfs: r.p_tfs,
                p_lost: r.p_lost.unwrap_or(0.0),
                has_p_lost: r.p_lost.is_some(),
                ever_forgotten_pct: r.ever_forgotten_pct,
                problems: r.counts.problems,
                final_correct: r.counts.final_correct,
                ever_correct: r.counts.ever_correct,
                ever_forgotten: r.counts.ever_forgotten,
            },
        )
    })
}
