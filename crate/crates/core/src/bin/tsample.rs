use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use temporal_sampling::dataset::{load_dataset, load_trajectories};
use temporal_sampling::report::{
    compare_pools, sweep, MetricReport, MetricRow, ReportMetadata, UNIT_FRACTION,
};
use temporal_sampling::simulator::{simulate_dataset_with, simulate_rates};
use temporal_sampling::{
    balanced_partition, best_of_n_at_k_given_t, forgetting_report, majority_at_k_given_t,
    majority_at_k_given_t_with, pass_at_k_given_t, EvalDataset, Error, Metric, RateModel,
    SimConfig, TieRule,
};

#[derive(Parser)]
#[command(name = "tsample", version, about = "Temporal sampling and forgetting metrics over checkpoint generations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Majority,
    Bon,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    Uniform,
    Latest,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Pass,
    Majority,
    Bon,
}

#[derive(Args)]
struct Output {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Omit the timestamp so identical inputs give identical bytes.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Balanced allocation of K draws over T checkpoints and the draw order.
    Plan {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unbiased Pass@k|t.
    Passk {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        t: usize,
        /// Emit one row per problem instead of the mean.
        #[arg(long)]
        per_problem: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Maj@k|t or BoN@k|t by seeded resampling.
    Aggregate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Majority tie rule.
        #[arg(long, value_enum, default_value = "uniform")]
        tie_rule: TieArg,
        #[command(flatten)]
        output: Output,
    },
    /// Forgetting scores over greedy trajectories.
    Dynamics {
        #[arg(long)]
        input: PathBuf,
        /// Base-model records, labelled with checkpoint "base".
        #[arg(long)]
        base: Option<PathBuf>,
        /// Report file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-problem transition CSV (problem_id, step, event).
        #[arg(long)]
        transitions: Option<PathBuf>,
    },
    /// Synthetic dataset with known per-checkpoint pass rates.
    Simulate {
        #[arg(long)]
        problems: usize,
        #[arg(long)]
        checkpoints: usize,
        #[arg(long)]
        n: usize,
        /// iid_uniform | beta:A,B | oscillating:BASE,AMPLITUDE,PERIOD
        #[arg(long, default_value = "iid_uniform")]
        rate_model: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability that a wrong sample repeats a shared wrong answer.
        #[arg(long, default_value_t = 0.0)]
        collision_rate: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One metric over a grid of k and t values.
    Sweep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        t: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Majority voting round-robin over a pool of models.
    ComparePools {
        /// One dataset per pool member (latest checkpoint of each is used).
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        k: usize,
        /// Also report temporal sampling on this dataset.
        #[arg(long)]
        temporal: Option<PathBuf>,
        /// Checkpoints for the temporal row (defaults to the pool size).
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    Ok(BufReader::new(File::open(path)?))
}

fn read_dataset(path: &Path) -> Result<EvalDataset, Error> {
    let ds = load_dataset(open(path)?)?;
    if ds.unknown_fields() > 0 {
        eprintln!(
            "warning: {}: ignored {} unknown field(s)",
            path.display(),
            ds.unknown_fields()
        );
    }
    Ok(ds)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn finish(mut report: MetricReport, dataset: Option<&Path>, output: &Output) -> Result<(), Error> {
    report.metadata.dataset = dataset.map(|p| p.display().to_string());
    if !output.deterministic {
        report.metadata.timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    let text = match output.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    emit(output.out.as_deref(), &text)
}

#[derive(Serialize)]
struct ProblemRow<'a> {
    problem_id: &'a str,
    k: usize,
    t: usize,
    value: f64,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Plan { k, t, out } => {
            let plan = balanced_partition(k, t)?;
            emit(out.as_deref(), &json_line(&plan))
        }
        Command::Passk {
            input,
            k,
            t,
            per_problem,
            output,
        } => {
            let ds = read_dataset(&input)?;
            if per_problem {
                let est = pass_at_k_given_t(&ds, k, t)?;
                let rows: Vec<ProblemRow<'_>> = ds
                    .problems()
                    .iter()
                    .zip(&est.per_problem)
                    .map(|(p, &value)| ProblemRow {
                        problem_id: p,
                        k,
                        t,
                        value: (value * 1e6).round() / 1e6,
                    })
                    .collect();
                let text = match output.format {
                    Format::Json => json_line(&rows),
                    Format::Csv => {
                        let mut w = csv::Writer::from_writer(Vec::new());
                        for row in &rows {
                            w.serialize(row).map_err(io::Error::other)?;
                        }
                        String::from_utf8(w.into_inner().map_err(io::Error::other)?)
                            .expect("csv is UTF-8")
                    }
                };
                emit(output.out.as_deref(), &text)
            } else {
                let report = sweep(&ds, Metric::Pass, &[k], &[t], 1, 0)?;
                finish(report, Some(&input), &output)
            }
        }
        Command::Aggregate {
            input,
            strategy,
            k,
            t,
            replicates,
            seed,
            tie_rule,
            output,
        } => {
            let ds = read_dataset(&input)?;
            let (metric, est) = match strategy {
                StrategyArg::Majority => {
                    let rule = match tie_rule {
                        TieArg::Uniform => TieRule::UniformRandom,
                        TieArg::Latest => TieRule::PreferLatest,
                    };
                    ("majority", majority_at_k_given_t_with(&ds, k, t, replicates, seed, rule)?)
                }
                StrategyArg::Bon => ("bon", best_of_n_at_k_given_t(&ds, k, t, replicates, seed)?),
            };
            let mut report = MetricReport::new(ReportMetadata::for_dataset(&ds, Some(seed)), vec![]);
            report.push(MetricRow {
                metric: metric.to_string(),
                k,
                t,
                value: est.value,
                std_error: Some(est.std_error),
                unit: UNIT_FRACTION.to_string(),
            });
            finish(report, Some(&input), &output)
        }
        Command::Dynamics {
            input,
            base,
            out,
            transitions,
        } => {
            let traj = match &base {
                None => load_trajectories(open(&input)?)?,
                Some(base) => {
                    let mut text = String::new();
                    open(&input)?.read_to_string(&mut text)?;
                    text.push('\n');
                    open(base)?.read_to_string(&mut text)?;
                    load_trajectories(text.as_bytes())?
                }
            };
            let report = forgetting_report(&traj)?;
            emit(out.as_deref(), &json_line(&report))?;
            if let Some(path) = transitions {
                let mut w = csv::Writer::from_path(&path).map_err(io::Error::other)?;
                w.write_record(["problem_id", "step", "event"]).map_err(io::Error::other)?;
                for (problem, events) in traj.problems().iter().zip(&report.transitions) {
                    for (step, event) in events.iter().enumerate() {
                        w.write_record([problem.as_str(), &(step + 1).to_string(), event.as_str()])
                            .map_err(io::Error::other)?;
                    }
                }
                w.flush()?;
            }
            Ok(())
        }
        Command::Simulate {
            problems,
            checkpoints,
            n,
            rate_model,
            seed,
            collision_rate,
            out,
        } => {
            let config = SimConfig {
                num_problems: problems,
                num_checkpoints: checkpoints,
                samples_per_cell: n,
                rate_model: rate_model.parse::<RateModel>()?,
                seed,
            };
            let rates = simulate_rates(&config)?;
            let ds = simulate_dataset_with(&rates, n, seed.wrapping_add(1), collision_rate)?;
            emit(out.as_deref(), &ds.to_jsonl_string())
        }
        Command::Sweep {
            input,
            metric,
            k,
            t,
            replicates,
            seed,
            output,
        } => {
            let ds = read_dataset(&input)?;
            let metric = match metric {
                MetricArg::Pass => Metric::Pass,
                MetricArg::Majority => Metric::Majority,
                MetricArg::Bon => Metric::Bon,
            };
            let report = sweep(&ds, metric, &k, &t, replicates, seed)?;
            finish(report, Some(&input), &output)
        }
        Command::ComparePools {
            inputs,
            k,
            temporal,
            t,
            replicates,
            seed,
            output,
        } => {
            let pool = inputs
                .iter()
                .map(|p| read_dataset(p))
                .collect::<Result<Vec<_>, _>>()?;
            let mut report = compare_pools(&pool, k, replicates, seed)?;
            if let Some(path) = &temporal {
                let ds = read_dataset(path)?;
                let t = t.unwrap_or(pool.len());
                let est = majority_at_k_given_t(&ds, k, t, replicates, seed)?;
                report.push(MetricRow {
                    metric: "majority".to_string(),
                    k,
                    t,
                    value: est.value,
                    std_error: Some(est.std_error),
                    unit: UNIT_FRACTION.to_string(),
                });
            }
            let names: Vec<String> = inputs.iter().map(|p| p.display().to_string()).collect();
            finish(report, Some(Path::new(&names.join(","))), &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
