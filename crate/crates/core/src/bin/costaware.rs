use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use costaware::allocation::{allocate, BudgetProblem};
use costaware::bounds::{budget_bound, class_bound, class_problem, PredictorClass};
use costaware::harness::{self, Metric, SweepConfig};
use costaware::rademacher::{self, SampleSet, WeightBall, DEFAULT_DRAWS};
use costaware::synthetic::{
    generate_dataset, generate_world, identifiability_dimension, write_dataset_csv, write_world_json, SyntheticConfig,
    X2Schedule,
};
use costaware::Error;

#[derive(Parser)]
#[command(
    name = "costaware",
    version,
    about = "Cost-aware sample allocation across experiments"
)]
struct Cli {
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the one in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. Tables go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Repetitions per grid point (sweep).
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Draw one world per (C, m) cell instead of one per repetition.
    #[arg(long, global = true)]
    fixed_world: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ball {
    L2,
    L1,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal per-experiment sample counts for a budget.
    Allocate,
    /// Budget bounds for predictor classes over budget and confidence grids.
    Bound,
    /// Monte Carlo Rademacher complexity of a linear class on a sample.
    EstimateRademacher {
        /// CSV with one point per row.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, value_enum, default_value = "l2")]
        ball: Ball,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = DEFAULT_DRAWS)]
        draws: usize,
    },
    /// One run of the synthetic study.
    Simulate {
        #[arg(long)]
        budget: f64,
    },
    /// Success-probability sweep over budgets and experiment counts.
    Sweep {
        /// Input-cap schedule used when no configuration is given.
        #[arg(long, value_enum, default_value = "decreasing")]
        schedule: Schedule,
    },
    /// Unobservable weight dimensions as experiments are added.
    Identifiability,
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Decreasing,
    Increasing,
}

#[derive(Deserialize)]
struct BoundCase {
    class: PredictorClass,
    costs: Vec<f64>,
}

#[derive(Deserialize)]
struct BoundConfig {
    cases: Vec<BoundCase>,
    budgets: Vec<f64>,
    deltas: Vec<f64>,
}

fn load<T: DeserializeOwned>(path: Option<&Path>) -> costaware::Result<T> {
    let path = path.ok_or_else(|| Error::InvalidInput("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Writes `name` under `--out`, or to stdout without it.
fn emit_table(out: Option<&Path>, name: &str, header: &str, rows: &[String]) -> costaware::Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    match out {
        Some(dir) => {
            let path = dir.join(name);
            fs::write(&path, text).map_err(io_err(&path))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(io_err(Path::new("<stdout>"))),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn run(cli: Cli) -> costaware::Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let out = cli.out.as_deref();
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let config = cli.config.as_deref();

    match cli.command {
        Command::Allocate => {
            let problem: BudgetProblem = load(config)?;
            let plan = allocate(&problem)?;
            let rows: Vec<String> = problem
                .experiments
                .iter()
                .enumerate()
                .map(|(j, e)| {
                    format!(
                        "{},{},{},{},{},{}",
                        j + 1,
                        e.a,
                        e.c,
                        plan.gamma[j],
                        plan.n_real[j],
                        plan.n_int[j]
                    )
                })
                .collect();
            emit_table(out, "allocation.csv", "experiment,a,c,gamma,n_real,n_int", &rows)
        }
        Command::Bound => {
            let cfg: BoundConfig = load(config)?;
            let mut rows = Vec::new();
            for case in &cfg.cases {
                for &budget in &cfg.budgets {
                    for &delta in &cfg.deltas {
                        let problem = class_problem(&case.class, &case.costs, budget, delta)?;
                        let report = budget_bound(&problem)?;
                        let loose = class_bound(&case.class, &case.costs, budget, delta)?;
                        rows.push(format!(
                            "{},{budget},{delta},{},{},{loose},{}",
                            case.class.name(),
                            report.regime.as_str(),
                            report.tight,
                            join(&report.per_experiment_a)
                        ));
                    }
                }
            }
            emit_table(out, "bounds.csv", "class,C,delta,regime,tight,loose,a", &rows)
        }
        Command::EstimateRademacher {
            samples,
            ball,
            radius,
            draws,
        } => {
            let set = SampleSet::read_csv(&samples)?;
            let ball = match ball {
                Ball::L2 => WeightBall::L2,
                Ball::L1 => WeightBall::L1,
            };
            let est = rademacher::estimate(&set, ball, radius, draws, cli.seed.unwrap_or(0))?;
            let name = match ball {
                WeightBall::L2 => "l2",
                WeightBall::L1 => "l1",
            };
            let row = format!(
                "{name},{radius},{},{},{},{},{}",
                est.n, est.draws, est.mean, est.stderr, est.class_bound
            );
            emit_table(
                out,
                "rademacher.csv",
                "ball,radius,n,draws,mean,stderr,class_bound",
                &[row],
            )
        }
        Command::Simulate { budget } => {
            let mut cfg: SyntheticConfig = load(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let sim = harness::simulate(&cfg, budget)?;
            if let Some(dir) = out {
                let world = generate_world(&cfg)?;
                let counts: Vec<usize> = sim.n.iter().map(|&v| v as usize).collect();
                let data = generate_dataset(&world, &cfg, &counts)?;
                write_world_json(&world, &dir.join("world.json"))?;
                write_dataset_csv(&data, &dir.join("dataset.csv"))?;
            }
            let n: Vec<String> = sim.n.iter().map(u64::to_string).collect();
            let row = format!(
                "{},{},{},{},{},{},{}",
                sim.budget,
                sim.m,
                n.join(";"),
                sim.d_m,
                sim.w_error,
                sim.objective,
                sim.invisible_dims
            );
            emit_table(
                out,
                "simulation.csv",
                "C,m,n,d_m,w_error,objective,invisible_dims",
                &[row],
            )
        }
        Command::Sweep { schedule } => {
            let mut cfg: SweepConfig = match config {
                Some(_) => load(config)?,
                None => SweepConfig::reference_study(
                    match schedule {
                        Schedule::Decreasing => X2Schedule::Decreasing,
                        Schedule::Increasing => X2Schedule::Increasing,
                    },
                    0,
                ),
            };
            if let Some(s) = cli.seed {
                cfg.base.seed = s;
            }
            if let Some(r) = cli.reps {
                cfg.reps = r;
            }
            cfg.fixed_world |= cli.fixed_world;
            let result = harness::run_sweep(&cfg)?;
            let dir = out.unwrap_or(Path::new("."));
            harness::emit_csv(&result, &dir.join("sweep.csv"))?;
            harness::emit_records_csv(&result, &dir.join("sweep_reps.csv"))?;
            harness::emit_metadata(&cfg, &result, &dir.join("sweep_meta.json"))?;
            harness::emit_svg(&result.rows, Metric::Divergence, &dir.join("sweep_dm.svg"))?;
            harness::emit_svg(&result.rows, Metric::WeightError, &dir.join("sweep_w.svg"))?;
            Ok(())
        }
        Command::Identifiability => {
            let mut cfg: SyntheticConfig = load(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let world = generate_world(&cfg)?;
            let rows: Vec<String> = (1..=cfg.m)
                .map(|m| format!("{m},{}", identifiability_dimension(&world.prefix(m))))
                .collect();
            emit_table(out, "identifiability.csv", "m,invisible_dims", &rows)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::InfeasibleBudget { .. } | Error::Json { .. } => 2,
        Error::NonConvergence { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
