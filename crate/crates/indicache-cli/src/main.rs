//! `indicache` command line: trace-driven cache-selection simulations,
//! closed-form cost analysis, and staleness sweeps.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 1 on runtime errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use indicache::sim::measure_fn_ratio;
use indicache::Error;
use indicache_cli::analysis::{emit_analysis, AnalysisGrid};
use indicache_cli::plan::{
    apply_config_entries, merge_workload, parse_config_file, parse_policies, parse_value_spec,
    ExperimentPlan, SweepAxis,
};
use indicache_cli::report::run_plan;

#[derive(Parser)]
#[command(
    name = "indicache",
    about = "Cache selection under stale approximate indicators: simulation and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a workload under one or more access policies, optionally
    /// sweeping a configuration axis; emits a CSV report.
    Simulate(SimulateArgs),
    /// Evaluate the homogeneous closed-form costs over a (h, fpr, fnr) grid.
    Analyze(AnalyzeArgs),
    /// Measure the stale indicator's empirical false-negative ratio across
    /// advertisement intervals.
    FnRatio(FnRatioArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key=value config file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of caches.
    #[arg(long)]
    num_caches: Option<usize>,
    /// Per-cache capacities (comma list, or one value for all).
    #[arg(long)]
    capacities: Option<String>,
    /// Per-cache access costs (comma list, or one value for all).
    #[arg(long)]
    access_costs: Option<String>,
    #[arg(long)]
    miss_penalty: Option<f64>,
    /// Indicator bits per cached element.
    #[arg(long)]
    bpe: Option<f64>,
    /// Insertions between indicator advertisements (default: capacity / 10).
    #[arg(long)]
    update_interval: Option<u64>,
    /// Insertions between accuracy re-estimations.
    #[arg(long)]
    accuracy_cadence: Option<u64>,
    /// Requests per positive-rate estimation epoch.
    #[arg(long)]
    ewma_horizon: Option<u32>,
    /// Weight of the newest epoch in the moving average.
    #[arg(long)]
    ewma_delta: Option<f64>,
    /// Master seed; all randomness derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Requests excluded from the ledger at the start of the run.
    #[arg(long)]
    warmup: Option<u64>,
    /// Zipf skew of the synthetic workload.
    #[arg(long)]
    zipf_alpha: Option<f64>,
    /// Item universe of the synthetic workload.
    #[arg(long)]
    zipf_universe: Option<u64>,
    /// Length of the synthetic workload.
    #[arg(long)]
    requests: Option<u64>,
    /// Trace file (one key per line) instead of a synthetic workload.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl ConfigArgs {
    fn into_plan(self) -> Result<ExperimentPlan, Error> {
        let mut plan = ExperimentPlan::baseline();
        if let Some(path) = &self.config {
            let entries = parse_config_file(path)?;
            apply_config_entries(&mut plan, &entries)?;
        }
        if let Some(n) = self.num_caches {
            let uniform = |field: &str, values: &[f64]| -> Result<Vec<f64>, Error> {
                if values.len() == n {
                    Ok(values.to_vec())
                } else if values.windows(2).all(|w| w[0] == w[1]) {
                    Ok(vec![values[0]; n])
                } else {
                    Err(Error::InvalidArgument(format!(
                        "{field}: cannot broadcast to {n} caches"
                    )))
                }
            };
            plan.base.access_costs = uniform("access_costs", &plan.base.access_costs)?;
            let caps: Vec<f64> = plan.base.cache_capacities.iter().map(|&c| c as f64).collect();
            plan.base.cache_capacities = uniform("capacities", &caps)?
                .into_iter()
                .map(|c| c as usize)
                .collect();
            plan.base.num_caches = n;
        }
        if let Some(s) = &self.capacities {
            let caps = parse_value_spec("capacities", s)?;
            let caps: Result<Vec<usize>, Error> = caps
                .iter()
                .map(|&v| {
                    if v < 1.0 || v.fract() != 0.0 {
                        Err(Error::InvalidArgument(format!(
                            "capacities: expected a positive integer, got {v}"
                        )))
                    } else {
                        Ok(v as usize)
                    }
                })
                .collect();
            let caps = caps?;
            plan.base.cache_capacities = if caps.len() == 1 {
                vec![caps[0]; plan.base.num_caches]
            } else {
                caps
            };
        }
        if let Some(s) = &self.access_costs {
            let costs = parse_value_spec("access_costs", s)?;
            plan.base.access_costs = if costs.len() == 1 {
                vec![costs[0]; plan.base.num_caches]
            } else {
                costs
            };
        }
        if let Some(p) = self.miss_penalty {
            plan.base.miss_penalty = p;
        }
        if let Some(b) = self.bpe {
            plan.base.bpe = b;
        }
        if let Some(u) = self.update_interval {
            plan.base.update_interval = Some(u);
        }
        if let Some(c) = self.accuracy_cadence {
            plan.base.accuracy_cadence = c;
        }
        if let Some(t) = self.ewma_horizon {
            plan.base.ewma_horizon = t;
        }
        if let Some(d) = self.ewma_delta {
            plan.base.ewma_delta = d;
        }
        if let Some(s) = self.seed {
            plan.base.seed = s;
        }
        if let Some(w) = self.warmup {
            plan.base.warmup = w;
        }
        merge_workload(
            &mut plan,
            self.zipf_alpha,
            self.zipf_universe,
            self.requests,
            self.trace,
        );
        Ok(plan)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Policies to compare (comma list of fna, fno, fna_star, pif).
    #[arg(long)]
    policies: Option<String>,
    /// Axis to sweep: miss_penalty, update_interval, bpe, cache_size,
    /// num_caches, or none.
    #[arg(long)]
    sweep_axis: Option<String>,
    /// Sweep values: comma list or start:step:end.
    #[arg(long)]
    sweep_values: Option<String>,
    /// Write the CSV report here (stdout gets the summary table either way).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write per-request event logs next to this path (one file per run).
    #[arg(long)]
    event_log: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Hit-ratio grid: value, comma list, or start:step:end.
    #[arg(long, default_value = "0.5")]
    hit_ratio: String,
    /// False-positive-ratio grid.
    #[arg(long, default_value = "0:0.005:0.045")]
    fpr: String,
    /// False-negative-ratio grid.
    #[arg(long, default_value = "0:0.005:0.045")]
    fnr: String,
    #[arg(long, default_value_t = 3)]
    num_caches: u32,
    #[arg(long, default_value_t = 100.0)]
    miss_penalty: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FnRatioArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Advertisement intervals to measure, in insertions.
    #[arg(long, default_value = "16,128,1024,8192")]
    intervals: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn write_or_print(output: Option<&PathBuf>, content: &str) -> std::io::Result<()> {
    match output {
        Some(path) => std::fs::write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let mut plan = args.config.into_plan()?;
    if let Some(p) = &args.policies {
        plan.policies = parse_policies(p)?;
    }
    if let Some(axis) = &args.sweep_axis {
        plan.sweep_axis = SweepAxis::parse(axis)?;
    }
    if let Some(values) = &args.sweep_values {
        plan.sweep_values = parse_value_spec("sweep_values", values)?;
    }
    if let Some(out) = args.output {
        plan.output = Some(out);
    }
    if let Some(log) = args.event_log {
        plan.event_log = Some(log);
    }
    plan.validate()?;

    let report = run_plan(&plan)?;
    if let Some(path) = &plan.output {
        std::fs::write(path, report.to_csv())?;
    }
    println!(
        "# master_seed={} stream_checksum={:016x}",
        report.master_seed, report.stream_checksum
    );
    print!("{}", report.to_table());
    Ok(ExitCode::SUCCESS)
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode, Error> {
    let grid = AnalysisGrid {
        hit_ratios: parse_value_spec("hit_ratio", &args.hit_ratio)?,
        fprs: parse_value_spec("fpr", &args.fpr)?,
        fnrs: parse_value_spec("fnr", &args.fnr)?,
        num_caches: args.num_caches,
        miss_penalty: args.miss_penalty,
    };
    let csv = emit_analysis(&grid)?;
    write_or_print(args.output.as_ref(), &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn fn_ratio(args: FnRatioArgs) -> Result<ExitCode, Error> {
    let plan = args.config.into_plan()?;
    let intervals = parse_value_spec("intervals", &args.intervals)?;
    let intervals: Result<Vec<u64>, Error> = intervals
        .iter()
        .map(|&v| {
            if v < 1.0 || v.fract() != 0.0 {
                Err(Error::InvalidArgument(format!(
                    "intervals: expected a positive integer, got {v}"
                )))
            } else {
                Ok(v as u64)
            }
        })
        .collect();
    let table = measure_fn_ratio(&plan.base, &intervals?)?;
    let mut csv = String::from("update_interval,empirical_fnr\n");
    for (interval, fnr) in table {
        csv.push_str(&format!("{interval},{fnr:.6}\n"));
    }
    write_or_print(args.output.as_ref(), &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn is_config_error(err: &Error) -> bool {
    matches!(err, Error::InvalidArgument(_))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Analyze(args) => analyze(args),
        Command::FnRatio(args) => fn_ratio(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            if is_config_error(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
