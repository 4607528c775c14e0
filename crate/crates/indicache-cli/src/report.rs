//! Plan execution and CSV/table reporting.
//!
//! Every policy at a sweep point replays the same materialized request
//! stream (the report records its checksum), so cost differences are purely
//! policy effects. Rows are sorted by axis value then policy name, and all
//! numeric fields use fixed 6-decimal formatting so the CSV parses back
//! exactly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};

use indicache::sim::{run_with_workload, CostLedger, Policy};
use indicache::workload::Workload;
use indicache::{Error, Result};

use crate::plan::{ExperimentPlan, SweepAxis};

/// One (sweep point, policy) outcome.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub axis_value: f64,
    pub policy: Policy,
    pub mean_cost: f64,
    /// Mean cost over the paired perfect-information run at the same sweep
    /// point; absent when the plan does not include that policy.
    pub normalized_cost: Option<f64>,
    pub miss_rate: f64,
    pub negative_access_rate: f64,
}

/// A completed experiment.
#[derive(Debug, Clone)]
pub struct Report {
    pub axis: SweepAxis,
    pub master_seed: u64,
    pub stream_checksum: u64,
    pub rows: Vec<ReportRow>,
}

pub const REPORT_HEADER: &str =
    "axis_value,policy,mean_cost,normalized_cost,miss_rate,negative_access_rate";

impl Report {
    /// CSV rendering: `#`-prefixed header lines carrying the master seed and
    /// stream checksum, then one row per (axis value, policy).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# master_seed={}\n", self.master_seed));
        out.push_str(&format!("# stream_checksum={:016x}\n", self.stream_checksum));
        out.push_str(&format!("# sweep_axis={}\n", self.axis.name()));
        out.push_str(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let normalized = match r.normalized_cost {
                Some(v) => format!("{v:.6}"),
                None => String::new(),
            };
            out.push_str(&format!(
                "{:.6},{},{:.6},{},{:.6},{:.6}\n",
                r.axis_value,
                r.policy.name(),
                r.mean_cost,
                normalized,
                r.miss_rate,
                r.negative_access_rate,
            ));
        }
        out
    }

    /// Fixed-width summary for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>14}  {:<8}  {:>12}  {:>12}  {:>10}  {:>14}\n",
            "axis_value", "policy", "mean_cost", "normalized", "miss_rate", "neg_accesses"
        ));
        for r in &self.rows {
            let normalized = match r.normalized_cost {
                Some(v) => format!("{v:.4}"),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "{:>14.4}  {:<8}  {:>12.4}  {:>12}  {:>10.4}  {:>14.4}\n",
                r.axis_value,
                r.policy.name(),
                r.mean_cost,
                normalized,
                r.miss_rate,
                r.negative_access_rate,
            ));
        }
        out
    }
}

/// Runs every (sweep point, policy) pair of the plan over one shared
/// workload and assembles the report. When an event-log path is set, one
/// file per run is written next to it, suffixed with the axis value and
/// policy name.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Report> {
    plan.validate()?;
    let workload = Workload::from_spec(&plan.base.workload, plan.base.workload_seed())?;
    let checksum = workload.checksum();

    let mut ledgers: BTreeMap<(u64, Policy), CostLedger> = BTreeMap::new();
    let mut points = plan.points();
    points.sort_by(|a, b| a.partial_cmp(b).expect("sweep values are finite"));

    let mut policies = plan.policies.clone();
    policies.sort_by_key(|p| p.name());

    for (point_idx, &value) in points.iter().enumerate() {
        let config = plan.config_at(value)?;
        for &policy in &policies {
            let mut run_config = config.clone();
            run_config.policy = policy;
            let ledger = match &plan.event_log {
                Some(path) => {
                    let suffixed = event_log_path(path, point_idx, value, policy, plan.sweep_axis);
                    let mut writer = BufWriter::new(File::create(&suffixed)?);
                    let (ledger, _) =
                        run_with_workload(&run_config, &workload, Some(&mut writer))?;
                    writer.flush()?;
                    ledger
                }
                None => run_with_workload(&run_config, &workload, None)?.0,
            };
            if ledger.stream_checksum != checksum {
                return Err(Error::InvalidArgument(format!(
                    "paired-run integrity broken at {}={value} policy={}: \
                     stream checksum {:016x} != {:016x}",
                    plan.sweep_axis.name(),
                    policy.name(),
                    ledger.stream_checksum,
                    checksum
                )));
            }
            ledgers.insert((value.to_bits(), policy), ledger);
        }
    }

    let mut rows = Vec::new();
    for &value in &points {
        let pif_mean = ledgers
            .get(&(value.to_bits(), Policy::Pif))
            .map(CostLedger::mean_cost);
        for &policy in &policies {
            let ledger = &ledgers[&(value.to_bits(), policy)];
            rows.push(ReportRow {
                axis_value: value,
                policy,
                mean_cost: ledger.mean_cost(),
                normalized_cost: pif_mean.map(|p| ledger.normalized_cost(p)),
                miss_rate: ledger.miss_rate(),
                negative_access_rate: ledger.negative_access_rate(),
            });
        }
    }

    Ok(Report {
        axis: plan.sweep_axis,
        master_seed: plan.base.seed,
        stream_checksum: checksum,
        rows,
    })
}

fn event_log_path(
    base: &std::path::Path,
    point_idx: usize,
    value: f64,
    policy: Policy,
    axis: SweepAxis,
) -> std::path::PathBuf {
    if axis == SweepAxis::None {
        let mut name = base.to_path_buf();
        name.set_extension(format!("{}.csv", policy.name()));
        name
    } else {
        let mut name = base.to_path_buf();
        name.set_extension(format!("p{point_idx}_{value}_{}.csv", policy.name()));
        name
    }
}
