//! Experiment planning, execution, and reporting around the `indicache`
//! simulator and its closed-form cost model.
//!
//! The CLI has three modes: `simulate` replays workloads under one or more
//! policies across an optional parameter sweep, `analyze` evaluates the
//! homogeneous closed forms over (hit ratio, fpr, fnr) grids, and `fn-ratio`
//! measures how stale indicators' false-negative ratios grow with the
//! advertisement interval. Reports are CSV with fixed 6-decimal formatting,
//! so emitted numbers parse back exactly.

pub mod analysis;
pub mod plan;
pub mod report;

pub use analysis::{emit_analysis, AnalysisGrid, AnalysisRow};
pub use plan::{parse_config_file, ExperimentPlan, SweepAxis};
pub use report::{run_plan, Report, ReportRow};
