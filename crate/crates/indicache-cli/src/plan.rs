//! Experiment plans: a base run configuration, an optional sweep axis, and
//! the set of policies to compare. Plans come from a flat `key=value` config
//! file, command-line flags, or both (flags win).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use indicache::sim::{Policy, RunConfig};
use indicache::workload::WorkloadSpec;
use indicache::{Error, Result};

/// Which configuration field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    MissPenalty,
    UpdateInterval,
    Bpe,
    CacheSize,
    NumCaches,
    None,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "miss_penalty" => Ok(Self::MissPenalty),
            "update_interval" => Ok(Self::UpdateInterval),
            "bpe" => Ok(Self::Bpe),
            "cache_size" => Ok(Self::CacheSize),
            "num_caches" => Ok(Self::NumCaches),
            "none" => Ok(Self::None),
            other => Err(Error::InvalidArgument(format!(
                "sweep_axis: unknown axis '{other}' (expected miss_penalty, update_interval, \
                 bpe, cache_size, num_caches, or none)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::MissPenalty => "miss_penalty",
            Self::UpdateInterval => "update_interval",
            Self::Bpe => "bpe",
            Self::CacheSize => "cache_size",
            Self::NumCaches => "num_caches",
            Self::None => "none",
        }
    }
}

/// A resolved experiment: base config, sweep, policies, output destination.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub base: RunConfig,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub policies: Vec<Policy>,
    pub output: Option<PathBuf>,
    pub event_log: Option<PathBuf>,
}

impl ExperimentPlan {
    /// Baseline plan: the reference three-cache setup over a synthetic
    /// Zipf workload, no sweep, all four policies.
    pub fn baseline() -> Self {
        Self {
            base: RunConfig::baseline(
                Policy::Fna,
                WorkloadSpec::Zipf {
                    alpha: 0.8,
                    universe: 1_000_000,
                    length: 1_000_000,
                },
            ),
            sweep_axis: SweepAxis::None,
            sweep_values: Vec::new(),
            policies: vec![Policy::Fna, Policy::Fno, Policy::FnaStar, Policy::Pif],
            output: None,
            event_log: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.sweep_axis != SweepAxis::None && self.sweep_values.is_empty() {
            return Err(Error::InvalidArgument(
                "sweep_values: must be nonempty when a sweep axis is set".into(),
            ));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidArgument(
                "policies: at least one policy is required".into(),
            ));
        }
        // Every derived config must be valid up front.
        for &value in &self.sweep_values {
            self.config_at(value)?;
        }
        Ok(())
    }

    /// The run configuration at one sweep point.
    pub fn config_at(&self, value: f64) -> Result<RunConfig> {
        let mut config = self.base.clone();
        match self.sweep_axis {
            SweepAxis::None => {}
            SweepAxis::MissPenalty => {
                config.miss_penalty = value;
            }
            SweepAxis::Bpe => {
                config.bpe = value;
            }
            SweepAxis::UpdateInterval => {
                config.update_interval = Some(positive_int("update_interval", value)?);
            }
            SweepAxis::CacheSize => {
                let size = positive_int("cache_size", value)? as usize;
                config.cache_capacities = vec![size; config.num_caches];
            }
            SweepAxis::NumCaches => {
                let n = positive_int("num_caches", value)? as usize;
                config.num_caches = n;
                config.cache_capacities = broadcast("cache_capacities", &self.base.cache_capacities, n)?;
                config.access_costs = broadcast("access_costs", &self.base.access_costs, n)?;
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Sweep values, or the single no-sweep point.
    pub fn points(&self) -> Vec<f64> {
        if self.sweep_axis == SweepAxis::None {
            vec![0.0]
        } else {
            self.sweep_values.clone()
        }
    }
}

fn positive_int(field: &str, value: f64) -> Result<u64> {
    if value < 1.0 || value.fract() != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{field}: expected a positive integer, got {value}"
        )));
    }
    Ok(value as u64)
}

/// Extends a per-cache list to `n` entries; only uniform lists broadcast.
fn broadcast<T: Clone + PartialEq>(field: &str, values: &[T], n: usize) -> Result<Vec<T>> {
    if values.len() == n {
        return Ok(values.to_vec());
    }
    if values.windows(2).all(|w| w[0] == w[1]) {
        return Ok(vec![values[0].clone(); n]);
    }
    Err(Error::InvalidArgument(format!(
        "{field}: cannot broadcast {} non-uniform entries to {n} caches; \
         set a uniform value to sweep num_caches",
        values.len()
    )))
}

/// Parses `"1,2,3"` into a list of floats, naming the field in diagnostics.
pub fn parse_f64_list(field: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|piece| {
            piece.trim().parse::<f64>().map_err(|_| {
                Error::InvalidArgument(format!("{field}: '{piece}' is not a number"))
            })
        })
        .collect()
}

/// Parses a value specification: a single number, a comma list, or an
/// inclusive `start:step:end` range.
pub fn parse_value_spec(field: &str, s: &str) -> Result<Vec<f64>> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidArgument(format!(
                "{field}: range must be start:step:end, got '{s}'"
            )));
        }
        let nums = parse_f64_list(field, &parts.join(","))?;
        let (start, step, end) = (nums[0], nums[1], nums[2]);
        if step <= 0.0 || end < start {
            return Err(Error::InvalidArgument(format!(
                "{field}: range '{s}' must have positive step and end >= start"
            )));
        }
        let count = ((end - start) / step).round() as usize;
        let mut out = Vec::with_capacity(count + 1);
        for i in 0..=count {
            let v = start + step * i as f64;
            if v <= end + step * 1e-9 {
                out.push(v);
            }
        }
        return Ok(out);
    }
    parse_f64_list(field, s)
}

/// Reads a flat `key=value` config file (`#` comment lines allowed) into an
/// ordered key map, rejecting unknown keys.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    const KNOWN: &[&str] = &[
        "num_caches",
        "capacities",
        "access_costs",
        "miss_penalty",
        "bpe",
        "update_interval",
        "accuracy_cadence",
        "ewma_horizon",
        "ewma_delta",
        "seed",
        "warmup",
        "zipf_alpha",
        "zipf_universe",
        "requests",
        "trace",
        "policies",
        "sweep_axis",
        "sweep_values",
        "output",
        "event_log",
    ];
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidArgument(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                idx + 1
            )));
        };
        let key = key.trim();
        if !KNOWN.contains(&key) {
            return Err(Error::InvalidArgument(format!(
                "{}:{}: unknown key '{key}'",
                path.display(),
                idx + 1
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Applies config-file entries onto a plan. Flags are applied afterwards by
/// the caller, so they override the file.
pub fn apply_config_entries(
    plan: &mut ExperimentPlan,
    entries: &BTreeMap<String, String>,
) -> Result<()> {
    let mut zipf_alpha: Option<f64> = None;
    let mut zipf_universe: Option<u64> = None;
    let mut requests: Option<u64> = None;
    let mut trace: Option<PathBuf> = None;

    for (key, value) in entries {
        match key.as_str() {
            "num_caches" => {
                let n = parse_one_positive_int(key, value)? as usize;
                plan.base.num_caches = n;
                plan.base.cache_capacities =
                    broadcast("capacities", &plan.base.cache_capacities, n)?;
                plan.base.access_costs = broadcast("access_costs", &plan.base.access_costs, n)?;
            }
            "capacities" => {
                let list = parse_f64_list(key, value)?;
                let caps: Result<Vec<usize>> = list
                    .iter()
                    .map(|&v| positive_int(key, v).map(|x| x as usize))
                    .collect();
                let caps = caps?;
                plan.base.cache_capacities = broadcast(key, &caps, plan.base.num_caches)?;
            }
            "access_costs" => {
                let list = parse_f64_list(key, value)?;
                plan.base.access_costs = broadcast(key, &list, plan.base.num_caches)?;
            }
            "miss_penalty" => plan.base.miss_penalty = parse_one_f64(key, value)?,
            "bpe" => plan.base.bpe = parse_one_f64(key, value)?,
            "update_interval" => {
                plan.base.update_interval =
                    Some(parse_one_positive_int(key, value)?)
            }
            "accuracy_cadence" => {
                plan.base.accuracy_cadence = parse_one_positive_int(key, value)?
            }
            "ewma_horizon" => {
                plan.base.ewma_horizon = parse_one_positive_int(key, value)? as u32
            }
            "ewma_delta" => plan.base.ewma_delta = parse_one_f64(key, value)?,
            "seed" => {
                plan.base.seed = value.parse::<u64>().map_err(|_| {
                    Error::InvalidArgument(format!("seed: '{value}' is not a u64"))
                })?
            }
            "warmup" => {
                plan.base.warmup = value.parse::<u64>().map_err(|_| {
                    Error::InvalidArgument(format!("warmup: '{value}' is not a u64"))
                })?
            }
            "zipf_alpha" => zipf_alpha = Some(parse_one_f64(key, value)?),
            "zipf_universe" => zipf_universe = Some(parse_one_positive_int(key, value)?),
            "requests" => requests = Some(parse_one_positive_int(key, value)?),
            "trace" => trace = Some(PathBuf::from(value)),
            "policies" => plan.policies = parse_policies(value)?,
            "sweep_axis" => plan.sweep_axis = SweepAxis::parse(value)?,
            "sweep_values" => plan.sweep_values = parse_value_spec(key, value)?,
            "output" => plan.output = Some(PathBuf::from(value)),
            "event_log" => plan.event_log = Some(PathBuf::from(value)),
            _ => unreachable!("unknown keys rejected at parse"),
        }
    }

    merge_workload(plan, zipf_alpha, zipf_universe, requests, trace);
    Ok(())
}

/// Folds workload-related overrides into the plan's workload spec.
pub fn merge_workload(
    plan: &mut ExperimentPlan,
    zipf_alpha: Option<f64>,
    zipf_universe: Option<u64>,
    requests: Option<u64>,
    trace: Option<PathBuf>,
) {
    if let Some(path) = trace {
        plan.base.workload = WorkloadSpec::Trace(path);
        return;
    }
    if zipf_alpha.is_none() && zipf_universe.is_none() && requests.is_none() {
        return;
    }
    let (mut alpha, mut universe, mut length) = match &plan.base.workload {
        WorkloadSpec::Zipf {
            alpha,
            universe,
            length,
        } => (*alpha, *universe, *length),
        WorkloadSpec::Trace(_) => (0.8, 1_000_000, 1_000_000),
    };
    if let Some(a) = zipf_alpha {
        alpha = a;
    }
    if let Some(u) = zipf_universe {
        universe = u;
    }
    if let Some(r) = requests {
        length = r;
    }
    plan.base.workload = WorkloadSpec::Zipf {
        alpha,
        universe,
        length,
    };
}

pub fn parse_policies(s: &str) -> Result<Vec<Policy>> {
    let mut policies = Vec::new();
    for piece in s.split(',') {
        let policy = Policy::parse(piece.trim())?;
        if !policies.contains(&policy) {
            policies.push(policy);
        }
    }
    Ok(policies)
}

fn parse_one_f64(field: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::InvalidArgument(format!("{field}: '{s}' is not a number")))
}

fn parse_one_positive_int(field: &str, s: &str) -> Result<u64> {
    let v = parse_one_f64(field, s)?;
    positive_int(field, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn baseline_plan_matches_reference_setup() {
        let plan = ExperimentPlan::baseline();
        assert_eq!(plan.base.num_caches, 3);
        assert_eq!(plan.base.access_costs, vec![1.0, 2.0, 3.0]);
        assert_eq!(plan.base.cache_capacities, vec![10_000; 3]);
        assert_eq!(plan.base.miss_penalty, 100.0);
        assert_eq!(plan.base.bpe, 14.0);
        assert_eq!(plan.base.interval_for(0), 1_000);
        assert_eq!(plan.base.accuracy_cadence, 50);
        assert_eq!(plan.base.ewma_horizon, 100);
        assert_eq!(plan.base.ewma_delta, 0.25);
        plan.validate().unwrap();
    }

    #[test]
    fn value_specs_parse() {
        assert_eq!(parse_value_spec("x", "5").unwrap(), vec![5.0]);
        assert_eq!(parse_value_spec("x", "1,2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        let range = parse_value_spec("x", "0:0.005:0.045").unwrap();
        assert_eq!(range.len(), 10);
        assert!((range[9] - 0.045).abs() < 1e-12);
        assert!(parse_value_spec("x", "1:0:5").is_err());
        assert!(parse_value_spec("x", "a,b").is_err());
    }

    #[test]
    fn config_file_roundtrip_and_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# comment").unwrap();
        writeln!(f, "miss_penalty = 500").unwrap();
        writeln!(f, "policies = fna,pif").unwrap();
        writeln!(f, "zipf_alpha = 0.9").unwrap();
        drop(f);

        let entries = parse_config_file(&path).unwrap();
        let mut plan = ExperimentPlan::baseline();
        apply_config_entries(&mut plan, &entries).unwrap();
        assert_eq!(plan.base.miss_penalty, 500.0);
        assert_eq!(plan.policies, vec![Policy::Fna, Policy::Pif]);
        match &plan.base.workload {
            WorkloadSpec::Zipf { alpha, .. } => assert_eq!(*alpha, 0.9),
            other => panic!("unexpected workload {other:?}"),
        }

        let bad = dir.path().join("bad.conf");
        std::fs::write(&bad, "no_such_key = 3\n").unwrap();
        let err = parse_config_file(&bad).unwrap_err().to_string();
        assert!(err.contains("no_such_key"), "{err}");

        let trailing = dir.path().join("trailing.conf");
        std::fs::write(&trailing, "miss_penalty\n").unwrap();
        assert!(parse_config_file(&trailing).is_err());
    }

    #[test]
    fn negative_capacity_rejected_with_field_name() {
        let mut plan = ExperimentPlan::baseline();
        let mut entries = BTreeMap::new();
        entries.insert("capacities".to_string(), "-5".to_string());
        let err = apply_config_entries(&mut plan, &entries)
            .unwrap_err()
            .to_string();
        assert!(err.contains("capacities"), "{err}");
    }

    #[test]
    fn sweep_points_derive_valid_configs() {
        let mut plan = ExperimentPlan::baseline();
        plan.sweep_axis = SweepAxis::UpdateInterval;
        plan.sweep_values = vec![256.0, 1024.0];
        plan.validate().unwrap();
        let c = plan.config_at(256.0).unwrap();
        assert_eq!(c.update_interval, Some(256));

        plan.sweep_axis = SweepAxis::NumCaches;
        plan.sweep_values = vec![2.0, 4.0];
        // Baseline costs (1,2,3) cannot broadcast.
        assert!(plan.validate().is_err());
        plan.base.access_costs = vec![2.0, 2.0, 2.0];
        plan.validate().unwrap();
        let c = plan.config_at(4.0).unwrap();
        assert_eq!(c.access_costs, vec![2.0; 4]);
        assert_eq!(c.cache_capacities, vec![10_000; 4]);
    }

    #[test]
    fn fractional_integer_sweeps_rejected() {
        let mut plan = ExperimentPlan::baseline();
        plan.sweep_axis = SweepAxis::UpdateInterval;
        plan.sweep_values = vec![256.5];
        let err = plan.validate().unwrap_err().to_string();
        assert!(err.contains("update_interval"), "{err}");
    }
}
