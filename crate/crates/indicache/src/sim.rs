//! Trace-driven multi-cache simulation.
//!
//! Each request queries every cache's advertised (stale) indicator replica,
//! picks a subset of caches under the configured policy, probes them in
//! parallel (a hit is a hit in any probed cache), and on a miss pays the
//! penalty and places the item in its controller-assigned cache. Caches
//! mirror admissions/evictions into a counting Bloom filter, re-advertise
//! its compressed form every `update_interval` insertions, and re-estimate
//! their staleness-induced error ratios every `accuracy_cadence` insertions.
//!
//! Everything is driven by one master seed: identical configs replay
//! identical runs, bit for bit.

use std::io::Write;

use crate::beliefs::{IndicatorAccuracy, PositiveRateEstimator};
use crate::bloom::{BloomFilter, CountingBloomFilter, FilterParams};
use crate::cache::{CacheEvents, LruCache, PlacementPolicy};
use crate::error::{Error, Result};
use crate::hashing::derive_seed;
use crate::hetero::{
    pgm_fna_decide, pgm_fno_decide, solve_fno_exhaustive, solve_fno_greedy, AccessDecision,
    CacheBelief, CacheProfile, EXHAUSTIVE_LIMIT,
};
use crate::staleness::{delta_stats, estimate_fnr, estimate_fpr};
use crate::workload::{Workload, WorkloadSpec};

const WORKLOAD_COMPONENT: u64 = 1;
const PLACEMENT_COMPONENT: u64 = 2;
const FILTER_COMPONENT: u64 = 3;

/// Client access strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Policy {
    /// Aware selection: may probe caches with negative indications, using
    /// staleness-estimated accuracy reported by the caches.
    Fna,
    /// Oblivious selection: only positive-indication caches are candidates.
    Fno,
    /// Aware selection fed by oracle accuracy measured against true cache
    /// contents since the last advertisement.
    FnaStar,
    /// Perfect information: probe the cheapest cache that truly holds the
    /// item, or nothing.
    Pif,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Fna => "fna",
            Policy::Fno => "fno",
            Policy::FnaStar => "fna_star",
            Policy::Pif => "pif",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fna" => Ok(Policy::Fna),
            "fno" => Ok(Policy::Fno),
            "fna_star" => Ok(Policy::FnaStar),
            "pif" => Ok(Policy::Pif),
            other => Err(Error::InvalidArgument(format!(
                "unknown policy '{other}' (expected fna, fno, fna_star, or pif)"
            ))),
        }
    }
}

/// Full description of one simulation run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub num_caches: usize,
    /// Capacity of each cache, in items.
    pub cache_capacities: Vec<usize>,
    /// Access cost of each cache; the cheapest should be 1.
    pub access_costs: Vec<f64>,
    pub miss_penalty: f64,
    /// Indicator bits per cached element.
    pub bpe: f64,
    /// Insertions between advertisements; `None` means one tenth of each
    /// cache's capacity.
    pub update_interval: Option<u64>,
    /// Insertions between staleness-based accuracy re-estimations.
    pub accuracy_cadence: u64,
    /// Requests per positive-rate estimation epoch.
    pub ewma_horizon: u32,
    /// Weight of the newest epoch in the moving average.
    pub ewma_delta: f64,
    pub policy: Policy,
    pub seed: u64,
    pub workload: WorkloadSpec,
    /// Requests excluded from the ledger at the start of the run.
    pub warmup: u64,
}

impl RunConfig {
    /// The reference setup: three caches of 10K items with access costs
    /// 1, 2, 3, miss penalty 100, 14 bits per element, advertisements every
    /// 0.1 * capacity insertions, accuracy re-estimation every 50
    /// insertions, and a 100-request estimation horizon with delta 0.25.
    pub fn baseline(policy: Policy, workload: WorkloadSpec) -> Self {
        Self {
            num_caches: 3,
            cache_capacities: vec![10_000; 3],
            access_costs: vec![1.0, 2.0, 3.0],
            miss_penalty: 100.0,
            bpe: 14.0,
            update_interval: None,
            accuracy_cadence: 50,
            ewma_horizon: 100,
            ewma_delta: 0.25,
            policy,
            seed: 1,
            workload,
            warmup: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_caches == 0 {
            return Err(Error::InvalidArgument("num_caches must be >= 1".into()));
        }
        if self.cache_capacities.len() != self.num_caches {
            return Err(Error::InvalidArgument(format!(
                "cache_capacities has {} entries for {} caches",
                self.cache_capacities.len(),
                self.num_caches
            )));
        }
        if self.access_costs.len() != self.num_caches {
            return Err(Error::InvalidArgument(format!(
                "access_costs has {} entries for {} caches",
                self.access_costs.len(),
                self.num_caches
            )));
        }
        if self.cache_capacities.iter().any(|&c| c == 0) {
            return Err(Error::InvalidArgument(
                "cache_capacities entries must be >= 1".into(),
            ));
        }
        if self.access_costs.iter().any(|&c| !(c >= 1.0)) {
            return Err(Error::InvalidArgument(
                "access_costs entries must be >= 1".into(),
            ));
        }
        if !(self.miss_penalty >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "miss_penalty must be >= 1, got {}",
                self.miss_penalty
            )));
        }
        if !(self.bpe > 0.0) {
            return Err(Error::InvalidArgument("bpe must be > 0".into()));
        }
        if self.update_interval == Some(0) {
            return Err(Error::InvalidArgument("update_interval must be >= 1".into()));
        }
        if self.accuracy_cadence == 0 {
            return Err(Error::InvalidArgument(
                "accuracy_cadence must be >= 1".into(),
            ));
        }
        if self.ewma_horizon == 0 {
            return Err(Error::InvalidArgument("ewma_horizon must be >= 1".into()));
        }
        if !(0.0 < self.ewma_delta && self.ewma_delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ewma_delta must be in (0,1), got {}",
                self.ewma_delta
            )));
        }
        Ok(())
    }

    /// Advertisement interval for one cache.
    pub fn interval_for(&self, cache: usize) -> u64 {
        self.update_interval
            .unwrap_or(((self.cache_capacities[cache] as f64 * 0.1).ceil() as u64).max(1))
    }

    pub fn workload_seed(&self) -> u64 {
        derive_seed(self.seed, WORKLOAD_COMPONENT)
    }
}

/// Per-run cost accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct CostLedger {
    pub requests: u64,
    pub total_access_cost: f64,
    pub miss_count: u64,
    /// Accesses to caches whose indication was negative.
    pub negative_accesses: u64,
    /// Requests during which at least one cache reported accuracy with
    /// `fpr + fnr >= 1` (its belief was clamped).
    pub insufficiently_accurate_events: u64,
    /// Requests where the realized cost undercut what perfect information
    /// would have paid on the same state. Must stay zero while every access
    /// cost is below the miss penalty.
    pub pif_floor_violations: u64,
    pub miss_penalty: f64,
    /// Digest of the consumed request stream.
    pub stream_checksum: u64,
}

impl CostLedger {
    fn new(miss_penalty: f64, stream_checksum: u64) -> Self {
        Self {
            requests: 0,
            total_access_cost: 0.0,
            miss_count: 0,
            negative_accesses: 0,
            insufficiently_accurate_events: 0,
            pif_floor_violations: 0,
            miss_penalty,
            stream_checksum,
        }
    }

    /// Mean service cost per accounted request: access costs plus the miss
    /// penalty for every miss.
    pub fn mean_cost(&self) -> f64 {
        if self.requests == 0 {
            return 0.0;
        }
        (self.total_access_cost + self.miss_penalty * self.miss_count as f64)
            / self.requests as f64
    }

    pub fn miss_rate(&self) -> f64 {
        if self.requests == 0 {
            return 0.0;
        }
        self.miss_count as f64 / self.requests as f64
    }

    pub fn negative_access_rate(&self) -> f64 {
        if self.requests == 0 {
            return 0.0;
        }
        self.negative_accesses as f64 / self.requests as f64
    }

    /// Mean cost divided by a paired perfect-information run's mean cost.
    pub fn normalized_cost(&self, pif_mean: f64) -> f64 {
        self.mean_cost() / pif_mean
    }
}

/// Oracle-side counters useful for studying indicator error rates.
#[derive(Debug, Clone, Default)]
pub struct RunDiagnostics {
    /// Requests whose item sat in its assigned cache.
    pub assigned_present: u64,
    /// Of those, requests where the stale indicator of the assigned cache
    /// answered negative.
    pub assigned_false_negative: u64,
}

impl RunDiagnostics {
    /// Empirical false-negative ratio of the assigned cache's indicator.
    pub fn empirical_fnr(&self) -> f64 {
        if self.assigned_present == 0 {
            return 0.0;
        }
        self.assigned_false_negative as f64 / self.assigned_present as f64
    }
}

/// Perfect-information selection: the cheapest cache that truly holds the
/// item, or no cache at all.
pub fn pif_decide(contains: &[bool], costs: &[f64], miss_penalty: f64) -> AccessDecision {
    let mut best: Option<usize> = None;
    for (j, &present) in contains.iter().enumerate() {
        if present && best.is_none_or(|b| costs[j] < costs[b]) {
            best = Some(j);
        }
    }
    match best {
        Some(j) => AccessDecision {
            selected: vec![j],
            predicted_cost: costs[j],
        },
        None => AccessDecision {
            selected: Vec::new(),
            predicted_cost: miss_penalty,
        },
    }
}

/// Oracle accuracy counters over requests since the last advertisement.
#[derive(Debug, Clone, Copy, Default)]
struct AwareWindow {
    positives: u64,
    false_positives: u64,
    negatives: u64,
    false_negatives: u64,
}

impl AwareWindow {
    fn observe(&mut self, indication: bool, present: bool) {
        if indication {
            self.positives += 1;
            if !present {
                self.false_positives += 1;
            }
        } else {
            self.negatives += 1;
            if present {
                self.false_negatives += 1;
            }
        }
    }

    /// Measured ratios; a side with an empty window falls back to the
    /// staleness-estimated value.
    fn accuracy(&self, fallback: IndicatorAccuracy) -> IndicatorAccuracy {
        IndicatorAccuracy {
            fpr: if self.positives > 0 {
                self.false_positives as f64 / self.positives as f64
            } else {
                fallback.fpr
            },
            fnr: if self.negatives > 0 {
                self.false_negatives as f64 / self.negatives as f64
            } else {
                fallback.fnr
            },
        }
    }

    fn reset(&mut self) {
        *self = Self::default();
    }
}

struct CacheState {
    lru: LruCache<u64>,
    cbf: CountingBloomFilter,
    advertised: BloomFilter,
    reported: IndicatorAccuracy,
    estimator: PositiveRateEstimator,
    aware: AwareWindow,
    update_interval: u64,
    insertions_since_advert: u64,
    insertions_since_estimate: u64,
}

struct CbfMirror<'a>(&'a mut CountingBloomFilter);

impl CacheEvents<u64> for CbfMirror<'_> {
    fn on_admit(&mut self, key: &u64) {
        self.0.insert(&key.to_le_bytes());
    }
    fn on_evict(&mut self, key: &u64) {
        self.0.remove(&key.to_le_bytes());
    }
}

/// Materializes the configured workload and replays it.
pub fn run_simulation(config: &RunConfig) -> Result<CostLedger> {
    let workload = Workload::from_spec(&config.workload, config.workload_seed())?;
    Ok(run_with_workload(config, &workload, None)?.0)
}

/// Replays a pre-materialized workload, optionally writing a per-request
/// event log (`request_index,key,decision_ids,access_cost,hit,charged_cost`,
/// decision ids joined by `|`).
pub fn run_with_workload(
    config: &RunConfig,
    workload: &Workload,
    mut event_log: Option<&mut dyn Write>,
) -> Result<(CostLedger, RunDiagnostics)> {
    config.validate()?;
    if workload.is_empty() {
        return Err(Error::InvalidArgument("workload is empty".into()));
    }

    let placement = PlacementPolicy::new(
        config.num_caches,
        derive_seed(config.seed, PLACEMENT_COMPONENT),
    )?;
    let filter_seed = derive_seed(config.seed, FILTER_COMPONENT);
    let mut caches = Vec::with_capacity(config.num_caches);
    for j in 0..config.num_caches {
        let params =
            FilterParams::for_capacity(config.bpe, config.cache_capacities[j] as u64, filter_seed)?;
        let cbf = CountingBloomFilter::new(params);
        // Before the first request the cache reports zero error ratios: the
        // advertised replica and the live filter are both empty. The
        // positive-rate prior is the reported false-positive ratio.
        let reported = IndicatorAccuracy { fpr: 0.0, fnr: 0.0 };
        caches.push(CacheState {
            lru: LruCache::new(config.cache_capacities[j])?,
            advertised: cbf.compress(),
            cbf,
            reported,
            estimator: PositiveRateEstimator::new(
                config.ewma_horizon,
                config.ewma_delta,
                reported.fpr,
            )?,
            aware: AwareWindow::default(),
            update_interval: config.interval_for(j),
            insertions_since_advert: 0,
            insertions_since_estimate: 0,
        });
    }

    let use_exhaustive = config.num_caches <= EXHAUSTIVE_LIMIT;
    let solver = |profiles: &[CacheProfile], p: f64| -> Result<AccessDecision> {
        if use_exhaustive {
            solve_fno_exhaustive(profiles, p)
        } else {
            Ok(solve_fno_greedy(profiles, p))
        }
    };

    let mut ledger = CostLedger::new(config.miss_penalty, workload.checksum());
    let mut diagnostics = RunDiagnostics::default();
    let mut indications = vec![false; config.num_caches];
    let mut contains = vec![false; config.num_caches];

    for (index, &key) in workload.keys.iter().enumerate() {
        let key_bytes = key.to_le_bytes();
        for (j, cache) in caches.iter_mut().enumerate() {
            indications[j] = cache.advertised.query(&key_bytes);
            contains[j] = cache.lru.contains(&key);
            cache.estimator.observe(indications[j]);
            cache.aware.observe(indications[j], contains[j]);
        }
        let assigned = placement.assign(&key_bytes);
        let accounted = index as u64 >= config.warmup;
        if accounted && contains[assigned] {
            diagnostics.assigned_present += 1;
            if !indications[assigned] {
                diagnostics.assigned_false_negative += 1;
            }
        }

        let (decision, insufficient) = match config.policy {
            Policy::Pif => (
                pif_decide(&contains, &config.access_costs, config.miss_penalty),
                0,
            ),
            Policy::Fna | Policy::FnaStar => {
                let beliefs: Vec<CacheBelief> = caches
                    .iter()
                    .enumerate()
                    .map(|(j, cache)| CacheBelief {
                        indication: indications[j],
                        positive_rate: cache.estimator.rate(),
                        accuracy: if config.policy == Policy::FnaStar {
                            cache.aware.accuracy(cache.reported)
                        } else {
                            cache.reported
                        },
                        access_cost: config.access_costs[j],
                    })
                    .collect();
                pgm_fna_decide(&beliefs, config.miss_penalty, solver)?
            }
            Policy::Fno => {
                let beliefs: Vec<CacheBelief> = caches
                    .iter()
                    .enumerate()
                    .map(|(j, cache)| CacheBelief {
                        indication: indications[j],
                        positive_rate: cache.estimator.rate(),
                        accuracy: cache.reported,
                        access_cost: config.access_costs[j],
                    })
                    .collect();
                pgm_fno_decide(&beliefs, config.miss_penalty, solver)?
            }
        };

        let access_cost: f64 = decision
            .selected
            .iter()
            .map(|&j| config.access_costs[j])
            .sum();
        let hit = decision.selected.iter().any(|&j| contains[j]);
        let charged = access_cost + if hit { 0.0 } else { config.miss_penalty };

        if accounted {
            ledger.requests += 1;
            ledger.total_access_cost += access_cost;
            ledger.negative_accesses += decision
                .selected
                .iter()
                .filter(|&&j| !indications[j])
                .count() as u64;
            if insufficient > 0 {
                ledger.insufficiently_accurate_events += 1;
            }
            if !hit {
                ledger.miss_count += 1;
            }
            // Perfect information on this exact state never pays more.
            let pif_now = pif_decide(&contains, &config.access_costs, config.miss_penalty);
            let pif_charged = pif_now.predicted_cost;
            if charged < pif_charged - 1e-9 {
                ledger.pif_floor_violations += 1;
            }
        }

        if let Some(log) = event_log.as_deref_mut() {
            let ids = decision
                .selected
                .iter()
                .map(|j| j.to_string())
                .collect::<Vec<_>>()
                .join("|");
            writeln!(
                log,
                "{},{},{},{:.6},{},{:.6}",
                index,
                workload.display_key(key),
                ids,
                access_cost,
                u8::from(hit),
                charged
            )?;
        }

        // Serviced hits refresh recency in every probed cache holding the
        // item; misses place the item in its assigned cache only.
        for &j in &decision.selected {
            if contains[j] {
                caches[j].lru.on_hit(&key)?;
            }
        }
        if !hit && !caches[assigned].lru.contains(&key) {
            let cache = &mut caches[assigned];
            cache.lru.admit_with(key, &mut CbfMirror(&mut cache.cbf))?;
            cache.insertions_since_advert += 1;
            cache.insertions_since_estimate += 1;
            if cache.insertions_since_advert >= cache.update_interval {
                cache.advertised = cache.cbf.compress();
                cache.insertions_since_advert = 0;
                cache.aware.reset();
            }
            if cache.insertions_since_estimate >= config.accuracy_cadence {
                let updated = cache.cbf.compress();
                let ds = delta_stats(&cache.advertised, &updated)?;
                let k = cache.cbf.params().num_hashes;
                cache.reported = IndicatorAccuracy {
                    fpr: estimate_fpr(&ds, k),
                    fnr: estimate_fnr(&ds, k),
                };
                cache.insertions_since_estimate = 0;
            }
        }
    }

    Ok((ledger, diagnostics))
}

/// Empirical false-negative ratio of the assigned cache's stale indicator a
/// sweep of advertisement intervals. Runs use the perfect-information
/// policy so the measured staleness reflects cache dynamics rather than
/// policy feedback.
pub fn measure_fn_ratio(base: &RunConfig, intervals: &[u64]) -> Result<Vec<(u64, f64)>> {
    let mut config = base.clone();
    config.policy = Policy::Pif;
    let workload = Workload::from_spec(&config.workload, config.workload_seed())?;
    let mut table = Vec::with_capacity(intervals.len());
    for &interval in intervals {
        if interval == 0 {
            return Err(Error::InvalidArgument("update interval must be >= 1".into()));
        }
        config.update_interval = Some(interval);
        let (_, diagnostics) = run_with_workload(&config, &workload, None)?;
        table.push((interval, diagnostics.empirical_fnr()));
    }
    Ok(table)
}
