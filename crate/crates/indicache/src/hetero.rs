//! Heterogeneous cache selection: minimize access cost plus expected miss
//! cost over arbitrary per-cache costs and exclusion probabilities.
//!
//! The objective for a subset `D` is `sum_{j in D} c_j + p * prod_{j in D}
//! rho_j`, where `rho_j` is the cache's exclusion probability conditioned on
//! its indication. Negative indications are folded in by a reduction: treat
//! every cache as a positive-indication candidate whose exclusion is picked
//! per its actual indication, then hand the instance to any
//! oblivious-style solver. The reduction preserves costs exactly, so the
//! solver's guarantee carries over unchanged.

use crate::beliefs::{ExclusionEstimate, IndicatorAccuracy};
use crate::error::{Error, Result};

/// One cache as the solver sees it: its access cost and the exclusion
/// probability already conditioned on the indication it gave.
#[derive(Debug, Clone, Copy)]
pub struct CacheProfile {
    pub cache_id: usize,
    /// Access cost `c_j >= 1` (costs are normalized so the cheapest is 1).
    pub access_cost: f64,
    /// Pr(absent | its indication), clamped away from 0 and 1.
    pub exclusion: f64,
}

/// A chosen subset of caches with its predicted service cost.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessDecision {
    /// Selected cache ids, ascending.
    pub selected: Vec<usize>,
    /// Service cost of `selected` under the profiles it was solved on.
    pub predicted_cost: f64,
}

/// Service cost of accessing `selected`: access costs plus miss penalty
/// times the joint exclusion (empty product = 1, so the empty set costs `p`).
pub fn service_cost(selected: &[usize], profiles: &[CacheProfile], p: f64) -> Result<f64> {
    let mut access = 0.0;
    let mut exclusion = 1.0;
    for id in selected {
        let profile = profiles
            .iter()
            .find(|c| c.cache_id == *id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown cache id {id}")))?;
        access += profile.access_cost;
        exclusion *= profile.exclusion;
    }
    Ok(access + p * exclusion)
}

/// Largest instance the exhaustive solver accepts.
pub const EXHAUSTIVE_LIMIT: usize = 20;

fn mask_stats(mask: u32, profiles: &[CacheProfile], p: f64) -> (f64, f64) {
    let mut access = 0.0;
    let mut exclusion = 1.0;
    for (i, profile) in profiles.iter().enumerate() {
        if mask >> i & 1 == 1 {
            access += profile.access_cost;
            exclusion *= profile.exclusion;
        }
    }
    (access + p * exclusion, access)
}

/// For ascending id lists encoded as bitmasks, the lexicographically smaller
/// list is the one owning the smallest member of the symmetric difference.
fn lex_smaller(a: u32, b: u32) -> bool {
    let diff = a ^ b;
    if diff == 0 {
        return false;
    }
    a >> diff.trailing_zeros() & 1 == 1
}

/// Exact minimizer of the service cost by subset enumeration.
///
/// Ties break toward the smaller total access cost, then the
/// lexicographically smallest id set, so results are reproducible.
pub fn solve_fno_exhaustive(profiles: &[CacheProfile], p: f64) -> Result<AccessDecision> {
    if profiles.len() > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            count: profiles.len(),
            max: EXHAUSTIVE_LIMIT,
        });
    }
    let mut best_mask = 0u32;
    let (mut best_cost, mut best_access) = mask_stats(0, profiles, p);
    for mask in 1..(1u32 << profiles.len()) {
        let (cost, access) = mask_stats(mask, profiles, p);
        let better = cost < best_cost
            || (cost == best_cost
                && (access < best_access
                    || (access == best_access && lex_smaller(mask, best_mask))));
        if better {
            best_mask = mask;
            best_cost = cost;
            best_access = access;
        }
    }
    let selected: Vec<usize> = profiles
        .iter()
        .enumerate()
        .filter(|(i, _)| best_mask >> i & 1 == 1)
        .map(|(_, c)| c.cache_id)
        .collect();
    Ok(AccessDecision {
        predicted_cost: service_cost(&selected, profiles, p)?,
        selected,
    })
}

/// Greedy minimizer for instances too large to enumerate: repeatedly add the
/// cache with the largest positive marginal saving
/// `p * prod(rho) * (1 - rho_j) - c_j`, ties toward the cheaper cache, then
/// the lower id.
pub fn solve_fno_greedy(profiles: &[CacheProfile], p: f64) -> AccessDecision {
    let mut selected_mask = vec![false; profiles.len()];
    let mut selected = Vec::new();
    let mut access = 0.0;
    let mut exclusion = 1.0;
    loop {
        let mut best: Option<(f64, usize)> = None;
        for (i, profile) in profiles.iter().enumerate() {
            if selected_mask[i] {
                continue;
            }
            let saving = p * exclusion * (1.0 - profile.exclusion) - profile.access_cost;
            let candidate = (saving, i);
            let better = match best {
                None => true,
                Some((s, j)) => {
                    saving > s
                        || (saving == s
                            && (profile.access_cost < profiles[j].access_cost
                                || (profile.access_cost == profiles[j].access_cost
                                    && profile.cache_id < profiles[j].cache_id)))
                }
            };
            if better {
                best = Some(candidate);
            }
        }
        match best {
            Some((saving, i)) if saving > 0.0 => {
                selected_mask[i] = true;
                selected.push(profiles[i].cache_id);
                access += profiles[i].access_cost;
                exclusion *= profiles[i].exclusion;
            }
            _ => break,
        }
    }
    selected.sort_unstable();
    AccessDecision {
        predicted_cost: access + p * exclusion,
        selected,
    }
}

/// Conditions every cache's exclusion on its actual indication and solves
/// the resulting all-candidate instance with `solver`. With an exact solver
/// this minimizes the mixed-indication service cost exactly; with an
/// approximate one, its guarantee transfers.
pub fn reduce_and_solve(
    indications: &[bool],
    estimates: &[ExclusionEstimate],
    costs: &[f64],
    p: f64,
    solver: impl Fn(&[CacheProfile], f64) -> Result<AccessDecision>,
) -> Result<AccessDecision> {
    if indications.len() != estimates.len() || indications.len() != costs.len() {
        return Err(Error::InvalidArgument(
            "indications, estimates, and costs must have equal lengths".into(),
        ));
    }
    let profiles: Vec<CacheProfile> = indications
        .iter()
        .zip(estimates)
        .zip(costs)
        .enumerate()
        .map(|(id, ((&indication, est), &cost))| CacheProfile {
            cache_id: id,
            access_cost: cost,
            exclusion: est.for_indication(indication),
        })
        .collect();
    solver(&profiles, p)
}

/// Everything the client knows about one cache when a request arrives.
#[derive(Debug, Clone, Copy)]
pub struct CacheBelief {
    /// Indication read from the advertised (stale) indicator replica.
    pub indication: bool,
    /// Current positive-indication rate estimate for this cache.
    pub positive_rate: f64,
    /// Accuracy most recently reported by the cache.
    pub accuracy: IndicatorAccuracy,
    pub access_cost: f64,
}

/// Per-request aware decision: infer each cache's hit ratio from its
/// positive rate and reported accuracy, condition exclusions on the
/// indications, and delegate subset choice to `solver`.
///
/// Returns the decision and how many caches reported insufficient accuracy
/// (their beliefs were clamped rather than trusted).
pub fn pgm_fna_decide(
    beliefs: &[CacheBelief],
    p: f64,
    solver: impl Fn(&[CacheProfile], f64) -> Result<AccessDecision>,
) -> Result<(AccessDecision, u32)> {
    let mut indications = Vec::with_capacity(beliefs.len());
    let mut estimates = Vec::with_capacity(beliefs.len());
    let mut costs = Vec::with_capacity(beliefs.len());
    let mut insufficient = 0u32;
    for belief in beliefs {
        let (estimate, sufficient) =
            ExclusionEstimate::from_observations(belief.positive_rate, belief.accuracy);
        if !sufficient {
            insufficient += 1;
        }
        indications.push(belief.indication);
        estimates.push(estimate);
        costs.push(belief.access_cost);
    }
    let decision = reduce_and_solve(&indications, &estimates, &costs, p, solver)?;
    Ok((decision, insufficient))
}

/// Oblivious decision: only positive-indication caches are candidates, with
/// their positive exclusions; negative indications are taken at face value.
pub fn pgm_fno_decide(
    beliefs: &[CacheBelief],
    p: f64,
    solver: impl Fn(&[CacheProfile], f64) -> Result<AccessDecision>,
) -> Result<(AccessDecision, u32)> {
    let mut profiles = Vec::new();
    let mut insufficient = 0u32;
    for (id, belief) in beliefs.iter().enumerate() {
        let (estimate, sufficient) =
            ExclusionEstimate::from_observations(belief.positive_rate, belief.accuracy);
        if !sufficient {
            insufficient += 1;
        }
        if belief.indication {
            profiles.push(CacheProfile {
                cache_id: id,
                access_cost: belief.access_cost,
                exclusion: estimate.mr_pos,
            });
        }
    }
    let decision = solver(&profiles, p)?;
    Ok((decision, insufficient))
}
