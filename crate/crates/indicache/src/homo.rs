//! Fully homogeneous cache selection and its closed-form cost analysis.
//!
//! When every cache shares one access cost (normalized to 1), hit ratio, and
//! indicator accuracy, choosing a subset reduces to choosing two counts:
//! `r1` caches with positive indications and `r0` with negative ones. The
//! service cost is `r0 + r1 + p * mr_neg^r0 * mr_pos^r1`. The aware policy
//! minimizes over both counts; the oblivious policy never probes negative
//! indications (`r0 = 0`).

use crate::beliefs::{self, IndicatorAccuracy};
use crate::error::{Error, Result};

/// Parameters of one homogeneous selection instance.
#[derive(Debug, Clone, Copy)]
pub struct HomoParams {
    /// Number of caches `N`.
    pub total_caches: u32,
    /// Number of positive indications for this request (`<= N`).
    pub positive_count: u32,
    /// Pr(absent | positive indication).
    pub mr_pos: f64,
    /// Pr(absent | negative indication).
    pub mr_neg: f64,
    /// Miss penalty `p >= 1` (access costs are normalized to 1).
    pub miss_penalty: f64,
}

/// How many negative- and positive-indication caches to access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessCounts {
    pub r0: u32,
    pub r1: u32,
}

/// Service cost `r0 + r1 + p * mr_neg^r0 * mr_pos^r1`.
pub fn cost_homo(counts: AccessCounts, params: &HomoParams) -> Result<f64> {
    if counts.r1 > params.positive_count {
        return Err(Error::InvalidArgument(format!(
            "r1 ({}) exceeds the positive-indication count ({})",
            counts.r1, params.positive_count
        )));
    }
    if counts.r0 > params.total_caches - params.positive_count {
        return Err(Error::InvalidArgument(format!(
            "r0 ({}) exceeds the negative-indication count ({})",
            counts.r0,
            params.total_caches - params.positive_count
        )));
    }
    Ok(eval_cost(counts.r0, counts.r1, params))
}

fn eval_cost(r0: u32, r1: u32, params: &HomoParams) -> f64 {
    f64::from(r0)
        + f64::from(r1)
        + params.miss_penalty * params.mr_neg.powi(r0 as i32) * params.mr_pos.powi(r1 as i32)
}

/// Largest `x` in `0..=limit` minimizing `f(x)`; ties go to the larger value.
fn max_argmin(limit: u32, f: impl Fn(u32) -> f64) -> u32 {
    let mut best_x = 0;
    let mut best = f(0);
    for x in 1..=limit {
        let v = f(x);
        if v <= best {
            best = v;
            best_x = x;
        }
    }
    best_x
}

/// Optimal aware counts.
///
/// First pick `r1` minimizing `r1 + p * mr_pos^r1` over the positive
/// indications; then, if the residual miss cost still exceeds one access
/// (`p * mr_pos^r1 > 1`), pick `r0` minimizing the full cost given `r1`.
/// Both picks take the largest count attaining the minimum. Optimality holds
/// whenever the system is sufficiently accurate.
pub fn ecm_fna(params: &HomoParams) -> AccessCounts {
    let r1 = max_argmin(params.positive_count, |r1| {
        f64::from(r1) + params.miss_penalty * params.mr_pos.powi(r1 as i32)
    });
    let residual = params.miss_penalty * params.mr_pos.powi(r1 as i32);
    let r0 = if residual > 1.0 {
        max_argmin(params.total_caches - params.positive_count, |r0| {
            eval_cost(r0, r1, params)
        })
    } else {
        0
    };
    AccessCounts { r0, r1 }
}

/// Oblivious counts: the same `r1` rule, but never any negative accesses.
pub fn ecm_fno(params: &HomoParams) -> AccessCounts {
    let r1 = max_argmin(params.positive_count, |r1| {
        f64::from(r1) + params.miss_penalty * params.mr_pos.powi(r1 as i32)
    });
    AccessCounts { r0: 0, r1 }
}

/// Binomial probability of exactly `j` positive indications out of `n`
/// caches when each is positive independently with probability `q`.
pub fn prob_positive_count(n: u32, q: f64, j: u32) -> f64 {
    debug_assert!(j <= n);
    let mut binom = 1.0f64;
    for i in 0..j {
        binom *= f64::from(n - i) / f64::from(i + 1);
    }
    binom * q.powi(j as i32) * (1.0 - q).powi((n - j) as i32)
}

/// Which homogeneous policy drives the closed-form expected cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomoPolicy {
    /// May access caches with negative indications.
    Aware,
    /// Only accesses caches with positive indications.
    Oblivious,
}

/// Expected service cost of a policy under the binomial mixture over the
/// positive-indication count, with `q`, `mr_pos`, `mr_neg` derived from
/// `(h, acc)` through the belief model.
pub fn expected_cost(policy: HomoPolicy, h: f64, acc: IndicatorAccuracy, n: u32, p: f64) -> f64 {
    let q = beliefs::positive_prob(h, acc).clamp(0.0, 1.0);
    let (mr_pos, mr_neg) = beliefs::exclusion_probs(h, acc);
    let mut total = 0.0;
    for j in 0..=n {
        let params = HomoParams {
            total_caches: n,
            positive_count: j,
            mr_pos,
            mr_neg,
            miss_penalty: p,
        };
        let counts = match policy {
            HomoPolicy::Aware => ecm_fna(&params),
            HomoPolicy::Oblivious => ecm_fno(&params),
        };
        total += prob_positive_count(n, q, j) * eval_cost(counts.r0, counts.r1, &params);
    }
    total
}

/// Expected service cost with a perfect indicator (no false indications):
/// `1 + (p - 1) * (1 - h)^N`.
pub fn pif_cost(h: f64, n: u32, p: f64) -> f64 {
    1.0 + (p - 1.0) * (1.0 - h).powi(n as i32)
}
