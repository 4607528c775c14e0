//! Staleness diff between an advertised (stale) filter replica and the live
//! (updated) filter, and the error-ratio estimators derived from it.
//!
//! The estimators treat a cached item's hash positions as uniform over the
//! updated filter's set bits and an absent item's positions as uniform over
//! the whole array. The first assumption is an approximation: real miss
//! probabilities depend on the workload, and the estimator is exact only in
//! the all-new-content limit. The second holds for random absent keys, so
//! the false-positive estimate tracks measurements closely.

use crate::bloom::BloomFilter;
use crate::error::{Error, Result};

/// Bitwise comparison of a stale replica against the updated filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaStats {
    /// Set bits in the updated filter.
    pub b1: u64,
    /// Reset bits in the updated filter (`b1 + b0 == num_bits`).
    pub b0: u64,
    /// Bits set in the updated filter but reset in the stale one.
    pub d1: u64,
    /// Bits reset in the updated filter but set in the stale one.
    pub d0: u64,
    /// Total bit count.
    pub num_bits: u64,
}

/// Exact bit counts for a (stale, updated) filter pair.
///
/// Both filters must share identical parameters; the diff is a full bit scan,
/// which is cheap at the cadence the simulator re-estimates accuracy.
pub fn delta_stats(stale: &BloomFilter, updated: &BloomFilter) -> Result<DeltaStats> {
    if stale.params() != updated.params() {
        return Err(Error::InvalidArgument(
            "stale and updated filters have different parameters".into(),
        ));
    }
    let mut b1 = 0u64;
    let mut d1 = 0u64;
    let mut d0 = 0u64;
    for (&s, &u) in stale.blocks().iter().zip(updated.blocks()) {
        b1 += u64::from(u.count_ones());
        d1 += u64::from((u & !s).count_ones());
        d0 += u64::from((!u & s).count_ones());
    }
    let num_bits = updated.params().num_bits;
    // Padding bits in the last block are zero in both filters.
    Ok(DeltaStats {
        b1,
        b0: num_bits - b1,
        d1,
        d0,
        num_bits,
    })
}

/// False-negative ratio of the stale replica: `1 - ((b1 - d1) / b1)^k`.
///
/// An empty updated filter (`b1 == 0`) holds nothing, so there is nothing
/// to miss and the result is 0 by convention.
pub fn estimate_fnr(ds: &DeltaStats, k: u16) -> f64 {
    debug_assert!(k >= 1);
    if ds.b1 == 0 {
        return 0.0;
    }
    let covered = (ds.b1 - ds.d1) as f64 / ds.b1 as f64;
    1.0 - covered.powi(i32::from(k))
}

/// False-positive ratio of the stale replica for absent keys:
/// `((b1 - d1 + d0) / num_bits)^k`, i.e. the stale fill ratio to the k-th.
pub fn estimate_fpr(ds: &DeltaStats, k: u16) -> f64 {
    debug_assert!(k >= 1);
    debug_assert!(ds.num_bits > 0);
    let stale_fill = (ds.b1 - ds.d1 + ds.d0) as f64 / ds.num_bits as f64;
    stale_fill.powi(i32::from(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloom::{BloomFilter, CountingBloomFilter, FilterParams};
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn filled(params: FilterParams, keys: &[u64]) -> BloomFilter {
        let mut bf = BloomFilter::new(params);
        for k in keys {
            bf.insert(&k.to_le_bytes());
        }
        bf
    }

    #[test]
    fn identical_filters_have_zero_deltas() {
        let p = FilterParams::for_capacity(8.0, 200, 5).unwrap();
        let keys: Vec<u64> = (0..100).collect();
        let a = filled(p, &keys);
        let b = filled(p, &keys);
        let ds = delta_stats(&a, &b).unwrap();
        assert_eq!((ds.d1, ds.d0), (0, 0));
        assert_eq!(ds.b1 + ds.b0, ds.num_bits);
        assert_eq!(estimate_fnr(&ds, p.num_hashes), 0.0);
        let fresh_fill = b.fill_ratio();
        let expect_fpr = fresh_fill.powi(i32::from(p.num_hashes));
        assert!((estimate_fpr(&ds, p.num_hashes) - expect_fpr).abs() < 1e-12);
    }

    #[test]
    fn all_zero_stale_counts_every_set_bit() {
        let p = FilterParams::for_capacity(8.0, 200, 5).unwrap();
        let stale = BloomFilter::new(p);
        let updated = filled(p, &(0..150).collect::<Vec<_>>());
        let ds = delta_stats(&stale, &updated).unwrap();
        assert_eq!(ds.d1, ds.b1);
        assert_eq!(ds.d0, 0);
    }

    #[test]
    fn mismatched_params_rejected() {
        let a = BloomFilter::new(FilterParams::for_capacity(8.0, 100, 5).unwrap());
        let b = BloomFilter::new(FilterParams::for_capacity(8.0, 100, 6).unwrap());
        assert!(delta_stats(&a, &b).is_err());
    }

    #[test]
    fn block_layout_reconstruction() {
        // Lay the four block kinds out explicitly: d0 | b0-d0 | d1 | b1-d1.
        let p = FilterParams::new(40, 2, 2.0, 0).unwrap();
        let (d0, b0_rest, d1, shared) = (6u64, 10u64, 9u64, 15u64);
        assert_eq!(d0 + b0_rest + d1 + shared, 40);
        let mut stale = BloomFilter::new(p);
        let mut updated = BloomFilter::new(p);
        let mut idx = 0u64;
        for _ in 0..d0 {
            stale.set_bit(idx);
            idx += 1;
        }
        idx += b0_rest;
        for _ in 0..d1 {
            updated.set_bit(idx);
            idx += 1;
        }
        for _ in 0..shared {
            stale.set_bit(idx);
            updated.set_bit(idx);
            idx += 1;
        }
        let ds = delta_stats(&stale, &updated).unwrap();
        assert_eq!(ds.b1, d1 + shared);
        assert_eq!(ds.b0, d0 + b0_rest);
        assert_eq!(ds.d1, d1);
        assert_eq!(ds.d0, d0);
    }

    #[test]
    fn fnr_point_values() {
        let ds = |b1: u64, d1: u64| DeltaStats {
            b1,
            b0: 1000 - b1,
            d1,
            d0: 0,
            num_bits: 1000,
        };
        assert_eq!(estimate_fnr(&ds(100, 0), 10), 0.0);
        assert!((estimate_fnr(&ds(100, 50), 1) - 0.5).abs() < 1e-12);
        assert!((estimate_fnr(&ds(100, 10), 10) - (1.0 - 0.9f64.powi(10))).abs() < 1e-12);
        assert_eq!(estimate_fnr(&ds(0, 0), 4), 0.0);
    }

    #[test]
    fn fpr_point_values() {
        let ds = DeltaStats {
            b1: 500,
            b0: 500,
            d1: 500,
            d0: 0,
            num_bits: 1000,
        };
        assert_eq!(estimate_fpr(&ds, 7), 0.0);
        let all_ones = DeltaStats {
            b1: 600,
            b0: 400,
            d1: 0,
            d0: 400,
            num_bits: 1000,
        };
        assert_eq!(estimate_fpr(&all_ones, 7), 1.0);
        let mixed = DeltaStats {
            b1: 500,
            b0: 500,
            d1: 50,
            d0: 30,
            num_bits: 1000,
        };
        assert!((estimate_fpr(&mixed, 7) - 0.48f64.powi(7)).abs() < 1e-12);
    }

    #[test]
    fn fnr_monotone_in_d1_and_k() {
        for b1 in [10u64, 100, 1000] {
            let mut prev = -1.0;
            for d1 in (0..=b1).step_by((b1 / 10).max(1) as usize) {
                let ds = DeltaStats {
                    b1,
                    b0: 0,
                    d1,
                    d0: 0,
                    num_bits: b1,
                };
                let v = estimate_fnr(&ds, 5);
                assert!(v >= prev);
                prev = v;
                let mut prev_k = -1.0;
                for k in 1..=12 {
                    let vk = estimate_fnr(&ds, k);
                    assert!(vk >= prev_k - 1e-15, "b1={b1} d1={d1} k={k}");
                    prev_k = vk;
                }
            }
        }
    }

    #[test]
    fn fpr_estimate_tracks_measurement_under_churn() {
        // Replace 10% of a 1K-key cache after snapshotting; the stale
        // filter's false-positive rate on absent keys must match the
        // estimator within Monte-Carlo noise (the absent-key uniformity
        // assumption actually holds).
        let mut emp_sum = 0.0;
        let mut est_sum = 0.0;
        let mut diffs = Vec::new();
        for seed in 0..20u64 {
            let p = FilterParams::for_capacity(14.0, 1000, seed * 31 + 7).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut cbf = CountingBloomFilter::new(p);
            let keys: Vec<u64> = (0..1000u64).map(|i| seed << 32 | i).collect();
            for k in &keys {
                cbf.insert(&k.to_le_bytes());
            }
            let stale = cbf.compress();
            for k in &keys[..100] {
                cbf.remove(&k.to_le_bytes());
            }
            for i in 0..100u64 {
                cbf.insert(&(seed << 32 | 1 << 20 | i).to_le_bytes());
            }
            let updated = cbf.compress();
            let ds = delta_stats(&stale, &updated).unwrap();
            let est = estimate_fpr(&ds, p.num_hashes);
            let trials = 20_000u64;
            let mut fp = 0u64;
            for _ in 0..trials {
                let key = rng.random::<u64>() | 1 << 50;
                if stale.query(&key.to_le_bytes()) {
                    fp += 1;
                }
            }
            let emp = fp as f64 / trials as f64;
            emp_sum += emp;
            est_sum += est;
            diffs.push(emp - est);
        }
        let n = diffs.len() as f64;
        let mean_diff = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            mean_diff.abs() <= 3.0 * se.max(1e-5),
            "empirical {} vs estimate {} (se {se})",
            emp_sum / n,
            est_sum / n
        );
    }
}
