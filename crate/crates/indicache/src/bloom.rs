//! Bloom filter and counting Bloom filter primitives.
//!
//! A cache maintains a [`CountingBloomFilter`] (3-bit saturating counters) so
//! it can track removals, and periodically advertises a plain
//! [`BloomFilter`] obtained with [`CountingBloomFilter::compress`]: bit `i`
//! is set iff counter `i` is positive. Position derivation uses double
//! hashing (`g1 + i * g2 mod m`, `g2` odd), which preserves the asymptotic
//! false-positive behavior of k independent hash functions while staying
//! deterministic for a fixed seed.

use crate::error::{Error, Result};
use crate::hashing::hash64;

const G2_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Counter ceiling for the 3-bit counting filter.
pub const COUNTER_MAX: u8 = 7;

/// Sizing and hashing parameters shared by a filter and all of its replicas.
///
/// Clients and caches must agree on these (including the seed) for
/// advertised indicators to be meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    /// Total bit (or counter) count `m`.
    pub num_bits: u64,
    /// Hash function count `k`.
    pub num_hashes: u16,
    /// Bits per cached element used to size the filter.
    pub bpe: f64,
    /// Hash seed.
    pub seed: u64,
}

impl FilterParams {
    pub fn new(num_bits: u64, num_hashes: u16, bpe: f64, seed: u64) -> Result<Self> {
        if num_hashes == 0 {
            return Err(Error::InvalidArgument("num_hashes must be >= 1".into()));
        }
        if num_bits < u64::from(num_hashes) {
            return Err(Error::InvalidArgument(format!(
                "num_bits ({num_bits}) must be >= num_hashes ({num_hashes})"
            )));
        }
        if !(bpe > 0.0) {
            return Err(Error::InvalidArgument(format!("bpe must be > 0, got {bpe}")));
        }
        Ok(Self {
            num_bits,
            num_hashes,
            bpe,
            seed,
        })
    }

    /// Parameters for a cache of `capacity` slots at `bpe` bits per element:
    /// `m = ceil(bpe * capacity)` bits and the fpr-optimal hash count.
    pub fn for_capacity(bpe: f64, capacity: u64, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("capacity must be >= 1".into()));
        }
        let num_hashes = optimal_hash_count(bpe)?;
        let num_bits = ((bpe * capacity as f64).ceil() as u64).max(u64::from(num_hashes));
        Self::new(num_bits, num_hashes, bpe, seed)
    }

    /// Double-hashing positions of `key`, in hash order.
    pub fn positions(&self, key: &[u8]) -> impl Iterator<Item = u64> + '_ {
        let g1 = hash64(key, self.seed);
        let g2 = hash64(key, self.seed ^ G2_SALT) | 1;
        let m = self.num_bits;
        (0..u64::from(self.num_hashes)).map(move |i| g1.wrapping_add(i.wrapping_mul(g2)) % m)
    }
}

/// Number of hash functions minimizing the false-positive ratio for a given
/// bits-per-element budget: `max(1, round(bpe * ln 2))`.
pub fn optimal_hash_count(bpe: f64) -> Result<u16> {
    if !(bpe > 0.0) {
        return Err(Error::InvalidArgument(format!("bpe must be > 0, got {bpe}")));
    }
    let k = (bpe * std::f64::consts::LN_2).round();
    Ok((k as u16).max(1))
}

/// Plain bit-array filter: the advertised indicator form.
///
/// A fresh filter has no false negatives; querying any inserted key is
/// guaranteed positive.
#[derive(Debug, Clone, PartialEq)]
pub struct BloomFilter {
    params: FilterParams,
    blocks: Vec<u64>,
}

impl BloomFilter {
    pub fn new(params: FilterParams) -> Self {
        let words = params.num_bits.div_ceil(64) as usize;
        Self {
            params,
            blocks: vec![0; words],
        }
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn insert(&mut self, key: &[u8]) {
        let params = self.params;
        for pos in params.positions(key) {
            self.set_bit(pos);
        }
    }

    /// Positive (1) iff every hash position of `key` is set.
    pub fn query(&self, key: &[u8]) -> bool {
        self.params.positions(key).all(|pos| self.bit(pos))
    }

    pub fn bit(&self, index: u64) -> bool {
        debug_assert!(index < self.params.num_bits);
        self.blocks[(index / 64) as usize] >> (index % 64) & 1 == 1
    }

    pub(crate) fn set_bit(&mut self, index: u64) {
        self.blocks[(index / 64) as usize] |= 1 << (index % 64);
    }

    /// Number of set bits.
    pub fn count_ones(&self) -> u64 {
        self.blocks.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Fraction of set bits.
    pub fn fill_ratio(&self) -> f64 {
        self.count_ones() as f64 / self.params.num_bits as f64
    }

    pub(crate) fn blocks(&self) -> &[u64] {
        &self.blocks
    }

    /// Serializes to the advertised-indicator wire format: a header of
    /// `num_bits: u64 LE`, `num_hashes: u16 LE`, `seed: u64 LE`, then the bit
    /// array as a `u64 LE` byte-length prefix followed by packed bytes
    /// (bit `i` lives in byte `i / 8` at bit `i % 8`, LSB first).
    pub fn to_bytes(&self) -> Vec<u8> {
        let byte_len = self.params.num_bits.div_ceil(8);
        let mut out = Vec::with_capacity(26 + byte_len as usize);
        out.extend_from_slice(&self.params.num_bits.to_le_bytes());
        out.extend_from_slice(&self.params.num_hashes.to_le_bytes());
        out.extend_from_slice(&self.params.seed.to_le_bytes());
        out.extend_from_slice(&byte_len.to_le_bytes());
        for i in 0..byte_len {
            let mut byte = 0u8;
            for bit in 0..8 {
                let index = i * 8 + bit;
                if index < self.params.num_bits && self.bit(index) {
                    byte |= 1 << bit;
                }
            }
            out.push(byte);
        }
        out
    }

    /// Parses the wire format produced by [`BloomFilter::to_bytes`].
    ///
    /// The header does not carry `bpe`; the reconstructed params use the
    /// value implied by the hash count (`k / ln 2`), which only matters for
    /// display.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let take = |range: std::ops::Range<usize>| -> Result<&[u8]> {
            bytes
                .get(range)
                .ok_or_else(|| Error::Malformed("truncated header".into()))
        };
        let num_bits = u64::from_le_bytes(take(0..8)?.try_into().unwrap());
        let num_hashes = u16::from_le_bytes(take(8..10)?.try_into().unwrap());
        let seed = u64::from_le_bytes(take(10..18)?.try_into().unwrap());
        let byte_len = u64::from_le_bytes(take(18..26)?.try_into().unwrap());
        if byte_len != num_bits.div_ceil(8) {
            return Err(Error::Malformed(format!(
                "bit-array length prefix {byte_len} does not match num_bits {num_bits}"
            )));
        }
        let body = take(26..26 + byte_len as usize)?;
        let params = FilterParams::new(num_bits, num_hashes, f64::from(num_hashes) / std::f64::consts::LN_2, seed)
            .map_err(|e| Error::Malformed(e.to_string()))?;
        let mut filter = Self::new(params);
        for (i, &byte) in body.iter().enumerate() {
            for bit in 0..8 {
                let index = i as u64 * 8 + bit;
                if index < num_bits && byte >> bit & 1 == 1 {
                    filter.set_bit(index);
                }
            }
        }
        Ok(filter)
    }
}

/// Counting filter with 3-bit saturating counters (0..=7).
///
/// A counter that reaches 7 sticks there: decrementing a saturated counter
/// could undercount other residents and manufacture structural false
/// negatives, so removals skip it.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingBloomFilter {
    params: FilterParams,
    counters: Vec<u8>,
}

impl CountingBloomFilter {
    pub fn new(params: FilterParams) -> Self {
        Self {
            counters: vec![0; params.num_bits as usize],
            params,
        }
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    /// Increments the key's counters, saturating at 7.
    pub fn insert(&mut self, key: &[u8]) {
        let params = self.params;
        for pos in params.positions(key) {
            let c = &mut self.counters[pos as usize];
            if *c < COUNTER_MAX {
                *c += 1;
            }
        }
    }

    /// Decrements the key's counters; zero and saturated counters are left
    /// alone. Callers must only remove keys they previously inserted.
    pub fn remove(&mut self, key: &[u8]) {
        let params = self.params;
        for pos in params.positions(key) {
            let c = &mut self.counters[pos as usize];
            if *c > 0 && *c < COUNTER_MAX {
                *c -= 1;
            }
        }
    }

    pub fn counter(&self, index: u64) -> u8 {
        self.counters[index as usize]
    }

    /// Projects to the advertised form: bit `i` set iff counter `i` > 0.
    pub fn compress(&self) -> BloomFilter {
        let mut bf = BloomFilter::new(self.params);
        for (i, &c) in self.counters.iter().enumerate() {
            if c > 0 {
                bf.set_bit(i as u64);
            }
        }
        bf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn params(bpe: f64, capacity: u64, seed: u64) -> FilterParams {
        FilterParams::for_capacity(bpe, capacity, seed).unwrap()
    }

    #[test]
    fn optimal_hash_count_values() {
        assert_eq!(optimal_hash_count(14.0).unwrap(), 10);
        assert_eq!(optimal_hash_count(1.0).unwrap(), 1);
        assert_eq!(optimal_hash_count(8.0).unwrap(), 6);
        assert!(optimal_hash_count(0.0).is_err());
        assert!(optimal_hash_count(-3.0).is_err());
    }

    #[test]
    fn designed_fpr_at_bpe_14() {
        // bpe=14 -> k=10, designed rate 2^(-k) side of ~0.1%.
        let k = optimal_hash_count(14.0).unwrap();
        let designed = (1.0 - (-f64::from(k) / 14.0).exp()).powi(i32::from(k));
        assert!((designed - 0.001).abs() < 3e-4, "designed fpr {designed}");
    }

    #[test]
    fn positions_deterministic_and_in_range() {
        let p = params(14.0, 100, 99);
        let a: Vec<u64> = p.positions(b"alpha").collect();
        let b: Vec<u64> = p.positions(b"alpha").collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), usize::from(p.num_hashes));
        assert!(a.iter().all(|&i| i < p.num_bits));

        let single = FilterParams::new(64, 1, 1.0, 3).unwrap();
        assert_eq!(single.positions(b"x").count(), 1);
    }

    #[test]
    fn positions_uniformity_chi_square() {
        // 1e6 random keys over a small bit space; chi-square at alpha=0.01.
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let m = 256u64;
        let p = FilterParams::new(m, 4, 1.0, 2024).unwrap();
        let mut counts = vec![0u64; m as usize];
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n_keys = 250_000u64;
        for _ in 0..n_keys {
            let key: u64 = rng.random();
            for pos in p.positions(&key.to_le_bytes()) {
                counts[pos as usize] += 1;
            }
        }
        let total = n_keys * u64::from(p.num_hashes);
        let expected = total as f64 / m as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        let critical = ChiSquared::new((m - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(chi2 < critical, "chi2 {chi2} >= critical {critical}");
    }

    #[test]
    fn fresh_filter_has_no_false_negatives() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut bf = BloomFilter::new(params(8.0, 500, 5));
        let keys: Vec<u64> = (0..500).map(|_| rng.random()).collect();
        for k in &keys {
            bf.insert(&k.to_le_bytes());
        }
        for k in &keys {
            assert!(bf.query(&k.to_le_bytes()));
        }
    }

    #[test]
    fn empty_filter_answers_negative() {
        let bf = BloomFilter::new(params(14.0, 10, 1));
        assert!(!bf.query(b"anything"));
    }

    #[test]
    fn shared_bit_keeps_query_positive_until_last_remover() {
        // Craft the scenario directly on bits: insert two keys, query a third
        // whose positions include one unset bit -> negative.
        let p = FilterParams::new(16, 2, 2.0, 42).unwrap();
        let mut bf = BloomFilter::new(p);
        bf.insert(b"X");
        bf.insert(b"Y");
        assert!(bf.query(b"X"));
        assert!(bf.query(b"Y"));
        // Find a key with at least one unset position: must answer negative.
        let mut found = false;
        for i in 0u32..1000 {
            let key = i.to_le_bytes();
            if p.positions(&key).any(|pos| !bf.bit(pos)) {
                assert!(!bf.query(&key));
                found = true;
                break;
            }
        }
        assert!(found);
    }

    #[test]
    fn cbf_insert_remove_roundtrip() {
        let mut cbf = CountingBloomFilter::new(params(14.0, 100, 9));
        cbf.insert(b"x");
        assert!(cbf.compress().query(b"x"));
        cbf.remove(b"x");
        assert!(!cbf.compress().query(b"x"));
        assert!(cbf.counters.iter().all(|&c| c == 0));
    }

    #[test]
    fn cbf_double_insert_single_remove_stays_positive() {
        let mut cbf = CountingBloomFilter::new(params(14.0, 100, 9));
        cbf.insert(b"x");
        cbf.insert(b"x");
        cbf.remove(b"x");
        assert!(cbf.compress().query(b"x"));
    }

    #[test]
    fn cbf_remove_from_empty_is_noop() {
        let mut cbf = CountingBloomFilter::new(params(8.0, 50, 1));
        cbf.remove(b"ghost");
        assert!(cbf.counters.iter().all(|&c| c == 0));
    }

    #[test]
    fn cbf_counters_saturate_and_stick() {
        let mut cbf = CountingBloomFilter::new(params(4.0, 10, 1));
        for _ in 0..12 {
            cbf.insert(b"k");
        }
        for pos in cbf.params.positions(b"k") {
            assert_eq!(cbf.counter(pos), COUNTER_MAX);
        }
        for _ in 0..12 {
            cbf.remove(b"k");
        }
        // Saturated counters are never decremented.
        for pos in cbf.params.positions(b"k") {
            assert_eq!(cbf.counter(pos), COUNTER_MAX);
        }
        assert!(cbf.compress().query(b"k"));
    }

    #[test]
    fn compress_projects_positive_counters() {
        let mut cbf = CountingBloomFilter::new(FilterParams::new(4, 1, 1.0, 0).unwrap());
        cbf.counters = vec![0, 3, 1, 0];
        let bf = cbf.compress();
        let bits: Vec<bool> = (0..4).map(|i| bf.bit(i)).collect();
        assert_eq!(bits, vec![false, true, true, false]);

        let zero = CountingBloomFilter::new(FilterParams::new(4, 1, 1.0, 0).unwrap());
        assert_eq!(zero.compress().count_ones(), 0);
    }

    #[test]
    fn cbf_replay_matches_live_set_rebuild() {
        // Random insert/remove pairs; afterwards the compressed filter must
        // equal one rebuilt from only the live keys (no counter saturation at
        // this load, so the replay is exact).
        let p = params(14.0, 2000, 33);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let mut cbf = CountingBloomFilter::new(p);
        let mut live: Vec<u64> = Vec::new();
        for i in 0..1000u64 {
            let insert = live.is_empty() || rng.random_bool(0.55);
            if insert {
                let key = i * 2_654_435_761 + 1;
                cbf.insert(&key.to_le_bytes());
                live.push(key);
            } else {
                let idx = rng.random_range(0..live.len());
                let key = live.swap_remove(idx);
                cbf.remove(&key.to_le_bytes());
            }
        }
        let mut rebuilt = CountingBloomFilter::new(p);
        for key in &live {
            rebuilt.insert(&key.to_le_bytes());
        }
        assert_eq!(cbf.compress(), rebuilt.compress());
    }

    #[test]
    fn compressed_fill_near_half_at_capacity() {
        // 10K inserts into a bpe=14 filter sized for 10K: fill ~ 1 - e^(-k/bpe).
        let mut cbf = CountingBloomFilter::new(params(14.0, 10_000, 77));
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let key: u64 = rng.random();
            cbf.insert(&key.to_le_bytes());
        }
        let fill = cbf.compress().fill_ratio();
        assert!((0.45..=0.55).contains(&fill), "fill {fill}");
    }

    #[test]
    fn fill_ratio_window_across_seeds() {
        for seed in 0..20u64 {
            let mut cbf = CountingBloomFilter::new(params(8.0, 2000, seed));
            let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xabcd);
            for _ in 0..2000 {
                let key: u64 = rng.random();
                cbf.insert(&key.to_le_bytes());
            }
            let fill = cbf.compress().fill_ratio();
            assert!((0.4..=0.6).contains(&fill), "seed {seed}: fill {fill}");
        }
    }

    #[test]
    fn empirical_fpr_matches_design() {
        // n=10K keys at bpe=14, 1e6 absent probes. Tolerance combines the
        // binomial sampling error with the filter-instance fill variance.
        let p = params(14.0, 10_000, 123);
        let mut bf = BloomFilter::new(p);
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        for i in 0..10_000u64 {
            bf.insert(&(i | 1 << 40).to_le_bytes());
        }
        let k = i32::from(p.num_hashes);
        let expected = (1.0 - (-f64::from(p.num_hashes) * 10_000.0 / p.num_bits as f64).exp()).powi(k);
        let samples = 1_000_000u64;
        let mut hits = 0u64;
        for _ in 0..samples {
            let key: u64 = rng.random::<u64>() | 1 << 41;
            if bf.query(&key.to_le_bytes()) {
                hits += 1;
            }
        }
        let emp = hits as f64 / samples as f64;
        let se_sample = (expected * (1.0 - expected) / samples as f64).sqrt();
        let fill_sd = (0.25 / p.num_bits as f64).sqrt();
        let se_fill = f64::from(p.num_hashes) * expected / bf.fill_ratio() * fill_sd;
        let tol = 3.0 * (se_sample * se_sample + se_fill * se_fill).sqrt();
        assert!(
            (emp - expected).abs() <= tol,
            "empirical {emp} vs designed {expected} (tol {tol})"
        );
    }

    #[test]
    fn wire_roundtrip() {
        let mut bf = BloomFilter::new(params(14.0, 1000, 4242));
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..500 {
            let key: u64 = rng.random();
            bf.insert(&key.to_le_bytes());
        }
        let bytes = bf.to_bytes();
        let back = BloomFilter::from_bytes(&bytes).unwrap();
        assert_eq!(back.count_ones(), bf.count_ones());
        assert_eq!(back.blocks(), bf.blocks());
        assert_eq!(back.params().num_bits, bf.params().num_bits);
        assert_eq!(back.params().num_hashes, bf.params().num_hashes);
        assert_eq!(back.params().seed, bf.params().seed);

        assert!(BloomFilter::from_bytes(&bytes[..10]).is_err());
        let mut bad = bytes.clone();
        bad[18] ^= 0xff; // corrupt the length prefix
        assert!(BloomFilter::from_bytes(&bad).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(FilterParams::new(4, 5, 1.0, 0).is_err());
        assert!(FilterParams::new(4, 0, 1.0, 0).is_err());
        assert!(FilterParams::new(4, 2, 0.0, 0).is_err());
        assert!(FilterParams::for_capacity(14.0, 0, 0).is_err());
    }
}
