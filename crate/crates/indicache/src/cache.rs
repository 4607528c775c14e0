//! LRU caches with admission/eviction hooks, and the controller's
//! key-to-cache placement policy.
//!
//! Hooks exist so a cache can mirror its residents into a counting Bloom
//! filter: every admission fires `on_admit` exactly once and every eviction
//! fires `on_evict` exactly once. Recency moves only on explicit hits —
//! indicator probes are client-side and must not touch cache state.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::hashing::hash64;

/// Observer for cache membership changes.
pub trait CacheEvents<K> {
    fn on_admit(&mut self, _key: &K) {}
    fn on_evict(&mut self, _key: &K) {}
}

/// No-op observer.
pub struct NoEvents;

impl<K> CacheEvents<K> for NoEvents {}

const NIL: usize = usize::MAX;

struct Node<K> {
    key: K,
    prev: usize,
    next: usize,
}

/// Fixed-capacity LRU set over opaque keys.
#[derive(Default)]
pub struct LruCache<K> {
    capacity: usize,
    map: HashMap<K, usize>,
    nodes: Vec<Node<K>>,
    head: usize, // most recently used
    tail: usize, // least recently used
    free: Vec<usize>,
}

impl<K: Hash + Eq + Clone> LruCache<K> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("cache capacity must be >= 1".into()));
        }
        Ok(Self {
            capacity,
            map: HashMap::with_capacity(capacity + 1),
            nodes: Vec::with_capacity(capacity),
            head: NIL,
            tail: NIL,
            free: Vec::new(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Membership test; does not touch recency.
    pub fn contains(&self, key: &K) -> bool {
        self.map.contains_key(key)
    }

    /// Moves a resident key to the most-recently-used position.
    pub fn on_hit(&mut self, key: &K) -> Result<()> {
        let &idx = self.map.get(key).ok_or_else(|| {
            Error::ContractViolation("on_hit for a key that is not cached".into())
        })?;
        self.unlink(idx);
        self.push_front(idx);
        Ok(())
    }

    /// Admits an absent key at MRU, evicting the LRU key when full.
    /// Returns the evicted key, if any.
    pub fn admit(&mut self, key: K) -> Result<Option<K>> {
        self.admit_with(key, &mut NoEvents)
    }

    /// [`LruCache::admit`] with membership-change hooks; `on_admit` fires for
    /// the new key, `on_evict` for the displaced one.
    pub fn admit_with<E: CacheEvents<K>>(&mut self, key: K, events: &mut E) -> Result<Option<K>> {
        if self.map.contains_key(&key) {
            return Err(Error::ContractViolation(
                "admit for a key that is already cached".into(),
            ));
        }
        let evicted = if self.map.len() == self.capacity {
            let tail = self.tail;
            let victim = self.nodes[tail].key.clone();
            self.unlink(tail);
            self.map.remove(&victim);
            self.free.push(tail);
            Some(victim)
        } else {
            None
        };

        let idx = match self.free.pop() {
            Some(slot) => {
                self.nodes[slot] = Node {
                    key: key.clone(),
                    prev: NIL,
                    next: NIL,
                };
                slot
            }
            None => {
                self.nodes.push(Node {
                    key: key.clone(),
                    prev: NIL,
                    next: NIL,
                });
                self.nodes.len() - 1
            }
        };
        self.push_front(idx);
        self.map.insert(key.clone(), idx);

        events.on_admit(&key);
        if let Some(victim) = &evicted {
            events.on_evict(victim);
        }
        Ok(evicted)
    }

    /// Keys from most to least recently used.
    pub fn keys_by_recency(&self) -> Vec<K> {
        let mut out = Vec::with_capacity(self.map.len());
        let mut cur = self.head;
        while cur != NIL {
            out.push(self.nodes[cur].key.clone());
            cur = self.nodes[cur].next;
        }
        out
    }

    fn unlink(&mut self, idx: usize) {
        let (prev, next) = (self.nodes[idx].prev, self.nodes[idx].next);
        if prev != NIL {
            self.nodes[prev].next = next;
        } else if self.head == idx {
            self.head = next;
        }
        if next != NIL {
            self.nodes[next].prev = prev;
        } else if self.tail == idx {
            self.tail = prev;
        }
        self.nodes[idx].prev = NIL;
        self.nodes[idx].next = NIL;
    }

    fn push_front(&mut self, idx: usize) {
        self.nodes[idx].prev = NIL;
        self.nodes[idx].next = self.head;
        if self.head != NIL {
            self.nodes[self.head].prev = idx;
        }
        self.head = idx;
        if self.tail == NIL {
            self.tail = idx;
        }
    }
}

const PLACEMENT_SALT: u64 = 0x5151_7ea3_0fc0_4b2d;

/// Deterministic key-to-cache assignment used by the controller to place a
/// missed item in exactly one cache.
#[derive(Debug, Clone, Copy)]
pub struct PlacementPolicy {
    num_caches: usize,
    seed: u64,
}

impl PlacementPolicy {
    pub fn new(num_caches: usize, seed: u64) -> Result<Self> {
        if num_caches == 0 {
            return Err(Error::InvalidArgument("num_caches must be >= 1".into()));
        }
        Ok(Self { num_caches, seed })
    }

    /// Cache index in `[0, N)`; stable for a fixed (key, seed).
    pub fn assign(&self, key: &[u8]) -> usize {
        (hash64(key, self.seed ^ PLACEMENT_SALT) % self.num_caches as u64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;
    use std::collections::VecDeque;

    #[derive(Default)]
    struct Counting {
        admits: Vec<u64>,
        evicts: Vec<u64>,
    }

    impl CacheEvents<u64> for Counting {
        fn on_admit(&mut self, key: &u64) {
            self.admits.push(*key);
        }
        fn on_evict(&mut self, key: &u64) {
            self.evicts.push(*key);
        }
    }

    #[test]
    fn contains_and_admit_basics() {
        let mut c = LruCache::new(2).unwrap();
        assert!(!c.contains(&1));
        assert_eq!(c.admit(1).unwrap(), None);
        assert!(c.contains(&1));
        assert_eq!(c.admit(2).unwrap(), None);
        assert_eq!(c.admit(3).unwrap(), Some(1));
        assert!(!c.contains(&1));
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn capacity_one_always_swaps() {
        let mut c = LruCache::new(1).unwrap();
        assert_eq!(c.admit('a').unwrap(), None);
        assert_eq!(c.admit('b').unwrap(), Some('a'));
    }

    #[test]
    fn zero_capacity_rejected() {
        assert!(LruCache::<u64>::new(0).is_err());
    }

    #[test]
    fn readmission_is_a_contract_violation() {
        let mut c = LruCache::new(4).unwrap();
        c.admit(9u64).unwrap();
        assert!(matches!(c.admit(9), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn on_hit_reorders_and_is_idempotent_at_mru() {
        let mut c = LruCache::new(2).unwrap();
        c.admit('a').unwrap();
        c.admit('b').unwrap();
        c.on_hit(&'a').unwrap();
        assert_eq!(c.keys_by_recency(), vec!['a', 'b']);
        c.on_hit(&'a').unwrap();
        c.on_hit(&'a').unwrap();
        assert_eq!(c.keys_by_recency(), vec!['a', 'b']);
        assert_eq!(c.admit('c').unwrap(), Some('b'));
        assert!(c.contains(&'a'));
    }

    #[test]
    fn on_hit_for_absent_key_errors() {
        let mut c = LruCache::<u64>::new(2).unwrap();
        assert!(matches!(c.on_hit(&5), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn contains_does_not_refresh_recency() {
        let mut c = LruCache::new(2).unwrap();
        c.admit('a').unwrap();
        c.admit('b').unwrap();
        assert!(c.contains(&'a'));
        // 'a' is still LRU despite the probe.
        assert_eq!(c.admit('c').unwrap(), Some('a'));
    }

    /// Reference model: a plain deque with linear scans.
    struct NaiveLru {
        capacity: usize,
        order: VecDeque<u64>, // front = MRU
    }

    impl NaiveLru {
        fn admit(&mut self, key: u64) -> Option<u64> {
            assert!(!self.order.contains(&key));
            let evicted = if self.order.len() == self.capacity {
                self.order.pop_back()
            } else {
                None
            };
            self.order.push_front(key);
            evicted
        }
        fn hit(&mut self, key: u64) {
            let pos = self.order.iter().position(|&k| k == key).unwrap();
            self.order.remove(pos);
            self.order.push_front(key);
        }
    }

    #[test]
    fn random_ops_match_naive_oracle() {
        for seed in 0..50u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let capacity = rng.random_range(1..=64);
            let mut lru = LruCache::new(capacity).unwrap();
            let mut naive = NaiveLru {
                capacity,
                order: VecDeque::new(),
            };
            let mut admits = 0u64;
            let mut evicts = 0u64;
            for _ in 0..10_000 {
                let key = rng.random_range(0..200u64);
                if lru.contains(&key) {
                    lru.on_hit(&key).unwrap();
                    naive.hit(key);
                } else {
                    let mut ev = Counting::default();
                    let evicted = lru.admit_with(key, &mut ev).unwrap();
                    assert_eq!(ev.admits, vec![key]);
                    admits += 1;
                    let expect = naive.admit(key);
                    assert_eq!(evicted, expect);
                    if let Some(v) = evicted {
                        assert_eq!(ev.evicts, vec![v]);
                        evicts += 1;
                    } else {
                        assert!(ev.evicts.is_empty());
                    }
                }
                assert!(lru.len() <= capacity);
                assert_eq!(admits - evicts, lru.len() as u64);
            }
            assert_eq!(lru.keys_by_recency(), Vec::from(naive.order.clone()));
        }
    }

    #[test]
    fn hooks_rebuild_cbf_to_match_final_residents() {
        use crate::bloom::{CountingBloomFilter, FilterParams};

        struct Mirror<'a>(&'a mut CountingBloomFilter);
        impl CacheEvents<u64> for Mirror<'_> {
            fn on_admit(&mut self, key: &u64) {
                self.0.insert(&key.to_le_bytes());
            }
            fn on_evict(&mut self, key: &u64) {
                self.0.remove(&key.to_le_bytes());
            }
        }

        let params = FilterParams::for_capacity(14.0, 64, 11).unwrap();
        let mut cbf = CountingBloomFilter::new(params);
        let mut lru = LruCache::new(64).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..2000 {
            let key = rng.random_range(0..400u64);
            if lru.contains(&key) {
                lru.on_hit(&key).unwrap();
            } else {
                lru.admit_with(key, &mut Mirror(&mut cbf)).unwrap();
            }
        }
        let mut rebuilt = CountingBloomFilter::new(params);
        for key in lru.keys_by_recency() {
            rebuilt.insert(&key.to_le_bytes());
        }
        assert_eq!(cbf.compress(), rebuilt.compress());
    }

    #[test]
    fn placement_is_deterministic_and_single_cache_trivial() {
        let p1 = PlacementPolicy::new(1, 7).unwrap();
        assert_eq!(p1.assign(b"anything"), 0);
        let p = PlacementPolicy::new(5, 7).unwrap();
        assert_eq!(p.assign(b"key"), p.assign(b"key"));
        assert!(PlacementPolicy::new(0, 7).is_err());
    }

    #[test]
    fn placement_shares_are_uniform() {
        let p = PlacementPolicy::new(3, 99).unwrap();
        let mut counts = [0u64; 3];
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let n = 1_000_000u64;
        for _ in 0..n {
            let key: u64 = rng.random();
            counts[p.assign(&key.to_le_bytes())] += 1;
        }
        for c in counts {
            let share = c as f64 / n as f64;
            assert!((share - 1.0 / 3.0).abs() < 0.01 / 3.0, "share {share}");
        }
    }
}
