use std::collections::HashMap;
use std::hash::Hash;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use lru::LruCache;

struct Inner<K: Hash + Eq, V> {
    lru: LruCache<K, V>,
    weight: usize,
}

/// LRU cache bounded by total entry weight, with get-or-compute that runs
/// the computation at most once per key while the result stays cached.
/// A budget of zero disables retention.
pub struct BoundedCache<K: Hash + Eq, V> {
    inner: Mutex<Inner<K, V>>,
    inflight: Mutex<HashMap<K, Arc<Mutex<Option<V>>>>>,
    budget: usize,
    weigh: fn(&V) -> usize,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<K: Hash + Eq + Clone, V: Clone> BoundedCache<K, V> {
    pub fn new(budget: usize, weigh: fn(&V) -> usize) -> Self {
        BoundedCache {
            inner: Mutex::new(Inner {
                lru: LruCache::unbounded(),
                weight: 0,
            }),
            inflight: Mutex::default(),
            budget,
            weigh,
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn get(&self, key: &K) -> Option<V> {
        self.inner.lock().unwrap().lru.get(key).cloned()
    }

    pub fn insert(&self, key: K, value: V) {
        let w = (self.weigh)(&value);
        if w > self.budget {
            return;
        }
        let mut inner = self.inner.lock().unwrap();
        if let Some(old) = inner.lru.put(key, value) {
            inner.weight -= (self.weigh)(&old);
        }
        inner.weight += w;
        while inner.weight > self.budget {
            match inner.lru.pop_lru() {
                Some((_, v)) => inner.weight -= (self.weigh)(&v),
                None => break,
            }
        }
    }

    /// Returns the cached value or computes and caches it. The flag is
    /// true on a hit. Concurrent callers for one key wait for a single
    /// computation.
    pub fn get_or_try_insert<E>(&self, key: &K, compute: impl FnOnce() -> Result<V, E>) -> Result<(V, bool), E> {
        if let Some(v) = self.get(key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok((v, true));
        }
        let slot = self.inflight.lock().unwrap().entry(key.clone()).or_default().clone();
        let mut guard = slot.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(v) = guard.as_ref().cloned().or_else(|| self.get(key)) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok((v, true));
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let result = compute();
        if let Ok(v) = &result {
            self.insert(key.clone(), v.clone());
            *guard = Some(v.clone());
        }
        drop(guard);
        let mut inflight = self.inflight.lock().unwrap();
        if inflight.get(key).is_some_and(|s| Arc::ptr_eq(s, &slot)) {
            inflight.remove(key);
        }
        result.map(|v| (v, false))
    }

    pub fn weight(&self) -> usize {
        self.inner.lock().unwrap().weight
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().lru.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}
