//! Seeded stochastic oracles: an LRU cache driven by an IRM reference stream,
//! and a coupon collector.
//!
//! Draws come from an alias table over the popularity law; the generator is
//! ChaCha8 seeded from a `u64`, so a given seed reproduces bit-for-bit on any
//! platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use serde::{Deserialize, Serialize};

use crate::popularity::Popularity;
use crate::scalar::NeumaierSum;
use crate::{Error, Result};

pub const MIN_ACCESSES: usize = 1_000;
pub const MIN_TRIALS: usize = 1_000;

/// Batch count for the batch-means standard error.
pub const BATCHES: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

const NIL: usize = usize::MAX;

/// Fully associative LRU over items `0..m`, kept as an intrusive doubly
/// linked recency list: O(1) per access.
#[derive(Debug, Clone)]
pub struct LruStack {
    capacity: usize,
    len: usize,
    resident: Vec<bool>,
    prev: Vec<usize>,
    next: Vec<usize>,
    head: usize,
    tail: usize,
}

impl LruStack {
    pub fn new(items: usize, capacity: usize) -> Self {
        LruStack {
            capacity,
            len: 0,
            resident: vec![false; items],
            prev: vec![NIL; items],
            next: vec![NIL; items],
            head: NIL,
            tail: NIL,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.len == self.capacity
    }

    pub fn contains(&self, item: usize) -> bool {
        self.resident[item]
    }

    /// Most recently used item.
    pub fn mru(&self) -> Option<usize> {
        (self.head != NIL).then_some(self.head)
    }

    /// Least recently used item.
    pub fn lru(&self) -> Option<usize> {
        (self.tail != NIL).then_some(self.tail)
    }

    /// Residents from most to least recent.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let mut at = self.head;
        std::iter::from_fn(move || {
            if at == NIL {
                return None;
            }
            let item = at;
            at = self.next[at];
            Some(item)
        })
    }

    fn unlink(&mut self, item: usize) {
        let (p, n) = (self.prev[item], self.next[item]);
        if p == NIL {
            self.head = n;
        } else {
            self.next[p] = n;
        }
        if n == NIL {
            self.tail = p;
        } else {
            self.prev[n] = p;
        }
        self.prev[item] = NIL;
        self.next[item] = NIL;
    }

    fn push_front(&mut self, item: usize) {
        self.prev[item] = NIL;
        self.next[item] = self.head;
        if self.head != NIL {
            self.prev[self.head] = item;
        }
        self.head = item;
        if self.tail == NIL {
            self.tail = item;
        }
    }

    /// References `item`; returns whether it was a hit. A miss on a full
    /// cache evicts the least recently used item.
    pub fn access(&mut self, item: usize) -> bool {
        if self.resident[item] {
            if self.head != item {
                self.unlink(item);
                self.push_front(item);
            }
            return true;
        }
        if self.len == self.capacity {
            let victim = self.tail;
            self.unlink(victim);
            self.resident[victim] = false;
            self.len -= 1;
        }
        self.push_front(item);
        self.resident[item] = true;
        self.len += 1;
        false
    }
}

fn sampler(pop: &Popularity) -> Result<WeightedAliasIndex<f64>> {
    WeightedAliasIndex::new(pop.probs().to_vec())
        .map_err(|e| Error::InvalidDistribution(format!("alias table: {e}")))
}

fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<NeumaierSum>().value() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<NeumaierSum>()
        .value();
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

/// Steady-state miss fraction of an LRU cache of `capacity` slots under IRM.
///
/// The warmup runs for at least `warmup` accesses (default `10·m`) and until
/// the cache is full. The measured `accesses` are split into [`BATCHES`]
/// batches and the standard error is taken over batch means.
pub fn simulate_lru(
    pop: &Popularity,
    capacity: usize,
    warmup: Option<usize>,
    accesses: usize,
    seed: u64,
) -> Result<SimEstimate> {
    let m = pop.m();
    if capacity == 0 || capacity > m {
        return Err(Error::InvalidParameter(format!(
            "capacity {capacity} must be in 1..={m}"
        )));
    }
    if accesses < MIN_ACCESSES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_ACCESSES} accesses, got {accesses}"
        )));
    }
    let dist = sampler(pop)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache = LruStack::new(m, capacity);

    let min_warmup = warmup.unwrap_or(10 * m);
    let mut done = 0usize;
    while done < min_warmup || !cache.is_full() {
        cache.access(rng.sample(&dist));
        done += 1;
    }

    let batch_len = accesses / BATCHES;
    let batch_means: Vec<f64> = (0..BATCHES)
        .map(|_| {
            let misses = (0..batch_len)
                .filter(|_| !cache.access(rng.sample(&dist)))
                .count();
            misses as f64 / batch_len as f64
        })
        .collect();
    let (mean, std_error) = mean_and_std_error(&batch_means);
    Ok(SimEstimate {
        mean,
        std_error,
        samples: batch_len * BATCHES,
        seed,
    })
}

/// Mean number of draws until `j` distinct items have been seen, over
/// `trials` independent collections.
pub fn simulate_ccp(pop: &Popularity, j: usize, trials: usize, seed: u64) -> Result<SimEstimate> {
    let m = pop.m();
    if j == 0 || j > m {
        return Err(Error::InvalidParameter(format!(
            "collection size {j} must be in 1..={m}"
        )));
    }
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let dist = sampler(pop)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // seen[i] == trial stamp marks i as collected in the current trial
    let mut seen = vec![0u32; m];
    let draws: Vec<f64> = (1..=trials as u32)
        .map(|stamp| {
            let mut distinct = 0;
            let mut count = 0u64;
            while distinct < j {
                let item = rng.sample(&dist);
                count += 1;
                if seen[item] != stamp {
                    seen[item] = stamp;
                    distinct += 1;
                }
            }
            count as f64
        })
        .collect();
    let (mean, std_error) = mean_and_std_error(&draws);
    Ok(SimEstimate {
        mean,
        std_error,
        samples: trials,
        seed,
    })
}
