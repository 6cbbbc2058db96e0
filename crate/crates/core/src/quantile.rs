//! Exact and empirical lower quantiles of the gain distribution.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cdf::ln_cdf;
use crate::distribution::{NoncentralChiSquare, ReliabilityTarget};
use crate::error::{Error, Result};

/// Smallest sample count for which an empirical `epsilon`-quantile is accepted.
pub const MIN_TAIL_SAMPLES: f64 = 100.0;

/// The exact outage threshold: `x` with `P(beta <= x) = epsilon`.
///
/// Bisection in the log domain until `|F(x) - epsilon| <= 1e-12 epsilon`, or
/// until the bracket collapses to adjacent floats.
pub fn numeric_quantile(dist: &NoncentralChiSquare, target: ReliabilityTarget) -> Result<f64> {
    let ln_eps = target.ln_epsilon();
    let tol = 1e-12;
    let mut lo = 0.0;
    let mut hi = dist.mean();
    let mut grow = 0;
    while ln_cdf(dist, hi) < ln_eps {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 2000 {
            return Err(Error::IterationCap { what: "quantile bracket", cap: 2000 });
        }
    }
    for _ in 0..4000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let diff = ln_cdf(dist, mid) - ln_eps;
        if diff.abs() <= tol {
            return Ok(mid);
        }
        if diff > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::IterationCap { what: "quantile bisection", cap: 4000 })
}

/// Rank of the lower empirical `epsilon`-quantile among `n` samples, `ceil(n epsilon)`.
pub fn quantile_rank(n: u64, epsilon: f64) -> usize {
    // guard against 1000 * 0.001 landing one ulp above an integer
    let r = (n as f64 * epsilon * (1.0 - 1e-12)).ceil();
    (r as usize).max(1)
}

/// Lower empirical `epsilon`-quantile: the `ceil(n epsilon)`-th smallest sample.
///
/// Refuses to answer when fewer than 100 samples are expected below it.
pub fn empirical_quantile(samples: &[f64], target: ReliabilityTarget) -> Result<f64> {
    let n = samples.len() as u64;
    let expected = n as f64 * target.epsilon();
    if expected < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientSamples {
            have: n,
            need: (MIN_TAIL_SAMPLES / target.epsilon()).ceil() as u64,
        });
    }
    lower_order_statistic(samples, quantile_rank(n, target.epsilon()))
}

/// The `rank`-th smallest sample (1-based), without any tail-size check.
pub fn lower_order_statistic(samples: &[f64], rank: usize) -> Result<f64> {
    if rank == 0 || rank > samples.len() {
        return Err(Error::InvalidParameter(format!(
            "rank {rank} outside 1..={}",
            samples.len()
        )));
    }
    let mut v = samples.to_vec();
    let (_, x, _) = v.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(*x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Streaming tracker of the `rank` smallest values seen so far.
///
/// Memory is `O(rank)`. Merging two trackers gives the same result as feeding
/// all values into one, so chunked parallel use is deterministic.
#[derive(Debug, Clone)]
pub struct LowerOrderStatistic {
    rank: usize,
    heap: BinaryHeap<Key>,
    seen: u64,
}

impl LowerOrderStatistic {
    pub fn new(rank: usize) -> Self {
        assert!(rank > 0, "rank must be positive");
        Self { rank, heap: BinaryHeap::with_capacity(rank + 1), seen: 0 }
    }

    pub fn push(&mut self, x: f64) {
        self.seen += 1;
        if self.heap.len() < self.rank {
            self.heap.push(Key(x));
        } else if x < self.heap.peek().expect("non-empty").0 {
            self.heap.pop();
            self.heap.push(Key(x));
        }
    }

    /// Largest value that can still enter the tracked set; `+inf` until full.
    pub fn admission_bound(&self) -> f64 {
        if self.heap.len() < self.rank {
            f64::INFINITY
        } else {
            self.heap.peek().expect("non-empty").0
        }
    }

    pub fn merge(&mut self, other: Self) {
        self.seen += other.seen;
        for Key(x) in other.heap {
            if self.heap.len() < self.rank {
                self.heap.push(Key(x));
            } else if x < self.heap.peek().expect("non-empty").0 {
                self.heap.pop();
                self.heap.push(Key(x));
            }
        }
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// Counts a value that is known not to enter the tracked set.
    pub fn skip(&mut self) {
        self.seen += 1;
    }

    /// The `rank`-th smallest value, once at least `rank` values were seen.
    pub fn value(&self) -> Option<f64> {
        (self.heap.len() == self.rank).then(|| self.heap.peek().expect("non-empty").0)
    }
}
