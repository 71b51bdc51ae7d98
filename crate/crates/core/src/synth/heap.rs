//! Branch stream of a discrete-event message heap.
//!
//! Messages are ordered by (arrival time, priority, insertion order). The
//! scheduler inserts a batch of `heap_size` messages with random arrival
//! times and priorities, then dispatches them all, and repeats. Every comparison executes the time tests first;
//! on a time tie it checks for equal priorities (falling back to insertion
//! order) and otherwise compares the priorities. Directions depend only
//! on the random message data, and every latency is drawn independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Emitter;
use crate::error::ConfigError;
use crate::record::BranchRecord;

pub mod pcs {
    pub const UP_LOOP: u64 = 0x402000;
    pub const DOWN_LOOP: u64 = 0x402100;
    pub const HAS_RIGHT: u64 = 0x402108;
    /// Base addresses of the three comparison sites (sift-up, sibling
    /// direction, swap test). Each site has the branches below at fixed
    /// offsets.
    pub const SITE_UP: u64 = 0x402200;
    pub const SITE_DIR: u64 = 0x402300;
    pub const SITE_SWAP: u64 = 0x402400;
    pub const TIME_LT: u64 = 0x0;
    pub const TIME_GT: u64 = 0x8;
    pub const PRIO_EQ: u64 = 0x10;
    pub const ORDER: u64 = 0x18;
    pub const PRIO: u64 = 0x20;
    /// Priority comparison between sibling messages.
    pub const PRIORITY: u64 = SITE_DIR + PRIO;
}

/// Two-point latency model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyDistribution {
    pub fast: u32,
    pub slow: u32,
    pub slow_prob: f64,
}

impl Default for LatencyDistribution {
    fn default() -> Self {
        LatencyDistribution { fast: 4, slow: 25, slow_prob: 0.3 }
    }
}

impl LatencyDistribution {
    fn draw(&self, rng: &mut impl Rng) -> u32 {
        if rng.gen_bool(self.slow_prob) {
            self.slow
        } else {
            self.fast
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeapWorkloadParams {
    pub seed: u64,
    /// Messages created over the run.
    pub num_events: usize,
    /// Distinct scheduling priorities, drawn uniformly.
    pub priority_levels: u32,
    /// Messages per batch.
    pub heap_size: usize,
    /// Arrival times are drawn from 0..=time_spread.
    pub time_spread: u32,
    pub latency: LatencyDistribution,
    pub issue_spacing: u64,
}

impl Default for HeapWorkloadParams {
    fn default() -> Self {
        HeapWorkloadParams {
            seed: 1,
            num_events: 50_000,
            priority_levels: 2,
            heap_size: 64,
            time_spread: 16,
            latency: LatencyDistribution::default(),
            issue_spacing: 2,
        }
    }
}

impl HeapWorkloadParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_events == 0 {
            return Err(ConfigError::new("heap.num_events must be >= 1"));
        }
        if self.priority_levels < 2 {
            return Err(ConfigError::new("heap.priority_levels must be >= 2"));
        }
        if self.heap_size == 0 {
            return Err(ConfigError::new("heap.heap_size must be >= 1"));
        }
        let l = &self.latency;
        if l.fast == 0 || l.slow == 0 || !(0.0..=1.0).contains(&l.slow_prob) {
            return Err(ConfigError::new("heap.latency needs latencies >= 1 and slow_prob in [0, 1]"));
        }
        if self.issue_spacing == 0 {
            return Err(ConfigError::new("heap.issue_spacing must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Message {
    time: u64,
    priority: u32,
    order: u64,
}

struct Scheduler<'p> {
    params: &'p HeapWorkloadParams,
    rng: ChaCha8Rng,
    out: Emitter,
    /// 1-based heap; slot 0 unused.
    h: Vec<Message>,
    inserted: u64,
}

impl Scheduler<'_> {
    fn branch(&mut self, pc: u64, taken: bool, instrs: u32) -> bool {
        let lat = self.params.latency.draw(&mut self.rng);
        self.out.emit(pc, taken, lat, instrs);
        taken
    }

    /// `h[a] > h[b]`, evaluated the way an inlined `<=` would be.
    fn greater(&mut self, site: u64, a: usize, b: usize) -> bool {
        let (x, y) = (self.h[a], self.h[b]);
        if self.branch(site + pcs::TIME_LT, x.time < y.time, 3) {
            return false;
        }
        if self.branch(site + pcs::TIME_GT, x.time > y.time, 1) {
            return true;
        }
        if self.branch(site + pcs::PRIO_EQ, x.priority == y.priority, 3) {
            return self.branch(site + pcs::ORDER, x.order > y.order, 2);
        }
        self.branch(site + pcs::PRIO, x.priority > y.priority, 1)
    }

    fn push(&mut self, time: u64) {
        let msg = Message {
            time,
            priority: self.rng.gen_range(0..self.params.priority_levels),
            order: self.inserted,
        };
        self.inserted += 1;
        self.h.push(msg);
        let mut i = self.h.len() - 1;
        while self.branch(pcs::UP_LOOP, i > 1, 4) && self.greater(pcs::SITE_UP, i / 2, i) {
            self.h.swap(i, i / 2);
            i /= 2;
        }
    }

    fn pop(&mut self) -> Message {
        let top = self.h[1];
        let last = self.h.pop().unwrap();
        if self.h.len() > 1 {
            self.h[1] = last;
        }
        self.shiftup(1);
        top
    }

    fn shiftup(&mut self, from: usize) {
        let n = self.h.len() - 1;
        let mut i = from;
        loop {
            let j = i << 1;
            if !self.branch(pcs::DOWN_LOOP, j <= n, 5) {
                break;
            }
            let mut j = j;
            if self.branch(pcs::HAS_RIGHT, j < n, 2) && self.greater(pcs::SITE_DIR, j, j + 1) {
                j += 1;
            }
            if self.greater(pcs::SITE_SWAP, i, j) {
                self.h.swap(i, j);
                i = j;
            } else {
                break;
            }
        }
    }
}

pub fn gen_heap_workload(params: &HeapWorkloadParams) -> Result<Vec<BranchRecord>, ConfigError> {
    params.validate()?;
    let mut s = Scheduler {
        params,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        out: Emitter::new(params.issue_spacing),
        h: vec![Message { time: 0, priority: 0, order: 0 }],
        inserted: 0,
    };
    let spread = params.time_spread as u64;
    let mut created = 0;
    while created < params.num_events {
        let batch = params.heap_size.min(params.num_events - created);
        for _ in 0..batch {
            let t = s.rng.gen_range(0..=spread);
            s.push(t);
        }
        created += batch;
        while s.h.len() > 1 {
            s.pop();
        }
    }
    Ok(s.out.finish())
}
