//! Branch stream of a recursive Bentley-McIlroy quicksort.
//!
//! The sort runs for real over a random table; every structural branch of
//! the sort routine is emitted as a record. When the sort returns from its
//! recursive call and goes on to an upper partition larger than the pivot
//! threshold, the branches up to and including branch A may resolve slowly,
//! standing in for the L1D eviction of the caller's locals. Slow instances
//! of branch A are therefore always taken.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Emitter;
use crate::error::ConfigError;
use crate::record::BranchRecord;

/// Static branch addresses of the sort routine.
pub mod pcs {
    /// `n < cutoff`: go to insertion sort.
    pub const SMALL: u64 = 0x401000;
    /// Insertion sort outer loop.
    pub const INS_OUTER: u64 = 0x401010;
    /// Insertion sort inner loop (`pl > a && cmp(pl - 1, pl) > 0`).
    pub const INS_INNER: u64 = 0x401018;
    /// `n > cutoff`: sample a pivot.
    pub const MEDIAN: u64 = 0x401030;
    /// `n > pivot_threshold`: ninther pivot selection. The H2P branch.
    pub const BRANCH_A: u64 = 0x401038;
    /// Lower partition has more than one element: recurse.
    pub const RECURSE: u64 = 0x4010a0;
    /// Upper partition has more than one element: iterate.
    pub const BRANCH_B: u64 = 0x4010b0;
}

/// Instructions between a site and the previous branch.
fn instrs_before(pc: u64) -> u32 {
    match pc {
        pcs::SMALL => 6,
        pcs::INS_OUTER => 3,
        pcs::INS_INNER => 5,
        pcs::MEDIAN => 2,
        pcs::BRANCH_A => 3,
        pcs::RECURSE => 14,
        pcs::BRANCH_B => 4,
        _ => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QsortWorkloadParams {
    pub seed: u64,
    /// Elements per sorted table.
    pub table_size: usize,
    /// Number of tables sorted back to back.
    pub invocations: usize,
    /// Partitions smaller than this are insertion sorted.
    pub cutoff: usize,
    /// Partitions larger than this use the ninther pivot (branch A taken).
    pub pivot_threshold: usize,
    pub slow_latency: u32,
    pub fast_latency: u32,
    /// Probability that the branches executed after returning from the
    /// recursive call resolve slowly, given that the upper partition they
    /// go on to has more than `pivot_threshold` elements.
    pub miss_prob_given_deep_return: f64,
    /// Cycles between consecutive branch allocations.
    pub issue_spacing: u64,
    /// Extra cycles after an insertion-sort inner loop exit.
    pub refill_gap: u64,
}

impl Default for QsortWorkloadParams {
    fn default() -> Self {
        QsortWorkloadParams {
            seed: 1,
            table_size: 100_000,
            invocations: 1,
            cutoff: 7,
            pivot_threshold: 40,
            slow_latency: 25,
            fast_latency: 4,
            miss_prob_given_deep_return: 0.8,
            issue_spacing: 2,
            refill_gap: 0,
        }
    }
}

impl QsortWorkloadParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cutoff < 2 {
            return Err(ConfigError::new("qsort.cutoff must be >= 2"));
        }
        if self.pivot_threshold <= self.cutoff {
            return Err(ConfigError::new("qsort.pivot_threshold must exceed cutoff"));
        }
        if self.fast_latency < 1 || self.slow_latency <= self.fast_latency {
            return Err(ConfigError::new("qsort latencies need slow > fast >= 1"));
        }
        if !(0.0..=1.0).contains(&self.miss_prob_given_deep_return) {
            return Err(ConfigError::new("qsort.miss_prob_given_deep_return must be in [0, 1]"));
        }
        if self.table_size < 2 {
            return Err(ConfigError::new("qsort.table_size must be >= 2 (nothing to sort)"));
        }
        if self.invocations == 0 {
            return Err(ConfigError::new("qsort.invocations must be >= 1"));
        }
        if self.issue_spacing == 0 {
            return Err(ConfigError::new("qsort.issue_spacing must be >= 1"));
        }
        Ok(())
    }
}

struct Sorter<'p> {
    params: &'p QsortWorkloadParams,
    rng: ChaCha8Rng,
    out: Emitter,
    /// Set after a deep return until branch A (or the frame exit) is reached.
    slow_until_a: bool,
}

impl Sorter<'_> {
    fn branch(&mut self, pc: u64, taken: bool) -> bool {
        let lat = if self.slow_until_a { self.params.slow_latency } else { self.params.fast_latency };
        self.out.emit(pc, taken, lat, instrs_before(pc));
        if pc == pcs::BRANCH_A {
            self.slow_until_a = false;
        }
        taken
    }

    fn med3(t: &[u64], a: usize, b: usize, c: usize) -> usize {
        if t[a] < t[b] {
            if t[b] < t[c] {
                b
            } else if t[a] < t[c] {
                c
            } else {
                a
            }
        } else if t[b] > t[c] {
            b
        } else if t[a] < t[c] {
            a
        } else {
            c
        }
    }

    fn insertion(&mut self, t: &mut [u64]) {
        let n = t.len();
        let mut pm = 1;
        while self.branch(pcs::INS_OUTER, pm < n) {
            let mut pl = pm;
            while self.branch(pcs::INS_INNER, pl > 0 && t[pl - 1] > t[pl]) {
                t.swap(pl, pl - 1);
                pl -= 1;
            }
            self.out.gap(self.params.refill_gap);
            pm += 1;
        }
    }

    fn sort(&mut self, mut t: &mut [u64]) {
        let (cutoff, threshold) = (self.params.cutoff, self.params.pivot_threshold);
        loop {
            let n = t.len();
            if self.branch(pcs::SMALL, n < cutoff) {
                self.insertion(t);
                self.slow_until_a = false;
                return;
            }
            let mut pm = n / 2;
            if self.branch(pcs::MEDIAN, n > cutoff) {
                let mut pl = 0;
                let mut pn = n - 1;
                if self.branch(pcs::BRANCH_A, n > threshold) {
                    let d = n / 8;
                    pl = Self::med3(t, pl, pl + d, pl + 2 * d);
                    pm = Self::med3(t, pm - d, pm, pm + d);
                    pn = Self::med3(t, pn - 2 * d, pn - d, pn);
                }
                pm = Self::med3(t, pl, pm, pn);
            }
            self.slow_until_a = false;
            t.swap(0, pm);

            // three-way partition around t[0]; equal keys gather at both ends
            let (mut pa, mut pb) = (1usize, 1usize);
            let (mut pc, mut pd) = (n as isize - 1, n as isize - 1);
            loop {
                while pb as isize <= pc && t[pb] <= t[0] {
                    if t[pb] == t[0] {
                        t.swap(pa, pb);
                        pa += 1;
                    }
                    pb += 1;
                }
                while pb as isize <= pc && t[pc as usize] >= t[0] {
                    if t[pc as usize] == t[0] {
                        t.swap(pc as usize, pd as usize);
                        pd -= 1;
                    }
                    pc -= 1;
                }
                if pb as isize > pc {
                    break;
                }
                t.swap(pb, pc as usize);
                pb += 1;
                pc -= 1;
            }
            let r = pa.min(pb - pa);
            vecswap(t, 0, pb - r, r);
            let upper = (pd - pc) as usize;
            let r = upper.min(n - 1 - pd as usize);
            vecswap(t, pb, n - r, r);

            let lower = pb - pa;
            if self.branch(pcs::RECURSE, lower > 1) {
                self.sort(&mut t[..lower]);
                // the caller's locals were evicted while sorting the lower
                // part; only large upper parts keep enough data live to miss
                if upper > threshold {
                    let p = self.params.miss_prob_given_deep_return;
                    self.slow_until_a = self.rng.gen_bool(p);
                }
            }
            if self.branch(pcs::BRANCH_B, upper > 1) {
                t = &mut t[n - upper..];
                continue;
            }
            self.slow_until_a = false;
            return;
        }
    }
}

fn vecswap(t: &mut [u64], a: usize, b: usize, n: usize) {
    for i in 0..n {
        t.swap(a + i, b + i);
    }
}

/// Generates `invocations` sorts of fresh random tables.
pub fn gen_qsort_workload(params: &QsortWorkloadParams) -> Result<Vec<BranchRecord>, ConfigError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let tables: Vec<Vec<u64>> = (0..params.invocations)
        .map(|_| (0..params.table_size).map(|_| rng.gen_range(0..1u64 << 40)).collect())
        .collect();
    Ok(sort_tables(params, tables, rng))
}

/// Sorts the given table once. A sorted input stays sorted through every
/// partition step, so it yields perfectly balanced partitions.
pub fn gen_qsort_from_table(params: &QsortWorkloadParams, table: Vec<u64>) -> Result<Vec<BranchRecord>, ConfigError> {
    params.validate()?;
    let rng = ChaCha8Rng::seed_from_u64(params.seed);
    Ok(sort_tables(params, vec![table], rng))
}

fn sort_tables(params: &QsortWorkloadParams, tables: Vec<Vec<u64>>, rng: ChaCha8Rng) -> Vec<BranchRecord> {
    let mut sorter = Sorter { params, rng, out: Emitter::new(params.issue_spacing), slow_until_a: false };
    for mut t in tables {
        sorter.sort(&mut t);
        debug_assert!(t.windows(2).all(|w| w[0] <= w[1]));
    }
    sorter.out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a_instances(trace: &[BranchRecord]) -> Vec<&BranchRecord> {
        trace.iter().filter(|r| r.pc == pcs::BRANCH_A).collect()
    }

    #[test]
    fn tiny_table_is_insertion_only() {
        let p = QsortWorkloadParams { table_size: 4, ..Default::default() };
        let trace = gen_qsort_workload(&p).unwrap();
        assert!(a_instances(&trace).is_empty());
        assert_eq!(trace[0].pc, pcs::SMALL);
        assert!(trace[0].taken);
        assert!(trace[1..].iter().all(|r| r.pc == pcs::INS_OUTER || r.pc == pcs::INS_INNER));
    }

    #[test]
    fn rejects_bad_params() {
        for p in [
            QsortWorkloadParams { table_size: 1, ..Default::default() },
            QsortWorkloadParams { cutoff: 1, ..Default::default() },
            QsortWorkloadParams { pivot_threshold: 7, ..Default::default() },
            QsortWorkloadParams { slow_latency: 4, ..Default::default() },
            QsortWorkloadParams { miss_prob_given_deep_return: 1.5, ..Default::default() },
        ] {
            assert!(gen_qsort_workload(&p).is_err(), "{p:?}");
        }
    }

    #[test]
    fn deterministic() {
        let p = QsortWorkloadParams { table_size: 5000, ..Default::default() };
        assert_eq!(gen_qsort_workload(&p).unwrap(), gen_qsort_workload(&p).unwrap());
        let q = QsortWorkloadParams { seed: 2, ..p.clone() };
        assert_ne!(gen_qsort_workload(&p).unwrap(), gen_qsort_workload(&q).unwrap());
    }

    #[test]
    fn sorted_input_partitions_evenly() {
        let p = QsortWorkloadParams::default();
        let trace = gen_qsort_from_table(&p, (0..1024).collect()).unwrap();
        // the root partition splits 1024 into 512 + 511, so branch A is
        // taken on sizes 1024, 512, 511, 256, 255 (x2 each level) ...
        let a = a_instances(&trace);
        let taken = a.iter().filter(|r| r.taken).count();
        // partitions above 40 in a halving tree from 1024: 1 + 2 + 4 + 8 + 16
        assert_eq!(taken, 31);
    }

    #[test]
    fn slow_only_after_deep_returns() {
        let p = QsortWorkloadParams { table_size: 20_000, ..Default::default() };
        let trace = gen_qsort_workload(&p).unwrap();
        let slow: Vec<_> = trace.iter().filter(|r| r.resolve_latency == p.slow_latency).collect();
        assert!(!slow.is_empty());
        assert!(slow
            .iter()
            .all(|r| matches!(r.pc, pcs::BRANCH_B | pcs::SMALL | pcs::MEDIAN | pcs::BRANCH_A)));
        let a = a_instances(&trace);
        let slow_a: Vec<_> = a.iter().filter(|r| r.resolve_latency == p.slow_latency).collect();
        assert!(!slow_a.is_empty());
        assert!(slow_a.iter().all(|r| r.taken));
    }
}
