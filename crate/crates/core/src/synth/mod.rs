//! Synthetic workloads emitting traces in the core record format.

mod heap;
mod qsort;

pub use heap::{gen_heap_workload, pcs as heap_pcs, HeapWorkloadParams, LatencyDistribution};
pub use qsort::{gen_qsort_from_table, gen_qsort_workload, pcs as qsort_pcs, QsortWorkloadParams};

use crate::error::ConfigError;
use crate::record::BranchRecord;

/// Appends records with monotonically advancing allocation cycles.
#[derive(Debug)]
pub(crate) struct Emitter {
    records: Vec<BranchRecord>,
    next_alloc: u64,
    spacing: u64,
}

impl Emitter {
    pub(crate) fn new(spacing: u64) -> Self {
        Emitter { records: Vec::new(), next_alloc: spacing, spacing: spacing.max(1) }
    }

    pub(crate) fn emit(&mut self, pc: u64, taken: bool, latency: u32, instrs: u32) {
        self.records.push(BranchRecord {
            seq: self.records.len() as u64,
            pc,
            taken,
            alloc_cycle: self.next_alloc,
            resolve_latency: latency.max(1),
            instrs_since_prev: instrs,
        });
        self.next_alloc += self.spacing;
    }

    /// Delays the next allocation.
    pub(crate) fn gap(&mut self, cycles: u64) {
        self.next_alloc += cycles;
    }

    pub(crate) fn finish(self) -> Vec<BranchRecord> {
        self.records
    }
}

pub const PATTERN_PC: u64 = 0x400100;

/// Single-PC trace repeating a `T`/`N` pattern with a constant latency.
pub fn gen_pattern_workload(pattern: &str, repeats: usize, latency: u32) -> Result<Vec<BranchRecord>, ConfigError> {
    if pattern.is_empty() {
        return Err(ConfigError::new("pattern must not be empty"));
    }
    let dirs = pattern
        .chars()
        .map(|c| match c {
            'T' => Ok(true),
            'N' => Ok(false),
            other => Err(ConfigError::new(format!("pattern character `{other}` is not T or N"))),
        })
        .collect::<Result<Vec<bool>, _>>()?;
    if latency == 0 {
        return Err(ConfigError::new("latency must be >= 1"));
    }
    let mut out = Emitter::new(2);
    for _ in 0..repeats {
        for &d in &dirs {
            out.emit(PATTERN_PC, d, latency, 4);
        }
    }
    Ok(out.finish())
}
