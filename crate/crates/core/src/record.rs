//! Domain types shared across the simulator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// One dynamic conditional branch of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchRecord {
    /// Position in program order, contiguous from 0.
    pub seq: u64,
    /// Static branch address.
    pub pc: u64,
    pub taken: bool,
    /// Cycle the branch is allocated in the ROB.
    pub alloc_cycle: u64,
    /// Cycles from ROB allocation to resolution, always >= 1.
    pub resolve_latency: u32,
    /// Non-branch instructions committed since the previous record.
    pub instrs_since_prev: u32,
}

impl BranchRecord {
    /// Cycle at which the branch resolves.
    #[inline]
    pub fn resolved_at(&self) -> u64 {
        self.alloc_cycle + self.resolve_latency as u64
    }

    /// Instructions this record accounts for, including the branch itself.
    #[inline]
    pub fn instructions(&self) -> u64 {
        self.instrs_since_prev as u64 + 1
    }
}

/// Fast/slow classification of one branch's resolution time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimingBit {
    Fast,
    Slow,
}

impl TimingBit {
    /// History encoding: `Slow` is 1.
    #[inline]
    pub fn as_bit(self) -> bool {
        matches!(self, TimingBit::Slow)
    }
}

/// How many bits of a timing vector came from each source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    /// Bits from retired branches.
    pub commit: usize,
    /// Bits from older branches still in the ROB.
    pub older: usize,
    /// Bits from younger branches already in the ROB.
    pub younger: usize,
    /// Filler bits used when too few source branches exist.
    pub padded: usize,
}

impl Composition {
    pub fn total(&self) -> usize {
        self.commit + self.older + self.younger + self.padded
    }

    /// (commit, older, younger)
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.commit, self.older, self.younger)
    }
}

/// Timing Information Vector for a re-predicted branch.
///
/// `bits` are in chronological order: padding, then retired branches, then
/// older in-ROB branches, then younger in-ROB branches (newest last).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimingInfoVector {
    pub bits: Vec<TimingBit>,
    pub fetch_pred_bit: bool,
    pub composition: Composition,
}

impl TimingInfoVector {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Timing bits followed by the fetch prediction, oldest first.
    pub fn serialize(&self) -> Vec<bool> {
        let mut out: Vec<bool> = self.bits.iter().map(|b| b.as_bit()).collect();
        out.push(self.fetch_pred_bit);
        out
    }

    /// Serialized vector as lowercase hex, first bit most significant.
    pub fn to_hex(&self) -> String {
        let bits = self.serialize();
        let mut out = String::with_capacity(bits.len() / 4 + 3);
        out.push_str("0x");
        let pad = (4 - bits.len() % 4) % 4;
        let padded: Vec<bool> = std::iter::repeat_n(false, pad).chain(bits).collect();
        for nibble in padded.chunks(4) {
            let v = nibble.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8);
            out.push(char::from_digit(v as u32, 16).unwrap());
        }
        out
    }
}

/// Outcome class of one dynamic instance of an H2P branch.
///
/// The eight `Conf*`/`NotConf*` variants arise only on SBR TAGE hits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PredictionCategory {
    ConfAgreeCorr,
    ConfAgreeInc,
    ConfDisaCorr,
    ConfDisaInc,
    NotConfAgreeCorr,
    NotConfAgreeInc,
    NotConfDisaCorr,
    NotConfDisaInc,
    MissCorr,
    MissInc,
    NotRepredicted,
}

impl PredictionCategory {
    pub const ALL: [PredictionCategory; 11] = [
        PredictionCategory::ConfAgreeCorr,
        PredictionCategory::ConfAgreeInc,
        PredictionCategory::ConfDisaCorr,
        PredictionCategory::ConfDisaInc,
        PredictionCategory::NotConfAgreeCorr,
        PredictionCategory::NotConfAgreeInc,
        PredictionCategory::NotConfDisaCorr,
        PredictionCategory::NotConfDisaInc,
        PredictionCategory::MissCorr,
        PredictionCategory::MissInc,
        PredictionCategory::NotRepredicted,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PredictionCategory::ConfAgreeCorr => "ConfAgreeCorr",
            PredictionCategory::ConfAgreeInc => "ConfAgreeInc",
            PredictionCategory::ConfDisaCorr => "ConfDisaCorr",
            PredictionCategory::ConfDisaInc => "ConfDisaInc",
            PredictionCategory::NotConfAgreeCorr => "NotConfAgreeCorr",
            PredictionCategory::NotConfAgreeInc => "NotConfAgreeInc",
            PredictionCategory::NotConfDisaCorr => "NotConfDisaCorr",
            PredictionCategory::NotConfDisaInc => "NotConfDisaInc",
            PredictionCategory::MissCorr => "MissCorr",
            PredictionCategory::MissInc => "MissInc",
            PredictionCategory::NotRepredicted => "NotRepredicted",
        }
    }

    /// Builds the category of a re-predicted instance.
    ///
    /// `sbr_correct` refers to the SBR direction on hits and to the fetch
    /// direction on misses (the branch keeps its fetch prediction).
    pub fn classify(hit: bool, confident: bool, agree: bool, sbr_correct: bool) -> Self {
        use PredictionCategory::*;
        match (hit, confident, agree, sbr_correct) {
            (false, _, _, true) => MissCorr,
            (false, _, _, false) => MissInc,
            (true, true, true, true) => ConfAgreeCorr,
            (true, true, true, false) => ConfAgreeInc,
            (true, true, false, true) => ConfDisaCorr,
            (true, true, false, false) => ConfDisaInc,
            (true, false, true, true) => NotConfAgreeCorr,
            (true, false, true, false) => NotConfAgreeInc,
            (true, false, false, true) => NotConfDisaCorr,
            (true, false, false, false) => NotConfDisaInc,
        }
    }

    /// Whether SBR replaced the fetch prediction.
    pub fn is_override(self) -> bool {
        matches!(self, PredictionCategory::ConfDisaCorr | PredictionCategory::ConfDisaInc)
    }
}

impl fmt::Display for PredictionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-category counters indexed by [`PredictionCategory::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts(pub [u64; 11]);

impl CategoryCounts {
    pub fn bump(&mut self, c: PredictionCategory) {
        self.0[c.index()] += 1;
    }

    pub fn get(&self, c: PredictionCategory) -> u64 {
        self.0[c.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn overrides(&self) -> u64 {
        self.get(PredictionCategory::ConfDisaCorr) + self.get(PredictionCategory::ConfDisaInc)
    }
}

/// Core parameters shared by the replay window and the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoreConfig {
    /// Maximum in-flight branches kept in the window.
    pub rob_size: usize,
    /// Cycles lost refilling the pipeline after a re-steer.
    pub refill_penalty: u32,
    /// Retired branches retained for the commit vector.
    pub commit_history_depth: usize,
    /// Leading fraction of a trace that trains the predictors but is left
    /// out of every reported metric.
    pub warmup_fraction: f64,
}

impl CoreConfig {
    /// Skylake-like core with a 224-entry ROB.
    pub fn skylake() -> Self {
        CoreConfig { rob_size: 224, refill_penalty: 15, commit_history_depth: 64, warmup_fraction: 0.1 }
    }

    /// Goldencove-like core with a 512-entry ROB.
    pub fn goldencove() -> Self {
        CoreConfig { rob_size: 512, refill_penalty: 17, commit_history_depth: 64, warmup_fraction: 0.1 }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rob_size == 0 {
            return Err(ConfigError::new("core.rob_size must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(ConfigError::new("core.warmup_fraction must be in [0, 1)"));
        }
        Ok(())
    }

    /// Number of leading records excluded from metrics.
    pub fn warmup_records(&self, trace_len: usize) -> usize {
        (trace_len as f64 * self.warmup_fraction).floor() as usize
    }
}

impl Default for CoreConfig {
    fn default() -> Self {
        CoreConfig::skylake()
    }
}
