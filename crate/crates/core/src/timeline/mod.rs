//! ROB window replay, timing vectors and cycle accounting.
//!
//! Traces only contain correct-path branches, so an override never removes
//! younger records from the replay: its effect is accounted purely through
//! the [`CostLedger`].

mod cost;
mod replay;
mod tiv;

pub use cost::{expected_tradeoff, settle_cost, CostLedger};
pub use replay::{InFlightBranch, Replay, ReplayEvent, RetiredBranch, Window};
pub use tiv::{build_tiv, classify_timing};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::record::TimingBit;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TivConfig {
    /// Timing bits per vector (the fetch prediction bit comes on top).
    pub n_tiv: usize,
    /// Fast/slow threshold for retired and older in-ROB branches.
    pub co_threshold: u32,
    /// Fast/slow threshold for younger in-ROB branches.
    pub y_threshold: u32,
    pub include_ytiv: bool,
    /// Cycles after allocation at which a still-unresolved branch is re-predicted.
    pub repredict_cycle: u32,
    /// XOR the vector onto the global history instead of prepending it.
    pub xor_ghist: bool,
    /// Bit used when fewer than `n_tiv` source branches exist.
    pub pad_policy: TimingBit,
}

impl Default for TivConfig {
    fn default() -> Self {
        TivConfig {
            n_tiv: 10,
            co_threshold: 8,
            y_threshold: 2,
            include_ytiv: false,
            repredict_cycle: 16,
            xor_ghist: false,
            pad_policy: TimingBit::Fast,
        }
    }
}

impl TivConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_tiv == 0 {
            return Err(ConfigError::new("tiv.n_tiv must be >= 1"));
        }
        if self.repredict_cycle == 0 {
            return Err(ConfigError::new("tiv.repredict_cycle must be >= 1"));
        }
        if self.include_ytiv && self.y_threshold > self.repredict_cycle {
            return Err(ConfigError::new(format!(
                "tiv.y_threshold {} exceeds tiv.repredict_cycle {}",
                self.y_threshold, self.repredict_cycle
            )));
        }
        Ok(())
    }
}
