pub mod error;
pub mod harness;
pub mod record;
pub mod sbr;
pub mod synth;
pub mod tage;
pub mod timeline;
pub mod trace;

pub use error::{ConfigError, Error, Result, SimError, TraceError};
pub use record::{BranchRecord, CategoryCounts, Composition, CoreConfig, PredictionCategory, TimingBit, TimingInfoVector};
