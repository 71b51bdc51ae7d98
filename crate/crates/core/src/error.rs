use thiserror::Error;

/// Errors raised while reading or writing trace files.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: expected header `{expected}`")]
    Header { line: usize, expected: &'static str },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("record {seq}: {msg}")]
    Invalid { seq: u64, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Invalid parameters for a generator, predictor or experiment.
#[derive(Debug, Error)]
#[error("config: {0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        ConfigError(msg.into())
    }
}

/// Failures of the replay and simulation machinery.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("record {seq} arrived out of order (alloc {alloc} after {prev})")]
    OutOfOrder { seq: u64, alloc: u64, prev: u64 },
    #[error("branch {0} is not in the window")]
    NotInWindow(u64),
    #[error("re-predict fired on branch resolved after {latency} cycles (re-predict cycle {repredict})")]
    ResolvedBeforeRepredict { latency: u32, repredict: u32 },
    #[error("pc {0:#x} is not in the H2P set")]
    NotH2p(u64),
    #[error("H2P set is empty")]
    EmptyH2p,
    #[error("instruction count is zero")]
    ZeroInstructions,
}

/// Top-level error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
