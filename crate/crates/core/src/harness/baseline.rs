use std::collections::BTreeMap;
use std::ops::RangeBounds;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SimError};
use crate::record::{BranchRecord, CoreConfig};
use crate::sbr::{select_h2p, H2pSelection};
use crate::tage::{TageConfig, TageState};

/// What the fetch predictor said about one record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FetchOutcome {
    pub pred: bool,
    /// Tracked accuracy of the providing entry at prediction time.
    pub provider_accuracy: Option<f64>,
}

/// Runs the fetch TAGE over a trace, training in program order.
///
/// The fetch predictor never sees SBR decisions (the trace is correct-path
/// only), so one pass serves every SBR configuration.
pub fn fetch_pass(trace: &[BranchRecord], cfg: &TageConfig) -> Result<Vec<FetchOutcome>, ConfigError> {
    let mut tage = TageState::new(cfg.clone())?;
    Ok(trace
        .iter()
        .map(|r| {
            let p = tage.predict(r.pc);
            tage.update(r.pc, r.taken, &p);
            FetchOutcome { pred: p.dir, provider_accuracy: p.provider_accuracy }
        })
        .collect())
}

pub fn bmpki(mispredicts: u64, instructions: u64) -> Result<f64, SimError> {
    if instructions == 0 {
        return Err(SimError::ZeroInstructions);
    }
    Ok(1000.0 * mispredicts as f64 / instructions as f64)
}

/// Cumulative distribution of a `value → count` histogram as
/// `(value, cumulative fraction)` points; empty for an empty histogram.
pub fn cdf_points(hist: &BTreeMap<u32, u64>) -> Vec<(u32, f64)> {
    let total: u64 = hist.values().sum();
    let mut acc = 0;
    hist.iter()
        .map(|(&v, &n)| {
            acc += n;
            (v, acc as f64 / total as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PcBaseline {
    pub instances: u64,
    pub mispredicts: u64,
    /// Resolution latency → (correct, total) fetch predictions.
    pub by_latency: BTreeMap<u32, (u64, u64)>,
    /// Resolution latency → mispredictions.
    pub misp_latency: BTreeMap<u32, u64>,
}

impl PcBaseline {
    pub fn accuracy(&self) -> Option<f64> {
        (self.instances > 0).then(|| 1.0 - self.mispredicts as f64 / self.instances as f64)
    }

    /// Fetch accuracy over instances whose latency falls in `range`.
    pub fn accuracy_in(&self, range: impl RangeBounds<u32>) -> Option<f64> {
        let (c, t) = self
            .by_latency
            .range(range)
            .fold((0, 0), |(c, t), (_, &(bc, bt))| (c + bc, t + bt));
        (t > 0).then(|| c as f64 / t as f64)
    }

    pub fn misp_cdf(&self) -> Vec<(u32, f64)> {
        cdf_points(&self.misp_latency)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub per_pc: BTreeMap<u64, PcBaseline>,
    /// Instructions after warmup.
    pub total_instrs: u64,
    pub total_mispredicts: u64,
    pub warmup_records: usize,
}

impl BaselineReport {
    pub fn from_pass(trace: &[BranchRecord], fetch: &[FetchOutcome], core: &CoreConfig) -> Self {
        let warm = core.warmup_records(trace.len());
        let mut rep = BaselineReport { warmup_records: warm, ..Default::default() };
        for (r, f) in trace.iter().zip(fetch).skip(warm) {
            let correct = f.pred == r.taken;
            rep.total_instrs += r.instructions();
            let pc = rep.per_pc.entry(r.pc).or_default();
            pc.instances += 1;
            let b = pc.by_latency.entry(r.resolve_latency).or_default();
            b.1 += 1;
            if correct {
                b.0 += 1;
            } else {
                pc.mispredicts += 1;
                *pc.misp_latency.entry(r.resolve_latency).or_default() += 1;
                rep.total_mispredicts += 1;
            }
        }
        rep
    }

    pub fn bmpki(&self) -> Result<f64, SimError> {
        bmpki(self.total_mispredicts, self.total_instrs)
    }

    /// `pc → (mispredicts, instances)`.
    pub fn mispredict_stats(&self) -> BTreeMap<u64, (u64, u64)> {
        self.per_pc.iter().map(|(&pc, s)| (pc, (s.mispredicts, s.instances))).collect()
    }

    pub fn select_h2p(&self) -> Result<H2pSelection, SimError> {
        select_h2p(&self.mispredict_stats(), self.total_instrs)
    }
}

/// Fetch TAGE alone over `trace`.
pub fn run_baseline(trace: &[BranchRecord], fetch: &TageConfig, core: &CoreConfig) -> Result<BaselineReport, ConfigError> {
    core.validate()?;
    let pass = fetch_pass(trace, fetch)?;
    Ok(BaselineReport::from_pass(trace, &pass, core))
}
