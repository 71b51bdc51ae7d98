use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::baseline::{bmpki, cdf_points, fetch_pass, FetchOutcome};
use crate::error::{ConfigError, Result, SimError};
use crate::record::{BranchRecord, CategoryCounts, CoreConfig, PredictionCategory};
use crate::sbr::{SbrConfig, SbrDecision, SbrState};
use crate::tage::{PackedHistory, TageConfig};
use crate::timeline::{settle_cost, CostLedger, Replay, ReplayEvent};

/// Per timing-vector value statistics of one PC.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TivStats {
    pub frequency: u64,
    pub taken: u64,
    pub fetch_correct: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PcReport {
    pub instances: u64,
    pub fetch_mispredicts: u64,
    pub categories: CategoryCounts,
    /// Instances on which the SBR replaced the fetch prediction.
    pub overrides: u64,
    pub cost: CostLedger,
    pub sbr_hits: u64,
    pub sbr_hits_correct: u64,
    /// Resolution latency → fetch mispredictions.
    pub misp_latency: BTreeMap<u32, u64>,
    /// Serialized timing vector (hex) → statistics.
    pub tiv_stats: BTreeMap<String, TivStats>,
}

impl PcReport {
    /// Mispredictions left after overrides: the fetch mispredictions, minus
    /// the ones fixed, plus the ones introduced.
    pub fn effective_mispredicts(&self) -> u64 {
        self.fetch_mispredicts - self.categories.get(PredictionCategory::ConfDisaCorr)
            + self.categories.get(PredictionCategory::ConfDisaInc)
    }

    /// Signed fraction of fetch mispredictions removed; 0 without any.
    pub fn reduction(&self) -> f64 {
        if self.fetch_mispredicts == 0 {
            return 0.0;
        }
        (self.fetch_mispredicts as f64 - self.effective_mispredicts() as f64) / self.fetch_mispredicts as f64
    }

    pub fn sbr_accuracy(&self) -> Option<f64> {
        (self.sbr_hits > 0).then(|| self.sbr_hits_correct as f64 / self.sbr_hits as f64)
    }

    pub fn fetch_accuracy(&self) -> Option<f64> {
        (self.instances > 0).then(|| 1.0 - self.fetch_mispredicts as f64 / self.instances as f64)
    }

    pub fn misp_cdf(&self) -> Vec<(u32, f64)> {
        cdf_points(&self.misp_latency)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub core: CoreConfig,
    pub sbr: SbrConfig,
    /// H2P PCs only.
    pub per_pc: BTreeMap<u64, PcReport>,
    /// Instructions after warmup.
    pub total_instrs: u64,
    /// Fetch mispredictions over all PCs after warmup.
    pub fetch_mispredicts: u64,
    pub warmup_records: usize,
}

impl ExperimentReport {
    pub fn baseline_bmpki(&self) -> Result<f64, SimError> {
        bmpki(self.fetch_mispredicts, self.total_instrs)
    }

    pub fn sbr_bmpki(&self) -> Result<f64, SimError> {
        let delta: i64 = self
            .per_pc
            .values()
            .map(|p| p.effective_mispredicts() as i64 - p.fetch_mispredicts as i64)
            .sum();
        bmpki((self.fetch_mispredicts as i64 + delta) as u64, self.total_instrs)
    }

    /// Bookkeeping identities every report must satisfy.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (pc, p) in &self.per_pc {
            if p.categories.total() != p.instances {
                return Err(format!("{pc:#x}: categories sum to {} over {} instances", p.categories.total(), p.instances));
            }
            if p.overrides != p.categories.overrides() {
                return Err(format!("{pc:#x}: {} overrides but {} override categories", p.overrides, p.categories.overrides()));
            }
            let expected = p.fetch_mispredicts as i64 - p.categories.get(PredictionCategory::ConfDisaCorr) as i64
                + p.categories.get(PredictionCategory::ConfDisaInc) as i64;
            if expected < 0 || expected as u64 != p.effective_mispredicts() {
                return Err(format!("{pc:#x}: reduction identity violated"));
            }
            if p.cost.cycles_saved > 0 && p.categories.get(PredictionCategory::ConfDisaCorr) == 0 {
                return Err(format!("{pc:#x}: cycles saved without a correct override"));
            }
            let freq: u64 = p.tiv_stats.values().map(|s| s.frequency).sum();
            if freq != p.instances - p.categories.get(PredictionCategory::NotRepredicted) {
                return Err(format!("{pc:#x}: timing-vector counts do not match re-predicted instances"));
            }
        }
        Ok(())
    }
}

struct Pending {
    counted: bool,
    hist: PackedHistory,
    phist: u64,
    decision: Option<SbrDecision>,
}

/// Fetch TAGE plus SBR over `trace`.
pub fn run_sbr(trace: &[BranchRecord], core: &CoreConfig, fetch: &TageConfig, sbr: &SbrConfig) -> Result<ExperimentReport> {
    check_configs(core, sbr)?;
    let pass = fetch_pass(trace, fetch)?;
    run_sbr_with_pass(trace, &pass, core, sbr)
}

fn check_configs(core: &CoreConfig, sbr: &SbrConfig) -> Result<(), ConfigError> {
    core.validate()?;
    sbr.validate()?;
    if sbr.h2p_set.is_empty() {
        return Err(ConfigError::new("the H2P set is empty"));
    }
    Ok(())
}

/// [`run_sbr`] reusing a precomputed fetch pass over the same trace.
pub fn run_sbr_with_pass(
    trace: &[BranchRecord],
    fetch: &[FetchOutcome],
    core: &CoreConfig,
    sbr_cfg: &SbrConfig,
) -> Result<ExperimentReport> {
    check_configs(core, sbr_cfg)?;
    assert_eq!(trace.len(), fetch.len(), "fetch pass belongs to a different trace");
    let mut sbr = SbrState::new(sbr_cfg.clone())?;
    let schedule: HashMap<u64, u32> = sbr_cfg.h2p_set.iter().map(|&pc| (pc, sbr_cfg.repredict_cycle_for(pc))).collect();
    let mut replay = Replay::new(*core, sbr_cfg.tiv.clone(), schedule);
    let warm = core.warmup_records(trace.len());
    let mut report = ExperimentReport {
        core: *core,
        sbr: sbr_cfg.clone(),
        per_pc: sbr_cfg.h2p_set.iter().map(|&pc| (pc, PcReport::default())).collect(),
        total_instrs: 0,
        fetch_mispredicts: 0,
        warmup_records: warm,
    };
    let mut pending: HashMap<u64, Pending> = HashMap::new();

    for (r, f) in trace.iter().zip(fetch) {
        let events = replay.advance(*r, f.pred)?;
        handle_events(events, trace, fetch, core, &mut sbr, &mut pending, &mut report)?;

        let counted = r.seq as usize >= warm;
        let fetch_correct = f.pred == r.taken;
        if counted {
            report.total_instrs += r.instructions();
            report.fetch_mispredicts += !fetch_correct as u64;
        }
        if sbr.is_h2p(r.pc) {
            let (hist, phist) = sbr.snapshot();
            pending.insert(r.seq, Pending { counted, hist, phist, decision: None });
            if counted {
                let p = report.per_pc.get_mut(&r.pc).expect("h2p pc has a report");
                p.instances += 1;
                if !fetch_correct {
                    p.fetch_mispredicts += 1;
                    *p.misp_latency.entry(r.resolve_latency).or_default() += 1;
                }
            }
        }
        sbr.update_history_only(r.pc, r.taken);
    }
    let events = replay.finish()?;
    handle_events(events, trace, fetch, core, &mut sbr, &mut pending, &mut report)?;
    debug_assert!(pending.is_empty());
    Ok(report)
}

fn handle_events(
    events: Vec<ReplayEvent>,
    trace: &[BranchRecord],
    fetch: &[FetchOutcome],
    core: &CoreConfig,
    sbr: &mut SbrState,
    pending: &mut HashMap<u64, Pending>,
    report: &mut ExperimentReport,
) -> Result<()> {
    for ev in events {
        let seq = ev.seq();
        let r = &trace[seq as usize];
        let f = fetch[seq as usize];
        match ev {
            ReplayEvent::Repredict { tiv, .. } => {
                let p = pending.get_mut(&seq).expect("re-predicted branch is pending");
                let d = sbr.repredict(r.pc, &tiv, &p.hist, p.phist, f.pred, f.provider_accuracy)?;
                p.hist = PackedHistory::default();
                if p.counted {
                    let s = report.per_pc.get_mut(&r.pc).unwrap().tiv_stats.entry(tiv.to_hex()).or_default();
                    s.frequency += 1;
                    s.taken += r.taken as u64;
                    s.fetch_correct += (f.pred == r.taken) as u64;
                }
                p.decision = Some(d);
            }
            ReplayEvent::NotRepredicted { .. } => {
                let p = pending.remove(&seq).expect("scheduled branch is pending");
                if p.counted {
                    report.per_pc.get_mut(&r.pc).unwrap().categories.bump(PredictionCategory::NotRepredicted);
                }
            }
            ReplayEvent::Resolved { .. } => {
                let p = pending.remove(&seq).expect("resolved branch is pending");
                let d = p.decision.expect("resolution follows a re-prediction");
                let fetch_correct = f.pred == r.taken;
                if p.counted {
                    let pr = report.per_pc.get_mut(&r.pc).unwrap();
                    let cat = d.category(r.taken);
                    pr.categories.bump(cat);
                    pr.overrides += d.override_fetch as u64;
                    if d.hit {
                        pr.sbr_hits += 1;
                        pr.sbr_hits_correct += (d.sbr_dir == Some(r.taken)) as u64;
                    }
                    settle_cost(&mut pr.cost, cat, r.resolve_latency, sbr.config().repredict_cycle_for(r.pc), core.refill_penalty)?;
                }
                sbr.update(r.taken, &d, fetch_correct, f.provider_accuracy);
            }
        }
    }
    Ok(())
}
