use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baseline::fetch_pass;
use super::config::{SweepSpec, YtivMode};
use super::run::{run_sbr_with_pass, ExperimentReport};
use crate::error::{ConfigError, Result};
use crate::record::{BranchRecord, CoreConfig};
use crate::sbr::SbrConfig;
use crate::tage::TageConfig;
use crate::timeline::TivConfig;

/// Younger-vector thresholds tried with a given re-predict cycle: powers of
/// two from 2 up to the cycle itself.
pub fn ytiv_thresholds(repredict_cycle: u32) -> Vec<u32> {
    std::iter::successors(Some(2u32), |t| t.checked_mul(2)).take_while(|&t| t <= repredict_cycle).collect()
}

/// Independent PRNG seed of sweep point `index`.
pub fn config_seed(master_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Cartesian product of the sweep axes over `base`, in a fixed order:
/// re-predict cycle, younger-vector setting, older threshold, XOR mode,
/// allocation threshold.
pub fn enumerate_configs(spec: &SweepSpec, base: &SbrConfig) -> Vec<SbrConfig> {
    let mut out = Vec::new();
    for &rc in &spec.repredict_cycles {
        let mut younger: Vec<Option<u32>> = Vec::new();
        for mode in &spec.ytiv_modes {
            match mode {
                YtivMode::Excluded => younger.push(None),
                YtivMode::Included => younger.extend(ytiv_thresholds(rc).into_iter().map(Some)),
            }
        }
        for &y in &younger {
            for &co in &spec.co_thresholds {
                for &xor in &spec.xor_ghist {
                    for &alloc in &spec.alloc_accuracy_thresholds {
                        let mut cfg = base.clone();
                        cfg.tiv = TivConfig {
                            repredict_cycle: rc,
                            co_threshold: co,
                            include_ytiv: y.is_some(),
                            y_threshold: y.unwrap_or(base.tiv.y_threshold),
                            xor_ghist: xor,
                            ..base.tiv.clone()
                        };
                        cfg.alloc_accuracy_threshold = alloc;
                        cfg.sbr_tage.seed = config_seed(spec.master_seed, out.len());
                        out.push(cfg);
                    }
                }
            }
        }
    }
    out
}

/// Runs every configuration of `spec` on `trace`, in parallel. Reports come
/// back in enumeration order and do not depend on the thread count.
pub fn run_sweep(
    trace: &[BranchRecord],
    core: &CoreConfig,
    fetch: &TageConfig,
    base: &SbrConfig,
    spec: &SweepSpec,
) -> Result<Vec<ExperimentReport>> {
    let configs = enumerate_configs(spec, base);
    for c in &configs {
        c.validate()?;
    }
    let pass = fetch_pass(trace, fetch)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| ConfigError::new(format!("sweep.threads: {e}")))?;
    pool.install(|| configs.par_iter().map(|c| run_sbr_with_pass(trace, &pass, core, c)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestChoice {
    /// Index into the sweep's report list.
    pub config_index: usize,
    pub reduction: f64,
    /// Even the best configuration made things worse.
    pub negative: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BestPerPc {
    pub per_pc: BTreeMap<u64, BestChoice>,
    /// Per re-predict cycle: every PC's best reduction among the
    /// configurations using that cycle, sorted descending. Ranks do not
    /// identify PCs across cycles.
    pub curves: BTreeMap<u32, Vec<f64>>,
}

fn best_over<'a>(reports: impl Iterator<Item = (usize, &'a ExperimentReport)>) -> BTreeMap<u64, BestChoice> {
    let mut best: BTreeMap<u64, BestChoice> = BTreeMap::new();
    for (i, rep) in reports {
        for (&pc, p) in &rep.per_pc {
            let r = p.reduction();
            match best.get(&pc) {
                // strict comparison keeps the earliest config on ties
                Some(b) if b.reduction >= r => {}
                _ => {
                    best.insert(pc, BestChoice { config_index: i, reduction: r, negative: r < 0.0 });
                }
            }
        }
    }
    best
}

pub fn select_best_per_pc(reports: &[ExperimentReport]) -> BestPerPc {
    let per_pc = best_over(reports.iter().enumerate());
    let mut cycles: Vec<u32> = reports.iter().map(|r| r.sbr.tiv.repredict_cycle).collect();
    cycles.sort_unstable();
    cycles.dedup();
    let curves = cycles
        .into_iter()
        .map(|rc| {
            let best = best_over(reports.iter().enumerate().filter(|(_, r)| r.sbr.tiv.repredict_cycle == rc));
            let mut v: Vec<f64> = best.values().map(|b| b.reduction).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            (rc, v)
        })
        .collect();
    BestPerPc { per_pc, curves }
}
