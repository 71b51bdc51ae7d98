//! The overriding predictor: a bimodal-less TAGE indexed by the timing
//! vector, its override decision tree and allocation policy.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SimError};
use crate::record::{PredictionCategory, TimingInfoVector};
use crate::tage::{PackedHistory, Provider, TageConfig, TagePrediction, TageState};
use crate::timeline::TivConfig;

/// Per-PC BMPKI a static branch must exceed to be re-predicted.
pub const H2P_BMPKI_THRESHOLD: f64 = 0.045;
/// Misprediction share the selected set should cover.
pub const H2P_TARGET_COVERAGE: f64 = 0.30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbrConfig {
    pub tiv: TivConfig,
    pub sbr_tage: TageConfig,
    /// The SBR allocates on a hit only while the fetch entry's accuracy is
    /// below this.
    pub alloc_accuracy_threshold: f64,
    pub conf_min_obs: u32,
    pub conf_sbr_min: f64,
    pub conf_fetch_max: f64,
    pub h2p_set: Vec<u64>,
    /// Overrides of `tiv.repredict_cycle` for individual PCs.
    pub per_pc_repredict: BTreeMap<u64, u32>,
}

impl Default for SbrConfig {
    fn default() -> Self {
        SbrConfig {
            tiv: TivConfig::default(),
            sbr_tage: TageConfig::sbr_default(),
            alloc_accuracy_threshold: 0.99,
            conf_min_obs: 8,
            conf_sbr_min: 0.75,
            conf_fetch_max: 0.5,
            h2p_set: Vec::new(),
            per_pc_repredict: BTreeMap::new(),
        }
    }
}

impl SbrConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.tiv.validate()?;
        self.sbr_tage.validate()?;
        if self.sbr_tage.use_bimodal {
            return Err(ConfigError::new("the SBR TAGE must not use a bimodal table"));
        }
        if !(self.alloc_accuracy_threshold > 0.0 && self.alloc_accuracy_threshold <= 1.0) {
            return Err(ConfigError::new("sbr.alloc_accuracy_threshold must be in (0, 1]"));
        }
        if self.conf_min_obs == 0 {
            return Err(ConfigError::new("sbr.conf_min_obs must be >= 1"));
        }
        for (name, v) in [("conf_sbr_min", self.conf_sbr_min), ("conf_fetch_max", self.conf_fetch_max)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::new(format!("sbr.{name} must be in [0, 1]")));
            }
        }
        if let Some((pc, _)) = self.per_pc_repredict.iter().find(|(_, &rc)| rc == 0) {
            return Err(ConfigError::new(format!("sbr.per_pc_repredict for {pc:#x} must be >= 1")));
        }
        Ok(())
    }

    pub fn repredict_cycle_for(&self, pc: u64) -> u32 {
        self.per_pc_repredict.get(&pc).copied().unwrap_or(self.tiv.repredict_cycle)
    }
}

/// Outcome of a re-prediction; the Corr/Inc half of the category is only
/// known once the branch resolves.
#[derive(Debug, Clone, PartialEq)]
pub struct SbrDecision {
    pub hit: bool,
    pub agree: bool,
    pub confident: bool,
    pub override_fetch: bool,
    pub sbr_dir: Option<bool>,
    pub fetch_pred: bool,
    pred: TagePrediction,
}

impl SbrDecision {
    pub fn category(&self, taken: bool) -> PredictionCategory {
        let sbr_correct = self.sbr_dir.unwrap_or(self.fetch_pred) == taken;
        PredictionCategory::classify(self.hit, self.confident, self.agree, sbr_correct)
    }

    /// Direction the core ends up following.
    pub fn final_dir(&self) -> bool {
        if self.override_fetch {
            !self.fetch_pred
        } else {
            self.fetch_pred
        }
    }
}

/// History bits (most recent first) fed to the SBR TAGE in place of its own
/// history: the serialized vector occupies the most recent positions.
pub fn sbr_index_input(tiv: &TimingInfoVector, ghist: &[bool], xor_ghist: bool) -> Vec<bool> {
    let mut prefix = tiv.serialize();
    prefix.reverse();
    if xor_ghist {
        let mut out = ghist.to_vec();
        if out.len() < prefix.len() {
            out.resize(prefix.len(), false);
        }
        for (o, p) in out.iter_mut().zip(&prefix) {
            *o ^= *p;
        }
        out
    } else {
        prefix.extend_from_slice(ghist);
        prefix
    }
}

/// Packed equivalent of [`sbr_index_input`].
pub fn sbr_index_packed(tiv: &TimingInfoVector, ghist: &PackedHistory, xor_ghist: bool) -> PackedHistory {
    let mut prefix = tiv.serialize();
    prefix.reverse();
    if xor_ghist {
        ghist.xor_prefix(&prefix)
    } else {
        ghist.prepend(&prefix)
    }
}

#[derive(Debug, Clone)]
pub struct SbrState {
    cfg: SbrConfig,
    tage: TageState,
    h2p: HashSet<u64>,
}

impl SbrState {
    pub fn new(cfg: SbrConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let tage = TageState::new(cfg.sbr_tage.clone())?;
        let h2p = cfg.h2p_set.iter().copied().collect();
        Ok(SbrState { cfg, tage, h2p })
    }

    pub fn config(&self) -> &SbrConfig {
        &self.cfg
    }

    pub fn tage(&self) -> &TageState {
        &self.tage
    }

    pub fn is_h2p(&self, pc: u64) -> bool {
        self.h2p.contains(&pc)
    }

    /// History snapshot to hand back to [`repredict`](Self::repredict).
    pub fn snapshot(&self) -> (PackedHistory, u64) {
        let len = self.tage.lengths().last().copied().unwrap_or(0);
        (PackedHistory::from_global(self.tage.ghist(), len), self.tage.phist())
    }

    /// Every branch shifts the SBR history, H2P or not.
    pub fn update_history_only(&mut self, pc: u64, taken: bool) {
        self.tage.update_history_only(pc, taken);
    }

    /// Runs the override decision tree. `hist`/`phist` are the SBR
    /// histories as they were when the branch was fetched.
    pub fn repredict(
        &self,
        pc: u64,
        tiv: &TimingInfoVector,
        hist: &PackedHistory,
        phist: u64,
        fetch_pred: bool,
        fetch_provider_accuracy: Option<f64>,
    ) -> Result<SbrDecision, SimError> {
        if !self.is_h2p(pc) {
            return Err(SimError::NotH2p(pc));
        }
        let input = sbr_index_packed(tiv, hist, self.cfg.tiv.xor_ghist);
        let pred = self.tage.predict_with_packed(pc, &input, phist);
        debug_assert!(pred.provider != Provider::Bimodal);
        if !pred.hit() {
            return Ok(SbrDecision {
                hit: false,
                agree: false,
                confident: false,
                override_fetch: false,
                sbr_dir: None,
                fetch_pred,
                pred,
            });
        }
        let agree = pred.dir == fetch_pred;
        let confident = pred.provider_observations >= self.cfg.conf_min_obs
            && pred.provider_accuracy.is_some_and(|a| a >= self.cfg.conf_sbr_min)
            // an entry without history carries no evidence that the fetch
            // predictor is doing well
            && fetch_provider_accuracy.is_none_or(|a| a <= self.cfg.conf_fetch_max);
        Ok(SbrDecision {
            hit: true,
            agree,
            confident,
            override_fetch: confident && !agree,
            sbr_dir: Some(pred.dir),
            fetch_pred,
            pred,
        })
    }

    /// Trains the SBR entries read by `decision` once the branch resolves.
    pub fn update(&mut self, taken: bool, decision: &SbrDecision, fetch_was_correct: bool, fetch_provider_accuracy: Option<f64>) {
        let allocate = !fetch_was_correct
            && (!decision.hit || fetch_provider_accuracy.is_none_or(|a| a < self.cfg.alloc_accuracy_threshold));
        if !decision.hit && !allocate {
            return;
        }
        self.tage.train_with(taken, &decision.pred, allocate);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2pSelection {
    /// Ordered by descending mispredictions.
    pub pcs: Vec<u64>,
    /// Fraction of all mispredictions covered by `pcs`.
    pub coverage: f64,
    pub low_coverage: bool,
}

/// Picks the hard-to-predict branches from baseline statistics
/// (`pc → (mispredicts, instances)`).
pub fn select_h2p(stats: &BTreeMap<u64, (u64, u64)>, total_instrs: u64) -> Result<H2pSelection, SimError> {
    if total_instrs == 0 {
        return Err(SimError::ZeroInstructions);
    }
    let total_misp: u64 = stats.values().map(|s| s.0).sum();
    let mut chosen: Vec<(u64, u64)> = stats
        .iter()
        .filter(|(_, s)| 1000.0 * s.0 as f64 / total_instrs as f64 > H2P_BMPKI_THRESHOLD)
        .map(|(&pc, s)| (pc, s.0))
        .collect();
    chosen.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let covered: u64 = chosen.iter().map(|c| c.1).sum();
    let coverage = if total_misp == 0 { 0.0 } else { covered as f64 / total_misp as f64 };
    Ok(H2pSelection {
        pcs: chosen.into_iter().map(|c| c.0).collect(),
        coverage,
        low_coverage: coverage < H2P_TARGET_COVERAGE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{Composition, TimingBit};

    fn small_cfg(h2p: &[u64]) -> SbrConfig {
        SbrConfig {
            sbr_tage: TageConfig { table_index_bits: 10, ..TageConfig::sbr_default() },
            h2p_set: h2p.to_vec(),
            ..Default::default()
        }
    }

    fn tiv(bits: &[TimingBit], fetch: bool) -> TimingInfoVector {
        TimingInfoVector {
            bits: bits.to_vec(),
            fetch_pred_bit: fetch,
            composition: Composition { commit: bits.len(), older: 0, younger: 0, padded: 0 },
        }
    }

    #[test]
    fn index_input_prefix_and_xor() {
        use TimingBit::*;
        let t = tiv(&[Fast, Fast, Fast], false);
        let g = vec![true, false, true, true, false];
        let out = sbr_index_input(&t, &g, false);
        assert_eq!(&out[..4], &[false; 4]);
        assert_eq!(&out[4..], &g[..]);

        let t = tiv(&[Slow, Fast, Slow], true);
        let out = sbr_index_input(&t, &[false; 8], true);
        // most recent first: fetch bit, then the newest timing bit
        assert_eq!(out, vec![true, true, false, true, false, false, false, false]);

        let a = sbr_index_input(&tiv(&[Slow, Fast], true), &g, false);
        let b = sbr_index_input(&tiv(&[Slow, Fast], false), &g, false);
        assert_ne!(a, b);
        let pg = PackedHistory::from_bools(&g);
        for x in [false, true] {
            let t = tiv(&[Slow, Fast, Slow, Slow], true);
            assert_eq!(sbr_index_packed(&t, &pg, x).to_bools(), sbr_index_input(&t, &g, x));
        }
    }

    #[test]
    fn fresh_state_misses() {
        let s = SbrState::new(small_cfg(&[0x40])).unwrap();
        let d = s.repredict(0x40, &tiv(&[TimingBit::Fast; 10], true), &PackedHistory::from_bools(&[false; 640]), 0, true, Some(0.2)).unwrap();
        assert!(!d.hit && !d.override_fetch);
        assert_eq!(d.category(true), PredictionCategory::MissCorr);
        assert_eq!(d.category(false), PredictionCategory::MissInc);
        assert!(matches!(s.repredict(0x44, &tiv(&[], true), &PackedHistory::default(), 0, true, None), Err(SimError::NotH2p(0x44))));
    }

    #[test]
    fn allocation_policy() {
        let t = tiv(&[TimingBit::Slow; 10], true);
        let hist = PackedHistory::from_bools(&[false; 640]);
        let mut s = SbrState::new(small_cfg(&[0x40])).unwrap();
        let before = s.tage().tables().to_vec();
        // fetch correct, SBR miss: nothing happens
        let d = s.repredict(0x40, &t, &hist, 0, true, Some(0.3)).unwrap();
        s.update(true, &d, true, Some(0.3));
        assert_eq!(s.tage().tables(), &before[..]);
        // fetch wrong, SBR miss: one allocation
        s.update(false, &d, false, Some(0.3));
        let valid: usize = s.tage().tables().iter().flatten().filter(|e| e.valid).count();
        assert_eq!(valid, 1);
        // now a hit; a fetch entry that is doing well blocks allocation
        let d = s.repredict(0x40, &t, &hist, 0, true, Some(0.95)).unwrap();
        assert!(d.hit);
        let mut s2 = s.clone();
        s2.cfg.alloc_accuracy_threshold = 0.80;
        s2.update(true, &d, false, Some(0.95));
        let valid: usize = s2.tage().tables().iter().flatten().filter(|e| e.valid).count();
        assert_eq!(valid, 1);
    }

    #[test]
    fn override_needs_confidence() {
        let t = tiv(&[TimingBit::Slow; 10], false);
        let hist = PackedHistory::from_bools(&[false; 640]);
        let mut s = SbrState::new(small_cfg(&[0x40])).unwrap();
        let d = s.repredict(0x40, &t, &hist, 0, false, Some(0.3)).unwrap();
        s.update(true, &d, false, Some(0.3));
        // build up 18 correct out of 20 observations of "taken"
        for i in 0..20 {
            let d = s.repredict(0x40, &t, &hist, 0, false, Some(0.3)).unwrap();
            assert!(d.hit);
            s.update(i >= 2, &d, false, Some(0.3));
        }
        let d = s.repredict(0x40, &t, &hist, 0, false, Some(0.3)).unwrap();
        assert!(d.hit && !d.agree && d.confident && d.override_fetch);
        assert_eq!(d.sbr_dir, Some(true));
        assert_eq!(d.category(true), PredictionCategory::ConfDisaCorr);
        assert!(d.final_dir());
        // the same entry agreeing with fetch never overrides
        let d = s.repredict(0x40, &t, &hist, 0, true, Some(0.3)).unwrap();
        assert!(d.agree && !d.override_fetch);
        // a fetch entry that is mostly right vetoes the override
        let d = s.repredict(0x40, &t, &hist, 0, false, Some(0.6)).unwrap();
        assert!(!d.confident && !d.override_fetch);
    }

    #[test]
    fn h2p_selection() {
        let mut stats = BTreeMap::new();
        stats.insert(0x10, (46, 100));
        stats.insert(0x20, (45, 100));
        let sel = select_h2p(&stats, 1_000_000).unwrap();
        assert_eq!(sel.pcs, vec![0x10]);

        let sel = select_h2p(&BTreeMap::from([(0x10, (1, 10))]), 1_000_000).unwrap();
        assert!(sel.pcs.is_empty() && sel.coverage == 0.0 && sel.low_coverage);

        let stats = BTreeMap::from([(0x10, (300, 1000)), (0x20, (600, 1000)), (0x30, (100, 1000))]);
        let sel = select_h2p(&stats, 10_000).unwrap();
        assert_eq!(sel.pcs, vec![0x20, 0x10, 0x30]);
        // 0x30 drops to 0.033 BMPKI
        let sel = select_h2p(&stats, 3_000_000).unwrap();
        assert_eq!(sel.pcs, vec![0x20, 0x10]);
        assert!((sel.coverage - 0.9).abs() < 1e-12);
        assert!(select_h2p(&stats, 0).is_err());
    }
}
