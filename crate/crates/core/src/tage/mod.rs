//! TAGE conditional branch predictor.
//!
//! A base bimodal table (optional) plus `num_tagged` tagged components
//! indexed with geometrically increasing global history lengths. The same
//! implementation serves as the fetch predictor and, without the bimodal
//! table and with an externally supplied history, as the SBR predictor.
//!
//! Index and tag hashing follows the usual folded-XOR scheme: for
//! component `i` with history length `L`,
//!
//! ```text
//! index = pc ^ (pc >> index_bits) ^ fold(ghist[..L], index_bits) ^ path_mix(phist, i)
//! tag   = pc ^ fold(ghist[..L], tag_bits) ^ (fold(ghist[..L], tag_bits - 1) << 1)
//! ```

mod history;
mod lengths;

pub use history::{fold_bits, FoldedHistory, GlobalHistory, PackedHistory};
pub use lengths::geometric_lengths;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TageConfig {
    pub num_tagged: usize,
    /// Shortest history length.
    pub l_min: usize,
    /// Longest history length.
    pub l_max: usize,
    /// log2 entries per tagged table.
    pub table_index_bits: u32,
    pub tag_bits: u32,
    pub ctr_bits: u32,
    pub useful_bits: u32,
    pub bimodal_index_bits: u32,
    pub use_bimodal: bool,
    pub path_hist_bits: u32,
    /// Seed of the allocation PRNG.
    pub seed: u64,
}

impl Default for TageConfig {
    fn default() -> Self {
        TageConfig {
            num_tagged: 12,
            l_min: 4,
            l_max: 640,
            table_index_bits: 14,
            tag_bits: 12,
            ctr_bits: 3,
            useful_bits: 2,
            bimodal_index_bits: 14,
            use_bimodal: true,
            path_hist_bits: 16,
            seed: 0,
        }
    }
}

impl TageConfig {
    /// The SBR variant: same history lengths, no base predictor.
    pub fn sbr_default() -> Self {
        TageConfig { use_bimodal: false, ..TageConfig::default() }
    }

    /// 32M-entry tables. Needs several GiB of memory with 12 components.
    pub fn unbounded() -> Self {
        TageConfig { table_index_bits: 25, bimodal_index_bits: 25, tag_bits: 16, ..TageConfig::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        geometric_lengths(self.l_min, self.l_max, self.num_tagged)?;
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(ConfigError::new(msg)) };
        check((1..=28).contains(&self.table_index_bits), "tage.table_index_bits must be in 1..=28")?;
        check((1..=28).contains(&self.bimodal_index_bits), "tage.bimodal_index_bits must be in 1..=28")?;
        check((2..=16).contains(&self.tag_bits), "tage.tag_bits must be in 2..=16")?;
        check((2..=7).contains(&self.ctr_bits), "tage.ctr_bits must be in 2..=7")?;
        check((1..=7).contains(&self.useful_bits), "tage.useful_bits must be in 1..=7")?;
        check(self.path_hist_bits <= 32, "tage.path_hist_bits must be <= 32")?;
        Ok(())
    }
}

/// Which component supplied a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provider {
    Tagged(usize),
    Bimodal,
    Miss,
}

/// Saturating (correct, total) pair, both halved when total saturates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Accuracy {
    pub correct: u8,
    pub total: u8,
}

impl Accuracy {
    pub fn record(&mut self, correct: bool) {
        if self.total == u8::MAX {
            self.total /= 2;
            self.correct /= 2;
        }
        self.total += 1;
        self.correct += correct as u8;
    }

    pub fn ratio(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TageEntry {
    pub valid: bool,
    pub tag: u16,
    pub ctr: u8,
    pub useful: u8,
    pub accuracy: Accuracy,
}

/// Result of a lookup. Carries the per-component indices and tags so the
/// same entries can be trained later, after the histories have moved on.
#[derive(Debug, Clone, PartialEq)]
pub struct TagePrediction {
    pub dir: bool,
    pub provider: Provider,
    /// Direction of the provider entry itself.
    pub provider_dir: bool,
    pub alt_dir: bool,
    pub alt_provider: Provider,
    pub provider_entry: Option<usize>,
    pub provider_accuracy: Option<f64>,
    pub provider_observations: u32,
    used_alt: bool,
    indices: Vec<u32>,
    tags: Vec<u16>,
    bimodal_index: usize,
}

impl TagePrediction {
    pub fn hit(&self) -> bool {
        self.provider != Provider::Miss
    }
}

/// Predictor tables, histories and the allocation PRNG.
#[derive(Debug, Clone)]
pub struct TageState {
    cfg: TageConfig,
    lengths: Vec<usize>,
    bimodal: Vec<u8>,
    bimodal_accuracy: Vec<Accuracy>,
    tables: Vec<Vec<TageEntry>>,
    ghist: GlobalHistory,
    phist: u64,
    fold_idx: Vec<FoldedHistory>,
    fold_tag0: Vec<FoldedHistory>,
    fold_tag1: Vec<FoldedHistory>,
    use_alt_on_na: i8,
    rng: ChaCha8Rng,
    table_writes: u64,
}

const BIMODAL_MAX: u8 = 3;

impl TageState {
    pub fn new(cfg: TageConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let lengths = geometric_lengths(cfg.l_min, cfg.l_max, cfg.num_tagged)?;
        let idx_bits = cfg.table_index_bits as usize;
        let tag_bits = cfg.tag_bits as usize;
        let fold = |w: usize| lengths.iter().map(|&l| FoldedHistory::new(l, w)).collect::<Vec<_>>();
        let weak_nt = (1u8 << (cfg.ctr_bits - 1)) - 1;
        let entry = TageEntry { ctr: weak_nt, ..Default::default() };
        Ok(TageState {
            bimodal: if cfg.use_bimodal { vec![1; 1 << cfg.bimodal_index_bits] } else { Vec::new() },
            bimodal_accuracy: if cfg.use_bimodal {
                vec![Accuracy::default(); 1 << cfg.bimodal_index_bits]
            } else {
                Vec::new()
            },
            tables: vec![vec![entry; 1 << idx_bits]; cfg.num_tagged],
            ghist: GlobalHistory::new(cfg.l_max + 1),
            phist: 0,
            fold_idx: fold(idx_bits),
            fold_tag0: fold(tag_bits),
            fold_tag1: fold(tag_bits - 1),
            use_alt_on_na: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            table_writes: 0,
            lengths,
            cfg,
        })
    }

    pub fn config(&self) -> &TageConfig {
        &self.cfg
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn ghist(&self) -> &GlobalHistory {
        &self.ghist
    }

    pub fn phist(&self) -> u64 {
        self.phist
    }

    pub fn tables(&self) -> &[Vec<TageEntry>] {
        &self.tables
    }

    pub fn bimodal(&self) -> &[u8] {
        &self.bimodal
    }

    /// Number of table-mutating training calls so far.
    pub fn table_writes(&self) -> u64 {
        self.table_writes
    }

    fn ctr_max(&self) -> u8 {
        (1u8 << self.cfg.ctr_bits) - 1
    }

    fn useful_max(&self) -> u8 {
        (1u8 << self.cfg.useful_bits) - 1
    }

    fn ctr_taken(&self, ctr: u8) -> bool {
        ctr >= 1 << (self.cfg.ctr_bits - 1)
    }

    fn ctr_weak(&self, ctr: u8) -> bool {
        let mid = 1u8 << (self.cfg.ctr_bits - 1);
        ctr == mid || ctr + 1 == mid
    }

    fn bimodal_index(&self, pc: u64) -> usize {
        ((pc ^ (pc >> 2)) as usize) & ((1usize << self.cfg.bimodal_index_bits) - 1)
    }

    fn path_mix(&self, comp: usize, phist: u64) -> u64 {
        let bits = (self.lengths[comp] as u32).min(self.cfg.path_hist_bits);
        let path = if bits == 0 { 0 } else { phist & ((1u64 << bits) - 1) };
        let width = self.cfg.table_index_bits;
        let shift = comp as u32 % width;
        let folded = (path ^ (path >> width)) & ((1u64 << width) - 1);
        ((folded << shift) | (folded >> (width - shift))) & ((1u64 << width) - 1)
    }

    fn hash(&self, pc: u64, comp: usize, phist: u64, idx_fold: u64, t0: u64, t1: u64) -> (u32, u16) {
        let idx_bits = self.cfg.table_index_bits;
        let idx_mask = (1u64 << idx_bits) - 1;
        let pc_s = pc >> 2;
        let idx = (pc_s ^ (pc_s >> idx_bits) ^ idx_fold ^ self.path_mix(comp, phist)) & idx_mask;
        let tag = (pc_s ^ (pc_s >> self.cfg.tag_bits) ^ t0 ^ (t1 << 1)) & ((1u64 << self.cfg.tag_bits) - 1);
        (idx as u32, tag as u16)
    }

    /// Lookup with the predictor's own history.
    pub fn predict(&self, pc: u64) -> TagePrediction {
        let (indices, tags): (Vec<u32>, Vec<u16>) = (0..self.lengths.len())
            .map(|i| self.hash(pc, i, self.phist, self.fold_idx[i].comp, self.fold_tag0[i].comp, self.fold_tag1[i].comp))
            .unzip();
        self.lookup(pc, indices, tags)
    }

    /// Lookup with an explicit direction history (most recent first) and
    /// path history in place of the internal ones.
    pub fn predict_with_history(&self, pc: u64, hist: &[bool], phist: u64) -> TagePrediction {
        self.predict_with_packed(pc, &PackedHistory::from_bools(hist), phist)
    }

    /// [`predict_with_history`](Self::predict_with_history) on a packed history.
    pub fn predict_with_packed(&self, pc: u64, hist: &PackedHistory, phist: u64) -> TagePrediction {
        let idx_bits = self.cfg.table_index_bits as usize;
        let tag_bits = self.cfg.tag_bits as usize;
        let (indices, tags): (Vec<u32>, Vec<u16>) = self
            .lengths
            .iter()
            .enumerate()
            .map(|(i, &len)| {
                self.hash(
                    pc,
                    i,
                    phist,
                    hist.fold(len, idx_bits),
                    hist.fold(len, tag_bits),
                    hist.fold(len, tag_bits - 1),
                )
            })
            .unzip();
        self.lookup(pc, indices, tags)
    }

    fn lookup(&self, pc: u64, indices: Vec<u32>, tags: Vec<u16>) -> TagePrediction {
        let mut hits = (0..self.tables.len())
            .rev()
            .filter(|&i| {
                let e = &self.tables[i][indices[i] as usize];
                e.valid && e.tag == tags[i]
            });
        let provider_comp = hits.next();
        let alt_comp = hits.next();
        let bimodal_index = if self.cfg.use_bimodal { self.bimodal_index(pc) } else { 0 };
        let base = if self.cfg.use_bimodal {
            (Provider::Bimodal, self.bimodal[bimodal_index] >= 2)
        } else {
            (Provider::Miss, false)
        };
        let (alt_provider, alt_dir) = match alt_comp {
            Some(a) => (Provider::Tagged(a), self.ctr_taken(self.tables[a][indices[a] as usize].ctr)),
            None => base,
        };

        let mut pred = TagePrediction {
            dir: base.1,
            provider: base.0,
            provider_dir: base.1,
            alt_dir,
            alt_provider,
            provider_entry: None,
            provider_accuracy: None,
            provider_observations: 0,
            used_alt: false,
            indices,
            tags,
            bimodal_index,
        };
        match provider_comp {
            Some(p) => {
                let idx = pred.indices[p] as usize;
                let e = &self.tables[p][idx];
                pred.provider = Provider::Tagged(p);
                pred.provider_dir = self.ctr_taken(e.ctr);
                pred.provider_entry = Some(idx);
                pred.provider_accuracy = e.accuracy.ratio();
                pred.provider_observations = e.accuracy.total as u32;
                let weak_new = e.useful == 0 && self.ctr_weak(e.ctr);
                pred.used_alt = weak_new && self.use_alt_on_na >= 0 && alt_provider != Provider::Miss;
                pred.dir = if pred.used_alt { alt_dir } else { pred.provider_dir };
            }
            None if self.cfg.use_bimodal => {
                let acc = self.bimodal_accuracy[bimodal_index];
                pred.provider_entry = Some(bimodal_index);
                pred.provider_accuracy = acc.ratio();
                pred.provider_observations = acc.total as u32;
            }
            None => {}
        }
        pred
    }

    /// Standard training: allocate on a final misprediction.
    pub fn train(&mut self, taken: bool, pred: &TagePrediction) {
        self.train_with(taken, pred, pred.dir != taken);
    }

    /// Trains the entries `pred` was read from; allocates a new entry when
    /// `allocate` is set and a longer component exists.
    pub fn train_with(&mut self, taken: bool, pred: &TagePrediction, allocate: bool) {
        self.table_writes += 1;
        let n = self.tables.len();
        if allocate {
            let start = match pred.provider {
                Provider::Tagged(p) => p + 1,
                _ => 0,
            };
            if start < n {
                self.allocate(start, taken, pred);
            }
        }

        match pred.provider {
            Provider::Tagged(p) => {
                let idx = pred.indices[p] as usize;
                let (ctr_max, useful_max) = (self.ctr_max(), self.useful_max());
                let entry = self.tables[p][idx];
                let weak_new = entry.useful == 0 && self.ctr_weak(entry.ctr);
                if weak_new && pred.provider_dir != pred.alt_dir && pred.alt_provider != Provider::Miss {
                    let delta = if pred.alt_dir == taken { 1 } else { -1 };
                    self.use_alt_on_na = (self.use_alt_on_na + delta).clamp(-8, 7);
                }
                if entry.useful == 0 {
                    match pred.alt_provider {
                        Provider::Tagged(a) => {
                            let ai = pred.indices[a] as usize;
                            self.tables[a][ai].ctr = step(self.tables[a][ai].ctr, taken, ctr_max);
                        }
                        Provider::Bimodal => {
                            let bi = pred.bimodal_index;
                            self.bimodal[bi] = step(self.bimodal[bi], taken, BIMODAL_MAX);
                        }
                        Provider::Miss => {}
                    }
                }
                let e = &mut self.tables[p][idx];
                e.ctr = step(e.ctr, taken, ctr_max);
                if pred.provider_dir != pred.alt_dir {
                    e.useful = step(e.useful, pred.provider_dir == taken, useful_max);
                }
                e.accuracy.record(pred.provider_dir == taken);
            }
            Provider::Bimodal => {
                let bi = pred.bimodal_index;
                self.bimodal[bi] = step(self.bimodal[bi], taken, BIMODAL_MAX);
                self.bimodal_accuracy[bi].record(pred.provider_dir == taken);
            }
            Provider::Miss => {}
        }
    }

    fn allocate(&mut self, start: usize, taken: bool, pred: &TagePrediction) {
        let free: Vec<usize> = (start..self.tables.len())
            .filter(|&j| self.tables[j][pred.indices[j] as usize].useful == 0)
            .collect();
        if free.is_empty() {
            for j in start..self.tables.len() {
                let e = &mut self.tables[j][pred.indices[j] as usize];
                e.useful = e.useful.saturating_sub(1);
            }
            return;
        }
        // Shorter components are favoured: each free candidate is skipped
        // with probability 1/2, falling back to the last one.
        let mut pick = *free.last().unwrap();
        for &j in &free {
            if self.rng.gen_bool(0.5) {
                pick = j;
                break;
            }
        }
        let mid = 1u8 << (self.cfg.ctr_bits - 1);
        self.tables[pick][pred.indices[pick] as usize] = TageEntry {
            valid: true,
            tag: pred.tags[pick],
            ctr: if taken { mid } else { mid - 1 },
            useful: 0,
            accuracy: Accuracy::default(),
        };
    }

    /// Shifts the outcome into the direction and path histories.
    pub fn update_history_only(&mut self, pc: u64, taken: bool) {
        self.ghist.push(taken);
        for f in self.fold_idx.iter_mut().chain(&mut self.fold_tag0).chain(&mut self.fold_tag1) {
            f.update(&self.ghist);
        }
        if self.cfg.path_hist_bits > 0 {
            let mask = (1u64 << self.cfg.path_hist_bits) - 1;
            self.phist = ((self.phist << 1) | ((pc >> 2) ^ (pc >> 5)) & 1) & mask;
        }
    }

    /// Training followed by the history shift.
    pub fn update(&mut self, pc: u64, taken: bool, pred: &TagePrediction) {
        self.train(taken, pred);
        self.update_history_only(pc, taken);
    }
}

#[inline]
fn step(v: u8, up: bool, max: u8) -> u8 {
    if up {
        v.saturating_add(1).min(max)
    } else {
        v.saturating_sub(1)
    }
}
