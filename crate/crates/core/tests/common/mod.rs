//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbr_core::tage::{TageConfig, TageState};
use sbr_core::timeline::{TivConfig, Window};
use sbr_core::{BranchRecord, CoreConfig, TimingBit};

/// One randomized window state: every record allocated by `now` has been
/// inserted, retiring in order as each new record arrives.
#[derive(Debug, Clone)]
pub struct WindowCase {
    pub core: CoreConfig,
    pub records: Vec<BranchRecord>,
    pub subject: u64,
    pub now: u64,
    pub cfg: TivConfig,
    /// Also retire everything resolved by `now` before building.
    pub retire_at_now: bool,
}

pub fn rec(seq: u64, alloc: u64, lat: u32) -> BranchRecord {
    BranchRecord { seq, pc: 0x1000 + 4 * seq, taken: seq % 3 == 0, alloc_cycle: alloc, resolve_latency: lat, instrs_since_prev: 1 }
}

pub fn random_case(rng: &mut ChaCha8Rng) -> WindowCase {
    let n = rng.gen_range(1..60);
    let mut alloc = 0;
    let records: Vec<BranchRecord> = (0..n)
        .map(|i| {
            alloc += rng.gen_range(0..4);
            rec(i, alloc, rng.gen_range(1..40))
        })
        .collect();
    let rc = rng.gen_range(1..32);
    let cfg = TivConfig {
        n_tiv: rng.gen_range(1..16),
        co_threshold: rng.gen_range(1..40),
        y_threshold: rng.gen_range(1..=rc),
        include_ytiv: rng.gen_bool(0.5),
        repredict_cycle: rc,
        xor_ghist: false,
        pad_policy: if rng.gen_bool(0.5) { TimingBit::Fast } else { TimingBit::Slow },
    };
    let core = CoreConfig {
        rob_size: rng.gen_range(1..30),
        commit_history_depth: rng.gen_range(0..20),
        ..CoreConfig::default()
    };
    let subject = rng.gen_range(0..n);
    let now = records[subject as usize].alloc_cycle + rc as u64;
    WindowCase { core, records, subject, now, cfg, retire_at_now: rng.gen_bool(0.5) }
}

/// The window under test, built through the library's own structure.
pub fn build_window(case: &WindowCase) -> Window {
    let mut w = Window::new(case.core);
    for r in case.records.iter().filter(|r| r.alloc_cycle <= case.now) {
        w.retire_until(r.alloc_cycle);
        w.insert(*r, r.seq % 2 == 0);
    }
    if case.retire_at_now {
        w.retire_until(case.now);
    }
    w
}

/// Brute-force vector: bits, fetch bit, and (commit, older, younger, padded).
/// `None` when the subject has already left the ROB.
pub fn oracle_tiv(case: &WindowCase) -> Option<(Vec<TimingBit>, bool, [usize; 4])> {
    let recs: Vec<&BranchRecord> = case.records.iter().filter(|r| r.alloc_cycle <= case.now).collect();
    let resolved = |i: usize| recs[i].alloc_cycle + recs[i].resolve_latency as u64;

    // in-order retirement over plain indices
    let mut head = 0usize;
    let mut retired: Vec<usize> = Vec::new();
    for i in 0..recs.len() {
        while head < i && resolved(head) <= recs[i].alloc_cycle {
            retired.push(head);
            head += 1;
        }
        if i + 1 - head > case.core.rob_size {
            retired.push(head);
            head += 1;
        }
    }
    if case.retire_at_now {
        while head < recs.len() && resolved(head) <= case.now {
            retired.push(head);
            head += 1;
        }
    }
    let s = case.subject as usize;
    if s < head || s >= recs.len() {
        return None;
    }
    let ring: Vec<usize> = retired[retired.len().saturating_sub(case.core.commit_history_depth)..].to_vec();

    let cfg = &case.cfg;
    let bit = |elapsed: u64, thr: u32| if elapsed >= thr as u64 { TimingBit::Slow } else { TimingBit::Fast };
    let elapsed = |i: usize| (recs[i].resolve_latency as u64).min(case.now - recs[i].alloc_cycle);

    let mut younger: Vec<TimingBit> = Vec::new();
    if cfg.include_ytiv {
        for i in (s + 1..recs.len()).rev() {
            if younger.len() == cfg.n_tiv {
                break;
            }
            younger.insert(0, bit(elapsed(i), cfg.y_threshold));
        }
    }
    let mut older: Vec<TimingBit> = Vec::new();
    for i in (head..s).rev() {
        if younger.len() + older.len() == cfg.n_tiv {
            break;
        }
        older.insert(0, bit(elapsed(i), cfg.co_threshold));
    }
    let mut commit: Vec<TimingBit> = Vec::new();
    for &i in ring.iter().rev() {
        if younger.len() + older.len() + commit.len() == cfg.n_tiv {
            break;
        }
        commit.insert(0, bit(recs[i].resolve_latency as u64, cfg.co_threshold));
    }
    let padded = cfg.n_tiv - younger.len() - older.len() - commit.len();
    let counts = [commit.len(), older.len(), younger.len(), padded];
    let mut bits = vec![cfg.pad_policy; padded];
    bits.extend(commit);
    bits.extend(older);
    bits.extend(younger);
    Some((bits, s % 2 == 0, counts))
}

/// Hand-built walkthrough window: five retired branches, three older
/// in-flight ones, the subject (seq 8) and two younger branches allocated
/// before its re-predict cycle (plus one allocated after).
///
/// With commit/older thresholds of 8 and a younger threshold of 2 at cycle
/// 27, the expected bits are commit S F S F, older S F S, younger S F.
pub fn walkthrough_records() -> Vec<BranchRecord> {
    vec![
        rec(0, 0, 2),
        rec(1, 1, 12),
        rec(2, 2, 3),
        rec(3, 3, 9),
        rec(4, 4, 7),
        rec(5, 10, 40),
        rec(6, 15, 3),
        rec(7, 16, 30),
        rec(8, 23, 20),
        rec(9, 24, 5),
        rec(10, 26, 6),
        rec(11, 28, 1),
    ]
}

pub fn walkthrough_cfg() -> TivConfig {
    TivConfig {
        n_tiv: 9,
        co_threshold: 8,
        y_threshold: 2,
        include_ytiv: true,
        repredict_cycle: 4,
        xor_ghist: false,
        pad_policy: TimingBit::Fast,
    }
}

/// Steady-state accuracy of a fresh fetch TAGE on a random pattern of
/// `period` directions at one PC: the first `warmup` instances are not
/// scored, the next `measure` are.
pub fn pattern_accuracy(period: usize, seed: u64, warmup: usize, measure: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pattern: Vec<bool> = (0..period).map(|_| rng.gen_bool(0.5)).collect();
    let mut tage = TageState::new(TageConfig::default()).unwrap();
    let mut correct = 0;
    for i in 0..warmup + measure {
        let taken = pattern[i % period];
        let p = tage.predict(0x400200);
        if i >= warmup && p.dir == taken {
            correct += 1;
        }
        tage.update(0x400200, taken, &p);
    }
    correct as f64 / measure as f64
}
