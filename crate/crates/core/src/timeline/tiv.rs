use super::{TivConfig, Window};
use crate::error::SimError;
use crate::record::{Composition, TimingBit, TimingInfoVector};

/// Fast iff the branch spent fewer than `threshold` cycles unresolved.
#[inline]
pub fn classify_timing(elapsed: u64, threshold: u32) -> TimingBit {
    if elapsed < threshold as u64 {
        TimingBit::Fast
    } else {
        TimingBit::Slow
    }
}

/// Builds the timing vector of in-flight branch `subject_seq` at cycle `now`.
///
/// Younger in-ROB branches come first in priority (the youngest `n_tiv` are
/// kept), then the nearest older in-ROB branches, then the most recently
/// retired ones; padding fills whatever is left at the oldest end.
pub fn build_tiv(window: &Window, subject_seq: u64, cfg: &TivConfig, now: u64) -> Result<TimingInfoVector, SimError> {
    let in_flight = window.in_flight();
    let pos = in_flight
        .binary_search_by_key(&subject_seq, |b| b.record.seq)
        .map_err(|_| SimError::NotInWindow(subject_seq))?;
    let subject = &in_flight[pos];
    let n = cfg.n_tiv;

    let younger: Vec<TimingBit> = if cfg.include_ytiv {
        let all: Vec<TimingBit> = in_flight
            .range(pos + 1..)
            .filter(|b| b.record.alloc_cycle <= now)
            .map(|b| classify_timing(b.elapsed_at(now), cfg.y_threshold))
            .collect();
        all[all.len().saturating_sub(n)..].to_vec()
    } else {
        Vec::new()
    };

    let want_older = n - younger.len();
    let older_start = pos.saturating_sub(want_older);
    let older: Vec<TimingBit> = in_flight
        .range(older_start..pos)
        .map(|b| classify_timing(b.elapsed_at(now), cfg.co_threshold))
        .collect();

    let want_commit = want_older - older.len();
    let retired = window.retired();
    let commit: Vec<TimingBit> = retired
        .range(retired.len().saturating_sub(want_commit)..)
        .map(|b| classify_timing(b.resolve_latency as u64, cfg.co_threshold))
        .collect();

    let padded = want_commit - commit.len();
    let mut bits = Vec::with_capacity(n);
    bits.extend(std::iter::repeat_n(cfg.pad_policy, padded));
    bits.extend_from_slice(&commit);
    bits.extend_from_slice(&older);
    bits.extend_from_slice(&younger);
    debug_assert_eq!(bits.len(), n);

    Ok(TimingInfoVector {
        bits,
        fetch_pred_bit: subject.fetch_pred,
        composition: Composition { commit: commit.len(), older: older.len(), younger: younger.len(), padded },
    })
}
