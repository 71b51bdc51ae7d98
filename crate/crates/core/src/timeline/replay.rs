use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use super::{build_tiv, TivConfig};
use crate::error::SimError;
use crate::record::{BranchRecord, CoreConfig, TimingInfoVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InFlightBranch {
    pub record: BranchRecord,
    pub fetch_pred: bool,
}

impl InFlightBranch {
    /// Cycles the branch has been (or was) unresolved as of `now`.
    pub fn elapsed_at(&self, now: u64) -> u64 {
        (self.record.resolve_latency as u64).min(now.saturating_sub(self.record.alloc_cycle))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetiredBranch {
    pub seq: u64,
    pub pc: u64,
    pub resolve_latency: u32,
}

/// Reorder buffer contents plus a bounded ring of recently retired branches.
#[derive(Debug, Clone)]
pub struct Window {
    in_flight: VecDeque<InFlightBranch>,
    retired: VecDeque<RetiredBranch>,
    rob_size: usize,
    commit_depth: usize,
}

impl Window {
    pub fn new(core: CoreConfig) -> Self {
        Window {
            in_flight: VecDeque::new(),
            retired: VecDeque::new(),
            rob_size: core.rob_size.max(1),
            commit_depth: core.commit_history_depth,
        }
    }

    /// Oldest first.
    pub fn in_flight(&self) -> &VecDeque<InFlightBranch> {
        &self.in_flight
    }

    /// Oldest first; the most recently retired branch is at the back.
    pub fn retired(&self) -> &VecDeque<RetiredBranch> {
        &self.retired
    }

    pub fn insert(&mut self, record: BranchRecord, fetch_pred: bool) {
        self.in_flight.push_back(InFlightBranch { record, fetch_pred });
        // a full ROB forces the head out regardless of resolution
        while self.in_flight.len() > self.rob_size {
            self.retire_head();
        }
    }

    /// Retires, in order, every head branch resolved by cycle `t`.
    pub fn retire_until(&mut self, t: u64) {
        while self.in_flight.front().is_some_and(|b| b.record.resolved_at() <= t) {
            self.retire_head();
        }
    }

    fn retire_head(&mut self) {
        if let Some(b) = self.in_flight.pop_front() {
            if self.commit_depth == 0 {
                return;
            }
            if self.retired.len() == self.commit_depth {
                self.retired.pop_front();
            }
            self.retired.push_back(RetiredBranch {
                seq: b.record.seq,
                pc: b.record.pc,
                resolve_latency: b.record.resolve_latency,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayEvent {
    /// The branch is still unresolved at its re-predict cycle.
    Repredict { seq: u64, pc: u64, at: u64, tiv: TimingInfoVector },
    /// The branch resolved before (or at) its re-predict cycle.
    NotRepredicted { seq: u64, pc: u64 },
    /// A previously re-predicted branch resolves.
    Resolved { seq: u64, pc: u64, at: u64 },
}

impl ReplayEvent {
    pub fn seq(&self) -> u64 {
        match *self {
            ReplayEvent::Repredict { seq, .. } | ReplayEvent::NotRepredicted { seq, .. } | ReplayEvent::Resolved { seq, .. } => seq,
        }
    }
}

const RESOLVE: u8 = 0;
const REPREDICT: u8 = 1;

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    pc: u64,
    resolved_at: u64,
}

/// Drives a [`Window`] through a trace, emitting re-predict and resolution
/// events in cycle order.
///
/// Only branches whose PC appears in the schedule are re-predicted; the map
/// value is that PC's re-predict cycle.
#[derive(Debug)]
pub struct Replay {
    window: Window,
    tiv: TivConfig,
    schedule: HashMap<u64, u32>,
    queue: BinaryHeap<Reverse<(u64, u8, u64)>>,
    scheduled: HashMap<u64, Scheduled>,
    last_alloc: Option<u64>,
}

impl Replay {
    pub fn new(core: CoreConfig, tiv: TivConfig, schedule: HashMap<u64, u32>) -> Self {
        Replay {
            window: Window::new(core),
            tiv,
            schedule,
            queue: BinaryHeap::new(),
            scheduled: HashMap::new(),
            last_alloc: None,
        }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Fires every event due strictly before `record` allocates, then inserts it.
    pub fn advance(&mut self, record: BranchRecord, fetch_pred: bool) -> Result<Vec<ReplayEvent>, SimError> {
        if let Some(prev) = self.last_alloc {
            if record.alloc_cycle <= prev {
                return Err(SimError::OutOfOrder { seq: record.seq, alloc: record.alloc_cycle, prev });
            }
        }
        self.last_alloc = Some(record.alloc_cycle);
        let mut events = Vec::new();
        self.drain(Some(record.alloc_cycle), &mut events)?;
        self.window.retire_until(record.alloc_cycle);
        if let Some(&rc) = self.schedule.get(&record.pc) {
            let t = record.alloc_cycle + rc as u64;
            self.queue.push(Reverse((t, REPREDICT, record.seq)));
            self.scheduled.insert(record.seq, Scheduled { pc: record.pc, resolved_at: record.resolved_at() });
        }
        self.window.insert(record, fetch_pred);
        Ok(events)
    }

    /// Fires all remaining events.
    pub fn finish(&mut self) -> Result<Vec<ReplayEvent>, SimError> {
        let mut events = Vec::new();
        self.drain(None, &mut events)?;
        Ok(events)
    }

    fn drain(&mut self, before: Option<u64>, events: &mut Vec<ReplayEvent>) -> Result<(), SimError> {
        while let Some(&Reverse((t, kind, seq))) = self.queue.peek() {
            if before.is_some_and(|b| t >= b) {
                break;
            }
            self.queue.pop();
            let info = self.scheduled[&seq];
            self.window.retire_until(t);
            if kind == RESOLVE {
                self.scheduled.remove(&seq);
                events.push(ReplayEvent::Resolved { seq, pc: info.pc, at: t });
                continue;
            }
            let present = self.window.in_flight.binary_search_by_key(&seq, |b| b.record.seq).is_ok();
            if info.resolved_at <= t || !present {
                self.scheduled.remove(&seq);
                events.push(ReplayEvent::NotRepredicted { seq, pc: info.pc });
                continue;
            }
            let tiv = build_tiv(&self.window, seq, &self.tiv, t)?;
            self.queue.push(Reverse((info.resolved_at, RESOLVE, seq)));
            events.push(ReplayEvent::Repredict { seq, pc: info.pc, at: t, tiv });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{Composition, TimingBit::Slow};

    fn rec(seq: u64, pc: u64, alloc: u64, lat: u32) -> BranchRecord {
        BranchRecord { seq, pc, taken: false, alloc_cycle: alloc, resolve_latency: lat, instrs_since_prev: 1 }
    }

    #[test]
    fn retires_in_order_only() {
        let mut w = Window::new(CoreConfig::default());
        w.insert(rec(0, 4, 1, 50), false);
        w.insert(rec(1, 8, 2, 1), false);
        w.retire_until(10);
        // seq 1 resolved but is stuck behind seq 0
        assert_eq!(w.in_flight().len(), 2);
        w.retire_until(51);
        assert_eq!(w.in_flight().len(), 0);
        assert_eq!(w.retired().iter().map(|r| r.seq).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn rob_overflow_and_ring_depth() {
        let core = CoreConfig { rob_size: 2, commit_history_depth: 3, ..CoreConfig::default() };
        let mut w = Window::new(core);
        for i in 0..6 {
            w.insert(rec(i, 4, i + 1, 1000), false);
        }
        assert_eq!(w.in_flight().len(), 2);
        assert_eq!(w.retired().iter().map(|r| r.seq).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn repredict_only_unresolved() {
        let mut r = Replay::new(CoreConfig::default(), TivConfig::default(), HashMap::from([(0x40, 16)]));
        let mut ev = Vec::new();
        ev.extend(r.advance(rec(0, 0x40, 10, 8), false).unwrap());
        ev.extend(r.advance(rec(1, 0x40, 12, 30), true).unwrap());
        ev.extend(r.advance(rec(2, 0x80, 100, 1), true).unwrap());
        assert_eq!(ev.len(), 3);
        assert_eq!(ev[0], ReplayEvent::NotRepredicted { seq: 0, pc: 0x40 });
        match &ev[1] {
            ReplayEvent::Repredict { seq: 1, at: 28, tiv, .. } => {
                assert!(tiv.fetch_pred_bit);
                // seq 0 resolved at 18 and retired
                assert_eq!(tiv.composition, Composition { commit: 1, older: 0, younger: 0, padded: 9 });
                // latency 8 == co_threshold 8 is slow
                assert_eq!(tiv.bits[9], Slow);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(ev[2], ReplayEvent::Resolved { seq: 1, pc: 0x40, at: 42 });
        assert!(r.finish().unwrap().is_empty());
    }

    #[test]
    fn out_of_order_rejected() {
        let mut r = Replay::new(CoreConfig::default(), TivConfig::default(), HashMap::new());
        r.advance(rec(0, 4, 10, 1), false).unwrap();
        assert!(matches!(r.advance(rec(1, 4, 10, 1), false), Err(SimError::OutOfOrder { .. })));
    }

    #[test]
    fn finish_flushes_pending() {
        let mut r = Replay::new(CoreConfig::default(), TivConfig::default(), HashMap::from([(4, 16)]));
        assert!(r.advance(rec(0, 4, 10, 40), false).unwrap().is_empty());
        let ev = r.finish().unwrap();
        assert!(matches!(ev[0], ReplayEvent::Repredict { seq: 0, at: 26, .. }));
        assert!(matches!(ev[1], ReplayEvent::Resolved { seq: 0, at: 50, .. }));
    }
}
