use proptest::prelude::*;

use sbr_core::trace::{self, HEADER};
use sbr_core::{BranchRecord, TraceError};

fn arb_trace() -> impl Strategy<Value = Vec<BranchRecord>> {
    prop::collection::vec((any::<u64>(), any::<bool>(), 1u64..1000, 1u32..=u32::MAX, any::<u32>()), 0..200).prop_map(|rows| {
        let mut alloc = 0u64;
        rows.into_iter()
            .enumerate()
            .map(|(i, (pc, taken, step, lat, instrs))| {
                alloc += step;
                BranchRecord { seq: i as u64, pc, taken, alloc_cycle: alloc, resolve_latency: lat, instrs_since_prev: instrs }
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn text_roundtrip(t in arb_trace()) {
        let text = trace::to_string(&t).unwrap();
        prop_assert_eq!(trace::from_str(&text).unwrap(), t.clone());
        // CRLF line endings read the same
        prop_assert_eq!(trace::from_str(&text.replace('\n', "\r\n")).unwrap(), t);
    }

    #[test]
    fn a_gap_in_seq_is_rejected(t in arb_trace(), at in any::<prop::sample::Index>()) {
        prop_assume!(!t.is_empty());
        let mut t = t;
        let i = at.index(t.len());
        t[i].seq += 1;
        let mut text = String::from(HEADER);
        text.push('\n');
        for r in &t {
            text += &format!("{},{:#x},{},{},{},{}\n", r.seq, r.pc, r.taken as u8, r.alloc_cycle, r.resolve_latency, r.instrs_since_prev);
        }
        let is_invalid = matches!(trace::from_str(&text), Err(TraceError::Invalid { .. }));
        prop_assert!(is_invalid);
    }
}

#[test]
fn equal_alloc_cycles_are_rejected() {
    let s = format!("{HEADER}\n0,0x10,1,5,3,1\n1,0x10,1,5,3,1\n");
    assert!(matches!(trace::from_str(&s), Err(TraceError::Invalid { seq: 1, .. })));
}

#[test]
fn zero_latency_is_rejected_on_read() {
    let s = format!("{HEADER}\n0,0x10,1,5,0,1\n");
    assert!(matches!(trace::from_str(&s), Err(TraceError::Invalid { seq: 0, .. })));
}
