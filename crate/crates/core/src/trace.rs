//! Line-oriented text trace format.
//!
//! ```text
//! seq,pc,taken,alloc_cycle,resolve_latency,instrs_since_prev
//! 0,0x400a10,1,100,14,6
//! ```
//!
//! Lines starting with `#` are comments.

use std::io::{BufRead, Write};

use crate::error::TraceError;
use crate::record::BranchRecord;

pub const HEADER: &str = "seq,pc,taken,alloc_cycle,resolve_latency,instrs_since_prev";

/// Checks record invariants against the previous record.
fn check(prev: Option<&BranchRecord>, rec: &BranchRecord) -> Result<(), TraceError> {
    let invalid = |msg: String| TraceError::Invalid { seq: rec.seq, msg };
    let expected_seq = prev.map_or(0, |p| p.seq + 1);
    if rec.seq != expected_seq {
        return Err(invalid(format!("seq {} not contiguous (expected {expected_seq})", rec.seq)));
    }
    if rec.resolve_latency == 0 {
        return Err(invalid("resolve_latency must be >= 1".into()));
    }
    if let Some(p) = prev {
        if rec.alloc_cycle <= p.alloc_cycle {
            return Err(invalid(format!(
                "alloc_cycle {} does not increase (previous {})",
                rec.alloc_cycle, p.alloc_cycle
            )));
        }
    }
    Ok(())
}

/// Validates a whole record sequence.
pub fn validate(records: &[BranchRecord]) -> Result<(), TraceError> {
    let mut prev = None;
    for r in records {
        check(prev, r)?;
        prev = Some(r);
    }
    Ok(())
}

fn parse_line(line_no: usize, line: &str) -> Result<BranchRecord, TraceError> {
    let err = |msg: String| TraceError::Parse { line: line_no, msg };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 6 {
        return Err(err(format!("expected 6 fields, found {}", fields.len())));
    }
    let dec = |name: &str, s: &str| -> Result<u64, TraceError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err(format!("{name}: `{s}` is not a decimal integer")));
        }
        s.parse::<u64>().map_err(|e| err(format!("{name}: {e}")))
    };
    let pc = fields[1]
        .strip_prefix("0x")
        .filter(|h| !h.is_empty() && h.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)))
        .ok_or_else(|| err(format!("pc: `{}` is not 0x-prefixed lowercase hex", fields[1])))
        .and_then(|h| u64::from_str_radix(h, 16).map_err(|e| err(format!("pc: {e}"))))?;
    let taken = match fields[2] {
        "0" => false,
        "1" => true,
        other => return Err(err(format!("taken: `{other}` is not 0 or 1"))),
    };
    let narrow = |name: &str, v: u64| -> Result<u32, TraceError> {
        u32::try_from(v).map_err(|_| err(format!("{name}: {v} out of range")))
    };
    Ok(BranchRecord {
        seq: dec("seq", fields[0])?,
        pc,
        taken,
        alloc_cycle: dec("alloc_cycle", fields[3])?,
        resolve_latency: narrow("resolve_latency", dec("resolve_latency", fields[4])?)?,
        instrs_since_prev: narrow("instrs_since_prev", dec("instrs_since_prev", fields[5])?)?,
    })
}

/// Reads and validates a trace.
pub fn read_trace<R: BufRead>(reader: R) -> Result<Vec<BranchRecord>, TraceError> {
    let mut records: Vec<BranchRecord> = Vec::new();
    let mut seen_header = false;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != HEADER {
                return Err(TraceError::Header { line: line_no, expected: HEADER });
            }
            seen_header = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let rec = parse_line(line_no, line)?;
        check(records.last(), &rec)?;
        records.push(rec);
    }
    if !seen_header {
        return Err(TraceError::Header { line: 1, expected: HEADER });
    }
    Ok(records)
}

/// Writes a trace. Invariants are checked before anything is written.
pub fn write_trace<W: Write>(records: &[BranchRecord], mut out: W) -> Result<(), TraceError> {
    validate(records)?;
    writeln!(out, "{HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{:#x},{},{},{},{}",
            r.seq, r.pc, r.taken as u8, r.alloc_cycle, r.resolve_latency, r.instrs_since_prev
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_string(records: &[BranchRecord]) -> Result<String, TraceError> {
    let mut buf = Vec::new();
    write_trace(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("trace output is ASCII"))
}

pub fn from_str(s: &str) -> Result<Vec<BranchRecord>, TraceError> {
    read_trace(s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seq: u64, alloc: u64, lat: u32) -> BranchRecord {
        BranchRecord {
            seq,
            pc: 0x400a10,
            taken: true,
            alloc_cycle: alloc,
            resolve_latency: lat,
            instrs_since_prev: 6,
        }
    }

    #[test]
    fn empty_body() {
        assert!(from_str(&format!("{HEADER}\n")).unwrap().is_empty());
    }

    #[test]
    fn single_line() {
        let recs = from_str(&format!("{HEADER}\n0,0x400a10,1,100,14,6\n")).unwrap();
        assert_eq!(recs, vec![rec(0, 100, 14)]);
    }

    #[test]
    fn comments_are_skipped() {
        let s = format!("# generated\n{HEADER}\n# mid\n0,0x400a10,1,100,14,6\n");
        assert_eq!(from_str(&s).unwrap().len(), 1);
    }

    #[test]
    fn non_monotonic_alloc() {
        let s = format!("{HEADER}\n0,0x1,1,100,14,6\n1,0x1,0,90,3,1\n");
        assert!(matches!(from_str(&s), Err(TraceError::Invalid { seq: 1, .. })));
    }

    #[test]
    fn parse_errors_name_the_line() {
        for bad in [
            "0,0x1,2,100,14,6",
            "0,400a10,1,100,14,6",
            "0,0x400A10,1,100,14,6",
            "0,0x1,1,100,14",
            "0,0x1,1,100,14,6,",
            "0,0x1,1,-5,14,6",
        ] {
            let s = format!("{HEADER}\n{bad}\n");
            match from_str(&s) {
                Err(TraceError::Parse { line, .. }) => assert_eq!(line, 2, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn bad_header() {
        assert!(matches!(from_str("seq,pc\n"), Err(TraceError::Header { .. })));
        assert!(matches!(from_str(""), Err(TraceError::Header { .. })));
    }

    #[test]
    fn write_empty_is_header_only() {
        assert_eq!(to_string(&[]).unwrap(), format!("{HEADER}\n"));
    }

    #[test]
    fn write_rejects_zero_latency() {
        let mut buf = Vec::new();
        let err = write_trace(&[rec(0, 1, 0)], &mut buf).unwrap_err();
        assert!(matches!(err, TraceError::Invalid { .. }));
        assert!(buf.is_empty());
    }

    #[test]
    fn write_format() {
        assert_eq!(
            to_string(&[rec(0, 100, 14)]).unwrap(),
            format!("{HEADER}\n0,0x400a10,1,100,14,6\n")
        );
    }
}
