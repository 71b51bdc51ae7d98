//! Browser bindings. The window and qsort operations exchange JSON text;
//! the plain Rust functions underneath are tested natively.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use sbr_core::harness::{run_baseline, run_sbr};
use sbr_core::record::PredictionCategory;
use sbr_core::sbr::SbrConfig;
use sbr_core::synth::{gen_qsort_workload, qsort_pcs, QsortWorkloadParams};
use sbr_core::tage::TageConfig;
use sbr_core::timeline::{build_tiv, expected_tradeoff, TivConfig, Window};
use sbr_core::{BranchRecord, CoreConfig, TimingBit};

/// One branch of a hand-made window, oldest first.
#[derive(Debug, Clone, Deserialize)]
pub struct WindowBranch {
    pub alloc: u64,
    pub latency: u32,
    #[serde(default)]
    pub fetch_pred: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TivRequest {
    pub branches: Vec<WindowBranch>,
    /// Index of the re-predicted branch in `branches`.
    pub subject: usize,
    #[serde(default)]
    pub tiv: TivConfig,
    #[serde(default = "default_rob")]
    pub rob_size: usize,
}

fn default_rob() -> usize {
    CoreConfig::default().rob_size
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TivResponse {
    /// Re-predict cycle of the subject.
    pub now: u64,
    /// `F`/`S` per timing bit, oldest first, then the fetch bit as `T`/`N`.
    pub bits: String,
    pub hex: String,
    pub commit: usize,
    pub older: usize,
    pub younger: usize,
    pub padded: usize,
    /// Per input branch: "retired" (in the commit history), "in-flight",
    /// "not allocated" or "forgotten" (retired past the commit history).
    pub states: Vec<String>,
}

/// Replays the window up to the subject's re-predict cycle and builds its vector.
pub fn tiv_for(req: &TivRequest) -> Result<TivResponse, String> {
    req.tiv.validate().map_err(|e| e.to_string())?;
    let subject = req.branches.get(req.subject).ok_or("subject index out of range")?;
    let now = subject.alloc + req.tiv.repredict_cycle as u64;
    let core = CoreConfig { rob_size: req.rob_size.max(1), ..CoreConfig::default() };
    let mut w = Window::new(core);
    let mut prev_alloc = None;
    for (i, b) in req.branches.iter().enumerate() {
        if prev_alloc.is_some_and(|p| b.alloc <= p) {
            return Err(format!("branch {i}: allocation cycles must increase"));
        }
        if b.latency == 0 {
            return Err(format!("branch {i}: latency must be >= 1"));
        }
        prev_alloc = Some(b.alloc);
        if b.alloc > now {
            continue;
        }
        let rec = BranchRecord {
            seq: i as u64,
            pc: 0x1000 + 4 * i as u64,
            taken: false,
            alloc_cycle: b.alloc,
            resolve_latency: b.latency,
            instrs_since_prev: 1,
        };
        w.retire_until(b.alloc);
        w.insert(rec, b.fetch_pred);
    }
    let tiv = build_tiv(&w, req.subject as u64, &req.tiv, now).map_err(|e| e.to_string())?;

    let retired_from = w.in_flight().front().map_or(u64::MAX, |b| b.record.seq);
    let states = req
        .branches
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let s = if b.alloc > now {
                "not allocated"
            } else if (i as u64) >= retired_from {
                "in-flight"
            } else if w.retired().iter().any(|r| r.seq == i as u64) {
                "retired"
            } else {
                "forgotten"
            };
            s.to_string()
        })
        .collect();
    let mut bits: String = tiv.bits.iter().map(|b| if *b == TimingBit::Slow { 'S' } else { 'F' }).collect();
    bits.push(if tiv.fetch_pred_bit { 'T' } else { 'N' });
    let c = tiv.composition;
    Ok(TivResponse { now, bits, hex: tiv.to_hex(), commit: c.commit, older: c.older, younger: c.younger, padded: c.padded, states })
}

#[derive(Debug, Clone, Deserialize)]
pub struct QsortRequest {
    pub table_size: usize,
    #[serde(default = "one")]
    pub invocations: usize,
    pub miss_prob: f64,
    pub repredict_cycle: u32,
    pub co_threshold: u32,
    pub conf_fetch_max: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QsortResponse {
    pub records: usize,
    pub instances: u64,
    pub fetch_mispredicts: u64,
    pub fetch_accuracy_fast: Option<f64>,
    pub fetch_accuracy_slow: Option<f64>,
    pub reduction: f64,
    pub cycles_saved: u64,
    pub cycles_lost: u64,
    /// Category name → count for branch A.
    pub categories: Vec<(String, u64)>,
}

/// Sorts random tables and runs the SBR on branch A alone.
pub fn qsort_experiment(req: &QsortRequest) -> Result<QsortResponse, String> {
    let params = QsortWorkloadParams {
        seed: req.seed,
        table_size: req.table_size,
        invocations: req.invocations,
        miss_prob_given_deep_return: req.miss_prob,
        ..Default::default()
    };
    let trace = gen_qsort_workload(&params).map_err(|e| e.to_string())?;
    let core = CoreConfig::default();
    let tage = TageConfig::default();
    let base = run_baseline(&trace, &tage, &core).map_err(|e| e.to_string())?;
    let a = base.per_pc.get(&qsort_pcs::BRANCH_A).ok_or("table too small to reach branch A")?;

    let mut sbr = SbrConfig { h2p_set: vec![qsort_pcs::BRANCH_A], conf_fetch_max: req.conf_fetch_max, ..Default::default() };
    sbr.tiv.repredict_cycle = req.repredict_cycle;
    sbr.tiv.co_threshold = req.co_threshold;
    let rep = run_sbr(&trace, &core, &tage, &sbr).map_err(|e| e.to_string())?;
    let p = &rep.per_pc[&qsort_pcs::BRANCH_A];
    Ok(QsortResponse {
        records: trace.len(),
        instances: p.instances,
        fetch_mispredicts: p.fetch_mispredicts,
        fetch_accuracy_fast: a.accuracy_in(..=8),
        fetch_accuracy_slow: a.accuracy_in(14..),
        reduction: p.reduction(),
        cycles_saved: p.cost.cycles_saved,
        cycles_lost: p.cost.cycles_lost,
        categories: PredictionCategory::ALL.iter().map(|c| (c.name().to_string(), p.categories.get(*c))).collect(),
    })
}

fn respond<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).expect("response serializes"),
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

fn request<'a, T: Deserialize<'a>>(json: &'a str) -> Result<T, String> {
    serde_json::from_str(json).map_err(|e| format!("bad request: {e}"))
}

#[wasm_bindgen]
pub fn tiv(request_json: &str) -> String {
    respond(request(request_json).and_then(|r| tiv_for(&r)))
}

#[wasm_bindgen]
pub fn qsort(request_json: &str) -> String {
    respond(request(request_json).and_then(|r| qsort_experiment(&r)))
}

/// `[benefit, penalty]` as fractions of all instructions.
#[wasm_bindgen]
pub fn tradeoff(misprediction_fraction: f64, fetch_accuracy: f64) -> Vec<f64> {
    let (b, p) = expected_tradeoff(misprediction_fraction, fetch_accuracy);
    vec![b, p]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walkthrough() -> TivRequest {
        let lat = [2, 12, 3, 9, 7, 40, 3, 30, 20, 5, 6, 1];
        let alloc = [0, 1, 2, 3, 4, 10, 15, 16, 23, 24, 26, 28];
        TivRequest {
            branches: alloc.iter().zip(lat).map(|(&alloc, latency)| WindowBranch { alloc, latency, fetch_pred: true }).collect(),
            subject: 8,
            tiv: TivConfig { n_tiv: 9, repredict_cycle: 4, co_threshold: 8, y_threshold: 2, include_ytiv: true, ..Default::default() },
            rob_size: 224,
        }
    }

    #[test]
    fn walkthrough_window() {
        let r = tiv_for(&walkthrough()).unwrap();
        assert_eq!(r.now, 27);
        assert_eq!(r.bits, "SFSFSFSSFT");
        assert_eq!((r.commit, r.older, r.younger, r.padded), (4, 3, 2, 0));
        assert_eq!(r.states[0], "retired");
        assert_eq!(r.states[5], "in-flight");
        assert_eq!(r.states[11], "not allocated");
    }

    #[test]
    fn tiny_rob_evicts() {
        let mut req = walkthrough();
        req.rob_size = 2;
        let r = tiv_for(&req);
        // the subject itself is pushed out by its two younger branches
        assert!(r.is_err());
        // a full ROB forces its head out, resolved or not
        req.subject = 10;
        req.tiv = TivConfig { n_tiv: 4, repredict_cycle: 1, ..Default::default() };
        let r = tiv_for(&req).unwrap();
        assert_eq!(r.states[8], "retired");
        assert_eq!(r.states[9], "in-flight");
        assert_eq!((r.commit, r.older), (3, 1));
    }

    #[test]
    fn json_errors_are_reported_in_band() {
        let out: serde_json::Value = serde_json::from_str(&tiv("{")).unwrap();
        assert!(out["error"].as_str().unwrap().starts_with("bad request"));
        let out: serde_json::Value = serde_json::from_str(&tiv(r#"{"branches": [], "subject": 0}"#)).unwrap();
        assert_eq!(out["error"], "subject index out of range");
    }

    #[test]
    fn tradeoff_values() {
        let v = tradeoff(0.017, 0.178);
        assert!((v[0] - 0.013974).abs() < 1e-9 && (v[1] - 0.003026).abs() < 1e-9);
    }

    #[test]
    fn small_qsort_run() {
        let req = QsortRequest {
            table_size: 5000,
            invocations: 1,
            miss_prob: 0.8,
            repredict_cycle: 16,
            co_threshold: 128,
            conf_fetch_max: 1.0,
            seed: 1,
        };
        let r = qsort_experiment(&req).unwrap();
        assert_eq!(r.categories.iter().map(|c| c.1).sum::<u64>(), r.instances);
        assert!(r.reduction >= 0.0);
        let out: serde_json::Value = serde_json::from_str(&qsort(&serde_json::json!({
            "table_size": 1, "miss_prob": 0.8, "repredict_cycle": 16, "co_threshold": 128, "conf_fetch_max": 0.5
        }).to_string()))
        .unwrap();
        assert!(out["error"].as_str().unwrap().contains("table_size"));
    }
}
