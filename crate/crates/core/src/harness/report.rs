use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::baseline::BaselineReport;
use super::config::Pc;
use super::run::ExperimentReport;
use super::sweep::BestPerPc;
use crate::error::Result;
use crate::record::PredictionCategory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub tiv_hex: String,
    pub frequency: u64,
    /// Share of the majority direction among instances with this vector.
    pub sbr_bias: f64,
    pub fetch_accuracy: f64,
}

/// One point per distinct timing vector seen when re-predicting `pc`.
pub fn bias_scatter(report: &ExperimentReport, pc: u64) -> Vec<ScatterPoint> {
    let Some(p) = report.per_pc.get(&pc) else {
        return Vec::new();
    };
    p.tiv_stats
        .iter()
        .map(|(hex, s)| {
            let f = s.frequency as f64;
            ScatterPoint {
                tiv_hex: hex.clone(),
                frequency: s.frequency,
                sbr_bias: s.taken.max(s.frequency - s.taken) as f64 / f,
                fetch_accuracy: s.fetch_correct as f64 / f,
            }
        })
        .collect()
}

/// Frequency-weighted mean of |bias − fetch accuracy|; `None` without points.
pub fn scatter_diagonal_gap(points: &[ScatterPoint]) -> Option<f64> {
    let total: u64 = points.iter().map(|p| p.frequency).sum();
    (total > 0).then(|| {
        points.iter().map(|p| p.frequency as f64 * (p.sbr_bias - p.fetch_accuracy).abs()).sum::<f64>() / total as f64
    })
}

fn per_pc_header() -> Vec<String> {
    let mut h: Vec<String> =
        ["pc", "instances", "fetch_misp", "reduction", "cycles_saved", "cycles_lost"].map(String::from).to_vec();
    h.extend(PredictionCategory::ALL.iter().map(|c| c.name().to_string()));
    h
}

fn category_header() -> Vec<String> {
    std::iter::once("pc".to_string()).chain(PredictionCategory::ALL.iter().map(|c| c.name().to_string())).collect()
}

pub fn summary_json(report: &ExperimentReport) -> Result<Value> {
    let per_pc: Vec<Value> = report
        .per_pc
        .iter()
        .map(|(&pc, p)| {
            json!({
                "pc": Pc(pc),
                "instances": p.instances,
                "fetch_misp": p.fetch_mispredicts,
                "effective_misp": p.effective_mispredicts(),
                "reduction": p.reduction(),
                "cycles_saved": p.cost.cycles_saved,
                "cycles_lost": p.cost.cycles_lost,
                "sbr_accuracy": p.sbr_accuracy(),
                "fetch_accuracy": p.fetch_accuracy(),
                "categories": PredictionCategory::ALL.iter()
                    .map(|c| (c.name().to_string(), json!(p.categories.get(*c))))
                    .collect::<serde_json::Map<_, _>>(),
            })
        })
        .collect();
    let bmpki = |r: std::result::Result<f64, _>| r.ok();
    Ok(json!({
        "total_instrs": report.total_instrs,
        "warmup_records": report.warmup_records,
        "fetch_mispredicts": report.fetch_mispredicts,
        "baseline_bmpki": bmpki(report.baseline_bmpki()),
        "sbr_bmpki": bmpki(report.sbr_bmpki()),
        "config": { "core": report.core, "sbr": report.sbr },
        "per_pc": per_pc,
    }))
}

/// Structural check of a document produced by [`summary_json`].
pub fn validate_summary(v: &Value) -> std::result::Result<(), String> {
    let obj = v.as_object().ok_or("summary is not an object")?;
    for key in ["total_instrs", "warmup_records", "fetch_mispredicts"] {
        obj.get(key).and_then(Value::as_u64).ok_or(format!("`{key}` must be an unsigned integer"))?;
    }
    for key in ["baseline_bmpki", "sbr_bmpki"] {
        match obj.get(key) {
            Some(Value::Null) => {}
            Some(x) if x.is_f64() || x.is_u64() => {}
            _ => return Err(format!("`{key}` must be a number or null")),
        }
    }
    let cfg = obj.get("config").and_then(Value::as_object).ok_or("`config` must be an object")?;
    for key in ["core", "sbr"] {
        cfg.get(key).and_then(Value::as_object).ok_or(format!("`config.{key}` must be an object"))?;
    }
    let rows = obj.get("per_pc").and_then(Value::as_array).ok_or("`per_pc` must be an array")?;
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_object().ok_or(format!("per_pc[{i}] is not an object"))?;
        let pc = row.get("pc").and_then(Value::as_str).ok_or(format!("per_pc[{i}].pc must be a string"))?;
        pc.parse::<Pc>().map_err(|e| format!("per_pc[{i}].pc: {e}"))?;
        let uint = |k: &str| row.get(k).and_then(Value::as_u64).ok_or(format!("per_pc[{i}].{k} must be an unsigned integer"));
        let instances = uint("instances")?;
        let fetch = uint("fetch_misp")?;
        uint("effective_misp")?;
        uint("cycles_saved")?;
        uint("cycles_lost")?;
        row.get("reduction").and_then(Value::as_f64).ok_or(format!("per_pc[{i}].reduction must be a number"))?;
        for k in ["sbr_accuracy", "fetch_accuracy"] {
            match row.get(k) {
                Some(Value::Null) => {}
                Some(x) if x.as_f64().is_some_and(|a| (0.0..=1.0).contains(&a)) => {}
                _ => return Err(format!("per_pc[{i}].{k} must be in [0, 1] or null")),
            }
        }
        let cats = row.get("categories").and_then(Value::as_object).ok_or(format!("per_pc[{i}].categories must be an object"))?;
        let mut sum = 0;
        for c in PredictionCategory::ALL {
            sum += cats.get(c.name()).and_then(Value::as_u64).ok_or(format!("per_pc[{i}].categories.{} missing", c.name()))?;
        }
        if cats.len() != PredictionCategory::ALL.len() {
            return Err(format!("per_pc[{i}].categories has unknown keys"));
        }
        if sum != instances || fetch > instances {
            return Err(format!("per_pc[{i}] counts are inconsistent"));
        }
    }
    Ok(())
}

/// Writes `per_pc.csv`, `categories.csv`, `cdf.csv`, `scatter.csv` and
/// `summary.json` into `dir`.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> =
        ["per_pc.csv", "categories.csv", "cdf.csv", "scatter.csv", "summary.json"].iter().map(|f| dir.join(f)).collect();

    let mut w = csv::Writer::from_path(&paths[0])?;
    w.write_record(per_pc_header())?;
    for (&pc, p) in &report.per_pc {
        let mut row = vec![
            Pc(pc).to_string(),
            p.instances.to_string(),
            p.fetch_mispredicts.to_string(),
            format!("{:.6}", p.reduction()),
            p.cost.cycles_saved.to_string(),
            p.cost.cycles_lost.to_string(),
        ];
        row.extend(PredictionCategory::ALL.iter().map(|c| p.categories.get(*c).to_string()));
        w.write_record(row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[1])?;
    w.write_record(category_header())?;
    for (&pc, p) in &report.per_pc {
        let row = std::iter::once(Pc(pc).to_string()).chain(PredictionCategory::ALL.iter().map(|c| p.categories.get(*c).to_string()));
        w.write_record(row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[2])?;
    w.write_record(["pc", "cycle", "cum_fraction"])?;
    for (&pc, p) in &report.per_pc {
        for (cycle, frac) in p.misp_cdf() {
            w.write_record([Pc(pc).to_string(), cycle.to_string(), format!("{frac:.6}")])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[3])?;
    w.write_record(["pc", "tiv_hex", "frequency", "sbr_bias", "fetch_accuracy"])?;
    for &pc in report.per_pc.keys() {
        write_scatter_rows(&mut w, pc, &bias_scatter(report, pc))?;
    }
    w.flush()?;

    let summary = summary_json(report)?;
    debug_assert_eq!(validate_summary(&summary), Ok(()));
    fs::write(&paths[4], serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(paths)
}

fn write_scatter_rows<W: std::io::Write>(w: &mut csv::Writer<W>, pc: u64, points: &[ScatterPoint]) -> Result<()> {
    for s in points {
        w.write_record([
            Pc(pc).to_string(),
            s.tiv_hex.clone(),
            s.frequency.to_string(),
            format!("{:.6}", s.sbr_bias),
            format!("{:.6}", s.fetch_accuracy),
        ])?;
    }
    Ok(())
}

/// Scatter CSV for a single PC.
pub fn write_scatter<W: std::io::Write>(out: W, pc: u64, points: &[ScatterPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pc", "tiv_hex", "frequency", "sbr_bias", "fetch_accuracy"])?;
    write_scatter_rows(&mut w, pc, points)?;
    w.flush()?;
    Ok(())
}

/// Writes `baseline.csv` (per-PC accuracy), `latency.csv` (accuracy per
/// resolution latency) and `cdf.csv` (misprediction resolution CDF).
pub fn emit_baseline(report: &BaselineReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = ["baseline.csv", "latency.csv", "cdf.csv"].iter().map(|f| dir.join(f)).collect();
    let total = report.total_instrs.max(1);

    let mut w = csv::Writer::from_path(&paths[0])?;
    w.write_record(["pc", "instances", "fetch_misp", "accuracy", "bmpki"])?;
    for (&pc, p) in &report.per_pc {
        w.write_record([
            Pc(pc).to_string(),
            p.instances.to_string(),
            p.mispredicts.to_string(),
            format!("{:.6}", p.accuracy().unwrap_or(0.0)),
            format!("{:.6}", 1000.0 * p.mispredicts as f64 / total as f64),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[1])?;
    w.write_record(["pc", "latency", "instances", "accuracy"])?;
    for (&pc, p) in &report.per_pc {
        for (lat, &(c, t)) in &p.by_latency {
            w.write_record([Pc(pc).to_string(), lat.to_string(), t.to_string(), format!("{:.6}", c as f64 / t as f64)])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[2])?;
    w.write_record(["pc", "cycle", "cum_fraction"])?;
    for (&pc, p) in &report.per_pc {
        for (cycle, frac) in p.misp_cdf() {
            w.write_record([Pc(pc).to_string(), cycle.to_string(), format!("{frac:.6}")])?;
        }
    }
    w.flush()?;
    Ok(paths)
}

/// Writes `best_per_pc.csv`, `curves.csv` and `reports.json` (one summary
/// per configuration, in enumeration order).
pub fn emit_sweep(reports: &[ExperimentReport], best: &BestPerPc, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = ["best_per_pc.csv", "curves.csv", "reports.json"].iter().map(|f| dir.join(f)).collect();

    let mut w = csv::Writer::from_path(&paths[0])?;
    w.write_record([
        "pc",
        "config_index",
        "repredict_cycle",
        "co_threshold",
        "include_ytiv",
        "y_threshold",
        "xor_ghist",
        "alloc_accuracy_threshold",
        "reduction",
        "negative",
    ])?;
    for (&pc, b) in &best.per_pc {
        let c = &reports[b.config_index].sbr;
        w.write_record([
            Pc(pc).to_string(),
            b.config_index.to_string(),
            c.tiv.repredict_cycle.to_string(),
            c.tiv.co_threshold.to_string(),
            c.tiv.include_ytiv.to_string(),
            c.tiv.y_threshold.to_string(),
            c.tiv.xor_ghist.to_string(),
            c.alloc_accuracy_threshold.to_string(),
            format!("{:.6}", b.reduction),
            b.negative.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[1])?;
    w.write_record(["repredict_cycle", "rank", "reduction"])?;
    for (rc, curve) in &best.curves {
        for (rank, r) in curve.iter().enumerate() {
            w.write_record([rc.to_string(), rank.to_string(), format!("{r:.6}")])?;
        }
    }
    w.flush()?;

    let all = reports.iter().map(summary_json).collect::<Result<Vec<_>>>()?;
    fs::write(&paths[2], serde_json::to_string_pretty(&all)? + "\n")?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run::{PcReport, TivStats};
    use crate::record::CoreConfig;
    use crate::sbr::SbrConfig;

    fn report_with(stats: &[(&str, u64, u64, u64)]) -> ExperimentReport {
        let mut p = PcReport::default();
        for &(hex, f, t, c) in stats {
            p.tiv_stats.insert(hex.into(), TivStats { frequency: f, taken: t, fetch_correct: c });
        }
        ExperimentReport {
            core: CoreConfig::default(),
            sbr: SbrConfig::default(),
            per_pc: [(0x40, p)].into(),
            total_instrs: 0,
            fetch_mispredicts: 0,
            warmup_records: 0,
        }
    }

    #[test]
    fn bias_values() {
        let rep = report_with(&[("0x1", 10, 10, 9), ("0x2", 10, 6, 5), ("0x3", 10, 4, 5)]);
        let pts = bias_scatter(&rep, 0x40);
        assert_eq!(pts.iter().map(|p| p.sbr_bias).collect::<Vec<_>>(), vec![1.0, 0.6, 0.6]);
        assert!((scatter_diagonal_gap(&pts).unwrap() - 0.1).abs() < 1e-12);
        assert!(bias_scatter(&rep, 0x44).is_empty());
        assert_eq!(scatter_diagonal_gap(&[]), None);
    }

    #[test]
    fn empty_report_gives_header_only_csvs() {
        let dir = tempfile::tempdir().unwrap();
        let mut rep = report_with(&[]);
        rep.per_pc.clear();
        let paths = emit_report(&rep, dir.path()).unwrap();
        for p in &paths[..4] {
            assert_eq!(fs::read_to_string(p).unwrap().lines().count(), 1, "{}", p.display());
        }
        let header = fs::read_to_string(&paths[0]).unwrap();
        assert!(header.starts_with("pc,instances,fetch_misp,reduction,cycles_saved,cycles_lost,ConfAgreeCorr,"));
        let v: Value = serde_json::from_str(&fs::read_to_string(&paths[4]).unwrap()).unwrap();
        validate_summary(&v).unwrap();
    }

    #[test]
    fn schema_check_rejects_damage() {
        let mut rep = report_with(&[]);
        rep.per_pc.get_mut(&0x40).unwrap().instances = 3;
        for _ in 0..3 {
            rep.per_pc.get_mut(&0x40).unwrap().categories.bump(PredictionCategory::NotRepredicted);
        }
        let good = summary_json(&rep).unwrap();
        validate_summary(&good).unwrap();
        let mut bad = good.clone();
        bad["per_pc"][0]["categories"]["MissInc"] = json!(1);
        assert!(validate_summary(&bad).is_err());
        let mut bad = good.clone();
        bad["per_pc"][0]["pc"] = json!(64);
        assert!(validate_summary(&bad).is_err());
        let mut bad = good;
        bad.as_object_mut().unwrap().remove("config");
        assert!(validate_summary(&bad).is_err());
    }
}
