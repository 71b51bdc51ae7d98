use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use sbr_core::harness::{
    bias_scatter, emit_baseline, emit_report, emit_sweep, run_baseline, run_sbr, run_sweep, select_best_per_pc,
    write_scatter, ExperimentConfig, Pc,
};
use sbr_core::synth::{gen_heap_workload, gen_pattern_workload, gen_qsort_workload, HeapWorkloadParams, QsortWorkloadParams};
use sbr_core::trace::{read_trace, write_trace};
use sbr_core::{BranchRecord, ConfigError, Error, TraceError};

#[derive(Parser)]
#[command(name = "sbr", version, about = "Timing-based speculative branch resolution simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Workload {
    Qsort,
    Heap,
    Pattern,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic trace.
    Gen {
        #[arg(value_enum)]
        workload: Workload,
        /// Output trace file; `-` for stdout.
        #[arg(short, long)]
        out: PathBuf,
        /// Generator parameters (JSON); defaults otherwise.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Overrides the seed from the parameters.
        #[arg(long)]
        seed: Option<u64>,
        /// T/N pattern for the `pattern` workload.
        #[arg(long, default_value = "TTN")]
        pattern: String,
        #[arg(long, default_value_t = 1000)]
        repeats: usize,
        #[arg(long, default_value_t = 4)]
        latency: u32,
    },
    /// Fetch-predictor statistics of a trace.
    Baseline {
        #[arg(short, long)]
        trace: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// One SBR experiment.
    Run {
        #[arg(short, long)]
        trace: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Design-space sweep with best-per-PC selection.
    Sweep {
        #[arg(short, long)]
        trace: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        /// Overrides `sweep.threads`.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Per-vector bias scatter of one PC.
    Scatter {
        #[arg(short, long)]
        trace: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long)]
        pc: Pc,
        /// Output CSV; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<TraceError>() {
            return 3;
        }
        match cause.downcast_ref::<Error>() {
            Some(Error::Config(_)) => return 2,
            Some(Error::Trace(_)) => return 3,
            _ => {}
        }
    }
    1
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| ConfigError::new(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_json(&text).map_err(|e| ConfigError::new(format!("{}: {}", p.display(), e.0)))
        }
    }
}

fn load_params<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, ConfigError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| ConfigError::new(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| ConfigError::new(format!("{}: {e}", p.display())))
        }
    }
}

fn load_trace(path: &Path) -> anyhow::Result<Vec<BranchRecord>> {
    let f = File::open(path).map_err(TraceError::from).with_context(|| format!("reading {}", path.display()))?;
    let trace = read_trace(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
    if trace.is_empty() {
        return Err(TraceError::Invalid { seq: 0, msg: "trace has no records".into() })
            .with_context(|| format!("reading {}", path.display()));
    }
    Ok(trace)
}

/// H2P set: explicit from the config, or selected from a baseline pass.
fn h2p_set(cfg: &ExperimentConfig, trace: &[BranchRecord]) -> anyhow::Result<Vec<u64>> {
    if !cfg.sbr.h2p_auto {
        return Ok(cfg.sbr.h2p_pcs.iter().map(|p| p.0).collect());
    }
    let base = run_baseline(trace, &cfg.tage, &cfg.core)?;
    let sel = base.select_h2p()?;
    if sel.low_coverage {
        eprintln!("warning: H2P set covers only {:.1}% of mispredictions", 100.0 * sel.coverage);
    }
    if sel.pcs.is_empty() {
        return Err(ConfigError::new("no branch qualifies as H2P; list sbr.h2p_pcs explicitly").into());
    }
    Ok(sel.pcs)
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn dispatch(cmd: Cmd) -> anyhow::Result<()> {
    match cmd {
        Cmd::Gen { workload, out, params, seed, pattern, repeats, latency } => {
            let trace = match workload {
                Workload::Qsort => {
                    let mut p: QsortWorkloadParams = load_params(params.as_deref())?;
                    p.seed = seed.unwrap_or(p.seed);
                    gen_qsort_workload(&p)?
                }
                Workload::Heap => {
                    let mut p: HeapWorkloadParams = load_params(params.as_deref())?;
                    p.seed = seed.unwrap_or(p.seed);
                    gen_heap_workload(&p)?
                }
                Workload::Pattern => gen_pattern_workload(&pattern, repeats, latency)?,
            };
            if out == Path::new("-") {
                write_trace(&trace, BufWriter::new(io::stdout().lock()))?;
            } else {
                let f = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
                write_trace(&trace, BufWriter::new(f))?;
                eprintln!("{} records -> {}", trace.len(), out.display());
            }
        }
        Cmd::Baseline { trace, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let trace = load_trace(&trace)?;
            let report = run_baseline(&trace, &cfg.tage, &cfg.core)?;
            eprintln!("baseline BMPKI {:.4}", report.bmpki()?);
            print_paths(&emit_baseline(&report, &out)?);
        }
        Cmd::Run { trace, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let trace = load_trace(&trace)?;
            let sbr = cfg.sbr_config(h2p_set(&cfg, &trace)?);
            let report = run_sbr(&trace, &cfg.core, &cfg.tage, &sbr)?;
            report.check_invariants().map_err(|e| anyhow::anyhow!("internal bookkeeping error: {e}"))?;
            eprintln!("BMPKI {:.4} -> {:.4}", report.baseline_bmpki()?, report.sbr_bmpki()?);
            print_paths(&emit_report(&report, &out)?);
        }
        Cmd::Sweep { trace, config, out, threads } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(t) = threads {
                cfg.sweep.threads = t;
            }
            let trace = load_trace(&trace)?;
            let base = cfg.sbr_config(h2p_set(&cfg, &trace)?);
            let reports = run_sweep(&trace, &cfg.core, &cfg.tage, &base, &cfg.sweep)?;
            for r in &reports {
                r.check_invariants().map_err(|e| anyhow::anyhow!("internal bookkeeping error: {e}"))?;
            }
            let best = select_best_per_pc(&reports);
            eprintln!("{} configurations", reports.len());
            print_paths(&emit_sweep(&reports, &best, &out)?);
        }
        Cmd::Scatter { trace, config, pc, out } => {
            let cfg = load_config(config.as_deref())?;
            let trace = load_trace(&trace)?;
            let mut h2p = h2p_set(&cfg, &trace)?;
            if !h2p.contains(&pc.0) {
                h2p.push(pc.0);
            }
            let report = run_sbr(&trace, &cfg.core, &cfg.tage, &cfg.sbr_config(h2p))?;
            let points = bias_scatter(&report, pc.0);
            match out {
                Some(path) => {
                    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    write_scatter(BufWriter::new(f), pc.0, &points)?;
                }
                None => {
                    let stdout = io::stdout().lock();
                    write_scatter(stdout, pc.0, &points)?;
                }
            }
            io::stdout().flush()?;
        }
    }
    Ok(())
}
