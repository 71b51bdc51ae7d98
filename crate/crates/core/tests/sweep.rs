use sbr_core::harness::{emit_sweep, enumerate_configs, run_sweep, select_best_per_pc, SweepSpec, YtivMode};
use sbr_core::sbr::SbrConfig;
use sbr_core::synth::{gen_qsort_workload, qsort_pcs, QsortWorkloadParams};
use sbr_core::tage::TageConfig;
use sbr_core::CoreConfig;

/// Number of configurations from first principles: one excluded setting
/// plus floor(log2 rc) included thresholds per re-predict cycle, times
/// the remaining axes.
fn closed_form(spec: &SweepSpec) -> usize {
    let ytiv: usize = spec
        .repredict_cycles
        .iter()
        .map(|&rc| {
            let mut n = 0;
            if spec.ytiv_modes.contains(&YtivMode::Excluded) {
                n += 1;
            }
            if spec.ytiv_modes.contains(&YtivMode::Included) {
                n += (31 - rc.leading_zeros()) as usize;
            }
            n
        })
        .sum();
    ytiv * spec.co_thresholds.len() * spec.xor_ghist.len() * spec.alloc_accuracy_thresholds.len()
}

#[test]
fn full_space_cardinality() {
    let spec = SweepSpec::default();
    let configs = enumerate_configs(&spec, &SbrConfig::default());
    assert_eq!(configs.len(), closed_form(&spec));
    assert_eq!(configs.len(), 504);
    for c in &configs {
        c.validate().unwrap();
    }
}

#[test]
fn partial_spaces_match_closed_form() {
    let spec = SweepSpec { repredict_cycles: vec![1, 3, 5, 64], ytiv_modes: vec![YtivMode::Included], ..Default::default() };
    assert_eq!(enumerate_configs(&spec, &SbrConfig::default()).len(), closed_form(&spec));
}

fn small_spec(threads: usize) -> SweepSpec {
    SweepSpec {
        repredict_cycles: vec![4, 16],
        co_thresholds: vec![8, 128],
        ytiv_modes: vec![YtivMode::Excluded, YtivMode::Included],
        xor_ghist: vec![false, true],
        alloc_accuracy_thresholds: vec![0.99],
        threads,
        ..Default::default()
    }
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let trace = gen_qsort_workload(&QsortWorkloadParams { table_size: 20_000, ..Default::default() }).unwrap();
    let base = SbrConfig { h2p_set: vec![qsort_pcs::BRANCH_A, qsort_pcs::BRANCH_B], ..Default::default() };
    let core = CoreConfig::default();
    let tage = TageConfig::default();

    let one = run_sweep(&trace, &core, &tage, &base, &small_spec(1)).unwrap();
    let four = run_sweep(&trace, &core, &tage, &base, &small_spec(4)).unwrap();
    assert_eq!(one.len(), closed_form(&small_spec(1)));
    for r in &one {
        r.check_invariants().unwrap();
    }

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (reports, dir) in [(&one, &dirs[0]), (&four, &dirs[1])] {
        emit_sweep(reports, &select_best_per_pc(reports), dir.path()).unwrap();
    }
    for f in ["best_per_pc.csv", "curves.csv", "reports.json"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        assert!(a == b, "{f} differs between 1 and 4 threads");
    }
}
