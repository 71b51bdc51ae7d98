use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::record::PredictionCategory;

/// Cycles won and lost by overriding the fetch prediction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub cycles_saved: u64,
    pub cycles_lost: u64,
    /// Cycle totals attributed to each category, indexed like [`PredictionCategory::ALL`].
    pub per_category: [u64; 11],
}

impl CostLedger {
    pub fn net_saved(&self) -> i64 {
        self.cycles_saved as i64 - self.cycles_lost as i64
    }

    pub fn merge(&mut self, other: &CostLedger) {
        self.cycles_saved += other.cycles_saved;
        self.cycles_lost += other.cycles_lost;
        for (a, b) in self.per_category.iter_mut().zip(other.per_category) {
            *a += b;
        }
    }
}

/// Books the cycle effect of one categorised branch.
///
/// A correct override saves the remainder of the resolution latency; a wrong
/// one throws that away and pays a pipeline refill on top.
pub fn settle_cost(
    ledger: &mut CostLedger,
    category: PredictionCategory,
    resolve_latency: u32,
    repredict_cycle: u32,
    refill_penalty: u32,
) -> Result<(), SimError> {
    if category == PredictionCategory::NotRepredicted {
        return Ok(());
    }
    if resolve_latency < repredict_cycle {
        return Err(SimError::ResolvedBeforeRepredict { latency: resolve_latency, repredict: repredict_cycle });
    }
    let remaining = (resolve_latency - repredict_cycle) as u64;
    match category {
        PredictionCategory::ConfDisaCorr => {
            ledger.cycles_saved += remaining;
            ledger.per_category[category.index()] += remaining;
        }
        PredictionCategory::ConfDisaInc => {
            let lost = remaining + refill_penalty as u64;
            ledger.cycles_lost += lost;
            ledger.per_category[category.index()] += lost;
        }
        _ => {}
    }
    Ok(())
}

/// Expected (benefit, penalty) of blindly flipping the fetch prediction of
/// the branches still unresolved at some cycle.
///
/// `frac_unresolved` is the fraction of instances still in flight and
/// `accuracy` the fetch predictor's accuracy on them: every wrong fetch
/// prediction among them is fixed early, every right one is broken.
pub fn expected_tradeoff(frac_unresolved: f64, accuracy: f64) -> (f64, f64) {
    debug_assert!((0.0..=1.0).contains(&frac_unresolved) && (0.0..=1.0).contains(&accuracy));
    ((1.0 - accuracy) * frac_unresolved, accuracy * frac_unresolved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use PredictionCategory::*;

    #[test]
    fn saved_and_lost() {
        let mut l = CostLedger::default();
        settle_cost(&mut l, ConfDisaCorr, 40, 16, 15).unwrap();
        assert_eq!(l.cycles_saved, 24);
        settle_cost(&mut l, ConfDisaInc, 40, 16, 15).unwrap();
        assert_eq!(l.cycles_lost, 39);
        assert_eq!(l.per_category[ConfDisaCorr.index()], 24);
        assert_eq!(l.per_category[ConfDisaInc.index()], 39);
        assert_eq!(l.net_saved(), -15);
    }

    #[test]
    fn non_override_categories_are_free() {
        let mut l = CostLedger::default();
        for c in [ConfAgreeCorr, ConfAgreeInc, NotConfDisaCorr, MissInc] {
            settle_cost(&mut l, c, 40, 16, 15).unwrap();
        }
        settle_cost(&mut l, NotRepredicted, 8, 16, 15).unwrap();
        assert_eq!(l, CostLedger::default());
    }

    #[test]
    fn latency_below_repredict_is_an_error() {
        let mut l = CostLedger::default();
        assert!(settle_cost(&mut l, ConfDisaCorr, 8, 16, 15).is_err());
    }

    #[test]
    fn tradeoff() {
        let (b, p) = expected_tradeoff(0.017, 0.178);
        assert!((b - 0.013974).abs() < 1e-9 && (p - 0.003026).abs() < 1e-9);
        assert_eq!(expected_tradeoff(0.0, 0.3), (0.0, 0.0));
        assert_eq!(expected_tradeoff(1.0, 1.0), (0.0, 1.0));
    }
}
