//! Evaluation quantities: evidence, both datapoint-accuracy variants, rule
//! accuracy, repair cost, global accuracy, and fix/preserve percentages.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::label::LabelId;
use crate::model::VoteMatrix;

/// Denominator convention for per-datapoint accuracy. The planner's
/// constraints use the non-abstain count; reports show both readings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccuracyDenominator {
    /// Divide by the number of rules m.
    RuleCount,
    /// Divide by the number of non-abstain votes; 1 by convention when no
    /// rule votes.
    NonAbstain,
}

/// Fraction of rules giving a non-abstain label to the datapoint.
pub fn evidence(row: &[LabelId]) -> f64 {
    if row.is_empty() {
        return 0.0;
    }
    let non_abstain = row.iter().filter(|y| !y.is_abstain()).count();
    non_abstain as f64 / row.len() as f64
}

/// Fraction of correct non-abstain votes under the chosen denominator.
pub fn datapoint_accuracy(row: &[LabelId], gt: LabelId, denom: AccuracyDenominator) -> f64 {
    let non_abstain = row.iter().filter(|y| !y.is_abstain()).count();
    let correct = row
        .iter()
        .filter(|&&y| !y.is_abstain() && y == gt)
        .count();
    match denom {
        AccuracyDenominator::RuleCount => {
            if row.is_empty() {
                0.0
            } else {
                correct as f64 / row.len() as f64
            }
        }
        AccuracyDenominator::NonAbstain => {
            if non_abstain == 0 {
                1.0
            } else {
                correct as f64 / non_abstain as f64
            }
        }
    }
}

/// Fraction of the n datapoints on which the rule returns the ground truth.
pub fn rule_accuracy(column: &[LabelId], gts: &[LabelId]) -> Result<f64> {
    if column.len() != gts.len() {
        return Err(Error::ShapeMismatch(format!(
            "rule column has {} entries for {} ground-truth labels",
            column.len(),
            gts.len()
        )));
    }
    if column.is_empty() {
        return Err(Error::InvalidInput(
            "rule accuracy needs at least one datapoint".into(),
        ));
    }
    let correct = column
        .iter()
        .zip(gts)
        .filter(|(y, g)| !y.is_abstain() && y == g)
        .count();
    Ok(correct as f64 / column.len() as f64)
}

/// Number of cells where the two matrices differ (symmetric).
pub fn repair_cost(before: &VoteMatrix, after: &VoteMatrix) -> Result<usize> {
    if before.len() != after.len() || before.width() != after.width() {
        return Err(Error::ShapeMismatch(format!(
            "matrices are {}x{} and {}x{}",
            before.len(),
            before.width(),
            after.len(),
            after.width()
        )));
    }
    Ok(before
        .rows()
        .iter()
        .zip(after.rows())
        .map(|(b, a)| b.iter().zip(a).filter(|(x, y)| x != y).count())
        .sum())
}

/// Before/after prediction comparison. Abstain predictions count as wrong
/// for global accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionDeltas {
    /// Fraction of previously-wrong predictions now correct; 1 when nothing
    /// was wrong.
    pub fix_pct: f64,
    /// Fraction of previously-correct predictions still correct; 1 when
    /// nothing was correct.
    pub preserve_pct: f64,
    pub global_before: f64,
    pub global_after: f64,
}

pub fn prediction_deltas(
    before: &[LabelId],
    after: &[LabelId],
    gt: &[LabelId],
) -> Result<PredictionDeltas> {
    if before.len() != after.len() || before.len() != gt.len() {
        return Err(Error::ShapeMismatch(format!(
            "prediction vectors have lengths {}, {}, {}",
            before.len(),
            after.len(),
            gt.len()
        )));
    }
    if before.is_empty() {
        return Err(Error::InvalidInput(
            "prediction deltas need at least one datapoint".into(),
        ));
    }
    let n = gt.len();
    let mut was_wrong = 0usize;
    let mut fixed = 0usize;
    let mut was_correct = 0usize;
    let mut kept = 0usize;
    let mut correct_before = 0usize;
    let mut correct_after = 0usize;
    for i in 0..n {
        let b_ok = before[i] == gt[i];
        let a_ok = after[i] == gt[i];
        correct_before += usize::from(b_ok);
        correct_after += usize::from(a_ok);
        if b_ok {
            was_correct += 1;
            kept += usize::from(a_ok);
        } else {
            was_wrong += 1;
            fixed += usize::from(a_ok);
        }
    }
    let ratio_or_one = |num: usize, den: usize| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    Ok(PredictionDeltas {
        fix_pct: ratio_or_one(fixed, was_wrong),
        preserve_pct: ratio_or_one(kept, was_correct),
        global_before: correct_before as f64 / n as f64,
        global_after: correct_after as f64 / n as f64,
    })
}

/// Everything the pipeline reports for one run. Field order is the JSON key
/// order, which downstream tooling relies on.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub global_before: f64,
    pub global_after: f64,
    pub fix_pct: f64,
    pub preserve_pct: f64,
    /// Output-change cost on the seed set (cells changed by the plan).
    pub cost: usize,
    pub plan_optimal: bool,
    pub plan_feasible: bool,
    pub seed_ids: Vec<String>,
    pub per_datapoint: Vec<DatapointMetrics>,
    pub per_rule: Vec<RuleMetrics>,
}

/// Per-seed-datapoint metrics after repair.
#[derive(Debug, Clone, Serialize)]
pub struct DatapointMetrics {
    pub id: String,
    pub evidence: f64,
    /// Accuracy with the rule-count denominator.
    pub accuracy_over_rules: f64,
    /// Accuracy with the non-abstain denominator (the planner's form).
    pub accuracy_over_votes: f64,
}

/// Per-rule accuracy over the ground-truth-bearing datapoints.
#[derive(Debug, Clone, Serialize)]
pub struct RuleMetrics {
    pub name: String,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
}
