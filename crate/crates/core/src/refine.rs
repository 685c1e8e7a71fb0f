//! Realizes planned output changes on individual rules: per-path repair with
//! impurity-guided, greedy, or exhaustive predicate selection, and the
//! per-rule driver that stitches path repairs together.
//!
//! Repairs work one root-to-leaf path at a time. Refining one path never
//! changes the outcome for datapoints whose path is a different leaf path,
//! so paths can be fixed independently and the per-path sequences
//! concatenated.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use num_rational::Ratio;

use crate::datapoint::Datapoint;
use crate::error::{Error, Result};
use crate::label::LabelId;
use crate::planner::RepairPlan;
use crate::predicate::{EvalEnv, Predicate};
use crate::rule::{Path, RefinementSequence, RefinementStep, RuleTree};
use crate::space::candidate_predicates;

/// Datapoints paired with the label the repaired rule must assign them.
pub type TargetedLabels<'a> = [(&'a Datapoint, LabelId)];

/// Which per-path repair algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathAlgo {
    Entropy,
    Greedy,
    Brute,
}

impl std::str::FromStr for PathAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy" => Ok(PathAlgo::Entropy),
            "greedy" => Ok(PathAlgo::Greedy),
            "brute" => Ok(PathAlgo::Brute),
            other => Err(Error::InvalidInput(format!(
                "unknown path algorithm `{other}` (expected entropy|greedy|brute)"
            ))),
        }
    }
}

/// Gini impurity of a label multiset, kept as an exact rational in
/// [0, 1 - 1/|Y|]. Zero iff the multiset is pure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct GiniScore(Ratio<u64>);

impl GiniScore {
    pub fn as_ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn value(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn is_zero(&self) -> bool {
        *self.0.numer() == 0
    }
}

/// `I_G(Z) = 1 - sum_y p(y)^2` with `p(y) = count(y) / |Z|`.
pub fn gini(labels: &[LabelId]) -> Result<GiniScore> {
    if labels.is_empty() {
        return Err(Error::InvalidInput(
            "gini of an empty label multiset is undefined".into(),
        ));
    }
    Ok(GiniScore(gini_ratio(labels)))
}

fn gini_ratio(labels: &[LabelId]) -> Ratio<u64> {
    let mut counts: BTreeMap<LabelId, u64> = BTreeMap::new();
    for &y in labels {
        *counts.entry(y).or_insert(0) += 1;
    }
    let n = labels.len() as u64;
    let sum_sq: u64 = counts.values().map(|&c| c * c).sum();
    Ratio::new(n * n - sum_sq, n * n)
}

/// Weighted impurity of splitting `targets` by `p`:
/// `(|Z_false| * I_G(Z_false) + |Z_true| * I_G(Z_true)) / |Z|`.
/// An empty side contributes zero.
pub fn split_score(targets: &TargetedLabels, p: &Predicate, env: &EvalEnv) -> Result<GiniScore> {
    if targets.is_empty() {
        return Err(Error::InvalidInput(
            "split_score of an empty target set is undefined".into(),
        ));
    }
    let mut on_true = Vec::new();
    let mut on_false = Vec::new();
    for &(x, y) in targets {
        if p.eval(x, env)? {
            on_true.push(y);
        } else {
            on_false.push(y);
        }
    }
    Ok(GiniScore(weighted_gini(&on_false, &on_true)))
}

fn weighted_gini(on_false: &[LabelId], on_true: &[LabelId]) -> Ratio<u64> {
    let total = (on_false.len() + on_true.len()) as u64;
    let mut score = Ratio::new(0, 1);
    for side in [on_false, on_true] {
        if !side.is_empty() {
            score += gini_ratio(side) * Ratio::new(side.len() as u64, total);
        }
    }
    score
}

fn is_pure(targets: &TargetedLabels) -> bool {
    targets.windows(2).all(|w| w[0].1 == w[1].1)
}

/// Most frequent desired label; ties go to the smallest label id.
fn majority_label(targets: &TargetedLabels) -> LabelId {
    let mut counts: BTreeMap<LabelId, usize> = BTreeMap::new();
    for &(_, y) in targets {
        *counts.entry(y).or_insert(0) += 1;
    }
    let mut best = (LabelId(0), 0usize);
    for (&label, &count) in &counts {
        if count > best.1 {
            best = (label, count);
        }
    }
    best.0
}

/// Rejects target sets containing an indistinguishable pair with different
/// desired labels; no partitioning predicate space can repair those.
fn check_solvable(targets: &TargetedLabels) -> Result<()> {
    for (i, &(x1, y1)) in targets.iter().enumerate() {
        for &(x2, y2) in &targets[i + 1..] {
            if y1 != y2 && x1.indistinguishable_from(x2) {
                return Err(Error::UnsolvableTargets(x1.id.clone(), x2.id.clone()));
            }
        }
    }
    Ok(())
}

fn check_on_path(
    rule: &RuleTree,
    path: &Path,
    targets: &TargetedLabels,
    env: &EvalEnv,
) -> Result<()> {
    for &(x, _) in targets {
        let actual = rule.path_of(x, env)?;
        if actual != *path {
            return Err(Error::InvalidInput(format!(
                "datapoint `{}` follows path `{}`, not the repaired path `{}`",
                x.id,
                actual.as_bits(),
                path.as_bits()
            )));
        }
    }
    Ok(())
}

/// Splits `targets` by `p` into (false side, true side).
fn partition_by<'a>(
    targets: &TargetedLabels<'a>,
    p: &Predicate,
    env: &EvalEnv,
) -> Result<(Vec<(&'a Datapoint, LabelId)>, Vec<(&'a Datapoint, LabelId)>)> {
    let mut on_false = Vec::new();
    let mut on_true = Vec::new();
    for &(x, y) in targets {
        if p.eval(x, env)? {
            on_true.push((x, y));
        } else {
            on_false.push((x, y));
        }
    }
    Ok((on_false, on_true))
}

/// Shared split loop. `choose` picks the splitting predicate for the current
/// (still impure) subset. Each split's true child receives the subset's
/// majority label; a pure false side receives its desired label directly,
/// an impure one inherits the replaced leaf's label and is re-queued. One
/// split strictly shrinks both sides, so at most |Z| - 1 splits occur and
/// the lemma bound rcost <= |X(P)| holds.
fn split_repair<F>(
    rule: &RuleTree,
    path: &Path,
    targets: &TargetedLabels,
    env: &EvalEnv,
    mut choose: F,
) -> Result<RefinementSequence>
where
    F: FnMut(&TargetedLabels, &EvalEnv) -> Result<Predicate>,
{
    let mut seq = RefinementSequence::new();
    if targets.is_empty() {
        return Ok(seq);
    }
    check_solvable(targets)?;
    check_on_path(rule, path, targets, env)?;

    let leaf_label = rule.leaf_label_at(path)?;
    if is_pure(targets) {
        let desired = targets[0].1;
        if desired != leaf_label {
            seq.push(RefinementStep::Relabel {
                path: path.clone(),
                label: desired,
            });
        }
        return Ok(seq);
    }

    let mut current = rule.clone();
    let mut queue: VecDeque<(Path, Vec<(&Datapoint, LabelId)>, LabelId)> = VecDeque::new();
    queue.push_back((path.clone(), targets.to_vec(), leaf_label));
    while let Some((at, subset, inherited)) = queue.pop_front() {
        let pred = choose(&subset, env)?;
        let (on_false, on_true) = partition_by(&subset, &pred, env)?;
        debug_assert!(!on_false.is_empty() && !on_true.is_empty());

        let false_label = if is_pure(&on_false) && !on_false.is_empty() {
            on_false[0].1
        } else {
            inherited
        };
        let true_label = majority_label(&on_true);
        let step = RefinementStep::Split {
            path: at.clone(),
            pred,
            false_label,
            true_label,
        };
        current = current.apply_refinement(&step)?;
        seq.push(step);

        if !is_pure(&on_false) {
            queue.push_back((at.child(false), on_false, false_label));
        }
        if !is_pure(&on_true) {
            queue.push_back((at.child(true), on_true, true_label));
        }
    }
    Ok(seq)
}

/// Per-path repair choosing, at every split, the candidate predicate with
/// the lowest weighted Gini impurity over the current subset. Candidates are
/// generated once from the whole path's target set; ties go to the canonical
/// predicate order. Pure target sets short-circuit to an empty sequence or a
/// single relabel.
pub fn entropy_path_repair(
    rule: &RuleTree,
    path: &Path,
    targets: &TargetedLabels,
    env: &EvalEnv,
) -> Result<RefinementSequence> {
    let candidates = if targets.is_empty() || is_pure(targets) {
        Vec::new()
    } else {
        let xs: Vec<&Datapoint> = targets.iter().map(|&(x, _)| x).collect();
        candidate_predicates(&xs, env)?
    };
    split_repair(rule, path, targets, env, move |subset, env| {
        let mut best: Option<(GiniScore, &Predicate)> = None;
        for cand in &candidates {
            let xs_true = subset
                .iter()
                .map(|&(x, _)| cand.eval(x, env))
                .collect::<Result<Vec<bool>>>()?;
            // Predicates constant on the current subset split nothing.
            if xs_true.iter().all(|&b| b) || xs_true.iter().all(|&b| !b) {
                continue;
            }
            let score = split_score(subset, cand, env)?;
            if best.as_ref().is_none_or(|(s, _)| score < *s) {
                best = Some((score, cand));
            }
        }
        match best {
            Some((_, pred)) => Ok(pred.clone()),
            None => {
                let (x1, x2) = first_mixed_pair(subset);
                Err(Error::NoSeparator(x1.to_string(), x2.to_string()))
            }
        }
    })
}

/// Per-path repair that splits on the first separator of the first
/// mixed-label pair (pair order by datapoint id). Cheap, correct, and
/// bounded by |X(P)| steps, but not minimal.
pub fn greedy_path_repair(
    rule: &RuleTree,
    path: &Path,
    targets: &TargetedLabels,
    env: &EvalEnv,
) -> Result<RefinementSequence> {
    split_repair(rule, path, targets, env, |subset, _env| {
        let mut pairs: Vec<(&Datapoint, LabelId)> = subset.to_vec();
        pairs.sort_by(|a, b| a.0.id.cmp(&b.0.id));
        for (i, &(x1, y1)) in pairs.iter().enumerate() {
            for &(x2, y2) in &pairs[i + 1..] {
                if y1 != y2 {
                    return crate::space::separator_predicate(x1, x2);
                }
            }
        }
        unreachable!("split_repair only asks for predicates on impure subsets");
    })
}

fn first_mixed_pair<'a>(subset: &TargetedLabels<'a>) -> (&'a str, &'a str) {
    for (i, &(x1, y1)) in subset.iter().enumerate() {
        for &(x2, y2) in &subset[i + 1..] {
            if y1 != y2 {
                return (&x1.id, &x2.id);
            }
        }
    }
    unreachable!("called on a pure subset")
}

/// Guard on the exhaustive path repair.
pub const BRUTE_FORCE_PATH_LIMIT: usize = 8;

/// Exhaustive per-path repair: finds a correct repair with the minimum
/// number of steps over all trees built from the candidate predicates.
///
/// Works over candidate signatures as bitmasks of the target set, memoizing
/// the minimum split count per subset; a repair of size <= |X(P)| always
/// exists, so the search is finite.
pub fn brute_force_path_repair(
    rule: &RuleTree,
    path: &Path,
    targets: &TargetedLabels,
    env: &EvalEnv,
) -> Result<RefinementSequence> {
    if targets.len() > BRUTE_FORCE_PATH_LIMIT {
        return Err(Error::SizeGuard {
            what: "brute-force path repair target set",
            size: targets.len(),
            limit: BRUTE_FORCE_PATH_LIMIT,
        });
    }
    if targets.is_empty() || is_pure(targets) {
        // Same short-circuits as the other algorithms; nothing to search.
        return split_repair(rule, path, targets, env, |_, _| {
            unreachable!("pure target sets never split")
        });
    }
    check_solvable(targets)?;
    check_on_path(rule, path, targets, env)?;

    let xs: Vec<&Datapoint> = targets.iter().map(|&(x, _)| x).collect();
    let labels: Vec<LabelId> = targets.iter().map(|&(_, y)| y).collect();
    let candidates = candidate_predicates(&xs, env)?;
    let masks: Vec<u32> = candidates
        .iter()
        .map(|p| {
            let mut m = 0u32;
            for (i, x) in xs.iter().enumerate() {
                if p.eval(x, env)? {
                    m |= 1 << i;
                }
            }
            Ok(m)
        })
        .collect::<Result<Vec<u32>>>()?;

    let full: u32 = (1u32 << targets.len()) - 1;
    let mut memo: Vec<Option<(usize, usize)>> = vec![None; (full + 1) as usize];

    fn mask_pure(mask: u32, labels: &[LabelId]) -> bool {
        let mut seen: Option<LabelId> = None;
        for (i, &y) in labels.iter().enumerate() {
            if mask & (1 << i) != 0 {
                match seen {
                    Some(prev) if prev != y => return false,
                    _ => seen = Some(y),
                }
            }
        }
        true
    }

    // Minimum number of splits shattering `mask` into pure blocks, plus the
    // index of the first candidate achieving it.
    fn solve(
        mask: u32,
        labels: &[LabelId],
        masks: &[u32],
        memo: &mut Vec<Option<(usize, usize)>>,
    ) -> (usize, usize) {
        if let Some(hit) = memo[mask as usize] {
            return hit;
        }
        let mut best: Option<(usize, usize)> = None;
        for (c, &cmask) in masks.iter().enumerate() {
            let t = mask & cmask;
            let f = mask & !cmask;
            if t == 0 || f == 0 {
                continue;
            }
            let mut cost = 1;
            if !mask_pure(f, labels) {
                cost += solve(f, labels, masks, memo).0;
            }
            if !mask_pure(t, labels) {
                cost += solve(t, labels, masks, memo).0;
            }
            if best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, c));
            }
        }
        let best = best.expect("solvable target sets always admit a separator candidate");
        memo[mask as usize] = Some(best);
        best
    }

    fn emit(
        at: Path,
        mask: u32,
        inherited: LabelId,
        labels: &[LabelId],
        masks: &[u32],
        candidates: &[Predicate],
        memo: &mut Vec<Option<(usize, usize)>>,
        seq: &mut RefinementSequence,
    ) {
        let (_, c) = solve(mask, labels, masks, memo);
        let t = mask & masks[c];
        let f = mask & !masks[c];
        let first_of = |m: u32| {
            (0..labels.len())
                .find(|i| m & (1 << i) != 0)
                .map(|i| labels[i])
                .expect("non-empty side")
        };
        let false_label = if mask_pure(f, labels) {
            first_of(f)
        } else {
            inherited
        };
        let true_label = if mask_pure(t, labels) {
            first_of(t)
        } else {
            majority_of_mask(t, labels)
        };
        seq.push(RefinementStep::Split {
            path: at.clone(),
            pred: candidates[c].clone(),
            false_label,
            true_label,
        });
        if !mask_pure(f, labels) {
            emit(at.child(false), f, false_label, labels, masks, candidates, memo, seq);
        }
        if !mask_pure(t, labels) {
            emit(at.child(true), t, true_label, labels, masks, candidates, memo, seq);
        }
    }

    fn majority_of_mask(mask: u32, labels: &[LabelId]) -> LabelId {
        let mut counts: BTreeMap<LabelId, usize> = BTreeMap::new();
        for (i, &y) in labels.iter().enumerate() {
            if mask & (1 << i) != 0 {
                *counts.entry(y).or_insert(0) += 1;
            }
        }
        let mut best = (LabelId(0), 0usize);
        for (&label, &count) in &counts {
            if count > best.1 {
                best = (label, count);
            }
        }
        best.0
    }

    let inherited = rule.leaf_label_at(path)?;
    let mut seq = RefinementSequence::new();
    emit(
        path.clone(),
        full,
        inherited,
        &labels,
        &masks,
        &candidates,
        &mut memo,
        &mut seq,
    );
    debug_assert_eq!(rule.apply_sequence(&seq).is_ok(), true);
    Ok(seq)
}

fn run_path_algo(
    algo: PathAlgo,
    rule: &RuleTree,
    path: &Path,
    targets: &TargetedLabels,
    env: &EvalEnv,
) -> Result<RefinementSequence> {
    match algo {
        PathAlgo::Entropy => entropy_path_repair(rule, path, targets, env),
        PathAlgo::Greedy => greedy_path_repair(rule, path, targets, env),
        PathAlgo::Brute => brute_force_path_repair(rule, path, targets, env),
    }
}

/// Repairs one rule so it assigns every targeted datapoint its desired
/// label: partitions the targets by the path they take, repairs each path in
/// bit-string order, and concatenates the sequences.
pub fn single_rule_refine(
    rule: &RuleTree,
    targets: &TargetedLabels,
    algo: PathAlgo,
    env: &EvalEnv,
) -> Result<RefinementSequence> {
    if targets.is_empty() {
        return Err(Error::InvalidInput(
            "single_rule_refine requires a non-empty target set".into(),
        ));
    }
    for (i, &(x1, _)) in targets.iter().enumerate() {
        for &(x2, _) in &targets[i + 1..] {
            if x1.id == x2.id {
                return Err(Error::DuplicateId(x1.id.clone()));
            }
        }
    }
    check_solvable(targets)?;

    let mut by_path: BTreeMap<Path, Vec<(&Datapoint, LabelId)>> = BTreeMap::new();
    for &(x, y) in targets {
        let path = rule.path_of(x, env)?;
        by_path.entry(path).or_default().push((x, y));
    }

    let mut seq = RefinementSequence::new();
    let mut current = rule.clone();
    for (path, group) in by_path {
        let fix = run_path_algo(algo, &current, &path, &group, env)?;
        current = current.apply_sequence(&fix)?;
        seq.extend(fix);
    }
    Ok(seq)
}

/// Repaired rules with the sequences that produced them, for audit logs.
#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub rules: Vec<RuleTree>,
    pub sequences: Vec<RefinementSequence>,
}

/// Realizes a repair plan: for every rule, refines it to reproduce the
/// plan's target column on the seed datapoints. Rules are independent, so
/// each is repaired against its own column.
pub fn apply_repair_plan(
    rules: &[RuleTree],
    plan: &RepairPlan,
    xs: &[&Datapoint],
    algo: PathAlgo,
    env: &EvalEnv,
) -> Result<RepairOutcome> {
    if plan.targets.len() != xs.len() {
        return Err(Error::ShapeMismatch(format!(
            "plan has {} rows but {} datapoints were supplied",
            plan.targets.len(),
            xs.len()
        )));
    }
    if plan.targets.first().is_some_and(|row| row.len() != rules.len()) {
        return Err(Error::ShapeMismatch(format!(
            "plan has {} columns but {} rules were supplied",
            plan.targets[0].len(),
            rules.len()
        )));
    }
    let mut out = RepairOutcome {
        rules: Vec::with_capacity(rules.len()),
        sequences: Vec::with_capacity(rules.len()),
    };
    for (j, rule) in rules.iter().enumerate() {
        let targets: Vec<(&Datapoint, LabelId)> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, plan.targets[i][j]))
            .collect();
        let seq = single_rule_refine(rule, &targets, algo, env)?;
        out.rules.push(rule.apply_sequence(&seq)?);
        out.sequences.push(seq);
    }
    Ok(out)
}
