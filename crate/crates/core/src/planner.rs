//! Plans minimum-change repairs of rule outputs on the labeled seed set.
//!
//! The planner solves the integer program exactly: pick a target label for
//! every (datapoint, rule) cell so that each datapoint keeps enough
//! non-abstain evidence, enough of that evidence is correct, and every rule
//! stays accurate enough on its non-abstain outputs, minimizing the number
//! of changed cells.
//!
//! Search runs over the reduced per-cell domain {keep, abstain, ground
//! truth}: changing a cell to any other wrong label is dominated, which the
//! full-domain oracle in the tests confirms. Thresholds are exact rationals,
//! so boundary cases like "at least half of three rules" round the same way
//! the worked examples do.

use std::time::{Duration, Instant};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::label::{LabelId, ABSTAIN};

/// Threshold in [0, 1], kept exact.
pub type Theta = Ratio<i64>;

/// Parses "0.7", ".5", or "1/3" into an exact rational in [0, 1].
pub fn parse_theta(s: &str) -> Result<Theta> {
    let bad = |_| Error::InvalidInput(format!("invalid threshold `{s}`"));
    if s.contains('-') {
        return Err(Error::InvalidInput(format!(
            "threshold `{s}` is outside [0, 1]"
        )));
    }
    let value = if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(bad)?;
        let q: i64 = q.trim().parse().map_err(bad)?;
        if q == 0 {
            return Err(Error::InvalidInput(format!("invalid threshold `{s}`")));
        }
        Ratio::new(p, q)
    } else if let Some((int, frac)) = s.split_once('.') {
        let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(bad)? };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::InvalidInput(format!("invalid threshold `{s}`")));
        }
        let scale = 10i64.pow(frac.len() as u32);
        let frac: i64 = frac.parse().map_err(bad)?;
        Ratio::new(int * scale + frac, scale)
    } else {
        let int: i64 = s.trim().parse().map_err(bad)?;
        Ratio::from_integer(int)
    };
    if value < Ratio::from_integer(0) || value > Ratio::from_integer(1) {
        return Err(Error::InvalidInput(format!(
            "threshold `{s}` is outside [0, 1]"
        )));
    }
    Ok(value)
}

/// Formats a theta in the same syntax `parse_theta` accepts.
pub fn theta_to_string(t: Theta) -> String {
    if t.is_integer() {
        t.numer().to_string()
    } else {
        format!("{}/{}", t.numer(), t.denom())
    }
}

/// The three problem thresholds: per-datapoint accuracy, per-datapoint
/// evidence, and per-rule accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thetas {
    pub acc: Theta,
    pub evidence: Theta,
    pub rule_acc: Theta,
}

impl Thetas {
    pub fn uniform(t: Theta) -> Self {
        Thetas {
            acc: t,
            evidence: t,
            rule_acc: t,
        }
    }
}

/// One planning problem: the n x m matrix of current rule outputs on the
/// seed set, the ground-truth labels, thresholds, and the vocabulary size.
///
/// Constraint families, with c = correct non-abstain cells and e =
/// non-abstain cells:
///
/// - per datapoint i: `sum_j c_ij >= acc * sum_j e_ij` and
///   `sum_j e_ij >= evidence * m`;
/// - per rule j: `sum_i c_ij >= rule_acc * n` (the rule-accuracy definition
///   divides by the number of seed datapoints; the published solution to
///   the worked 3x3 example is minimal only under this form).
#[derive(Debug, Clone)]
pub struct RepairInstance {
    /// `outputs[i][j]` = current output of rule j on seed datapoint i.
    pub outputs: Vec<Vec<LabelId>>,
    /// Ground truth per seed datapoint; never the abstain label.
    pub ground_truth: Vec<LabelId>,
    pub thetas: Thetas,
    pub label_count: usize,
}

impl RepairInstance {
    pub fn new(
        outputs: Vec<Vec<LabelId>>,
        ground_truth: Vec<LabelId>,
        thetas: Thetas,
        label_count: usize,
    ) -> Result<Self> {
        let inst = RepairInstance {
            outputs,
            ground_truth,
            thetas,
            label_count,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn rows(&self) -> usize {
        self.outputs.len()
    }

    pub fn cols(&self) -> usize {
        self.outputs.first().map_or(0, Vec::len)
    }

    fn validate(&self) -> Result<()> {
        if self.outputs.is_empty() || self.cols() == 0 {
            return Err(Error::InvalidInput(
                "a repair instance needs at least one datapoint and one rule".into(),
            ));
        }
        if self.label_count < 2 {
            return Err(Error::InvalidInput(
                "the vocabulary needs at least one non-abstain label".into(),
            ));
        }
        if self.ground_truth.len() != self.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} ground-truth labels for {} rows",
                self.ground_truth.len(),
                self.rows()
            )));
        }
        let m = self.cols();
        for (i, row) in self.outputs.iter().enumerate() {
            if row.len() != m {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            for &y in row {
                if y.index() >= self.label_count {
                    return Err(Error::LabelOutOfRange {
                        id: y.index(),
                        count: self.label_count,
                    });
                }
            }
        }
        for &g in &self.ground_truth {
            if g.is_abstain() || g.index() >= self.label_count {
                return Err(Error::InvalidInput(format!(
                    "ground truth label {g} must be a non-abstain label below {}",
                    self.label_count
                )));
            }
        }
        Ok(())
    }
}

/// The planner's output: the target output matrix, its change count, and
/// whether optimality was proven.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairPlan {
    /// `targets[i][j]` = label rule j must assign datapoint i after repair.
    pub targets: Vec<Vec<LabelId>>,
    /// Number of cells where `targets` differs from the instance outputs.
    pub cost: usize,
    /// True when no feasible plan has lower cost.
    pub optimal: bool,
}

/// Per-constraint satisfaction breakdown for a plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintReport {
    pub datapoint_evidence_ok: Vec<bool>,
    pub datapoint_accuracy_ok: Vec<bool>,
    pub rule_accuracy_ok: Vec<bool>,
    pub feasible: bool,
    pub recomputed_cost: usize,
    pub cost_matches: bool,
}

/// Solver mode: prove optimality, or return the best plan found in a time
/// budget (`optimal` is false if the budget ran out first).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    Exact,
    Anytime(Duration),
}

/// Which per-cell domain the brute-force oracle enumerates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchDomain {
    /// Every label in [0, |Y|-1] for every cell.
    Full,
    /// {keep, abstain, ground truth} per cell.
    Reduced,
}

const FULL_DOMAIN_CELL_LIMIT: usize = 12;
const REDUCED_DOMAIN_CELL_LIMIT: usize = 20;

// Exact comparisons: counts are i64, thetas are p/q with q > 0.

fn ge_theta(lhs_count: i64, rhs_count: i64, theta: Theta) -> bool {
    // lhs >= theta * rhs  <=>  lhs * q >= p * rhs
    lhs_count * theta.denom() >= theta.numer() * rhs_count
}

fn row_feasible(correct: i64, evidence: i64, m: i64, thetas: &Thetas) -> bool {
    ge_theta(correct, evidence, thetas.acc) && ge_theta(evidence, m, thetas.evidence)
}

/// Checks the three constraint families over a complete assignment.
fn assignment_feasible(inst: &RepairInstance, targets: &[Vec<LabelId>]) -> bool {
    let (n, m) = (inst.rows(), inst.cols());
    for i in 0..n {
        let mut c = 0i64;
        let mut e = 0i64;
        for j in 0..m {
            if !targets[i][j].is_abstain() {
                e += 1;
                if targets[i][j] == inst.ground_truth[i] {
                    c += 1;
                }
            }
        }
        if !row_feasible(c, e, m as i64, &inst.thetas) {
            return false;
        }
    }
    for j in 0..m {
        let mut c = 0i64;
        for i in 0..n {
            if !targets[i][j].is_abstain() && targets[i][j] == inst.ground_truth[i] {
                c += 1;
            }
        }
        if !ge_theta(c, n as i64, inst.thetas.rule_acc) {
            return false;
        }
    }
    true
}

fn plan_cost(inst: &RepairInstance, targets: &[Vec<LabelId>]) -> usize {
    inst.outputs
        .iter()
        .zip(targets)
        .map(|(l, o)| l.iter().zip(o).filter(|(a, b)| a != b).count())
        .sum()
}

/// Evaluates a plan against an instance: recomputes the three constraint
/// families and the change count, flagging any stored-cost mismatch.
pub fn verify_plan(plan: &RepairPlan, inst: &RepairInstance) -> Result<ConstraintReport> {
    let (n, m) = (inst.rows(), inst.cols());
    if plan.targets.len() != n || plan.targets.iter().any(|r| r.len() != m) {
        return Err(Error::ShapeMismatch(format!(
            "plan shape does not match the {n}x{m} instance"
        )));
    }
    let mut datapoint_evidence_ok = Vec::with_capacity(n);
    let mut datapoint_accuracy_ok = Vec::with_capacity(n);
    for i in 0..n {
        let mut c = 0i64;
        let mut e = 0i64;
        for j in 0..m {
            if !plan.targets[i][j].is_abstain() {
                e += 1;
                if plan.targets[i][j] == inst.ground_truth[i] {
                    c += 1;
                }
            }
        }
        datapoint_evidence_ok.push(ge_theta(e, m as i64, inst.thetas.evidence));
        datapoint_accuracy_ok.push(ge_theta(c, e, inst.thetas.acc));
    }
    let mut rule_accuracy_ok = Vec::with_capacity(m);
    for j in 0..m {
        let mut c = 0i64;
        for i in 0..n {
            if !plan.targets[i][j].is_abstain() && plan.targets[i][j] == inst.ground_truth[i] {
                c += 1;
            }
        }
        rule_accuracy_ok.push(ge_theta(c, n as i64, inst.thetas.rule_acc));
    }
    let feasible = datapoint_evidence_ok.iter().all(|&b| b)
        && datapoint_accuracy_ok.iter().all(|&b| b)
        && rule_accuracy_ok.iter().all(|&b| b);
    let recomputed_cost = plan_cost(inst, &plan.targets);
    Ok(ConstraintReport {
        datapoint_evidence_ok,
        datapoint_accuracy_ok,
        rule_accuracy_ok,
        feasible,
        recomputed_cost,
        cost_matches: recomputed_cost == plan.cost,
    })
}

/// Per-cell domain in canonical order: keep < abstain < ground truth,
/// deduplicated.
fn cell_domain(current: LabelId, gt: LabelId) -> Vec<LabelId> {
    let mut d = vec![current];
    if !d.contains(&ABSTAIN) {
        d.push(ABSTAIN);
    }
    if !d.contains(&gt) {
        d.push(gt);
    }
    d
}

/// Fewest changes fixing row constraints in isolation, ignoring columns.
/// Admissible lower-bound component: enumerate how many wrong cells flip to
/// ground truth, how many to abstain, and how many abstains flip to ground
/// truth.
fn row_min_changes(inst: &RepairInstance, i: usize) -> usize {
    let m = inst.cols() as i64;
    let mut wrong = 0i64;
    let mut abstain = 0i64;
    let mut correct = 0i64;
    for &y in &inst.outputs[i] {
        if y.is_abstain() {
            abstain += 1;
        } else if y == inst.ground_truth[i] {
            correct += 1;
        } else {
            wrong += 1;
        }
    }
    let mut best = i64::MAX;
    for to_gt in 0..=wrong {
        for to_abstain in 0..=(wrong - to_gt) {
            for from_abstain in 0..=abstain {
                let e = correct + wrong - to_abstain + from_abstain;
                let c = correct + to_gt + from_abstain;
                if row_feasible(c, e, m, &inst.thetas) {
                    best = best.min(to_gt + to_abstain + from_abstain);
                }
            }
        }
    }
    debug_assert!(best < i64::MAX, "the all-ground-truth row is always feasible");
    best as usize
}

struct Search<'a> {
    inst: &'a RepairInstance,
    domains: Vec<Vec<Vec<LabelId>>>,
    /// Suffix sums of per-row minimum changes: `row_min_suffix[i]` is the
    /// cheapest possible total for rows i.., ignoring column constraints.
    row_min_suffix: Vec<usize>,
    /// Correct cells each column needs in total: ceil(rule_acc * n).
    col_need: Vec<i64>,
    /// `free_correct_suffix[i][j]`: cells in rows i.. of column j that are
    /// correct without any change.
    free_correct_suffix: Vec<Vec<i64>>,
    deadline: Option<Instant>,
    timed_out: bool,
    nodes_since_check: u32,
    best_cost: usize,
    best: Option<Vec<Vec<LabelId>>>,
    /// In extraction mode the search keeps plans costing exactly
    /// `best_cost` and stops at the first complete one (which is the
    /// lexicographically least, since cells are explored in canonical
    /// order).
    extract: bool,
}

struct ColumnTally {
    correct: Vec<i64>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a RepairInstance, deadline: Option<Instant>) -> Self {
        let n = inst.rows();
        let m = inst.cols();
        let domains: Vec<Vec<Vec<LabelId>>> = (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| cell_domain(inst.outputs[i][j], inst.ground_truth[i]))
                    .collect()
            })
            .collect();
        let mut row_min_suffix = vec![0usize; n + 1];
        for i in (0..n).rev() {
            row_min_suffix[i] = row_min_suffix[i + 1] + row_min_changes(inst, i);
        }
        let t = inst.thetas.rule_acc;
        // Smallest integer c with c * q >= p * n.
        let col_need = vec![(t.numer() * n as i64 + t.denom() - 1).div_euclid(*t.denom()); m];
        let mut free_correct_suffix = vec![vec![0i64; m]; n + 1];
        for i in (0..n).rev() {
            for j in 0..m {
                let free = i64::from(inst.outputs[i][j] == inst.ground_truth[i]);
                free_correct_suffix[i][j] = free_correct_suffix[i + 1][j] + free;
            }
        }
        Search {
            inst,
            domains,
            row_min_suffix,
            col_need,
            free_correct_suffix,
            deadline,
            timed_out: false,
            nodes_since_check: 0,
            best_cost: usize::MAX,
            best: None,
            extract: false,
        }
    }

    /// Admissible lower bound at a row boundary: the dearer of (a) the
    /// per-row minima of the remaining rows and (b) the column correctness
    /// deficits not coverable by keep-correct cells, each of which costs at
    /// least one change.
    fn lower_bound(&self, i: usize, cols: &ColumnTally) -> usize {
        let row_bound = self.row_min_suffix[i];
        let col_bound: i64 = (0..self.inst.cols())
            .map(|j| {
                (self.col_need[j] - cols.correct[j] - self.free_correct_suffix[i][j]).max(0)
            })
            .sum();
        row_bound.max(col_bound as usize)
    }

    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        let Some(deadline) = self.deadline else {
            return false;
        };
        self.nodes_since_check += 1;
        if self.nodes_since_check >= 512 {
            self.nodes_since_check = 0;
            if Instant::now() >= deadline {
                self.timed_out = true;
            }
        }
        self.timed_out
    }

    fn prune(&self, cost_so_far: usize, lower_bound: usize) -> bool {
        if self.extract {
            // Keep equal-cost branches: the first complete plan in canonical
            // order is the one to extract.
            cost_so_far + lower_bound > self.best_cost
        } else {
            cost_so_far + lower_bound >= self.best_cost
        }
    }

    /// A column gains at most one correct cell per remaining row; prune when
    /// even that cannot reach the rule-accuracy floor.
    fn columns_recoverable(&self, cols: &ColumnTally, rows_left: i64) -> bool {
        let t = self.inst.thetas.rule_acc;
        let n = self.inst.rows() as i64;
        cols.correct
            .iter()
            .all(|&c| ge_theta(c + rows_left, n, t))
    }

    fn dfs_row(
        &mut self,
        i: usize,
        cost: usize,
        assigned: &mut Vec<Vec<LabelId>>,
        cols: &mut ColumnTally,
    ) {
        if self.out_of_time() {
            return;
        }
        if self.extract && self.best.is_some() {
            return;
        }
        let n = self.inst.rows();
        if self.prune(cost, self.lower_bound(i, cols)) {
            return;
        }
        if !self.columns_recoverable(cols, (n - i) as i64) {
            return;
        }
        if i == n {
            // Row constraints were enforced per row; only columns remain.
            if !self.columns_recoverable(cols, 0) {
                return;
            }
            if cost < self.best_cost || (self.extract && self.best.is_none()) {
                self.best_cost = cost;
                self.best = Some(assigned.clone());
            }
            return;
        }
        let mut row = vec![ABSTAIN; self.inst.cols()];
        self.dfs_cell(i, 0, cost, 0, 0, &mut row, assigned, cols);
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs_cell(
        &mut self,
        i: usize,
        j: usize,
        cost: usize,
        row_correct: i64,
        row_evidence: i64,
        row: &mut Vec<LabelId>,
        assigned: &mut Vec<Vec<LabelId>>,
        cols: &mut ColumnTally,
    ) {
        if self.out_of_time() {
            return;
        }
        if self.extract && self.best.is_some() {
            return;
        }
        let m = self.inst.cols();
        if j == m {
            if !row_feasible(row_correct, row_evidence, m as i64, &self.inst.thetas) {
                return;
            }
            assigned.push(row.clone());
            self.dfs_row(i + 1, cost, assigned, cols);
            assigned.pop();
            return;
        }
        // Setting every remaining cell in this row to ground truth maximizes
        // both the accuracy slack and the evidence count; if even that
        // cannot make the row feasible, backtrack.
        let rest = (m - j) as i64;
        let t = &self.inst.thetas;
        if !ge_theta(row_correct + rest, row_evidence + rest, t.acc)
            || !ge_theta(row_evidence + rest, m as i64, t.evidence)
        {
            return;
        }

        let gt = self.inst.ground_truth[i];
        let current = self.inst.outputs[i][j];
        let options = self.domains[i][j].clone();
        for label in options {
            let step_cost = usize::from(label != current);
            if self.prune(cost + step_cost, self.row_min_suffix[i + 1]) {
                continue;
            }
            let (dc, de) = if label.is_abstain() {
                (0, 0)
            } else if label == gt {
                (1, 1)
            } else {
                (0, 1)
            };
            row[j] = label;
            cols.correct[j] += dc;
            self.dfs_cell(
                i,
                j + 1,
                cost + step_cost,
                row_correct + dc,
                row_evidence + de,
                row,
                assigned,
                cols,
            );
            cols.correct[j] -= dc;
        }
    }

    fn run(&mut self, seed_cost: usize, extract: bool) {
        self.extract = extract;
        self.best_cost = seed_cost;
        self.best = None;
        let mut assigned = Vec::with_capacity(self.inst.rows());
        let mut cols = ColumnTally {
            correct: vec![0; self.inst.cols()],
        };
        self.dfs_row(0, 0, &mut assigned, &mut cols);
    }
}

/// The all-ground-truth plan; feasible for every instance, which makes the
/// repair problem total.
fn all_gt_plan(inst: &RepairInstance) -> (Vec<Vec<LabelId>>, usize) {
    let targets: Vec<Vec<LabelId>> = inst
        .ground_truth
        .iter()
        .map(|&g| vec![g; inst.cols()])
        .collect();
    let cost = plan_cost(inst, &targets);
    (targets, cost)
}

/// Solves the planning problem over the reduced per-cell domain with
/// branch-and-bound. In exact mode the result is optimal and, among optimal
/// plans, lexicographically least by (row, column, keep < abstain < ground
/// truth). In anytime mode the best feasible plan found within the budget is
/// returned, with `optimal` reporting whether the search finished.
pub fn plan_repair(inst: &RepairInstance, mode: SolveMode) -> Result<RepairPlan> {
    inst.validate()?;
    let deadline = match mode {
        SolveMode::Exact => None,
        SolveMode::Anytime(budget) => Some(Instant::now() + budget),
    };
    let (gt_targets, gt_cost) = all_gt_plan(inst);
    debug_assert!(assignment_feasible(inst, &gt_targets));

    // Phase 1: establish the optimal cost, seeded with the all-ground-truth
    // incumbent.
    let mut search = Search::new(inst, deadline);
    search.run(gt_cost + 1, false);
    let timed_out = search.timed_out;
    let (found_cost, found_plan) = match search.best.take() {
        Some(plan) => (search.best_cost, plan),
        None => (gt_cost, gt_targets),
    };
    if timed_out {
        return Ok(RepairPlan {
            cost: plan_cost(inst, &found_plan),
            targets: found_plan,
            optimal: false,
        });
    }

    // Phase 2: re-run with the proven bound to extract the canonical
    // (lexicographically least) optimal plan.
    let mut extract = Search::new(inst, deadline);
    extract.run(found_cost, true);
    if extract.timed_out || extract.best.is_none() {
        return Ok(RepairPlan {
            cost: plan_cost(inst, &found_plan),
            targets: found_plan,
            optimal: !extract.timed_out,
        });
    }
    let targets = extract.best.take().unwrap();
    Ok(RepairPlan {
        cost: plan_cost(inst, &targets),
        targets,
        optimal: true,
    })
}

/// Exhaustive optimality oracle. Enumerates every assignment over the chosen
/// domain and returns a minimum-cost feasible plan (canonical tie-break).
/// Guarded to tiny instances.
pub fn brute_force_plan(inst: &RepairInstance, domain: SearchDomain) -> Result<RepairPlan> {
    inst.validate()?;
    let cells = inst.rows() * inst.cols();
    let limit = match domain {
        SearchDomain::Full => FULL_DOMAIN_CELL_LIMIT,
        SearchDomain::Reduced => REDUCED_DOMAIN_CELL_LIMIT,
    };
    if cells > limit {
        return Err(Error::SizeGuard {
            what: "brute-force plan enumeration",
            size: cells,
            limit,
        });
    }

    let (n, m) = (inst.rows(), inst.cols());
    let domains: Vec<Vec<LabelId>> = (0..cells)
        .map(|idx| {
            let (i, j) = (idx / m, idx % m);
            match domain {
                SearchDomain::Full => {
                    // Canonical order: keep, then remaining labels by id.
                    let current = inst.outputs[i][j];
                    let mut d = vec![current];
                    d.extend(
                        (0..inst.label_count)
                            .map(|k| LabelId(k as u16))
                            .filter(|&y| y != current),
                    );
                    d
                }
                SearchDomain::Reduced => cell_domain(inst.outputs[i][j], inst.ground_truth[i]),
            }
        })
        .collect();

    let mut flat: Vec<LabelId> = vec![ABSTAIN; cells];
    let mut best: Option<(usize, Vec<LabelId>)> = None;

    fn enumerate(
        idx: usize,
        cost: usize,
        flat: &mut Vec<LabelId>,
        domains: &[Vec<LabelId>],
        inst: &RepairInstance,
        best: &mut Option<(usize, Vec<LabelId>)>,
    ) {
        if let Some((c, _)) = best {
            if cost >= *c {
                return;
            }
        }
        if idx == flat.len() {
            let m = inst.cols();
            let targets: Vec<Vec<LabelId>> =
                flat.chunks(m).map(<[LabelId]>::to_vec).collect();
            if assignment_feasible(inst, &targets) {
                *best = Some((cost, flat.clone()));
            }
            return;
        }
        let (i, j) = (idx / inst.cols(), idx % inst.cols());
        let current = inst.outputs[i][j];
        for &label in &domains[idx] {
            flat[idx] = label;
            enumerate(
                idx + 1,
                cost + usize::from(label != current),
                flat,
                domains,
                inst,
                best,
            );
        }
    }

    enumerate(0, 0, &mut flat, &domains, inst, &mut best);
    let (cost, flat) = best.expect("the all-ground-truth assignment is always feasible");
    let targets: Vec<Vec<LabelId>> = flat.chunks(m).map(<[LabelId]>::to_vec).collect();
    debug_assert_eq!(plan_cost(inst, &targets), cost);
    debug_assert_eq!(targets.len(), n);
    Ok(RepairPlan {
        targets,
        cost,
        optimal: true,
    })
}
