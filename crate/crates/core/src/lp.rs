//! Emits the planning problem as a solver-ready LP file.
//!
//! One integer variable `o_i_j` holds the target label of rule j on
//! datapoint i; binary indicators `m_i_j` (cell changed), `c_i_j` (cell
//! correct), and `e_i_j` (cell non-abstain) are linked to it with big-M
//! constraints (M = |Y|). Threshold constraints are written with integer
//! coefficients by multiplying through the exact rational thresholds; the
//! per-rule constraint requires `rule_acc * n` correct cells per column.
//!
//! Constraint count: 6 per cell (two per indicator), 2 per datapoint
//! (accuracy, evidence), 1 per rule — `6nm + 2n + m` in total, with `4nm`
//! variables.

use std::fmt::Write;

use crate::planner::{RepairInstance, Theta};

/// Renders the instance in CPLEX LP format with the change-count objective.
pub fn export_program(inst: &RepairInstance) -> String {
    let (n, m) = (inst.rows(), inst.cols());
    let big_m = inst.label_count as i64;
    let max_label = inst.label_count as i64 - 1;
    let mut out = String::new();

    let _ = writeln!(
        out,
        "\\ rule output repair: n={n} datapoints, m={m} rules, {y} labels",
        y = inst.label_count
    );
    let _ = writeln!(
        out,
        "\\ thetas: acc={}, evidence={}, rule_acc={}",
        ratio_str(inst.thetas.acc),
        ratio_str(inst.thetas.evidence),
        ratio_str(inst.thetas.rule_acc)
    );
    let _ = writeln!(out, "Minimize");
    let objective: Vec<String> = cells(n, m).map(|(i, j)| format!("m_{i}_{j}")).collect();
    let _ = writeln!(out, " obj: {}", objective.join(" + "));

    let _ = writeln!(out, "Subject To");
    for (i, j) in cells(n, m) {
        let current = inst.outputs[i - 1][j - 1].index() as i64;
        let gt = inst.ground_truth[i - 1].index() as i64;
        // m_i_j = 0 forces o_i_j to the current output.
        let _ = writeln!(out, " chg_lo_{i}_{j}: o_{i}_{j} - {big_m} m_{i}_{j} <= {current}");
        let _ = writeln!(
            out,
            " chg_hi_{i}_{j}: - o_{i}_{j} - {big_m} m_{i}_{j} <= {neg}",
            neg = -current
        );
        // c_i_j = 1 forces o_i_j to the ground truth.
        let _ = writeln!(
            out,
            " cor_lo_{i}_{j}: o_{i}_{j} + {big_m} c_{i}_{j} <= {rhs}",
            rhs = gt + big_m
        );
        let _ = writeln!(
            out,
            " cor_hi_{i}_{j}: - o_{i}_{j} + {big_m} c_{i}_{j} <= {rhs}",
            rhs = big_m - gt
        );
        // e_i_j = 1 exactly when o_i_j is non-abstain (> 0).
        let _ = writeln!(out, " ev_lo_{i}_{j}: e_{i}_{j} - o_{i}_{j} <= 0");
        let _ = writeln!(out, " ev_hi_{i}_{j}: o_{i}_{j} - {big_m} e_{i}_{j} <= 0");
    }
    for i in 1..=n {
        let acc = inst.thetas.acc;
        let terms: Vec<String> = (1..=m)
            .map(|j| {
                format!(
                    "{q} c_{i}_{j} - {p} e_{i}_{j}",
                    q = acc.denom(),
                    p = acc.numer()
                )
            })
            .collect();
        let _ = writeln!(out, " acc_row_{i}: {} >= 0", terms.join(" + "));

        let ev = inst.thetas.evidence;
        let terms: Vec<String> = (1..=m)
            .map(|j| format!("{q} e_{i}_{j}", q = ev.denom()))
            .collect();
        let _ = writeln!(
            out,
            " evid_row_{i}: {} >= {rhs}",
            terms.join(" + "),
            rhs = ev.numer() * m as i64
        );
    }
    for j in 1..=m {
        let racc = inst.thetas.rule_acc;
        let terms: Vec<String> = (1..=n)
            .map(|i| format!("{q} c_{i}_{j}", q = racc.denom()))
            .collect();
        let _ = writeln!(
            out,
            " acc_col_{j}: {} >= {rhs}",
            terms.join(" + "),
            rhs = racc.numer() * n as i64
        );
    }

    let _ = writeln!(out, "Bounds");
    for (i, j) in cells(n, m) {
        let _ = writeln!(out, " 0 <= o_{i}_{j} <= {max_label}");
    }
    let _ = writeln!(out, "Generals");
    let generals: Vec<String> = cells(n, m).map(|(i, j)| format!("o_{i}_{j}")).collect();
    let _ = writeln!(out, " {}", generals.join(" "));
    let _ = writeln!(out, "Binaries");
    let binaries: Vec<String> = cells(n, m)
        .flat_map(|(i, j)| {
            [
                format!("m_{i}_{j}"),
                format!("c_{i}_{j}"),
                format!("e_{i}_{j}"),
            ]
        })
        .collect();
    let _ = writeln!(out, " {}", binaries.join(" "));
    let _ = writeln!(out, "End");
    out
}

fn cells(n: usize, m: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=n).flat_map(move |i| (1..=m).map(move |j| (i, j)))
}

fn ratio_str(t: Theta) -> String {
    format!("{}/{}", t.numer(), t.denom())
}
