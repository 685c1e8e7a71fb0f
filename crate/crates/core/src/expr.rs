//! Structured labeling-function expressions and their translation into rule
//! trees.
//!
//! The expression language is a small DSL: `If(cond, then, else)`,
//! `Return(label)`, and `Opaque(name)` for delegating to a registered
//! labeler. Conditions combine atomic predicates with `And`/`Or`. Every
//! expression translates into an evaluation-equivalent rule tree.

use crate::error::{Error, Result};
use crate::label::{LabelId, LabelSet, ABSTAIN};
use crate::predicate::Predicate;
use crate::rule::{Node, RuleTree};

/// Boolean condition over atomic predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    Atom(Predicate),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

impl Cond {
    pub fn atom(pred: Predicate) -> Cond {
        Cond::Atom(pred)
    }

    pub fn word(word: &str) -> Cond {
        Cond::Atom(Predicate::contains_word(word))
    }

    pub fn and(self, other: Cond) -> Cond {
        Cond::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Cond) -> Cond {
        Cond::Or(Box::new(self), Box::new(other))
    }

    /// Any-of-these-words shorthand, mirroring the usual keyword-list LF.
    pub fn any_word(words: &[&str]) -> Cond {
        assert!(!words.is_empty(), "any_word requires at least one word");
        words[1..]
            .iter()
            .fold(Cond::word(words[0]), |acc, w| acc.or(Cond::word(w)))
    }
}

/// A labeling function expressed structurally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LfExpr {
    If(Cond, Box<LfExpr>, Box<LfExpr>),
    Return(LabelId),
    Opaque(String),
}

impl LfExpr {
    pub fn branch(cond: Cond, then: LfExpr, otherwise: LfExpr) -> LfExpr {
        LfExpr::If(cond, Box::new(then), Box::new(otherwise))
    }

    /// The common `if cond then label else abstain` shape.
    pub fn keyword_lf(cond: Cond, label: LabelId) -> LfExpr {
        LfExpr::branch(cond, LfExpr::Return(label), LfExpr::Return(ABSTAIN))
    }
}

/// Translates an expression into an evaluation-equivalent rule tree.
///
/// Disjunctions decompose into a chain whose true edges all reach the
/// true-subtree; conjunctions decompose dually. `Opaque` nodes expand into
/// the label-comparison chain of [`wrap_blackbox`].
pub fn lf_expr_to_rule(lf: &LfExpr, labels: &LabelSet) -> Result<RuleTree> {
    Ok(RuleTree::new(expr_node(lf, labels)?))
}

fn expr_node(lf: &LfExpr, labels: &LabelSet) -> Result<Node> {
    match lf {
        LfExpr::Return(label) => {
            if !labels.contains(*label) {
                return Err(Error::LabelOutOfRange {
                    id: label.index(),
                    count: labels.len(),
                });
            }
            Ok(Node::Leaf(*label))
        }
        LfExpr::If(cond, then, otherwise) => {
            let on_true = expr_node(then, labels)?;
            let on_false = expr_node(otherwise, labels)?;
            Ok(cond_node(cond, on_false, on_true))
        }
        LfExpr::Opaque(name) => Ok(blackbox_chain(name, labels)),
    }
}

/// Builds the rule fragment for `cond`, routing to `on_false`/`on_true`.
///
/// For `a ∨ b` the true child of `a` is the true-subtree and the false child
/// re-checks `b`; for `a ∧ b` the false child of `a` is the false-subtree and
/// the true child re-checks `b`. Shared subtrees are cloned since trees are
/// plain values.
fn cond_node(cond: &Cond, on_false: Node, on_true: Node) -> Node {
    match cond {
        Cond::Atom(pred) => Node::inner(pred.clone(), on_false, on_true),
        Cond::Or(a, b) => {
            let rest = cond_node(b, on_false, on_true.clone());
            cond_node(a, rest, on_true)
        }
        Cond::And(a, b) => {
            let rest = cond_node(b, on_false.clone(), on_true);
            cond_node(a, on_false, rest)
        }
    }
}

/// Directly evaluates a condition; the independent semantics that the tree
/// translation must agree with.
pub fn eval_cond(
    cond: &Cond,
    x: &crate::datapoint::Datapoint,
    env: &crate::predicate::EvalEnv,
) -> Result<bool> {
    match cond {
        Cond::Atom(pred) => pred.eval(x, env),
        Cond::And(a, b) => Ok(eval_cond(a, x, env)? && eval_cond(b, x, env)?),
        Cond::Or(a, b) => Ok(eval_cond(a, x, env)? || eval_cond(b, x, env)?),
    }
}

/// Directly evaluates an expression; the oracle for translation
/// equivalence. `Opaque` nodes call the registered labeler itself rather
/// than the comparison chain the translation builds.
pub fn eval_expr(
    lf: &LfExpr,
    x: &crate::datapoint::Datapoint,
    env: &crate::predicate::EvalEnv,
) -> Result<LabelId> {
    match lf {
        LfExpr::Return(label) => Ok(*label),
        LfExpr::If(cond, then, otherwise) => {
            if eval_cond(cond, x, env)? {
                eval_expr(then, x, env)
            } else {
                eval_expr(otherwise, x, env)
            }
        }
        LfExpr::Opaque(name) => {
            let labeler = env
                .opaques
                .get(name)
                .ok_or_else(|| Error::UnresolvedPredicate(name.to_string()))?;
            let out = labeler(x);
            if !env.labels.contains(out) {
                return Err(Error::LabelerContract {
                    name: name.to_string(),
                    returned: out.index(),
                    count: env.labels.len(),
                });
            }
            Ok(out)
        }
    }
}

/// Wraps a registered opaque labeler as a rule: a chain of label-comparison
/// predicates, one per non-abstain label, falling through to the abstain
/// label.
///
/// Labels are chained in id order; the paper leaves the order open, and any
/// order is equivalent because the comparisons are mutually exclusive.
pub fn wrap_blackbox(name: &str, labels: &LabelSet) -> RuleTree {
    RuleTree::new(blackbox_chain(name, labels))
}

fn blackbox_chain(name: &str, labels: &LabelSet) -> Node {
    let mut node = Node::Leaf(ABSTAIN);
    for label in labels.non_abstain_ids() {
        node = Node::inner(
            Predicate::opaque_equals(name, label),
            node,
            Node::Leaf(label),
        );
    }
    node
}
