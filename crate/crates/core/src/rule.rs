//! Rule trees: binary decision trees over predicates with label leaves, plus
//! the refinement steps that rewrite them.
//!
//! Rules are immutable values; every refinement returns a new tree. Paths are
//! addressed by their edge sequence from the root (a bit-string), which is
//! stable across serialization.

use serde::{Deserialize, Serialize};

use crate::datapoint::Datapoint;
use crate::error::{Error, Result};
use crate::label::LabelId;
use crate::predicate::{EvalEnv, Predicate};

/// A node is either an inner predicate with false/true children or a label
/// leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf(LabelId),
    Inner {
        pred: Predicate,
        on_false: Box<Node>,
        on_true: Box<Node>,
    },
}

impl Node {
    pub fn leaf(label: LabelId) -> Node {
        Node::Leaf(label)
    }

    pub fn inner(pred: Predicate, on_false: Node, on_true: Node) -> Node {
        Node::Inner {
            pred,
            on_false: Box::new(on_false),
            on_true: Box::new(on_true),
        }
    }

    fn node_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Inner {
                on_false, on_true, ..
            } => 1 + on_false.node_count() + on_true.node_count(),
        }
    }
}

/// Edge sequence from the root: `false` edges are 0, `true` edges are 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Path(pub Vec<bool>);

impl Path {
    pub fn root() -> Path {
        Path(Vec::new())
    }

    pub fn child(&self, edge: bool) -> Path {
        let mut edges = self.0.clone();
        edges.push(edge);
        Path(edges)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_prefix_of(&self, other: &Path) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Bit-string form, e.g. "10" = true edge then false edge.
    pub fn as_bits(&self) -> String {
        self.0.iter().map(|&e| if e { '1' } else { '0' }).collect()
    }

    pub fn from_bits(bits: &str) -> Result<Path> {
        bits.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidInput(format!(
                    "invalid path bit `{other}` in `{bits}`"
                ))),
            })
            .collect::<Result<Vec<bool>>>()
            .map(Path)
    }
}

impl std::fmt::Display for Path {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_bits())
    }
}

/// One refinement: split a leaf into a new predicate node with two label
/// leaves, or relabel a leaf in place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RefinementStep {
    Split {
        #[serde(with = "path_bits")]
        path: Path,
        pred: Predicate,
        false_label: LabelId,
        true_label: LabelId,
    },
    Relabel {
        #[serde(with = "path_bits")]
        path: Path,
        label: LabelId,
    },
}

impl RefinementStep {
    pub fn path(&self) -> &Path {
        match self {
            RefinementStep::Split { path, .. } => path,
            RefinementStep::Relabel { path, .. } => path,
        }
    }
}

mod path_bits {
    use super::Path;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(path: &Path, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&path.as_bits())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Path, D::Error> {
        let bits = String::deserialize(d)?;
        Path::from_bits(&bits).map_err(serde::de::Error::custom)
    }
}

/// Ordered refinement steps; applied left to right. `rcost` is the length.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RefinementSequence {
    pub steps: Vec<RefinementStep>,
}

impl RefinementSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rcost(&self) -> usize {
        self.steps.len()
    }

    pub fn push(&mut self, step: RefinementStep) {
        self.steps.push(step);
    }

    pub fn extend(&mut self, other: RefinementSequence) {
        self.steps.extend(other.steps);
    }
}

/// A labeling function in executable form: a finite, total binary rule tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTree {
    pub root: Node,
}

impl RuleTree {
    pub fn new(root: Node) -> Self {
        RuleTree { root }
    }

    pub fn leaf(label: LabelId) -> Self {
        RuleTree {
            root: Node::Leaf(label),
        }
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    /// Follows predicate outcomes from the root; returns the label of the
    /// unique leaf reached.
    pub fn evaluate(&self, x: &Datapoint, env: &EvalEnv) -> Result<LabelId> {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(label) => return Ok(*label),
                Node::Inner {
                    pred,
                    on_false,
                    on_true,
                } => {
                    node = if pred.eval(x, env)? { on_true } else { on_false };
                }
            }
        }
    }

    /// Root-to-leaf edge sequence taken by `x`. The terminal leaf's label
    /// always equals `evaluate(x)`.
    pub fn path_of(&self, x: &Datapoint, env: &EvalEnv) -> Result<Path> {
        let mut node = &self.root;
        let mut edges = Vec::new();
        loop {
            match node {
                Node::Leaf(_) => return Ok(Path(edges)),
                Node::Inner {
                    pred,
                    on_false,
                    on_true,
                } => {
                    let taken = pred.eval(x, env)?;
                    edges.push(taken);
                    node = if taken { on_true } else { on_false };
                }
            }
        }
    }

    /// Label of the leaf at `path`, or an error if the path does not end at a
    /// leaf.
    pub fn leaf_label_at(&self, path: &Path) -> Result<LabelId> {
        let mut node = &self.root;
        for &edge in &path.0 {
            match node {
                Node::Leaf(_) => return Err(Error::InvalidStep(path.as_bits())),
                Node::Inner {
                    on_false, on_true, ..
                } => node = if edge { on_true } else { on_false },
            }
        }
        match node {
            Node::Leaf(label) => Ok(*label),
            Node::Inner { .. } => Err(Error::InvalidStep(path.as_bits())),
        }
    }

    /// All root-to-leaf paths in left-to-right (false-before-true) order.
    pub fn leaf_paths(&self) -> Vec<Path> {
        fn walk(node: &Node, prefix: Path, out: &mut Vec<Path>) {
            match node {
                Node::Leaf(_) => out.push(prefix),
                Node::Inner {
                    on_false, on_true, ..
                } => {
                    walk(on_false, prefix.child(false), out);
                    walk(on_true, prefix.child(true), out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, Path::root(), &mut out);
        out
    }

    /// Applies one refinement step, returning the rewritten tree. The step's
    /// path must resolve to a leaf; every other subtree is shared unchanged.
    pub fn apply_refinement(&self, step: &RefinementStep) -> Result<RuleTree> {
        fn rewrite(node: &Node, edges: &[bool], step: &RefinementStep) -> Result<Node> {
            match (node, edges) {
                (Node::Leaf(_), []) => Ok(match step {
                    RefinementStep::Split {
                        pred,
                        false_label,
                        true_label,
                        ..
                    } => Node::inner(
                        pred.clone(),
                        Node::Leaf(*false_label),
                        Node::Leaf(*true_label),
                    ),
                    RefinementStep::Relabel { label, .. } => Node::Leaf(*label),
                }),
                (Node::Inner { .. }, []) | (Node::Leaf(_), [_, ..]) => {
                    Err(Error::InvalidStep(step.path().as_bits()))
                }
                (
                    Node::Inner {
                        pred,
                        on_false,
                        on_true,
                    },
                    [edge, rest @ ..],
                ) => {
                    let (new_false, new_true) = if *edge {
                        (on_false.as_ref().clone(), rewrite(on_true, rest, step)?)
                    } else {
                        (rewrite(on_false, rest, step)?, on_true.as_ref().clone())
                    };
                    Ok(Node::inner(pred.clone(), new_false, new_true))
                }
            }
        }
        Ok(RuleTree {
            root: rewrite(&self.root, &step.path().0, step)?,
        })
    }

    /// Applies a whole sequence left to right; each step's path is validated
    /// against the tree produced by the prefix.
    pub fn apply_sequence(&self, seq: &RefinementSequence) -> Result<RuleTree> {
        let mut rule = self.clone();
        for step in &seq.steps {
            rule = rule.apply_refinement(step)?;
        }
        Ok(rule)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::{ABSTAIN, LabelSet};
    use crate::predicate::OpaqueRegistry;

    const POS: LabelId = LabelId(1);
    const NEG: LabelId = LabelId(2);

    fn labels() -> LabelSet {
        LabelSet::new(vec!["ABSTAIN", "POS", "NEG"]).unwrap()
    }

    /// `'waste' in v -> NEG | ABSTAIN`
    fn waste_rule() -> RuleTree {
        RuleTree::new(Node::inner(
            Predicate::contains_word("waste"),
            Node::leaf(ABSTAIN),
            Node::leaf(NEG),
        ))
    }

    #[test]
    fn evaluate_waste_rule() {
        let labels = labels();
        let reg = OpaqueRegistry::new();
        let env = EvalEnv::new(&labels, &reg);
        let rule = waste_rule();
        let neg = Datapoint::new("a", "waste of money");
        let pos = Datapoint::new("b", "great product");
        assert_eq!(rule.evaluate(&neg, &env).unwrap(), NEG);
        assert_eq!(rule.evaluate(&pos, &env).unwrap(), ABSTAIN);
        assert_eq!(
            RuleTree::leaf(POS).evaluate(&pos, &env).unwrap(),
            POS
        );
    }

    #[test]
    fn path_matches_evaluation() {
        let labels = labels();
        let reg = OpaqueRegistry::new();
        let env = EvalEnv::new(&labels, &reg);
        let rule = waste_rule();
        let neg = Datapoint::new("a", "waste of money");
        let pos = Datapoint::new("b", "great product");
        let p_neg = rule.path_of(&neg, &env).unwrap();
        let p_pos = rule.path_of(&pos, &env).unwrap();
        assert_eq!(p_neg.as_bits(), "1");
        assert_eq!(p_pos.as_bits(), "0");
        assert_eq!(rule.leaf_label_at(&p_neg).unwrap(), NEG);
        assert_eq!(rule.leaf_label_at(&p_pos).unwrap(), ABSTAIN);
    }

    #[test]
    fn split_produces_refined_tree() {
        // Splitting the true leaf with 'yes' (false -> NEG, true -> POS)
        // yields the two-predicate tree.
        let rule = waste_rule();
        let step = RefinementStep::Split {
            path: Path::from_bits("1").unwrap(),
            pred: Predicate::contains_word("yes"),
            false_label: NEG,
            true_label: POS,
        };
        let refined = rule.apply_refinement(&step).unwrap();
        let expected = RuleTree::new(Node::inner(
            Predicate::contains_word("waste"),
            Node::leaf(ABSTAIN),
            Node::inner(
                Predicate::contains_word("yes"),
                Node::leaf(NEG),
                Node::leaf(POS),
            ),
        ));
        assert_eq!(refined, expected);

        // Datapoints satisfying the new predicate on that leaf now get the
        // true label.
        let labels = labels();
        let reg = OpaqueRegistry::new();
        let env = EvalEnv::new(&labels, &reg);
        let x = Datapoint::new("a", "yes a waste");
        assert_eq!(refined.evaluate(&x, &env).unwrap(), POS);
    }

    #[test]
    fn identity_relabel_keeps_evaluation() {
        let labels = labels();
        let reg = OpaqueRegistry::new();
        let env = EvalEnv::new(&labels, &reg);
        let rule = waste_rule();
        let step = RefinementStep::Relabel {
            path: Path::from_bits("1").unwrap(),
            label: NEG,
        };
        let refined = rule.apply_refinement(&step).unwrap();
        for text in ["waste of money", "great product", "such a waste indeed"] {
            let x = Datapoint::new("x", text);
            assert_eq!(
                refined.evaluate(&x, &env).unwrap(),
                rule.evaluate(&x, &env).unwrap()
            );
        }
    }

    #[test]
    fn invalid_paths_are_rejected() {
        let rule = waste_rule();
        // Path into a leaf's child.
        let too_deep = RefinementStep::Relabel {
            path: Path::from_bits("10").unwrap(),
            label: POS,
        };
        assert!(matches!(
            rule.apply_refinement(&too_deep),
            Err(Error::InvalidStep(_))
        ));
        // Path stopping at an inner node.
        let too_shallow = RefinementStep::Relabel {
            path: Path::root(),
            label: POS,
        };
        assert!(matches!(
            rule.apply_refinement(&too_shallow),
            Err(Error::InvalidStep(_))
        ));
    }

    #[test]
    fn refinement_is_local_to_the_path() {
        let labels = labels();
        let reg = OpaqueRegistry::new();
        let env = EvalEnv::new(&labels, &reg);
        let rule = waste_rule();
        let step = RefinementStep::Split {
            path: Path::from_bits("1").unwrap(),
            pred: Predicate::contains_word("yes"),
            false_label: NEG,
            true_label: POS,
        };
        let refined = rule.apply_refinement(&step).unwrap();
        // Datapoints whose path does not start with "1" are unaffected.
        let x = Datapoint::new("x", "yes great product");
        assert_eq!(rule.path_of(&x, &env).unwrap().as_bits(), "0");
        assert_eq!(
            refined.evaluate(&x, &env).unwrap(),
            rule.evaluate(&x, &env).unwrap()
        );
    }
}
