//! On-disk formats: rule-set JSON, dataset JSONL/CSV, planning instance
//! CSV + JSON header, vote/prediction CSV, and the refinement audit log.
//!
//! Rule files store label names, with the vocabulary listed once (abstain
//! first); parsing our own output and re-serializing reproduces it exactly.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datapoint::Datapoint;
use crate::error::{Error, Result};
use crate::label::{LabelId, LabelSet};
use crate::model::VoteMatrix;
use crate::planner::{parse_theta, theta_to_string, RepairInstance, RepairPlan, Thetas};
use crate::predicate::Predicate;
use crate::rule::{Node, RefinementSequence, RuleTree};

/// A named rule set sharing one label vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub labels: LabelSet,
    pub rules: Vec<NamedRule>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedRule {
    pub name: String,
    pub tree: RuleTree,
}

#[derive(Serialize, Deserialize)]
struct RuleSetDoc {
    labels: Vec<String>,
    rules: Vec<RuleDoc>,
}

#[derive(Serialize, Deserialize)]
struct RuleDoc {
    name: String,
    root: NodeDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDoc {
    Inner {
        pred: PredDoc,
        #[serde(rename = "false")]
        on_false: Box<NodeDoc>,
        #[serde(rename = "true")]
        on_true: Box<NodeDoc>,
    },
    Leaf {
        label: String,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum PredDoc {
    ContainsWord { word: String },
    AttrEquals { attr: String, value: String },
    OpaqueEquals { opaque: String, label: String },
}

fn node_to_doc(node: &Node, labels: &LabelSet) -> Result<NodeDoc> {
    Ok(match node {
        Node::Leaf(label) => NodeDoc::Leaf {
            label: labels.name(*label)?.to_string(),
        },
        Node::Inner {
            pred,
            on_false,
            on_true,
        } => NodeDoc::Inner {
            pred: match pred {
                Predicate::ContainsWord { word } => PredDoc::ContainsWord { word: word.clone() },
                Predicate::AttrEquals { attr, value } => PredDoc::AttrEquals {
                    attr: attr.clone(),
                    value: value.clone(),
                },
                Predicate::OpaqueEquals { opaque, label } => PredDoc::OpaqueEquals {
                    opaque: opaque.clone(),
                    label: labels.name(*label)?.to_string(),
                },
            },
            on_false: Box::new(node_to_doc(on_false, labels)?),
            on_true: Box::new(node_to_doc(on_true, labels)?),
        },
    })
}

fn node_from_doc(doc: &NodeDoc, labels: &LabelSet) -> Result<Node> {
    let lookup = |name: &str| {
        labels.id_of(name).ok_or_else(|| Error::UnknownLabel {
            label: name.to_string(),
            record: "rule file".to_string(),
        })
    };
    Ok(match doc {
        NodeDoc::Leaf { label } => Node::Leaf(lookup(label)?),
        NodeDoc::Inner {
            pred,
            on_false,
            on_true,
        } => Node::Inner {
            pred: match pred {
                PredDoc::ContainsWord { word } => Predicate::contains_word(word.clone()),
                PredDoc::AttrEquals { attr, value } => {
                    Predicate::attr_equals(attr.clone(), value.clone())
                }
                PredDoc::OpaqueEquals { opaque, label } => {
                    Predicate::opaque_equals(opaque.clone(), lookup(label)?)
                }
            },
            on_false: Box::new(node_from_doc(on_false, labels)?),
            on_true: Box::new(node_from_doc(on_true, labels)?),
        },
    })
}

/// Serializes a rule set to the JSON document format.
pub fn rule_set_to_json(set: &RuleSet) -> Result<String> {
    let doc = RuleSetDoc {
        labels: set.labels.names().to_vec(),
        rules: set
            .rules
            .iter()
            .map(|r| {
                Ok(RuleDoc {
                    name: r.name.clone(),
                    root: node_to_doc(&r.tree.root, &set.labels)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let mut out = serde_json::to_string_pretty(&doc)?;
    out.push('\n');
    Ok(out)
}

/// Parses a rule-set JSON document.
pub fn rule_set_from_json(json: &str) -> Result<RuleSet> {
    let doc: RuleSetDoc = serde_json::from_str(json)?;
    let labels = LabelSet::new(doc.labels)?;
    let rules = doc
        .rules
        .iter()
        .map(|r| {
            Ok(NamedRule {
                name: r.name.clone(),
                tree: RuleTree::new(node_from_doc(&r.root, &labels)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RuleSet { labels, rules })
}

pub fn read_rule_set(path: &Path) -> Result<RuleSet> {
    rule_set_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_rule_set(path: &Path, set: &RuleSet) -> Result<()> {
    std::fs::write(path, rule_set_to_json(set)?)?;
    Ok(())
}

#[derive(Deserialize)]
struct RecordDoc {
    id: String,
    text: String,
    #[serde(default)]
    label: Option<String>,
}

/// Loads a dataset from JSONL (`{id, text, label?}` per line) or CSV with
/// the same columns, chosen by file extension. Labels are validated against
/// the vocabulary and texts are tokenized.
pub fn load_dataset(path: &Path, labels: &LabelSet) -> Result<Vec<Datapoint>> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let raw = std::fs::read_to_string(path)?;
    let records = if is_csv {
        parse_csv_records(&raw)?
    } else {
        parse_jsonl_records(&raw)?
    };
    if records.is_empty() {
        log::warn!("dataset {} is empty", path.display());
        return Ok(Vec::new());
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(records.len());
    for rec in records {
        if !seen.insert(rec.id.clone()) {
            return Err(Error::DuplicateId(rec.id));
        }
        let mut dp = Datapoint::new(rec.id.clone(), rec.text);
        if let Some(name) = rec.label {
            let id = labels.id_of(&name).ok_or(Error::UnknownLabel {
                label: name,
                record: rec.id,
            })?;
            dp.gt = Some(id);
        }
        out.push(dp);
    }
    Ok(out)
}

fn parse_jsonl_records(raw: &str) -> Result<Vec<RecordDoc>> {
    let mut records = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordDoc = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}

fn parse_csv_records(raw: &str) -> Result<Vec<RecordDoc>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(raw.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id_col, text_col) = match (col("id"), col("text")) {
        (Some(i), Some(t)) => (i, t),
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "CSV needs `id` and `text` columns".into(),
            })
        }
    };
    let label_col = col("label");
    let mut records = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            line: row_idx + 2,
            message: e.to_string(),
        })?;
        let get = |i: usize| row.get(i).unwrap_or("").to_string();
        let label = label_col.map(&get).filter(|s| !s.is_empty());
        records.push(RecordDoc {
            id: get(id_col),
            text: get(text_col),
            label,
        });
    }
    Ok(records)
}

#[derive(Serialize, Deserialize)]
struct InstanceHeaderDoc {
    ground_truth: Vec<u16>,
    theta_acc: String,
    theta_evidence: String,
    theta_rule_acc: String,
    label_count: usize,
}

/// Renders the instance output matrix as CSV with `r1..rm` headers.
pub fn instance_matrix_to_csv(outputs: &[Vec<LabelId>]) -> String {
    matrix_to_csv(outputs)
}

fn matrix_to_csv(rows: &[Vec<LabelId>]) -> String {
    let m = rows.first().map_or(0, Vec::len);
    let mut out = String::new();
    let header: Vec<String> = (1..=m).map(|j| format!("r{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|y| y.0.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Renders the instance header (ground truth, thetas, vocabulary size).
pub fn instance_header_to_json(inst: &RepairInstance) -> Result<String> {
    let doc = InstanceHeaderDoc {
        ground_truth: inst.ground_truth.iter().map(|g| g.0).collect(),
        theta_acc: theta_to_string(inst.thetas.acc),
        theta_evidence: theta_to_string(inst.thetas.evidence),
        theta_rule_acc: theta_to_string(inst.thetas.rule_acc),
        label_count: inst.label_count,
    };
    let mut out = serde_json::to_string_pretty(&doc)?;
    out.push('\n');
    Ok(out)
}

fn matrix_from_csv(raw: &str) -> Result<Vec<Vec<LabelId>>> {
    let mut rows = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue; // header
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<u16>()
                    .map(LabelId)
                    .map_err(|_| Error::Parse {
                        line: lineno + 1,
                        message: format!("`{cell}` is not a label id"),
                    })
            })
            .collect::<Result<Vec<LabelId>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reassembles an instance from its CSV matrix and JSON header.
pub fn instance_from_files(matrix_csv: &str, header_json: &str) -> Result<RepairInstance> {
    let outputs = matrix_from_csv(matrix_csv)?;
    let doc: InstanceHeaderDoc = serde_json::from_str(header_json)?;
    let thetas = Thetas {
        acc: parse_theta(&doc.theta_acc)?,
        evidence: parse_theta(&doc.theta_evidence)?,
        rule_acc: parse_theta(&doc.theta_rule_acc)?,
    };
    RepairInstance::new(
        outputs,
        doc.ground_truth.into_iter().map(LabelId).collect(),
        thetas,
        doc.label_count,
    )
}

/// Renders a plan's target matrix as CSV (same layout as the instance
/// matrix).
pub fn plan_to_csv(plan: &RepairPlan) -> String {
    matrix_to_csv(&plan.targets)
}

/// Vote matrix exchange format: the label vocabulary on the first line,
/// then one row of m integer label ids per datapoint.
pub fn votes_to_csv(votes: &VoteMatrix, labels: &LabelSet) -> String {
    let mut out = String::new();
    out.push_str(&labels.names().join(","));
    out.push('\n');
    for row in votes.rows() {
        let line: Vec<String> = row.iter().map(|y| y.0.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Parses the vote exchange format back into a matrix.
pub fn votes_from_csv(raw: &str) -> Result<(VoteMatrix, Vec<String>)> {
    let mut lines = raw.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "votes file is empty".into(),
    })?;
    let label_names: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<u16>()
                    .map(LabelId)
                    .map_err(|_| Error::Parse {
                        line: lineno + 2,
                        message: format!("`{cell}` is not a label id"),
                    })
            })
            .collect::<Result<Vec<LabelId>>>()?;
        rows.push(row);
    }
    let votes = VoteMatrix::new(rows, label_names.len())?;
    Ok((votes, label_names))
}

/// Audit log: every refinement step applied to every rule, path-addressed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditLog {
    pub rules: Vec<AuditEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditEntry {
    pub name: String,
    pub rcost: usize,
    pub steps: RefinementSequence,
}

pub fn audit_log_to_json(log: &AuditLog) -> Result<String> {
    let mut out = serde_json::to_string_pretty(log)?;
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::ABSTAIN;

    fn sample_set() -> RuleSet {
        let labels = LabelSet::new(vec!["ABSTAIN", "POS", "NEG"]).unwrap();
        let tree = RuleTree::new(Node::inner(
            Predicate::contains_word("waste"),
            Node::leaf(ABSTAIN),
            Node::inner(
                Predicate::opaque_equals("sentiment", LabelId(1)),
                Node::leaf(LabelId(2)),
                Node::leaf(LabelId(1)),
            ),
        ));
        RuleSet {
            labels,
            rules: vec![NamedRule {
                name: "waste_rule".into(),
                tree,
            }],
        }
    }

    #[test]
    fn rule_set_round_trips_byte_exact() {
        let set = sample_set();
        let json = rule_set_to_json(&set).unwrap();
        let parsed = rule_set_from_json(&json).unwrap();
        assert_eq!(parsed, set);
        // Serializing the parse reproduces the document exactly.
        assert_eq!(rule_set_to_json(&parsed).unwrap(), json);
        // Whitespace changes do not affect the parse.
        let squashed: String = json.split_whitespace().collect::<Vec<_>>().join(" ");
        assert_eq!(rule_set_from_json(&squashed).unwrap(), set);
    }

    #[test]
    fn rule_file_rejects_unknown_labels() {
        let json = r#"{"labels":["ABSTAIN","POS"],"rules":[{"name":"r","root":{"label":"NEG"}}]}"#;
        assert!(matches!(
            rule_set_from_json(json),
            Err(Error::UnknownLabel { .. })
        ));
    }

    #[test]
    fn votes_round_trip() {
        let labels = LabelSet::new(vec!["ABSTAIN", "POS", "NEG"]).unwrap();
        let votes =
            VoteMatrix::new(vec![vec![LabelId(1), ABSTAIN], vec![LabelId(2), LabelId(2)]], 3)
                .unwrap();
        let csv = votes_to_csv(&votes, &labels);
        let (parsed, names) = votes_from_csv(&csv).unwrap();
        assert_eq!(parsed, votes);
        assert_eq!(names, labels.names());
    }
}
