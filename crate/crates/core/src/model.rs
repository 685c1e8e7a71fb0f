//! Built-in rule-aggregation models and the adapter for external ones.
//!
//! A label model turns the matrix of per-rule votes into one prediction per
//! datapoint. Abstains carry zero weight everywhere: the abstain label means
//! "no prediction".

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use crate::error::{Error, Result};
use crate::label::{LabelId, LabelSet, ABSTAIN};

/// Rule outputs over a dataset: one row per datapoint, one column per rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteMatrix {
    rows: Vec<Vec<LabelId>>,
    label_count: usize,
}

impl VoteMatrix {
    pub fn new(rows: Vec<Vec<LabelId>>, label_count: usize) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::ShapeMismatch(format!(
                    "vote row {i} has {} entries, expected {width}",
                    row.len()
                )));
            }
            for &y in row {
                if y.index() >= label_count {
                    return Err(Error::LabelOutOfRange {
                        id: y.index(),
                        count: label_count,
                    });
                }
            }
        }
        Ok(VoteMatrix { rows, label_count })
    }

    pub fn rows(&self) -> &[Vec<LabelId>] {
        &self.rows
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// One aggregated prediction. When present, `weights` has one entry per
/// label, zero for abstain, and sums to 1 over the non-abstain labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: LabelId,
    pub weights: Option<Vec<f64>>,
}

/// Anything that maps a vote matrix to per-datapoint predictions.
pub trait LabelModel {
    fn predict(&self, votes: &VoteMatrix) -> Result<Vec<Prediction>>;
}

/// Majority vote. Abstains are excluded; the most frequent remaining label
/// wins, ties broken by the smallest label id; all-abstain rows predict
/// abstain.
#[derive(Debug, Clone, Copy, Default)]
pub struct MajorityVote;

pub fn majority_vote(votes: &VoteMatrix) -> Vec<Prediction> {
    votes
        .rows()
        .iter()
        .map(|row| majority_row(row, votes.label_count()))
        .collect()
}

fn majority_row(row: &[LabelId], label_count: usize) -> Prediction {
    let mut counts: BTreeMap<LabelId, usize> = BTreeMap::new();
    for &y in row {
        if !y.is_abstain() {
            *counts.entry(y).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Prediction {
            label: ABSTAIN,
            weights: None,
        };
    }
    let total: usize = counts.values().sum();
    let mut best = (ABSTAIN, 0usize);
    for (&label, &count) in &counts {
        if count > best.1 {
            best = (label, count);
        }
    }
    let mut weights = vec![0.0; label_count];
    for (&label, &count) in &counts {
        weights[label.index()] = count as f64 / total as f64;
    }
    Prediction {
        label: best.0,
        weights: Some(weights),
    }
}

impl LabelModel for MajorityVote {
    fn predict(&self, votes: &VoteMatrix) -> Result<Vec<Prediction>> {
        Ok(majority_vote(votes))
    }
}

/// One-coin EM aggregator: alternates between estimating per-rule
/// accuracies and per-datapoint label posteriors. With all accuracies equal
/// it reduces to majority vote; rules that are reliably wrong get
/// down-weighted (and their votes effectively inverted).
#[derive(Debug, Clone, Copy)]
pub struct EmWeightedVote {
    pub max_iters: usize,
    pub tol: f64,
    /// Initial accuracy for every rule.
    pub init_accuracy: f64,
}

impl Default for EmWeightedVote {
    fn default() -> Self {
        EmWeightedVote {
            max_iters: 100,
            tol: 1e-6,
            init_accuracy: 0.7,
        }
    }
}

/// Fitted EM state, exposed so tests can watch the objective.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub predictions: Vec<Prediction>,
    pub rule_accuracies: Vec<f64>,
    /// Data log-likelihood after each iteration; non-decreasing.
    pub log_likelihood_trace: Vec<f64>,
}

pub fn em_weighted_vote(votes: &VoteMatrix, max_iters: usize, tol: f64) -> Result<Vec<Prediction>> {
    Ok(EmWeightedVote {
        max_iters,
        tol,
        ..Default::default()
    }
    .fit(votes)?
    .predictions)
}

impl EmWeightedVote {
    pub fn fit(&self, votes: &VoteMatrix) -> Result<EmFit> {
        let k = votes.label_count().saturating_sub(1);
        if k == 0 {
            return Err(Error::InvalidInput(
                "EM aggregation needs at least one non-abstain label".into(),
            ));
        }
        let m = votes.width();
        let n = votes.len();
        let any_vote = votes
            .rows()
            .iter()
            .any(|row| row.iter().any(|y| !y.is_abstain()));
        if !any_vote {
            // Degenerate matrix: nothing to fit, everything abstains.
            return Ok(EmFit {
                predictions: vec![
                    Prediction {
                        label: ABSTAIN,
                        weights: None
                    };
                    n
                ],
                rule_accuracies: vec![self.init_accuracy; m],
                log_likelihood_trace: Vec::new(),
            });
        }

        let mut acc = vec![self.init_accuracy; m];
        // posteriors[i][y-1] over non-abstain labels.
        let mut posteriors = vec![vec![1.0 / k as f64; k]; n];
        let mut trace = Vec::new();

        for _ in 0..self.max_iters {
            // E-step: posterior over the true label given votes and
            // accuracies, uniform prior over non-abstain labels.
            let mut max_delta = 0.0f64;
            for (i, row) in votes.rows().iter().enumerate() {
                let mut weights = vec![1.0f64; k];
                for (j, &vote) in row.iter().enumerate() {
                    if vote.is_abstain() {
                        continue;
                    }
                    let wrong = if k > 1 {
                        (1.0 - acc[j]) / (k - 1) as f64
                    } else {
                        1.0 - acc[j]
                    };
                    for (y, w) in weights.iter_mut().enumerate() {
                        *w *= if vote.index() == y + 1 { acc[j] } else { wrong };
                    }
                }
                let z: f64 = weights.iter().sum();
                if z > 0.0 {
                    for w in &mut weights {
                        *w /= z;
                    }
                } else {
                    weights = vec![1.0 / k as f64; k];
                }
                for (y, &w) in weights.iter().enumerate() {
                    max_delta = max_delta.max((w - posteriors[i][y]).abs());
                }
                posteriors[i] = weights;
            }

            trace.push(log_likelihood(votes, &acc, k));

            // M-step: accuracy = expected fraction of endorsed votes.
            for j in 0..m {
                let mut matched = 0.0f64;
                let mut total = 0.0f64;
                for (i, row) in votes.rows().iter().enumerate() {
                    let vote = row[j];
                    if vote.is_abstain() {
                        continue;
                    }
                    total += 1.0;
                    matched += posteriors[i][vote.index() - 1];
                }
                if total > 0.0 {
                    acc[j] = matched / total;
                }
            }

            if max_delta < tol_floor(self.tol) {
                break;
            }
        }

        let predictions = posteriors
            .iter()
            .zip(votes.rows())
            .map(|(post, row)| {
                if row.iter().all(|y| y.is_abstain()) {
                    return Prediction {
                        label: ABSTAIN,
                        weights: None,
                    };
                }
                let mut best = (0usize, f64::NEG_INFINITY);
                for (y, &w) in post.iter().enumerate() {
                    if w > best.1 {
                        best = (y, w);
                    }
                }
                let mut weights = vec![0.0; k + 1];
                weights[1..].copy_from_slice(post);
                Prediction {
                    label: LabelId((best.0 + 1) as u16),
                    weights: Some(weights),
                }
            })
            .collect();

        Ok(EmFit {
            predictions,
            rule_accuracies: acc,
            log_likelihood_trace: trace,
        })
    }
}

fn tol_floor(tol: f64) -> f64 {
    if tol > 0.0 {
        tol
    } else {
        f64::EPSILON
    }
}

/// Marginal data log-likelihood under the one-coin model with a uniform
/// prior over non-abstain labels.
fn log_likelihood(votes: &VoteMatrix, acc: &[f64], k: usize) -> f64 {
    let prior = 1.0 / k as f64;
    votes
        .rows()
        .iter()
        .map(|row| {
            let mut total = 0.0f64;
            for y in 0..k {
                let mut p = prior;
                for (j, &vote) in row.iter().enumerate() {
                    if vote.is_abstain() {
                        continue;
                    }
                    let wrong = if k > 1 {
                        (1.0 - acc[j]) / (k - 1) as f64
                    } else {
                        1.0 - acc[j]
                    };
                    p *= if vote.index() == y + 1 { acc[j] } else { wrong };
                }
                total += p;
            }
            total.max(f64::MIN_POSITIVE).ln()
        })
        .sum()
}

impl LabelModel for EmWeightedVote {
    fn predict(&self, votes: &VoteMatrix) -> Result<Vec<Prediction>> {
        Ok(self.fit(votes)?.predictions)
    }
}

/// Runs an external aggregator as a black box: votes go out as CSV, one
/// predicted label id per row comes back.
///
/// The command is split on whitespace and invoked with two extra arguments:
/// the votes file to read and the predictions file to write. Exit code 0
/// means success.
#[derive(Debug, Clone)]
pub struct ExternalModel {
    pub command: String,
    pub exchange_dir: PathBuf,
    pub labels: LabelSet,
}

pub fn external_model_adapter(
    votes: &VoteMatrix,
    command: &str,
    exchange_dir: &Path,
    labels: &LabelSet,
) -> Result<Vec<Prediction>> {
    ExternalModel {
        command: command.to_string(),
        exchange_dir: exchange_dir.to_path_buf(),
        labels: labels.clone(),
    }
    .predict(votes)
}

impl LabelModel for ExternalModel {
    fn predict(&self, votes: &VoteMatrix) -> Result<Vec<Prediction>> {
        std::fs::create_dir_all(&self.exchange_dir)?;
        let votes_path = self.exchange_dir.join("votes.csv");
        let preds_path = self.exchange_dir.join("predictions.csv");
        std::fs::write(&votes_path, crate::format::votes_to_csv(votes, &self.labels))?;
        let _ = std::fs::remove_file(&preds_path);

        let mut parts = self.command.split_whitespace();
        let program = parts.next().ok_or_else(|| {
            Error::AdapterCommand("external model command is empty".into())
        })?;
        let status = Command::new(program)
            .args(parts)
            .arg(&votes_path)
            .arg(&preds_path)
            .status()
            .map_err(|e| Error::AdapterCommand(format!("failed to spawn `{program}`: {e}")))?;
        if !status.success() {
            return Err(Error::AdapterCommand(format!(
                "`{}` exited with {status}",
                self.command
            )));
        }

        let raw = std::fs::read_to_string(&preds_path)
            .map_err(|e| Error::AdapterOutput(format!("cannot read predictions.csv: {e}")))?;
        let mut predictions = Vec::new();
        for (lineno, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let id: usize = line.parse().map_err(|_| {
                Error::AdapterOutput(format!("line {}: `{line}` is not a label id", lineno + 1))
            })?;
            if id >= self.labels.len() {
                return Err(Error::AdapterOutput(format!(
                    "line {}: label id {id} is outside the {}-label vocabulary",
                    lineno + 1,
                    self.labels.len()
                )));
            }
            predictions.push(Prediction {
                label: LabelId(id as u16),
                weights: None,
            });
        }
        if predictions.len() != votes.len() {
            return Err(Error::AdapterOutput(format!(
                "expected {} prediction rows, got {}",
                votes.len(),
                predictions.len()
            )));
        }
        Ok(predictions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const POS: LabelId = LabelId(1);
    const NEG: LabelId = LabelId(2);

    fn labels() -> LabelSet {
        LabelSet::new(vec!["ABSTAIN", "POS", "NEG"]).unwrap()
    }

    #[test]
    fn majority_excludes_abstains_and_breaks_ties_low() {
        let votes = VoteMatrix::new(
            vec![
                vec![NEG, ABSTAIN, NEG],
                vec![ABSTAIN, ABSTAIN, ABSTAIN],
                vec![POS, NEG, ABSTAIN],
            ],
            3,
        )
        .unwrap();
        let preds = majority_vote(&votes);
        assert_eq!(preds[0].label, NEG);
        assert_eq!(preds[1].label, ABSTAIN);
        assert!(preds[1].weights.is_none());
        // One vote each: the smaller label id wins.
        assert_eq!(preds[2].label, POS);
        let w = preds[2].weights.as_ref().unwrap();
        assert_eq!(w.len(), 3);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn majority_matches_the_review_table_after_repair() {
        // Post-repair rule outputs for the five reviews; every row's
        // majority equals the true label.
        let votes = VoteMatrix::new(
            vec![
                vec![POS, ABSTAIN, ABSTAIN],
                vec![NEG, ABSTAIN, NEG],
                vec![POS, ABSTAIN, ABSTAIN],
                vec![NEG, ABSTAIN, ABSTAIN],
                vec![ABSTAIN, ABSTAIN, POS],
            ],
            3,
        )
        .unwrap();
        let truth = [POS, NEG, POS, NEG, POS];
        let preds = majority_vote(&votes);
        for (p, want) in preds.iter().zip(truth) {
            assert_eq!(p.label, want);
        }
    }

    #[test]
    fn majority_is_permutation_equivariant() {
        let rows = vec![
            vec![POS, NEG, ABSTAIN, POS],
            vec![NEG, NEG, POS, ABSTAIN],
            vec![ABSTAIN, ABSTAIN, ABSTAIN, ABSTAIN],
        ];
        let votes = VoteMatrix::new(rows.clone(), 3).unwrap();
        let permuted = VoteMatrix::new(
            rows.iter()
                .map(|r| vec![r[2], r[0], r[3], r[1]])
                .collect(),
            3,
        )
        .unwrap();
        let a: Vec<LabelId> = majority_vote(&votes).into_iter().map(|p| p.label).collect();
        let b: Vec<LabelId> = majority_vote(&permuted)
            .into_iter()
            .map(|p| p.label)
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn em_reduces_to_majority_on_unanimous_votes() {
        let votes = VoteMatrix::new(
            vec![
                vec![POS, POS, POS],
                vec![NEG, NEG, NEG],
                vec![ABSTAIN, ABSTAIN, ABSTAIN],
            ],
            3,
        )
        .unwrap();
        let em = em_weighted_vote(&votes, 50, 1e-9).unwrap();
        let maj = majority_vote(&votes);
        for (e, m) in em.iter().zip(&maj) {
            assert_eq!(e.label, m.label);
        }
        // Posterior weights normalize over the non-abstain labels.
        let w = em[0].weights.as_ref().unwrap();
        assert_eq!(w[0], 0.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    /// 200 synthetic datapoints, four noisy-but-honest rules and one that
    /// is always wrong. EM learns to discount (effectively invert) the bad
    /// rule, so it cannot do worse than plain majority voting.
    fn adversarial_matrix() -> (VoteMatrix, Vec<LabelId>) {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for _ in 0..200 {
            let gt = if rng.gen_bool(0.5) { POS } else { NEG };
            let flip = |y: LabelId| if y == POS { NEG } else { POS };
            let mut row = Vec::new();
            for _ in 0..4 {
                row.push(if rng.gen_bool(0.2) {
                    ABSTAIN
                } else if rng.gen_bool(0.75) {
                    gt
                } else {
                    flip(gt)
                });
            }
            row.push(flip(gt));
            rows.push(row);
            truth.push(gt);
        }
        (VoteMatrix::new(rows, 3).unwrap(), truth)
    }

    #[test]
    fn em_beats_majority_with_an_inverted_rule() {
        let (votes, truth) = adversarial_matrix();
        let maj = majority_vote(&votes);
        let em = em_weighted_vote(&votes, 100, 1e-9).unwrap();
        let acc = |preds: &[Prediction]| {
            preds
                .iter()
                .zip(&truth)
                .filter(|(p, &g)| p.label == g)
                .count() as f64
                / truth.len() as f64
        };
        assert!(acc(&em) >= acc(&maj), "em {} < majority {}", acc(&em), acc(&maj));
    }

    #[test]
    fn em_log_likelihood_never_decreases() {
        let (votes, _) = adversarial_matrix();
        let fit = EmWeightedVote::default().fit(&votes).unwrap();
        assert!(fit.log_likelihood_trace.len() > 1);
        for w in fit.log_likelihood_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "log-likelihood dropped: {w:?}");
        }
        // The inverted rule's estimated accuracy collapses.
        assert!(fit.rule_accuracies[4] < 0.2);
    }

    #[test]
    fn em_falls_back_on_all_abstain_input() {
        let votes = VoteMatrix::new(vec![vec![ABSTAIN, ABSTAIN]; 3], 3).unwrap();
        let preds = em_weighted_vote(&votes, 10, 1e-6).unwrap();
        assert!(preds.iter().all(|p| p.label == ABSTAIN));
    }

    #[test]
    fn external_adapter_round_trips_through_a_script() {
        let dir = tempfile::tempdir().unwrap();
        // Identity aggregator: echo the first rule's column.
        let script = dir.path().join("first_column.sh");
        std::fs::write(&script, "#!/bin/sh\ntail -n +2 \"$1\" | cut -d, -f1 > \"$2\"\n")
            .unwrap();
        let votes = VoteMatrix::new(
            vec![vec![POS, NEG], vec![ABSTAIN, NEG], vec![NEG, POS]],
            3,
        )
        .unwrap();
        let preds = external_model_adapter(
            &votes,
            &format!("sh {}", script.display()),
            dir.path(),
            &labels(),
        )
        .unwrap();
        let got: Vec<LabelId> = preds.into_iter().map(|p| p.label).collect();
        assert_eq!(got, vec![POS, ABSTAIN, NEG]);
    }

    #[test]
    fn external_adapter_validates_output() {
        let dir = tempfile::tempdir().unwrap();
        let votes = VoteMatrix::new(vec![vec![POS], vec![NEG]], 3).unwrap();

        // Out-of-range label id.
        let bad = dir.path().join("bad.sh");
        std::fs::write(&bad, "#!/bin/sh\nprintf '9\\n9\\n' > \"$2\"\n").unwrap();
        assert!(matches!(
            external_model_adapter(&votes, &format!("sh {}", bad.display()), dir.path(), &labels()),
            Err(Error::AdapterOutput(_))
        ));

        // Row-count mismatch.
        let short = dir.path().join("short.sh");
        std::fs::write(&short, "#!/bin/sh\nprintf '1\\n' > \"$2\"\n").unwrap();
        assert!(matches!(
            external_model_adapter(
                &votes,
                &format!("sh {}", short.display()),
                dir.path(),
                &labels()
            ),
            Err(Error::AdapterOutput(_))
        ));

        // Non-zero exit code.
        let fail = dir.path().join("fail.sh");
        std::fs::write(&fail, "#!/bin/sh\nexit 3\n").unwrap();
        assert!(matches!(
            external_model_adapter(
                &votes,
                &format!("sh {}", fail.display()),
                dir.path(),
                &labels()
            ),
            Err(Error::AdapterCommand(_))
        ));
    }
}
