//! End-to-end repair pipeline: apply rules, aggregate, sample a labeled
//! seed set, plan and realize repairs, re-aggregate, and report.
//!
//! The whole run is a pure function of (dataset bytes, rule bytes, config,
//! seed) when the solver runs in exact mode.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datapoint::Datapoint;
use crate::error::{Error, Result};
use crate::format::{
    audit_log_to_json, instance_header_to_json, instance_matrix_to_csv, load_dataset, plan_to_csv,
    read_rule_set, write_rule_set, AuditEntry, AuditLog, RuleSet,
};
use crate::label::LabelId;
use crate::metrics::{
    datapoint_accuracy, evidence, prediction_deltas, rule_accuracy, AccuracyDenominator,
    DatapointMetrics, MetricReport, RuleMetrics,
};
use crate::model::{EmWeightedVote, ExternalModel, LabelModel, Prediction, VoteMatrix};
use crate::planner::{
    plan_repair, parse_theta, verify_plan, RepairInstance, SolveMode, Thetas,
};
use crate::predicate::{EvalEnv, OpaqueRegistry};
use crate::refine::{apply_repair_plan, PathAlgo};
use crate::rule::RuleTree;

/// Which aggregator closes the loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelChoice {
    Majority,
    Em,
    /// External command invoked through the CSV exchange protocol.
    External(String),
}

impl std::str::FromStr for ModelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(ModelChoice::Majority),
            "em" => Ok(ModelChoice::Em),
            other => match other.strip_prefix("external:") {
                Some(cmd) if !cmd.is_empty() => Ok(ModelChoice::External(cmd.to_string())),
                _ => Err(Error::InvalidInput(format!(
                    "unknown label model `{other}` (expected majority|em|external:<cmd>)"
                ))),
            },
        }
    }
}

/// Full pipeline configuration. Thresholds default to 0.7 and the path
/// algorithm to the impurity-guided repair.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub rules_path: PathBuf,
    pub data_path: PathBuf,
    pub out_dir: PathBuf,
    pub thetas: Thetas,
    pub seed_size: usize,
    pub path_algo: PathAlgo,
    pub model: ModelChoice,
    pub seed: u64,
    pub solve_mode: SolveMode,
}

impl PipelineConfig {
    pub fn new(rules_path: PathBuf, data_path: PathBuf, out_dir: PathBuf) -> Self {
        PipelineConfig {
            rules_path,
            data_path,
            out_dir,
            thetas: Thetas::uniform(parse_theta("0.7").unwrap()),
            seed_size: 40,
            path_algo: PathAlgo::Entropy,
            model: ModelChoice::Majority,
            seed: 0,
            solve_mode: SolveMode::Exact,
        }
    }
}

/// Applies every rule to every datapoint, producing the vote matrix.
pub fn apply_rules(
    rules: &[RuleTree],
    datapoints: &[Datapoint],
    env: &EvalEnv,
) -> Result<VoteMatrix> {
    let rows = datapoints
        .iter()
        .map(|x| rules.iter().map(|r| r.evaluate(x, env)).collect())
        .collect::<Result<Vec<Vec<LabelId>>>>()?;
    VoteMatrix::new(rows, env.labels.len())
}

/// Draws the labeled seed set: half correctly-predicted, half
/// wrongly-predicted datapoints (by the before-model), seeded and
/// deterministic. Falls back with a warning when a stratum is too small.
/// Returns indices into `datapoints` in dataset order.
pub fn sample_seed_set(
    datapoints: &[Datapoint],
    before: &[Prediction],
    size: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if size < 2 {
        return Err(Error::InvalidInput(format!(
            "seed-set size must be at least 2, got {size}"
        )));
    }
    if before.len() != datapoints.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} datapoints",
            before.len(),
            datapoints.len()
        )));
    }
    let pool: Vec<usize> = (0..datapoints.len())
        .filter(|&i| datapoints[i].gt.is_some())
        .collect();
    if pool.is_empty() {
        return Err(Error::InvalidInput(
            "no ground-truth-labeled datapoints to sample from".into(),
        ));
    }
    if size > pool.len() {
        return Err(Error::InvalidInput(format!(
            "seed-set size {size} exceeds the labeled pool ({})",
            pool.len()
        )));
    }

    let mut correct: Vec<usize> = Vec::new();
    let mut wrong: Vec<usize> = Vec::new();
    for &i in &pool {
        if before[i].label == datapoints[i].gt.unwrap() {
            correct.push(i);
        } else {
            wrong.push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    correct.shuffle(&mut rng);
    wrong.shuffle(&mut rng);

    let want_correct = size.div_ceil(2);
    let want_wrong = size / 2;
    let take_correct = want_correct.min(correct.len());
    let take_wrong = want_wrong.min(wrong.len());
    let mut chosen: Vec<usize> = Vec::with_capacity(size);
    chosen.extend(&correct[..take_correct]);
    chosen.extend(&wrong[..take_wrong]);

    // Top up from whichever stratum still has members.
    if chosen.len() < size {
        log::warn!(
            "seed sampling wanted {want_correct} correct + {want_wrong} wrong but strata hold \
             {} + {}; filling from the larger stratum",
            correct.len(),
            wrong.len()
        );
        let mut extra: Vec<usize> = correct[take_correct..]
            .iter()
            .chain(&wrong[take_wrong..])
            .copied()
            .collect();
        extra.shuffle(&mut rng);
        chosen.extend(extra.into_iter().take(size - chosen.len()));
    }
    chosen.sort_unstable();
    Ok(chosen)
}

fn aggregator(choice: &ModelChoice, out_dir: &Path, labels: &crate::label::LabelSet)
    -> Box<dyn LabelModel> {
    match choice {
        ModelChoice::Majority => Box::new(crate::model::MajorityVote),
        ModelChoice::Em => Box::new(EmWeightedVote::default()),
        ModelChoice::External(cmd) => Box::new(ExternalModel {
            command: cmd.clone(),
            exchange_dir: out_dir.join("exchange"),
            labels: labels.clone(),
        }),
    }
}

/// Everything a pipeline run produces in memory; files land in
/// `config.out_dir`.
#[derive(Debug)]
pub struct PipelineRun {
    pub report: MetricReport,
    pub refined: RuleSet,
    pub seed_indices: Vec<usize>,
}

/// Runs the full loop: rules -> before model -> seed sample -> plan ->
/// refine -> after model -> metrics, writing the refined rules, plan,
/// instance, audit log, and report under `config.out_dir`.
pub fn run_repair_pipeline(
    config: &PipelineConfig,
    opaques: &OpaqueRegistry,
) -> Result<PipelineRun> {
    let stage = |name: &'static str| move |e: Error| e.in_stage(name);

    let rule_set = read_rule_set(&config.rules_path).map_err(stage("load-rules"))?;
    let labels = rule_set.labels.clone();
    let env = EvalEnv::new(&labels, opaques);
    let datapoints =
        load_dataset(&config.data_path, &labels).map_err(stage("load-data"))?;
    if datapoints.is_empty() {
        return Err(Error::InvalidInput("dataset is empty".into()).in_stage("load-data"));
    }

    let trees: Vec<RuleTree> = rule_set.rules.iter().map(|r| r.tree.clone()).collect();
    let before_votes = apply_rules(&trees, &datapoints, &env).map_err(stage("apply-rules"))?;
    let model = aggregator(&config.model, &config.out_dir, &labels);
    let before_preds = model
        .predict(&before_votes)
        .map_err(stage("aggregate-before"))?;

    let seed_indices = sample_seed_set(&datapoints, &before_preds, config.seed_size, config.seed)
        .map_err(stage("sample-seed"))?;

    let seed_points: Vec<&Datapoint> = seed_indices.iter().map(|&i| &datapoints[i]).collect();
    let seed_outputs: Vec<Vec<LabelId>> = seed_indices
        .iter()
        .map(|&i| before_votes.rows()[i].clone())
        .collect();
    let seed_gts: Vec<LabelId> = seed_points.iter().map(|x| x.gt.unwrap()).collect();
    let instance = RepairInstance::new(
        seed_outputs,
        seed_gts.clone(),
        config.thetas,
        labels.len(),
    )
    .map_err(stage("plan"))?;
    let plan = plan_repair(&instance, config.solve_mode).map_err(stage("plan"))?;
    let plan_report = verify_plan(&plan, &instance).map_err(stage("plan"))?;

    let outcome = apply_repair_plan(&trees, &plan, &seed_points, config.path_algo, &env)
        .map_err(stage("refine"))?;

    // Plan fidelity: the refined rules must reproduce the plan exactly on
    // the seed set.
    for (row, &x) in seed_points.iter().enumerate() {
        for (j, rule) in outcome.rules.iter().enumerate() {
            let got = rule.evaluate(x, &env).map_err(stage("verify"))?;
            if got != plan.targets[row][j] {
                return Err(Error::InvalidInput(format!(
                    "refined rule {j} returns {got} on `{}` but the plan wants {}",
                    x.id, plan.targets[row][j]
                ))
                .in_stage("verify"));
            }
        }
    }

    let after_votes = apply_rules(&outcome.rules, &datapoints, &env).map_err(stage("rerun"))?;
    let after_preds = model
        .predict(&after_votes)
        .map_err(stage("aggregate-after"))?;

    // Metrics over the ground-truth-bearing pool.
    let gt_idx: Vec<usize> = (0..datapoints.len())
        .filter(|&i| datapoints[i].gt.is_some())
        .collect();
    let gts: Vec<LabelId> = gt_idx.iter().map(|&i| datapoints[i].gt.unwrap()).collect();
    let before_labels: Vec<LabelId> = gt_idx.iter().map(|&i| before_preds[i].label).collect();
    let after_labels: Vec<LabelId> = gt_idx.iter().map(|&i| after_preds[i].label).collect();
    let deltas =
        prediction_deltas(&before_labels, &after_labels, &gts).map_err(stage("metrics"))?;

    let per_rule = rule_set
        .rules
        .iter()
        .enumerate()
        .map(|(j, rule)| {
            let before_col: Vec<LabelId> =
                gt_idx.iter().map(|&i| before_votes.rows()[i][j]).collect();
            let after_col: Vec<LabelId> =
                gt_idx.iter().map(|&i| after_votes.rows()[i][j]).collect();
            Ok(RuleMetrics {
                name: rule.name.clone(),
                accuracy_before: rule_accuracy(&before_col, &gts)?,
                accuracy_after: rule_accuracy(&after_col, &gts)?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(stage("metrics"))?;

    let per_datapoint = seed_indices
        .iter()
        .map(|&i| {
            let row = &after_votes.rows()[i];
            let gt = datapoints[i].gt.unwrap();
            DatapointMetrics {
                id: datapoints[i].id.clone(),
                evidence: evidence(row),
                accuracy_over_rules: datapoint_accuracy(row, gt, AccuracyDenominator::RuleCount),
                accuracy_over_votes: datapoint_accuracy(row, gt, AccuracyDenominator::NonAbstain),
            }
        })
        .collect();

    let report = MetricReport {
        global_before: deltas.global_before,
        global_after: deltas.global_after,
        fix_pct: deltas.fix_pct,
        preserve_pct: deltas.preserve_pct,
        cost: plan.cost,
        plan_optimal: plan.optimal,
        plan_feasible: plan_report.feasible,
        seed_ids: seed_points.iter().map(|x| x.id.clone()).collect(),
        per_datapoint,
        per_rule,
    };

    let refined = RuleSet {
        labels: labels.clone(),
        rules: rule_set
            .rules
            .iter()
            .zip(&outcome.rules)
            .map(|(named, tree)| crate::format::NamedRule {
                name: named.name.clone(),
                tree: tree.clone(),
            })
            .collect(),
    };
    let audit = AuditLog {
        rules: rule_set
            .rules
            .iter()
            .zip(&outcome.sequences)
            .map(|(named, seq)| AuditEntry {
                name: named.name.clone(),
                rcost: seq.rcost(),
                steps: seq.clone(),
            })
            .collect(),
    };

    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::from(e).in_stage("emit"))?;
    write_rule_set(&config.out_dir.join("refined_rules.json"), &refined)
        .map_err(stage("emit"))?;
    std::fs::write(
        config.out_dir.join("audit_log.json"),
        audit_log_to_json(&audit).map_err(stage("emit"))?,
    )
    .map_err(|e| Error::from(e).in_stage("emit"))?;
    std::fs::write(
        config.out_dir.join("instance_matrix.csv"),
        instance_matrix_to_csv(&instance.outputs),
    )
    .map_err(|e| Error::from(e).in_stage("emit"))?;
    std::fs::write(
        config.out_dir.join("instance_header.json"),
        instance_header_to_json(&instance).map_err(stage("emit"))?,
    )
    .map_err(|e| Error::from(e).in_stage("emit"))?;
    std::fs::write(config.out_dir.join("plan.csv"), plan_to_csv(&plan))
        .map_err(|e| Error::from(e).in_stage("emit"))?;
    emit_report(&report, &config.out_dir).map_err(stage("emit"))?;

    Ok(PipelineRun {
        report,
        refined,
        seed_indices,
    })
}

/// Writes `report.json` plus the per-rule before/after accuracy table.
/// Byte-stable for identical inputs.
pub fn emit_report(report: &MetricReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;

    let mut csv = String::from("name,accuracy_before,accuracy_after\n");
    for rule in &report.per_rule {
        csv.push_str(&format!(
            "{},{},{}\n",
            rule.name, rule.accuracy_before, rule.accuracy_after
        ));
    }
    std::fs::write(dir.join("per_rule_accuracy.csv"), csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::load_dataset;
    use crate::label::LabelSet;

    const POS: LabelId = LabelId(1);
    const NEG: LabelId = LabelId(2);

    fn labels() -> LabelSet {
        LabelSet::new(vec!["ABSTAIN", "POS", "NEG"]).unwrap()
    }

    fn write_tmp(name: &str, contents: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        (dir, path)
    }

    #[test]
    fn loads_the_five_review_rows_from_jsonl() {
        let body = r#"{"id": "0", "text": "five stars. product works fine", "label": "POS"}
{"id": "1", "text": "one star. rather poorly written needs more content and an editor", "label": "NEG"}
{"id": "2", "text": "five stars. awesome for the price lightweight and sturdy", "label": "POS"}
{"id": "3", "text": "one star. not my subject of interest, too dark", "label": "NEG"}
{"id": "4", "text": "yes, get it! the best money on a pool that we have ever spent. really cute and holds up well with kids constantly playing in it", "label": "POS"}
"#;
        let (_dir, path) = write_tmp("reviews.jsonl", body);
        let data = load_dataset(&path, &labels()).unwrap();
        assert_eq!(data.len(), 5);
        assert!(data.iter().all(|d| d.gt.is_some()));
        assert_eq!(data[1].gt, Some(NEG));
        assert!(data[0].tokens.contains(&"stars".to_string()));
    }

    #[test]
    fn loads_csv_with_optional_labels() {
        let body = "id,text,label\na,first doc,POS\nb,second doc,\n";
        let (_dir, path) = write_tmp("data.csv", body);
        let data = load_dataset(&path, &labels()).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0].gt, Some(POS));
        assert_eq!(data[1].gt, None);
    }

    #[test]
    fn empty_dataset_is_a_warning_not_an_error() {
        let (_dir, path) = write_tmp("empty.jsonl", "");
        assert!(load_dataset(&path, &labels()).unwrap().is_empty());
    }

    #[test]
    fn dataset_errors_name_the_offender() {
        let (_dir, path) = write_tmp(
            "bad_label.jsonl",
            r#"{"id": "r7", "text": "some text", "label": "MAYBE"}"#,
        );
        match load_dataset(&path, &labels()) {
            Err(Error::UnknownLabel { label, record }) => {
                assert_eq!(label, "MAYBE");
                assert_eq!(record, "r7");
            }
            other => panic!("expected unknown-label error, got {other:?}"),
        }

        let (_dir, path) = write_tmp(
            "dup.jsonl",
            "{\"id\": \"a\", \"text\": \"x\"}\n{\"id\": \"a\", \"text\": \"y\"}\n",
        );
        assert!(matches!(
            load_dataset(&path, &labels()),
            Err(Error::DuplicateId(_))
        ));

        let (_dir, path) = write_tmp("garbled.jsonl", "{\"id\": \"a\"\n");
        match load_dataset(&path, &labels()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    fn pool_with_strata(correct: usize, wrong: usize) -> (Vec<Datapoint>, Vec<Prediction>) {
        let mut points = Vec::new();
        let mut preds = Vec::new();
        for i in 0..correct + wrong {
            points.push(Datapoint::new(format!("d{i}"), format!("text {i}")).with_gt(POS));
            let label = if i < correct { POS } else { NEG };
            preds.push(Prediction {
                label,
                weights: None,
            });
        }
        (points, preds)
    }

    #[test]
    fn sampling_is_balanced_and_deterministic() {
        let (points, preds) = pool_with_strata(10, 10);
        let a = sample_seed_set(&points, &preds, 6, 42).unwrap();
        let b = sample_seed_set(&points, &preds, 6, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        let correct = a.iter().filter(|&&i| preds[i].label == POS).count();
        assert_eq!(correct, 3);
        // A different seed draws a different sample (with near certainty).
        let c = sample_seed_set(&points, &preds, 6, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_falls_back_when_a_stratum_is_small() {
        let (points, preds) = pool_with_strata(19, 1);
        let chosen = sample_seed_set(&points, &preds, 6, 0).unwrap();
        assert_eq!(chosen.len(), 6);
        let wrong = chosen.iter().filter(|&&i| preds[i].label == NEG).count();
        assert_eq!(wrong, 1);
    }

    #[test]
    fn sampling_preconditions() {
        let (points, preds) = pool_with_strata(5, 5);
        assert!(sample_seed_set(&points, &preds, 0, 0).is_err());
        assert!(sample_seed_set(&points, &preds, 1, 0).is_err());
        assert!(sample_seed_set(&points, &preds, 11, 0).is_err());
        // Unlabeled pool.
        let unlabeled: Vec<Datapoint> = points
            .iter()
            .map(|d| Datapoint::new(d.id.clone(), d.text.clone()))
            .collect();
        assert!(sample_seed_set(&unlabeled, &preds, 2, 0).is_err());
    }

    #[test]
    fn model_choice_parsing() {
        assert_eq!("majority".parse::<ModelChoice>().unwrap(), ModelChoice::Majority);
        assert_eq!("em".parse::<ModelChoice>().unwrap(), ModelChoice::Em);
        assert_eq!(
            "external:python3 agg.py".parse::<ModelChoice>().unwrap(),
            ModelChoice::External("python3 agg.py".into())
        );
        assert!("external:".parse::<ModelChoice>().is_err());
        assert!("snorkel".parse::<ModelChoice>().is_err());
    }
}
