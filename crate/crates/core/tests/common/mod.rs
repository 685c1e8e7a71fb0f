//! Shared fixtures for the integration suites: the five-review micro
//! benchmark, seeded random planning instances, seeded random (rule,
//! targets) repair instances, and the synthetic noisy-keyword benchmark.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use rulefix::format::{NamedRule, RuleSet};
use rulefix::planner::{RepairInstance, Theta, Thetas};
use rulefix::predicate::Predicate;
use rulefix::rule::Node;
use rulefix::{Cond, Datapoint, LabelId, LabelSet, LfExpr, RuleTree, ABSTAIN};

pub const POS: LabelId = LabelId(1);
pub const NEG: LabelId = LabelId(2);

pub fn sentiment_labels() -> LabelSet {
    LabelSet::new(vec!["ABSTAIN", "POS", "NEG"]).unwrap()
}

/// The three keyword labeling functions of the running example, as DSL
/// expressions.
pub fn review_lf_exprs() -> Vec<(String, LfExpr)> {
    vec![
        (
            "key_word_star".to_string(),
            LfExpr::keyword_lf(Cond::any_word(&["star", "stars"]), POS),
        ),
        (
            "key_word_waste".to_string(),
            LfExpr::keyword_lf(Cond::word("waste"), NEG),
        ),
        (
            "key_word_poor".to_string(),
            LfExpr::keyword_lf(
                Cond::any_word(&["poorly", "useless", "horrible", "money"]),
                NEG,
            ),
        ),
    ]
}

pub fn review_rule_set() -> RuleSet {
    let labels = sentiment_labels();
    let rules = review_lf_exprs()
        .into_iter()
        .map(|(name, lf)| NamedRule {
            name,
            tree: rulefix::lf_expr_to_rule(&lf, &labels).unwrap(),
        })
        .collect();
    RuleSet { labels, rules }
}

/// The five product reviews with their true labels.
pub fn review_rows() -> Vec<(&'static str, &'static str, LabelId)> {
    vec![
        ("0", "five stars. product works fine", POS),
        (
            "1",
            "one star. rather poorly written needs more content and an editor",
            NEG,
        ),
        (
            "2",
            "five stars. awesome for the price lightweight and sturdy",
            POS,
        ),
        ("3", "one star. not my subject of interest, too dark", NEG),
        (
            "4",
            "yes, get it! the best money on a pool that we have ever spent. really cute and holds up well with kids constantly playing in it",
            POS,
        ),
    ]
}

pub fn review_dataset_jsonl() -> String {
    let labels = sentiment_labels();
    review_rows()
        .into_iter()
        .map(|(id, text, gt)| {
            format!(
                "{}\n",
                serde_json::json!({"id": id, "text": text, "label": labels.name(gt).unwrap()})
            )
        })
        .collect()
}

pub fn theta_choices() -> Vec<Theta> {
    ["0", "0.34", "0.5", "0.67", "1"]
        .iter()
        .map(|s| rulefix::parse_theta(s).unwrap())
        .collect()
}

/// Random planning instance within the given size caps.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> RepairInstance {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let y = rng.gen_range(2..=3usize);
    let outputs = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| LabelId(rng.gen_range(0..y) as u16))
                .collect()
        })
        .collect();
    let ground_truth = (0..n)
        .map(|_| LabelId(rng.gen_range(1..y) as u16))
        .collect();
    let choices = theta_choices();
    let thetas = Thetas {
        acc: *choices.choose(rng).unwrap(),
        evidence: *choices.choose(rng).unwrap(),
        rule_acc: *choices.choose(rng).unwrap(),
    };
    RepairInstance::new(outputs, ground_truth, thetas, y).unwrap()
}

/// Random rule tree of bounded depth over word predicates from `vocab`.
pub fn random_rule(rng: &mut ChaCha8Rng, vocab: &[String], y_count: usize, depth: usize) -> Node {
    if depth == 0 || rng.gen_bool(0.35) {
        Node::Leaf(LabelId(rng.gen_range(0..y_count) as u16))
    } else {
        let word = vocab.choose(rng).unwrap().clone();
        Node::inner(
            Predicate::contains_word(word),
            random_rule(rng, vocab, y_count, depth - 1),
            random_rule(rng, vocab, y_count, depth - 1),
        )
    }
}

/// Token-distinct datapoints with desired labels, plus a rule to repair.
/// Every datapoint carries a unique token, so any pair is separable.
pub fn random_repair_case(
    rng: &mut ChaCha8Rng,
    y_count: usize,
    max_targets: usize,
) -> (RuleTree, Vec<Datapoint>, Vec<LabelId>) {
    let vocab: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
    let rule = RuleTree::new(random_rule(rng, &vocab, y_count, 3));
    let k = rng.gen_range(1..=max_targets);
    let mut docs = Vec::with_capacity(k);
    let mut desired = Vec::with_capacity(k);
    for i in 0..k {
        let mut words: Vec<String> = vocab
            .iter()
            .filter(|_| rng.gen_bool(0.4))
            .cloned()
            .collect();
        words.push(format!("uniq{i}"));
        words.shuffle(rng);
        docs.push(Datapoint::new(format!("d{i}"), words.join(" ")));
        desired.push(LabelId(rng.gen_range(0..y_count) as u16));
    }
    (rule, docs, desired)
}

/// Synthetic benchmark: `n_docs` two-class documents and five keyword rules
/// with injected label-flip noise.
///
/// Every rule fires on one indicator token. The indicator is planted in
/// documents of the rule's own class with probability `hit`, and in
/// documents of the other class at the rate that makes 20-30% of the rule's
/// firings wrong. Documents also carry a class-correlated marker token
/// (92% own-class, 3% cross) that repairs can generalize from, filler
/// tokens, and a unique token so any two documents are separable.
pub struct SyntheticBenchmark {
    pub rule_set: RuleSet,
    pub dataset_jsonl: String,
}

pub fn synthetic_benchmark(seed: u64, n_docs: usize) -> SyntheticBenchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = sentiment_labels();

    // Rules 0, 2, 4 vote POS; rules 1, 3 vote NEG.
    let rule_class = [POS, NEG, POS, NEG, POS];
    let hit = 0.55f64;
    let noise: Vec<f64> = (0..5).map(|_| rng.gen_range(0.20..0.30)).collect();

    let mut lines = String::new();
    for i in 0..n_docs {
        let gt = if i % 2 == 0 { POS } else { NEG };
        let mut words: Vec<String> = Vec::new();
        for (k, &class) in rule_class.iter().enumerate() {
            let p = if class == gt {
                hit
            } else {
                // wrong / (wrong + right) = noise  =>  q = hit * r / (1 - r)
                hit * noise[k] / (1.0 - noise[k])
            };
            if rng.gen_bool(p) {
                words.push(format!("key{k}"));
            }
        }
        let marker = rng.gen_range(0.0..1.0f64);
        if marker < 0.92 {
            words.push(if gt == POS { "goodsign" } else { "badsign" }.to_string());
        } else if marker < 0.95 {
            words.push(if gt == POS { "badsign" } else { "goodsign" }.to_string());
        }
        for f in 0..30 {
            if rng.gen_bool(0.15) {
                words.push(format!("filler{f}"));
            }
        }
        words.push(format!("uniq{i}"));
        words.shuffle(&mut rng);
        lines.push_str(&format!(
            "{}\n",
            serde_json::json!({
                "id": format!("doc{i}"),
                "text": words.join(" "),
                "label": labels.name(gt).unwrap(),
            })
        ));
    }

    let rules = rule_class
        .iter()
        .enumerate()
        .map(|(k, &class)| NamedRule {
            name: format!("keyword_rule_{k}"),
            tree: RuleTree::new(Node::inner(
                Predicate::contains_word(format!("key{k}")),
                Node::leaf(ABSTAIN),
                Node::leaf(class),
            )),
        })
        .collect();

    SyntheticBenchmark {
        rule_set: RuleSet { labels, rules },
        dataset_jsonl: lines,
    }
}
