//! Repairs labeling functions, represented as binary rule trees, from a
//! small set of ground-truth-labeled datapoints.
//!
//! The engine plans a minimum-change modification of the rules' outputs on
//! the labeled seed set with an exact integer search, realizes that plan by
//! refining each rule tree one path at a time, and evaluates the improvement
//! through built-in label-aggregation models.
//!
//! Layers, bottom up:
//!
//! - [`label`], [`datapoint`], [`predicate`], [`rule`]: the rule model —
//!   vocabularies, tokenized datapoints, atomic predicates, and immutable
//!   rule trees with refinement steps.
//! - [`expr`]: a structured labeling-function DSL and its translation to
//!   rule trees, including opaque-labeler wrapping.
//! - [`space`]: candidate predicate generation with signature-class
//!   deduplication and separator predicates.
//! - [`planner`] and [`lp`]: the exact output-change planner and its LP
//!   export.
//! - [`refine`]: Gini scoring and the three per-path repair algorithms.
//! - [`model`]: majority vote, EM-weighted vote, and the external
//!   aggregator adapter.
//! - [`metrics`], [`format`], [`pipeline`]: evaluation quantities, file
//!   formats, and the end-to-end command pipeline.

pub mod datapoint;
pub mod error;
pub mod expr;
pub mod format;
pub mod label;
pub mod lp;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod planner;
pub mod predicate;
pub mod refine;
pub mod rule;
pub mod space;

pub use datapoint::{tokenize, Datapoint};
pub use error::{Error, Result};
pub use expr::{eval_expr, lf_expr_to_rule, wrap_blackbox, Cond, LfExpr};
pub use format::{NamedRule, RuleSet};
pub use label::{Label, LabelId, LabelSet, ABSTAIN};
pub use lp::export_program;
pub use metrics::{
    datapoint_accuracy, evidence, prediction_deltas, repair_cost, rule_accuracy,
    AccuracyDenominator, MetricReport,
};
pub use model::{
    em_weighted_vote, external_model_adapter, majority_vote, EmWeightedVote, ExternalModel,
    LabelModel, MajorityVote, Prediction, VoteMatrix,
};
pub use pipeline::{
    apply_rules, run_repair_pipeline, sample_seed_set, ModelChoice, PipelineConfig, PipelineRun,
};
pub use planner::{
    brute_force_plan, parse_theta, plan_repair, verify_plan, ConstraintReport, RepairInstance,
    RepairPlan, SearchDomain, SolveMode, Theta, Thetas,
};
pub use predicate::{EvalEnv, OpaqueRegistry, Predicate};
pub use refine::{
    apply_repair_plan, brute_force_path_repair, entropy_path_repair, gini, greedy_path_repair,
    single_rule_refine, split_score, GiniScore, PathAlgo, RepairOutcome,
};
pub use rule::{Node, Path, RefinementSequence, RefinementStep, RuleTree};
pub use space::{candidate_predicates, separator_predicate, signature, PredicateSignature};
