use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use rulefix::format::{
    instance_from_files, plan_to_csv, read_rule_set, votes_from_csv, write_rule_set, NamedRule,
    RuleSet,
};
use rulefix::pipeline::{run_repair_pipeline, ModelChoice, PipelineConfig};
use rulefix::planner::{
    brute_force_plan, parse_theta, plan_repair, verify_plan, SearchDomain, SolveMode, Thetas,
};
use rulefix::predicate::{EvalEnv, OpaqueRegistry};
use rulefix::refine::{single_rule_refine, PathAlgo};
use rulefix::{apply_rules, export_program};

#[derive(Parser)]
#[command(
    name = "rulefix",
    about = "Repair labeling-function rule trees from a small labeled seed set"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full repair pipeline and emit reports.
    Refine(RefineArgs),
    /// Plan output changes for a serialized instance.
    Plan(PlanArgs),
    /// Refine one rule against explicit targets.
    RepairRule(RepairRuleArgs),
    /// Apply rules, aggregate, and report accuracy without repairing.
    Eval(EvalArgs),
    /// Aggregate a votes.csv into predictions.csv (external-model protocol).
    Aggregate(AggregateArgs),
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long, env = "RULEFIX_RULES")]
    rules: PathBuf,
    #[arg(long, env = "RULEFIX_DATA")]
    data: PathBuf,
    #[arg(long, env = "RULEFIX_SEED_SIZE", default_value_t = 40)]
    seed_size: usize,
    /// Per-datapoint accuracy threshold (decimal or p/q).
    #[arg(long, env = "RULEFIX_ACC", default_value = "0.7")]
    acc: String,
    /// Per-datapoint evidence threshold.
    #[arg(long, env = "RULEFIX_EVIDENCE", default_value = "0.7")]
    evidence: String,
    /// Per-rule accuracy threshold.
    #[arg(long, env = "RULEFIX_RACC", default_value = "0.7")]
    racc: String,
    #[arg(long, env = "RULEFIX_PATH_ALGO", default_value = "entropy")]
    path_algo: String,
    /// majority | em | external:<cmd>
    #[arg(long, env = "RULEFIX_MODEL", default_value = "majority")]
    model: String,
    /// exact | anytime:<secs>
    #[arg(long, env = "RULEFIX_SOLVER", default_value = "exact")]
    solver: String,
    #[arg(long, env = "RULEFIX_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "RULEFIX_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    /// Instance matrix CSV (r1..rm header, one row per datapoint).
    #[arg(long)]
    matrix: PathBuf,
    /// Instance header JSON (ground truth, thetas, label count).
    #[arg(long)]
    header: PathBuf,
    #[arg(long, default_value = "exact")]
    solver: String,
    /// Also solve by exhaustive enumeration and cross-check the cost.
    #[arg(long)]
    brute_check: bool,
    /// Write the integer program in LP format next to the plan.
    #[arg(long)]
    lp: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RepairRuleArgs {
    #[arg(long)]
    rules: PathBuf,
    /// Name of the rule to repair.
    #[arg(long)]
    rule: String,
    #[arg(long)]
    data: PathBuf,
    /// CSV with `id,label` columns: the desired outputs.
    #[arg(long)]
    targets: PathBuf,
    #[arg(long, default_value = "entropy")]
    path_algo: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "majority")]
    model: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AggregateArgs {
    votes: PathBuf,
    predictions: PathBuf,
    #[arg(long, default_value = "majority")]
    model: String,
}

fn parse_solver(s: &str) -> Result<SolveMode, String> {
    if s == "exact" {
        return Ok(SolveMode::Exact);
    }
    if let Some(secs) = s.strip_prefix("anytime:") {
        let secs: f64 = secs
            .parse()
            .map_err(|_| format!("invalid solver budget `{secs}`"))?;
        return Ok(SolveMode::Anytime(Duration::from_secs_f64(secs)));
    }
    Err(format!("unknown solver `{s}` (expected exact|anytime:<secs>)"))
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Refine(args) => cmd_refine(args),
        Command::Plan(args) => cmd_plan(args),
        Command::RepairRule(args) => cmd_repair_rule(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Aggregate(args) => cmd_aggregate(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

type CmdResult = Result<(), Box<dyn std::error::Error>>;

fn cmd_refine(args: RefineArgs) -> CmdResult {
    let thetas = Thetas {
        acc: parse_theta(&args.acc)?,
        evidence: parse_theta(&args.evidence)?,
        rule_acc: parse_theta(&args.racc)?,
    };
    let config = PipelineConfig {
        rules_path: args.rules,
        data_path: args.data,
        out_dir: args.out.clone(),
        thetas,
        seed_size: args.seed_size,
        path_algo: args.path_algo.parse::<PathAlgo>()?,
        model: args.model.parse::<ModelChoice>()?,
        seed: args.seed,
        solve_mode: parse_solver(&args.solver)?,
    };
    let run = run_repair_pipeline(&config, &OpaqueRegistry::new())?;
    println!(
        "repair complete: cost {} ({} plan), global accuracy {:.4} -> {:.4}",
        run.report.cost,
        if run.report.plan_optimal {
            "optimal"
        } else {
            "best-effort"
        },
        run.report.global_before,
        run.report.global_after
    );
    println!("outputs written to {}", args.out.display());
    Ok(())
}

fn cmd_plan(args: PlanArgs) -> CmdResult {
    let matrix = std::fs::read_to_string(&args.matrix)?;
    let header = std::fs::read_to_string(&args.header)?;
    let inst = instance_from_files(&matrix, &header)?;
    let plan = plan_repair(&inst, parse_solver(&args.solver)?)?;
    let report = verify_plan(&plan, &inst)?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("plan.csv"), plan_to_csv(&plan))?;
    let summary = serde_json::json!({
        "cost": plan.cost,
        "optimal": plan.optimal,
        "feasible": report.feasible,
    });
    std::fs::write(
        args.out.join("plan.json"),
        format!("{}\n", serde_json::to_string_pretty(&summary)?),
    )?;
    if args.lp {
        std::fs::write(args.out.join("program.lp"), export_program(&inst))?;
    }
    if args.brute_check {
        let oracle = brute_force_plan(&inst, SearchDomain::Reduced)?;
        if oracle.cost != plan.cost {
            return Err(format!(
                "brute-force cross-check failed: planner found cost {}, enumeration {}",
                plan.cost, oracle.cost
            )
            .into());
        }
        println!("brute-force cross-check passed (cost {})", plan.cost);
    }
    println!(
        "plan cost {} ({}), written to {}",
        plan.cost,
        if plan.optimal { "optimal" } else { "best-effort" },
        args.out.display()
    );
    Ok(())
}

fn cmd_repair_rule(args: RepairRuleArgs) -> CmdResult {
    let set = read_rule_set(&args.rules)?;
    let rule_name = args.rule.clone();
    let named = set
        .rules
        .iter()
        .find(|r| r.name == rule_name)
        .ok_or_else(|| format!("no rule named `{rule_name}` in the rule file"))?;
    let datapoints = rulefix::format::load_dataset(&args.data, &set.labels)?;

    let raw = std::fs::read_to_string(&args.targets)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(raw.as_bytes());
    let mut targets = Vec::new();
    for row in reader.records() {
        let row = row?;
        let id = row.get(0).unwrap_or("").to_string();
        let label_name = row.get(1).unwrap_or("").to_string();
        let label = set
            .labels
            .id_of(&label_name)
            .ok_or_else(|| format!("unknown label `{label_name}` for target `{id}`"))?;
        let dp = datapoints
            .iter()
            .find(|d| d.id == id)
            .ok_or_else(|| format!("target id `{id}` is not in the dataset"))?;
        targets.push((dp, label));
    }

    let reg = OpaqueRegistry::new();
    let env = EvalEnv::new(&set.labels, &reg);
    let algo = args.path_algo.parse::<PathAlgo>()?;
    let seq = single_rule_refine(&named.tree, &targets, algo, &env)?;
    let refined = named.tree.apply_sequence(&seq)?;

    std::fs::create_dir_all(&args.out)?;
    let out_set = RuleSet {
        labels: set.labels.clone(),
        rules: vec![NamedRule {
            name: named.name.clone(),
            tree: refined,
        }],
    };
    write_rule_set(&args.out.join("refined_rule.json"), &out_set)?;
    std::fs::write(
        args.out.join("refinement_sequence.json"),
        format!("{}\n", serde_json::to_string_pretty(&seq)?),
    )?;
    println!(
        "repaired `{}` with {} steps; outputs in {}",
        named.name,
        seq.rcost(),
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let set = read_rule_set(&args.rules)?;
    let datapoints = rulefix::format::load_dataset(&args.data, &set.labels)?;
    let reg = OpaqueRegistry::new();
    let env = EvalEnv::new(&set.labels, &reg);
    let trees: Vec<_> = set.rules.iter().map(|r| r.tree.clone()).collect();
    let votes = apply_rules(&trees, &datapoints, &env)?;
    let preds = predict_with(&args.model, &votes, &set, &args.out)?;

    let gt_idx: Vec<usize> = (0..datapoints.len())
        .filter(|&i| datapoints[i].gt.is_some())
        .collect();
    let global = if gt_idx.is_empty() {
        serde_json::Value::Null
    } else {
        let correct = gt_idx
            .iter()
            .filter(|&&i| Some(preds[i].label) == datapoints[i].gt)
            .count();
        serde_json::json!(correct as f64 / gt_idx.len() as f64)
    };
    let per_rule: Vec<serde_json::Value> = set
        .rules
        .iter()
        .enumerate()
        .map(|(j, rule)| {
            let acc = if gt_idx.is_empty() {
                serde_json::Value::Null
            } else {
                let col: Vec<_> = gt_idx.iter().map(|&i| votes.rows()[i][j]).collect();
                let gts: Vec<_> = gt_idx.iter().map(|&i| datapoints[i].gt.unwrap()).collect();
                serde_json::json!(rulefix::rule_accuracy(&col, &gts).unwrap())
            };
            serde_json::json!({"name": rule.name, "accuracy": acc})
        })
        .collect();

    std::fs::create_dir_all(&args.out)?;
    let mut pred_csv = String::from("id,label\n");
    for (dp, pred) in datapoints.iter().zip(&preds) {
        pred_csv.push_str(&format!(
            "{},{}\n",
            dp.id,
            set.labels.name(pred.label)?
        ));
    }
    std::fs::write(args.out.join("predictions.csv"), pred_csv)?;
    let summary = serde_json::json!({
        "global_accuracy": global,
        "per_rule": per_rule,
    });
    std::fs::write(
        args.out.join("eval_report.json"),
        format!("{}\n", serde_json::to_string_pretty(&summary)?),
    )?;
    println!("evaluation written to {}", args.out.display());
    Ok(())
}

fn predict_with(
    model: &str,
    votes: &rulefix::VoteMatrix,
    set: &RuleSet,
    out: &std::path::Path,
) -> Result<Vec<rulefix::Prediction>, Box<dyn std::error::Error>> {
    use rulefix::LabelModel;
    let choice = model.parse::<ModelChoice>()?;
    let preds = match choice {
        ModelChoice::Majority => rulefix::MajorityVote.predict(votes)?,
        ModelChoice::Em => rulefix::EmWeightedVote::default().predict(votes)?,
        ModelChoice::External(cmd) => rulefix::ExternalModel {
            command: cmd,
            exchange_dir: out.join("exchange"),
            labels: set.labels.clone(),
        }
        .predict(votes)?,
    };
    Ok(preds)
}

fn cmd_aggregate(args: AggregateArgs) -> CmdResult {
    let raw = std::fs::read_to_string(&args.votes)?;
    let (votes, _names) = votes_from_csv(&raw)?;
    use rulefix::LabelModel;
    let preds = match args.model.as_str() {
        "majority" => rulefix::MajorityVote.predict(&votes)?,
        "em" => rulefix::EmWeightedVote::default().predict(&votes)?,
        other => return Err(format!("unknown model `{other}` (expected majority|em)").into()),
    };
    let mut out = String::new();
    for p in preds {
        out.push_str(&format!("{}\n", p.label.0));
    }
    std::fs::write(&args.predictions, out)?;
    Ok(())
}
