//! `trex`: learn tree-based classifiers, mine 100%-confidence association
//! rules, rectify the model with the classification rules, and compute
//! theory-aware abductive explanations.
//!
//! Usage errors exit with code 2 (clap); data errors exit with code 1 and
//! a JSON object `{"error": ..., "message": ...}` on standard error.
//! Worker threads follow `RAYON_NUM_THREADS`.

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};
use trex_core::dataset::{binarize, load_csv, BinarizedDataset, LoadOptions};
use trex_core::explain::{ExplainError, Explainer};
use trex_core::learn::{learn_forest, learn_tree, ForestParams, TreeParams};
use trex_core::metrics::{auc, f_score, g_mean, Confusion};
use trex_core::miner::{mine, MinerConfig};
use trex_core::pipeline::{
    explanation_stats_to_json, explanation_table_csv, run_pipeline, ModelKind, PipelineConfig,
};
use trex_core::rectify::rectify_forest;
use trex_core::rules::{rules_from_text, rules_to_text};
use trex_core::theory::{build_theory, extend_theory, DomainTheory};
use trex_core::tree::{forest_from_json, forest_to_json, RandomForest};

#[derive(Parser)]
#[command(
    name = "trex",
    version,
    about = "Tree rectification and explanation with mined association rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Tree,
    Forest,
}

#[derive(Args)]
struct MinerArgs {
    /// Cap on non-classification rules kept
    #[arg(long = "max-rules", default_value_t = 1000)]
    max_rules: usize,
    /// Cap on classification rules kept
    #[arg(long = "max-cars", default_value_t = 100)]
    max_cars: usize,
    /// Total rule size (body literals + head)
    #[arg(long = "rule-size", default_value_t = 3)]
    rule_size: usize,
    /// Mining time budget in seconds
    #[arg(long = "timeout-secs", default_value_t = 3600)]
    timeout_secs: u64,
    /// Minimum support fraction (support must be non-null regardless)
    #[arg(long = "min-support", default_value_t = 0.0)]
    min_support: f64,
}

impl MinerArgs {
    fn to_config(&self) -> MinerConfig {
        MinerConfig {
            max_rule_size: self.rule_size,
            max_cars: self.max_cars,
            max_other_rules: self.max_rules,
            timeout: std::time::Duration::from_secs(self.timeout_secs),
            min_support: self.min_support,
            min_confidence: 1.0,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Learn a decision tree or random forest from a CSV dataset
    Learn {
        #[arg(long)]
        data: PathBuf,
        /// Label column name
        #[arg(long, default_value = "y")]
        label: String,
        #[arg(long, value_enum, default_value = "forest")]
        model: ModelArg,
        /// Number of trees (forests)
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long, default_value_t = 1)]
        min_samples_leaf: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output model JSON
        #[arg(long)]
        out: PathBuf,
        /// Also export the structural domain theory (DIMACS-like)
        #[arg(long)]
        theory_out: Option<PathBuf>,
    },
    /// Mine association rules from training data binarized on a model
    Mine {
        /// Raw CSV dataset (requires --model); alternative to --binarized
        #[arg(long, conflicts_with = "binarized", requires = "model")]
        data: Option<PathBuf>,
        #[arg(long, default_value = "y")]
        label: String,
        /// Model JSON providing the condition set
        #[arg(long)]
        model: Option<PathBuf>,
        /// Pre-binarized CSV (condition-string columns plus y)
        #[arg(long)]
        binarized: Option<PathBuf>,
        #[command(flatten)]
        miner: MinerArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file for classification rules
        #[arg(long, default_value = "cars.txt")]
        cars_out: PathBuf,
        /// Output file for the other association rules
        #[arg(long, default_value = "rules.txt")]
        others_out: PathBuf,
        /// Also export the binarized training data
        #[arg(long)]
        binarized_out: Option<PathBuf>,
    },
    /// Rectify a model by a file of classification rules
    Rectify {
        #[arg(long)]
        model: PathBuf,
        /// Classification rules (text format produced by `mine`)
        #[arg(long)]
        rules: PathBuf,
        /// Domain theory (DIMACS-like, from `learn --theory-out`)
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Rectification report JSON
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compute UP-majoritary reasons for instances
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        /// Extra non-classification rules strengthening the theory
        #[arg(long)]
        extended_rules: Option<PathBuf>,
        /// CSV of instances (same schema as the training data)
        #[arg(long)]
        instances: PathBuf,
        #[arg(long, default_value = "y")]
        label: String,
        #[arg(long, default_value_t = 100)]
        orderings: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a model on a labelled CSV dataset
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "y")]
        label: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report JSON (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full protocol: repeated splits, learn, mine, rectify, explain
    Pipeline {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "y")]
        label: String,
        #[arg(long, value_enum, default_value = "forest")]
        model: ModelArg,
        #[arg(long, default_value_t = 10)]
        splits: usize,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long, default_value_t = 100)]
        orderings: usize,
        /// Test instances sampled per split for the explanation study
        #[arg(long, default_value_t = 100)]
        sample: usize,
        /// Comma-separated rule budgets for the extended theory
        #[arg(long, value_delimiter = ',', default_value = "0,100,1000")]
        rule_budgets: Vec<usize>,
        #[command(flatten)]
        miner: MinerArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for eval_report.json and explanation_stats.json
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write CSV tables next to the JSON reports
        #[arg(long, default_value_t = false)]
        tables: bool,
    },
}

fn classify_error(err: &anyhow::Error) -> &'static str {
    use trex_core::dataset::DatasetError;
    use trex_core::logic::DimacsError;
    use trex_core::miner::MinerError;
    use trex_core::pipeline::PipelineError;
    use trex_core::rectify::RectifyError;
    use trex_core::rules::RuleError;
    use trex_core::tree::TreeError;
    for cause in err.chain() {
        if cause.is::<std::io::Error>() {
            return "io";
        }
        if cause.is::<DatasetError>() {
            return "dataset";
        }
        if cause.is::<TreeError>() {
            return "model";
        }
        if cause.is::<DimacsError>() {
            return "theory";
        }
        if cause.is::<RuleError>() {
            return "rules";
        }
        if cause.is::<MinerError>() {
            return "miner";
        }
        if cause.is::<RectifyError>() {
            return "rectify";
        }
        if cause.is::<ExplainError>() {
            return "explain";
        }
        if cause.is::<PipelineError>() {
            return "pipeline";
        }
    }
    "error"
}

fn main() -> std::process::ExitCode {
    // Die quietly when a pipe consumer (head, jq) closes stdout early.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": classify_error(&err),
                "message": format!("{err:#}"),
            });
            eprintln!("{payload}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_dataset(path: &Path, label: &str) -> Result<trex_core::dataset::Dataset> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let opts = LoadOptions {
        label_column: Some(label.to_string()),
    };
    load_csv(file, &opts).with_context(|| format!("parsing {}", path.display()))
}

fn load_model(path: &Path) -> Result<RandomForest> {
    forest_from_json(&read_to_string(path)?)
        .with_context(|| format!("parsing model {}", path.display()))
}

fn load_theory(path: &Path) -> Result<DomainTheory> {
    let (th, _) = DomainTheory::from_dimacs(&read_to_string(path)?)
        .with_context(|| format!("parsing theory {}", path.display()))?;
    Ok(th)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Learn {
            data,
            label,
            model,
            trees,
            max_depth,
            min_samples_leaf,
            seed,
            out,
            theory_out,
        } => {
            let d = load_dataset(&data, &label)?;
            let tree_params = TreeParams {
                max_depth,
                min_samples_leaf,
                seed,
            };
            let forest = match model {
                ModelArg::Tree => learn_tree(&d, &tree_params)?,
                ModelArg::Forest => learn_forest(
                    &d,
                    &ForestParams {
                        trees,
                        tree: tree_params,
                        ..ForestParams::default()
                    },
                )?,
            };
            write_file(&out, &forest_to_json(&forest))?;
            if let Some(tp) = theory_out {
                let th = build_theory(&forest.conditions);
                write_file(&tp, &th.to_dimacs(&forest.conditions))?;
            }
            println!(
                "learned {} tree(s) over {} conditions, {} nodes",
                forest.n_trees(),
                forest.conditions.len(),
                forest.size()
            );
            Ok(())
        }
        Command::Mine {
            data,
            label,
            model,
            binarized,
            miner,
            seed: _,
            cars_out,
            others_out,
            binarized_out,
        } => {
            let d_b: BinarizedDataset = if let Some(bpath) = binarized {
                let file =
                    fs::File::open(&bpath).with_context(|| format!("opening {}", bpath.display()))?;
                BinarizedDataset::from_csv(file)
                    .with_context(|| format!("parsing {}", bpath.display()))?
            } else {
                let dpath = data.ok_or_else(|| anyhow!("either --data or --binarized required"))?;
                let mpath = model.ok_or_else(|| anyhow!("--data requires --model"))?;
                let d = load_dataset(&dpath, &label)?;
                let forest = load_model(&mpath)?;
                binarize(&d, &forest.conditions)?
            };
            let th = build_theory(&d_b.conditions);
            let mined = mine(&d_b, &th, &miner.to_config())?;
            write_file(&cars_out, &rules_to_text(&mined.cars, &d_b.conditions))?;
            write_file(&others_out, &rules_to_text(&mined.others, &d_b.conditions))?;
            if let Some(bp) = binarized_out {
                write_file(&bp, &d_b.to_csv())?;
            }
            println!(
                "mined {} classification rule(s), {} other rule(s){}",
                mined.cars.len(),
                mined.others.len(),
                if mined.hit_timeout { " (timeout)" } else { "" }
            );
            Ok(())
        }
        Command::Rectify {
            model,
            rules,
            theory,
            out,
            report,
            seed: _,
        } => {
            let forest = load_model(&model)?;
            let th = load_theory(&theory)?;
            let cars = rules_from_text(&read_to_string(&rules)?, &forest.conditions)
                .with_context(|| format!("parsing rules {}", rules.display()))?;
            let (rectified, rep) = rectify_forest(&forest, &cars, &th)?;
            write_file(&out, &forest_to_json(&rectified))?;
            if let Some(rp) = report {
                let mut v = serde_json::to_value(&rep)?;
                v.as_object_mut().unwrap().insert(
                    "elapsed_secs".into(),
                    serde_json::json!(rep.elapsed.as_secs_f64()),
                );
                write_file(&rp, &serde_json::to_string_pretty(&v)?)?;
            }
            println!(
                "rectified by {} rule(s): {} -> {} nodes, {} path(s) patched",
                rep.rules_applied, rep.node_count_before, rep.node_count_after, rep.paths_patched
            );
            Ok(())
        }
        Command::Explain {
            model,
            theory,
            extended_rules,
            instances,
            label,
            orderings,
            seed,
            out,
        } => {
            let forest = load_model(&model)?;
            let mut th = load_theory(&theory)?;
            if let Some(rp) = extended_rules {
                let extra = rules_from_text(&read_to_string(&rp)?, &forest.conditions)
                    .with_context(|| format!("parsing rules {}", rp.display()))?;
                th = extend_theory(&th, &extra)?;
            }
            let d = load_dataset(&instances, &label)?;
            let d_b = binarize(&d, &forest.conditions)?;
            let mut explainer = Explainer::new(&forest, &th);
            let mut results = Vec::new();
            for (i, bits) in d_b.rows.iter().enumerate() {
                let prediction = forest.predict(bits);
                match explainer.best_reason(bits, orderings, seed.wrapping_add(i as u64)) {
                    Ok(e) => {
                        let reason: Vec<String> = e
                            .term
                            .iter()
                            .map(|l| {
                                let s = forest.conditions[l.condition()].render();
                                if l.is_positive() {
                                    s
                                } else {
                                    format!("!{s}")
                                }
                            })
                            .collect();
                        results.push(serde_json::json!({
                            "row": i,
                            "prediction": prediction as u8,
                            "reason": reason,
                            "size": e.term.len(),
                            "theory": if th.is_extended() { "extended" } else { "base" },
                            "ordering_seed": e.ordering_seed,
                        }));
                    }
                    Err(err @ (ExplainError::InfeasibleInstance | ExplainError::NoMajorityReason)) => {
                        results.push(serde_json::json!({
                            "row": i,
                            "prediction": prediction as u8,
                            "error": err.to_string(),
                        }));
                    }
                    Err(other) => return Err(other.into()),
                }
            }
            write_file(&out, &serde_json::to_string_pretty(&results)?)?;
            println!("explained {} instance(s)", results.len());
            Ok(())
        }
        Command::Eval {
            model,
            data,
            label,
            seed: _,
            out,
        } => {
            let forest = load_model(&model)?;
            let d = load_dataset(&data, &label)?;
            let d_b = binarize(&d, &forest.conditions)?;
            let confusion = Confusion::tally(
                d_b.rows
                    .iter()
                    .zip(&d_b.labels)
                    .map(|(bits, &l)| (forest.predict(bits), l)),
            );
            let scores: Vec<(f64, bool)> = d_b
                .rows
                .iter()
                .zip(&d_b.labels)
                .map(|(bits, &l)| (forest.vote_fraction(bits), l))
                .collect();
            let report = serde_json::json!({
                "instances": d_b.len(),
                "f_score": f_score(&confusion),
                "g_mean": g_mean(&confusion),
                "auc": auc(&scores).ok(),
                "confusion": {
                    "tp": confusion.true_pos,
                    "fp": confusion.false_pos,
                    "fn": confusion.false_neg,
                    "tn": confusion.true_neg,
                },
            });
            let text = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => write_file(&path, &text)?,
                None => println!("{text}"),
            }
            Ok(())
        }
        Command::Pipeline {
            data,
            label,
            model,
            splits,
            train_fraction,
            trees,
            max_depth,
            orderings,
            sample,
            rule_budgets,
            miner,
            seed,
            out_dir,
            tables,
        } => {
            let d = load_dataset(&data, &label)?;
            let cfg = PipelineConfig {
                model: match model {
                    ModelArg::Tree => ModelKind::Tree,
                    ModelArg::Forest => ModelKind::Forest,
                },
                splits,
                train_fraction,
                miner: miner.to_config(),
                orderings,
                explain_sample: sample,
                rule_budgets,
                seed,
                forest: ForestParams {
                    trees,
                    tree: TreeParams {
                        max_depth,
                        ..TreeParams::default()
                    },
                    ..ForestParams::default()
                },
                tree: TreeParams {
                    max_depth,
                    ..TreeParams::default()
                },
            };
            let (report, stats) = run_pipeline(&d, &cfg)?;
            fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            write_file(&out_dir.join("eval_report.json"), &report.to_json())?;
            write_file(
                &out_dir.join("explanation_stats.json"),
                &explanation_stats_to_json(&stats),
            )?;
            if tables {
                write_file(&out_dir.join("eval_table.csv"), &report.eval_table_csv())?;
                write_file(
                    &out_dir.join("explanation_table.csv"),
                    &explanation_table_csv(&stats),
                )?;
            }
            println!(
                "pipeline done: F {:.4} -> {:.4}, G {:.4} -> {:.4}, AUC {:.4} -> {:.4}",
                report.averages.f_before,
                report.averages.f_after,
                report.averages.g_before,
                report.averages.g_after,
                report.averages.auc_before,
                report.averages.auc_after,
            );
            Ok(())
        }
    }
}
