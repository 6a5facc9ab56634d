//! End-to-end pipeline: repeated random splits, learning, mining,
//! rectification, test metrics before/after, and the explanation-size
//! study under increasingly strong theories.
//!
//! Determinism contract: with a fixed seed the deterministic part of every
//! report is byte-identical across runs and thread counts; wall-clock
//! numbers live in a separate `timing` section.

use crate::dataset::{binarize, split, BinarizedDataset, Dataset, DatasetError};
use crate::explain::{ExplainError, Explainer};
use crate::learn::{learn_forest, learn_tree, ForestParams, LearnError, TreeParams};
use crate::metrics::{auc, f_score, g_mean, Confusion, MetricError};
use crate::miner::{mine, MinedRules, MinerConfig, MinerError};
use crate::rectify::{rectify_forest, RectifyError};
use crate::rules::AssociationRule;
use crate::theory::{build_theory, extend_theory, TheoryError};
use crate::tree::RandomForest;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("dataset must contain both classes")]
    DegenerateClassDistribution,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Miner(#[from] MinerError),
    #[error(transparent)]
    Rectify(#[from] RectifyError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tree,
    Forest,
}

/// Pipeline configuration; defaults follow the evaluation protocol
/// (10 splits at 70/30, 100 orderings, 100 explanation instances).
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub model: ModelKind,
    pub splits: usize,
    pub train_fraction: f64,
    pub miner: MinerConfig,
    pub orderings: usize,
    pub explain_sample: usize,
    /// Rule budgets for the extended theory; the explanation study runs
    /// once per budget. Empty list skips the study.
    pub rule_budgets: Vec<usize>,
    pub seed: u64,
    pub forest: ForestParams,
    pub tree: TreeParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model: ModelKind::Forest,
            splits: 10,
            train_fraction: 0.7,
            miner: MinerConfig::default(),
            orderings: 100,
            explain_sample: 100,
            rule_budgets: vec![0, 100, 1000],
            seed: 0,
            forest: ForestParams::default(),
            tree: TreeParams::default(),
        }
    }
}

/// Deterministic per-split metrics.
#[derive(Debug, Clone, Serialize)]
pub struct SplitMetrics {
    pub split: usize,
    pub seed: u64,
    pub f_before: f64,
    pub f_after: f64,
    pub g_before: f64,
    pub g_after: f64,
    /// Missing when the test part holds a single class.
    pub auc_before: Option<f64>,
    pub auc_after: Option<f64>,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub depth_before: usize,
    pub depth_after: usize,
    pub nr_percent: f64,
    pub paths_patched: usize,
    pub cars_mined: usize,
    pub others_mined: usize,
    pub miner_hit_timeout: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Averages {
    pub f_before: f64,
    pub f_after: f64,
    pub g_before: f64,
    pub g_after: f64,
    pub auc_before: f64,
    pub auc_after: f64,
    pub nodes_before: f64,
    pub nodes_after: f64,
    pub depth_before: f64,
    pub depth_after: f64,
    pub nr_percent: f64,
}

/// Wall-clock numbers, quarantined so the rest of the report is
/// reproducible byte for byte.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SplitTiming {
    pub mine_secs: f64,
    pub rectify_secs: f64,
    pub explain_secs: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct TimingReport {
    pub per_split: Vec<SplitTiming>,
    pub total_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub splits_configured: usize,
    pub train_fraction: f64,
    pub seed: u64,
    /// AUC scores come from the tree-vote fraction (hard 0/1 for a single
    /// tree).
    pub score_kind: &'static str,
    pub splits: Vec<SplitMetrics>,
    pub averages: Averages,
    pub auc_degenerate_splits: usize,
    pub timing: TimingReport,
}

impl EvalReport {
    /// The report as JSON with the `timing` section removed; this is the
    /// part covered by the byte-identity determinism contract.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().unwrap().remove("timing");
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One CSV row mirroring the evaluation-table column layout.
    pub fn eval_table_csv(&self) -> String {
        let a = &self.averages;
        let mut out = String::from(
            "f_initial,f_final,g_initial,g_final,auc_initial,auc_final,nodes_initial,nodes_final,depth_initial,depth_final,rectify_secs,nr_percent\n",
        );
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            a.f_before,
            a.f_after,
            a.g_before,
            a.g_after,
            a.auc_before,
            a.auc_after,
            a.nodes_before,
            a.nodes_after,
            a.depth_before,
            a.depth_after,
            self.timing.total_secs,
            a.nr_percent,
        ));
        out
    }
}

/// Explanation sizes of one surviving instance under the base and one
/// extended theory.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceSizes {
    pub split: usize,
    pub row: usize,
    pub size_base: usize,
    pub size_extended: usize,
}

/// Red/Ins statistics for one rule budget, aggregated over splits.
#[derive(Debug, Clone, Serialize)]
pub struct ExplanationStats {
    pub rule_budget: usize,
    /// Mean relative size reduction, in percent.
    pub red: f64,
    /// Share of instances with a strict size decrease, in percent.
    pub ins: f64,
    /// True when fewer than 10 instances survived sampling and discards
    /// in some split.
    pub low_support: bool,
    pub instances: usize,
    pub skipped_instances: usize,
    pub per_instance: Vec<InstanceSizes>,
}

pub fn explanation_stats_to_json(stats: &[ExplanationStats]) -> String {
    serde_json::to_string_pretty(stats).expect("stats serialize")
}

/// CSV rows mirroring the explanation-table layout: one row per budget.
pub fn explanation_table_csv(stats: &[ExplanationStats]) -> String {
    let mut out = String::from("rule_budget,red_percent,ins_percent,instances,low_support\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.rule_budget, s.red, s.ins, s.instances, s.low_support
        ));
    }
    out
}

struct SplitOutcome {
    metrics: SplitMetrics,
    timing: SplitTiming,
    // per budget: (sizes per instance, skipped count)
    study: Vec<BudgetStudy>,
}

struct BudgetStudy {
    budget: usize,
    sizes: Vec<InstanceSizes>,
    skipped: usize,
    low_support: bool,
}

fn derive_seed(base: u64, split: u64, item: u64) -> u64 {
    // splitmix-style mixing, stable across platforms
    let mut z = base
        .wrapping_add(split.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(item.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn learn_model(
    train: &Dataset,
    cfg: &PipelineConfig,
    split_seed: u64,
) -> Result<RandomForest, LearnError> {
    match cfg.model {
        ModelKind::Tree => learn_tree(
            train,
            &TreeParams {
                seed: split_seed,
                ..cfg.tree.clone()
            },
        ),
        ModelKind::Forest => learn_forest(
            train,
            &ForestParams {
                tree: TreeParams {
                    seed: split_seed,
                    ..cfg.tree.clone()
                },
                ..cfg.forest.clone()
            },
        ),
    }
}

fn test_scores(model: &RandomForest, test: &BinarizedDataset) -> Vec<(f64, bool)> {
    test.rows
        .iter()
        .zip(&test.labels)
        .map(|(bits, &label)| (model.vote_fraction(bits), label))
        .collect()
}

fn confusion_of(model: &RandomForest, test: &BinarizedDataset) -> Confusion {
    Confusion::tally(
        test.rows
            .iter()
            .zip(&test.labels)
            .map(|(bits, &label)| (model.predict(bits), label)),
    )
}

fn run_split(d: &Dataset, cfg: &PipelineConfig, s: usize) -> Result<SplitOutcome, PipelineError> {
    let split_seed = cfg.seed.wrapping_add(s as u64);
    let (train, test) = split(d, cfg.train_fraction, split_seed);
    if train.is_empty() || test.is_empty() {
        return Err(PipelineError::DegenerateClassDistribution);
    }
    let model = learn_model(&train, cfg, split_seed)?;
    let conditions = model.collect_conditions().to_vec();
    let th = build_theory(&conditions);
    let train_b = binarize(&train, &conditions)?;
    let test_b = binarize(&test, &conditions)?;

    // Mine once at the largest budget; smaller budgets take prefixes of
    // the kept sequence, which the conflict filter makes exact.
    let mine_cap = cfg
        .rule_budgets
        .iter()
        .copied()
        .max()
        .unwrap_or(cfg.miner.max_other_rules)
        .max(1);
    let mine_cfg = MinerConfig {
        max_other_rules: mine_cap,
        ..cfg.miner.clone()
    };
    let t0 = Instant::now();
    let mined: MinedRules = mine(&train_b, &th, &mine_cfg)?;
    let mine_secs = t0.elapsed().as_secs_f64();

    let (rectified, rect_report) = rectify_forest(&model, &mined.cars, &th)?;

    let conf_before = confusion_of(&model, &test_b);
    let conf_after = confusion_of(&rectified, &test_b);
    let auc_before = auc(&test_scores(&model, &test_b)).ok();
    let auc_after = auc(&test_scores(&rectified, &test_b)).ok();

    let nr_percent = if rect_report.rules_applied == 0 {
        0.0
    } else {
        100.0 * rect_report.rules_changing_model as f64 / rect_report.rules_applied as f64
    };

    let metrics = SplitMetrics {
        split: s,
        seed: split_seed,
        f_before: f_score(&conf_before),
        f_after: f_score(&conf_after),
        g_before: g_mean(&conf_before),
        g_after: g_mean(&conf_after),
        auc_before,
        auc_after,
        nodes_before: rect_report.node_count_before,
        nodes_after: rect_report.node_count_after,
        depth_before: rect_report.depth_before,
        depth_after: rect_report.depth_after,
        nr_percent,
        paths_patched: rect_report.paths_patched,
        cars_mined: mined.cars.len(),
        others_mined: mined.others.len(),
        miner_hit_timeout: mined.hit_timeout,
    };

    // Explanation study on the model considered at start, under the base
    // theory and each budget-limited extension, with shared ordering
    // seeds so size differences reflect the theory alone.
    let t1 = Instant::now();
    let study = explanation_study(&model, &th, &mined.others, &test_b, cfg, s)?;
    let explain_secs = t1.elapsed().as_secs_f64();

    Ok(SplitOutcome {
        metrics,
        timing: SplitTiming {
            mine_secs,
            rectify_secs: rect_report.elapsed.as_secs_f64(),
            explain_secs,
        },
        study,
    })
}

fn explanation_study(
    model: &RandomForest,
    th: &crate::theory::DomainTheory,
    others: &[AssociationRule],
    test_b: &BinarizedDataset,
    cfg: &PipelineConfig,
    s: usize,
) -> Result<Vec<BudgetStudy>, PipelineError> {
    if cfg.rule_budgets.is_empty() {
        return Ok(Vec::new());
    }
    // Sample: seeded shuffle, first `explain_sample` rows, then discard
    // instances violating any mined non-classification rule.
    let mut idx: Vec<usize> = (0..test_b.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
        cfg.seed, s as u64, 0xEC5A,
    )));
    idx.truncate(cfg.explain_sample);
    let survivors: Vec<usize> = idx
        .into_iter()
        .filter(|&i| {
            !others
                .iter()
                .any(|r| r.falsified_by(&test_b.rows[i], test_b.labels[i]))
        })
        .collect();
    let low_support = survivors.len() < 10;

    // Base-theory reasons, one per survivor (None when no majoritary
    // reason exists, e.g. tied even votes). Instances are independent, so
    // they run in parallel with a per-thread explainer.
    let base_sizes: Vec<Result<Option<(usize, crate::logic::Term)>, ExplainError>> = survivors
        .par_iter()
        .enumerate()
        .map_init(
            || Explainer::new(model, th),
            |explainer, (k, &i)| {
                let seed = derive_seed(cfg.seed, s as u64, k as u64);
                match explainer.best_reason(&test_b.rows[i], cfg.orderings, seed) {
                    Ok(e) => Ok(Some((e.term.len(), e.term))),
                    Err(ExplainError::NoMajorityReason) => Ok(None),
                    Err(other) => Err(other),
                }
            },
        )
        .collect();
    let base_sizes: Vec<Option<(usize, crate::logic::Term)>> =
        base_sizes.into_iter().collect::<Result<_, _>>()?;

    let mut out = Vec::new();
    for &budget in &cfg.rule_budgets {
        let take = budget.min(others.len());
        let th_b = extend_theory(th, &others[..take])?;
        let results: Vec<Result<Option<InstanceSizes>, ExplainError>> = survivors
            .par_iter()
            .enumerate()
            .map_init(
                || Explainer::new(model, &th_b),
                |explainer, (k, &i)| {
                    let Some((size_base, base_term)) = base_sizes[k].clone() else {
                        return Ok(None);
                    };
                    let seed = derive_seed(cfg.seed, s as u64, k as u64);
                    match explainer.best_reason(&test_b.rows[i], cfg.orderings, seed) {
                        Ok(e) => {
                            // A reason under the base theory still majority-
                            // qualifies under the stronger one; re-minimizing
                            // it there yields one more candidate and
                            // guarantees the extended size never exceeds the
                            // base size.
                            let t_x = crate::dataset::instance_to_term(&test_b.rows[i]);
                            let mut order: Vec<crate::logic::Literal> =
                                t_x.iter().filter(|l| !base_term.contains(*l)).collect();
                            order.extend(base_term.iter());
                            let refit = explainer
                                .up_majoritary_reason(&test_b.rows[i], &order)
                                .map(|e| e.term.len())
                                .unwrap_or(size_base);
                            Ok(Some(InstanceSizes {
                                split: s,
                                row: i,
                                size_base,
                                size_extended: e.term.len().min(refit),
                            }))
                        }
                        Err(ExplainError::NoMajorityReason) => Ok(None),
                        Err(other) => Err(other),
                    }
                },
            )
            .collect();
        let mut sizes = Vec::new();
        let mut skipped = 0usize;
        for r in results {
            match r? {
                Some(item) => sizes.push(item),
                None => skipped += 1,
            }
        }
        out.push(BudgetStudy {
            budget,
            sizes,
            skipped,
            low_support,
        });
    }
    Ok(out)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Runs the full protocol and returns the evaluation report plus the
/// explanation statistics per rule budget.
pub fn run_pipeline(
    d: &Dataset,
    cfg: &PipelineConfig,
) -> Result<(EvalReport, Vec<ExplanationStats>), PipelineError> {
    let start = Instant::now();
    if !(d.labels.iter().any(|&l| l) && d.labels.iter().any(|&l| !l)) {
        return Err(PipelineError::DegenerateClassDistribution);
    }
    let outcomes: Vec<Result<SplitOutcome, PipelineError>> = (0..cfg.splits)
        .into_par_iter()
        .map(|s| run_split(d, cfg, s))
        .collect();
    let mut splits = Vec::new();
    let mut timing = TimingReport::default();
    let mut studies: Vec<Vec<BudgetStudy>> = Vec::new();
    for o in outcomes {
        let o = o?;
        splits.push(o.metrics);
        timing.per_split.push(o.timing);
        studies.push(o.study);
    }

    let averages = Averages {
        f_before: mean(splits.iter().map(|m| m.f_before)),
        f_after: mean(splits.iter().map(|m| m.f_after)),
        g_before: mean(splits.iter().map(|m| m.g_before)),
        g_after: mean(splits.iter().map(|m| m.g_after)),
        auc_before: mean(splits.iter().filter_map(|m| m.auc_before)),
        auc_after: mean(splits.iter().filter_map(|m| m.auc_after)),
        nodes_before: mean(splits.iter().map(|m| m.nodes_before as f64)),
        nodes_after: mean(splits.iter().map(|m| m.nodes_after as f64)),
        depth_before: mean(splits.iter().map(|m| m.depth_before as f64)),
        depth_after: mean(splits.iter().map(|m| m.depth_after as f64)),
        nr_percent: mean(splits.iter().map(|m| m.nr_percent)),
    };
    let auc_degenerate_splits = splits.iter().filter(|m| m.auc_before.is_none()).count();

    // Aggregate the study per budget over splits: Red and Ins are the
    // means of the per-split percentages.
    let mut stats: Vec<ExplanationStats> = Vec::new();
    for (bi, &budget) in cfg.rule_budgets.iter().enumerate() {
        let mut per_split_red = Vec::new();
        let mut per_split_ins = Vec::new();
        let mut per_instance = Vec::new();
        let mut skipped = 0usize;
        let mut low_support = false;
        for split_study in &studies {
            let Some(b) = split_study.get(bi) else {
                continue;
            };
            debug_assert_eq!(b.budget, budget);
            skipped += b.skipped;
            low_support |= b.low_support;
            if !b.sizes.is_empty() {
                per_split_red.push(mean(b.sizes.iter().map(|s| {
                    if s.size_base == 0 {
                        0.0
                    } else {
                        100.0 * (s.size_base as f64 - s.size_extended as f64) / s.size_base as f64
                    }
                })));
                per_split_ins.push(
                    100.0
                        * b.sizes.iter().filter(|s| s.size_extended < s.size_base).count() as f64
                        / b.sizes.len() as f64,
                );
            }
            per_instance.extend(b.sizes.iter().cloned());
        }
        stats.push(ExplanationStats {
            rule_budget: budget,
            red: mean(per_split_red.into_iter()),
            ins: mean(per_split_ins.into_iter()),
            low_support,
            instances: per_instance.len(),
            skipped_instances: skipped,
            per_instance,
        });
    }

    timing.total_secs = start.elapsed().as_secs_f64();
    let report = EvalReport {
        model: cfg.model,
        splits_configured: cfg.splits,
        train_fraction: cfg.train_fraction,
        seed: cfg.seed,
        score_kind: "vote_fraction",
        splits,
        averages,
        auc_degenerate_splits,
        timing,
    };
    Ok((report, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_csv, LoadOptions};

    /// Loan-style data with a planted rule: every instance with I>50 and
    /// S=PP is granted; otherwise the label follows A>40 with some
    /// exceptions the tree can learn.
    fn synthetic_csv(rows: usize) -> String {
        let mut out = String::from("A,I,S,y\n");
        let mut rng_state = 12345u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 33) as u32
        };
        for _ in 0..rows {
            let a = next() % 80;
            let i = next() % 100;
            let s = ["U", "TP", "PP"][(next() % 3) as usize];
            let y = if i > 50 && s == "PP" {
                1
            } else {
                u32::from(a > 40)
            };
            out.push_str(&format!("{a},{i},{s},{y}\n"));
        }
        out
    }

    fn small_cfg() -> PipelineConfig {
        PipelineConfig {
            model: ModelKind::Tree,
            splits: 2,
            orderings: 10,
            explain_sample: 20,
            rule_budgets: vec![0, 50],
            seed: 3,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn pipeline_produces_reports() {
        let d = load_csv(synthetic_csv(120).as_bytes(), &LoadOptions::default()).unwrap();
        let (report, stats) = run_pipeline(&d, &small_cfg()).unwrap();
        assert_eq!(report.splits.len(), 2);
        assert_eq!(stats.len(), 2);
        for m in &report.splits {
            for v in [m.f_before, m.f_after, m.g_before, m.g_after] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        assert_eq!(stats[0].rule_budget, 0);
        for s in &stats {
            assert!((0.0..=100.0).contains(&s.red));
            assert!((0.0..=100.0).contains(&s.ins));
            for i in &s.per_instance {
                assert!(
                    i.size_extended <= i.size_base,
                    "stronger theory must never lengthen a kept reason"
                );
            }
        }
    }

    #[test]
    fn zero_budget_means_zero_reduction() {
        let d = load_csv(synthetic_csv(120).as_bytes(), &LoadOptions::default()).unwrap();
        let (_, stats) = run_pipeline(&d, &small_cfg()).unwrap();
        let zero = &stats[0];
        assert_eq!(zero.red, 0.0);
        assert_eq!(zero.ins, 0.0);
        for s in &zero.per_instance {
            assert_eq!(s.size_base, s.size_extended);
        }
    }

    #[test]
    fn deterministic_report_is_stable() {
        let d = load_csv(synthetic_csv(100).as_bytes(), &LoadOptions::default()).unwrap();
        let (r1, s1) = run_pipeline(&d, &small_cfg()).unwrap();
        let (r2, s2) = run_pipeline(&d, &small_cfg()).unwrap();
        assert_eq!(r1.deterministic_json(), r2.deterministic_json());
        assert_eq!(
            explanation_stats_to_json(&s1),
            explanation_stats_to_json(&s2)
        );
    }

    #[test]
    fn single_class_data_is_rejected() {
        let d = load_csv("A,y\n1,1\n2,1\n".as_bytes(), &LoadOptions::default()).unwrap();
        assert!(matches!(
            run_pipeline(&d, &small_cfg()),
            Err(PipelineError::DegenerateClassDistribution)
        ));
    }

    #[test]
    fn predictions_change_only_on_car_covered_instances() {
        let d = load_csv(synthetic_csv(150).as_bytes(), &LoadOptions::default()).unwrap();
        let cfg = small_cfg();
        let split_seed = cfg.seed;
        let (train, test) = split(&d, cfg.train_fraction, split_seed);
        let model = learn_model(&train, &cfg, split_seed).unwrap();
        let conditions = model.collect_conditions().to_vec();
        let th = build_theory(&conditions);
        let train_b = binarize(&train, &conditions).unwrap();
        let test_b = binarize(&test, &conditions).unwrap();
        let mined = mine(&train_b, &th, &cfg.miner).unwrap();
        let (rect, _) = rectify_forest(&model, &mined.cars, &th).unwrap();
        for bits in &test_b.rows {
            if model.predict(bits) != rect.predict(bits) {
                assert!(
                    mined.cars.iter().any(|r| r.body.covers(bits)),
                    "prediction changed outside CAR coverage"
                );
            }
        }
    }

    #[test]
    fn no_mineable_feature_rules_means_zero_reduction() {
        // XOR labels over two Boolean attributes with every combination
        // present: no feature implication has confidence 1, so the theory
        // never strengthens and Red/Ins stay at zero for every budget.
        let mut csv = String::from("a,b,y\n");
        for _ in 0..8 {
            for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                csv.push_str(&format!("{a},{b},{}\n", a ^ b));
            }
        }
        let d = load_csv(csv.as_bytes(), &LoadOptions::default()).unwrap();
        let cfg = PipelineConfig {
            model: ModelKind::Tree,
            splits: 2,
            orderings: 5,
            explain_sample: 10,
            rule_budgets: vec![1000],
            seed: 11,
            ..PipelineConfig::default()
        };
        let (report, stats) = run_pipeline(&d, &cfg).unwrap();
        for m in &report.splits {
            assert_eq!(m.others_mined, 0, "split {} mined feature rules", m.split);
        }
        assert_eq!(stats[0].red, 0.0);
        assert_eq!(stats[0].ins, 0.0);
    }

    #[test]
    fn csv_tables_have_expected_shape() {
        let d = load_csv(synthetic_csv(80).as_bytes(), &LoadOptions::default()).unwrap();
        let (report, stats) = run_pipeline(&d, &small_cfg()).unwrap();
        let table = report.eval_table_csv();
        assert_eq!(table.lines().count(), 2);
        assert!(table.starts_with("f_initial,"));
        let etable = explanation_table_csv(&stats);
        assert_eq!(etable.lines().count(), 1 + stats.len());
    }
}
