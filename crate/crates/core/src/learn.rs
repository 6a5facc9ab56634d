//! CART-style decision tree and random forest learning.
//!
//! Gini impurity, numerical splits at midpoints between consecutive
//! distinct values, one-vs-rest equality splits for categoricals. A node
//! splits whenever it is impure and a valid split exists, so unrestricted
//! trees reach pure leaves on contradiction-free data (zero-gain splits
//! are allowed, which is what resolves XOR-like targets).
//!
//! Forests bag bootstrap resamples with per-node feature subsampling; the
//! per-tree RNG is seeded with `seed + tree_index`, so learning is
//! deterministic no matter how trees are scheduled across threads.

use crate::dataset::Dataset;
use crate::logic::{AttributeKind, Condition, Predicate};
use crate::tree::{DecisionTree, Node, RandomForest};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyTrainingSet,
}

/// Parameters of a single CART tree.
#[derive(Debug, Clone)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

/// How many attributes each node considers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureSubsample {
    All,
    /// ceil(sqrt(p)) attributes per node.
    Sqrt,
    Fraction(f64),
}

/// Parameters of a bagged forest.
#[derive(Debug, Clone)]
pub struct ForestParams {
    pub trees: usize,
    pub bootstrap: bool,
    pub feature_subsample: FeatureSubsample,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            bootstrap: true,
            feature_subsample: FeatureSubsample::Sqrt,
            tree: TreeParams::default(),
        }
    }
}

/// A candidate split: the condition and the Gini decrease it achieves.
struct Split {
    attribute: usize,
    predicate: Predicate,
    gain: f64,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Weighted impurity of a split into (pos_l, n_l) and (pos_r, n_r).
fn weighted_gini(pos_l: usize, n_l: usize, pos_r: usize, n_r: usize) -> f64 {
    let n = (n_l + n_r) as f64;
    (n_l as f64 / n) * gini(pos_l, n_l) + (n_r as f64 / n) * gini(pos_r, n_r)
}

/// Best split for one numerical attribute: threshold at the midpoint of
/// consecutive distinct sorted values, lowest threshold on ties.
fn best_numeric_split(
    d: &Dataset,
    rows: &[usize],
    attr: usize,
    node_gini: f64,
    min_leaf: usize,
) -> Option<Split> {
    let mut vals: Vec<(f64, bool)> = rows
        .iter()
        .map(|&i| (d.rows[i][attr].as_num().unwrap(), d.labels[i]))
        .collect();
    vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total = vals.len();
    let total_pos = vals.iter().filter(|v| v.1).count();
    let mut best: Option<Split> = None;
    let mut pos_l = 0usize;
    let mut n_l = 0usize;
    for i in 0..total - 1 {
        n_l += 1;
        pos_l += vals[i].1 as usize;
        if vals[i].0 == vals[i + 1].0 {
            continue;
        }
        let n_r = total - n_l;
        if n_l < min_leaf || n_r < min_leaf {
            continue;
        }
        let threshold = vals[i].0 + (vals[i + 1].0 - vals[i].0) / 2.0;
        // Guard against midpoints collapsing onto a value by rounding.
        if !(threshold > vals[i].0 && threshold <= vals[i + 1].0) {
            continue;
        }
        let gain = node_gini - weighted_gini(pos_l, n_l, total_pos - pos_l, n_r);
        if best.as_ref().map_or(true, |b| gain > b.gain) {
            best = Some(Split {
                attribute: attr,
                predicate: Predicate::GreaterThan(threshold),
                gain,
            });
        }
    }
    best
}

/// Best one-vs-rest equality split for a categorical/Boolean attribute.
/// Boolean attributes only test `=1` (testing `=0` is the mirror split).
fn best_equals_split(
    d: &Dataset,
    rows: &[usize],
    attr: usize,
    node_gini: f64,
    min_leaf: usize,
) -> Option<Split> {
    let boolean = d.schema[attr].kind == AttributeKind::Boolean;
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new(); // value -> (pos, total)
    let total = rows.len();
    let total_pos = rows.iter().filter(|&&i| d.labels[i]).count();
    for &i in rows {
        let v = d.rows[i][attr].as_cat().unwrap();
        let e = counts.entry(v).or_insert((0, 0));
        e.0 += d.labels[i] as usize;
        e.1 += 1;
    }
    let mut values: Vec<&str> = counts.keys().copied().collect();
    values.sort_unstable();
    let mut best: Option<Split> = None;
    for v in values {
        if boolean && v != "1" {
            continue;
        }
        let (pos_in, n_in) = counts[v];
        let n_out = total - n_in;
        if n_in < min_leaf || n_out < min_leaf || n_in == 0 || n_out == 0 {
            continue;
        }
        let gain = node_gini - weighted_gini(total_pos - pos_in, n_out, pos_in, n_in);
        if best.as_ref().map_or(true, |b| gain > b.gain) {
            best = Some(Split {
                attribute: attr,
                predicate: Predicate::Equals(v.to_string()),
                gain,
            });
        }
    }
    best
}

fn best_split_over(
    d: &Dataset,
    rows: &[usize],
    attrs: &[usize],
    node_gini: f64,
    min_leaf: usize,
) -> Option<Split> {
    let mut best: Option<Split> = None;
    for &attr in attrs {
        let cand = match d.schema[attr].kind {
            AttributeKind::Numerical => best_numeric_split(d, rows, attr, node_gini, min_leaf),
            AttributeKind::Categorical | AttributeKind::Boolean => {
                best_equals_split(d, rows, attr, node_gini, min_leaf)
            }
        };
        if let Some(c) = cand {
            // Tie-break: attributes are scanned in ascending index order and
            // candidates within an attribute in ascending threshold/value
            // order, so keeping the first strict improvement realizes
            // (gain, lowest attribute, lowest threshold).
            if best.as_ref().map_or(true, |b| c.gain > b.gain) {
                best = Some(c);
            }
        }
    }
    best
}

/// Tree under construction: nodes hold inline conditions; interning into a
/// shared table happens once all trees are built.
enum RawNode {
    Leaf(bool),
    Internal {
        condition: Condition,
        left: usize,
        right: usize,
    },
}

struct TreeBuilder<'d> {
    d: &'d Dataset,
    params: &'d TreeParams,
    subsample: FeatureSubsample,
    rng: ChaCha8Rng,
    nodes: Vec<RawNode>,
}

impl<'d> TreeBuilder<'d> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let pos = rows.iter().filter(|&&i| self.d.labels[i]).count();
        let majority = pos * 2 > rows.len(); // ties -> class 0
        let pure = pos == 0 || pos == rows.len();
        let depth_capped = self.params.max_depth.map_or(false, |m| depth >= m);
        if pure || depth_capped {
            self.nodes.push(RawNode::Leaf(majority));
            return self.nodes.len() - 1;
        }
        let node_gini = gini(pos, rows.len());
        let p = self.d.n_attributes();
        let k = match self.subsample {
            FeatureSubsample::All => p,
            FeatureSubsample::Sqrt => (p as f64).sqrt().ceil() as usize,
            FeatureSubsample::Fraction(f) => ((p as f64 * f).ceil() as usize).clamp(1, p),
        };
        let attrs: Vec<usize> = if k >= p {
            (0..p).collect()
        } else {
            let mut all: Vec<usize> = (0..p).collect();
            all.shuffle(&mut self.rng);
            let mut chosen = all[..k].to_vec();
            chosen.sort_unstable();
            chosen
        };
        let mut split = best_split_over(self.d, &rows, &attrs, node_gini, self.params.min_samples_leaf);
        if split.is_none() && k < p {
            // No valid split among the sampled attributes; fall back to all
            // of them so impure separable nodes always split.
            let all: Vec<usize> = (0..p).collect();
            split = best_split_over(self.d, &rows, &all, node_gini, self.params.min_samples_leaf);
        }
        let Some(split) = split else {
            self.nodes.push(RawNode::Leaf(majority));
            return self.nodes.len() - 1;
        };
        let cond = Condition {
            attribute: self.d.schema[split.attribute].name.clone(),
            kind: self.d.schema[split.attribute].kind,
            predicate: split.predicate,
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| {
            !crate::dataset::eval_condition(&cond, &self.d.rows[i], split.attribute)
        });
        let slot = self.nodes.len();
        self.nodes.push(RawNode::Leaf(false)); // placeholder
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[slot] = RawNode::Internal {
            condition: cond,
            left,
            right,
        };
        slot
    }
}

struct RawTree {
    nodes: Vec<RawNode>,
    root: usize,
}

fn grow_tree(
    d: &Dataset,
    rows: Vec<usize>,
    params: &TreeParams,
    subsample: FeatureSubsample,
    seed: u64,
) -> RawTree {
    let mut b = TreeBuilder {
        d,
        params,
        subsample,
        rng: ChaCha8Rng::seed_from_u64(seed),
        nodes: Vec::new(),
    };
    let root = b.build(rows, 0);
    RawTree {
        nodes: b.nodes,
        root,
    }
}

/// Assigns dense condition ids by first appearance (tree order, then
/// pre-order within each tree) and rewrites nodes to reference them.
fn intern_forest(raw: Vec<RawTree>) -> RandomForest {
    let mut conditions: Vec<Condition> = Vec::new();
    let mut index: HashMap<Condition, usize> = HashMap::new();
    let mut trees = Vec::with_capacity(raw.len());
    for rt in &raw {
        // Pre-order walk to fix id assignment order.
        let mut order = Vec::new();
        let mut stack = vec![rt.root];
        while let Some(i) = stack.pop() {
            order.push(i);
            if let RawNode::Internal { left, right, .. } = rt.nodes[i] {
                stack.push(right);
                stack.push(left);
            }
        }
        for &i in &order {
            if let RawNode::Internal { condition, .. } = &rt.nodes[i] {
                if !index.contains_key(condition) {
                    index.insert(condition.clone(), conditions.len());
                    conditions.push(condition.clone());
                }
            }
        }
    }
    for rt in raw {
        let nodes: Vec<Node> = rt
            .nodes
            .iter()
            .map(|n| match n {
                RawNode::Leaf(c) => Node::Leaf(*c),
                RawNode::Internal {
                    condition,
                    left,
                    right,
                } => Node::Internal {
                    condition: index[condition],
                    left: *left,
                    right: *right,
                },
            })
            .collect();
        trees.push(DecisionTree::from_nodes(nodes, rt.root).expect("learner emits valid trees"));
    }
    RandomForest::new(conditions, trees).expect("learner emits valid forests")
}

/// Learns a single CART tree on the full training set (no bootstrap, no
/// feature subsampling), returned as a one-tree forest with its harvested
/// condition table.
pub fn learn_tree(train: &Dataset, params: &TreeParams) -> Result<RandomForest, LearnError> {
    if train.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let rows: Vec<usize> = (0..train.len()).collect();
    let raw = grow_tree(train, rows, params, FeatureSubsample::All, params.seed);
    Ok(intern_forest(vec![raw]))
}

/// Learns a bagged random forest. Trees are trained in parallel; each
/// tree's RNG is seeded with `seed + tree_index` so the result does not
/// depend on scheduling.
pub fn learn_forest(train: &Dataset, params: &ForestParams) -> Result<RandomForest, LearnError> {
    if train.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    assert!(params.trees >= 1, "a forest needs at least one tree");
    let n = train.len();
    let raw: Vec<RawTree> = (0..params.trees)
        .into_par_iter()
        .map(|ti| {
            let seed = params.tree.seed.wrapping_add(ti as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(train, rows, &params.tree, params.feature_subsample, seed ^ 0x9e37_79b9)
        })
        .collect();
    Ok(intern_forest(raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_csv, LoadOptions};

    fn ds(csv: &str) -> Dataset {
        load_csv(csv.as_bytes(), &LoadOptions::default()).unwrap()
    }

    #[test]
    fn single_row_gives_single_leaf() {
        let d = ds("A,y\n5,1\n");
        let f = learn_tree(&d, &TreeParams::default()).unwrap();
        assert_eq!(f.trees[0].node_count(), 1);
        assert!(f.trees[0].predict(&[]));
    }

    #[test]
    fn pure_labels_give_single_leaf() {
        let d = ds("A,y\n1,0\n2,0\n3,0\n");
        let f = learn_tree(&d, &TreeParams::default()).unwrap();
        assert_eq!(f.trees[0].node_count(), 1);
        assert_eq!(f.conditions.len(), 0);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let d = ds("A,y\n");
        assert!(matches!(
            learn_tree(&d, &TreeParams::default()),
            Err(LearnError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn xor_needs_depth_two_and_fits_train() {
        // Labels are XOR of the two Boolean columns: no single split helps,
        // but zero-gain splits are taken and purity is reached at depth 2.
        let d = ds("a,b,y\n0,0,0\n0,1,1\n1,0,1\n1,1,0\n");
        let f = learn_tree(&d, &TreeParams::default()).unwrap();
        let t = &f.trees[0];
        assert_eq!(t.depth(), 2);
        for (row, &label) in d.rows.iter().zip(&d.labels) {
            let bits: Vec<bool> = f
                .conditions
                .iter()
                .map(|c| {
                    let a = d.attribute_index(&c.attribute).unwrap();
                    crate::dataset::eval_condition(c, row, a)
                })
                .collect();
            assert_eq!(t.predict(&bits), label);
        }
    }

    #[test]
    fn unrestricted_tree_fits_contradiction_free_data() {
        let d = ds("A,B,S,y\n1,7,a,1\n2,6,b,0\n3,5,a,1\n4,4,c,0\n5,3,b,1\n6,2,a,0\n7,1,c,1\n8,0,b,0\n");
        let f = learn_tree(&d, &TreeParams::default()).unwrap();
        let b = crate::dataset::binarize(&d, &f.conditions).unwrap();
        let correct = b
            .rows
            .iter()
            .zip(&b.labels)
            .filter(|(bits, &l)| f.trees[0].predict(bits) == l)
            .count();
        assert_eq!(correct, d.len());
    }

    #[test]
    fn max_depth_is_respected() {
        let d = ds("A,y\n1,0\n2,1\n3,0\n4,1\n5,0\n6,1\n");
        let p = TreeParams {
            max_depth: Some(1),
            ..TreeParams::default()
        };
        let f = learn_tree(&d, &p).unwrap();
        assert!(f.trees[0].depth() <= 1);
    }

    #[test]
    fn deterministic_given_seed() {
        let d = ds("A,B,y\n1,4,1\n2,3,0\n3,2,1\n4,1,0\n5,0,1\n0,5,0\n");
        let p = ForestParams {
            trees: 5,
            ..ForestParams::default()
        };
        let f1 = learn_forest(&d, &p).unwrap();
        let f2 = learn_forest(&d, &p).unwrap();
        assert_eq!(f1, f2);
    }

    #[test]
    fn constant_labels_make_leaf_trees() {
        let d = ds("A,y\n1,1\n2,1\n3,1\n");
        let p = ForestParams {
            trees: 3,
            ..ForestParams::default()
        };
        let f = learn_forest(&d, &p).unwrap();
        assert!(f.trees.iter().all(|t| t.node_count() == 1));
        assert!(f.predict(&[]));
    }

    #[test]
    fn shared_conditions_are_interned_once() {
        // Two identical trees must share condition entries.
        let d = ds("A,y\n1,0\n2,1\n");
        let p = ForestParams {
            trees: 4,
            bootstrap: false,
            feature_subsample: FeatureSubsample::All,
            tree: TreeParams::default(),
        };
        let f = learn_forest(&d, &p).unwrap();
        assert_eq!(f.conditions.len(), 1);
        assert_eq!(f.n_trees(), 4);
    }

    #[test]
    fn numeric_thresholds_are_midpoints() {
        let d = ds("A,y\n1,0\n3,1\n");
        let f = learn_tree(&d, &TreeParams::default()).unwrap();
        assert_eq!(f.conditions.len(), 1);
        match f.conditions[0].predicate {
            Predicate::GreaterThan(t) => assert_eq!(t, 2.0),
            _ => panic!("expected threshold split"),
        }
    }

    #[test]
    fn categorical_split_is_one_vs_rest() {
        let d = ds("S,y\na,1\nb,0\nc,0\na,1\n");
        let f = learn_tree(&d, &TreeParams::default()).unwrap();
        assert!(f
            .conditions
            .iter()
            .any(|c| matches!(&c.predicate, Predicate::Equals(v) if v == "a")));
    }
}
