//! Rectification: repairing a tree-based model with classification rules.
//!
//! A rule b ⇒ h patches every root-to-leaf path p whose leaf contradicts h
//! and whose term is jointly satisfiable with the rule body under the
//! domain theory. The patch is a comb: a chain testing the body literals
//! missing from the path, reaching a leaf labelled by the rule head when
//! they all hold and restoring the original leaf otherwise. Applying the
//! rules of a conflict-free set one by one yields the same classifier
//! regardless of order.
//!
//! Simplification prunes arcs whose literal is entailed by the literals
//! above them plus the theory (complete entailment check) and merges
//! internal nodes whose subtrees are identical, to a fixpoint. It never
//! changes the prediction of any theory-satisfying instance.

use crate::logic::{Literal, Propagator, Term};
use crate::rules::{conflicts, AssociationRule, RuleHead};
use crate::theory::DomainTheory;
use crate::tree::{DecisionTree, Node, PathTerm, RandomForest};
use rayon::prelude::*;
use serde::Serialize;
use std::time::{Duration, Instant};

#[derive(Debug, thiserror::Error)]
pub enum RectifyError {
    #[error("rule is not a classification rule")]
    NotACar,
    #[error("path leaf does not conflict with the rule head")]
    NoConflict,
    #[error("rule set is conflicting: rules {first} and {second} disagree on a common instance")]
    ConflictingRuleSet { first: usize, second: usize },
}

/// Counters of one `rectify_forest` run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RectificationReport {
    pub rules_applied: usize,
    pub rules_changing_model: usize,
    pub paths_patched: usize,
    pub node_count_before: usize,
    pub node_count_after: usize,
    pub depth_before: usize,
    pub depth_after: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

fn car_class(rule: &AssociationRule) -> Result<bool, RectifyError> {
    match rule.head {
        RuleHead::Class(c) => Ok(c),
        RuleHead::Condition(_) => Err(RectifyError::NotACar),
    }
}

/// Builds the comb fragment replacing the leaf of `p` for rule `r`.
///
/// The main branch tests the body literals missing from the path in
/// canonical order; completing it reaches a leaf labelled by the rule
/// head, any mismatch restores the original leaf. An empty comb is the
/// flipped leaf alone.
pub fn patch(p: &PathTerm, r: &AssociationRule) -> Result<DecisionTree, RectifyError> {
    let head = car_class(r)?;
    if p.leaf_class == head {
        return Err(RectifyError::NoConflict);
    }
    let missing: Vec<Literal> = r
        .body
        .iter()
        .filter(|l| !p.term.contains(*l))
        .collect();
    let mut nodes = Vec::with_capacity(2 * missing.len() + 1);
    let root = build_comb(&missing, head, p.leaf_class, &mut nodes);
    Ok(DecisionTree::from_nodes(nodes, root).expect("comb is a valid tree"))
}

/// Appends the comb for `missing` to `nodes`, returning its root id.
fn build_comb(
    missing: &[Literal],
    head_class: bool,
    original_leaf: bool,
    nodes: &mut Vec<Node>,
) -> usize {
    match missing.split_first() {
        None => {
            nodes.push(Node::Leaf(head_class));
            nodes.len() - 1
        }
        Some((&lit, rest)) => {
            let continue_id = build_comb(rest, head_class, original_leaf, nodes);
            nodes.push(Node::Leaf(original_leaf));
            let side_id = nodes.len() - 1;
            // Following the literal continues the comb; failing it restores
            // the original leaf.
            let (left, right) = if lit.is_positive() {
                (side_id, continue_id)
            } else {
                (continue_id, side_id)
            };
            nodes.push(Node::Internal {
                condition: lit.condition(),
                left,
                right,
            });
            nodes.len() - 1
        }
    }
}

fn engine_capacity(t: &DecisionTree, r: &AssociationRule) -> usize {
    let tree_n = t.max_condition().map_or(0, |c| c + 1);
    let body_n = r
        .body
        .literals()
        .iter()
        .map(|l| l.condition() + 1)
        .max()
        .unwrap_or(0);
    tree_n.max(body_n)
}

/// Rectifies one tree by one classification rule under the theory.
pub fn rectify_tree(
    t: &DecisionTree,
    r: &AssociationRule,
    th: &DomainTheory,
) -> Result<DecisionTree, RectifyError> {
    let mut engine = Propagator::new(&th.combined(), engine_capacity(t, r));
    let mut out = Rectifier {
        rule: r,
        head: car_class(r)?,
        engine: &mut engine,
        nodes: Vec::new(),
        patched: 0,
    };
    let mut prefix = Vec::new();
    let root = out.rebuild(t, t.root(), &mut prefix);
    Ok(DecisionTree::from_nodes(out.nodes, root).expect("rectified tree is valid"))
}

struct Rectifier<'a> {
    rule: &'a AssociationRule,
    head: bool,
    engine: &'a mut Propagator,
    nodes: Vec<Node>,
    patched: usize,
}

impl Rectifier<'_> {
    fn rebuild(&mut self, t: &DecisionTree, i: usize, prefix: &mut Vec<Literal>) -> usize {
        match *t.node(i) {
            Node::Leaf(class) => {
                if class != self.head {
                    if let Some(path) = Term::try_new(prefix.clone()) {
                        if let Some(joint) = path.union(&self.rule.body) {
                            if self.engine.sat(&joint) {
                                self.patched += 1;
                                let missing: Vec<Literal> = self
                                    .rule
                                    .body
                                    .iter()
                                    .filter(|l| !path.contains(*l))
                                    .collect();
                                return build_comb(&missing, self.head, class, &mut self.nodes);
                            }
                        }
                    }
                }
                self.nodes.push(Node::Leaf(class));
                self.nodes.len() - 1
            }
            Node::Internal {
                condition,
                left,
                right,
            } => {
                prefix.push(Literal::negative(condition));
                let l = self.rebuild(t, left, prefix);
                prefix.pop();
                prefix.push(Literal::positive(condition));
                let r = self.rebuild(t, right, prefix);
                prefix.pop();
                let slot = self.nodes.len();
                self.nodes.push(Node::Internal {
                    condition,
                    left: l,
                    right: r,
                });
                slot
            }
        }
    }
}

/// Simplifies a tree under the theory: drops arcs whose literal is a
/// logical consequence of the path prefix and the theory, merges nodes
/// with identical subtrees, and iterates to a fixpoint. Predictions on all
/// theory-satisfying instances are preserved.
pub fn simplify(t: &DecisionTree, th: &DomainTheory) -> DecisionTree {
    let n = t.max_condition().map_or(0, |c| c + 1);
    let mut engine = Propagator::new(&th.combined(), n);
    let mut current = t.clone();
    loop {
        let mut s = Simplifier {
            engine: &mut engine,
            nodes: Vec::new(),
        };
        let mut prefix = Vec::new();
        let root = s.simp(&current, current.root(), &mut prefix);
        let (nodes, root) = compact(&s.nodes, root);
        let next = DecisionTree::from_nodes(nodes, root).expect("simplified tree is valid");
        if next == current {
            return next;
        }
        current = next;
    }
}

struct Simplifier<'a> {
    engine: &'a mut Propagator,
    nodes: Vec<Node>,
}

impl Simplifier<'_> {
    /// True iff prefix ∧ theory entails `lit` (complete check).
    fn entailed(&mut self, prefix: &[Literal], lit: Literal) -> bool {
        let Some(assumptions) = Term::try_new(
            prefix
                .iter()
                .copied()
                .chain(std::iter::once(lit.complement()))
                .collect(),
        ) else {
            // prefix already contains lit: trivially entailed
            return prefix.contains(&lit);
        };
        !self.engine.sat(&assumptions)
    }

    fn simp(&mut self, t: &DecisionTree, i: usize, prefix: &mut Vec<Literal>) -> usize {
        match *t.node(i) {
            Node::Leaf(class) => {
                self.nodes.push(Node::Leaf(class));
                self.nodes.len() - 1
            }
            Node::Internal {
                condition,
                left,
                right,
            } => {
                let pos = Literal::positive(condition);
                if self.entailed(prefix, pos) {
                    prefix.push(pos);
                    let id = self.simp(t, right, prefix);
                    prefix.pop();
                    return id;
                }
                if self.entailed(prefix, pos.complement()) {
                    prefix.push(pos.complement());
                    let id = self.simp(t, left, prefix);
                    prefix.pop();
                    return id;
                }
                prefix.push(pos.complement());
                let l = self.simp(t, left, prefix);
                prefix.pop();
                prefix.push(pos);
                let r = self.simp(t, right, prefix);
                prefix.pop();
                if subtree_eq(&self.nodes, l, r) {
                    return l;
                }
                self.nodes.push(Node::Internal {
                    condition,
                    left: l,
                    right: r,
                });
                self.nodes.len() - 1
            }
        }
    }
}

fn subtree_eq(nodes: &[Node], a: usize, b: usize) -> bool {
    match (&nodes[a], &nodes[b]) {
        (Node::Leaf(x), Node::Leaf(y)) => x == y,
        (
            Node::Internal {
                condition: ca,
                left: la,
                right: ra,
            },
            Node::Internal {
                condition: cb,
                left: lb,
                right: rb,
            },
        ) => ca == cb && subtree_eq(nodes, *la, *lb) && subtree_eq(nodes, *ra, *rb),
        _ => false,
    }
}

/// Drops arena nodes unreachable from `root` (merges orphan siblings).
fn compact(nodes: &[Node], root: usize) -> (Vec<Node>, usize) {
    let mut out = Vec::new();
    let new_root = compact_rec(nodes, root, &mut out);
    (out, new_root)
}

fn compact_rec(nodes: &[Node], i: usize, out: &mut Vec<Node>) -> usize {
    match nodes[i] {
        Node::Leaf(c) => {
            out.push(Node::Leaf(c));
            out.len() - 1
        }
        Node::Internal {
            condition,
            left,
            right,
        } => {
            let l = compact_rec(nodes, left, out);
            let r = compact_rec(nodes, right, out);
            out.push(Node::Internal {
                condition,
                left: l,
                right: r,
            });
            out.len() - 1
        }
    }
}

/// Rectifies a forest by a conflict-free list of classification rules,
/// applied in the given order; every tree is rectified by every rule and
/// simplified after each rule.
pub fn rectify_forest(
    f: &RandomForest,
    cars: &[AssociationRule],
    th: &DomainTheory,
) -> Result<(RandomForest, RectificationReport), RectifyError> {
    for rule in cars {
        car_class(rule)?;
    }
    for i in 0..cars.len() {
        for j in i + 1..cars.len() {
            if conflicts(&cars[i], &cars[j], th) {
                return Err(RectifyError::ConflictingRuleSet { first: i, second: j });
            }
        }
    }
    let start = Instant::now();
    let mut report = RectificationReport {
        rules_applied: cars.len(),
        node_count_before: f.size(),
        depth_before: f.depth(),
        ..Default::default()
    };
    let mut current = f.trees.clone();
    // Baseline for change detection: what the current trees look like
    // once simplified, so that simplification alone never counts as a
    // model change on the first rule.
    let mut baseline: Vec<DecisionTree> = current.par_iter().map(|t| simplify(t, th)).collect();
    for rule in cars {
        let stage: Vec<(DecisionTree, usize)> = current
            .par_iter()
            .map(|t| {
                let mut engine = Propagator::new(&th.combined(), engine_capacity(t, rule));
                let mut r = Rectifier {
                    rule,
                    head: car_class(rule).expect("checked above"),
                    engine: &mut engine,
                    nodes: Vec::new(),
                    patched: 0,
                };
                let mut prefix = Vec::new();
                let root = r.rebuild(t, t.root(), &mut prefix);
                let rect = DecisionTree::from_nodes(r.nodes, root).expect("valid tree");
                (simplify(&rect, th), r.patched)
            })
            .collect();
        let next: Vec<DecisionTree> = stage.iter().map(|(t, _)| t.clone()).collect();
        report.paths_patched += stage.iter().map(|(_, p)| p).sum::<usize>();
        if next != baseline {
            report.rules_changing_model += 1;
        }
        baseline = next.clone();
        current = next;
    }
    let rectified = RandomForest::new(f.conditions.clone(), current)
        .expect("rectification preserves condition references");
    report.node_count_after = rectified.size();
    report.depth_after = rectified.depth();
    report.elapsed = start.elapsed();
    Ok((rectified, report))
}

/// Reference semantics of rectification by a conflict-free CAR set, for
/// oracles and property tests: rule-covered instances take the rule class,
/// everything else keeps the base prediction.
pub fn rectified_prediction(
    base: impl Fn(&[bool]) -> bool,
    cars: &[AssociationRule],
    bits: &[bool],
) -> bool {
    let covered_pos = cars
        .iter()
        .any(|r| r.head == RuleHead::Class(true) && r.body.covers(bits));
    let covered_neg = cars
        .iter()
        .any(|r| r.head == RuleHead::Class(false) && r.body.covers(bits));
    if covered_pos && !covered_neg {
        true
    } else if covered_neg && !covered_pos {
        false
    } else {
        base(bits)
    }
}
