//! Shared fixtures, independent oracles, and random generators for the
//! integration and acceptance suites.
//!
//! Everything here recomputes results from first principles (exhaustive
//! enumeration, naive fixpoints, naive candidate scans) so the production
//! paths are checked against genuinely independent code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use trex_core::dataset::{AttributeSchema, BinarizedDataset, Dataset, Value};
use trex_core::logic::{
    AttributeKind, CnfFormula, Condition, Literal, Predicate, Term,
};
use trex_core::miner::MinerConfig;
use trex_core::rules::{AssociationRule, RuleHead};
use trex_core::theory::{build_theory, DomainTheory};
use trex_core::tree::{DecisionTree, Node, RandomForest};

// ---------------------------------------------------------------------------
// Loan example fixtures
// ---------------------------------------------------------------------------

pub fn cond_gt(attr: &str, t: f64) -> Condition {
    Condition {
        attribute: attr.into(),
        kind: AttributeKind::Numerical,
        predicate: Predicate::GreaterThan(t),
    }
}

pub fn cond_eq(attr: &str, v: &str) -> Condition {
    Condition {
        attribute: attr.into(),
        kind: AttributeKind::Categorical,
        predicate: Predicate::Equals(v.into()),
    }
}

/// Conditions x0=A>25, x1=A>60, x2=I>30, x3=I>50, x4=S=U, x5=S=TP, x6=S=PP.
pub fn loan_conditions() -> Vec<Condition> {
    vec![
        cond_gt("A", 25.0),
        cond_gt("A", 60.0),
        cond_gt("I", 30.0),
        cond_gt("I", 50.0),
        cond_eq("S", "U"),
        cond_eq("S", "TP"),
        cond_eq("S", "PP"),
    ]
}

/// The three-tree loan forest.
pub fn loan_forest() -> RandomForest {
    let t1 = DecisionTree::from_nodes(
        vec![
            Node::Internal { condition: 0, left: 1, right: 2 },
            Node::Leaf(false),
            Node::Internal { condition: 1, left: 3, right: 4 },
            Node::Internal { condition: 2, left: 5, right: 6 },
            Node::Internal { condition: 6, left: 7, right: 8 },
            Node::Leaf(false),
            Node::Leaf(true),
            Node::Leaf(false),
            Node::Leaf(true),
        ],
        0,
    )
    .unwrap();
    let t2 = DecisionTree::from_nodes(
        vec![
            Node::Internal { condition: 4, left: 1, right: 2 },
            Node::Internal { condition: 3, left: 3, right: 4 },
            Node::Leaf(false),
            Node::Leaf(false),
            Node::Internal { condition: 5, left: 5, right: 6 },
            Node::Leaf(false),
            Node::Leaf(true),
        ],
        0,
    )
    .unwrap();
    let t3 = DecisionTree::from_nodes(
        vec![
            Node::Internal { condition: 6, left: 1, right: 2 },
            Node::Internal { condition: 3, left: 3, right: 4 },
            Node::Internal { condition: 0, left: 5, right: 6 },
            Node::Leaf(false),
            Node::Leaf(true),
            Node::Leaf(false),
            Node::Leaf(true),
        ],
        0,
    )
    .unwrap();
    RandomForest::new(loan_conditions(), vec![t1, t2, t3]).unwrap()
}

pub const LOAN_X: [bool; 7] = [true, false, true, true, false, false, true];

/// (I>50 ∧ S=PP) ⇒ y.
pub fn loan_car() -> AssociationRule {
    AssociationRule::new(
        Term::new(vec![Literal::positive(3), Literal::positive(6)]),
        RuleHead::Class(true),
        0.5,
        1.0,
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration oracles
// ---------------------------------------------------------------------------

pub fn all_instances(n: usize) -> impl Iterator<Item = Vec<bool>> {
    assert!(n <= 20);
    (0u32..1 << n).map(move |m| (0..n).map(|i| m >> i & 1 == 1).collect())
}

/// Satisfiability by enumeration.
pub fn sat_enum(theory: &CnfFormula, term: &Term, n: usize) -> bool {
    all_instances(n).any(|bits| theory.satisfied_by(&bits) && term.covers(&bits))
}

/// Entailment theory ∧ term ⊨ lit, by enumeration.
pub fn entails_enum(theory: &CnfFormula, term: &Term, lit: Literal, n: usize) -> bool {
    all_instances(n)
        .all(|bits| !(theory.satisfied_by(&bits) && term.covers(&bits)) || lit.eval(&bits))
}

/// Reference unit propagation: a plain fixpoint loop over the clause list,
/// independent of the production engine. Returns (closure, conflict).
pub fn reference_up(theory: &CnfFormula, assumptions: &[Literal]) -> (Vec<Literal>, bool) {
    let mut derived: HashSet<Literal> = assumptions.iter().copied().collect();
    if assumptions
        .iter()
        .any(|l| derived.contains(&l.complement()))
    {
        return (derived.into_iter().collect(), true);
    }
    loop {
        let mut changed = false;
        for clause in theory.clauses() {
            let mut unresolved: Vec<Literal> = Vec::new();
            let mut satisfied = false;
            for &l in clause.literals() {
                if derived.contains(&l) {
                    satisfied = true;
                    break;
                }
                if !derived.contains(&l.complement()) {
                    unresolved.push(l);
                }
            }
            if satisfied {
                continue;
            }
            match unresolved.len() {
                0 => {
                    let mut out: Vec<Literal> = derived.into_iter().collect();
                    out.sort_unstable();
                    return (out, true);
                }
                1 => {
                    derived.insert(unresolved[0]);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            let mut out: Vec<Literal> = derived.into_iter().collect();
            out.sort_unstable();
            return (out, false);
        }
    }
}

// ---------------------------------------------------------------------------
// Naive miner oracle
// ---------------------------------------------------------------------------

/// Brute-force reimplementation of the mining semantics: enumerate every
/// body, count by scanning rows, filter by the same predicates, sort by
/// (support desc, body, head), conflict-filter sequentially with caps.
pub fn naive_mine(
    d: &BinarizedDataset,
    th: &DomainTheory,
    cfg: &MinerConfig,
) -> (Vec<AssociationRule>, Vec<AssociationRule>) {
    let n = d.n_conditions();
    let rows = d.len();
    let max_body = cfg.max_rule_size.saturating_sub(1).min(2);
    let min_count = 1.max((cfg.min_support * rows as f64).ceil() as usize);

    let mut bodies: Vec<Vec<Literal>> = Vec::new();
    if max_body >= 1 {
        for c in 0..2 * n {
            bodies.push(vec![Literal::from_code(c)]);
        }
    }
    if max_body >= 2 {
        for c1 in 0..2 * n {
            for c2 in c1 + 1..2 * n {
                if c1 / 2 != c2 / 2 {
                    bodies.push(vec![Literal::from_code(c1), Literal::from_code(c2)]);
                }
            }
        }
    }

    struct Cand {
        count: usize,
        body: Vec<Literal>,
        head: RuleHead,
    }
    let mut cands: Vec<Cand> = Vec::new();
    for body in bodies {
        let term = Term::new(body.clone());
        let covered: Vec<usize> = (0..rows).filter(|&i| term.covers(&d.rows[i])).collect();
        if covered.len() < min_count {
            continue;
        }
        if !sat_enum(th.structural(), &term, n) {
            continue;
        }
        let (closure, conflict) = reference_up(th.structural(), &body);
        assert!(!conflict, "body satisfiable yet UP-conflicting");
        let closure: HashSet<Literal> = closure.into_iter().collect();
        let mut heads: Vec<RuleHead> = (0..2 * n)
            .map(|c| RuleHead::Condition(Literal::from_code(c)))
            .collect();
        heads.push(RuleHead::Class(false));
        heads.push(RuleHead::Class(true));
        for head in heads {
            if let RuleHead::Condition(h) = head {
                if body.iter().any(|b| b.condition() == h.condition()) {
                    continue;
                }
                if closure.contains(&h) {
                    continue;
                }
            }
            let both = covered
                .iter()
                .filter(|&&i| head.eval(&d.rows[i], d.labels[i]))
                .count();
            if both == covered.len() {
                cands.push(Cand {
                    count: covered.len(),
                    body: body.clone(),
                    head,
                });
            }
        }
    }
    cands.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.body.cmp(&b.body))
            .then_with(|| a.head.cmp(&b.head))
    });

    let mut cars: Vec<AssociationRule> = Vec::new();
    let mut others: Vec<AssociationRule> = Vec::new();
    let mut kept: Vec<(Term, RuleHead)> = Vec::new();
    for c in cands {
        let is_car = matches!(c.head, RuleHead::Class(_));
        if is_car && cars.len() >= cfg.max_cars {
            continue;
        }
        if !is_car && others.len() >= cfg.max_other_rules {
            continue;
        }
        let body = Term::new(c.body.clone());
        let clash = kept.iter().any(|(other_body, other_head)| {
            c.head.is_complement_of(*other_head)
                && match body.union(other_body) {
                    None => false,
                    Some(joint) => sat_enum(th.structural(), &joint, n),
                }
        });
        if clash {
            continue;
        }
        let rule = AssociationRule::new(
            body.clone(),
            c.head,
            c.count as f64 / rows as f64,
            1.0,
        )
        .unwrap();
        kept.push((body, c.head));
        if is_car {
            cars.push(rule);
        } else {
            others.push(rule);
        }
    }
    (cars, others)
}

// ---------------------------------------------------------------------------
// Random generators
// ---------------------------------------------------------------------------

/// Random condition set with realistic attribute structure: numerical
/// attributes with threshold chains and categorical attributes with a few
/// values. At most `max_conds` conditions.
pub fn random_conditions(rng: &mut ChaCha8Rng, max_conds: usize) -> Vec<Condition> {
    let mut conds = Vec::new();
    let mut attr = 0;
    while conds.len() < max_conds {
        attr += 1;
        let name = format!("a{attr}");
        if rng.gen_bool(0.6) {
            let k = rng.gen_range(1..=3.min(max_conds - conds.len()));
            let mut ts: Vec<i32> = Vec::new();
            while ts.len() < k {
                let t = rng.gen_range(0..20);
                if !ts.contains(&t) {
                    ts.push(t);
                }
            }
            for t in ts {
                conds.push(cond_gt(&name, t as f64 + 0.5));
            }
        } else {
            let k = rng.gen_range(2..=3).min(max_conds - conds.len());
            for v in 0..k {
                conds.push(cond_eq(&name, &format!("v{v}")));
            }
        }
        if rng.gen_bool(0.3) {
            break;
        }
    }
    if conds.is_empty() {
        conds.push(cond_gt("a0", 0.5));
    }
    conds
}

/// Random tree over `n_conds` conditions; conditions never repeat along a
/// path, so every path term is consistent.
pub fn random_tree(rng: &mut ChaCha8Rng, n_conds: usize, max_depth: usize) -> DecisionTree {
    let mut nodes = Vec::new();
    let mut available: Vec<usize> = (0..n_conds).collect();
    let root = random_tree_rec(rng, &mut available, max_depth, &mut nodes);
    DecisionTree::from_nodes(nodes, root).unwrap()
}

fn random_tree_rec(
    rng: &mut ChaCha8Rng,
    available: &mut Vec<usize>,
    depth_left: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    if depth_left == 0 || available.is_empty() || rng.gen_bool(0.3) {
        nodes.push(Node::Leaf(rng.gen_bool(0.5)));
        return nodes.len() - 1;
    }
    let pick = rng.gen_range(0..available.len());
    let condition = available.swap_remove(pick);
    let left = random_tree_rec(rng, available, depth_left - 1, nodes);
    let right = random_tree_rec(rng, available, depth_left - 1, nodes);
    available.push(condition);
    nodes.push(Node::Internal {
        condition,
        left,
        right,
    });
    nodes.len() - 1
}

pub fn random_forest(rng: &mut ChaCha8Rng, conditions: Vec<Condition>, m: usize) -> RandomForest {
    let n = conditions.len();
    let trees = (0..m)
        .map(|_| random_tree(rng, n, 4))
        .collect();
    RandomForest::new(conditions, trees).unwrap()
}

/// Random instance satisfying the theory, by rejection sampling.
pub fn random_sat_instance(
    rng: &mut ChaCha8Rng,
    theory: &CnfFormula,
    n: usize,
) -> Option<Vec<bool>> {
    for _ in 0..10_000 {
        let bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        if theory.satisfied_by(&bits) {
            return Some(bits);
        }
    }
    None
}

/// Random conflict-free CAR set over the conditions (bodies of 1–2
/// literals, class heads), greedily filtered with the production conflict
/// check.
pub fn random_car_set(
    rng: &mut ChaCha8Rng,
    n_conds: usize,
    th: &DomainTheory,
    max_rules: usize,
) -> Vec<AssociationRule> {
    let mut kept: Vec<AssociationRule> = Vec::new();
    for _ in 0..max_rules * 3 {
        if kept.len() >= max_rules {
            break;
        }
        let len = rng.gen_range(1..=2.min(n_conds));
        let mut lits = Vec::new();
        for _ in 0..len {
            lits.push(Literal::new(rng.gen_range(0..n_conds), rng.gen_bool(0.5)));
        }
        let Some(body) = Term::try_new(lits) else {
            continue;
        };
        let Ok(rule) =
            AssociationRule::new(body, RuleHead::Class(rng.gen_bool(0.5)), 0.1, 1.0)
        else {
            continue;
        };
        if kept
            .iter()
            .all(|k| !trex_core::rules::conflicts(k, &rule, th))
        {
            kept.push(rule);
        }
    }
    kept
}

/// The classification-circuit characterization of rectification, applied
/// literally: condition the rule set on y and on ȳ, then evaluate
/// (F ∧ ¬(A_c(ȳ) ∧ ¬A_c(y))) ∨ (A_c(y) ∧ ¬A_c(ȳ)).
pub fn rectification_formula(
    base: bool,
    cars: &[AssociationRule],
    bits: &[bool],
) -> bool {
    // A_c(y): clauses with head y become true; a clause with head ȳ
    // reduces to ¬body.
    let a_y = cars
        .iter()
        .filter(|r| r.head == RuleHead::Class(false))
        .all(|r| !r.body.covers(bits));
    // A_c(ȳ): symmetric.
    let a_ny = cars
        .iter()
        .filter(|r| r.head == RuleHead::Class(true))
        .all(|r| !r.body.covers(bits));
    (base && !(a_ny && !a_y)) || (a_y && !a_ny)
}

// ---------------------------------------------------------------------------
// Synthetic dataset with planted structure
// ---------------------------------------------------------------------------

/// Deterministic synthetic dataset. Ground truth: positive iff
/// (A > 80 and S = Q) or B > 60 — the first disjunct is a rare deep
/// interaction that bagged trees tend to miss. Attribute D equals A + 40
/// exactly, planting cross-attribute implications for the theory
/// extension to mine.
pub fn planted_csv(rows: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("A,B,D,S,y\n");
    for _ in 0..rows {
        let a: f64 = rng.gen_range(0..100) as f64;
        let b: f64 = rng.gen_range(0..100) as f64;
        let d = a + 40.0;
        let s = ["Q", "R", "T"][rng.gen_range(0..3)];
        let y = u8::from((a > 80.0 && s == "Q") || b > 60.0);
        out.push_str(&format!("{a},{b},{d},{s},{y}\n"));
    }
    out
}

/// Parses a CSV string into a dataset with the default label column.
pub fn dataset_from_csv(text: &str) -> Dataset {
    trex_core::dataset::load_csv(text.as_bytes(), &Default::default()).unwrap()
}

/// Builds a random raw dataset plus conditions over its schema, then
/// binarizes; rows of the result satisfy the structural theory by
/// construction.
pub fn random_binarized(
    rng: &mut ChaCha8Rng,
    max_conds: usize,
    max_rows: usize,
) -> BinarizedDataset {
    let conds = random_conditions(rng, max_conds);
    // collect attribute names in order of first appearance
    let mut names: Vec<String> = Vec::new();
    for c in &conds {
        if !names.contains(&c.attribute) {
            names.push(c.attribute.clone());
        }
    }
    let schema: Vec<AttributeSchema> = names
        .iter()
        .map(|name| {
            let is_num = conds
                .iter()
                .find(|c| &c.attribute == name)
                .map(|c| matches!(c.predicate, Predicate::GreaterThan(_)))
                .unwrap();
            AttributeSchema {
                name: name.clone(),
                kind: if is_num {
                    AttributeKind::Numerical
                } else {
                    AttributeKind::Categorical
                },
                observed_domain: vec![],
            }
        })
        .collect();
    let n_rows = rng.gen_range(1..=max_rows);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n_rows {
        let row: Vec<Value> = schema
            .iter()
            .map(|a| match a.kind {
                AttributeKind::Numerical => Value::Num(rng.gen_range(0..20) as f64),
                _ => Value::Cat(format!("v{}", rng.gen_range(0..4))),
            })
            .collect();
        rows.push(row);
        labels.push(rng.gen_bool(0.5));
    }
    let d = Dataset {
        schema,
        rows,
        labels,
    };
    trex_core::dataset::binarize(&d, &conds).unwrap()
}

/// Structural theory of a binarized dataset's condition set.
pub fn theory_of(d: &BinarizedDataset) -> DomainTheory {
    build_theory(&d.conditions)
}

/// Least-squares fit of y = a·x + b, returning (slope, r_squared).
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}
