//! Abductive explanation engine: direct reasons, the greedy computation of
//! UP-majoritary reasons, multi-ordering search for short reasons, and an
//! exhaustive oracle for small condition sets.
//!
//! A term qualifies for an instance predicted 1 when it is a UP-implicant
//! (given the theory) of the CNF views of at least ⌊m/2⌋+1 trees; for an
//! instance predicted 0 the trees are negated by flipping their leaves.
//! The greedy pass starts from the canonical instance term and drops each
//! literal in the elimination order iff the remainder still qualifies, so
//! the result is removal-minimal by construction.
//!
//! The hot loop keeps, per CNF clause, a count of its literals inside the
//! current propagation closure. Dropping a literal can only shrink the
//! closure, so a candidate is evaluated by removing the vanished literals
//! from those counters and either committing or rolling back.

use crate::logic::{sat, CnfFormula, Literal, LiteralSet, Propagator, Term};
use crate::theory::DomainTheory;
use crate::tree::RandomForest;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ExplainError {
    #[error("instance violates the domain theory")]
    InfeasibleInstance,
    #[error("no majoritary reason exists: the vote is tied on the non-predicted side")]
    NoMajorityReason,
    #[error("exhaustive oracle limited to 16 conditions, model has {0}")]
    TooLargeForOracle(usize),
    #[error("preference sets overlap")]
    OverlappingPreferenceSets,
    #[error("elimination order is not a permutation of the instance term")]
    InvalidEliminationOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExplanationKind {
    Direct,
    UpMajoritary,
    SufficientOracle,
}

/// Which theory an explanation was computed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoryTag {
    Base,
    Extended,
}

/// An abductive explanation: a sub-term of the instance's canonical term.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub term: Term,
    pub kind: ExplanationKind,
    pub theory_tag: TheoryTag,
    pub ordering_seed: Option<u64>,
}

/// Work counters of one greedy run, for asserting complexity bounds.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExplainStats {
    /// Candidate evaluations; exactly one per literal of the instance term.
    pub attempts: usize,
    /// Total unit-propagation work over all attempts.
    pub propagation_work: usize,
    /// Clause-counter updates over all attempts.
    pub counter_updates: usize,
}

/// Flattened CNF views of every tree for one class, with occurrence lists.
struct ClauseDb {
    lits: Vec<Literal>,
    starts: Vec<u32>,
    clause_tree: Vec<u32>,
    occ: Vec<Vec<u32>>,
    n_trees: usize,
}

impl ClauseDb {
    fn build(cnfs: &[CnfFormula], n_conditions: usize) -> ClauseDb {
        let mut lits = Vec::new();
        let mut starts = vec![0u32];
        let mut clause_tree = Vec::new();
        let mut occ = vec![Vec::new(); 2 * n_conditions];
        for (ti, cnf) in cnfs.iter().enumerate() {
            for clause in cnf.clauses() {
                let ci = clause_tree.len() as u32;
                clause_tree.push(ti as u32);
                for &l in clause.literals() {
                    occ[l.code()].push(ci);
                    lits.push(l);
                }
                starts.push(lits.len() as u32);
            }
        }
        ClauseDb {
            lits,
            starts,
            clause_tree,
            occ,
            n_trees: cnfs.len(),
        }
    }

    fn n_clauses(&self) -> usize {
        self.clause_tree.len()
    }

    fn clause_lits(&self, ci: usize) -> &[Literal] {
        &self.lits[self.starts[ci] as usize..self.starts[ci + 1] as usize]
    }
}

/// Start state of the greedy tracker for one instance, reused (cloned)
/// across elimination orderings.
struct TrackerInit {
    closure_list: Vec<Literal>,
    cnt: Vec<u32>,
    zero_cnt: Vec<u32>,
    qualified: usize,
}

/// Reusable explanation engine for one (forest, theory) pair. Tree CNFs
/// are materialized once per class on first use and shared by every
/// instance explained through this value.
pub struct Explainer<'f> {
    forest: &'f RandomForest,
    theory_tag: TheoryTag,
    engine: Propagator,
    db_pos: Option<ClauseDb>,
    db_neg: Option<ClauseDb>,
}

impl<'f> Explainer<'f> {
    pub fn new(forest: &'f RandomForest, th: &DomainTheory) -> Explainer<'f> {
        Explainer {
            forest,
            theory_tag: if th.is_extended() {
                TheoryTag::Extended
            } else {
                TheoryTag::Base
            },
            engine: Propagator::new(&th.combined(), forest.conditions.len()),
            db_pos: None,
            db_neg: None,
        }
    }

    fn ensure_db(&mut self, class: bool) {
        let slot = if class {
            &mut self.db_pos
        } else {
            &mut self.db_neg
        };
        if slot.is_none() {
            let n = self.forest.conditions.len();
            let cnfs: Vec<CnfFormula> = self
                .forest
                .trees
                .iter()
                .map(|t| {
                    if class {
                        t.to_cnf()
                    } else {
                        t.flip_leaves().to_cnf()
                    }
                })
                .collect();
            *slot = Some(ClauseDb::build(&cnfs, n));
        }
    }

    /// Checks the instance against the theory; explanations are defined
    /// only for theory-satisfying instances.
    fn check_feasible(&mut self, t_x: &Term) -> Result<(), ExplainError> {
        if self.engine.sat(t_x) {
            Ok(())
        } else {
            Err(ExplainError::InfeasibleInstance)
        }
    }

    /// Tracker start state shared by every ordering of one instance: the
    /// full-term closure and the per-clause closure-literal counts.
    fn prepare(&mut self, class: bool, t_x: &Term) -> Result<TrackerInit, ExplainError> {
        self.ensure_db(class);
        let n = self.forest.conditions.len();
        let threshold = self.majority_threshold();
        let Explainer {
            engine,
            db_pos,
            db_neg,
            ..
        } = self;
        let db = if class {
            db_pos.as_ref().unwrap()
        } else {
            db_neg.as_ref().unwrap()
        };
        let ok = engine.propagate(t_x);
        assert!(ok, "feasible instance cannot UP-conflict with the theory");
        let closure_list: Vec<Literal> = engine.trail().to_vec();
        let mut cnt: Vec<u32> = vec![0; db.n_clauses()];
        let mut zero_cnt: Vec<u32> = vec![0; db.n_trees];
        {
            let mut closure = LiteralSet::new(n);
            for &l in &closure_list {
                closure.insert(l);
            }
            for ci in 0..db.n_clauses() {
                cnt[ci] = db
                    .clause_lits(ci)
                    .iter()
                    .filter(|&&l| closure.contains(l))
                    .count() as u32;
                if cnt[ci] == 0 {
                    zero_cnt[db.clause_tree[ci] as usize] += 1;
                }
            }
        }
        let qualified = zero_cnt.iter().filter(|&&z| z == 0).count();
        if qualified < threshold {
            return Err(ExplainError::NoMajorityReason);
        }
        Ok(TrackerInit {
            closure_list,
            cnt,
            zero_cnt,
            qualified,
        })
    }

    /// One greedy elimination pass from a prepared start state; `order`
    /// must be a permutation of the literals of `t_x`.
    fn greedy(
        &mut self,
        class: bool,
        t_x: &Term,
        order: &[Literal],
        init: &TrackerInit,
        stats: &mut ExplainStats,
    ) -> Term {
        let n = self.forest.conditions.len();
        let threshold = self.forest.trees.len() / 2 + 1;
        let Explainer {
            engine,
            db_pos,
            db_neg,
            ..
        } = self;
        let db = if class {
            db_pos.as_ref().unwrap()
        } else {
            db_neg.as_ref().unwrap()
        };
        let mut closure_list = init.closure_list.clone();
        let mut cnt = init.cnt.clone();
        let mut zero_cnt = init.zero_cnt.clone();
        let mut qualified = init.qualified;

        let mut t = t_x.clone();
        let mut vanished: Vec<Literal> = Vec::new();
        let mut new_closure = LiteralSet::new(n);
        for &lit in order {
            stats.attempts += 1;
            let ok = engine.propagate_iter(t.iter().filter(|&l| l != lit));
            assert!(ok, "subsets of a feasible term stay consistent");
            stats.propagation_work += engine.work();
            // Literals that fell out of the closure.
            vanished.clear();
            new_closure.clear();
            let new_trail = engine.trail();
            for &l in new_trail {
                new_closure.insert(l);
            }
            for &l in &closure_list {
                if !new_closure.contains(l) {
                    vanished.push(l);
                }
            }
            for &gone in &vanished {
                for &ci in &db.occ[gone.code()] {
                    stats.counter_updates += 1;
                    cnt[ci as usize] -= 1;
                    if cnt[ci as usize] == 0 {
                        let tree = db.clause_tree[ci as usize] as usize;
                        zero_cnt[tree] += 1;
                        if zero_cnt[tree] == 1 {
                            qualified -= 1;
                        }
                    }
                }
            }
            if qualified >= threshold {
                // commit
                t = t.without(lit);
                closure_list = new_trail.to_vec();
            } else {
                // roll back
                for &gone in &vanished {
                    for &ci in &db.occ[gone.code()] {
                        stats.counter_updates += 1;
                        if cnt[ci as usize] == 0 {
                            let tree = db.clause_tree[ci as usize] as usize;
                            zero_cnt[tree] -= 1;
                            if zero_cnt[tree] == 0 {
                                qualified += 1;
                            }
                        }
                        cnt[ci as usize] += 1;
                    }
                }
            }
        }
        t
    }

    /// Majority threshold: ⌊m/2⌋ + 1 trees.
    pub fn majority_threshold(&self) -> usize {
        self.forest.trees.len() / 2 + 1
    }

    /// Number of trees whose class-CNF is UP-implied by `t` given the
    /// theory. A UP-conflict makes `t` a vacuous implicant of everything.
    pub fn qualifying_trees(&mut self, t: &Term, class: bool) -> usize {
        self.ensure_db(class);
        let n = self.forest.conditions.len();
        let Explainer {
            engine,
            db_pos,
            db_neg,
            ..
        } = self;
        let db = if class {
            db_pos.as_ref().unwrap()
        } else {
            db_neg.as_ref().unwrap()
        };
        if !engine.propagate(t) {
            return db.n_trees;
        }
        let mut closure = LiteralSet::new(n);
        for &l in engine.trail() {
            closure.insert(l);
        }
        let mut failed = vec![false; db.n_trees];
        for ci in 0..db.n_clauses() {
            let tree = db.clause_tree[ci] as usize;
            if !failed[tree] && !db.clause_lits(ci).iter().any(|&l| closure.contains(l)) {
                failed[tree] = true;
            }
        }
        failed.iter().filter(|&&f| !f).count()
    }

    /// UP-majoritary reason under a caller-chosen elimination order.
    pub fn up_majoritary_reason(
        &mut self,
        bits: &[bool],
        order: &[Literal],
    ) -> Result<Explanation, ExplainError> {
        let t_x = crate::dataset::instance_to_term(bits);
        self.check_feasible(&t_x)?;
        let mut sorted: Vec<Literal> = order.to_vec();
        sorted.sort_unstable();
        if sorted != t_x.literals() {
            return Err(ExplainError::InvalidEliminationOrder);
        }
        let class = self.forest.predict(bits);
        let mut stats = ExplainStats::default();
        let init = self.prepare(class, &t_x)?;
        let term = self.greedy(class, &t_x, order, &init, &mut stats);
        Ok(Explanation {
            term,
            kind: ExplanationKind::UpMajoritary,
            theory_tag: self.theory_tag,
            ordering_seed: None,
        })
    }

    /// Like [`Explainer::up_majoritary_reason`] but exposing work counters.
    pub fn up_majoritary_reason_with_stats(
        &mut self,
        bits: &[bool],
        order: &[Literal],
    ) -> Result<(Explanation, ExplainStats), ExplainError> {
        let t_x = crate::dataset::instance_to_term(bits);
        self.check_feasible(&t_x)?;
        let class = self.forest.predict(bits);
        let mut stats = ExplainStats::default();
        let init = self.prepare(class, &t_x)?;
        let term = self.greedy(class, &t_x, order, &init, &mut stats);
        Ok((
            Explanation {
                term,
                kind: ExplanationKind::UpMajoritary,
                theory_tag: self.theory_tag,
                ordering_seed: None,
            },
            stats,
        ))
    }

    /// Shortest reason over seeded random elimination orders; ties keep
    /// the first one found. Deterministic given the seed.
    pub fn best_reason(
        &mut self,
        bits: &[bool],
        num_orderings: usize,
        seed: u64,
    ) -> Result<Explanation, ExplainError> {
        let t_x = crate::dataset::instance_to_term(bits);
        self.check_feasible(&t_x)?;
        let class = self.forest.predict(bits);
        let init = self.prepare(class, &t_x)?;
        let mut seeder = ChaCha8Rng::seed_from_u64(seed);
        let mut best: Option<Explanation> = None;
        for _ in 0..num_orderings.max(1) {
            let ordering_seed = seeder.gen::<u64>();
            let mut order: Vec<Literal> = t_x.literals().to_vec();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(ordering_seed));
            let mut stats = ExplainStats::default();
            let term = self.greedy(class, &t_x, &order, &init, &mut stats);
            if best.as_ref().map_or(true, |b| term.len() < b.term.len()) {
                best = Some(Explanation {
                    term,
                    kind: ExplanationKind::UpMajoritary,
                    theory_tag: self.theory_tag,
                    ordering_seed: Some(ordering_seed),
                });
            }
        }
        Ok(best.expect("at least one ordering runs"))
    }
}

/// Union of the literals actually tested along the instance's traversed
/// path in every tree.
pub fn direct_reason(f: &RandomForest, bits: &[bool]) -> Explanation {
    let mut lits: Vec<Literal> = Vec::new();
    for tree in &f.trees {
        let mut i = tree.root();
        loop {
            match *tree.node(i) {
                crate::tree::Node::Leaf(_) => break,
                crate::tree::Node::Internal {
                    condition,
                    left,
                    right,
                } => {
                    lits.push(Literal::new(condition, bits[condition]));
                    i = if bits[condition] { right } else { left };
                }
            }
        }
    }
    Explanation {
        term: Term::new(lits),
        kind: ExplanationKind::Direct,
        theory_tag: TheoryTag::Base,
        ordering_seed: None,
    }
}

/// UP-majoritary reason for one elimination order (one-shot convenience
/// over [`Explainer`]).
pub fn up_majoritary_reason(
    f: &RandomForest,
    th: &DomainTheory,
    bits: &[bool],
    order: &[Literal],
) -> Result<Explanation, ExplainError> {
    Explainer::new(f, th).up_majoritary_reason(bits, order)
}

/// Shortest UP-majoritary reason over seeded random orderings.
pub fn best_reason(
    f: &RandomForest,
    th: &DomainTheory,
    bits: &[bool],
    num_orderings: usize,
    seed: u64,
) -> Result<Explanation, ExplainError> {
    Explainer::new(f, th).best_reason(bits, num_orderings, seed)
}

/// Elimination order reflecting user preferences: literals to drop come
/// first, literals to keep last, the rest shuffled in between. Literals
/// not occurring in `t_x` are ignored.
pub fn preference_order(
    t_x: &Term,
    prefer_keep: &[Literal],
    prefer_drop: &[Literal],
    seed: u64,
) -> Result<Vec<Literal>, ExplainError> {
    if prefer_keep.iter().any(|l| prefer_drop.contains(l)) {
        return Err(ExplainError::OverlappingPreferenceSets);
    }
    let mut drop: Vec<Literal> = t_x.iter().filter(|l| prefer_drop.contains(l)).collect();
    let mut keep: Vec<Literal> = t_x.iter().filter(|l| prefer_keep.contains(l)).collect();
    let mut middle: Vec<Literal> = t_x
        .iter()
        .filter(|l| !prefer_drop.contains(l) && !prefer_keep.contains(l))
        .collect();
    middle.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    drop.append(&mut middle);
    drop.append(&mut keep);
    Ok(drop)
}

/// Exhaustive abductive-explanation check: true iff every theory-
/// satisfying instance covered by `t` receives the same prediction as
/// `bits`. Only for models over at most 16 conditions.
pub fn oracle_is_abductive(
    t: &Term,
    f: &RandomForest,
    th: &DomainTheory,
    bits: &[bool],
) -> Result<bool, ExplainError> {
    let n = f.conditions.len();
    if n > 16 {
        return Err(ExplainError::TooLargeForOracle(n));
    }
    let theory = th.combined();
    let target = f.predict(bits);
    for m in 0u32..1 << n {
        let candidate: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
        if t.covers(&candidate)
            && theory.satisfied_by(&candidate)
            && f.predict(&candidate) != target
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Subset-minimal abductive explanation by greedy deletion against the
/// exhaustive oracle (test and diagnostic use; small models only).
pub fn oracle_sufficient_reason(
    f: &RandomForest,
    th: &DomainTheory,
    bits: &[bool],
) -> Result<Explanation, ExplainError> {
    let t_x = crate::dataset::instance_to_term(bits);
    if !sat(&th.combined(), &t_x) {
        return Err(ExplainError::InfeasibleInstance);
    }
    let mut t = t_x.clone();
    for lit in t_x.iter() {
        let candidate = t.without(lit);
        if oracle_is_abductive(&candidate, f, th, bits)? {
            t = candidate;
        }
    }
    Ok(Explanation {
        term: t,
        kind: ExplanationKind::SufficientOracle,
        theory_tag: if th.is_extended() {
            TheoryTag::Extended
        } else {
            TheoryTag::Base
        },
        ordering_seed: None,
    })
}
