//! Boolean substrate: conditions, literals, terms, clauses, CNF formulas,
//! unit propagation and a small complete DPLL satisfiability check.
//!
//! Conditions are indexed densely (`0..n`); a literal is a condition index
//! plus a polarity, packed into a single word so that the derived ordering
//! is the canonical one (condition index first, negative before positive).
//! Unit propagation is counter-based and computes the exact fixpoint; the
//! amount of work it performs is reported so callers can assert the linear
//! bound instead of relying on wall clocks.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Dense 0-based index of a condition within a condition set `X`.
pub type ConditionId = usize;

/// Attribute typing carried by a condition for schema checks and theory
/// construction. Boolean attributes behave like categoricals with the
/// domain `{0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numerical,
    Categorical,
    Boolean,
}

/// Test performed by a decision node: a threshold test on a numerical
/// attribute or an equality test on a categorical/Boolean one.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    GreaterThan(f64),
    Equals(String),
}

/// A Boolean condition over an attribute, e.g. `A>25` or `S=PP`.
#[derive(Debug, Clone)]
pub struct Condition {
    pub attribute: String,
    pub kind: AttributeKind,
    pub predicate: Predicate,
}

impl PartialEq for Condition {
    fn eq(&self, other: &Self) -> bool {
        self.attribute == other.attribute && self.key() == other.key()
    }
}
impl Eq for Condition {}

impl std::hash::Hash for Condition {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.attribute.hash(state);
        match self.key() {
            (d, bits, s) => {
                d.hash(state);
                bits.hash(state);
                s.hash(state);
            }
        }
    }
}

impl Condition {
    /// Total equality key; thresholds compare by bit pattern so conditions
    /// stay hashable (`NaN` thresholds are rejected at every import path).
    fn key(&self) -> (u8, u64, &str) {
        match &self.predicate {
            Predicate::GreaterThan(t) => (0, t.to_bits(), ""),
            Predicate::Equals(v) => (1, 0, v.as_str()),
        }
    }

    /// Render as the compact string used in CSV headers and rule files.
    pub fn render(&self) -> String {
        match &self.predicate {
            Predicate::GreaterThan(t) => format!("{}>{}", self.attribute, t),
            Predicate::Equals(v) => format!("{}={}", self.attribute, v),
        }
    }

    /// Parse the compact rendering back. The kind of an `=` condition is
    /// not recoverable from the string; it defaults to categorical, which
    /// is equivalent for every operation in this crate.
    pub fn parse(s: &str) -> Option<Condition> {
        if let Some(pos) = s.find('>') {
            let (name, rest) = s.split_at(pos);
            if let Ok(t) = rest[1..].parse::<f64>() {
                if !name.is_empty() && t.is_finite() {
                    return Some(Condition {
                        attribute: name.to_string(),
                        kind: AttributeKind::Numerical,
                        predicate: Predicate::GreaterThan(t),
                    });
                }
            }
        }
        if let Some(pos) = s.find('=') {
            let (name, rest) = s.split_at(pos);
            if !name.is_empty() {
                return Some(Condition {
                    attribute: name.to_string(),
                    kind: AttributeKind::Categorical,
                    predicate: Predicate::Equals(rest[1..].to_string()),
                });
            }
        }
        None
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A possibly negated condition. Packed as `condition * 2 + polarity` so
/// the derived order is (condition id, negative-then-positive) — the
/// canonical literal order used everywhere for determinism.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Literal(u32);

impl Literal {
    pub fn new(condition: ConditionId, positive: bool) -> Literal {
        Literal((condition as u32) << 1 | positive as u32)
    }

    pub fn positive(condition: ConditionId) -> Literal {
        Literal::new(condition, true)
    }

    pub fn negative(condition: ConditionId) -> Literal {
        Literal::new(condition, false)
    }

    pub fn condition(self) -> ConditionId {
        (self.0 >> 1) as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn complement(self) -> Literal {
        Literal(self.0 ^ 1)
    }

    /// Dense code in `0..2n`, used to index occurrence lists and bitsets.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn from_code(code: usize) -> Literal {
        Literal(code as u32)
    }

    /// True on an instance iff the instance bit of the condition matches
    /// the polarity.
    pub fn eval(self, bits: &[bool]) -> bool {
        bits[self.condition()] == self.is_positive()
    }
}

impl std::ops::Not for Literal {
    type Output = Literal;
    fn not(self) -> Literal {
        self.complement()
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_positive() {
            write!(f, "x{}", self.condition())
        } else {
            write!(f, "~x{}", self.condition())
        }
    }
}

/// A consistent conjunction of literals (no complementary pair), stored
/// sorted in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Term {
    literals: Vec<Literal>,
}

/// A non-valid disjunction of literals (no complementary pair), stored
/// sorted in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
}

fn normalize(mut lits: Vec<Literal>) -> Option<Vec<Literal>> {
    lits.sort_unstable();
    lits.dedup();
    for w in lits.windows(2) {
        if w[0].condition() == w[1].condition() {
            return None; // complementary pair
        }
    }
    Some(lits)
}

impl Term {
    pub fn empty() -> Term {
        Term::default()
    }

    /// Builds a term, returning `None` when the literals are inconsistent.
    pub fn try_new(literals: Vec<Literal>) -> Option<Term> {
        normalize(literals).map(|literals| Term { literals })
    }

    /// Builds a term from literals known to be consistent.
    ///
    /// Panics if they are not; use [`Term::try_new`] for untrusted input.
    pub fn new(literals: Vec<Literal>) -> Term {
        Term::try_new(literals).expect("inconsistent term")
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn contains(&self, lit: Literal) -> bool {
        self.literals.binary_search(&lit).is_ok()
    }

    /// Term with `lit` added; `None` if that would make it inconsistent.
    pub fn with(&self, lit: Literal) -> Option<Term> {
        if self.contains(lit.complement()) {
            return None;
        }
        let mut lits = self.literals.clone();
        if let Err(pos) = lits.binary_search(&lit) {
            lits.insert(pos, lit);
        }
        Some(Term { literals: lits })
    }

    /// Term with `lit` removed (no-op when absent).
    pub fn without(&self, lit: Literal) -> Term {
        let mut lits = self.literals.clone();
        if let Ok(pos) = lits.binary_search(&lit) {
            lits.remove(pos);
        }
        Term { literals: lits }
    }

    /// Conjunction of two terms; `None` when they clash.
    pub fn union(&self, other: &Term) -> Option<Term> {
        let mut lits = self.literals.clone();
        lits.extend_from_slice(&other.literals);
        Term::try_new(lits)
    }

    pub fn is_subset_of(&self, other: &Term) -> bool {
        self.literals.iter().all(|&l| other.contains(l))
    }

    pub fn iter(&self) -> impl Iterator<Item = Literal> + '_ {
        self.literals.iter().copied()
    }

    /// True iff every literal of the term holds on the instance.
    pub fn covers(&self, bits: &[bool]) -> bool {
        self.literals.iter().all(|l| l.eval(bits))
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.literals.cmp(&other.literals)
    }
}

impl Clause {
    /// Builds a clause, returning `None` when it would be valid (contains
    /// a complementary pair) — valid clauses are ⊤ and carry no content.
    pub fn try_new(literals: Vec<Literal>) -> Option<Clause> {
        normalize(literals).map(|literals| Clause { literals })
    }

    pub fn new(literals: Vec<Literal>) -> Clause {
        Clause::try_new(literals).expect("valid (tautological) clause")
    }

    /// The clause ¬t for a consistent term t.
    pub fn negation_of(term: &Term) -> Clause {
        Clause {
            literals: term.literals.iter().map(|l| l.complement()).collect(),
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// True iff some literal of the clause holds on the instance.
    pub fn satisfied_by(&self, bits: &[bool]) -> bool {
        self.literals.iter().any(|l| l.eval(bits))
    }
}

/// A conjunction of clauses; the empty formula is ⊤. Duplicate clauses are
/// dropped on insertion, first occurrence order is kept.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CnfFormula {
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn empty() -> CnfFormula {
        CnfFormula::default()
    }

    pub fn new(clauses: Vec<Clause>) -> CnfFormula {
        let mut f = CnfFormula::empty();
        for c in clauses {
            f.push(c);
        }
        f
    }

    pub fn push(&mut self, clause: Clause) {
        if !self.clauses.contains(&clause) {
            self.clauses.push(clause);
        }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Total literal count, the size measure for the propagation bound.
    pub fn literal_count(&self) -> usize {
        self.clauses.iter().map(|c| c.len()).sum()
    }

    /// Largest condition id mentioned, if any.
    pub fn max_condition(&self) -> Option<ConditionId> {
        self.clauses
            .iter()
            .flat_map(|c| c.literals.iter())
            .map(|l| l.condition())
            .max()
    }

    pub fn satisfied_by(&self, bits: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.satisfied_by(bits))
    }

    pub fn extend(&mut self, other: &CnfFormula) {
        for c in &other.clauses {
            self.push(c.clone());
        }
    }
}

/// Outcome of unit propagation.
///
/// When `conflict` is false, `derived` is the exact closure of the
/// assumptions under unit resolution with the theory (it contains the
/// assumptions themselves). When `conflict` is true, an empty clause was
/// derived and `derived` holds whatever had been established up to that
/// point. `work` counts clause-occurrence visits, for asserting the linear
/// time bound.
#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub derived: Vec<Literal>,
    pub conflict: bool,
    pub work: usize,
}

impl PropagationResult {
    /// The derived set as a term (only meaningful without conflict).
    pub fn derived_term(&self) -> Option<Term> {
        if self.conflict {
            None
        } else {
            Term::try_new(self.derived.clone())
        }
    }

    pub fn contains(&self, lit: Literal) -> bool {
        self.derived.binary_search(&lit).is_ok()
    }
}

const UNASSIGNED: i8 = -1;

/// Counter-based unit propagation engine over a fixed clause set.
///
/// One engine is built per theory and reused across many `propagate` /
/// `sat` calls; the scratch state is trail-based and fully reset between
/// calls, so a shared engine must not be used from several threads at once
/// (clone it instead — the clause database is cheap to share).
#[derive(Debug, Clone)]
pub struct Propagator {
    n_conditions: usize,
    // flattened clause database
    lits: Vec<Literal>,
    starts: Vec<u32>,
    // literal code -> indices of clauses containing that literal
    occ: Vec<Vec<u32>>,
    // literals of the theory's unit clauses, seeded on every call
    units: Vec<Literal>,
    has_empty_clause: bool,
    // scratch
    assign: Vec<i8>,
    true_count: Vec<u32>,
    non_false: Vec<u32>,
    trail: Vec<Literal>,
    work: usize,
}

impl Propagator {
    /// Builds an engine for `theory` able to handle condition ids below
    /// `n_conditions` in the assumptions.
    pub fn new(theory: &CnfFormula, n_conditions: usize) -> Propagator {
        let n = n_conditions.max(theory.max_condition().map_or(0, |c| c + 1));
        let n_clauses = theory.len();
        let mut lits = Vec::with_capacity(theory.literal_count());
        let mut starts = Vec::with_capacity(n_clauses + 1);
        let mut occ = vec![Vec::new(); 2 * n];
        let mut non_false = Vec::with_capacity(n_clauses);
        let mut units = Vec::new();
        let mut has_empty_clause = false;
        starts.push(0);
        for (ci, clause) in theory.clauses().iter().enumerate() {
            if clause.is_empty() {
                has_empty_clause = true;
            }
            if clause.len() == 1 {
                units.push(clause.literals()[0]);
            }
            for &l in clause.literals() {
                occ[l.code()].push(ci as u32);
                lits.push(l);
            }
            starts.push(lits.len() as u32);
            non_false.push(clause.len() as u32);
        }
        Propagator {
            n_conditions: n,
            lits,
            starts,
            occ,
            units,
            has_empty_clause,
            assign: vec![UNASSIGNED; n],
            true_count: vec![0; n_clauses],
            non_false,
            trail: Vec::new(),
            work: 0,
        }
    }

    pub fn n_conditions(&self) -> usize {
        self.n_conditions
    }

    fn clause_lits(&self, ci: u32) -> &[Literal] {
        &self.lits[self.starts[ci as usize] as usize..self.starts[ci as usize + 1] as usize]
    }

    /// Assigns `lit` true and updates counters; returns false on conflict.
    /// Counter updates always run to completion so that unwinding stays an
    /// exact mirror even when a conflict is hit.
    fn assign_true(&mut self, lit: Literal) -> bool {
        debug_assert_eq!(self.assign[lit.condition()], UNASSIGNED);
        self.assign[lit.condition()] = lit.is_positive() as i8;
        self.trail.push(lit);
        for i in 0..self.occ[lit.code()].len() {
            let ci = self.occ[lit.code()][i];
            self.true_count[ci as usize] += 1;
            self.work += 1;
        }
        let falsified = lit.complement();
        let mut conflict = false;
        for i in 0..self.occ[falsified.code()].len() {
            let ci = self.occ[falsified.code()][i];
            self.work += 1;
            self.non_false[ci as usize] -= 1;
            if self.true_count[ci as usize] == 0 && self.non_false[ci as usize] == 0 {
                conflict = true;
            }
        }
        !conflict
    }

    fn value(&self, lit: Literal) -> Option<bool> {
        match self.assign[lit.condition()] {
            UNASSIGNED => None,
            v => Some((v == 1) == lit.is_positive()),
        }
    }

    /// Runs unit propagation to fixpoint from the current trail position.
    /// Returns false on conflict. `queue_from` indexes the trail.
    fn propagate_from(&mut self, mut queue_from: usize) -> bool {
        while queue_from < self.trail.len() {
            let lit = self.trail[queue_from];
            queue_from += 1;
            // Clauses weakened by ~lit may have become unit.
            let falsified = lit.complement();
            for i in 0..self.occ[falsified.code()].len() {
                let ci = self.occ[falsified.code()][i];
                self.work += 1;
                if self.true_count[ci as usize] == 0 && self.non_false[ci as usize] == 1 {
                    let unit = self
                        .clause_lits(ci)
                        .iter()
                        .copied()
                        .find(|&l| self.value(l).is_none());
                    self.work += self.clause_lits(ci).len();
                    if let Some(unit) = unit {
                        if !self.assign_true(unit) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Undoes every assignment at trail position `mark` and beyond.
    fn unwind_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let lit = self.trail.pop().unwrap();
            self.assign[lit.condition()] = UNASSIGNED;
            for i in 0..self.occ[lit.code()].len() {
                let ci = self.occ[lit.code()][i];
                self.true_count[ci as usize] -= 1;
            }
            let falsified = lit.complement();
            for i in 0..self.occ[falsified.code()].len() {
                let ci = self.occ[falsified.code()][i];
                self.non_false[ci as usize] += 1;
            }
        }
    }

    /// Unit propagation from the assumptions. The returned slice (via
    /// [`Propagator::trail`]) is valid until the next call.
    pub fn propagate(&mut self, assumptions: &Term) -> bool {
        self.propagate_iter(assumptions.iter())
    }

    /// Like [`Propagator::propagate`] but over any literal source; the
    /// assumptions must be mutually consistent.
    pub fn propagate_iter(&mut self, assumptions: impl IntoIterator<Item = Literal>) -> bool {
        self.unwind_to(0);
        self.work = 0;
        if self.has_empty_clause {
            return false;
        }
        // Seed units from the theory itself (clauses of length one).
        for i in 0..self.units.len() {
            let unit = self.units[i];
            self.work += 1;
            match self.value(unit) {
                None => {
                    if !self.assign_true(unit) {
                        return false;
                    }
                }
                Some(false) => return false,
                Some(true) => {}
            }
        }
        for lit in assumptions {
            match self.value(lit) {
                None => {
                    if !self.assign_true(lit) {
                        return false;
                    }
                }
                Some(false) => return false,
                Some(true) => {}
            }
        }
        self.propagate_from(0)
    }

    /// Trail of assigned literals after [`Propagator::propagate`]:
    /// assumptions, theory units and everything derived from them.
    pub fn trail(&self) -> &[Literal] {
        &self.trail
    }

    pub fn work(&self) -> usize {
        self.work
    }

    /// Complete satisfiability of theory ∧ assumptions by DPLL: unit
    /// propagation plus branching on variables of unsatisfied clauses.
    pub fn sat(&mut self, assumptions: &Term) -> bool {
        if !self.propagate(assumptions) {
            self.unwind_to(0);
            return false;
        }
        let verdict = self.dpll();
        self.unwind_to(0);
        verdict
    }

    fn dpll(&mut self) -> bool {
        // Find an unsatisfied clause; all satisfied means SAT (unassigned
        // variables are unconstrained).
        let branch_lit = (0..self.non_false.len()).find_map(|ci| {
            if self.true_count[ci] == 0 {
                self.clause_lits(ci as u32)
                    .iter()
                    .copied()
                    .find(|&l| self.value(l).is_none())
            } else {
                None
            }
        });
        let Some(lit) = branch_lit else {
            return true;
        };
        for cand in [lit, lit.complement()] {
            let mark = self.trail.len();
            if self.assign_true(cand) && self.propagate_from(mark) && self.dpll() {
                return true;
            }
            self.unwind_to(mark);
        }
        false
    }
}

/// Unit propagation closure of `assumptions ∧ theory`.
///
/// `derived` is the exact fixpoint of unit resolution, sorted canonically;
/// `conflict` is true iff an empty clause is derivable.
pub fn unit_propagate(theory: &CnfFormula, assumptions: &Term) -> PropagationResult {
    let n = assumptions
        .literals()
        .iter()
        .map(|l| l.condition() + 1)
        .max()
        .unwrap_or(0);
    let mut engine = Propagator::new(theory, n);
    let ok = engine.propagate(assumptions);
    let mut derived: Vec<Literal> = engine.trail().to_vec();
    derived.sort_unstable();
    PropagationResult {
        derived,
        conflict: !ok,
        work: engine.work(),
    }
}

/// UP-implicant test: every clause of `phi` must contain a literal that is
/// unit-propagation-derivable from `t ∧ theory`.
///
/// When propagation conflicts (`t ∧ theory` is UP-inconsistent) the test is
/// vacuously true; callers that must avoid vacuous implicants guard with
/// [`sat`] first.
pub fn is_up_implicant(t: &Term, phi: &CnfFormula, theory: &CnfFormula) -> bool {
    let res = unit_propagate(theory, t);
    if res.conflict {
        return true;
    }
    phi.clauses()
        .iter()
        .all(|c| c.literals().iter().any(|&l| res.contains(l)))
}

/// Complete satisfiability of `assumptions ∧ theory` over the mentioned
/// conditions (DPLL: unit propagation plus branching).
pub fn sat(theory: &CnfFormula, assumptions: &Term) -> bool {
    let n = assumptions
        .literals()
        .iter()
        .map(|l| l.condition() + 1)
        .max()
        .unwrap_or(0);
    Propagator::new(theory, n).sat(assumptions)
}

/// Bitset over literal codes, used by hot loops to test closure membership.
#[derive(Debug, Clone)]
pub struct LiteralSet {
    words: Vec<u64>,
}

impl LiteralSet {
    pub fn new(n_conditions: usize) -> LiteralSet {
        LiteralSet {
            words: vec![0; (2 * n_conditions + 63) / 64],
        }
    }

    pub fn insert(&mut self, lit: Literal) {
        let c = lit.code();
        self.words[c / 64] |= 1 << (c % 64);
    }

    pub fn remove(&mut self, lit: Literal) {
        let c = lit.code();
        self.words[c / 64] &= !(1 << (c % 64));
    }

    pub fn contains(&self, lit: Literal) -> bool {
        let c = lit.code();
        self.words[c / 64] >> (c % 64) & 1 == 1
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }
}

// ---------------------------------------------------------------------------
// DIMACS-like text interchange
// ---------------------------------------------------------------------------

/// Serializes a CNF in DIMACS-like text. Variable `i+1` stands for the
/// condition with id `i`; when `conditions` is given, `c cond` comment
/// lines record the mapping.
pub fn to_dimacs(formula: &CnfFormula, conditions: &[Condition]) -> String {
    let n_vars = conditions
        .len()
        .max(formula.max_condition().map_or(0, |c| c + 1));
    let mut out = String::new();
    for (i, cond) in conditions.iter().enumerate() {
        out.push_str(&format!("c cond {} {}\n", i + 1, cond.render()));
    }
    out.push_str(&format!("p cnf {} {}\n", n_vars, formula.len()));
    for clause in formula.clauses() {
        for &lit in clause.literals() {
            let v = lit.condition() as i64 + 1;
            out.push_str(&format!("{} ", if lit.is_positive() { v } else { -v }));
        }
        out.push_str("0\n");
    }
    out
}

/// Errors from parsing DIMACS-like CNF text.
#[derive(Debug, thiserror::Error)]
pub enum DimacsError {
    #[error("line {line}: malformed literal {token:?}")]
    MalformedLiteral { line: usize, token: String },
    #[error("line {line}: literal {literal} outside declared variable range 1..={n_vars}")]
    LiteralOutOfRange {
        line: usize,
        literal: i64,
        n_vars: usize,
    },
    #[error("line {line}: clause is a tautology")]
    TautologicalClause { line: usize },
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("line {line}: malformed header")]
    MalformedHeader { line: usize },
}

/// Parses DIMACS-like CNF text produced by [`to_dimacs`]. Comment lines are
/// skipped. Returns the formula and the declared variable count.
pub fn from_dimacs(text: &str) -> Result<(CnfFormula, usize), DimacsError> {
    let mut n_vars = None;
    let mut formula = CnfFormula::empty();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('p') {
            let mut parts = trimmed.split_whitespace();
            let (Some("p"), Some("cnf"), Some(v), Some(_c)) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(DimacsError::MalformedHeader { line });
            };
            n_vars = Some(
                v.parse::<usize>()
                    .map_err(|_| DimacsError::MalformedHeader { line })?,
            );
            continue;
        }
        let Some(n) = n_vars else {
            return Err(DimacsError::MissingHeader);
        };
        let mut lits = Vec::new();
        for token in trimmed.split_whitespace() {
            let v: i64 = token.parse().map_err(|_| DimacsError::MalformedLiteral {
                line,
                token: token.to_string(),
            })?;
            if v == 0 {
                continue;
            }
            let var = v.unsigned_abs() as usize;
            if var == 0 || var > n {
                return Err(DimacsError::LiteralOutOfRange {
                    line,
                    literal: v,
                    n_vars: n,
                });
            }
            lits.push(Literal::new(var - 1, v > 0));
        }
        let clause =
            Clause::try_new(lits).ok_or(DimacsError::TautologicalClause { line })?;
        formula.push(clause);
    }
    match n_vars {
        Some(n) => Ok((formula, n)),
        None => Err(DimacsError::MissingHeader),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(c: usize, pos: bool) -> Literal {
        Literal::new(c, pos)
    }

    /// Exhaustive model check: does `theory ∧ assумptions` have a model
    /// over conditions `0..n`? Independent of the DPLL path.
    fn sat_by_enumeration(theory: &CnfFormula, assumptions: &Term, n: usize) -> bool {
        assert!(n <= 16);
        (0u32..1 << n).any(|m| {
            let bits: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
            theory.satisfied_by(&bits) && assumptions.covers(&bits)
        })
    }

    /// Semantic entailment by enumeration: theory ∧ assumptions ⊨ lit.
    fn entails_by_enumeration(theory: &CnfFormula, assumptions: &Term, l: Literal, n: usize) -> bool {
        (0u32..1 << n).all(|m| {
            let bits: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
            !(theory.satisfied_by(&bits) && assumptions.covers(&bits)) || l.eval(&bits)
        })
    }

    #[test]
    fn literal_complement_involution() {
        let l = lit(5, true);
        assert_eq!(l.complement().complement(), l);
        assert_eq!((!l).condition(), 5);
        assert!(!(!l).is_positive());
    }

    #[test]
    fn literal_order_is_condition_then_polarity() {
        let mut v = vec![lit(1, true), lit(0, true), lit(1, false), lit(0, false)];
        v.sort();
        assert_eq!(v, vec![lit(0, false), lit(0, true), lit(1, false), lit(1, true)]);
    }

    #[test]
    fn term_rejects_complementary_pair() {
        assert!(Term::try_new(vec![lit(0, true), lit(0, false)]).is_none());
        assert!(Clause::try_new(vec![lit(3, true), lit(3, false)]).is_none());
    }

    #[test]
    fn cnf_dedups_clauses() {
        let c = Clause::new(vec![lit(0, true), lit(1, false)]);
        let f = CnfFormula::new(vec![c.clone(), c.clone()]);
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn propagate_implication_chain() {
        // x2 => x1 as clause (~x2 v x1); assuming x2 derives x1.
        let th = CnfFormula::new(vec![Clause::new(vec![lit(1, false), lit(0, true)])]);
        let t = Term::new(vec![lit(1, true)]);
        let res = unit_propagate(&th, &t);
        assert!(!res.conflict);
        assert!(res.contains(lit(1, true)));
        assert!(res.contains(lit(0, true)));
    }

    #[test]
    fn propagate_empty_theory_is_identity() {
        let t = Term::new(vec![lit(0, true)]);
        let res = unit_propagate(&CnfFormula::empty(), &t);
        assert!(!res.conflict);
        assert_eq!(res.derived, vec![lit(0, true)]);
    }

    #[test]
    fn propagation_is_not_deduction_complete() {
        // (a v ~b) ∧ (~a v ~b) entails ~b, but UP derives nothing from ⊤.
        let th = CnfFormula::new(vec![
            Clause::new(vec![lit(0, true), lit(1, false)]),
            Clause::new(vec![lit(0, false), lit(1, false)]),
        ]);
        let res = unit_propagate(&th, &Term::empty());
        assert!(!res.conflict);
        assert!(res.derived.is_empty());
        assert!(entails_by_enumeration(&th, &Term::empty(), lit(1, false), 2));
    }

    #[test]
    fn contradictory_units_conflict() {
        let th = CnfFormula::new(vec![
            Clause::new(vec![lit(0, true)]),
            Clause::new(vec![lit(0, false)]),
        ]);
        let res = unit_propagate(&th, &Term::empty());
        assert!(res.conflict);
    }

    #[test]
    fn up_implicant_examples() {
        // t = {x0}, phi = {(x1)}, theory = {(~x0 v x1)} -> true
        let phi = CnfFormula::new(vec![Clause::new(vec![lit(1, true)])]);
        let th = CnfFormula::new(vec![Clause::new(vec![lit(0, false), lit(1, true)])]);
        let t = Term::new(vec![lit(0, true)]);
        assert!(is_up_implicant(&t, &phi, &th));
        assert!(!is_up_implicant(&t, &phi, &CnfFormula::empty()));
        // empty phi is vacuously implied
        assert!(is_up_implicant(&Term::empty(), &CnfFormula::empty(), &CnfFormula::empty()));
    }

    #[test]
    fn up_implicant_vacuous_on_conflict() {
        let th = CnfFormula::new(vec![Clause::new(vec![lit(0, false)])]);
        let phi = CnfFormula::new(vec![Clause::new(vec![lit(1, true)])]);
        let t = Term::new(vec![lit(0, true)]);
        assert!(is_up_implicant(&t, &phi, &th));
    }

    #[test]
    fn sat_catches_threshold_chain_violations() {
        // x3 => x2 (I>50 implies I>30) makes {x0, ~x1, ~x2, x3, x6} unsat.
        let th = CnfFormula::new(vec![
            Clause::new(vec![lit(0, true), lit(1, false)]),
            Clause::new(vec![lit(2, true), lit(3, false)]),
            Clause::new(vec![lit(4, false), lit(5, false)]),
            Clause::new(vec![lit(4, false), lit(6, false)]),
            Clause::new(vec![lit(5, false), lit(6, false)]),
        ]);
        let bad = Term::new(vec![
            lit(0, true),
            lit(1, false),
            lit(2, false),
            lit(3, true),
            lit(6, true),
        ]);
        assert!(!sat(&th, &bad));
        assert!(sat(&CnfFormula::empty(), &Term::new(vec![lit(0, true)])));
    }

    #[test]
    fn sat_agrees_with_enumeration_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.gen_range(1..=6);
            let n_clauses = rng.gen_range(0..=10);
            let mut clauses = Vec::new();
            for _ in 0..n_clauses {
                let len = rng.gen_range(1..=3);
                let lits: Vec<Literal> = (0..len)
                    .map(|_| lit(rng.gen_range(0..n), rng.gen_bool(0.5)))
                    .collect();
                if let Some(c) = Clause::try_new(lits) {
                    clauses.push(c);
                }
            }
            let th = CnfFormula::new(clauses);
            let mut assumed: Vec<Literal> = Vec::new();
            for c in 0..n {
                if rng.gen_bool(0.3) {
                    assumed.push(lit(c, rng.gen_bool(0.5)));
                }
            }
            let Some(t) = Term::try_new(assumed) else {
                continue;
            };
            assert_eq!(
                sat(&th, &t),
                sat_by_enumeration(&th, &t, n),
                "theory {th:?} assumptions {t:?}"
            );
        }
    }

    #[test]
    fn up_soundness_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let n = rng.gen_range(1..=6);
            let n_clauses = rng.gen_range(0..=8);
            let mut clauses = Vec::new();
            for _ in 0..n_clauses {
                let len = rng.gen_range(1..=3);
                if let Some(c) = Clause::try_new(
                    (0..len)
                        .map(|_| lit(rng.gen_range(0..n), rng.gen_bool(0.5)))
                        .collect(),
                ) {
                    clauses.push(c);
                }
            }
            let th = CnfFormula::new(clauses);
            let mut assumed: Vec<Literal> = Vec::new();
            for c in 0..n {
                if rng.gen_bool(0.4) {
                    assumed.push(lit(c, rng.gen_bool(0.5)));
                }
            }
            let Some(t) = Term::try_new(assumed) else {
                continue;
            };
            let res = unit_propagate(&th, &t);
            if res.conflict {
                assert!(!sat_by_enumeration(&th, &t, n));
                continue;
            }
            for &l in &res.derived {
                assert!(
                    entails_by_enumeration(&th, &t, l, n),
                    "unsound UP derivation {l:?} from {th:?} ∧ {t:?}"
                );
            }
        }
    }

    #[test]
    fn up_monotone_in_theory() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.gen_range(1..=6);
            let mut clauses = Vec::new();
            for _ in 0..6 {
                if let Some(c) = Clause::try_new(
                    (0..rng.gen_range(1..=3))
                        .map(|_| lit(rng.gen_range(0..n), rng.gen_bool(0.5)))
                        .collect(),
                ) {
                    clauses.push(c);
                }
            }
            let small = CnfFormula::new(clauses[..clauses.len() / 2].to_vec());
            let big = CnfFormula::new(clauses);
            let mut assumed: Vec<Literal> = Vec::new();
            for c in 0..n {
                if rng.gen_bool(0.4) {
                    assumed.push(lit(c, rng.gen_bool(0.5)));
                }
            }
            let Some(t) = Term::try_new(assumed) else {
                continue;
            };
            let r_small = unit_propagate(&small, &t);
            let r_big = unit_propagate(&big, &t);
            if r_small.conflict || r_big.conflict {
                continue;
            }
            for &l in &r_small.derived {
                assert!(r_big.contains(l), "UP not monotone in theory");
            }
        }
    }

    #[test]
    fn engine_state_survives_conflicting_calls() {
        // A conflicting sat/propagate call must leave the engine exactly as
        // it found it; a later closure has to match a fresh engine's.
        let th = CnfFormula::new(vec![
            Clause::new(vec![lit(0, false), lit(1, true)]),
            Clause::new(vec![lit(1, false), lit(2, true)]),
            Clause::new(vec![lit(0, false), lit(3, false)]),
        ]);
        let mut engine = Propagator::new(&th, 4);
        // x0 ∧ x3 conflicts via (~x0 v ~x3)
        let clash = Term::new(vec![lit(0, true), lit(3, true)]);
        assert!(!engine.sat(&clash));
        assert!(!engine.propagate(&clash));
        // now the chain x0 -> x1 -> x2 must still fire
        let t = Term::new(vec![lit(0, true)]);
        assert!(engine.propagate(&t));
        let mut derived: Vec<Literal> = engine.trail().to_vec();
        derived.sort_unstable();
        let fresh = unit_propagate(&th, &t);
        assert_eq!(derived, fresh.derived);
        assert!(derived.contains(&lit(2, true)));
    }

    #[test]
    fn propagation_work_is_linear_in_theory_size() {
        // Long implication chain: x0 => x1 => ... => x(k-1).
        for k in [10usize, 100, 1000] {
            let clauses: Vec<Clause> = (0..k - 1)
                .map(|i| Clause::new(vec![lit(i, false), lit(i + 1, true)]))
                .collect();
            let th = CnfFormula::new(clauses);
            let t = Term::new(vec![lit(0, true)]);
            let res = unit_propagate(&th, &t);
            assert!(!res.conflict);
            assert_eq!(res.derived.len(), k);
            let total_lits = th.literal_count() + t.len();
            assert!(
                res.work <= 4 * total_lits + 8,
                "propagation work {} superlinear in size {}",
                res.work,
                total_lits
            );
        }
    }

    #[test]
    fn dimacs_round_trip() {
        let th = CnfFormula::new(vec![
            Clause::new(vec![lit(1, false), lit(0, true)]),
            Clause::new(vec![lit(4, false), lit(6, false)]),
        ]);
        let conds: Vec<Condition> = vec![];
        let text = to_dimacs(&th, &conds);
        let (parsed, n) = from_dimacs(&text).unwrap();
        assert_eq!(parsed, th);
        assert_eq!(n, 7);
    }

    #[test]
    fn dimacs_rejects_garbage() {
        assert!(from_dimacs("p cnf 2 1\n3 0\n").is_err());
        assert!(from_dimacs("1 0\n").is_err());
        assert!(from_dimacs("p cnf x y\n").is_err());
        assert!(from_dimacs("p cnf 2 1\n1 -1 0\n").is_err());
    }

    #[test]
    fn condition_render_parse_round_trip() {
        let c1 = Condition {
            attribute: "A".into(),
            kind: AttributeKind::Numerical,
            predicate: Predicate::GreaterThan(25.5),
        };
        let c2 = Condition {
            attribute: "S".into(),
            kind: AttributeKind::Categorical,
            predicate: Predicate::Equals("PP".into()),
        };
        assert_eq!(c1.render(), "A>25.5");
        assert_eq!(c2.render(), "S=PP");
        assert_eq!(Condition::parse(&c1.render()).unwrap(), c1);
        assert_eq!(Condition::parse(&c2.render()).unwrap(), c2);
        assert!(Condition::parse(">3").is_none());
        assert!(Condition::parse("A").is_none());
    }
}
