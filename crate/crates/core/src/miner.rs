//! Mining of 100%-confidence association rules (with negations) over a
//! binarized dataset.
//!
//! Candidate bodies are 1–2 condition literals; heads are single literals
//! over the conditions or the class variable. Bodies are processed in
//! strictly decreasing support order (a rule with confidence 1 has the
//! support of its body), ties in canonical rule order; a generated rule is
//! kept iff it does not conflict with any rule kept before it, which makes
//! the kept set conflict-free by construction.
//!
//! Support counting works on row bitmaps per literal; the heads of a body
//! with confidence 1 are read off the intersection of the row-literal
//! bitsets of the rows covered by the body.

use crate::dataset::BinarizedDataset;
use crate::logic::{Literal, Propagator, Term};
use crate::rules::{AssociationRule, RuleHead};
use crate::theory::DomainTheory;
use rayon::prelude::*;
use std::collections::HashMap;
use std::time::{Duration, Instant};

#[derive(Debug, thiserror::Error)]
pub enum MinerError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("only confidence 1.0 is supported, requested {0}")]
    UnsupportedConfidence(f64),
}

/// Miner limits, matching the evaluation protocol defaults.
#[derive(Debug, Clone)]
pub struct MinerConfig {
    /// Total literal count of a rule (body plus head); 3 means bodies of
    /// one or two literals.
    pub max_rule_size: usize,
    /// Cap on kept classification rules.
    pub max_cars: usize,
    /// Cap on kept non-classification rules (typical sweeps use 100 to
    /// 100 000).
    pub max_other_rules: usize,
    pub timeout: Duration,
    /// Minimum support fraction; support must be non-null regardless.
    pub min_support: f64,
    /// Must be 1.0: only rules never contradicted by the data are mined.
    pub min_confidence: f64,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            max_rule_size: 3,
            max_cars: 100,
            max_other_rules: 1000,
            timeout: Duration::from_secs(3600),
            min_support: 0.0,
            min_confidence: 1.0,
        }
    }
}

/// Mining outcome: classification rules and other rules, each in the kept
/// (decreasing support) order.
#[derive(Debug, Clone, Default)]
pub struct MinedRules {
    pub cars: Vec<AssociationRule>,
    pub others: Vec<AssociationRule>,
    /// True when the time budget truncated the enumeration; the output is
    /// then a clean prefix of the full one.
    pub hit_timeout: bool,
}

/// Fixed-width row bitmap.
#[derive(Clone)]
struct RowSet {
    words: Vec<u64>,
}

impl RowSet {
    fn empty(n_rows: usize) -> RowSet {
        RowSet {
            words: vec![0; (n_rows + 63) / 64],
        }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn count_and(&self, other: &RowSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn iter_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }
}

/// Bitmap over literal codes (2n condition codes plus the two class codes).
#[derive(Clone)]
struct CodeSet {
    words: Vec<u64>,
}

impl CodeSet {
    fn full(n_codes: usize) -> CodeSet {
        let mut words = vec![u64::MAX; (n_codes + 63) / 64];
        let spare = words.len() * 64 - n_codes;
        if spare > 0 {
            let last = words.len() - 1;
            words[last] >>= spare;
        }
        CodeSet { words }
    }

    fn empty(n_codes: usize) -> CodeSet {
        CodeSet {
            words: vec![0; (n_codes + 63) / 64],
        }
    }

    fn set(&mut self, c: usize) {
        self.words[c / 64] |= 1 << (c % 64);
    }

    fn and_assign(&mut self, other: &CodeSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    fn intersects_outside(&self, mask: &CodeSet) -> bool {
        self.words.iter().zip(&mask.words).any(|(a, m)| a & !m != 0)
    }

    fn iter_codes(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }
}

struct Candidate {
    body: Vec<Literal>,
    count: usize,
}

/// Mines rules from the training data under the structural theory.
///
/// Emitted rules have confidence exactly 1.0 and positive support; each
/// kept rule is conflict-free against everything kept before it. The split
/// into classification rules and others preserves the global order.
pub fn mine(
    d: &BinarizedDataset,
    th: &DomainTheory,
    cfg: &MinerConfig,
) -> Result<MinedRules, MinerError> {
    if d.is_empty() {
        return Err(MinerError::EmptyDataset);
    }
    if cfg.min_confidence != 1.0 {
        return Err(MinerError::UnsupportedConfidence(cfg.min_confidence));
    }
    let deadline = Instant::now() + cfg.timeout;
    let n = d.n_conditions();
    let n_rows = d.len();
    let n_codes = 2 * n + 2; // literal codes, then ȳ, then y
    let max_body = cfg.max_rule_size.saturating_sub(1).min(2);

    // Row bitmap per literal code and per class literal.
    let mut lit_rows: Vec<RowSet> = vec![RowSet::empty(n_rows); n_codes];
    for (ri, (bits, &label)) in d.rows.iter().zip(&d.labels).enumerate() {
        for (ci, &b) in bits.iter().enumerate() {
            lit_rows[Literal::new(ci, b).code()].set(ri);
        }
        lit_rows[2 * n + label as usize].set(ri);
    }
    // Literal-code bitset per row, for reading heads off intersections.
    let mut row_lits: Vec<CodeSet> = vec![CodeSet::empty(n_codes); n_rows];
    for (ri, (bits, &label)) in d.rows.iter().zip(&d.labels).enumerate() {
        for (ci, &b) in bits.iter().enumerate() {
            row_lits[ri].set(Literal::new(ci, b).code());
        }
        row_lits[ri].set(2 * n + label as usize);
    }

    let lit_count: Vec<usize> = (0..2 * n).map(|c| lit_rows[c].count()).collect();
    let min_count = 1.max((cfg.min_support * n_rows as f64).ceil() as usize);

    // Candidate bodies with their support counts.
    let mut candidates: Vec<Candidate> = Vec::new();
    if max_body >= 1 {
        for c in 0..2 * n {
            if lit_count[c] >= min_count {
                candidates.push(Candidate {
                    body: vec![Literal::from_code(c)],
                    count: lit_count[c],
                });
            }
        }
    }
    if max_body >= 2 {
        let pairs: Vec<Candidate> = (0..2 * n)
            .into_par_iter()
            .flat_map_iter(|c1| {
                let lit_rows = &lit_rows;
                let lit_count = &lit_count;
                (c1 + 1..2 * n).filter_map(move |c2| {
                    // Same condition twice is either redundant or inconsistent.
                    if c1 / 2 == c2 / 2 || lit_count[c1] == 0 || lit_count[c2] == 0 {
                        return None;
                    }
                    let count = lit_rows[c1].count_and(&lit_rows[c2]);
                    if count >= min_count {
                        Some(Candidate {
                            body: vec![Literal::from_code(c1), Literal::from_code(c2)],
                            count,
                        })
                    } else {
                        None
                    }
                })
            })
            .collect();
        candidates.extend(pairs);
    }
    candidates.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.body.cmp(&b.body)));

    let mut engine = Propagator::new(th.structural(), n);
    let mut kept = MinedRules::default();
    // Kept-rule bodies indexed by head, for conflict lookups.
    let mut by_head: HashMap<RuleHead, Vec<Term>> = HashMap::new();

    'bodies: for cand in &candidates {
        if kept.cars.len() >= cfg.max_cars && kept.others.len() >= cfg.max_other_rules {
            break;
        }
        if Instant::now() > deadline {
            kept.hit_timeout = true;
            break;
        }
        let body = Term::new(cand.body.clone());
        // Non-vacuous: the body must be satisfiable with the theory. Rows
        // of a well-formed binarized dataset always satisfy the structural
        // theory, so positive support implies this; checked for imports.
        if !engine.sat(&body) {
            continue;
        }
        // UP closure of body ∧ Th, for suppressing derivable heads.
        engine.propagate(&body);
        let mut derived = CodeSet::empty(n_codes);
        for &l in engine.trail() {
            derived.set(l.code());
        }
        // Intersect the literal sets of all covered rows: every code left
        // is a head with confidence 1 on this body.
        let mut covered = lit_rows[cand.body[0].code()].clone();
        if cand.body.len() == 2 {
            for (w, o) in covered
                .words
                .iter_mut()
                .zip(&lit_rows[cand.body[1].code()].words)
            {
                *w &= o;
            }
        }
        let mut body_mask = CodeSet::empty(n_codes);
        for &l in &cand.body {
            body_mask.set(l.code());
            body_mask.set(l.complement().code());
        }
        let mut acc = CodeSet::full(n_codes);
        for ri in covered.iter_rows() {
            acc.and_assign(&row_lits[ri]);
            if !acc.intersects_outside(&body_mask) {
                continue 'bodies;
            }
        }
        let support = cand.count as f64 / n_rows as f64;
        for code in acc.iter_codes() {
            let is_class = code >= 2 * n;
            let head = if is_class {
                RuleHead::Class(code == 2 * n + 1)
            } else {
                let lit = Literal::from_code(code);
                if cand.body.iter().any(|b| b.condition() == lit.condition()) {
                    continue;
                }
                // Heads already derivable from body ∧ Th add nothing to the
                // extended theory.
                if derived.words[code / 64] >> (code % 64) & 1 == 1 {
                    continue;
                }
                RuleHead::Condition(lit)
            };
            if is_class && kept.cars.len() >= cfg.max_cars {
                continue;
            }
            if !is_class && kept.others.len() >= cfg.max_other_rules {
                continue;
            }
            // Conflict against everything kept so far: complementary head
            // and jointly Th-satisfiable bodies.
            let complement = match head {
                RuleHead::Class(c) => RuleHead::Class(!c),
                RuleHead::Condition(l) => RuleHead::Condition(l.complement()),
            };
            if let Some(bodies) = by_head.get(&complement) {
                let clash = bodies.iter().any(|other| match body.union(other) {
                    None => false,
                    Some(joint) => engine.sat(&joint),
                });
                if clash {
                    continue;
                }
            }
            let rule = AssociationRule::new(body.clone(), head, support, 1.0)
                .expect("miner builds valid rules");
            by_head.entry(head).or_default().push(body.clone());
            if is_class {
                kept.cars.push(rule);
            } else {
                kept.others.push(rule);
            }
        }
    }
    Ok(kept)
}
