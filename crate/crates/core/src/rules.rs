//! Association rules over a binarized dataset: a conjunctive body of 1–2
//! condition literals and a single-literal head over the conditions or the
//! class variable. Rules with a class head are classification rules (CARs).

use crate::dataset::BinarizedDataset;
use crate::logic::{sat, Condition, Literal, Term};
use crate::theory::DomainTheory;
use std::fmt;

/// Head of an association rule: a condition literal or the class literal
/// (`Class(true)` is y, `Class(false)` is ȳ). The derived order — condition
/// heads by literal code, then ȳ, then y — is the canonical head order used
/// for tie-breaking in the miner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleHead {
    Condition(Literal),
    Class(bool),
}

impl RuleHead {
    /// True on a classified instance iff the head matches it.
    pub fn eval(self, bits: &[bool], label: bool) -> bool {
        match self {
            RuleHead::Condition(l) => l.eval(bits),
            RuleHead::Class(c) => label == c,
        }
    }

    /// Complementary heads conclude opposite things about one variable.
    pub fn is_complement_of(self, other: RuleHead) -> bool {
        match (self, other) {
            (RuleHead::Condition(a), RuleHead::Condition(b)) => a == b.complement(),
            (RuleHead::Class(a), RuleHead::Class(b)) => a != b,
            _ => false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("rule body must hold 1 or 2 literals, found {0}")]
    BadBodySize(usize),
    #[error("rule head occurs in its body")]
    HeadInBody,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no row satisfies the rule body")]
    ZeroBodySupport,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// An association rule b ⇒ h with its support and confidence on the
/// dataset it was mined from.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationRule {
    pub body: Term,
    pub head: RuleHead,
    pub support: f64,
    pub confidence: f64,
}

impl AssociationRule {
    pub fn new(
        body: Term,
        head: RuleHead,
        support: f64,
        confidence: f64,
    ) -> Result<AssociationRule, RuleError> {
        if body.is_empty() || body.len() > 2 {
            return Err(RuleError::BadBodySize(body.len()));
        }
        if let RuleHead::Condition(h) = head {
            if body.contains(h) || body.contains(h.complement()) {
                return Err(RuleError::HeadInBody);
            }
        }
        Ok(AssociationRule {
            body,
            head,
            support,
            confidence,
        })
    }

    pub fn is_car(&self) -> bool {
        matches!(self.head, RuleHead::Class(_))
    }

    /// Canonical rule order: body literals, then head.
    pub fn canonical_key(&self) -> (Vec<Literal>, RuleHead) {
        (self.body.literals().to_vec(), self.head)
    }

    /// A classified instance falsifies the rule iff it satisfies the body
    /// but not the head.
    pub fn falsified_by(&self, bits: &[bool], label: bool) -> bool {
        self.body.covers(bits) && !self.head.eval(bits, label)
    }

    fn render_literal(lit: Literal, conditions: &[Condition]) -> String {
        let s = conditions[lit.condition()].render();
        if lit.is_positive() {
            s
        } else {
            format!("!{s}")
        }
    }

    /// Line format: `body[,body] => head  support=<frac> conf=<frac>`,
    /// literals as condition strings with `!` for negation, `y`/`!y` heads.
    pub fn render(&self, conditions: &[Condition]) -> String {
        let body = self
            .body
            .iter()
            .map(|l| Self::render_literal(l, conditions))
            .collect::<Vec<_>>()
            .join(",");
        let head = match self.head {
            RuleHead::Class(true) => "y".to_string(),
            RuleHead::Class(false) => "!y".to_string(),
            RuleHead::Condition(l) => Self::render_literal(l, conditions),
        };
        format!(
            "{body} => {head}  support={} conf={}",
            self.support, self.confidence
        )
    }
}

impl fmt::Display for AssociationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} => {:?}", self.body, self.head)
    }
}

/// Fraction of instances satisfying body ∧ head; class heads are matched
/// against the label column.
pub fn support(r: &AssociationRule, d: &BinarizedDataset) -> Result<f64, RuleError> {
    if d.is_empty() {
        return Err(RuleError::EmptyDataset);
    }
    let hits = d
        .rows
        .iter()
        .zip(&d.labels)
        .filter(|(bits, &label)| r.body.covers(bits) && r.head.eval(bits, label))
        .count();
    Ok(hits as f64 / d.len() as f64)
}

/// Instances satisfying body ∧ head over instances satisfying the body.
pub fn confidence(r: &AssociationRule, d: &BinarizedDataset) -> Result<f64, RuleError> {
    if d.is_empty() {
        return Err(RuleError::EmptyDataset);
    }
    let mut body_hits = 0usize;
    let mut both = 0usize;
    for (bits, &label) in d.rows.iter().zip(&d.labels) {
        if r.body.covers(bits) {
            body_hits += 1;
            if r.head.eval(bits, label) {
                both += 1;
            }
        }
    }
    if body_hits == 0 {
        return Err(RuleError::ZeroBodySupport);
    }
    Ok(both as f64 / body_hits as f64)
}

/// Two rules conflict iff their heads are complementary and their bodies
/// are jointly satisfiable with the structural theory (complete check).
pub fn conflicts(r1: &AssociationRule, r2: &AssociationRule, th: &DomainTheory) -> bool {
    if !r1.head.is_complement_of(r2.head) {
        return false;
    }
    match r1.body.union(&r2.body) {
        None => false,
        Some(joint) => sat(th.structural(), &joint),
    }
}

// ---------------------------------------------------------------------------
// Text interchange
// ---------------------------------------------------------------------------

fn parse_literal(s: &str, conditions: &[Condition]) -> Option<Literal> {
    let (positive, body) = match s.strip_prefix('!') {
        Some(rest) => (false, rest),
        None => (true, s),
    };
    let cond = Condition::parse(body)?;
    let id = conditions.iter().position(|c| {
        // Kind is not recoverable from the rendering; match on attribute
        // and predicate only.
        c.attribute == cond.attribute && c.predicate == cond.predicate
    })?;
    Some(Literal::new(id, positive))
}

/// Serializes rules in the line-oriented text format.
pub fn rules_to_text(rules: &[AssociationRule], conditions: &[Condition]) -> String {
    let mut out = String::new();
    for r in rules {
        out.push_str(&r.render(conditions));
        out.push('\n');
    }
    out
}

/// Parses the line-oriented rule format against a known condition table.
pub fn rules_from_text(
    text: &str,
    conditions: &[Condition],
) -> Result<Vec<AssociationRule>, RuleError> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| RuleError::Parse { line, message };
        let (rule_part, meta) = match trimmed.split_once("  ") {
            Some((r, m)) => (r.trim(), m.trim()),
            None => (trimmed, ""),
        };
        let (body_part, head_part) = rule_part
            .split_once("=>")
            .ok_or_else(|| err("missing `=>`".into()))?;
        let mut body_lits = Vec::new();
        for tok in body_part.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                return Err(err("empty body literal".into()));
            }
            body_lits.push(
                parse_literal(tok, conditions)
                    .ok_or_else(|| err(format!("unknown body literal {tok:?}")))?,
            );
        }
        let body = Term::try_new(body_lits).ok_or_else(|| err("inconsistent body".into()))?;
        let head_tok = head_part.trim();
        let head = match head_tok {
            "y" => RuleHead::Class(true),
            "!y" => RuleHead::Class(false),
            other => RuleHead::Condition(
                parse_literal(other, conditions)
                    .ok_or_else(|| err(format!("unknown head literal {other:?}")))?,
            ),
        };
        let mut support = 0.0;
        let mut conf = 1.0;
        for kv in meta.split_whitespace() {
            if let Some(v) = kv.strip_prefix("support=") {
                support = v
                    .parse()
                    .ok()
                    .filter(|s: &f64| s.is_finite())
                    .ok_or_else(|| err(format!("bad support {v:?}")))?;
            } else if let Some(v) = kv.strip_prefix("conf=") {
                conf = v
                    .parse()
                    .ok()
                    .filter(|c: &f64| c.is_finite())
                    .ok_or_else(|| err(format!("bad conf {v:?}")))?;
            }
        }
        rules.push(
            AssociationRule::new(body, head, support, conf)
                .map_err(|e| err(e.to_string()))?,
        );
    }
    Ok(rules)
}
