//! Domain theories over a condition set: the structural part encodes how
//! threshold and equality conditions on the same attribute relate, and the
//! mined part holds clauses contributed by association rules.
//!
//! All pairwise threshold implications are emitted rather than just the
//! adjacent ones: unit propagation is the reasoning engine and it is not
//! deduction-complete, so the redundancy buys derivations.

use crate::logic::{Clause, CnfFormula, Condition, Literal, Predicate};
use crate::rules::{AssociationRule, RuleHead};

#[derive(Debug, thiserror::Error)]
pub enum TheoryError {
    #[error("classification rule (head over the class variable) cannot extend a domain theory")]
    CarInTheory,
}

/// Structural theory plus mined extension; the combined view is the
/// extended theory used for explanations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DomainTheory {
    structural: CnfFormula,
    mined: CnfFormula,
}

impl DomainTheory {
    pub fn from_parts(structural: CnfFormula, mined: CnfFormula) -> DomainTheory {
        DomainTheory { structural, mined }
    }

    pub fn structural(&self) -> &CnfFormula {
        &self.structural
    }

    pub fn mined(&self) -> &CnfFormula {
        &self.mined
    }

    pub fn is_extended(&self) -> bool {
        !self.mined.is_empty()
    }

    /// The full theory: structural ∧ mined.
    pub fn combined(&self) -> CnfFormula {
        let mut all = self.structural.clone();
        all.extend(&self.mined);
        all
    }

    /// DIMACS-like text with structural and mined sections delimited by
    /// comment lines.
    pub fn to_dimacs(&self, conditions: &[Condition]) -> String {
        let n_vars = conditions.len().max(
            self.combined()
                .max_condition()
                .map_or(0, |c| c + 1),
        );
        let mut out = String::new();
        for (i, cond) in conditions.iter().enumerate() {
            out.push_str(&format!("c cond {} {}\n", i + 1, cond.render()));
        }
        out.push_str(&format!(
            "p cnf {} {}\n",
            n_vars,
            self.structural.len() + self.mined.len()
        ));
        let write = |out: &mut String, f: &CnfFormula| {
            for clause in f.clauses() {
                for &lit in clause.literals() {
                    let v = lit.condition() as i64 + 1;
                    out.push_str(&format!("{} ", if lit.is_positive() { v } else { -v }));
                }
                out.push_str("0\n");
            }
        };
        out.push_str("c structural\n");
        write(&mut out, &self.structural);
        out.push_str("c mined\n");
        write(&mut out, &self.mined);
        out
    }

    /// Parses the sectioned DIMACS produced by [`DomainTheory::to_dimacs`].
    /// Clauses before a `c mined` marker are structural.
    pub fn from_dimacs(text: &str) -> Result<(DomainTheory, usize), crate::logic::DimacsError> {
        use crate::logic::DimacsError;
        let mut n_vars = None;
        let mut structural = CnfFormula::empty();
        let mut mined = CnfFormula::empty();
        let mut in_mined = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed == "c mined" {
                in_mined = true;
                continue;
            }
            if trimmed.is_empty() || trimmed.starts_with('c') {
                continue;
            }
            if trimmed.starts_with('p') {
                let mut parts = trimmed.split_whitespace();
                let (Some("p"), Some("cnf"), Some(v), Some(_)) =
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
            let clause = Clause::try_new(lits).ok_or(DimacsError::TautologicalClause { line })?;
            if in_mined {
                mined.push(clause);
            } else {
                structural.push(clause);
            }
        }
        match n_vars {
            Some(n) => Ok((DomainTheory { structural, mined }, n)),
            None => Err(DimacsError::MissingHeader),
        }
    }
}

/// Builds the structural theory of a condition set.
///
/// For thresholds t_a < t_b on one numerical attribute: (A>t_b) ⇒ (A>t_a),
/// for every pair. For distinct values v ≠ w of one categorical attribute:
/// ¬((S=v) ∧ (S=w)). Domains are open: no "exactly one value" clause.
pub fn build_theory(conditions: &[Condition]) -> DomainTheory {
    let mut structural = CnfFormula::empty();
    // Group by attribute, preserving condition order for determinism.
    let mut attrs: Vec<&str> = Vec::new();
    for c in conditions {
        if !attrs.contains(&c.attribute.as_str()) {
            attrs.push(&c.attribute);
        }
    }
    for attr in attrs {
        let mut thresholds: Vec<(f64, usize)> = Vec::new();
        let mut values: Vec<usize> = Vec::new();
        for (id, c) in conditions.iter().enumerate() {
            if c.attribute != attr {
                continue;
            }
            match &c.predicate {
                Predicate::GreaterThan(t) => thresholds.push((*t, id)),
                Predicate::Equals(_) => values.push(id),
            }
        }
        thresholds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for i in 0..thresholds.len() {
            for j in i + 1..thresholds.len() {
                let (lo, hi) = (thresholds[i].1, thresholds[j].1);
                // (A > t_hi) => (A > t_lo)
                structural.push(Clause::new(vec![
                    Literal::negative(hi),
                    Literal::positive(lo),
                ]));
            }
        }
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                structural.push(Clause::new(vec![
                    Literal::negative(values[i]),
                    Literal::negative(values[j]),
                ]));
            }
        }
    }
    DomainTheory {
        structural,
        mined: CnfFormula::empty(),
    }
}

/// Extends a theory with non-classification rules: each rule b ⇒ h becomes
/// the clause (¬b ∨ h) in the mined section.
pub fn extend_theory(
    th: &DomainTheory,
    rules: &[AssociationRule],
) -> Result<DomainTheory, TheoryError> {
    let mut mined = th.mined.clone();
    for rule in rules {
        let RuleHead::Condition(head) = rule.head else {
            return Err(TheoryError::CarInTheory);
        };
        let mut lits: Vec<Literal> = rule.body.iter().map(|l| l.complement()).collect();
        lits.push(head);
        // Body is consistent and excludes the head, so the clause cannot be
        // tautological.
        mined.push(Clause::new(lits));
    }
    Ok(DomainTheory {
        structural: th.structural.clone(),
        mined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{sat, unit_propagate, Term};
    use crate::rules::{AssociationRule, RuleHead};
    use crate::testutil::{cond, loan_forest};

    #[test]
    fn loan_theory_is_the_five_expected_clauses() {
        let f = loan_forest();
        let th = build_theory(&f.conditions);
        let expected = CnfFormula::new(vec![
            Clause::new(vec![Literal::negative(1), Literal::positive(0)]), // A>60 => A>25
            Clause::new(vec![Literal::negative(3), Literal::positive(2)]), // I>50 => I>30
            Clause::new(vec![Literal::negative(4), Literal::negative(5)]), // not(U and TP)
            Clause::new(vec![Literal::negative(4), Literal::negative(6)]), // not(U and PP)
            Clause::new(vec![Literal::negative(5), Literal::negative(6)]), // not(TP and PP)
        ]);
        assert_eq!(th.structural().len(), 5);
        for c in expected.clauses() {
            assert!(th.structural().clauses().contains(c), "missing {c:?}");
        }
    }

    #[test]
    fn single_condition_gives_empty_theory() {
        let th = build_theory(&[cond("A", Predicate::GreaterThan(1.0))]);
        assert!(th.structural().is_empty());
    }

    #[test]
    fn three_thresholds_give_all_pairwise_implications() {
        let conds = vec![
            cond("A", Predicate::GreaterThan(1.0)),
            cond("A", Predicate::GreaterThan(2.0)),
            cond("A", Predicate::GreaterThan(3.0)),
        ];
        let th = build_theory(&conds);
        assert_eq!(th.structural().len(), 3);
        // Transitive pair (A>3 => A>1) is present explicitly.
        assert!(th
            .structural()
            .clauses()
            .contains(&Clause::new(vec![Literal::negative(2), Literal::positive(0)])));
    }

    #[test]
    fn loan_theory_semantics() {
        let f = loan_forest();
        let th = build_theory(&f.conditions).combined();
        // x4 ∧ x6 (U and PP) inconsistent with Th
        assert!(!sat(
            &th,
            &Term::new(vec![Literal::positive(4), Literal::positive(6)])
        ));
        // assuming A>60 derives A>25
        let res = unit_propagate(&th, &Term::new(vec![Literal::positive(1)]));
        assert!(res.contains(Literal::positive(0)));
    }

    #[test]
    fn extend_rejects_classification_rules() {
        let th = DomainTheory::default();
        let car = AssociationRule::new(
            Term::new(vec![Literal::positive(3), Literal::positive(6)]),
            RuleHead::Class(true),
            0.25,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            extend_theory(&th, &[car]),
            Err(TheoryError::CarInTheory)
        ));
    }

    #[test]
    fn extend_builds_the_expected_clause() {
        let th = DomainTheory::default();
        // (x0 ∧ ~x1) => x3  gives clause (~x0 ∨ x1 ∨ x3)
        let rule = AssociationRule::new(
            Term::new(vec![Literal::positive(0), Literal::negative(1)]),
            RuleHead::Condition(Literal::positive(3)),
            0.5,
            1.0,
        )
        .unwrap();
        let ext = extend_theory(&th, &[rule]).unwrap();
        assert_eq!(
            ext.mined().clauses(),
            &[Clause::new(vec![
                Literal::negative(0),
                Literal::positive(1),
                Literal::positive(3)
            ])]
        );
        let unchanged = extend_theory(&th, &[]).unwrap();
        assert_eq!(unchanged, th);
    }

    #[test]
    fn models_shrink_when_theory_grows() {
        let f = loan_forest();
        let th = build_theory(&f.conditions);
        let rule = AssociationRule::new(
            Term::new(vec![Literal::positive(0), Literal::negative(1)]),
            RuleHead::Condition(Literal::positive(3)),
            0.5,
            1.0,
        )
        .unwrap();
        let ext = extend_theory(&th, &[rule]).unwrap();
        let base = th.combined();
        let extended = ext.combined();
        for m in 0u32..128 {
            let bits: Vec<bool> = (0..7).map(|i| m >> i & 1 == 1).collect();
            if extended.satisfied_by(&bits) {
                assert!(base.satisfied_by(&bits));
            }
        }
    }

    #[test]
    fn dimacs_sections_round_trip() {
        let f = loan_forest();
        let th = build_theory(&f.conditions);
        let rule = AssociationRule::new(
            Term::new(vec![Literal::positive(0)]),
            RuleHead::Condition(Literal::positive(2)),
            0.5,
            1.0,
        )
        .unwrap();
        let ext = extend_theory(&th, &[rule]).unwrap();
        let text = ext.to_dimacs(&f.conditions);
        let (back, n) = DomainTheory::from_dimacs(&text).unwrap();
        assert_eq!(back, ext);
        assert_eq!(n, 7);
    }
}
