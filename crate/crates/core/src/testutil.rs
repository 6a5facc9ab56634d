//! Shared unit-test fixtures: the worked loan-allocation forest and its
//! domain theory.

use crate::logic::{AttributeKind, Condition, Predicate};
use crate::tree::{DecisionTree, Node, RandomForest};

pub fn cond(attr: &str, pred: Predicate) -> Condition {
    let kind = match pred {
        Predicate::GreaterThan(_) => AttributeKind::Numerical,
        Predicate::Equals(_) => AttributeKind::Categorical,
    };
    Condition {
        attribute: attr.into(),
        kind,
        predicate: pred,
    }
}

/// Instance (A=33, I=52, S=PP) binarized over the loan conditions.
pub const LOAN_X: [bool; 7] = [true, false, true, true, false, false, true];

/// Three-tree forest over 7 conditions:
/// x0=A>25, x1=A>60, x2=I>30, x3=I>50, x4=S=U, x5=S=TP, x6=S=PP.
pub fn loan_forest() -> RandomForest {
    let conditions = vec![
        cond("A", Predicate::GreaterThan(25.0)),
        cond("A", Predicate::GreaterThan(60.0)),
        cond("I", Predicate::GreaterThan(30.0)),
        cond("I", Predicate::GreaterThan(50.0)),
        cond("S", Predicate::Equals("U".into())),
        cond("S", Predicate::Equals("TP".into())),
        cond("S", Predicate::Equals("PP".into())),
    ];
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
    RandomForest::new(conditions, vec![t1, t2, t3]).unwrap()
}
