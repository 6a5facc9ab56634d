//! Decision trees and random forests over a shared condition set, with
//! path/term extraction, CNF/DNF views, and a versioned JSON interchange
//! format.
//!
//! Trees are arenas of nodes. The left child of a decision node is taken
//! when its condition evaluates to 0, the right child when it evaluates
//! to 1.

use crate::logic::{Clause, CnfFormula, Condition, ConditionId, Literal, Predicate, Term};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf(bool),
    Internal {
        condition: ConditionId,
        left: usize,
        right: usize,
    },
}

/// A binary decision tree stored as a node arena.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    root: usize,
}

/// A root-to-leaf path: the conjunction of arc literals and the class of
/// the leaf it reaches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathTerm {
    pub term: Term,
    pub leaf_class: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum TreeError {
    #[error("node reference {node} out of range ({len} nodes)")]
    NodeOutOfRange { node: usize, len: usize },
    #[error("node {node} is reachable through two paths or a cycle")]
    NotATree { node: usize },
    #[error("condition id {id} out of range ({len} conditions)")]
    DanglingConditionId { id: usize, len: usize },
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("malformed model document: {0}")]
    Malformed(String),
}

impl DecisionTree {
    /// Single-leaf tree.
    pub fn leaf(class: bool) -> DecisionTree {
        DecisionTree {
            nodes: vec![Node::Leaf(class)],
            root: 0,
        }
    }

    /// Builds a tree from an arena, checking that every reference is in
    /// range and that the reachable part is a tree (each node one parent,
    /// no cycles).
    pub fn from_nodes(nodes: Vec<Node>, root: usize) -> Result<DecisionTree, TreeError> {
        let len = nodes.len();
        if root >= len {
            return Err(TreeError::NodeOutOfRange { node: root, len });
        }
        let mut seen = vec![false; len];
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            if seen[i] {
                return Err(TreeError::NotATree { node: i });
            }
            seen[i] = true;
            if let Node::Internal { left, right, .. } = nodes[i] {
                for child in [left, right] {
                    if child >= len {
                        return Err(TreeError::NodeOutOfRange { node: child, len });
                    }
                    stack.push(child);
                }
            }
        }
        Ok(DecisionTree { nodes, root })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    /// Number of nodes reachable from the root.
    pub fn node_count(&self) -> usize {
        let mut count = 0;
        self.walk(|_| count += 1);
        count
    }

    /// Number of arcs on the longest root-to-leaf path (0 for a leaf).
    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf(_) => 0,
                Node::Internal { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, self.root)
    }

    fn walk(&self, mut f: impl FnMut(usize)) {
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            f(i);
            if let Node::Internal { left, right, .. } = self.nodes[i] {
                stack.push(right);
                stack.push(left);
            }
        }
    }

    /// Class of the leaf reached by following the instance.
    pub fn predict(&self, bits: &[bool]) -> bool {
        let mut i = self.root;
        loop {
            match self.nodes[i] {
                Node::Leaf(class) => return class,
                Node::Internal {
                    condition,
                    left,
                    right,
                } => i = if bits[condition] { right } else { left },
            }
        }
    }

    /// All root-to-leaf paths in pre-order (left first). Paths whose term
    /// is inconsistent test a condition both ways and are unreachable;
    /// they are skipped.
    pub fn paths(&self) -> Vec<PathTerm> {
        let mut out = Vec::new();
        let mut prefix: Vec<Literal> = Vec::new();
        self.paths_rec(self.root, &mut prefix, &mut out);
        out
    }

    fn paths_rec(&self, i: usize, prefix: &mut Vec<Literal>, out: &mut Vec<PathTerm>) {
        match self.nodes[i] {
            Node::Leaf(class) => {
                if let Some(term) = Term::try_new(prefix.clone()) {
                    out.push(PathTerm {
                        term,
                        leaf_class: class,
                    });
                }
            }
            Node::Internal {
                condition,
                left,
                right,
            } => {
                prefix.push(Literal::negative(condition));
                self.paths_rec(left, prefix, out);
                prefix.pop();
                prefix.push(Literal::positive(condition));
                self.paths_rec(right, prefix, out);
                prefix.pop();
            }
        }
    }

    /// Equivalent DNF: the terms of the 1-paths.
    pub fn to_dnf(&self) -> Vec<Term> {
        self.paths()
            .into_iter()
            .filter(|p| p.leaf_class)
            .map(|p| p.term)
            .collect()
    }

    /// Equivalent CNF: the negations of the 0-path terms.
    pub fn to_cnf(&self) -> CnfFormula {
        CnfFormula::new(
            self.paths()
                .into_iter()
                .filter(|p| !p.leaf_class)
                .map(|p| Clause::negation_of(&p.term))
                .collect(),
        )
    }

    /// The complement classifier: every leaf label flipped.
    pub fn flip_leaves(&self) -> DecisionTree {
        DecisionTree {
            nodes: self
                .nodes
                .iter()
                .map(|n| match n {
                    Node::Leaf(c) => Node::Leaf(!c),
                    other => other.clone(),
                })
                .collect(),
            root: self.root,
        }
    }

    /// Arena compacted to pre-order numbering; structural equality of two
    /// trees is equality of their canonical arenas.
    pub fn canonical(&self) -> DecisionTree {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let root = self.canon_rec(self.root, &mut nodes);
        DecisionTree { nodes, root }
    }

    fn canon_rec(&self, i: usize, out: &mut Vec<Node>) -> usize {
        match self.nodes[i] {
            Node::Leaf(c) => {
                out.push(Node::Leaf(c));
                out.len() - 1
            }
            Node::Internal {
                condition,
                left,
                right,
            } => {
                let slot = out.len();
                out.push(Node::Leaf(false)); // placeholder
                let l = self.canon_rec(left, out);
                let r = self.canon_rec(right, out);
                out[slot] = Node::Internal {
                    condition,
                    left: l,
                    right: r,
                };
                slot
            }
        }
    }

    /// Largest condition id referenced, if any.
    pub fn max_condition(&self) -> Option<ConditionId> {
        let mut max = None;
        self.walk(|i| {
            if let Node::Internal { condition, .. } = self.nodes[i] {
                max = Some(max.map_or(condition, |m: usize| m.max(condition)));
            }
        });
        max
    }
}

impl PartialEq for DecisionTree {
    fn eq(&self, other: &Self) -> bool {
        fn eq_rec(a: &DecisionTree, ai: usize, b: &DecisionTree, bi: usize) -> bool {
            match (&a.nodes[ai], &b.nodes[bi]) {
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
                ) => ca == cb && eq_rec(a, *la, b, *lb) && eq_rec(a, *ra, b, *rb),
                _ => false,
            }
        }
        eq_rec(self, self.root, other, other.root)
    }
}
impl Eq for DecisionTree {}

/// An ensemble of decision trees over a shared condition set. Prediction
/// is by strict majority: class 1 iff more than half the trees vote 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub conditions: Vec<Condition>,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn new(conditions: Vec<Condition>, trees: Vec<DecisionTree>) -> Result<RandomForest, TreeError> {
        assert!(!trees.is_empty(), "a forest holds at least one tree");
        for t in &trees {
            if let Some(max) = t.max_condition() {
                if max >= conditions.len() {
                    return Err(TreeError::DanglingConditionId {
                        id: max,
                        len: conditions.len(),
                    });
                }
            }
        }
        Ok(RandomForest { conditions, trees })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Fraction of trees voting 1.
    pub fn vote_fraction(&self, bits: &[bool]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(bits)).count();
        votes as f64 / self.trees.len() as f64
    }

    /// Strict majority vote; ties go to class 0.
    pub fn predict(&self, bits: &[bool]) -> bool {
        self.vote_fraction(bits) > 0.5
    }

    /// Total node count over all trees.
    pub fn size(&self) -> usize {
        self.trees.iter().map(|t| t.node_count()).sum()
    }

    /// Deepest tree.
    pub fn depth(&self) -> usize {
        self.trees.iter().map(|t| t.depth()).max().unwrap_or(0)
    }

    /// The shared condition set (the `X` the model is based on).
    pub fn collect_conditions(&self) -> &[Condition] {
        &self.conditions
    }
}

// ---------------------------------------------------------------------------
// JSON interchange (schema v1)
// ---------------------------------------------------------------------------

const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ConditionDoc {
    id: usize,
    attribute: String,
    kind: crate::logic::AttributeKind,
    op: String,
    value: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDoc {
    Leaf { leaf: u8 },
    Internal { cond: usize, left: usize, right: usize },
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    root: usize,
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
struct ForestDoc {
    version: u32,
    conditions: Vec<ConditionDoc>,
    trees: Vec<TreeDoc>,
}

/// Serializes a forest (with its condition table) to the v1 JSON schema.
pub fn forest_to_json(f: &RandomForest) -> String {
    let conditions = f
        .conditions
        .iter()
        .enumerate()
        .map(|(id, c)| {
            let (op, value) = match &c.predicate {
                Predicate::GreaterThan(t) => (">".to_string(), serde_json::json!(t)),
                Predicate::Equals(v) => ("=".to_string(), serde_json::json!(v)),
            };
            ConditionDoc {
                id,
                attribute: c.attribute.clone(),
                kind: c.kind,
                op,
                value,
            }
        })
        .collect();
    let trees = f
        .trees
        .iter()
        .map(|t| {
            let t = t.canonical();
            TreeDoc {
                root: t.root,
                nodes: t
                    .nodes
                    .iter()
                    .map(|n| match n {
                        Node::Leaf(c) => NodeDoc::Leaf { leaf: *c as u8 },
                        Node::Internal {
                            condition,
                            left,
                            right,
                        } => NodeDoc::Internal {
                            cond: *condition,
                            left: *left,
                            right: *right,
                        },
                    })
                    .collect(),
            }
        })
        .collect();
    serde_json::to_string_pretty(&ForestDoc {
        version: SCHEMA_VERSION,
        conditions,
        trees,
    })
    .expect("forest serialization cannot fail")
}

/// Parses the v1 JSON schema back into a forest, validating version,
/// condition ids and tree structure.
pub fn forest_from_json(text: &str) -> Result<RandomForest, TreeError> {
    let doc: ForestDoc =
        serde_json::from_str(text).map_err(|e| TreeError::Malformed(e.to_string()))?;
    if doc.version != SCHEMA_VERSION {
        return Err(TreeError::SchemaVersionMismatch {
            found: doc.version,
            expected: SCHEMA_VERSION,
        });
    }
    let mut conditions = Vec::with_capacity(doc.conditions.len());
    for (i, c) in doc.conditions.into_iter().enumerate() {
        if c.id != i {
            return Err(TreeError::Malformed(format!(
                "condition ids must be dense and ordered; found {} at position {}",
                c.id, i
            )));
        }
        let predicate = match c.op.as_str() {
            ">" => {
                let t = c
                    .value
                    .as_f64()
                    .ok_or_else(|| TreeError::Malformed("non-numeric threshold".into()))?;
                if !t.is_finite() {
                    return Err(TreeError::Malformed("non-finite threshold".into()));
                }
                Predicate::GreaterThan(t)
            }
            "=" => Predicate::Equals(
                c.value
                    .as_str()
                    .ok_or_else(|| TreeError::Malformed("non-string category".into()))?
                    .to_string(),
            ),
            other => return Err(TreeError::Malformed(format!("unknown op {other:?}"))),
        };
        conditions.push(Condition {
            attribute: c.attribute,
            kind: c.kind,
            predicate,
        });
    }
    if doc.trees.is_empty() {
        return Err(TreeError::Malformed("forest holds no trees".into()));
    }
    let mut trees = Vec::with_capacity(doc.trees.len());
    for td in doc.trees {
        let nodes = td
            .nodes
            .into_iter()
            .map(|n| match n {
                NodeDoc::Leaf { leaf } => match leaf {
                    0 => Ok(Node::Leaf(false)),
                    1 => Ok(Node::Leaf(true)),
                    other => Err(TreeError::Malformed(format!("leaf label {other}"))),
                },
                NodeDoc::Internal { cond, left, right } => {
                    if cond >= conditions.len() {
                        Err(TreeError::DanglingConditionId {
                            id: cond,
                            len: conditions.len(),
                        })
                    } else {
                        Ok(Node::Internal {
                            condition: cond,
                            left,
                            right,
                        })
                    }
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        trees.push(DecisionTree::from_nodes(nodes, td.root)?);
    }
    RandomForest::new(conditions, trees)
}
