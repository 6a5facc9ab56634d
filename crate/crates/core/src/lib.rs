//! Tree-based binary classification with rule-driven model repair and
//! theory-aware abductive explanations.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`dataset`] ingests tabular data and binarizes it onto the Boolean
//!    conditions of a learned model.
//! 2. [`learn`] grows CART decision trees and bagged forests; [`tree`] holds
//!    the model types with their path/CNF/DNF views.
//! 3. [`theory`] derives the structural domain theory (threshold chains,
//!    categorical exclusions) and extends it with mined rules.
//! 4. [`miner`] enumerates 100%-confidence association rules over the
//!    binarized data, in decreasing support order, conflict-filtered.
//! 5. [`rectify`] repairs a model with the mined classification rules by
//!    comb-shaped leaf patches and theory-based simplification.
//! 6. [`explain`] computes direct reasons and greedy unit-propagation-based
//!    majoritary reasons whose size shrinks as the theory is strengthened.
//! 7. [`pipeline`] wires it all into a repeated-split evaluation harness.
//!
//! All types are immutable after construction and all operations are pure,
//! so everything here is safe to drive from multiple threads.

pub mod dataset;
pub mod explain;
#[cfg(test)]
pub(crate) mod testutil;
pub mod learn;
pub mod logic;
pub mod metrics;
pub mod miner;
pub mod pipeline;
pub mod rectify;
pub mod rules;
pub mod theory;
pub mod tree;

pub use dataset::{binarize, instance_to_term, load_csv, split, BinarizedDataset, Dataset};
pub use explain::{best_reason, direct_reason, up_majoritary_reason, Explanation};
pub use learn::{learn_forest, learn_tree, ForestParams, TreeParams};
pub use logic::{
    is_up_implicant, sat, unit_propagate, Clause, CnfFormula, Condition, Literal, Predicate, Term,
};
pub use miner::{mine, MinerConfig};
pub use rectify::{rectify_forest, rectify_tree, simplify, RectificationReport};
pub use rules::AssociationRule;
pub use theory::{build_theory, extend_theory, DomainTheory};
pub use tree::{DecisionTree, RandomForest};
