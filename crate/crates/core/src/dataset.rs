//! Tabular dataset ingestion, attribute typing, train/test splitting, and
//! binarization onto a model's condition set.
//!
//! Columns are auto-typed: a column whose values are all `0`/`1` is
//! Boolean, an all-numeric column is numerical, anything else categorical.
//! Categorical values keep their observed strings; runs are reproducible
//! because observed domains are kept sorted.

use crate::logic::{AttributeKind, Condition, Literal, Predicate, Term};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Read;

/// A cell value: numerical or categorical. Boolean cells are stored as the
/// categorical strings `"0"` / `"1"`.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Cat(_) => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            Value::Cat(s) => Some(s),
            Value::Num(_) => None,
        }
    }
}

/// Typing and observed domain of one column.
#[derive(Debug, Clone)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    pub observed_domain: Vec<Value>,
}

/// A labelled tabular dataset. `rows[i][j]` is the value of attribute `j`
/// on instance `i`; `labels[i]` is its class.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: Vec<AttributeSchema>,
    pub rows: Vec<Vec<Value>>,
    pub labels: Vec<bool>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_attributes(&self) -> usize {
        self.schema.len()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|a| a.name == name)
    }
}

/// The dataset rewritten over a model's Boolean conditions: bit `j` of row
/// `i` is the evaluation of condition `j` on instance `i`.
#[derive(Debug, Clone)]
pub struct BinarizedDataset {
    pub conditions: Vec<Condition>,
    pub rows: Vec<Vec<bool>>,
    pub labels: Vec<bool>,
}

impl BinarizedDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_conditions(&self) -> usize {
        self.conditions.len()
    }

    /// View as a plain dataset of Boolean columns named by condition
    /// strings, e.g. for feeding back into the learner.
    pub fn to_dataset(&self) -> Dataset {
        let schema = self
            .conditions
            .iter()
            .map(|c| AttributeSchema {
                name: c.render(),
                kind: AttributeKind::Boolean,
                observed_domain: vec![Value::Cat("0".into()), Value::Cat("1".into())],
            })
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|bits| {
                bits.iter()
                    .map(|&b| Value::Cat(if b { "1" } else { "0" }.into()))
                    .collect()
            })
            .collect();
        Dataset {
            schema,
            rows,
            labels: self.labels.clone(),
        }
    }

    /// CSV of 0/1 columns named by condition strings plus `y`; the format
    /// consumed by the miner's offline mode.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<String> = self.conditions.iter().map(|c| c.render()).collect();
        header.push("y".into());
        out.push_str(&header.join(","));
        out.push('\n');
        for (bits, &label) in self.rows.iter().zip(&self.labels) {
            let mut cells: Vec<&str> = bits.iter().map(|&b| if b { "1" } else { "0" }).collect();
            cells.push(if label { "1" } else { "0" });
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the CSV produced by [`BinarizedDataset::to_csv`].
    pub fn from_csv(reader: impl Read) -> Result<BinarizedDataset, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| DatasetError::MalformedCsv {
                row: 0,
                message: e.to_string(),
            })?
            .clone();
        let mut conditions = Vec::new();
        let mut label_col = None;
        for (i, h) in headers.iter().enumerate() {
            if h == "y" {
                label_col = Some(i);
            } else {
                let cond = Condition::parse(h).ok_or_else(|| DatasetError::MalformedCsv {
                    row: 0,
                    message: format!("header {h:?} is not a condition string"),
                })?;
                conditions.push((i, cond));
            }
        }
        let label_col = label_col.ok_or(DatasetError::UnknownLabelColumn {
            name: "y".to_string(),
        })?;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (ri, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| DatasetError::MalformedCsv {
                row: ri + 1,
                message: e.to_string(),
            })?;
            let parse_bit = |i: usize| -> Result<bool, DatasetError> {
                match record.get(i).map(str::trim) {
                    Some("0") => Ok(false),
                    Some("1") => Ok(true),
                    other => Err(DatasetError::MalformedCsv {
                        row: ri + 1,
                        message: format!("expected 0/1, found {other:?}"),
                    }),
                }
            };
            let bits: Vec<bool> = conditions
                .iter()
                .map(|&(i, _)| parse_bit(i))
                .collect::<Result<_, _>>()?;
            labels.push(parse_bit(label_col)?);
            rows.push(bits);
        }
        Ok(BinarizedDataset {
            conditions: conditions.into_iter().map(|(_, c)| c).collect(),
            rows,
            labels,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("malformed CSV at data row {row}: {message}")]
    MalformedCsv { row: usize, message: String },
    #[error("label column {name:?} not found")]
    UnknownLabelColumn { name: String },
    #[error("missing value at data row {row}, column {column:?}")]
    MissingValue { row: usize, column: String },
    #[error("condition on {attribute:?} does not match the schema: {reason}")]
    SchemaMismatch { attribute: String, reason: String },
}

/// Load options; `schema_hints` of the operation contract.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Label column name; defaults to `y`.
    pub label_column: Option<String>,
}

/// Loads a UTF-8, comma-separated, headered CSV into a typed dataset.
///
/// Rows with missing (empty) values are rejected. Labels must be 0/1.
pub fn load_csv(reader: impl Read, opts: &LoadOptions) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DatasetError::MalformedCsv {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let label_name = opts.label_column.as_deref().unwrap_or("y");
    let label_col = headers
        .iter()
        .position(|h| h == label_name)
        .ok_or_else(|| DatasetError::UnknownLabelColumn {
            name: label_name.to_string(),
        })?;
    let attr_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_col)
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut raw: Vec<Vec<String>> = Vec::new();
    let mut labels: Vec<bool> = Vec::new();
    for (ri, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| DatasetError::MalformedCsv {
            row: ri + 1,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(DatasetError::MalformedCsv {
                row: ri + 1,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let mut cells = Vec::with_capacity(attr_cols.len());
        for (col, name) in &attr_cols {
            let cell = record.get(*col).unwrap_or("").trim();
            if cell.is_empty() {
                return Err(DatasetError::MissingValue {
                    row: ri + 1,
                    column: name.clone(),
                });
            }
            cells.push(cell.to_string());
        }
        let label_cell = record.get(label_col).unwrap_or("").trim();
        let label = match label_cell.parse::<f64>() {
            Ok(v) if v == 0.0 => false,
            Ok(v) if v == 1.0 => true,
            _ => {
                return Err(DatasetError::MalformedCsv {
                    row: ri + 1,
                    message: format!("label must be 0 or 1, found {label_cell:?}"),
                })
            }
        };
        raw.push(cells);
        labels.push(label);
    }

    // Column typing pass: Boolean ⊂ Numerical ⊂ Categorical.
    let mut schema = Vec::with_capacity(attr_cols.len());
    let mut rows: Vec<Vec<Value>> = vec![Vec::with_capacity(attr_cols.len()); raw.len()];
    for (j, (_, name)) in attr_cols.iter().enumerate() {
        let parsed: Vec<Option<f64>> = raw.iter().map(|r| r[j].parse::<f64>().ok()).collect();
        let all_numeric = parsed.iter().all(|v| matches!(v, Some(x) if x.is_finite()));
        let boolean = all_numeric
            && parsed
                .iter()
                .all(|v| matches!(v, Some(x) if *x == 0.0 || *x == 1.0));
        let kind = if boolean {
            AttributeKind::Boolean
        } else if all_numeric {
            AttributeKind::Numerical
        } else {
            AttributeKind::Categorical
        };
        let mut domain: Vec<Value> = Vec::new();
        for (i, cell) in raw.iter().map(|r| &r[j]).enumerate() {
            let value = match kind {
                AttributeKind::Numerical => Value::Num(parsed[i].unwrap()),
                AttributeKind::Boolean => {
                    Value::Cat(if parsed[i].unwrap() == 1.0 { "1" } else { "0" }.into())
                }
                AttributeKind::Categorical => Value::Cat(cell.clone()),
            };
            rows[i].push(value);
        }
        for row in &rows {
            let v = &row[j];
            if !domain.contains(v) {
                domain.push(v.clone());
            }
        }
        domain.sort_by(|a, b| match (a, b) {
            (Value::Num(x), Value::Num(y)) => x.partial_cmp(y).unwrap(),
            (Value::Cat(x), Value::Cat(y)) => x.cmp(y),
            (Value::Num(_), Value::Cat(_)) => std::cmp::Ordering::Less,
            (Value::Cat(_), Value::Num(_)) => std::cmp::Ordering::Greater,
        });
        schema.push(AttributeSchema {
            name: name.clone(),
            kind,
            observed_domain: domain,
        });
    }
    Ok(Dataset {
        schema,
        rows,
        labels,
    })
}

/// Deterministic random split: `round(train_fraction · |d|)` rows go to the
/// training part, the rest to the test part.
pub fn split(d: &Dataset, train_fraction: f64, seed: u64) -> (Dataset, Dataset) {
    assert!(
        train_fraction > 0.0 && train_fraction < 1.0,
        "train_fraction must be in (0, 1)"
    );
    let mut indices: Vec<usize> = (0..d.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_train = (train_fraction * d.len() as f64).round() as usize;
    let take = |idx: &[usize]| Dataset {
        schema: d.schema.clone(),
        rows: idx.iter().map(|&i| d.rows[i].clone()).collect(),
        labels: idx.iter().map(|&i| d.labels[i]).collect(),
    };
    (take(&indices[..n_train]), take(&indices[n_train..]))
}

/// Evaluates one condition on one instance.
pub fn eval_condition(cond: &Condition, row: &[Value], attr_index: usize) -> bool {
    match (&cond.predicate, &row[attr_index]) {
        (Predicate::GreaterThan(t), Value::Num(v)) => v > t,
        (Predicate::Equals(cv), Value::Cat(v)) => v == cv,
        _ => false,
    }
}

/// Rewrites the dataset over the given conditions. Fails when a condition
/// references an attribute the schema does not have, or has a predicate
/// incompatible with the attribute kind.
pub fn binarize(d: &Dataset, conditions: &[Condition]) -> Result<BinarizedDataset, DatasetError> {
    let mut attr_of: Vec<usize> = Vec::with_capacity(conditions.len());
    for cond in conditions {
        let idx = d
            .attribute_index(&cond.attribute)
            .ok_or_else(|| DatasetError::SchemaMismatch {
                attribute: cond.attribute.clone(),
                reason: "attribute not present in dataset".into(),
            })?;
        let kind = d.schema[idx].kind;
        let compatible = match cond.predicate {
            Predicate::GreaterThan(_) => kind == AttributeKind::Numerical,
            Predicate::Equals(_) => {
                kind == AttributeKind::Categorical || kind == AttributeKind::Boolean
            }
        };
        if !compatible {
            return Err(DatasetError::SchemaMismatch {
                attribute: cond.attribute.clone(),
                reason: format!("predicate {:?} against {kind:?} column", cond.predicate),
            });
        }
        attr_of.push(idx);
    }
    let rows = d
        .rows
        .iter()
        .map(|row| {
            conditions
                .iter()
                .zip(&attr_of)
                .map(|(c, &a)| eval_condition(c, row, a))
                .collect()
        })
        .collect();
    Ok(BinarizedDataset {
        conditions: conditions.to_vec(),
        rows,
        labels: d.labels.clone(),
    })
}

/// The canonical term of an instance: a positive literal per 1-bit and a
/// negative literal per 0-bit.
pub fn instance_to_term(bits: &[bool]) -> Term {
    Term::new(
        bits.iter()
            .enumerate()
            .map(|(i, &b)| Literal::new(i, b))
            .collect(),
    )
}

/// Inverse of [`instance_to_term`] for full terms over `0..n`.
pub fn term_to_instance(term: &Term, n_conditions: usize) -> Vec<bool> {
    let mut bits = vec![false; n_conditions];
    for lit in term.iter() {
        bits[lit.condition()] = lit.is_positive();
    }
    bits
}
