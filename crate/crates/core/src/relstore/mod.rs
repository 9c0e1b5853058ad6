//! Immutable in-memory relational store.
//!
//! Relations are declared by a JSON schema, filled from CSV files and
//! persisted as a versioned JSON-lines snapshot. Once built, a [`Store`] is
//! never mutated; every other module borrows it read-only.

mod csv_ingest;
mod schema;
mod snapshot;
mod value;

use std::collections::HashSet;

use thiserror::Error;

pub use csv_ingest::ingest_csv;
pub use schema::{is_identifier, load_schema, ColumnDef, RelationDef, Schema};
pub use snapshot::{snapshot_load, snapshot_save, SNAPSHOT_VERSION};
pub use value::{ColumnType, RatingMap, Value};

pub type Tuple = Vec<Value>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("schema parse error{}: {message}", relation.as_deref().map(|r| format!(" in relation {r}")).unwrap_or_default())]
    Parse {
        relation: Option<String>,
        message: String,
    },
    #[error("schema error in relation {relation}: {message}")]
    Schema { relation: String, message: String },
    #[error("csv error in relation {relation} at {}: {message}", if *row == 0 { "header".to_string() } else { format!("row {row}") })]
    Csv {
        relation: String,
        /// 1-based data row; 0 denotes the header.
        row: usize,
        message: String,
    },
    #[error("snapshot error at line {line}: {message}")]
    Snapshot { line: usize, message: String },
    #[error("unknown relation {0}")]
    UnknownRelation(String),
}

/// A relation: its definition plus tuples in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub def: RelationDef,
    pub tuples: Vec<Tuple>,
}

impl Relation {
    /// Builds a relation after checking arity, value types and key
    /// uniqueness.
    pub fn new(def: RelationDef, tuples: Vec<Tuple>) -> Result<Self, StoreError> {
        let pk = def.primary_key_index();
        let mut seen = HashSet::new();
        for (i, tuple) in tuples.iter().enumerate() {
            let row = i + 1;
            let bad = |message: String| StoreError::Csv {
                relation: def.name.clone(),
                row,
                message,
            };
            if tuple.len() != def.columns.len() {
                return Err(bad(format!(
                    "expected {} values, found {}",
                    def.columns.len(),
                    tuple.len()
                )));
            }
            for (value, col) in tuple.iter().zip(&def.columns) {
                if !value.conforms_to(col.ty) {
                    return Err(bad(format!("column {} expects {}", col.name, col.ty)));
                }
            }
            if let Some(k) = pk {
                match &tuple[k] {
                    Value::Null => return Err(bad("null primary key".into())),
                    key => {
                        if !seen.insert(key_repr(key)) {
                            return Err(bad(format!("duplicate primary key {key}")));
                        }
                    }
                }
            }
        }
        Ok(Self { def, tuples })
    }

    pub fn empty(def: RelationDef) -> Self {
        Self {
            def,
            tuples: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.def.column_index(name)
    }
}

fn key_repr(v: &Value) -> String {
    match v {
        Value::Int(i) => format!("i{i}"),
        Value::Text(s) => format!("t{s}"),
        other => format!("o{other}"),
    }
}

/// The ingested database.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Store {
    relations: Vec<Relation>,
}

impl Store {
    pub fn new(relations: Vec<Relation>) -> Result<Self, StoreError> {
        let mut names = HashSet::new();
        for r in &relations {
            if !names.insert(r.def.name.to_ascii_lowercase()) {
                return Err(StoreError::Schema {
                    relation: r.def.name.clone(),
                    message: "duplicate relation name".into(),
                });
            }
        }
        Ok(Self { relations })
    }

    /// Reads `<dir>/<Relation>.csv` for every relation of `schema`.
    pub fn ingest_dir(schema: &Schema, dir: &std::path::Path) -> Result<Self, StoreError> {
        let mut relations = Vec::with_capacity(schema.relations.len());
        for def in &schema.relations {
            let path = dir.join(format!("{}.csv", def.name));
            let file = std::fs::File::open(&path).map_err(|e| StoreError::Csv {
                relation: def.name.clone(),
                row: 0,
                message: format!("cannot open {}: {e}", path.display()),
            })?;
            relations.push(ingest_csv(
                schema,
                &def.name,
                std::io::BufReader::new(file),
            )?);
        }
        Self::new(relations)
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.def.name == name)
    }

    pub fn schema(&self) -> Schema {
        Schema {
            relations: self.relations.iter().map(|r| r.def.clone()).collect(),
        }
    }
}
