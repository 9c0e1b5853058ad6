//! Keyword search over entities that span several relations.
//!
//! An [`EntitySpec`] names a root relation plus joined text-bearing parts.
//! [`SearchIndex::build`] materializes one [`Entity`] per root tuple and
//! indexes unigrams and adjacent-token bigrams. Queries are conjunctive and
//! ranked by field-weighted raw term frequency.

mod index;
mod spec;

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::relstore::Value;
use crate::textkit::tokenize;

pub use index::{Entity, EntityField, SearchIndex};
pub use spec::{EntitySpec, FieldSpec, PartSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid entity spec: {0}")]
    Spec(String),
    #[error("empty query")]
    EmptyQuery,
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("term {0:?} does not occur in the current results")]
    StaleTerm(String),
}

/// A query term: one token, or two tokens that must be adjacent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QueryTerm {
    Word(String),
    Phrase(String, String),
}

impl QueryTerm {
    /// Parses the text of one term (`"latin american"` or `"java"`),
    /// tokenizing it first.
    pub fn parse(text: &str) -> Result<Self, SearchError> {
        let mut tokens = tokenize(text);
        match tokens.len() {
            1 => Ok(QueryTerm::Word(tokens.remove(0))),
            2 => {
                let second = tokens.pop().unwrap();
                Ok(QueryTerm::Phrase(tokens.pop().unwrap(), second))
            }
            0 => Err(SearchError::InvalidQuery(format!("{text:?} has no terms"))),
            n => Err(SearchError::InvalidQuery(format!(
                "{text:?} has {n} words; phrases are at most two words"
            ))),
        }
    }

    /// Index key: the word itself, or both words joined by a space.
    pub fn key(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for QueryTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryTerm::Word(w) => f.write_str(w),
            QueryTerm::Phrase(a, b) => write!(f, "{a} {b}"),
        }
    }
}

impl Serialize for QueryTerm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Parses a user query. Double-quoted segments are phrases; everything else
/// is split into single words. Duplicate terms are dropped.
pub fn parse_query(text: &str) -> Result<Vec<QueryTerm>, SearchError> {
    let mut terms = Vec::new();
    let mut push = |t: QueryTerm| {
        if !terms.contains(&t) {
            terms.push(t);
        }
    };
    for (i, segment) in text.split('"').enumerate() {
        if i % 2 == 1 {
            if !segment.trim().is_empty() {
                push(QueryTerm::parse(segment)?);
            }
        } else {
            for word in tokenize(segment) {
                push(QueryTerm::Word(word));
            }
        }
    }
    if text.matches('"').count() % 2 == 1 {
        return Err(SearchError::InvalidQuery("unbalanced quote".into()));
    }
    if terms.is_empty() {
        return Err(SearchError::EmptyQuery);
    }
    Ok(terms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    /// Labels of the fields in which some query term occurs.
    pub fields: Vec<String>,
    #[serde(serialize_with = "crate::json::serialize_value")]
    pub id: Value,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub hits: Vec<SearchHit>,
    pub query: Vec<QueryTerm>,
    /// Number of matching entities before `limit` was applied.
    pub total: usize,
}

impl SearchResult {
    pub fn ids(&self) -> Vec<&Value> {
        self.hits.iter().map(|h| &h.id).collect()
    }
}
