//! Data clouds: the most significant terms of a search result, each of
//! which refines the search when clicked.
//!
//! A term's significance is its summed frequency over the matching
//! entities times a corpus inverse document frequency:
//!
//! ```text
//! sig(t) = (Σ_{e ∈ hits} tf(t, e)) · ln(1 + N / df(t))
//! ```
//!
//! Candidates are non-stopword unigrams and bigrams whose two words are
//! both non-stopwords. Terms already in the query are skipped.

use std::collections::HashMap;

use serde::Serialize;

use crate::search::{QueryTerm, SearchError, SearchIndex, SearchResult};

pub const DEFAULT_CLOUD_SIZE: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloudTerm {
    /// Number of matching entities that contain the term.
    #[serde(rename = "count")]
    pub doc_count: usize,
    pub term: QueryTerm,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataCloud {
    pub query: Vec<QueryTerm>,
    /// Sorted by weight descending, then term text ascending.
    pub terms: Vec<CloudTerm>,
}

/// Significance of a term given its summed result-set frequency.
pub fn significance(tf_sum: u64, entity_count: usize, doc_freq: usize) -> f64 {
    tf_sum as f64 * (1.0 + entity_count as f64 / doc_freq as f64).ln()
}

/// Computes the cloud over every entity matching `result.query`, including
/// those cut off by a search limit.
pub fn compute_cloud(index: &SearchIndex, result: &SearchResult, k: usize) -> DataCloud {
    let query = result.query.clone();
    if query.is_empty() {
        return DataCloud {
            query,
            terms: Vec::new(),
        };
    }
    let n = index.entity_count();

    struct Acc<'a> {
        term: &'a QueryTerm,
        tf_sum: u64,
        docs: usize,
        df: usize,
    }
    let mut acc: HashMap<&QueryTerm, Acc<'_>> = HashMap::new();
    for e in index.matching(&query) {
        index.for_each_term(e, |term, tf, df, candidate| {
            if !candidate || query.contains(term) {
                return;
            }
            let entry = acc.entry(term).or_insert(Acc {
                term,
                tf_sum: 0,
                docs: 0,
                df,
            });
            entry.tf_sum += tf as u64;
            entry.docs += 1;
        });
    }

    let mut terms: Vec<(String, CloudTerm)> = acc
        .into_values()
        .map(|a| {
            (
                a.term.key(),
                CloudTerm {
                    doc_count: a.docs,
                    term: a.term.clone(),
                    weight: significance(a.tf_sum, n, a.df),
                },
            )
        })
        .collect();
    terms.sort_by(|(ka, a), (kb, b)| {
        b.weight
            .partial_cmp(&a.weight)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| ka.as_bytes().cmp(kb.as_bytes()))
    });
    terms.truncate(k);
    DataCloud {
        query,
        terms: terms.into_iter().map(|(_, t)| t).collect(),
    }
}

/// Adds `clicked` to `query` and returns the narrowed result with its
/// recomputed cloud.
///
/// Fails with [`SearchError::StaleTerm`] when `clicked` occurs in none of
/// the entities matching `query`.
pub fn refine(
    index: &SearchIndex,
    query: &[QueryTerm],
    clicked: &QueryTerm,
    k: usize,
    limit: Option<usize>,
) -> Result<(SearchResult, DataCloud), SearchError> {
    if query.is_empty() {
        return Err(SearchError::EmptyQuery);
    }
    let mut refined = query.to_vec();
    if !refined.contains(clicked) {
        refined.push(clicked.clone());
    }
    if index.matching(&refined).is_empty() {
        return Err(SearchError::StaleTerm(clicked.key()));
    }
    let result = index.search(&refined, limit)?;
    let cloud = compute_cloud(index, &result, k);
    Ok((result, cloud))
}
