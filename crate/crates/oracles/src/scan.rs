//! Exhaustive search and data-cloud recount: no index, every entity's text
//! is rebuilt from the store and rescanned for each question.

use std::collections::{BTreeMap, BTreeSet};

use flexcloud::relstore::{Store, Value};
use flexcloud::search::EntitySpec;
use flexcloud::textkit::STOPWORDS;

use crate::sim::naive_tokenize;

/// One field: its weight and one token list per contributing row.
pub struct ScanField {
    pub label: String,
    pub weight: f64,
    pub rows: Vec<Vec<String>>,
}

pub struct ScanEntity {
    pub id: Value,
    pub fields: Vec<ScanField>,
}

/// A query term as its words: one word or a two-word phrase.
pub type Term = Vec<String>;

pub fn term(text: &str) -> Term {
    text.split(' ').map(str::to_string).collect()
}

fn text_of(v: &Value) -> Vec<String> {
    match v {
        Value::Text(s) => naive_tokenize(s),
        _ => Vec::new(),
    }
}

fn same_key(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Text(x), Value::Text(y)) => x == y,
        _ => false,
    }
}

pub fn scan_entities(store: &Store, spec: &EntitySpec) -> Vec<ScanEntity> {
    let root = store.relation(&spec.root).expect("root relation");
    let pk = root.def.primary_key_index().expect("root primary key");
    let mut out = Vec::new();
    for tuple in &root.tuples {
        let mut fields = Vec::new();
        for f in &spec.root_fields {
            let c = root.column_index(&f.column).unwrap();
            fields.push(ScanField {
                label: f.column.clone(),
                weight: f.weight,
                rows: vec![text_of(&tuple[c])],
            });
        }
        for part in &spec.parts {
            let rel = store.relation(&part.relation).unwrap();
            let rc = root.column_index(&part.join.0).unwrap();
            let pc = rel.column_index(&part.join.1).unwrap();
            for f in &part.fields {
                let c = rel.column_index(&f.column).unwrap();
                let rows = rel
                    .tuples
                    .iter()
                    .filter(|r| same_key(&tuple[rc], &r[pc]))
                    .map(|r| text_of(&r[c]))
                    .collect();
                fields.push(ScanField {
                    label: format!("{}.{}", part.relation, f.column),
                    weight: f.weight,
                    rows,
                });
            }
        }
        out.push(ScanEntity {
            id: tuple[pk].clone(),
            fields,
        });
    }
    out
}

/// Occurrences of `t` in a field, phrases counted within single rows.
pub fn count(field: &ScanField, t: &Term) -> u64 {
    let mut n = 0;
    for row in &field.rows {
        for i in 0..row.len() {
            if i + t.len() <= row.len() && row[i..i + t.len()] == t[..] {
                n += 1;
            }
        }
    }
    n
}

fn entity_has(e: &ScanEntity, t: &Term) -> bool {
    e.fields.iter().any(|f| count(f, t) > 0)
}

/// `(id, score, matched field labels)` for every entity containing all
/// terms, best first.
pub fn scan_search(
    store: &Store,
    spec: &EntitySpec,
    query: &[Term],
) -> Vec<(Value, f64, Vec<String>)> {
    let mut hits = Vec::new();
    for e in scan_entities(store, spec) {
        if !query.iter().all(|t| entity_has(&e, t)) {
            continue;
        }
        let mut score = 0.0;
        for t in query {
            for f in &e.fields {
                score += f.weight * count(f, t) as f64;
            }
        }
        let labels = e
            .fields
            .iter()
            .filter(|f| query.iter().any(|t| count(f, t) > 0))
            .map(|f| f.label.clone())
            .collect();
        hits.push((e.id, score, labels));
    }
    hits.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(cmp_ids(&a.0, &b.0)));
    hits
}

fn cmp_ids(a: &Value, b: &Value) -> std::cmp::Ordering {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.cmp(y),
        (Value::Text(x), Value::Text(y)) => x.as_bytes().cmp(y.as_bytes()),
        _ => panic!("unexpected id types"),
    }
}

/// All unigrams and within-row bigrams of an entity with total counts.
fn vocabulary(e: &ScanEntity) -> BTreeMap<String, u64> {
    let mut v = BTreeMap::new();
    for f in &e.fields {
        for row in &f.rows {
            for (i, w) in row.iter().enumerate() {
                *v.entry(w.clone()).or_insert(0) += 1;
                if i + 1 < row.len() {
                    *v.entry(format!("{w} {}", row[i + 1])).or_insert(0) += 1;
                }
            }
        }
    }
    v
}

fn eligible(key: &str) -> bool {
    key.split(' ').all(|w| !STOPWORDS.contains(&w))
}

/// `(term, weight, entity count)` of the top `k` cloud terms.
pub fn brute_cloud(
    store: &Store,
    spec: &EntitySpec,
    query: &[Term],
    k: usize,
) -> Vec<(String, f64, usize)> {
    let entities = scan_entities(store, spec);
    let n = entities.len();
    let vocabs: Vec<BTreeMap<String, u64>> = entities.iter().map(vocabulary).collect();
    let query_keys: BTreeSet<String> = query.iter().map(|t| t.join(" ")).collect();
    let mut tf: BTreeMap<String, (u64, usize)> = BTreeMap::new();
    for (e, vocab) in entities.iter().zip(&vocabs) {
        if !query.iter().all(|t| entity_has(e, t)) {
            continue;
        }
        for (key, c) in vocab {
            if eligible(key) && !query_keys.contains(key) {
                let slot = tf.entry(key.clone()).or_insert((0, 0));
                slot.0 += c;
                slot.1 += 1;
            }
        }
    }
    let mut terms: Vec<(String, f64, usize)> = tf
        .into_iter()
        .map(|(key, (sum, docs))| {
            let df = vocabs.iter().filter(|v| v.contains_key(&key)).count();
            let weight = sum as f64 * (1.0 + n as f64 / df as f64).ln();
            (key, weight, docs)
        })
        .collect();
    terms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    terms.truncate(k);
    terms
}
