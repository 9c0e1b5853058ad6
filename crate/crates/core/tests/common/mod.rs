#![allow(dead_code)]

use std::path::PathBuf;

use flexcloud::algebra::WorkflowAst;
use flexcloud::relstore::{load_schema, Relation, Schema, Store, Value};
use flexcloud::search::{EntitySpec, SearchIndex};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/courserank")
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(name)).unwrap()
}

pub fn schema() -> Schema {
    load_schema(&read("schema.json")).unwrap()
}

pub fn store() -> Store {
    Store::ingest_dir(&schema(), &fixture_dir()).unwrap()
}

pub fn index() -> SearchIndex {
    SearchIndex::build(
        &store(),
        &EntitySpec::from_json(&read("course.entity.json")).unwrap(),
    )
    .unwrap()
}

pub fn workflow(name: &str) -> WorkflowAst {
    flexcloud::dsl::parse(&read(&format!("workflows/{name}.frx"))).unwrap()
}

pub fn column<'a>(rel: &'a Relation, name: &str) -> Vec<&'a Value> {
    let i = rel.column_index(name).unwrap();
    rel.tuples.iter().map(|t| &t[i]).collect()
}

pub fn ints(rel: &Relation, name: &str) -> Vec<i64> {
    column(rel, name)
        .into_iter()
        .map(|v| match v {
            Value::Int(i) => *i,
            other => panic!("not an int: {other:?}"),
        })
        .collect()
}

pub fn floats(rel: &Relation, name: &str) -> Vec<f64> {
    column(rel, name)
        .into_iter()
        .map(|v| match v {
            Value::Float(f) => *f,
            other => panic!("not a float: {other:?}"),
        })
        .collect()
}
