use std::path::PathBuf;

use flexcloud::algebra::WorkflowAst;
use flexcloud::relstore::{load_schema, Store};
use flexcloud::search::EntitySpec;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/courserank")
}

pub fn fixture_store() -> Store {
    let dir = fixture_dir();
    let schema = load_schema(&std::fs::read_to_string(dir.join("schema.json")).unwrap()).unwrap();
    Store::ingest_dir(&schema, &dir).unwrap()
}

pub fn course_spec() -> EntitySpec {
    EntitySpec::from_json(
        &std::fs::read_to_string(fixture_dir().join("course.entity.json")).unwrap(),
    )
    .unwrap()
}

pub fn fixture_workflow(name: &str) -> WorkflowAst {
    let path = fixture_dir().join("workflows").join(format!("{name}.frx"));
    flexcloud::dsl::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}
