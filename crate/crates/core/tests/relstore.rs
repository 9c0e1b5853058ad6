mod common;

use flexcloud::relstore::{
    ingest_csv, load_schema, snapshot_load, snapshot_save, Store, StoreError, Value,
};

/// Splits one CSV record, honouring double quotes.
fn split_record(line: &str) -> Vec<String> {
    let mut fields = vec![String::new()];
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                chars.next();
                fields.last_mut().unwrap().push('"');
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(String::new()),
            c => fields.last_mut().unwrap().push(c),
        }
    }
    fields
}

#[test]
fn fixture_schema_has_three_relations() {
    let schema = common::schema();
    let names: Vec<&str> = schema.relations.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["Courses", "Students", "Comments"]);
    let students = schema.relation("Students").unwrap();
    let cols: Vec<&str> = students.columns.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(cols, ["SuID", "Name", "Class", "GPA"]);
    assert_eq!(students.primary_key.as_deref(), Some("SuID"));
}

#[test]
fn unknown_primary_key_names_relation_and_column() {
    let err = load_schema(
        r#"{"relations":[{"name":"Courses","primary_key":"Nope","columns":[{"name":"CourseID","type":"int"}]}]}"#,
    )
    .unwrap_err();
    let text = err.to_string();
    assert!(matches!(err, StoreError::Schema { .. }));
    assert!(text.contains("Courses") && text.contains("Nope"), "{text}");
}

#[test]
fn courses_match_an_independent_reader() {
    let raw = common::read("Courses.csv");
    let mut lines = raw.lines();
    let header = split_record(lines.next().unwrap());
    let records: Vec<Vec<String>> = lines.map(split_record).collect();

    let schema = common::schema();
    let rel = ingest_csv(&schema, "Courses", raw.as_bytes()).unwrap();
    assert_eq!(rel.tuples.len(), 5);
    for (tuple, record) in rel.tuples.iter().zip(&records) {
        for (name, cell) in header.iter().zip(record) {
            let got = &tuple[rel.column_index(name).unwrap()];
            let want = match (name.as_str(), cell.as_str()) {
                (_, "") => Value::Null,
                ("CourseID" | "Units", n) => Value::Int(n.parse().unwrap()),
                (_, s) => Value::Text(s.to_string()),
            };
            assert_eq!(got, &want, "{name}");
        }
    }
}

#[test]
fn duplicate_key_is_reported_at_its_row() {
    let csv = "CourseID,Title\n1,a\n2,b\n3,c\n1,d\n";
    let schema = load_schema(
        r#"{"relations":[{"name":"Courses","primary_key":"CourseID","columns":[
            {"name":"CourseID","type":"int"},{"name":"Title","type":"text"}]}]}"#,
    )
    .unwrap();
    match ingest_csv(&schema, "Courses", csv.as_bytes()) {
        Err(StoreError::Csv { row, .. }) => assert_eq!(row, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn ingestion_is_deterministic() {
    assert_eq!(common::store(), common::store());
}

#[test]
fn fixture_snapshot_round_trips() {
    let store = common::store();
    let mut bytes = Vec::new();
    snapshot_save(&store, &mut bytes).unwrap();
    let back = snapshot_load(bytes.as_slice()).unwrap();
    assert_eq!(back, store);

    let mut again = Vec::new();
    snapshot_save(&back, &mut again).unwrap();
    assert_eq!(again, bytes);
}

#[test]
fn snapshot_with_corrupted_header_is_rejected() {
    let mut bytes = Vec::new();
    snapshot_save(&common::store(), &mut bytes).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    let first_count = text.find("\"rows\":").expect("row count in header");
    let corrupted = format!(
        "{}\"rows\":999{}",
        &text[..first_count],
        text[first_count + 7..].trim_start_matches(|c: char| c.is_ascii_digit())
    );
    assert!(matches!(
        snapshot_load(corrupted.as_bytes()),
        Err(StoreError::Snapshot { .. })
    ));
    let truncated = &text[..text.len() / 2];
    assert!(snapshot_load(truncated.as_bytes()).is_err());
}

#[test]
fn empty_store_round_trips() {
    let store = Store::new(Vec::new()).unwrap();
    let mut bytes = Vec::new();
    snapshot_save(&store, &mut bytes).unwrap();
    assert_eq!(snapshot_load(bytes.as_slice()).unwrap(), store);
}
