use std::collections::HashSet;
use std::io::Read;

use super::{ColumnType, Relation, Schema, StoreError, Value};

/// Loads one relation from RFC 4180 CSV with a header row.
///
/// Header columns may appear in any order but must be exactly the
/// relation's columns. Empty cells become `Null`. Rows keep file order.
pub fn ingest_csv<R: Read>(
    schema: &Schema,
    relation_name: &str,
    csv: R,
) -> Result<Relation, StoreError> {
    let def = schema
        .relation(relation_name)
        .ok_or_else(|| StoreError::UnknownRelation(relation_name.to_string()))?;
    let fail = |row: usize, message: String| StoreError::Csv {
        relation: def.name.clone(),
        row,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(csv);

    let header = reader
        .headers()
        .map_err(|e| fail(0, e.to_string()))?
        .clone();
    let mut positions = Vec::with_capacity(header.len());
    let mut seen = HashSet::new();
    for name in header.iter() {
        let idx = def
            .column_index(name)
            .ok_or_else(|| fail(0, format!("unknown column {name:?}")))?;
        if !seen.insert(idx) {
            return Err(fail(0, format!("duplicate column {name:?}")));
        }
        positions.push(idx);
    }
    if positions.len() != def.columns.len() {
        let missing: Vec<&str> = def
            .columns
            .iter()
            .enumerate()
            .filter(|(i, _)| !seen.contains(i))
            .map(|(_, c)| c.name.as_str())
            .collect();
        return Err(fail(0, format!("missing columns {missing:?}")));
    }

    let pk = def.primary_key_index();
    let mut keys = HashSet::new();
    let mut tuples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| fail(row, e.to_string()))?;
        if record.len() != positions.len() {
            return Err(fail(
                row,
                format!(
                    "expected {} fields, found {}",
                    positions.len(),
                    record.len()
                ),
            ));
        }
        let mut tuple = vec![Value::Null; def.columns.len()];
        for (cell, &idx) in record.iter().zip(&positions) {
            let col = &def.columns[idx];
            tuple[idx] = parse_cell(cell, col.ty)
                .map_err(|m| fail(row, format!("column {}: {m}", col.name)))?;
        }
        if let Some(k) = pk {
            match &tuple[k] {
                Value::Null => return Err(fail(row, "empty primary key".into())),
                key => {
                    if !keys.insert(key.to_string()) {
                        return Err(fail(row, format!("duplicate primary key {key}")));
                    }
                }
            }
        }
        tuples.push(tuple);
    }
    Relation::new(def.clone(), tuples)
}

fn parse_cell(cell: &str, ty: ColumnType) -> Result<Value, String> {
    if cell.is_empty() {
        return Ok(Value::Null);
    }
    match ty {
        ColumnType::Text => Ok(Value::Text(cell.to_string())),
        ColumnType::Int => cell
            .trim()
            .parse::<i64>()
            .map(Value::Int)
            .map_err(|_| format!("cannot parse {cell:?} as int")),
        ColumnType::Float => match cell.trim().parse::<f64>() {
            Ok(f) if f.is_finite() => Ok(Value::Float(f)),
            _ => Err(format!("cannot parse {cell:?} as a finite float")),
        },
        ColumnType::RatingMap => Err("map columns cannot be ingested".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relstore::load_schema;

    fn schema() -> Schema {
        load_schema(
            r#"{"relations":[{"name":"Courses","primary_key":"CourseID","columns":[
                {"name":"CourseID","type":"int"},{"name":"Title","type":"text"},
                {"name":"Units","type":"float"}]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn header_only() {
        let rel = ingest_csv(&schema(), "Courses", "CourseID,Title,Units\n".as_bytes()).unwrap();
        assert!(rel.is_empty());
    }

    #[test]
    fn columns_in_any_order_and_nulls() {
        let data = "Title,Units,CourseID\n\"Intro, with comma\",,7\n";
        let rel = ingest_csv(&schema(), "Courses", data.as_bytes()).unwrap();
        assert_eq!(
            rel.tuples[0],
            vec![
                Value::Int(7),
                Value::Text("Intro, with comma".into()),
                Value::Null
            ]
        );
    }

    #[test]
    fn integral_grades_are_floats() {
        let rel = ingest_csv(
            &schema(),
            "Courses",
            "CourseID,Title,Units\n1,a,4\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(rel.tuples[0][2], Value::Float(4.0));
    }

    #[test]
    fn duplicate_key_reports_row() {
        let data = "CourseID,Title,Units\n2,a,1\n1,b,1\n3,c,1\n1,d,1\n";
        let err = ingest_csv(&schema(), "Courses", data.as_bytes()).unwrap_err();
        assert!(matches!(err, StoreError::Csv { row: 4, .. }), "{err}");
    }

    #[test]
    fn arity_and_parse_errors() {
        let err = ingest_csv(
            &schema(),
            "Courses",
            "CourseID,Title,Units\n1,a\n".as_bytes(),
        )
        .unwrap_err();
        assert!(matches!(err, StoreError::Csv { row: 1, .. }));
        let err = ingest_csv(
            &schema(),
            "Courses",
            "CourseID,Title,Units\nx,a,1\n".as_bytes(),
        )
        .unwrap_err();
        assert!(matches!(err, StoreError::Csv { row: 1, .. }));
        let err = ingest_csv(
            &schema(),
            "Courses",
            "CourseID,Title,Units\n1,a,NaN\n".as_bytes(),
        )
        .unwrap_err();
        assert!(matches!(err, StoreError::Csv { row: 1, .. }));
    }

    #[test]
    fn header_errors() {
        let err = ingest_csv(&schema(), "Courses", "CourseID,Title\n".as_bytes()).unwrap_err();
        assert!(matches!(err, StoreError::Csv { row: 0, .. }));
        let err =
            ingest_csv(&schema(), "Courses", "CourseID,Title,Units,X\n".as_bytes()).unwrap_err();
        assert!(matches!(err, StoreError::Csv { row: 0, .. }));
    }
}
