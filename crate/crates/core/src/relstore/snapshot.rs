//! JSON-lines snapshot of a [`Store`].
//!
//! ```text
//! {"flexcloud_snapshot":1}
//! {"columns":[{"name":"CourseID","type":"int"},...],"name":"Courses","primary_key":"CourseID","rows":5}
//! [1,"CS","Introduction to Programming",...]
//! ...
//! ```
//!
//! Every relation section is a header object whose `rows` field is the
//! number of tuple lines that follow.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::{ColumnDef, ColumnType, Relation, RelationDef, Store, StoreError, Value};

pub const SNAPSHOT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct Preamble {
    flexcloud_snapshot: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SectionHeader {
    columns: Vec<ColumnHeader>,
    name: String,
    primary_key: Option<String>,
    rows: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColumnHeader {
    name: String,
    #[serde(rename = "type")]
    ty: ColumnType,
}

pub fn snapshot_save<W: Write>(store: &Store, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer(
        &mut out,
        &Preamble {
            flexcloud_snapshot: SNAPSHOT_VERSION,
        },
    )?;
    out.write_all(b"\n")?;
    for rel in store.relations() {
        let header = SectionHeader {
            columns: rel
                .def
                .columns
                .iter()
                .map(|c| ColumnHeader {
                    name: c.name.clone(),
                    ty: c.ty,
                })
                .collect(),
            name: rel.def.name.clone(),
            primary_key: rel.def.primary_key.clone(),
            rows: rel.tuples.len(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for tuple in &rel.tuples {
            let row: Vec<Json> = tuple.iter().map(value_to_json).collect();
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()
}

fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Int(i) => Json::from(*i),
        Value::Float(f) => Json::from(*f),
        Value::Text(s) => Json::from(s.as_str()),
        // Base relations never hold maps.
        Value::RatingMap(_) => Json::Null,
    }
}

pub fn snapshot_load<R: BufRead>(input: R) -> Result<Store, StoreError> {
    let mut lines = input.lines().enumerate();
    let mut next_line = |expect: &str| -> Result<Option<(usize, String)>, StoreError> {
        match lines.next() {
            None => Ok(None),
            Some((i, Ok(line))) => Ok(Some((i + 1, line))),
            Some((i, Err(e))) => Err(StoreError::Snapshot {
                line: i + 1,
                message: format!("reading {expect}: {e}"),
            }),
        }
    };

    let (line, first) = next_line("preamble")?.ok_or(StoreError::Snapshot {
        line: 1,
        message: "empty snapshot".into(),
    })?;
    let preamble: Preamble = serde_json::from_str(&first).map_err(|e| StoreError::Snapshot {
        line,
        message: format!("bad preamble: {e}"),
    })?;
    if preamble.flexcloud_snapshot != SNAPSHOT_VERSION {
        return Err(StoreError::Snapshot {
            line,
            message: format!(
                "unsupported snapshot version {} (expected {SNAPSHOT_VERSION})",
                preamble.flexcloud_snapshot
            ),
        });
    }

    let mut relations = Vec::new();
    while let Some((line, text)) = next_line("relation header")? {
        let header: SectionHeader =
            serde_json::from_str(&text).map_err(|e| StoreError::Snapshot {
                line,
                message: format!("bad relation header: {e}"),
            })?;
        let def = RelationDef {
            name: header.name,
            columns: header
                .columns
                .into_iter()
                .map(|c| ColumnDef::new(c.name, c.ty))
                .collect(),
            primary_key: header.primary_key,
        };
        let mut tuples = Vec::with_capacity(header.rows.min(1 << 16));
        for _ in 0..header.rows {
            let (line, text) = next_line("tuple")?.ok_or_else(|| StoreError::Snapshot {
                line: line + tuples.len() + 1,
                message: format!(
                    "truncated: relation {} declares {} rows, found {}",
                    def.name,
                    header.rows,
                    tuples.len()
                ),
            })?;
            let row: Vec<Json> = serde_json::from_str(&text).map_err(|e| StoreError::Snapshot {
                line,
                message: format!("bad tuple in relation {}: {e}", def.name),
            })?;
            tuples.push(
                decode_row(&def, row).map_err(|message| StoreError::Snapshot { line, message })?,
            );
        }
        let rel = Relation::new(def, tuples).map_err(|e| StoreError::Snapshot {
            line,
            message: e.to_string(),
        })?;
        relations.push(rel);
    }
    Store::new(relations).map_err(|e| StoreError::Snapshot {
        line: 0,
        message: e.to_string(),
    })
}

fn decode_row(def: &RelationDef, row: Vec<Json>) -> Result<Vec<Value>, String> {
    if row.len() != def.columns.len() {
        return Err(format!(
            "relation {}: expected {} values, found {}",
            def.name,
            def.columns.len(),
            row.len()
        ));
    }
    row.into_iter()
        .zip(&def.columns)
        .map(|(json, col)| match (json, col.ty) {
            (Json::Null, _) => Ok(Value::Null),
            (Json::Number(n), ColumnType::Int) => n
                .as_i64()
                .map(Value::Int)
                .ok_or_else(|| format!("column {}: {n} is not an int", col.name)),
            (Json::Number(n), ColumnType::Float) => n
                .as_f64()
                .map(Value::Float)
                .ok_or_else(|| format!("column {}: {n} is not a float", col.name)),
            (Json::String(s), ColumnType::Text) => Ok(Value::Text(s)),
            (other, ty) => Err(format!("column {}: {other} is not {ty}", col.name)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Store {
        let def = RelationDef {
            name: "Students".into(),
            columns: vec![
                ColumnDef::new("SuID", ColumnType::Int),
                ColumnDef::new("Name", ColumnType::Text),
                ColumnDef::new("GPA", ColumnType::Float),
            ],
            primary_key: Some("SuID".into()),
        };
        let tuples = vec![
            vec![
                Value::Int(444),
                Value::Text("Dev \"D\" Patel\n".into()),
                Value::Float(3.5),
            ],
            vec![Value::Int(-1), Value::Null, Value::Float(0.1 + 0.2)],
            vec![
                Value::Int(7),
                Value::Text("ünïcode".into()),
                Value::Float(4.0),
            ],
        ];
        Store::new(vec![Relation::new(def, tuples).unwrap()]).unwrap()
    }

    fn save(store: &Store) -> Vec<u8> {
        let mut buf = Vec::new();
        snapshot_save(store, &mut buf).unwrap();
        buf
    }

    #[test]
    fn empty_store_round_trips() {
        let store = Store::default();
        let bytes = save(&store);
        assert_eq!(bytes, b"{\"flexcloud_snapshot\":1}\n");
        assert_eq!(snapshot_load(&bytes[..]).unwrap(), store);
    }

    #[test]
    fn round_trip_preserves_everything() {
        let store = sample();
        let loaded = snapshot_load(&save(&store)[..]).unwrap();
        assert_eq!(loaded, store);
    }

    #[test]
    fn corrupted_row_count_is_rejected() {
        let text = String::from_utf8(save(&sample())).unwrap();
        for bad in ["\"rows\":4", "\"rows\":2"] {
            let corrupted = text.replace("\"rows\":3", bad);
            assert!(matches!(
                snapshot_load(corrupted.as_bytes()),
                Err(StoreError::Snapshot { .. })
            ));
        }
    }

    #[test]
    fn truncation_and_version_are_rejected() {
        let bytes = save(&sample());
        let cut = &bytes[..bytes.len() - 20];
        let cut = &cut[..cut.iter().rposition(|b| *b == b'\n').unwrap() + 1];
        assert!(snapshot_load(cut).is_err());
        let text = String::from_utf8(bytes)
            .unwrap()
            .replace("snapshot\":1", "snapshot\":2");
        assert!(snapshot_load(text.as_bytes()).is_err());
        assert!(snapshot_load(&b""[..]).is_err());
    }
}
