use serde::Deserialize;

use super::value::ColumnType;
use super::StoreError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDef {
    pub name: String,
    pub ty: ColumnType,
}

impl ColumnDef {
    pub fn new(name: impl Into<String>, ty: ColumnType) -> Self {
        Self {
            name: name.into(),
            ty,
        }
    }
}

/// Name, columns and key of a relation.
///
/// Base relations always carry a primary key. Derived relations produced
/// by the algebra may lose it (a join, or a projection that drops it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub primary_key: Option<String>,
}

impl RelationDef {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn primary_key_index(&self) -> Option<usize> {
        self.primary_key
            .as_deref()
            .and_then(|pk| self.column_index(pk))
    }

    /// Whether `name` clashes with an existing column. Names are compared
    /// ASCII case-insensitively because SQL identifiers are.
    pub fn has_column_like(&self, name: &str) -> bool {
        self.columns
            .iter()
            .any(|c| c.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    pub relations: Vec<RelationDef>,
}

impl Schema {
    pub fn relation(&self, name: &str) -> Option<&RelationDef> {
        self.relations.iter().find(|r| r.name == name)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaDoc {
    relations: Vec<RelationDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationDoc {
    name: String,
    primary_key: String,
    columns: Vec<ColumnDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ColumnDoc {
    name: String,
    #[serde(rename = "type")]
    ty: String,
}

/// Identifiers start with an ASCII letter, continue with letters, digits
/// or underscores. Leading underscores are reserved for engine columns.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses and validates a schema JSON document.
pub fn load_schema(document: &str) -> Result<Schema, StoreError> {
    let doc: SchemaDoc = serde_json::from_str(document).map_err(|e| StoreError::Parse {
        relation: None,
        message: e.to_string(),
    })?;

    let mut relations: Vec<RelationDef> = Vec::with_capacity(doc.relations.len());
    for rel in doc.relations {
        let err = |message: String| StoreError::Schema {
            relation: rel.name.clone(),
            message,
        };
        if !is_identifier(&rel.name) {
            return Err(err(format!("invalid relation name {:?}", rel.name)));
        }
        if relations
            .iter()
            .any(|r| r.name.eq_ignore_ascii_case(&rel.name))
        {
            return Err(err("duplicate relation name".into()));
        }
        let mut columns: Vec<ColumnDef> = Vec::with_capacity(rel.columns.len());
        for col in &rel.columns {
            if !is_identifier(&col.name) {
                return Err(err(format!("invalid column name {:?}", col.name)));
            }
            if columns
                .iter()
                .any(|c| c.name.eq_ignore_ascii_case(&col.name))
            {
                return Err(err(format!("duplicate column {:?}", col.name)));
            }
            let ty = match col.ty.as_str() {
                "int" => ColumnType::Int,
                "float" => ColumnType::Float,
                "text" => ColumnType::Text,
                other => {
                    return Err(err(format!(
                        "column {:?} has unknown type {other:?}",
                        col.name
                    )))
                }
            };
            columns.push(ColumnDef::new(col.name.clone(), ty));
        }
        match columns.iter().find(|c| c.name == rel.primary_key) {
            None => {
                return Err(err(format!(
                    "primary key {:?} is not a column",
                    rel.primary_key
                )))
            }
            Some(c) if c.ty == ColumnType::Float => {
                return Err(err(format!(
                    "primary key {:?} must be int or text",
                    rel.primary_key
                )))
            }
            Some(_) => {}
        }
        relations.push(RelationDef {
            name: rel.name,
            columns,
            primary_key: Some(rel.primary_key),
        });
    }
    Ok(Schema { relations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document() {
        let schema = load_schema(r#"{"relations":[]}"#).unwrap();
        assert!(schema.relations.is_empty());
    }

    #[test]
    fn rejects_unknown_primary_key() {
        let doc = r#"{"relations":[{"name":"Courses","primary_key":"Nope",
            "columns":[{"name":"CourseID","type":"int"}]}]}"#;
        match load_schema(doc) {
            Err(StoreError::Schema { relation, message }) => {
                assert_eq!(relation, "Courses");
                assert!(message.contains("Nope"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_relation_and_column() {
        let doc = r#"{"relations":[
            {"name":"A","primary_key":"x","columns":[{"name":"x","type":"int"}]},
            {"name":"a","primary_key":"x","columns":[{"name":"x","type":"int"}]}]}"#;
        assert!(matches!(load_schema(doc), Err(StoreError::Schema { .. })));

        let doc = r#"{"relations":[{"name":"A","primary_key":"x",
            "columns":[{"name":"x","type":"int"},{"name":"X","type":"text"}]}]}"#;
        assert!(matches!(load_schema(doc), Err(StoreError::Schema { .. })));
    }

    #[test]
    fn rejects_float_key_and_bad_type() {
        let doc = r#"{"relations":[{"name":"A","primary_key":"x",
            "columns":[{"name":"x","type":"float"}]}]}"#;
        assert!(matches!(load_schema(doc), Err(StoreError::Schema { .. })));
        let doc = r#"{"relations":[{"name":"A","primary_key":"x",
            "columns":[{"name":"x","type":"blob"}]}]}"#;
        assert!(matches!(load_schema(doc), Err(StoreError::Schema { .. })));
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(
            load_schema("{\"relations\": ["),
            Err(StoreError::Parse { .. })
        ));
    }

    #[test]
    fn identifier_rule() {
        assert!(is_identifier("SuID"));
        assert!(is_identifier("a_1"));
        assert!(!is_identifier("_score"));
        assert!(!is_identifier("1abc"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("a-b"));
    }
}
