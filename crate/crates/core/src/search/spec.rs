use serde::{Deserialize, Serialize};

use crate::relstore::{ColumnType, Schema};

use super::SearchError;

/// A text column contributing to an entity, with its ranking weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "(String, f64)", into = "(String, f64)")]
pub struct FieldSpec {
    pub column: String,
    pub weight: f64,
}

impl FieldSpec {
    pub fn new(column: impl Into<String>, weight: f64) -> Self {
        Self {
            column: column.into(),
            weight,
        }
    }
}

impl From<(String, f64)> for FieldSpec {
    fn from((column, weight): (String, f64)) -> Self {
        Self { column, weight }
    }
}

impl From<FieldSpec> for (String, f64) {
    fn from(f: FieldSpec) -> Self {
        (f.column, f.weight)
    }
}

/// A relation joined to the root whose rows contribute text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartSpec {
    pub relation: String,
    /// `(root column, part column)`.
    pub join: (String, String),
    pub fields: Vec<FieldSpec>,
}

/// Declaration of a searchable entity spanning several relations.
///
/// The root relation's primary key identifies each entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntitySpec {
    pub name: String,
    pub root: String,
    pub root_fields: Vec<FieldSpec>,
    #[serde(default)]
    pub parts: Vec<PartSpec>,
}

impl EntitySpec {
    pub fn from_json(text: &str) -> Result<Self, SearchError> {
        serde_json::from_str(text)
            .map_err(|e| SearchError::Spec(format!("malformed entity spec: {e}")))
    }

    /// The course entity: title and description of `Courses` plus the text
    /// of every joined `Comments` row.
    pub fn default_course() -> Self {
        Self {
            name: "course".into(),
            root: "Courses".into(),
            root_fields: vec![
                FieldSpec::new("Title", 3.0),
                FieldSpec::new("Description", 2.0),
            ],
            parts: vec![PartSpec {
                relation: "Comments".into(),
                join: ("CourseID".into(), "CourseID".into()),
                fields: vec![FieldSpec::new("Text", 1.0)],
            }],
        }
    }

    /// Field labels in index order: root columns by name, part columns as
    /// `Relation.Column`.
    pub fn field_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.root_fields.iter().map(|f| f.column.clone()).collect();
        for part in &self.parts {
            for f in &part.fields {
                labels.push(format!("{}.{}", part.relation, f.column));
            }
        }
        labels
    }

    pub fn validate(&self, schema: &Schema) -> Result<(), SearchError> {
        let spec_err = |m: String| Err(SearchError::Spec(format!("entity {}: {m}", self.name)));
        let Some(root) = schema.relation(&self.root) else {
            return spec_err(format!("unknown relation {:?}", self.root));
        };
        if root.primary_key_index().is_none() {
            return spec_err(format!("root relation {} has no primary key", root.name));
        }
        let check_fields = |rel: &crate::relstore::RelationDef, fields: &[FieldSpec]| {
            for f in fields {
                match rel.column(&f.column) {
                    None => return Err(format!("unknown column {:?} in {}", f.column, rel.name)),
                    Some(c) if c.ty != ColumnType::Text => {
                        return Err(format!("column {}.{} is not text", rel.name, f.column))
                    }
                    Some(_) => {}
                }
                if !(f.weight > 0.0 && f.weight.is_finite()) {
                    return Err(format!(
                        "field {}.{} has non-positive weight {}",
                        rel.name, f.column, f.weight
                    ));
                }
            }
            Ok(())
        };
        if let Err(m) = check_fields(root, &self.root_fields) {
            return spec_err(m);
        }
        for part in &self.parts {
            let Some(rel) = schema.relation(&part.relation) else {
                return spec_err(format!("unknown relation {:?}", part.relation));
            };
            let (root_col, part_col) = &part.join;
            let (Some(rc), Some(pc)) = (root.column(root_col), rel.column(part_col)) else {
                return spec_err(format!(
                    "join columns {}.{root_col} = {}.{part_col} do not exist",
                    root.name, rel.name
                ));
            };
            if rc.ty != pc.ty || rc.ty == ColumnType::RatingMap {
                return spec_err(format!(
                    "join columns {}.{root_col} ({}) and {}.{part_col} ({}) differ in type",
                    root.name, rc.ty, rel.name, pc.ty
                ));
            }
            if let Err(m) = check_fields(rel, &part.fields) {
                return spec_err(m);
            }
        }
        let labels = self.field_labels();
        if labels.is_empty() {
            return spec_err("no fields".into());
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return spec_err(format!("field {l} listed twice"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_json() {
        let text = r#"{"name":"course","root":"Courses","root_fields":[["Title",3.0],["Description",2.0]],"parts":[{"relation":"Comments","join":["CourseID","CourseID"],"fields":[["Text",1.0]]}]}"#;
        let spec = EntitySpec::from_json(text).unwrap();
        assert_eq!(spec, EntitySpec::default_course());
        assert_eq!(
            spec.field_labels(),
            ["Title", "Description", "Comments.Text"]
        );
    }

    #[test]
    fn malformed_json_is_spec_error() {
        assert!(matches!(
            EntitySpec::from_json("{\"name\": 1}"),
            Err(SearchError::Spec(_))
        ));
    }
}
