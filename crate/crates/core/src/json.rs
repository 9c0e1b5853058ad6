//! JSON encoding of [`Value`]s: numbers, strings and `null`; rating maps
//! as their canonical text.

use serde::Serializer;

use crate::relstore::Value;
use crate::sql::canonical_map_text;

pub fn serialize_value<S: Serializer>(value: &Value, s: S) -> Result<S::Ok, S::Error> {
    match value {
        Value::Null => s.serialize_none(),
        Value::Int(i) => s.serialize_i64(*i),
        Value::Float(f) => s.serialize_f64(*f),
        Value::Text(t) => s.serialize_str(t),
        Value::RatingMap(m) => s.serialize_str(&canonical_map_text(m)),
    }
}

/// Converts a value to a `serde_json::Value`.
pub fn to_json(value: &Value) -> serde_json::Value {
    serialize_value(value, serde_json::value::Serializer).expect("values always serialize")
}
