//! Runs compiled scripts on SQLite, playing the host engine: base tables
//! with an `_ord` column and the three similarity functions registered.

use flexcloud::relstore::{ColumnType, Relation, RelationDef, Store, Tuple, Value};
use flexcloud::sql::{canonical_map_text, parse_map_text, SqlScript, ORDER_COLUMN};
use flexcloud::textkit::{sim_inv_euclidean, sim_jaccard, sim_pearson, tokenize};
use rusqlite::functions::{Context, FunctionFlags};
use rusqlite::types::{Value as SqlValue, ValueRef};
use rusqlite::Connection;

pub struct SqlHost {
    conn: Connection,
}

fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

fn sql_type(ty: ColumnType) -> &'static str {
    match ty {
        ColumnType::Int => "INTEGER",
        ColumnType::Float => "REAL",
        ColumnType::Text | ColumnType::RatingMap => "TEXT",
    }
}

fn to_sql(v: &Value) -> SqlValue {
    match v {
        Value::Null => SqlValue::Null,
        Value::Int(i) => SqlValue::Integer(*i),
        Value::Float(f) => SqlValue::Real(*f),
        Value::Text(s) => SqlValue::Text(s.clone()),
        Value::RatingMap(m) => SqlValue::Text(canonical_map_text(m)),
    }
}

fn text_arg(ctx: &Context<'_>, i: usize) -> rusqlite::Result<String> {
    Ok(match ctx.get_raw(i) {
        ValueRef::Null => String::new(),
        ValueRef::Text(t) => String::from_utf8_lossy(t).into_owned(),
        other => {
            return Err(rusqlite::Error::InvalidFunctionParameterType(
                i,
                other.data_type(),
            ))
        }
    })
}

fn register(conn: &Connection) -> rusqlite::Result<()> {
    let flags = FunctionFlags::SQLITE_UTF8 | FunctionFlags::SQLITE_DETERMINISTIC;
    conn.create_scalar_function("sim_jaccard", 2, flags, |ctx| {
        let a = tokenize(&text_arg(ctx, 0)?);
        let b = tokenize(&text_arg(ctx, 1)?);
        Ok(sim_jaccard(&a, &b))
    })?;
    type MapFn = fn(&flexcloud::relstore::RatingMap, &flexcloud::relstore::RatingMap) -> f64;
    for (name, f) in [
        ("sim_pearson", sim_pearson as MapFn),
        ("sim_inv_euclidean", sim_inv_euclidean as MapFn),
    ] {
        conn.create_scalar_function(name, 2, flags, move |ctx| {
            let parse = |i| {
                parse_map_text(&text_arg(ctx, i)?)
                    .map_err(|e| rusqlite::Error::UserFunctionError(Box::new(e)))
            };
            Ok(f(&parse(0)?, &parse(1)?))
        })?;
    }
    Ok(())
}

impl SqlHost {
    /// An in-memory database holding `store`.
    pub fn load(store: &Store) -> rusqlite::Result<Self> {
        let conn = Connection::open_in_memory()?;
        register(&conn)?;
        for rel in store.relations() {
            let mut cols: Vec<String> = rel
                .def
                .columns
                .iter()
                .map(|c| format!("{} {}", quote(&c.name), sql_type(c.ty)))
                .collect();
            cols.push(format!("{} INTEGER", quote(ORDER_COLUMN)));
            conn.execute_batch(&format!(
                "CREATE TABLE {} ({})",
                quote(&rel.def.name),
                cols.join(", ")
            ))?;
            let marks = vec!["?"; rel.def.columns.len() + 1].join(", ");
            let tx = conn.unchecked_transaction()?;
            {
                let mut stmt = tx.prepare(&format!(
                    "INSERT INTO {} VALUES ({marks})",
                    quote(&rel.def.name)
                ))?;
                for (i, t) in rel.tuples.iter().enumerate() {
                    let mut vals: Vec<SqlValue> = t.iter().map(to_sql).collect();
                    vals.push(SqlValue::Integer(i as i64 + 1));
                    stmt.execute(rusqlite::params_from_iter(vals))?;
                }
            }
            tx.commit()?;
        }
        Ok(SqlHost { conn })
    }

    /// Executes `script` and reads the final `SELECT` as a relation shaped
    /// like `output`. Temporary tables are dropped afterwards.
    pub fn run(&self, script: &SqlScript, output: &RelationDef) -> Result<Relation, String> {
        let result = self.run_inner(script, output);
        for t in &script.temp_objects {
            let _ = self
                .conn
                .execute_batch(&format!("DROP TABLE IF EXISTS temp.{}", quote(t)));
        }
        result
    }

    fn run_inner(&self, script: &SqlScript, output: &RelationDef) -> Result<Relation, String> {
        let (last, setup) = script.statements.split_last().ok_or("empty script")?;
        for s in setup {
            self.conn
                .execute_batch(s)
                .map_err(|e| format!("{e}\n  in: {s}"))?;
        }
        let mut stmt = self.conn.prepare(last).map_err(|e| e.to_string())?;
        let mut rows = stmt.query([]).map_err(|e| e.to_string())?;
        let mut tuples: Vec<Tuple> = Vec::new();
        while let Some(row) = rows.next().map_err(|e| e.to_string())? {
            let mut t = Vec::with_capacity(output.columns.len());
            for (i, c) in output.columns.iter().enumerate() {
                let raw = row.get_ref(i).map_err(|e| e.to_string())?;
                t.push(from_sql(raw, c.ty).map_err(|e| format!("column {}: {e}", c.name))?);
            }
            tuples.push(t);
        }
        Ok(Relation {
            def: output.clone(),
            tuples,
        })
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }
}

fn from_sql(raw: ValueRef<'_>, ty: ColumnType) -> Result<Value, String> {
    Ok(match (raw, ty) {
        (ValueRef::Null, ColumnType::RatingMap) => Value::RatingMap(Default::default()),
        (ValueRef::Null, _) => Value::Null,
        (ValueRef::Integer(i), ColumnType::Int) => Value::Int(i),
        (ValueRef::Integer(i), ColumnType::Float) => Value::Float(i as f64),
        (ValueRef::Real(f), ColumnType::Float) => Value::Float(f),
        (ValueRef::Text(t), ColumnType::Text) => {
            Value::Text(String::from_utf8_lossy(t).into_owned())
        }
        (ValueRef::Text(t), ColumnType::RatingMap) => Value::RatingMap(
            parse_map_text(&String::from_utf8_lossy(t)).map_err(|e| e.to_string())?,
        ),
        (other, ty) => return Err(format!("{:?} value for {ty} column", other.data_type())),
    })
}
