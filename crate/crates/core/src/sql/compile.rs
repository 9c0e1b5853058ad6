use std::fmt::Write as _;
use std::str::FromStr;

use crate::algebra::{
    bind_args, extend_schema, join_schema, project_schema, recommend_schema, resolve,
    select_schema, validate, Agg, Args, Literal, Node, Operand, ParamTypes, Predicate,
    RecommendMode, Resolved, WorkflowAst, SCORE_COLUMN,
};
use crate::relstore::{RelationDef, Schema};

use super::maptext::format_float;
use super::SqlError;

/// Row-position column present in every table the script reads or creates.
pub const ORDER_COLUMN: &str = "_ord";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dialect {
    /// ANSI SQL with window functions and temporary tables, plus the
    /// `group_concat(... ORDER BY ...)` and `printf` built-ins for map text.
    #[default]
    Ansi,
}

impl FromStr for Dialect {
    type Err = SqlError;

    fn from_str(s: &str) -> Result<Self, SqlError> {
        match s.to_ascii_lowercase().as_str() {
            "ansi" => Ok(Dialect::Ansi),
            other => Err(SqlError::UnsupportedDialect(other.to_string())),
        }
    }
}

/// Ordered SQL statements equivalent to a workflow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlScript {
    pub statements: Vec<String>,
    /// Temporary tables created, in creation order.
    pub temp_objects: Vec<String>,
    /// Scalar functions the host must register, in first-use order.
    pub required_udfs: Vec<String>,
}

impl SqlScript {
    /// The script as one `.sql` file with `-- statement N` separators.
    pub fn to_sql_text(&self) -> String {
        let mut out = String::new();
        if !self.required_udfs.is_empty() {
            let _ = writeln!(out, "-- requires: {}", self.required_udfs.join(", "));
        }
        for (i, s) in self.statements.iter().enumerate() {
            let _ = writeln!(out, "-- statement {}", i + 1);
            let _ = writeln!(out, "{s};");
        }
        out
    }
}

/// Compiles `ast` with `args` inlined. The final statement is a `SELECT`
/// of the output columns ordered by `_ord`.
pub fn compile(
    ast: &WorkflowAst,
    schema: &Schema,
    args: &Args,
    dialect: Dialect,
) -> Result<SqlScript, SqlError> {
    let Dialect::Ansi = dialect;
    let validated = validate(ast, schema)?;
    let args = bind_args(ast, args)?;
    let params: ParamTypes = args
        .iter()
        .map(|(k, v)| (k.clone(), v.column_type()))
        .collect();

    let mut c = Compiler {
        ast,
        schema,
        args: &args,
        params: &params,
        pos: 0,
        bound: Vec::new(),
        script: SqlScript {
            statements: Vec::new(),
            temp_objects: Vec::new(),
            required_udfs: Vec::new(),
        },
    };
    for (pos, binding) in ast.bindings.iter().enumerate() {
        c.pos = pos;
        let table = c.node(&binding.expr)?;
        c.bound.push(table);
    }
    let out = c.bound.last().expect("validated");
    debug_assert_eq!(out.def.columns, validated.output().columns);
    let select = format!(
        "SELECT {} FROM {} ORDER BY {}",
        column_list(&out.def, None),
        out.name,
        ident(ORDER_COLUMN)
    );
    c.script.statements.push(select);
    Ok(c.script)
}

/// An SQL table (base or temporary) with the given columns plus `_ord`.
#[derive(Debug, Clone)]
struct Table {
    name: String,
    def: RelationDef,
}

struct Compiler<'a> {
    ast: &'a WorkflowAst,
    schema: &'a Schema,
    args: &'a Args,
    params: &'a ParamTypes,
    pos: usize,
    bound: Vec<Table>,
    script: SqlScript,
}

pub(crate) fn ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

fn literal(l: &Literal) -> String {
    match l {
        Literal::Int(i) => i.to_string(),
        Literal::Float(f) => {
            let s = format_float(*f);
            // Keep it a real literal.
            if s.contains(['.', 'e']) {
                s
            } else {
                format!("{s}.0")
            }
        }
        Literal::Text(s) => format!("'{}'", s.replace('\'', "''")),
    }
}

fn column_list(def: &RelationDef, alias: Option<&str>) -> String {
    def.columns
        .iter()
        .map(|c| qualified(alias, &c.name))
        .collect::<Vec<_>>()
        .join(", ")
}

fn qualified(alias: Option<&str>, column: &str) -> String {
    match alias {
        Some(a) => format!("{a}.{}", ident(column)),
        None => ident(column),
    }
}

fn agg_function(agg: Agg) -> &'static str {
    match agg {
        Agg::Max => "MAX",
        Agg::Mean => "AVG",
        Agg::Sum => "SUM",
    }
}

impl Compiler<'_> {
    fn temp(&mut self, def: RelationDef, select: String) -> Table {
        let raw = format!(
            "{}__{}__{}",
            self.ast.name,
            self.ast.bindings[self.pos].name,
            self.script.temp_objects.len() + 1
        );
        let name = ident(&raw);
        self.script
            .statements
            .push(format!("CREATE TEMPORARY TABLE {name} AS {select}"));
        self.script.temp_objects.push(raw);
        Table { name, def }
    }

    fn predicate(&self, predicate: &Predicate) -> String {
        predicate
            .conjuncts
            .iter()
            .map(|c| {
                let value = match &c.operand {
                    Operand::Literal(l) => literal(l),
                    Operand::Param(p) => literal(&self.args[p]),
                };
                format!("{} {} {value}", ident(&c.column), c.op.symbol())
            })
            .collect::<Vec<_>>()
            .join(" AND ")
    }

    fn node(&mut self, node: &Node) -> Result<Table, SqlError> {
        match node {
            Node::Ref(name) => Ok(match resolve(self.ast, self.pos, name, self.schema)? {
                Resolved::Binding(i) => self.bound[i].clone(),
                Resolved::Base(def) => Table {
                    name: ident(&def.name),
                    def: def.clone(),
                },
            }),
            Node::Select { input, predicate } => {
                let src = self.node(input)?;
                let def = select_schema(&src.def, predicate, self.params)?;
                let mut sql = format!(
                    "SELECT {}, {} FROM {}",
                    column_list(&def, None),
                    ident(ORDER_COLUMN),
                    src.name
                );
                if !predicate.conjuncts.is_empty() {
                    let _ = write!(sql, " WHERE {}", self.predicate(predicate));
                }
                Ok(self.temp(def, sql))
            }
            Node::Project { input, columns } => {
                let src = self.node(input)?;
                let def = project_schema(&src.def, columns)?;
                let sql = format!(
                    "SELECT {}, {} FROM {}",
                    column_list(&def, None),
                    ident(ORDER_COLUMN),
                    src.name
                );
                Ok(self.temp(def, sql))
            }
            Node::Join {
                left,
                right,
                left_col,
                right_col,
            } => {
                let l = self.node(left)?;
                let r = self.node(right)?;
                let layout = join_schema(&l.def, &r.def, left_col, right_col)?;
                let mut cols: Vec<String> = l
                    .def
                    .columns
                    .iter()
                    .map(|c| format!("l.{0} AS {0}", ident(&c.name)))
                    .collect();
                for (i, out_name) in &layout.right_columns {
                    cols.push(format!(
                        "r.{} AS {}",
                        ident(&r.def.columns[*i].name),
                        ident(out_name)
                    ));
                }
                let ord = ident(ORDER_COLUMN);
                let sql = format!(
                    "SELECT {}, ROW_NUMBER() OVER (ORDER BY l.{ord}, r.{ord}) AS {ord} \
                     FROM {} AS l JOIN {} AS r ON l.{} = r.{}",
                    cols.join(", "),
                    l.name,
                    r.name,
                    ident(left_col),
                    ident(right_col)
                );
                Ok(self.temp(layout.def, sql))
            }
            Node::Extend {
                input,
                source,
                group_key,
                name,
                key_col,
                value_col,
            } => {
                let a = self.node(input)?;
                let b = self.node(source)?;
                let layout = extend_schema(&a.def, &b.def, group_key, name, key_col, value_col)?;
                let (g, k, v) = (ident(group_key), ident(key_col), ident(value_col));
                let ord = ident(ORDER_COLUMN);
                // Latest row per (group, key) wins; maps are rendered in
                // ascending key order.
                let latest = format!(
                    "SELECT b.{g} AS g, b.{k} AS k, CAST(b.{v} AS REAL) AS v, \
                     ROW_NUMBER() OVER (PARTITION BY b.{g}, b.{k} ORDER BY b.{ord} DESC) AS rn \
                     FROM {} AS b WHERE b.{g} IS NOT NULL AND b.{k} IS NOT NULL AND b.{v} IS NOT NULL",
                    b.name
                );
                let maps = format!(
                    "SELECT g, group_concat(CAST(k AS TEXT) || ':' || printf('%!.17g', v), ';' ORDER BY k) AS m \
                     FROM ({latest}) WHERE rn = 1 GROUP BY g"
                );
                let sql = format!(
                    "SELECT {}, COALESCE(x.m, '') AS {}, a.{ord} AS {ord} \
                     FROM {} AS a LEFT JOIN ({maps}) AS x ON a.{g} = x.g",
                    column_list(&a.def, Some("a")),
                    ident(name),
                    a.name
                );
                Ok(self.temp(layout.def, sql))
            }
            Node::Recommend {
                candidates,
                reference,
                mode,
                agg,
                top,
            } => {
                let c = self.node(candidates)?;
                let r = self.node(reference)?;
                let layout = recommend_schema(&c.def, &r.def, mode)?;
                let ord = ident(ORDER_COLUMN);
                let scores = match mode {
                    RecommendMode::Similarity {
                        candidate_col,
                        reference_col,
                        function,
                    } => {
                        let udf = format!("sim_{}", function.keyword());
                        if !self.script.required_udfs.contains(&udf) {
                            self.script.required_udfs.push(udf.clone());
                        }
                        format!(
                            "SELECT c2.{ord} AS o, {}({udf}(c2.{}, r.{})) AS score \
                             FROM {} AS c2 CROSS JOIN {} AS r GROUP BY c2.{ord}",
                            agg_function(*agg),
                            ident(candidate_col),
                            ident(reference_col),
                            c.name,
                            r.name
                        )
                    }
                    RecommendMode::Aggregate {
                        value_col,
                        candidate_key: _,
                        reference_key,
                    } => {
                        let (rk, rv) = (ident(reference_key), ident(value_col));
                        format!(
                            "SELECT r.{rk} AS o, {}(CAST(r.{rv} AS REAL)) AS score FROM {} AS r \
                             WHERE r.{rk} IS NOT NULL AND r.{rv} IS NOT NULL GROUP BY r.{rk}",
                            agg_function(*agg),
                            r.name
                        )
                    }
                };
                let on = match mode {
                    RecommendMode::Similarity { .. } => format!("c.{ord}"),
                    RecommendMode::Aggregate { candidate_key, .. } => {
                        format!("c.{}", ident(candidate_key))
                    }
                };
                let score = "COALESCE(s.score, 0.0)";
                let kept: Vec<String> = layout
                    .kept
                    .iter()
                    .map(|&i| format!("c.{0} AS {0}", ident(&c.def.columns[i].name)))
                    .collect();
                let ties: Vec<String> = layout
                    .tie_break
                    .iter()
                    .map(|&i| format!("c.{} ASC", ident(&layout.def.columns[i].name)))
                    .collect();
                let mut order = format!("{score} DESC");
                for t in &ties {
                    order.push_str(", ");
                    order.push_str(t);
                }
                // Rows equal on every scalar column keep candidate order.
                let _ = write!(order, ", c.{ord} ASC");
                let mut sql = format!(
                    "SELECT {}, {score} AS {}, ROW_NUMBER() OVER (ORDER BY {order}) AS {ord} \
                     FROM {} AS c LEFT JOIN ({scores}) AS s ON {on} = s.o ORDER BY {order}",
                    kept.join(", "),
                    ident(SCORE_COLUMN),
                    c.name
                );
                if let Some(top) = top {
                    let _ = write!(sql, " LIMIT {top}");
                }
                Ok(self.temp(layout.def, sql))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Binding;
    use crate::relstore::load_schema;

    fn schema() -> Schema {
        load_schema(
            r#"{"relations":[{"name":"Courses","primary_key":"CourseID","columns":[
                {"name":"CourseID","type":"int"},{"name":"Title","type":"text"}]}]}"#,
        )
        .unwrap()
    }

    fn identity() -> WorkflowAst {
        WorkflowAst {
            name: "ident".into(),
            params: vec![],
            bindings: vec![Binding {
                name: "out".into(),
                expr: Node::reference("Courses"),
            }],
        }
    }

    #[test]
    fn identity_is_one_select() {
        let script = compile(&identity(), &schema(), &Args::new(), Dialect::Ansi).unwrap();
        assert_eq!(
            script.statements,
            vec!["SELECT \"CourseID\", \"Title\" FROM \"Courses\" ORDER BY \"_ord\"".to_string()]
        );
        assert!(script.temp_objects.is_empty());
        assert!(script.required_udfs.is_empty());
    }

    #[test]
    fn dialect_parsing() {
        assert_eq!("ANSI".parse::<Dialect>(), Ok(Dialect::Ansi));
        assert!(matches!(
            "tsql".parse::<Dialect>(),
            Err(SqlError::UnsupportedDialect(_))
        ));
    }

    #[test]
    fn literals_are_escaped() {
        assert_eq!(literal(&Literal::Text("O'Brien".into())), "'O''Brien'");
        assert_eq!(literal(&Literal::Float(4.0)), "4.0");
        assert_eq!(literal(&Literal::Float(1e300)), "1e300");
        assert_eq!(literal(&Literal::Int(-3)), "-3");
        assert_eq!(ident("a\"b"), "\"a\"\"b\"");
    }

    #[test]
    fn invalid_workflow_is_rejected() {
        let mut ast = identity();
        ast.bindings[0].expr = Node::reference("Nope");
        assert!(matches!(
            compile(&ast, &schema(), &Args::new(), Dialect::Ansi),
            Err(SqlError::Validation(_))
        ));
    }
}
