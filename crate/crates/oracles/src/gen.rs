//! Seeded random inputs: stores shaped like the course database, queries,
//! schema-valid workflows and arbitrary (grammar-only) ASTs.
//!
//! Ratings are multiples of 0.5 so sums are exact in any order.

use std::collections::BTreeMap;

use flexcloud::algebra::{
    validate, Agg, Args, Binding, CmpOp, Comparison, Literal, Node, Operand, Param, ParamType,
    Predicate, RecommendMode, WorkflowAst,
};
use flexcloud::dsl::KEYWORDS;
use flexcloud::relstore::{
    load_schema, ColumnType, RatingMap, Relation, RelationDef, Schema, Store, Value,
};
use flexcloud::textkit::SimilarityFn;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const WORDS: &[&str] = &[
    "programming",
    "java",
    "american",
    "latin",
    "african",
    "history",
    "politics",
    "poetry",
    "modern",
    "advanced",
    "introduction",
    "languages",
    "systems",
    "data",
    "theory",
    "art",
    "music",
    "design",
    "great",
    "hard",
    "easy",
    "fun",
    "lecture",
    "project",
    "exam",
    "the",
    "of",
    "to",
    "and",
    "a",
    "in",
    "is",
    "very",
    "not",
    "Studies",
    "AI",
];

pub const SCHEMA_JSON: &str = r#"{"relations":[
 {"name":"Courses","primary_key":"CourseID","columns":[
  {"name":"CourseID","type":"int"},{"name":"DeptID","type":"text"},{"name":"Title","type":"text"},
  {"name":"Description","type":"text"},{"name":"Units","type":"int"}]},
 {"name":"Students","primary_key":"SuID","columns":[
  {"name":"SuID","type":"int"},{"name":"Name","type":"text"},{"name":"Class","type":"int"},
  {"name":"GPA","type":"float"}]},
 {"name":"Comments","primary_key":"CommentID","columns":[
  {"name":"CommentID","type":"int"},{"name":"SuID","type":"int"},{"name":"CourseID","type":"int"},
  {"name":"Year","type":"int"},{"name":"Text","type":"text"},{"name":"Rating","type":"float"}]}]}"#;

pub fn random_schema() -> Schema {
    load_schema(SCHEMA_JSON).expect("generator schema")
}

pub fn random_text(rng: &mut TestRng, max_words: usize) -> String {
    let n = rng.gen_range(0..=max_words);
    let seps = [" ", " ", " ", ", ", "-", ". "];
    let mut s = String::new();
    for i in 0..n {
        if i > 0 {
            s.push_str(seps.choose(rng).unwrap());
        }
        s.push_str(WORDS.choose(rng).unwrap());
    }
    s
}

fn maybe_null(rng: &mut TestRng, v: impl FnOnce(&mut TestRng) -> Value) -> Value {
    if rng.gen_bool(0.05) {
        Value::Null
    } else {
        v(rng)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StoreSize {
    pub courses: usize,
    pub students: usize,
    pub comments: usize,
}

impl StoreSize {
    pub fn random(rng: &mut TestRng) -> Self {
        StoreSize {
            courses: rng.gen_range(0..=30),
            students: rng.gen_range(0..=20),
            comments: rng.gen_range(0..=80),
        }
    }
}

pub fn random_store(rng: &mut TestRng, size: StoreSize) -> Store {
    let schema = random_schema();
    let def = |n: &str| schema.relation(n).unwrap().clone();
    let depts = ["CS", "HIST", "ENGL", "MATH"];
    let mut ids: Vec<i64> = (1..=(size.courses as i64 * 2).max(1)).collect();
    ids.shuffle(rng);
    let courses: Vec<Vec<Value>> = ids[..size.courses]
        .iter()
        .map(|&id| {
            vec![
                Value::Int(id),
                maybe_null(rng, |rng| {
                    Value::Text(depts.choose(rng).unwrap().to_string())
                }),
                maybe_null(rng, |rng| Value::Text(random_text(rng, 4))),
                maybe_null(rng, |rng| Value::Text(random_text(rng, 10))),
                maybe_null(rng, |rng| Value::Int(rng.gen_range(1..=5))),
            ]
        })
        .collect();
    let course_ids: Vec<i64> = ids[..size.courses].to_vec();
    let students: Vec<Vec<Value>> = (0..size.students)
        .map(|i| {
            vec![
                Value::Int(100 + i as i64),
                maybe_null(rng, |rng| {
                    Value::Text(format!("Student {}", rng.gen_range(0..8)))
                }),
                maybe_null(rng, |rng| Value::Int(rng.gen_range(2007..=2011))),
                maybe_null(rng, |rng| Value::Float(rng.gen_range(8..=16) as f64 / 4.0)),
            ]
        })
        .collect();
    let comments: Vec<Vec<Value>> = (0..size.comments)
        .map(|i| {
            let course = if course_ids.is_empty() || rng.gen_bool(0.05) {
                rng.gen_range(1..=60)
            } else {
                *course_ids.choose(rng).unwrap()
            };
            vec![
                Value::Int(i as i64 + 1),
                maybe_null(rng, |rng| {
                    Value::Int(100 + rng.gen_range(0..(size.students.max(1) as i64 + 1)))
                }),
                maybe_null(rng, |_| Value::Int(course)),
                maybe_null(rng, |rng| Value::Int(rng.gen_range(2006..=2009))),
                maybe_null(rng, |rng| Value::Text(random_text(rng, 8))),
                maybe_null(rng, |rng| Value::Float(rng.gen_range(0..=10) as f64 / 2.0)),
            ]
        })
        .collect();
    Store::new(vec![
        Relation::new(def("Courses"), courses).unwrap(),
        Relation::new(def("Students"), students).unwrap(),
        Relation::new(def("Comments"), comments).unwrap(),
    ])
    .unwrap()
}

/// One or two query terms in text form (`word` or `word word`), mostly
/// drawn from the store's own course text so that queries have hits.
pub fn random_query(rng: &mut TestRng, store: &Store) -> Vec<String> {
    let mut texts: Vec<Vec<String>> = Vec::new();
    for rel in store.relations() {
        for col in ["Title", "Description", "Text"] {
            if let Some(i) = rel.column_index(col) {
                for t in &rel.tuples {
                    if let Value::Text(s) = &t[i] {
                        let toks = flexcloud::textkit::tokenize(s);
                        if !toks.is_empty() {
                            texts.push(toks);
                        }
                    }
                }
            }
        }
    }
    let n = rng.gen_range(1..=2);
    let mut out = Vec::new();
    for _ in 0..n {
        let term = match texts.choose(rng) {
            Some(toks) if rng.gen_bool(0.8) => {
                let i = rng.gen_range(0..toks.len());
                if i + 1 < toks.len() && rng.gen_bool(0.3) {
                    format!("{} {}", toks[i], toks[i + 1])
                } else {
                    toks[i].clone()
                }
            }
            _ => WORDS.choose(rng).unwrap().to_lowercase(),
        };
        if !out.contains(&term) {
            out.push(term);
        }
    }
    out
}

pub fn random_tokens(rng: &mut TestRng) -> Vec<String> {
    let n = rng.gen_range(0..8);
    (0..n)
        .map(|_| WORDS[rng.gen_range(0..12)].to_string())
        .collect()
}

/// A rating map with keys in 0..12 and arbitrary real values.
pub fn random_map(rng: &mut TestRng) -> RatingMap {
    let n = rng.gen_range(0..8);
    (0..n)
        .map(|_| {
            let v = if rng.gen_bool(0.3) {
                rng.gen_range(0..=10) as f64 / 2.0
            } else {
                rng.gen_range(-5.0..5.0)
            };
            (rng.gen_range(0..12), v)
        })
        .collect()
}

// ---------------------------------------------------------------- workflows

struct Scope<'a> {
    schema: &'a Schema,
    store: &'a Store,
    /// Bindings so far and their output schemas.
    defs: Vec<(String, RelationDef)>,
}

impl Scope<'_> {
    fn sources(&self) -> Vec<(String, RelationDef)> {
        let mut v: Vec<(String, RelationDef)> = self
            .schema
            .relations
            .iter()
            .map(|r| (r.name.clone(), r.clone()))
            .collect();
        v.extend(self.defs.iter().cloned());
        v
    }

    fn sample_value(&self, rng: &mut TestRng, column: &str, ty: ColumnType) -> Literal {
        let mut pool = Vec::new();
        for rel in self.store.relations() {
            if let Some(i) = rel.column_index(column) {
                pool.extend(rel.tuples.iter().map(|t| t[i].clone()));
            }
        }
        match (pool.choose(rng), ty) {
            (Some(Value::Int(i)), _) => Literal::Int(*i),
            (Some(Value::Float(f)), _) => Literal::Float(*f),
            (Some(Value::Text(s)), _) => Literal::Text(s.clone()),
            (_, ColumnType::Text) => Literal::Text(WORDS.choose(rng).unwrap().to_string()),
            (_, ColumnType::Float) => Literal::Float(rng.gen_range(0..10) as f64 / 2.0),
            _ => Literal::Int(rng.gen_range(0..200)),
        }
    }
}

fn columns_of(def: &RelationDef, pred: impl Fn(ColumnType) -> bool) -> Vec<String> {
    def.columns
        .iter()
        .filter(|c| pred(c.ty))
        .map(|c| c.name.clone())
        .collect()
}

fn pick<T: Clone>(rng: &mut TestRng, v: &[T]) -> Option<T> {
    v.choose(rng).cloned()
}

fn random_op(
    rng: &mut TestRng,
    scope: &Scope<'_>,
    params: &[Param],
    fresh: &mut usize,
) -> Option<Node> {
    let sources = scope.sources();
    let (sname, sdef) = pick(rng, &sources)?;
    let input = Box::new(Node::Ref(sname.clone()));
    match rng.gen_range(0..6) {
        0 => {
            let cols = columns_of(&sdef, |t| t != ColumnType::RatingMap);
            let n = rng.gen_range(1..=2);
            let mut conjuncts = Vec::new();
            for _ in 0..n {
                let col = pick(rng, &cols)?;
                let ty = sdef.column(&col)?.ty;
                let param = params.iter().find(|p| {
                    p.ty.column_type() == ty || (ty.is_numeric() && p.ty.column_type().is_numeric())
                });
                let operand = match param {
                    Some(p) if rng.gen_bool(0.3) => Operand::Param(p.name.clone()),
                    _ => Operand::Literal(scope.sample_value(rng, &col, ty)),
                };
                conjuncts.push(Comparison {
                    column: col,
                    op: *CmpOp::ALL.choose(rng).unwrap(),
                    operand,
                });
            }
            Some(Node::Select {
                input,
                predicate: Predicate { conjuncts },
            })
        }
        1 => {
            let mut cols: Vec<String> = sdef.columns.iter().map(|c| c.name.clone()).collect();
            cols.shuffle(rng);
            let n = rng.gen_range(1..=cols.len());
            cols.truncate(n);
            Some(Node::Project {
                input,
                columns: cols,
            })
        }
        2 => {
            let (rname, rdef) = pick(rng, &sources)?;
            let mut pairs = Vec::new();
            for l in &sdef.columns {
                for r in &rdef.columns {
                    if l.ty == r.ty
                        && matches!(l.ty, ColumnType::Int | ColumnType::Text)
                        && (l.name == r.name || rng.gen_bool(0.05))
                    {
                        pairs.push((l.name.clone(), r.name.clone()));
                    }
                }
            }
            let (lc, rc) = pick(rng, &pairs)?;
            Some(Node::Join {
                left: input,
                right: Box::new(Node::Ref(rname)),
                left_col: lc,
                right_col: rc,
            })
        }
        3 => {
            let (bname, bdef) = pick(rng, &sources)?;
            let groups: Vec<String> = sdef
                .columns
                .iter()
                .filter(|c| matches!(c.ty, ColumnType::Int | ColumnType::Text))
                .filter(|c| bdef.column(&c.name).is_some_and(|b| b.ty == c.ty))
                .map(|c| c.name.clone())
                .collect();
            let g = pick(rng, &groups)?;
            let keys = columns_of(&bdef, |t| t == ColumnType::Int);
            let vals = columns_of(&bdef, ColumnType::is_numeric);
            *fresh += 1;
            Some(Node::Extend {
                input,
                source: Box::new(Node::Ref(bname)),
                group_key: g,
                name: format!("m{fresh}"),
                key_col: pick(rng, &keys)?,
                value_col: pick(rng, &vals)?,
            })
        }
        _ => random_recommend(rng, input, &sdef, &sources),
    }
}

fn random_recommend(
    rng: &mut TestRng,
    input: Box<Node>,
    cdef: &RelationDef,
    sources: &[(String, RelationDef)],
) -> Option<Node> {
    let (rname, rdef) = pick(rng, sources)?;
    let mode = if rng.gen_bool(0.5) {
        let maps = (
            columns_of(cdef, |t| t == ColumnType::RatingMap),
            columns_of(&rdef, |t| t == ColumnType::RatingMap),
        );
        if !maps.0.is_empty() && !maps.1.is_empty() && rng.gen_bool(0.7) {
            RecommendMode::Similarity {
                candidate_col: pick(rng, &maps.0)?,
                reference_col: pick(rng, &maps.1)?,
                function: if rng.gen_bool(0.5) {
                    SimilarityFn::Pearson
                } else {
                    SimilarityFn::InvEuclidean
                },
            }
        } else {
            RecommendMode::Similarity {
                candidate_col: pick(rng, &columns_of(cdef, |t| t == ColumnType::Text))?,
                reference_col: pick(rng, &columns_of(&rdef, |t| t == ColumnType::Text))?,
                function: SimilarityFn::Jaccard,
            }
        }
    } else {
        let keys: Vec<String> = cdef
            .columns
            .iter()
            .filter(|c| matches!(c.ty, ColumnType::Int | ColumnType::Text))
            .filter(|c| rdef.column(&c.name).is_some_and(|r| r.ty == c.ty))
            .map(|c| c.name.clone())
            .collect();
        let k = pick(rng, &keys)?;
        RecommendMode::Aggregate {
            value_col: pick(rng, &columns_of(&rdef, ColumnType::is_numeric))?,
            candidate_key: k.clone(),
            reference_key: k,
        }
    };
    Some(Node::Recommend {
        candidates: input,
        reference: Box::new(Node::Ref(rname)),
        agg: *Agg::ALL.choose(rng).unwrap(),
        mode,
        top: if rng.gen_bool(0.5) {
            Some(rng.gen_range(1..=12))
        } else {
            None
        },
    })
}

/// A workflow that validates against `store`'s schema and ends with a
/// recommend, with arguments for its parameters.
pub fn random_workflow(rng: &mut TestRng, store: &Store, name: &str) -> (WorkflowAst, Args) {
    let schema = store.schema();
    let mut params = Vec::new();
    let mut args = Args::new();
    if rng.gen_bool(0.5) {
        params.push(Param {
            name: "p".into(),
            ty: ParamType::Int,
        });
        args.insert("p".into(), Literal::Int(rng.gen_range(100..=110)));
    }
    if rng.gen_bool(0.3) {
        params.push(Param {
            name: "q".into(),
            ty: ParamType::Float,
        });
        args.insert(
            "q".into(),
            Literal::Float(rng.gen_range(0..=10) as f64 / 2.0),
        );
    }
    let mut ast = WorkflowAst {
        name: name.to_string(),
        params,
        bindings: Vec::new(),
    };
    let mut scope = Scope {
        schema: &schema,
        store,
        defs: Vec::new(),
    };
    let mut fresh = 0;
    let steps = rng.gen_range(1..=5);
    let mut attempts = 0;
    while ast.bindings.len() < steps + 1 && attempts < 500 {
        attempts += 1;
        let last_step = ast.bindings.len() == steps;
        let node = if last_step {
            let sources = scope.sources();
            let (cname, cdef) = if !scope.defs.is_empty() && rng.gen_bool(0.7) {
                scope.defs.last().cloned().unwrap()
            } else {
                pick(rng, &sources).unwrap()
            };
            random_recommend(rng, Box::new(Node::Ref(cname)), &cdef, &sources)
        } else {
            random_op(rng, &scope, &ast.params, &mut fresh)
        };
        let Some(node) = node else { continue };
        let bname = format!("b{}", ast.bindings.len());
        ast.bindings.push(Binding {
            name: bname.clone(),
            expr: node,
        });
        let Ok(v) = validate(&ast, &schema) else {
            ast.bindings.pop();
            continue;
        };
        let mut out = v.output().clone();
        // Sometimes nest the operator inside a select.
        if !last_step && rng.gen_bool(0.2) {
            let cols = columns_of(&out, |t| t != ColumnType::RatingMap);
            if let Some(col) = pick(rng, &cols) {
                let ty = out.column(&col).unwrap().ty;
                let b = ast.bindings.last_mut().unwrap();
                let inner = std::mem::replace(&mut b.expr, Node::Ref(String::new()));
                b.expr = Node::Select {
                    input: Box::new(inner),
                    predicate: Predicate {
                        conjuncts: vec![Comparison {
                            column: col.clone(),
                            op: *CmpOp::ALL.choose(rng).unwrap(),
                            operand: Operand::Literal(scope.sample_value(rng, &col, ty)),
                        }],
                    },
                };
                out = validate(&ast, &schema)
                    .expect("nested select")
                    .output()
                    .clone();
            }
        }
        scope.defs.push((bname, out));
    }
    if ast.bindings.len() < steps + 1
        || !matches!(
            ast.bindings.last().map(|b| &b.expr),
            Some(Node::Recommend { .. })
        )
    {
        // Fall back to a plain ranking of courses by title similarity.
        ast.bindings.push(Binding {
            name: format!("b{}", ast.bindings.len()),
            expr: Node::Recommend {
                candidates: Box::new(Node::Ref("Courses".into())),
                reference: Box::new(Node::Ref("Courses".into())),
                mode: RecommendMode::Similarity {
                    candidate_col: "Title".into(),
                    reference_col: "Title".into(),
                    function: SimilarityFn::Jaccard,
                },
                agg: Agg::Mean,
                top: None,
            },
        });
    }
    debug_assert!(validate(&ast, &schema).is_ok());
    (ast, args)
}

// ----------------------------------------------------------------- raw ASTs

fn ident(rng: &mut TestRng, first: &[u8]) -> String {
    loop {
        let mut s = String::new();
        s.push(*first.choose(rng).unwrap() as char);
        let rest = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
        for _ in 0..rng.gen_range(0..6) {
            s.push(*rest.choose(rng).unwrap() as char);
        }
        if !KEYWORDS.contains(&s.as_str()) {
            return s;
        }
    }
}

fn lower(rng: &mut TestRng) -> String {
    ident(rng, b"abcdefghijklmnopqrstuvwxyz")
}

fn upper(rng: &mut TestRng) -> String {
    ident(rng, b"ABCDEFGHIJKLMNOPQRSTUVWXYZ")
}

fn column(rng: &mut TestRng) -> String {
    ident(rng, b"abcxyzABCXYZ_")
}

fn literal(rng: &mut TestRng) -> Literal {
    match rng.gen_range(0..3) {
        0 => Literal::Int(match rng.gen_range(0..4) {
            0 => i64::MIN,
            1 => i64::MAX,
            _ => rng.gen_range(-1000..1000),
        }),
        1 => Literal::Float(loop {
            let f = match rng.gen_range(0..3) {
                0 => f64::from_bits(rng.gen()),
                1 => rng.gen_range(-100.0..100.0),
                _ => rng.gen_range(-20..20) as f64 / 4.0,
            };
            if f.is_finite() {
                break f;
            }
        }),
        _ => {
            let pool = [
                'a', 'Z', ' ', '"', '\\', '\n', '\t', '\r', 'é', '字', '#', '$', '\'',
            ];
            let n = rng.gen_range(0..8);
            Literal::Text((0..n).map(|_| *pool.choose(rng).unwrap()).collect())
        }
    }
}

fn raw_node(rng: &mut TestRng, depth: usize, refs: &[String], params: &[Param]) -> Node {
    let leaf = |rng: &mut TestRng| Node::Ref(refs.choose(rng).unwrap().clone());
    if depth == 0 || rng.gen_bool(0.35) {
        return leaf(rng);
    }
    let sub = |rng: &mut TestRng| Box::new(raw_node(rng, depth - 1, refs, params));
    match rng.gen_range(0..5) {
        0 => {
            let n = rng.gen_range(1..=3);
            let conjuncts = (0..n)
                .map(|_| Comparison {
                    column: column(rng),
                    op: *CmpOp::ALL.choose(rng).unwrap(),
                    operand: match params.choose(rng) {
                        Some(p) if rng.gen_bool(0.3) => Operand::Param(p.name.clone()),
                        _ => Operand::Literal(literal(rng)),
                    },
                })
                .collect();
            Node::Select {
                input: sub(rng),
                predicate: Predicate { conjuncts },
            }
        }
        1 => {
            let n = rng.gen_range(1..=3);
            Node::Project {
                input: sub(rng),
                columns: (0..n).map(|_| column(rng)).collect(),
            }
        }
        2 => Node::Join {
            left: sub(rng),
            right: sub(rng),
            left_col: column(rng),
            right_col: column(rng),
        },
        3 => Node::Extend {
            input: sub(rng),
            source: sub(rng),
            group_key: column(rng),
            name: column(rng),
            key_col: column(rng),
            value_col: column(rng),
        },
        _ => {
            let mode = if rng.gen_bool(0.5) {
                RecommendMode::Similarity {
                    candidate_col: column(rng),
                    reference_col: column(rng),
                    function: *SimilarityFn::ALL.choose(rng).unwrap(),
                }
            } else {
                RecommendMode::Aggregate {
                    value_col: column(rng),
                    candidate_key: column(rng),
                    reference_key: column(rng),
                }
            };
            Node::Recommend {
                candidates: sub(rng),
                reference: sub(rng),
                mode,
                agg: *Agg::ALL.choose(rng).unwrap(),
                top: match rng.gen_range(0..3) {
                    0 => None,
                    1 => Some(rng.gen_range(1..100)),
                    _ => Some(i64::MAX as u64),
                },
            }
        }
    }
}

/// Any AST the grammar can express: binding names and base names are
/// disjoint, references point backwards, every `$param` is declared.
pub fn random_ast(rng: &mut TestRng) -> WorkflowAst {
    let mut params: Vec<Param> = Vec::new();
    for _ in 0..rng.gen_range(0..3) {
        let name = lower(rng);
        if params.iter().all(|p| p.name != name) {
            params.push(Param {
                name,
                ty: *[ParamType::Int, ParamType::Float, ParamType::Text]
                    .choose(rng)
                    .unwrap(),
            });
        }
    }
    let bases: Vec<String> = (0..3).map(|_| upper(rng)).collect();
    let mut bindings: Vec<Binding> = Vec::new();
    let mut names: BTreeMap<String, ()> = BTreeMap::new();
    for _ in 0..rng.gen_range(1..5) {
        let name = lower(rng);
        if names.insert(name.clone(), ()).is_some() {
            continue;
        }
        let mut refs = bases.clone();
        refs.extend(bindings.iter().map(|b| b.name.clone()));
        let expr = raw_node(rng, 3, &refs, &params);
        bindings.push(Binding { name, expr });
    }
    WorkflowAst {
        name: lower(rng),
        params,
        bindings,
    }
}
