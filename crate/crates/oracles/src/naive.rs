//! A straight-line workflow interpreter: nested loops and linear scans. It
//! trusts that the workflow already validated.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use flexcloud::algebra::{
    Agg, Args, CmpOp, Literal, Node, Operand, ParamType, RecommendMode, WorkflowAst,
};
use flexcloud::relstore::{ColumnType, Store, Value};
use flexcloud::textkit::SimilarityFn;

use crate::sim::{naive_inv_euclidean, naive_jaccard, naive_pearson, naive_tokenize};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<(String, ColumnType)>,
    pub primary_key: Option<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn col(&self, name: &str) -> usize {
        self.columns
            .iter()
            .position(|c| c.0 == name)
            .unwrap_or_else(|| panic!("no column {name}"))
    }
}

pub fn naive_run(store: &Store, ast: &WorkflowAst, args: &Args) -> Table {
    let mut env: Vec<(String, Table)> = Vec::new();
    let mut params: BTreeMap<String, Value> = BTreeMap::new();
    for p in &ast.params {
        let v = match (p.ty, &args[&p.name]) {
            (ParamType::Float, Literal::Int(i)) => Value::Float(*i as f64),
            (_, l) => l.to_value(),
        };
        params.insert(p.name.clone(), v);
    }
    for b in &ast.bindings {
        let t = eval(store, &env, &params, &b.expr);
        env.push((b.name.clone(), t));
    }
    env.pop().unwrap().1
}

fn eval(
    store: &Store,
    env: &[(String, Table)],
    params: &BTreeMap<String, Value>,
    node: &Node,
) -> Table {
    let ev = |n: &Node| eval(store, env, params, n);
    match node {
        Node::Ref(name) => {
            if let Some((_, t)) = env.iter().rev().find(|(n, _)| n == name) {
                return t.clone();
            }
            let rel = store.relation(name).expect("base relation");
            Table {
                columns: rel
                    .def
                    .columns
                    .iter()
                    .map(|c| (c.name.clone(), c.ty))
                    .collect(),
                primary_key: rel.def.primary_key.clone(),
                rows: rel.tuples.clone(),
            }
        }
        Node::Select { input, predicate } => {
            let mut t = ev(input);
            let tests: Vec<(usize, CmpOp, Value)> = predicate
                .conjuncts
                .iter()
                .map(|c| {
                    let v = match &c.operand {
                        Operand::Literal(l) => l.to_value(),
                        Operand::Param(p) => params[p].clone(),
                    };
                    (t.col(&c.column), c.op, v)
                })
                .collect();
            t.rows
                .retain(|r| tests.iter().all(|(i, op, v)| holds(&r[*i], *op, v)));
            t
        }
        Node::Project { input, columns } => {
            let t = ev(input);
            let idx: Vec<usize> = columns.iter().map(|c| t.col(c)).collect();
            Table {
                columns: idx.iter().map(|&i| t.columns[i].clone()).collect(),
                primary_key: t.primary_key.clone().filter(|pk| columns.contains(pk)),
                rows: t
                    .rows
                    .iter()
                    .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
                    .collect(),
            }
        }
        Node::Join {
            left,
            right,
            left_col,
            right_col,
        } => {
            let l = ev(left);
            let r = ev(right);
            let (lk, rk) = (l.col(left_col), r.col(right_col));
            let mut columns = l.columns.clone();
            let mut keep = Vec::new();
            for (i, (name, ty)) in r.columns.iter().enumerate() {
                if i == rk && *name == l.columns[lk].0 {
                    continue;
                }
                let mut out = name.clone();
                while columns
                    .iter()
                    .any(|c| c.0.to_lowercase() == out.to_lowercase())
                {
                    out += "_r";
                }
                columns.push((out, *ty));
                keep.push(i);
            }
            let mut rows = Vec::new();
            for lr in &l.rows {
                for rr in &r.rows {
                    if holds(&lr[lk], CmpOp::Eq, &rr[rk]) {
                        let mut row = lr.clone();
                        row.extend(keep.iter().map(|&i| rr[i].clone()));
                        rows.push(row);
                    }
                }
            }
            Table {
                columns,
                primary_key: None,
                rows,
            }
        }
        Node::Extend {
            input,
            source,
            group_key,
            name,
            key_col,
            value_col,
        } => {
            let mut a = ev(input);
            let b = ev(source);
            let (ag, bg, bk, bv) = (
                a.col(group_key),
                b.col(group_key),
                b.col(key_col),
                b.col(value_col),
            );
            for row in &mut a.rows {
                let mut map = flexcloud::relstore::RatingMap::new();
                for src in &b.rows {
                    let value = match &src[bv] {
                        Value::Int(i) => *i as f64,
                        Value::Float(f) => *f,
                        _ => continue,
                    };
                    if let Value::Int(k) = src[bk] {
                        if holds(&row[ag], CmpOp::Eq, &src[bg]) {
                            map.insert(k, value);
                        }
                    }
                }
                row.push(Value::RatingMap(map));
            }
            a.columns.push((name.clone(), ColumnType::RatingMap));
            a
        }
        Node::Recommend {
            candidates,
            reference,
            mode,
            agg,
            top,
        } => recommend(&ev(candidates), &ev(reference), mode, *agg, *top),
    }
}

fn recommend(c: &Table, r: &Table, mode: &RecommendMode, agg: Agg, top: Option<u64>) -> Table {
    let mut scored: Vec<(Vec<Value>, f64)> = Vec::new();
    for cand in &c.rows {
        let values: Vec<f64> = match mode {
            RecommendMode::Similarity {
                candidate_col,
                reference_col,
                function,
            } => {
                let (ci, ri) = (c.col(candidate_col), r.col(reference_col));
                r.rows
                    .iter()
                    .map(|rr| similarity(*function, &cand[ci], &rr[ri]))
                    .collect()
            }
            RecommendMode::Aggregate {
                value_col,
                candidate_key,
                reference_key,
            } => {
                let (ci, ri, vi) = (c.col(candidate_key), r.col(reference_key), r.col(value_col));
                r.rows
                    .iter()
                    .filter(|rr| holds(&cand[ci], CmpOp::Eq, &rr[ri]))
                    .filter_map(|rr| match rr[vi] {
                        Value::Int(i) => Some(i as f64),
                        Value::Float(f) => Some(f),
                        _ => None,
                    })
                    .collect()
            }
        };
        let score = if values.is_empty() {
            0.0
        } else {
            match agg {
                Agg::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Agg::Sum => neumaier(&values),
                Agg::Mean => neumaier(&values) / values.len() as f64,
            }
        };
        scored.push((cand.clone(), score));
    }

    let keep: Vec<usize> = (0..c.columns.len())
        .filter(|&i| c.columns[i].0 != "_score")
        .collect();
    let mut columns: Vec<(String, ColumnType)> =
        keep.iter().map(|&i| c.columns[i].clone()).collect();
    columns.push(("_score".to_string(), ColumnType::Float));
    let mut rows: Vec<(Vec<Value>, f64)> = scored
        .into_iter()
        .map(|(row, s)| {
            let mut out: Vec<Value> = keep.iter().map(|&i| row[i].clone()).collect();
            out.push(Value::Float(s));
            (out, s)
        })
        .collect();

    // Score descending, then primary key, then the remaining plain columns.
    let pk = c
        .primary_key
        .as_ref()
        .and_then(|pk| columns.iter().position(|x| &x.0 == pk));
    let mut order: Vec<usize> = pk.into_iter().collect();
    for (i, (name, ty)) in columns.iter().enumerate() {
        if Some(i) != pk && name != "_score" && *ty != ColumnType::RatingMap {
            order.push(i);
        }
    }
    // Insertion sort: stable and obviously so.
    for i in 1..rows.len() {
        let mut j = i;
        while j > 0 && before(&rows[j], &rows[j - 1], &order) {
            rows.swap(j, j - 1);
            j -= 1;
        }
    }
    if let Some(top) = top {
        rows.truncate(top as usize);
    }
    Table {
        columns,
        primary_key: c.primary_key.clone(),
        rows: rows.into_iter().map(|r| r.0).collect(),
    }
}

/// Compensated summation, the rule SQL engines apply to floating sums.
fn neumaier(values: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &v in values {
        let t = s + v;
        c += if s.abs() >= v.abs() {
            (s - t) + v
        } else {
            (v - t) + s
        };
        s = t;
    }
    s + c
}

fn before(a: &(Vec<Value>, f64), b: &(Vec<Value>, f64), order: &[usize]) -> bool {
    if a.1 != b.1 {
        return a.1 > b.1;
    }
    for &i in order {
        match total(&a.0[i], &b.0[i]) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

/// Nulls first, then numbers or text in natural order.
fn total(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Null, Value::Null) => Ordering::Equal,
        (Value::Null, _) => Ordering::Less,
        (_, Value::Null) => Ordering::Greater,
        _ => compare(a, b).unwrap_or(Ordering::Equal),
    }
}

fn similarity(f: SimilarityFn, a: &Value, b: &Value) -> f64 {
    let text = |v: &Value| match v {
        Value::Text(s) => naive_tokenize(s),
        _ => Vec::new(),
    };
    let map = |v: &Value| -> BTreeMap<i64, f64> {
        match v {
            Value::RatingMap(m) => m.iter().collect(),
            _ => BTreeMap::new(),
        }
    };
    match f {
        SimilarityFn::Jaccard => naive_jaccard(&text(a), &text(b)),
        SimilarityFn::Pearson => naive_pearson(&map(a), &map(b)),
        SimilarityFn::InvEuclidean => naive_inv_euclidean(&map(a), &map(b)),
    }
}

fn compare(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Float(x), Value::Float(y)) => x.partial_cmp(y),
        (Value::Int(x), Value::Float(y)) => int_vs_float(*x, *y),
        (Value::Float(x), Value::Int(y)) => int_vs_float(*y, *x).map(Ordering::reverse),
        (Value::Text(x), Value::Text(y)) => Some(x.as_bytes().cmp(y.as_bytes())),
        _ => None,
    }
}

/// Exact: compares in 128-bit fixed point when `y` is in range.
fn int_vs_float(x: i64, y: f64) -> Option<Ordering> {
    if y.is_nan() {
        return None;
    }
    if y >= 1e19 {
        return Some(Ordering::Less);
    }
    if y <= -1e19 {
        return Some(Ordering::Greater);
    }
    let floor = y.floor();
    let fl = floor as i128;
    match (x as i128).cmp(&fl) {
        Ordering::Equal if y > floor => Some(Ordering::Less),
        other => Some(other),
    }
}

fn holds(a: &Value, op: CmpOp, b: &Value) -> bool {
    let Some(o) = compare(a, b) else {
        return false;
    };
    match op {
        CmpOp::Eq => o == Ordering::Equal,
        CmpOp::Ne => o != Ordering::Equal,
        CmpOp::Lt => o == Ordering::Less,
        CmpOp::Le => o != Ordering::Greater,
        CmpOp::Gt => o == Ordering::Greater,
        CmpOp::Ge => o != Ordering::Less,
    }
}
