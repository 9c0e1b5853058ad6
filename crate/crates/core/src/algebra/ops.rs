//! Operator semantics: output schemas (shared with the SQL compiler) and
//! in-memory evaluation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use crate::relstore::{ColumnDef, ColumnType, RatingMap, Relation, RelationDef, Tuple, Value};
use crate::textkit::{
    sim_inv_euclidean, sim_jaccard, sim_pearson, tokenize, SimilarityFn, TokenList,
};

use super::ast::{Agg, Args, Comparison, Operand, Predicate, RecommendMode};
use super::AlgebraError;

/// Name of the score column appended by recommend.
pub const SCORE_COLUMN: &str = "_score";

/// Declared parameter types, by name.
pub type ParamTypes = BTreeMap<String, ColumnType>;

fn column<'a>(def: &'a RelationDef, name: &str) -> Result<(usize, &'a ColumnDef), AlgebraError> {
    def.column_index(name)
        .map(|i| (i, &def.columns[i]))
        .ok_or_else(|| AlgebraError::UnknownColumn {
            relation: def.name.clone(),
            column: name.to_string(),
        })
}

fn comparable(col: ColumnType, operand: ColumnType) -> bool {
    (col.is_numeric() && operand.is_numeric())
        || (col == ColumnType::Text && operand == ColumnType::Text)
}

fn operand_type(operand: &Operand, params: &ParamTypes) -> Result<ColumnType, AlgebraError> {
    match operand {
        Operand::Literal(l) => Ok(l.column_type()),
        Operand::Param(p) => params
            .get(p)
            .copied()
            .ok_or_else(|| AlgebraError::UnboundParam(p.clone())),
    }
}

pub fn select_schema(
    input: &RelationDef,
    predicate: &Predicate,
    params: &ParamTypes,
) -> Result<RelationDef, AlgebraError> {
    for Comparison {
        column: name,
        op,
        operand,
    } in &predicate.conjuncts
    {
        let (_, col) = column(input, name)?;
        let ty = operand_type(operand, params)?;
        if !comparable(col.ty, ty) {
            return Err(AlgebraError::TypeMismatch(format!(
                "cannot compare {}.{name} ({}) {} {ty}",
                input.name,
                col.ty,
                op.symbol()
            )));
        }
    }
    Ok(input.clone())
}

pub fn project_schema(
    input: &RelationDef,
    columns: &[String],
) -> Result<RelationDef, AlgebraError> {
    if columns.is_empty() {
        return Err(AlgebraError::Validation(
            "project needs at least one column".into(),
        ));
    }
    let mut out = Vec::with_capacity(columns.len());
    for (i, name) in columns.iter().enumerate() {
        let (_, col) = column(input, name)?;
        if columns[..i].iter().any(|c| c.eq_ignore_ascii_case(name)) {
            return Err(AlgebraError::NameCollision(format!(
                "column {name} projected twice"
            )));
        }
        out.push(col.clone());
    }
    let primary_key = input
        .primary_key
        .clone()
        .filter(|pk| columns.iter().any(|c| c == pk));
    Ok(RelationDef {
        name: input.name.clone(),
        columns: out,
        primary_key,
    })
}

/// Column layout of a join: all left columns, then the right columns. A
/// right join column named like the left join column is dropped; other
/// clashing right columns get an `_r` suffix.
#[derive(Debug, Clone)]
pub struct JoinLayout {
    pub def: RelationDef,
    pub left_key: usize,
    pub right_key: usize,
    /// Kept right columns: (index in the right input, output name).
    pub right_columns: Vec<(usize, String)>,
}

fn joinable(ty: ColumnType) -> bool {
    ty != ColumnType::RatingMap
}

pub fn join_schema(
    left: &RelationDef,
    right: &RelationDef,
    left_col: &str,
    right_col: &str,
) -> Result<JoinLayout, AlgebraError> {
    let (left_key, lc) = column(left, left_col)?;
    let (right_key, rc) = column(right, right_col)?;
    if lc.ty != rc.ty || !joinable(lc.ty) {
        return Err(AlgebraError::TypeMismatch(format!(
            "join {}.{left_col} ({}) = {}.{right_col} ({})",
            left.name, lc.ty, right.name, rc.ty
        )));
    }
    let mut columns = left.columns.clone();
    let mut right_columns = Vec::new();
    for (i, col) in right.columns.iter().enumerate() {
        if i == right_key && col.name == lc.name {
            continue;
        }
        let mut name = col.name.clone();
        while columns.iter().any(|c| c.name.eq_ignore_ascii_case(&name)) {
            name.push_str("_r");
        }
        columns.push(ColumnDef::new(name.clone(), col.ty));
        right_columns.push((i, name));
    }
    Ok(JoinLayout {
        def: RelationDef {
            name: left.name.clone(),
            columns,
            primary_key: None,
        },
        left_key,
        right_key,
        right_columns,
    })
}

/// Resolved column positions of an extend.
#[derive(Debug, Clone)]
pub struct ExtendLayout {
    pub def: RelationDef,
    pub input_group: usize,
    pub source_group: usize,
    pub source_key: usize,
    pub source_value: usize,
}

pub fn extend_schema(
    input: &RelationDef,
    source: &RelationDef,
    group_key: &str,
    name: &str,
    key_col: &str,
    value_col: &str,
) -> Result<ExtendLayout, AlgebraError> {
    let (input_group, ig) = column(input, group_key)?;
    let (source_group, sg) = column(source, group_key)?;
    if ig.ty != sg.ty || !matches!(ig.ty, ColumnType::Int | ColumnType::Text) {
        return Err(AlgebraError::TypeMismatch(format!(
            "extend group key {group_key}: {} in {} vs {} in {}",
            ig.ty, input.name, sg.ty, source.name
        )));
    }
    let (source_key, kc) = column(source, key_col)?;
    if kc.ty != ColumnType::Int {
        return Err(AlgebraError::TypeMismatch(format!(
            "extend map key {}.{key_col} must be int, found {}",
            source.name, kc.ty
        )));
    }
    let (source_value, vc) = column(source, value_col)?;
    if !vc.ty.is_numeric() {
        return Err(AlgebraError::TypeMismatch(format!(
            "extend map value {}.{value_col} must be numeric, found {}",
            source.name, vc.ty
        )));
    }
    if input.has_column_like(name) {
        return Err(AlgebraError::NameCollision(format!(
            "{} already has a column named {name}",
            input.name
        )));
    }
    let mut def = input.clone();
    def.columns
        .push(ColumnDef::new(name, ColumnType::RatingMap));
    Ok(ExtendLayout {
        def,
        input_group,
        source_group,
        source_key,
        source_value,
    })
}

/// Resolved layout of a recommend.
#[derive(Debug, Clone)]
pub struct RecommendLayout {
    pub def: RelationDef,
    /// Candidate columns carried to the output (an existing `_score` is
    /// replaced).
    pub kept: Vec<usize>,
    pub candidate_col: usize,
    pub reference_col: usize,
    /// Aggregate mode only.
    pub value_col: Option<usize>,
    /// Output columns breaking score ties, ascending: the primary key
    /// first, then every other scalar column in schema order.
    pub tie_break: Vec<usize>,
}

pub fn recommend_schema(
    candidates: &RelationDef,
    reference: &RelationDef,
    mode: &RecommendMode,
) -> Result<RecommendLayout, AlgebraError> {
    let (candidate_col, reference_col, value_col) = match mode {
        RecommendMode::Similarity {
            candidate_col,
            reference_col,
            function,
        } => {
            let (ci, cc) = column(candidates, candidate_col)?;
            let (ri, rc) = column(reference, reference_col)?;
            let want = if function.on_text() {
                ColumnType::Text
            } else {
                ColumnType::RatingMap
            };
            if cc.ty != want || rc.ty != want {
                return Err(AlgebraError::ModeType(format!(
                    "{function} compares {want} columns, got {}.{candidate_col} ({}) ~ {}.{reference_col} ({})",
                    candidates.name, cc.ty, reference.name, rc.ty
                )));
            }
            (ci, ri, None)
        }
        RecommendMode::Aggregate {
            value_col,
            candidate_key,
            reference_key,
        } => {
            let (ci, cc) = column(candidates, candidate_key)?;
            let (ri, rc) = column(reference, reference_key)?;
            if cc.ty != rc.ty || !matches!(cc.ty, ColumnType::Int | ColumnType::Text) {
                return Err(AlgebraError::ModeType(format!(
                    "aggregate match {}.{candidate_key} ({}) = {}.{reference_key} ({})",
                    candidates.name, cc.ty, reference.name, rc.ty
                )));
            }
            let (vi, vc) = column(reference, value_col)?;
            if !vc.ty.is_numeric() {
                return Err(AlgebraError::ModeType(format!(
                    "aggregate value {}.{value_col} must be numeric, found {}",
                    reference.name, vc.ty
                )));
            }
            (ci, ri, Some(vi))
        }
    };

    let kept: Vec<usize> = (0..candidates.columns.len())
        .filter(|&i| candidates.columns[i].name != SCORE_COLUMN)
        .collect();
    let mut columns: Vec<ColumnDef> = kept
        .iter()
        .map(|&i| candidates.columns[i].clone())
        .collect();
    columns.push(ColumnDef::new(SCORE_COLUMN, ColumnType::Float));
    let def = RelationDef {
        name: candidates.name.clone(),
        columns,
        primary_key: candidates.primary_key.clone(),
    };
    let pk = def.primary_key_index();
    let mut tie_break: Vec<usize> = pk.into_iter().collect();
    for (i, c) in def.columns.iter().enumerate() {
        if Some(i) != pk && c.name != SCORE_COLUMN && c.ty != ColumnType::RatingMap {
            tie_break.push(i);
        }
    }
    Ok(RecommendLayout {
        def,
        kept,
        candidate_col,
        reference_col,
        value_col,
        tie_break,
    })
}

fn resolve_operand(operand: &Operand, args: &Args) -> Result<Value, AlgebraError> {
    match operand {
        Operand::Literal(l) => Ok(l.to_value()),
        Operand::Param(p) => args
            .get(p)
            .map(|l| l.to_value())
            .ok_or_else(|| AlgebraError::UnboundParam(p.clone())),
    }
}

fn arg_types(args: &Args) -> ParamTypes {
    args.iter()
        .map(|(k, v)| (k.clone(), v.column_type()))
        .collect()
}

/// Keeps the tuples satisfying every comparison, in input order. A `Null`
/// operand makes a comparison false.
pub fn op_select(
    rel: &Relation,
    predicate: &Predicate,
    args: &Args,
) -> Result<Relation, AlgebraError> {
    let def = select_schema(&rel.def, predicate, &arg_types(args))?;
    let mut tests = Vec::with_capacity(predicate.conjuncts.len());
    for c in &predicate.conjuncts {
        tests.push((
            rel.column_index(&c.column).expect("checked"),
            c.op,
            resolve_operand(&c.operand, args)?,
        ));
    }
    let tuples = rel
        .tuples
        .iter()
        .filter(|t| {
            tests
                .iter()
                .all(|(i, op, v)| t[*i].sql_cmp(v).is_some_and(|o| op.holds(o)))
        })
        .cloned()
        .collect();
    Ok(Relation { def, tuples })
}

/// Keeps the named columns; rows are not deduplicated.
pub fn op_project(rel: &Relation, columns: &[String]) -> Result<Relation, AlgebraError> {
    let def = project_schema(&rel.def, columns)?;
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| rel.column_index(c).expect("checked"))
        .collect();
    let tuples = rel
        .tuples
        .iter()
        .map(|t| idx.iter().map(|&i| t[i].clone()).collect())
        .collect();
    Ok(Relation { def, tuples })
}

#[derive(PartialEq, Eq, Hash)]
enum KeyRepr<'a> {
    Int(i64),
    Float(u64),
    Text(&'a str),
}

fn key_repr(v: &Value) -> Option<KeyRepr<'_>> {
    match v {
        Value::Int(i) => Some(KeyRepr::Int(*i)),
        // -0.0 and 0.0 compare equal in SQL.
        Value::Float(f) => Some(KeyRepr::Float(if *f == 0.0 { 0 } else { f.to_bits() })),
        Value::Text(s) => Some(KeyRepr::Text(s)),
        _ => None,
    }
}

/// Equi-join; output ordered by left position, then right position.
pub fn op_join(
    left: &Relation,
    right: &Relation,
    left_col: &str,
    right_col: &str,
) -> Result<Relation, AlgebraError> {
    let layout = join_schema(&left.def, &right.def, left_col, right_col)?;
    let mut by_key: HashMap<KeyRepr<'_>, Vec<&Tuple>> = HashMap::new();
    for t in &right.tuples {
        if let Some(k) = key_repr(&t[layout.right_key]) {
            by_key.entry(k).or_default().push(t);
        }
    }
    let mut tuples = Vec::new();
    for l in &left.tuples {
        let Some(matches) = key_repr(&l[layout.left_key]).and_then(|k| by_key.get(&k)) else {
            continue;
        };
        for r in matches {
            let mut row = l.clone();
            row.extend(layout.right_columns.iter().map(|(i, _)| r[*i].clone()));
            tuples.push(row);
        }
    }
    Ok(Relation {
        def: layout.def,
        tuples,
    })
}

/// Adds a rating-map column to every input tuple. Source rows with a
/// `Null` group key, map key or value are ignored; when a group repeats a
/// map key, the later source row wins.
pub fn op_extend(
    input: &Relation,
    source: &Relation,
    group_key: &str,
    name: &str,
    key_col: &str,
    value_col: &str,
) -> Result<Relation, AlgebraError> {
    let layout = extend_schema(&input.def, &source.def, group_key, name, key_col, value_col)?;
    let mut groups: HashMap<KeyRepr<'_>, RatingMap> = HashMap::new();
    for t in &source.tuples {
        let (Some(g), Value::Int(k), Some(v)) = (
            key_repr(&t[layout.source_group]),
            &t[layout.source_key],
            t[layout.source_value].as_f64(),
        ) else {
            continue;
        };
        groups.entry(g).or_default().insert(*k, v);
    }
    let tuples = input
        .tuples
        .iter()
        .map(|t| {
            let map = key_repr(&t[layout.input_group])
                .and_then(|g| groups.get(&g))
                .cloned()
                .unwrap_or_default();
            let mut row = t.clone();
            row.push(Value::RatingMap(map));
            row
        })
        .collect();
    Ok(Relation {
        def: layout.def,
        tuples,
    })
}

/// Output of [`recommend_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub relation: Relation,
    /// Aggregate mode with `mean` or `max`: output positions of candidates
    /// that matched no reference row and were assigned 0. A `sum` over no
    /// rows is a genuine 0 and is not flagged.
    pub unmatched: Vec<usize>,
}

/// Ranks `candidates` against `reference`; see [`recommend_detailed`].
pub fn op_recommend(
    candidates: &Relation,
    reference: &Relation,
    mode: &RecommendMode,
    agg: Agg,
    top: Option<u64>,
) -> Result<Relation, AlgebraError> {
    recommend_detailed(candidates, reference, mode, agg, top).map(|r| r.relation)
}

/// Scores every candidate, sorts by score descending with ties broken by
/// primary key (then the remaining scalar columns) ascending, and keeps the
/// first `top` rows.
pub fn recommend_detailed(
    candidates: &Relation,
    reference: &Relation,
    mode: &RecommendMode,
    agg: Agg,
    top: Option<u64>,
) -> Result<Recommendation, AlgebraError> {
    let layout = recommend_schema(&candidates.def, &reference.def, mode)?;
    let scores: Vec<Option<f64>> = match mode {
        RecommendMode::Similarity { function, .. } => {
            similarity_scores(candidates, reference, &layout, *function, agg)
        }
        RecommendMode::Aggregate { .. } => aggregate_scores(candidates, reference, &layout, agg),
    };

    let mut rows: Vec<(Tuple, f64, bool)> = candidates
        .tuples
        .iter()
        .zip(scores)
        .map(|(t, s)| {
            let mut row: Tuple = layout.kept.iter().map(|&i| t[i].clone()).collect();
            let score = s.unwrap_or(0.0);
            row.push(Value::Float(score));
            (row, score, s.is_none())
        })
        .collect();
    rows.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| compare_on(&a.0, &b.0, &layout.tie_break))
    });
    if let Some(top) = top {
        rows.truncate(usize::try_from(top).unwrap_or(usize::MAX));
    }
    let unmatched = match mode {
        RecommendMode::Aggregate { .. } if agg != Agg::Sum => rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.2)
            .map(|(i, _)| i)
            .collect(),
        _ => Vec::new(),
    };
    Ok(Recommendation {
        relation: Relation {
            def: layout.def,
            tuples: rows.into_iter().map(|r| r.0).collect(),
        },
        unmatched,
    })
}

fn compare_on(a: &Tuple, b: &Tuple, columns: &[usize]) -> Ordering {
    columns
        .iter()
        .map(|&i| a[i].sort_cmp(&b[i]))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn similarity_scores(
    candidates: &Relation,
    reference: &Relation,
    layout: &RecommendLayout,
    function: SimilarityFn,
    agg: Agg,
) -> Vec<Option<f64>> {
    let empty = RatingMap::new();
    let as_map = |v: &Value| v.as_map().cloned().unwrap_or_else(|| empty.clone());
    let as_tokens = |v: &Value| -> TokenList { v.as_text().map(tokenize).unwrap_or_default() };
    let mut values = Vec::with_capacity(reference.len());
    match function {
        SimilarityFn::Jaccard => {
            let refs: Vec<TokenList> = reference
                .tuples
                .iter()
                .map(|t| as_tokens(&t[layout.reference_col]))
                .collect();
            candidates
                .tuples
                .iter()
                .map(|c| {
                    let tokens = as_tokens(&c[layout.candidate_col]);
                    values.clear();
                    values.extend(refs.iter().map(|r| sim_jaccard(&tokens, r)));
                    agg.apply(&values)
                })
                .collect()
        }
        SimilarityFn::Pearson | SimilarityFn::InvEuclidean => {
            let f = if function == SimilarityFn::Pearson {
                sim_pearson
            } else {
                sim_inv_euclidean
            };
            let refs: Vec<RatingMap> = reference
                .tuples
                .iter()
                .map(|t| as_map(&t[layout.reference_col]))
                .collect();
            candidates
                .tuples
                .iter()
                .map(|c| {
                    let map = as_map(&c[layout.candidate_col]);
                    values.clear();
                    values.extend(refs.iter().map(|r| f(&map, r)));
                    agg.apply(&values)
                })
                .collect()
        }
    }
}

fn aggregate_scores(
    candidates: &Relation,
    reference: &Relation,
    layout: &RecommendLayout,
    agg: Agg,
) -> Vec<Option<f64>> {
    let value_col = layout.value_col.expect("aggregate mode");
    let mut groups: HashMap<KeyRepr<'_>, Vec<f64>> = HashMap::new();
    for t in &reference.tuples {
        if let (Some(k), Some(v)) = (key_repr(&t[layout.reference_col]), t[value_col].as_f64()) {
            groups.entry(k).or_default().push(v);
        }
    }
    candidates
        .tuples
        .iter()
        .map(|c| {
            key_repr(&c[layout.candidate_col])
                .and_then(|k| groups.get(&k))
                .and_then(|vals| agg.apply(vals))
        })
        .collect()
}
