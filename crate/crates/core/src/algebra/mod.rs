//! The recommendation-workflow algebra.
//!
//! A workflow is an ordered list of bindings over relational operators
//! (select, project, join) and two recommendation operators:
//!
//! * **extend** attaches a set-valued rating map to each tuple, so that a
//!   student's ratings can be compared like any other attribute;
//! * **recommend** ranks a candidate relation by comparing it with a
//!   reference relation, either through a similarity function or by
//!   aggregating matched reference values, and appends a `_score` column.
//!
//! [`eval_workflow`] is the reference executor; the SQL compiler must agree
//! with it row for row.

mod ast;
mod ops;

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::relstore::{Relation, RelationDef, Schema, Store};

pub use ast::{
    Agg, Args, Binding, CmpOp, Comparison, Literal, Node, Operand, Param, ParamType, Predicate,
    RecommendMode, WorkflowAst,
};
pub use ops::{
    extend_schema, join_schema, op_extend, op_join, op_project, op_recommend, op_select,
    project_schema, recommend_detailed, recommend_schema, select_schema, ExtendLayout, JoinLayout,
    ParamTypes, RecommendLayout, Recommendation, SCORE_COLUMN,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("unknown relation or binding {0}")]
    UnknownRelation(String),
    #[error("unknown column {column} in {relation}")]
    UnknownColumn { relation: String, column: String },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("name collision: {0}")]
    NameCollision(String),
    #[error("recommend mode does not type-check: {0}")]
    ModeType(String),
    #[error("parameter ${0} is not bound")]
    UnboundParam(String),
    #[error("parameter ${name} expects {expected}, got {found}")]
    ParamType {
        name: String,
        expected: ParamType,
        found: String,
    },
    #[error("invalid workflow: {0}")]
    Validation(String),
}

/// Output schemas of a validated workflow.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedWorkflow {
    /// Output schema of each binding, in order.
    pub bindings: Vec<(String, RelationDef)>,
}

impl ValidatedWorkflow {
    pub fn output(&self) -> &RelationDef {
        &self
            .bindings
            .last()
            .expect("validated workflows have bindings")
            .1
    }
}

/// Where a name used in a workflow points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolved<'a> {
    Binding(usize),
    Base(&'a RelationDef),
}

/// Resolves `name` as seen from binding `position`: an earlier binding if
/// one has that name, otherwise a base relation.
pub fn resolve<'a>(
    ast: &WorkflowAst,
    position: usize,
    name: &str,
    schema: &'a Schema,
) -> Result<Resolved<'a>, AlgebraError> {
    if let Some(i) = ast.bindings[..position]
        .iter()
        .rposition(|b| b.name == name)
    {
        return Ok(Resolved::Binding(i));
    }
    schema
        .relation(name)
        .map(Resolved::Base)
        .ok_or_else(|| AlgebraError::UnknownRelation(name.to_string()))
}

pub fn param_types(ast: &WorkflowAst) -> ParamTypes {
    ast.params
        .iter()
        .map(|p| (p.name.clone(), p.ty.column_type()))
        .collect()
}

/// Checks names, references and column types against `schema` and
/// computes every binding's output schema.
pub fn validate(ast: &WorkflowAst, schema: &Schema) -> Result<ValidatedWorkflow, AlgebraError> {
    if ast.bindings.is_empty() {
        return Err(AlgebraError::Validation(format!(
            "workflow {} has no bindings",
            ast.name
        )));
    }
    for (i, p) in ast.params.iter().enumerate() {
        if ast.params[..i].iter().any(|q| q.name == p.name) {
            return Err(AlgebraError::Validation(format!(
                "parameter {} declared twice",
                p.name
            )));
        }
    }
    let params = param_types(ast);
    let mut defs: Vec<(String, RelationDef)> = Vec::with_capacity(ast.bindings.len());
    for (pos, binding) in ast.bindings.iter().enumerate() {
        if ast.bindings[..pos].iter().any(|b| b.name == binding.name) {
            return Err(AlgebraError::Validation(format!(
                "binding {} defined twice",
                binding.name
            )));
        }
        let mut def = node_schema(ast, pos, &binding.expr, schema, &defs, &params)?;
        def.name = binding.name.clone();
        defs.push((binding.name.clone(), def));
    }
    Ok(ValidatedWorkflow { bindings: defs })
}

/// Output schema of `node`, which appears in binding `pos`.
pub fn node_schema(
    ast: &WorkflowAst,
    pos: usize,
    node: &Node,
    schema: &Schema,
    earlier: &[(String, RelationDef)],
    params: &ParamTypes,
) -> Result<RelationDef, AlgebraError> {
    let sub = |n: &Node| node_schema(ast, pos, n, schema, earlier, params);
    match node {
        Node::Ref(name) => Ok(match resolve(ast, pos, name, schema)? {
            Resolved::Binding(i) => earlier[i].1.clone(),
            Resolved::Base(def) => def.clone(),
        }),
        Node::Select { input, predicate } => select_schema(&sub(input)?, predicate, params),
        Node::Project { input, columns } => project_schema(&sub(input)?, columns),
        Node::Join {
            left,
            right,
            left_col,
            right_col,
        } => Ok(join_schema(&sub(left)?, &sub(right)?, left_col, right_col)?.def),
        Node::Extend {
            input,
            source,
            group_key,
            name,
            key_col,
            value_col,
        } => Ok(extend_schema(
            &sub(input)?,
            &sub(source)?,
            group_key,
            name,
            key_col,
            value_col,
        )?
        .def),
        Node::Recommend {
            candidates,
            reference,
            mode,
            ..
        } => Ok(recommend_schema(&sub(candidates)?, &sub(reference)?, mode)?.def),
    }
}

/// Checks `args` against the declared parameters. Int arguments widen to
/// float parameters.
pub fn bind_args(ast: &WorkflowAst, args: &Args) -> Result<Args, AlgebraError> {
    if let Some(extra) = args.keys().find(|k| ast.param(k).is_none()) {
        return Err(AlgebraError::Validation(format!(
            "workflow {} has no parameter {extra}",
            ast.name
        )));
    }
    let mut bound = BTreeMap::new();
    for p in &ast.params {
        let value = args
            .get(&p.name)
            .ok_or_else(|| AlgebraError::UnboundParam(p.name.clone()))?;
        let value = match (p.ty, value) {
            (ParamType::Int, Literal::Int(_))
            | (ParamType::Float, Literal::Float(_))
            | (ParamType::Text, Literal::Text(_)) => value.clone(),
            (ParamType::Float, Literal::Int(i)) => Literal::Float(*i as f64),
            (expected, found) => {
                return Err(AlgebraError::ParamType {
                    name: p.name.clone(),
                    expected,
                    found: found.column_type().to_string(),
                })
            }
        };
        bound.insert(p.name.clone(), value);
    }
    Ok(bound)
}

/// Runs `ast` over `store` with the reference in-memory executor.
pub fn eval_workflow(
    store: &Store,
    ast: &WorkflowAst,
    args: &Args,
) -> Result<Relation, AlgebraError> {
    let schema = store.schema();
    validate(ast, &schema)?;
    let args = bind_args(ast, args)?;
    let mut done: Vec<Relation> = Vec::with_capacity(ast.bindings.len());
    for (pos, binding) in ast.bindings.iter().enumerate() {
        let mut rel = Evaluator {
            ast,
            pos,
            store,
            schema: &schema,
            done: &done,
            args: &args,
        }
        .eval(&binding.expr)?
        .into_owned();
        rel.def.name = binding.name.clone();
        done.push(rel);
    }
    Ok(done.pop().expect("non-empty"))
}

struct Evaluator<'a> {
    ast: &'a WorkflowAst,
    pos: usize,
    store: &'a Store,
    schema: &'a Schema,
    done: &'a [Relation],
    args: &'a Args,
}

impl<'a> Evaluator<'a> {
    fn eval(&self, node: &Node) -> Result<Cow<'a, Relation>, AlgebraError> {
        Ok(match node {
            Node::Ref(name) => match resolve(self.ast, self.pos, name, self.schema)? {
                Resolved::Binding(i) => Cow::Borrowed(&self.done[i]),
                Resolved::Base(def) => Cow::Borrowed(
                    self.store
                        .relation(&def.name)
                        .ok_or_else(|| AlgebraError::UnknownRelation(def.name.clone()))?,
                ),
            },
            Node::Select { input, predicate } => {
                Cow::Owned(op_select(self.eval(input)?.as_ref(), predicate, self.args)?)
            }
            Node::Project { input, columns } => {
                Cow::Owned(op_project(self.eval(input)?.as_ref(), columns)?)
            }
            Node::Join {
                left,
                right,
                left_col,
                right_col,
            } => Cow::Owned(op_join(
                self.eval(left)?.as_ref(),
                self.eval(right)?.as_ref(),
                left_col,
                right_col,
            )?),
            Node::Extend {
                input,
                source,
                group_key,
                name,
                key_col,
                value_col,
            } => Cow::Owned(op_extend(
                self.eval(input)?.as_ref(),
                self.eval(source)?.as_ref(),
                group_key,
                name,
                key_col,
                value_col,
            )?),
            Node::Recommend {
                candidates,
                reference,
                mode,
                agg,
                top,
            } => Cow::Owned(op_recommend(
                self.eval(candidates)?.as_ref(),
                self.eval(reference)?.as_ref(),
                mode,
                *agg,
                *top,
            )?),
        })
    }
}

/// Names of bindings that nothing references (the output excluded).
pub fn unused_bindings(ast: &WorkflowAst) -> Vec<&str> {
    let mut used: HashMap<&str, bool> = HashMap::new();
    for b in &ast.bindings {
        for r in b.expr.references() {
            used.insert(r, true);
        }
    }
    let last = ast.bindings.len().saturating_sub(1);
    ast.bindings[..last]
        .iter()
        .filter(|b| !used.contains_key(b.name.as_str()))
        .map(|b| b.name.as_str())
        .collect()
}
