use std::fmt::Write as _;

use crate::algebra::{Literal, Node, Operand, Predicate, RecommendMode, WorkflowAst};
use crate::sql::format_float;

/// Canonical text: one binding per line, two-space indent, `agg` always
/// written, nested operators parenthesized.
pub fn format(ast: &WorkflowAst) -> String {
    let mut out = String::new();
    let params: Vec<String> = ast
        .params
        .iter()
        .map(|p| format!("{}: {}", p.name, p.ty))
        .collect();
    let _ = writeln!(out, "workflow {}({}):", ast.name, params.join(", "));
    for b in &ast.bindings {
        let _ = writeln!(out, "  {} = {}", b.name, expr(&b.expr));
    }
    out
}

fn operand(node: &Node) -> String {
    match node {
        Node::Ref(name) => name.clone(),
        other => format!("({})", expr(other)),
    }
}

fn expr(node: &Node) -> String {
    match node {
        Node::Ref(name) => name.clone(),
        Node::Select { input, predicate } => {
            format!("select {} where {}", operand(input), pred(predicate))
        }
        Node::Project { input, columns } => {
            format!("project {} on {}", operand(input), columns.join(", "))
        }
        Node::Join {
            left,
            right,
            left_col,
            right_col,
        } => format!(
            "join {}, {} on {left_col} = {right_col}",
            operand(left),
            operand(right)
        ),
        Node::Extend {
            input,
            source,
            group_key,
            name,
            key_col,
            value_col,
        } => format!(
            "extend {} with {name} from {} key {group_key} map ({key_col} -> {value_col})",
            operand(input),
            operand(source)
        ),
        Node::Recommend {
            candidates,
            reference,
            mode,
            agg,
            top,
        } => {
            let mut s = format!(
                "recommend {} against {} ",
                operand(candidates),
                operand(reference)
            );
            match mode {
                RecommendMode::Similarity {
                    candidate_col,
                    reference_col,
                    function,
                } => {
                    let _ = write!(
                        s,
                        "compare {candidate_col} ~ {reference_col} using {function}"
                    );
                }
                RecommendMode::Aggregate {
                    value_col,
                    candidate_key,
                    reference_key,
                } => {
                    let _ = write!(
                        s,
                        "aggregate {value_col} match {candidate_key} = {reference_key}"
                    );
                }
            }
            let _ = write!(s, " agg {agg}");
            if let Some(top) = top {
                let _ = write!(s, " top {top}");
            }
            s
        }
    }
}

fn pred(p: &Predicate) -> String {
    p.conjuncts
        .iter()
        .map(|c| {
            let value = match &c.operand {
                Operand::Param(name) => format!("${name}"),
                Operand::Literal(l) => literal(l),
            };
            format!("{} {} {value}", c.column, c.op.symbol())
        })
        .collect::<Vec<_>>()
        .join(" and ")
}

pub(crate) fn literal(l: &Literal) -> String {
    match l {
        Literal::Int(i) => i.to_string(),
        Literal::Float(f) => {
            let s = format_float(*f);
            if s.contains(['.', 'e']) {
                s
            } else {
                format!("{s}.0")
            }
        }
        Literal::Text(s) => {
            let mut out = String::with_capacity(s.len() + 2);
            out.push('"');
            for ch in s.chars() {
                match ch {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    '\r' => out.push_str("\\r"),
                    other => out.push(other),
                }
            }
            out.push('"');
            out
        }
    }
}
