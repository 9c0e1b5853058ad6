//! The workflow language.
//!
//! ```text
//! workflow cf_courses(target: int):
//!   t  = select Students where SuID = $target
//!   te = extend t with ratings from Comments key SuID map (CourseID -> Rating)
//!   ...
//!   out = recommend Courses against sc aggregate Rating match CourseID = CourseID agg mean top 10
//! ```
//!
//! Keywords are lowercase and reserved. Operands may be parenthesized;
//! [`format`] parenthesizes every nested operator so that the output always
//! reads back to the same tree. `#` starts a comment.

mod format;
mod lexer;
mod parser;

use std::fmt;

use serde::Serialize;

use crate::algebra::WorkflowAst;

pub use format::format;

pub const KEYWORDS: &[&str] = &[
    "against",
    "agg",
    "aggregate",
    "and",
    "compare",
    "extend",
    "float",
    "from",
    "int",
    "join",
    "key",
    "map",
    "match",
    "max",
    "mean",
    "on",
    "project",
    "recommend",
    "select",
    "sum",
    "text",
    "top",
    "using",
    "where",
    "with",
    "workflow",
];

/// Deepest operator nesting accepted.
pub const MAX_NESTING: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    /// Byte offsets.
    pub start: usize,
    pub end: usize,
    /// 1-based, of `start`; columns count characters.
    pub line: usize,
    pub column: usize,
}

impl SourceSpan {
    pub fn new(src: &str, start: usize, end: usize) -> Self {
        let before = &src.as_bytes()[..start];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let line_start = before
            .iter()
            .rposition(|&b| b == b'\n')
            .map_or(0, |i| i + 1);
        let column = String::from_utf8_lossy(&before[line_start..])
            .chars()
            .count()
            + 1;
        SourceSpan {
            start,
            end,
            line,
            column,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub message: String,
    pub severity: Severity,
    pub span: SourceSpan,
}

impl Diagnostic {
    pub fn error(message: String, span: SourceSpan) -> Self {
        Diagnostic {
            message,
            severity: Severity::Error,
            span,
        }
    }

    pub fn warning(message: String, span: SourceSpan) -> Self {
        Diagnostic {
            message,
            severity: Severity::Warning,
            span,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {sev}: {}",
            self.span.line, self.span.column, self.message
        )
    }
}

/// Parses a workflow. Only errors are returned; see [`check`] for warnings.
pub fn parse(source: &str) -> Result<WorkflowAst, Vec<Diagnostic>> {
    check(source).map(|(ast, _)| ast)
}

/// Parses a workflow and also reports warnings (unused bindings).
pub fn check(source: &str) -> Result<(WorkflowAst, Vec<Diagnostic>), Vec<Diagnostic>> {
    let toks = lexer::lex(source).map_err(|d| vec![d])?;
    let parsed = parser::Parser::new(source, toks).workflow()?;
    Ok((parsed.ast, parsed.warnings))
}

/// Like [`parse`] but accepts arbitrary bytes; invalid UTF-8 is an error.
pub fn parse_bytes(source: &[u8]) -> Result<WorkflowAst, Vec<Diagnostic>> {
    match std::str::from_utf8(source) {
        Ok(s) => parse(s),
        Err(e) => {
            let at = e.valid_up_to();
            let valid = std::str::from_utf8(&source[..at]).expect("valid prefix");
            let mut span = SourceSpan::new(valid, at, at);
            span.end = at + e.error_len().unwrap_or(source.len() - at);
            Err(vec![Diagnostic::error(
                "source is not valid UTF-8".into(),
                span,
            )])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Agg, Node, RecommendMode};
    use crate::textkit::SimilarityFn;

    const CF: &str = include_str!("../../../../fixtures/courserank/workflows/cf_courses.frx");

    fn first_error(src: &str) -> Diagnostic {
        parse(src).unwrap_err().remove(0)
    }

    #[test]
    fn canonical_program() {
        let ast = parse(CF).unwrap();
        assert_eq!(ast.name, "cf_courses");
        assert_eq!(ast.bindings.len(), 7);
        let count = |pred: fn(&Node) -> bool| ast.bindings.iter().filter(|b| pred(&b.expr)).count();
        assert_eq!(count(|n| matches!(n, Node::Recommend { .. })), 2);
        assert_eq!(count(|n| matches!(n, Node::Extend { .. })), 2);
        match &ast.bindings[4].expr {
            Node::Recommend { mode, agg, top, .. } => {
                assert!(matches!(
                    mode,
                    RecommendMode::Similarity {
                        function: SimilarityFn::InvEuclidean,
                        ..
                    }
                ));
                assert_eq!((*agg, *top), (Agg::Max, Some(20)));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(parse(&format(&ast)).unwrap(), ast);
    }

    #[test]
    fn empty_source() {
        let d = first_error("");
        assert_eq!(d.message, "expected 'workflow', found end of input");
        assert_eq!((d.span.line, d.span.column), (1, 1));
        assert!(d.message.contains("expected 'workflow'"));
    }

    #[test]
    fn unknown_aggregation_is_located() {
        let src = "workflow w():\n  out = recommend A against B aggregate v match k = k agg median";
        let d = first_error(src);
        assert!(d.message.contains("median"), "{d}");
        assert_eq!(&src[d.span.start..d.span.end], "median");
        assert_eq!(d.span.line, 2);
    }

    #[test]
    fn identity_format() {
        let ast = parse("workflow ident():\n  out = Courses\n").unwrap();
        assert_eq!(format(&ast), "workflow ident():\n  out = Courses\n");
    }

    #[test]
    fn name_errors() {
        assert!(first_error("workflow w(): a = b b = Courses")
            .message
            .contains("before it is defined"));
        assert!(first_error("workflow w(): a = a")
            .message
            .contains("before it is defined"));
        assert!(first_error("workflow w(): a = X a = Y")
            .message
            .contains("defined twice"));
        assert!(first_error("workflow w(x: int, x: int): a = X")
            .message
            .contains("declared twice"));
        assert!(first_error("workflow w(): a = select X where c = $p")
            .message
            .contains("$p"));
        assert!(first_error("workflow w(): select = X")
            .message
            .contains("reserved"));
        assert!(first_error(
            "workflow w(): a = recommend X against Y aggregate v match k = k top 0"
        )
        .message
        .contains("at least 1"));
    }

    #[test]
    fn unused_binding_warns() {
        let (_, warnings) = check("workflow w():\n  a = X\n  b = Y\n").unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].severity, Severity::Warning);
        assert_eq!((warnings[0].span.line, warnings[0].span.column), (2, 3));
    }

    #[test]
    fn default_agg_is_filled_in() {
        let ast = parse("workflow w(): a = recommend X against Y aggregate v match k = k").unwrap();
        assert!(matches!(
            ast.bindings[0].expr,
            Node::Recommend {
                agg: Agg::Mean,
                top: None,
                ..
            }
        ));
    }

    #[test]
    fn nesting_limit() {
        let deep = format!("workflow w(): a = {}X{}", "(".repeat(200), ")".repeat(200));
        assert!(first_error(&deep).message.contains("nested"));
        let ok = format!("workflow w(): a = {}X{}", "(".repeat(10), ")".repeat(10));
        assert!(parse(&ok).is_ok());
    }

    #[test]
    fn invalid_utf8() {
        let d = parse_bytes(b"workflow w():\n a = \xff")
            .unwrap_err()
            .remove(0);
        assert_eq!((d.span.line, d.span.column, d.span.start), (2, 6, 19));
    }

    #[test]
    fn nested_operands_round_trip() {
        let src = "workflow w(): a = join (project X on p, q), Y on p = p";
        let ast = parse(src).unwrap();
        assert_eq!(parse(&format(&ast)).unwrap(), ast);
        assert!(format(&ast).contains("(project X on p, q)"));
    }
}
