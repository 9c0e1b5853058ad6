mod common;

use flexcloud::algebra::{Node, RecommendMode};
use flexcloud::dsl::{format, parse, parse_bytes, Severity};
use proptest::prelude::*;

fn count(node: &Node, pred: &dyn Fn(&Node) -> bool) -> usize {
    usize::from(pred(node))
        + node
            .children()
            .into_iter()
            .map(|c| count(c, pred))
            .sum::<usize>()
}

#[test]
fn collaborative_filtering_program_shape() {
    let ast = common::workflow("cf_courses");
    assert_eq!(ast.name, "cf_courses");
    assert_eq!(ast.bindings.len(), 7);
    let total = |pred: &dyn Fn(&Node) -> bool| {
        ast.bindings
            .iter()
            .map(|b| count(&b.expr, pred))
            .sum::<usize>()
    };
    assert_eq!(total(&|n| matches!(n, Node::Recommend { .. })), 2);
    assert_eq!(total(&|n| matches!(n, Node::Extend { .. })), 2);
    let modes: Vec<bool> = ast
        .bindings
        .iter()
        .filter_map(|b| match &b.expr {
            Node::Recommend { mode, .. } => Some(matches!(mode, RecommendMode::Similarity { .. })),
            _ => None,
        })
        .collect();
    assert_eq!(modes, [true, false]);
}

#[test]
fn fixture_programs_round_trip() {
    for name in ["cf_courses", "similar_titles"] {
        let ast = common::workflow(name);
        let text = format(&ast);
        assert_eq!(parse(&text).unwrap(), ast, "{text}");
        assert_eq!(format(&parse(&text).unwrap()), text);
    }
}

#[test]
fn errors_carry_positions() {
    let diags = parse("").unwrap_err();
    assert_eq!(diags[0].severity, Severity::Error);
    assert!(
        diags[0].message.contains("expected 'workflow'"),
        "{}",
        diags[0].message
    );
    assert_eq!((diags[0].span.line, diags[0].span.column), (1, 1));

    let source = "workflow w():\n  out = recommend Courses against Comments aggregate Rating match CourseID = CourseID agg median\n";
    let diags = parse(source).unwrap_err();
    let span = diags[0].span;
    assert_eq!(&source[span.start..span.end], "median");
    assert_eq!(span.line, 2);
}

#[test]
fn comments_are_ignored() {
    let with = parse("# leading\nworkflow w(): # trailing\n  out = Courses # done\n").unwrap();
    let without = parse("workflow w():\n  out = Courses\n").unwrap();
    assert_eq!(with, without);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..160)) {
        match parse_bytes(&bytes) {
            Ok(ast) => prop_assert!(!ast.bindings.is_empty()),
            Err(diags) => {
                prop_assert!(diags.iter().any(|d| d.severity == Severity::Error));
                for d in diags {
                    prop_assert!(d.span.start <= d.span.end && d.span.end <= bytes.len());
                }
            }
        }
    }

    #[test]
    fn keyword_soup_never_panics(words in proptest::collection::vec(
        prop::sample::select(vec![
            "workflow", "w", "(", ")", ":", "x", "=", "select", "project", "join", "extend",
            "recommend", "Courses", "where", "on", ",", "with", "from", "key", "map", "->",
            "against", "compare", "~", "using", "jaccard", "aggregate", "match", "agg", "max",
            "top", "3", "$p", "int", "\"s\"", "!=", "2.5", "\n",
        ]),
        0..60,
    )) {
        let source = words.join(" ");
        if let Ok(ast) = parse(&source) {
            prop_assert_eq!(parse(&format(&ast)).unwrap(), ast);
        }
    }
}
