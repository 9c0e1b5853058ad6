use flexcloud::algebra::{eval_workflow, validate, Args, Literal};
use flexcloud::relstore::Value;
use flexcloud::sql::{compile, Dialect};
use flexcloud_oracles::checks;
use flexcloud_oracles::fixtures::{fixture_store, fixture_workflow};
use flexcloud_oracles::gen::{random_ast, random_store, random_workflow, rng, StoreSize};
use flexcloud_oracles::naive::naive_run;
use flexcloud_oracles::sqlhost::SqlHost;

#[test]
fn generated_workflows_validate() {
    let mut r = rng(7);
    for i in 0..50 {
        let size = StoreSize::random(&mut r);
        let store = random_store(&mut r, size);
        let (ast, _) = random_workflow(&mut r, &store, &format!("w{i}"));
        validate(&ast, &store.schema()).unwrap();
    }
}

#[test]
fn generated_asts_have_bindings() {
    let mut r = rng(8);
    for _ in 0..100 {
        assert!(!random_ast(&mut r).bindings.is_empty());
    }
}

#[test]
fn host_returns_base_relation_in_order() {
    let store = fixture_store();
    let ast = flexcloud::dsl::parse("workflow ident():\n  out = Comments\n").unwrap();
    let script = compile(&ast, &store.schema(), &Args::new(), Dialect::Ansi).unwrap();
    let host = SqlHost::load(&store).unwrap();
    let out = host
        .run(&script, &store.relation("Comments").unwrap().def)
        .unwrap();
    assert_eq!(out.tuples, store.relation("Comments").unwrap().tuples);
}

#[test]
fn naive_interpreter_agrees_on_collaborative_filtering() {
    let store = fixture_store();
    let ast = fixture_workflow("cf_courses");
    let args: Args = [("target".to_string(), Literal::Int(444))].into();
    let naive = naive_run(&store, &ast, &args);
    let fast = eval_workflow(&store, &ast, &args).unwrap();
    assert_eq!(naive.rows, fast.tuples);
    assert!(matches!(naive.rows[0].last(), Some(Value::Float(s)) if *s > 0.0));
}

#[test]
fn similarity_suite() {
    checks::similarity_suite().unwrap();
}

#[test]
fn search_matches_exhaustive_scan() {
    checks::search_oracle().unwrap();
}

#[test]
fn cloud_matches_brute_force_recount() {
    checks::cloud_oracle().unwrap();
}

#[test]
fn fixture_workflows_match_straight_line_scripts() {
    checks::workflow_oracles().unwrap();
}

#[test]
fn executor_matches_naive_interpreter() {
    checks::algebra_differential(150).unwrap();
}

#[test]
fn compiled_sql_matches_executor() {
    checks::sql_differential(60).unwrap();
}

#[test]
fn dsl_round_trip_and_fuzz() {
    checks::dsl_suite(200, 10_000).unwrap();
}
