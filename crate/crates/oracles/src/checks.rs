//! One function per acceptance criterion. Each runs its whole suite and
//! reports the first disagreement it finds.

use std::sync::mpsc;
use std::time::Duration;

use flexcloud::algebra::{eval_workflow, Args, Literal, WorkflowAst};
use flexcloud::cloud::{compute_cloud, refine};
use flexcloud::relstore::{Relation, Store, Value};
use flexcloud::search::{EntitySpec, QueryTerm, SearchIndex};
use flexcloud::sql::{compile, Dialect};
use flexcloud::textkit::{sim_inv_euclidean, sim_jaccard, sim_pearson, tokenize};
use rand::Rng;

use crate::fixtures::{course_spec, fixture_store, fixture_workflow};
use crate::gen::{
    random_ast, random_map, random_query, random_store, random_tokens, random_workflow, rng,
    StoreSize, TestRng,
};
use crate::naive::naive_run;
use crate::scan::{brute_cloud, scan_search, term, Term};
use crate::scripts::{collaborative_filtering, similar_titles};
use crate::sim::{naive_inv_euclidean, naive_jaccard, naive_pearson};
use crate::sqlhost::SqlHost;

pub type Check = Result<(), String>;

pub const SIMILARITY_TOLERANCE: f64 = 1e-12;
pub const SCORE_TOLERANCE: f64 = 1e-9;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn map(pairs: &[(i64, f64)]) -> flexcloud::relstore::RatingMap {
    pairs.iter().copied().collect()
}

pub fn similarity_suite() -> Check {
    let tol = SIMILARITY_TOLERANCE;
    let t = |s: &str| tokenize(s);
    let cases = [
        (
            "jaccard identical",
            sim_jaccard(&t("data systems"), &t("systems data")),
            1.0,
        ),
        (
            "jaccard disjoint",
            sim_jaccard(&t("modern poetry"), &t("data systems")),
            0.0,
        ),
        (
            "jaccard programming titles",
            sim_jaccard(
                &t("Introduction to Programming"),
                &t("Advanced Programming"),
            ),
            0.25,
        ),
        (
            "inv_euclidean identity",
            sim_inv_euclidean(&map(&[(1, 4.0), (2, 2.0)]), &map(&[(1, 4.0), (2, 2.0)])),
            1.0,
        ),
        (
            "inv_euclidean distance two",
            sim_inv_euclidean(&map(&[(1, 4.0), (2, 2.0)]), &map(&[(1, 2.0), (2, 2.0)])),
            1.0 / 3.0,
        ),
        (
            "inv_euclidean disjoint",
            sim_inv_euclidean(&map(&[(1, 4.0)]), &map(&[(2, 4.0)])),
            0.0,
        ),
        (
            "pearson positive",
            sim_pearson(
                &map(&[(1, 1.0), (2, 2.0), (3, 3.0)]),
                &map(&[(1, 2.0), (2, 4.0), (3, 6.0)]),
            ),
            1.0,
        ),
        (
            "pearson negative",
            sim_pearson(
                &map(&[(1, 1.0), (2, 2.0), (3, 3.0)]),
                &map(&[(1, 3.0), (2, 2.0), (3, 1.0)]),
            ),
            -1.0,
        ),
        (
            "pearson single key",
            sim_pearson(&map(&[(1, 1.0), (2, 5.0)]), &map(&[(1, 3.0)])),
            0.0,
        ),
    ];
    for (name, got, want) in cases {
        ensure(close(got, want, tol), || {
            format!("{name}: got {got}, want {want}")
        })?;
    }

    let mut r = rng(101);
    for i in 0..1000 {
        let (a, b) = (random_tokens(&mut r), random_tokens(&mut r));
        let (got, want) = (sim_jaccard(&a, &b), naive_jaccard(&a, &b));
        ensure(close(got, want, tol), || {
            format!("jaccard case {i} {a:?} {b:?}: {got} vs {want}")
        })?;

        let (u, v) = (random_map(&mut r), random_map(&mut r));
        let (nu, nv) = (u.iter().collect(), v.iter().collect());
        let (got, want) = (sim_pearson(&u, &v), naive_pearson(&nu, &nv));
        ensure(close(got, want, tol), || {
            format!("pearson case {i} {u:?} {v:?}: {got} vs {want}")
        })?;
        let (got, want) = (sim_inv_euclidean(&u, &v), naive_inv_euclidean(&nu, &nv));
        ensure(close(got, want, tol), || {
            format!("inv_euclidean case {i} {u:?} {v:?}: {got} vs {want}")
        })?;
    }
    Ok(())
}

/// Stores for the search and cloud suites: up to 100 courses and 300
/// comments.
pub fn search_stores(count: usize, seed: u64) -> Vec<(Store, TestRng)> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let size = StoreSize {
                courses: r.gen_range(0..=100),
                students: r.gen_range(0..=20),
                comments: r.gen_range(0..=300),
            };
            (random_store(&mut r, size), rng(seed * 1000 + i as u64))
        })
        .collect()
}

fn query_terms(texts: &[String]) -> (Vec<QueryTerm>, Vec<Term>) {
    let q = texts
        .iter()
        .map(|t| QueryTerm::parse(t).expect("generated term"))
        .collect();
    (q, texts.iter().map(|t| term(t)).collect())
}

pub fn search_oracle() -> Check {
    let spec = EntitySpec::default_course();
    for (s, (store, mut r)) in search_stores(20, 3).into_iter().enumerate() {
        let index = SearchIndex::build(&store, &spec).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let texts = random_query(&mut r, &store);
            let (q, terms) = query_terms(&texts);
            let got = index.search(&q, None).map_err(|e| e.to_string())?;
            let want = scan_search(&store, &spec, &terms);
            let got_rows: Vec<(Value, f64, Vec<String>)> = got
                .hits
                .iter()
                .map(|h| (h.id.clone(), h.score, h.fields.clone()))
                .collect();
            ensure(got.total == want.len() && got_rows == want, || {
                format!("store {s}, query {texts:?}:\n index {got_rows:?}\n scan  {want:?}")
            })?;
        }
    }
    Ok(())
}

pub fn cloud_oracle() -> Check {
    let spec = EntitySpec::default_course();
    for (s, (store, mut r)) in search_stores(20, 3).into_iter().enumerate() {
        let index = SearchIndex::build(&store, &spec).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let texts = random_query(&mut r, &store);
            let (q, terms) = query_terms(&texts);
            let k = [5, 10, 30][r.gen_range(0..3)];
            let result = index.search(&q, Some(3)).map_err(|e| e.to_string())?;
            let cloud = compute_cloud(&index, &result, k);
            let got: Vec<(String, f64, usize)> = cloud
                .terms
                .iter()
                .map(|t| (t.term.key(), t.weight, t.doc_count))
                .collect();
            let want = brute_cloud(&store, &spec, &terms, k);
            ensure(got == want, || {
                format!("store {s}, query {texts:?}, k {k}:\n index {got:?}\n brute {want:?}")
            })?;
        }
    }

    let store = fixture_store();
    let index = SearchIndex::build(&store, &course_spec()).map_err(|e| e.to_string())?;
    let query = vec![QueryTerm::Word("american".into())];
    let before = index.search(&query, None).map_err(|e| e.to_string())?;
    let cloud = compute_cloud(&index, &before, 30);
    let phrase = QueryTerm::Phrase("african".into(), "american".into());
    ensure(cloud.terms.iter().any(|t| t.term == phrase), || {
        format!(
            "cloud for \"american\" lacks \"african american\": {:?}",
            cloud.terms
        )
    })?;
    let (after, _) = refine(&index, &query, &phrase, 30, None).map_err(|e| e.to_string())?;
    let (old, new) = (before.ids(), after.ids());
    ensure(
        !new.is_empty() && new.len() < old.len() && new.iter().all(|id| old.contains(id)),
        || format!("refinement did not strictly narrow: {old:?} -> {new:?}"),
    )
}

fn scored(rel: &Relation) -> Vec<(i64, f64)> {
    let id = rel.column_index("CourseID").expect("CourseID");
    let score = rel.column_index("_score").expect("_score");
    rel.tuples
        .iter()
        .map(|t| match (&t[id], &t[score]) {
            (Value::Int(i), Value::Float(s)) => (*i, *s),
            other => panic!("unexpected output row {other:?}"),
        })
        .collect()
}

fn same_ranking(got: &[(i64, f64)], want: &[(i64, f64)]) -> bool {
    got.len() == want.len()
        && got
            .iter()
            .zip(want)
            .all(|(a, b)| a.0 == b.0 && close(a.1, b.1, SCORE_TOLERANCE))
}

pub fn fixture_args(workflow: &str) -> Args {
    match workflow {
        "cf_courses" => [("target".to_string(), Literal::Int(444))].into(),
        "similar_titles" => [
            (
                "title".to_string(),
                Literal::Text("Introduction to Programming".into()),
            ),
            ("year".to_string(), Literal::Int(2008)),
        ]
        .into(),
        other => panic!("no fixture arguments for {other}"),
    }
}

pub fn workflow_oracles() -> Check {
    let store = fixture_store();

    let out = eval_workflow(
        &store,
        &fixture_workflow("similar_titles"),
        &fixture_args("similar_titles"),
    )
    .map_err(|e| e.to_string())?;
    let got = scored(&out);
    let want = similar_titles(&store, "Introduction to Programming", 2008);
    ensure(same_ranking(&got, &want), || {
        format!("similar_titles: {got:?} vs oracle {want:?}")
    })?;
    let title = out.column_index("Title").unwrap();
    let at = |t: &str| {
        out.tuples
            .iter()
            .position(|row| row[title] == Value::Text(t.into()))
    };
    let (intro, advanced) = (
        at("Introduction to Programming"),
        at("Advanced Programming"),
    );
    ensure(
        matches!((intro, advanced), (Some(0), Some(i)) if close(got[i].1, 0.25, SIMILARITY_TOLERANCE)),
        || format!("expected the reference course first and Advanced Programming at 0.25: {got:?}"),
    )?;

    let out = eval_workflow(
        &store,
        &fixture_workflow("cf_courses"),
        &fixture_args("cf_courses"),
    )
    .map_err(|e| e.to_string())?;
    let got = scored(&out);
    let want = collaborative_filtering(&store, 444);
    ensure(same_ranking(&got, &want), || {
        format!("cf_courses: {got:?} vs oracle {want:?}")
    })
}

pub fn random_instances(count: usize, seed: u64) -> Vec<(Store, WorkflowAst, Args)> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let size = StoreSize::random(&mut r);
            let store = random_store(&mut r, size);
            let (ast, args) = random_workflow(&mut r, &store, &format!("w{i}"));
            (store, ast, args)
        })
        .collect()
}

pub fn algebra_differential(count: usize) -> Check {
    for (store, ast, args) in random_instances(count, 21) {
        let fast = eval_workflow(&store, &ast, &args).map_err(|e| e.to_string())?;
        let naive = naive_run(&store, &ast, &args);
        let names: Vec<&str> = fast.def.columns.iter().map(|c| c.name.as_str()).collect();
        let naive_names: Vec<&str> = naive.columns.iter().map(|c| c.0.as_str()).collect();
        ensure(names == naive_names && naive.rows == fast.tuples, || {
            format!(
                "workflow {}:\n executor {:?}\n naive    {:?}",
                flexcloud::dsl::format(&ast),
                fast.tuples,
                naive.rows
            )
        })?;
    }
    Ok(())
}

fn same_rows(a: &[Vec<Value>], b: &[Vec<Value>]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.len() == y.len()
                && x.iter().zip(y).all(|(u, v)| match (u, v) {
                    (Value::Float(p), Value::Float(q)) => close(*p, *q, SCORE_TOLERANCE),
                    _ => u == v,
                })
        })
}

fn sql_matches(store: &Store, ast: &WorkflowAst, args: &Args) -> Check {
    let fast = eval_workflow(store, ast, args).map_err(|e| e.to_string())?;
    let script = compile(ast, &store.schema(), args, Dialect::Ansi).map_err(|e| e.to_string())?;
    let host = SqlHost::load(store).map_err(|e| e.to_string())?;
    let sql = host.run(&script, &fast.def)?;
    ensure(same_rows(&sql.tuples, &fast.tuples), || {
        format!(
            "workflow {}:\n{}\n sql      {:?}\n executor {:?}",
            flexcloud::dsl::format(ast),
            script.to_sql_text(),
            sql.tuples,
            fast.tuples
        )
    })
}

pub fn sql_differential(count: usize) -> Check {
    let store = fixture_store();
    for name in ["similar_titles", "cf_courses"] {
        sql_matches(&store, &fixture_workflow(name), &fixture_args(name))?;
    }
    for (store, ast, args) in random_instances(count, 31) {
        sql_matches(&store, &ast, &args)?;
    }
    Ok(())
}

pub const FUZZ_DEADLINE: Duration = Duration::from_secs(25);

pub fn dsl_suite(asts: usize, fuzz_inputs: usize) -> Check {
    let mut r = rng(41);
    for i in 0..asts {
        let ast = random_ast(&mut r);
        let text = flexcloud::dsl::format(&ast);
        let back = flexcloud::dsl::parse(&text)
            .map_err(|d| format!("ast {i} failed to reparse: {d:?}\n{text}"))?;
        ensure(back == ast, || {
            format!("ast {i} changed after a round trip:\n{text}")
        })?;
    }

    // Parsing runs on a worker so a hang shows up as a missed deadline.
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let mut r = rng(43);
        let seeds: Vec<String> = ["similar_titles", "cf_courses"]
            .iter()
            .map(|n| {
                std::fs::read_to_string(
                    crate::fixtures::fixture_dir().join(format!("workflows/{n}.frx")),
                )
                .unwrap()
            })
            .collect();
        let mut accepted = 0usize;
        for _ in 0..fuzz_inputs {
            let input = fuzz_input(&mut r, &seeds);
            let outcome = std::panic::catch_unwind(|| flexcloud::dsl::parse_bytes(&input));
            match outcome {
                Ok(Ok(_)) => accepted += 1,
                Ok(Err(diags))
                    if diags
                        .iter()
                        .any(|d| d.severity == flexcloud::dsl::Severity::Error) => {}
                Ok(Err(_)) => {
                    let _ = tx.send(Err(format!(
                        "rejected without an error diagnostic: {input:?}"
                    )));
                    return;
                }
                Err(_) => {
                    let _ = tx.send(Err(format!("parser panicked on {input:?}")));
                    return;
                }
            }
        }
        let _ = tx.send(Ok(accepted));
    });
    match rx.recv_timeout(FUZZ_DEADLINE) {
        Ok(Ok(_)) => Ok(()),
        Ok(Err(e)) => Err(e),
        Err(_) => Err(format!("fuzzing did not finish within {FUZZ_DEADLINE:?}")),
    }
}

/// Random bytes, or a fixture workflow with a few bytes overwritten,
/// inserted or deleted.
fn fuzz_input(r: &mut TestRng, seeds: &[String]) -> Vec<u8> {
    if r.gen_bool(0.5) {
        let n = r.gen_range(0..200);
        return (0..n).map(|_| r.gen()).collect();
    }
    let mut bytes = seeds[r.gen_range(0..seeds.len())].clone().into_bytes();
    for _ in 0..r.gen_range(1..=4) {
        let at = r.gen_range(0..=bytes.len());
        match r.gen_range(0..3) {
            0 if at < bytes.len() => bytes[at] = r.gen(),
            1 => bytes.insert(at, b"()$:,=~\"#\n\xff"[r.gen_range(0..11)]),
            _ if at < bytes.len() => {
                bytes.remove(at);
            }
            _ => {}
        }
    }
    bytes
}
