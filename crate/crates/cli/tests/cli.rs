mod common;

use common::{cli, engine, ingest, stdout, with_snapshot};
use flexcloud::algebra::eval_workflow;
use flexcloud::relstore::Value;
use flexcloud_cli::engine::SearchRequest;
use flexcloud_oracles::checks::fixture_args;
use flexcloud_oracles::fixtures::{fixture_store, fixture_workflow};

fn request(q: &str) -> SearchRequest {
    SearchRequest {
        q: q.into(),
        entity: None,
        limit: None,
        refine: None,
        k: None,
    }
}

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn search_json_equals_engine() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let got = stdout(&with_snapshot(
        &snap,
        &["search", "programming", "--cloud", "--json"],
    ));
    let want = engine(&snap).search(&request("programming"), true).unwrap();
    assert_eq!(got, want);
    let v: serde_json::Value = serde_json::from_str(&got).unwrap();
    // Title 3, Description 2, one per comment.
    let hits: Vec<(i64, f64)> = v["hits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| (h["id"].as_i64().unwrap(), h["score"].as_f64().unwrap()))
        .collect();
    assert_eq!(hits, [(1, 8.0), (2, 6.0)]);
}

#[test]
fn search_options_reach_the_engine() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let got = stdout(&with_snapshot(
        &snap,
        &[
            "search", "american", "--entity", "course", "--limit", "1", "--k", "3", "--cloud",
            "--json",
        ],
    ));
    let req = SearchRequest {
        q: "american".into(),
        entity: Some("course".into()),
        limit: Some(1),
        refine: None,
        k: Some(3),
    };
    assert_eq!(got, engine(&snap).search(&req, true).unwrap());
    let v: serde_json::Value = serde_json::from_str(&got).unwrap();
    assert_eq!(v["total"], 3);
    assert_eq!(v["hits"].as_array().unwrap().len(), 1);
    assert_eq!(v["cloud"]["terms"].as_array().unwrap().len(), 3);
}

#[test]
fn refining_by_a_cloud_term_narrows() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let refined = stdout(&with_snapshot(
        &snap,
        &[
            "search",
            "american",
            "--refine",
            "african american",
            "--json",
        ],
    ));
    let requery = stdout(&with_snapshot(
        &snap,
        &["search", "american \"african american\"", "--json"],
    ));
    assert_eq!(refined, requery);
    let v: serde_json::Value = serde_json::from_str(&refined).unwrap();
    assert_eq!(v["total"], 1);
    assert_eq!(v["hits"][0]["id"], 3);
}

#[test]
fn run_json_equals_eval_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let got = stdout(&with_snapshot(
        &snap,
        &[
            "run",
            "cf_courses",
            "--param",
            "target=444",
            "--top",
            "10",
            "--json",
        ],
    ));
    let v: serde_json::Value = serde_json::from_str(&got).unwrap();
    let rows = v["rows"].as_array().unwrap();

    let want = eval_workflow(
        &fixture_store(),
        &fixture_workflow("cf_courses"),
        &fixture_args("cf_courses"),
    )
    .unwrap();
    let id = want.column_index("CourseID").unwrap();
    let score = want.column_index("_score").unwrap();
    assert_eq!(rows.len(), want.tuples.len());
    for (row, tuple) in rows.iter().zip(&want.tuples) {
        assert_eq!(Value::Int(row["CourseID"].as_i64().unwrap()), tuple[id]);
        assert_eq!(Value::Float(row["_score"].as_f64().unwrap()), tuple[score]);
    }
}

#[test]
fn run_accepts_a_workflow_path() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let path = common::workflow_dir().join("similar_titles.frx");
    let by_path = stdout(&cli(&[
        "--snapshot",
        snap.to_str().unwrap(),
        "run",
        path.to_str().unwrap(),
        "--param",
        "title=Introduction to Programming",
        "--param",
        "year=2008",
        "--json",
    ]));
    let by_name = stdout(&with_snapshot(
        &snap,
        &[
            "run",
            "similar_titles",
            "--param",
            "title=Introduction to Programming",
            "--param",
            "year=2008",
            "--json",
        ],
    ));
    assert_eq!(by_path, by_name);
}

#[test]
fn run_text_output_is_tab_separated() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let text = stdout(&with_snapshot(
        &snap,
        &["run", "cf_courses", "--param", "target=444", "--top", "2"],
    ));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("CourseID\tDeptID\tTitle"));
    assert!(lines[1].starts_with("3\t"));
    assert!(lines[1].ends_with("\t4.75"));
}

#[test]
fn compile_emits_the_engine_script() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let printed = stdout(&with_snapshot(
        &snap,
        &[
            "compile",
            "cf_courses",
            "--param",
            "target=444",
            "--emit",
            "sql",
        ],
    ));
    let args = fixture_args("cf_courses");
    let (want, _) = engine(&snap)
        .sql("cf_courses", &args, Default::default())
        .unwrap();
    assert_eq!(printed, want);
    assert!(printed.contains("-- requires: sim_inv_euclidean"));

    let target = dir.path().join("cf.sql");
    let out = with_snapshot(
        &snap,
        &[
            "compile",
            "cf_courses",
            "--param",
            "target=444",
            "--emit",
            "sql",
            "--out",
            target.to_str().unwrap(),
        ],
    );
    assert_eq!(stdout(&out), "");
    assert_eq!(std::fs::read_to_string(target).unwrap(), want);
}

#[test]
fn usage_errors_exit_1() {
    let out = cli(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"));

    let out = cli(&["run", "cf_courses"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--snapshot"));

    let out = cli(&["compile", "cf_courses", "--emit", "pdf", "--snapshot", "x"]);
    assert_eq!(out.status.code(), Some(1));

    let out = cli(&["run", "cf_courses", "--param", "target", "--snapshot", "x"]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(cli(&["--help"]).status.code(), Some(0));
    assert_eq!(cli(&["--version"]).status.code(), Some(0));
}

fn data_error(out: &std::process::Output, code: &str) {
    assert_eq!(out.status.code(), Some(2), "{}", stderr(out));
    assert!(
        stderr(out).starts_with(&format!("error[{code}]")),
        "expected {code}, got {}",
        stderr(out)
    );
    assert!(out.stdout.is_empty());
}

#[test]
fn data_errors_exit_2_with_codes() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    data_error(
        &with_snapshot(&snap, &["search", "american", "--refine", "zebra"]),
        "STALE_TERM",
    );
    data_error(&with_snapshot(&snap, &["search", "  "]), "EMPTY_QUERY");
    data_error(
        &with_snapshot(&snap, &["search", "\"unclosed"]),
        "INVALID_QUERY",
    );
    data_error(
        &with_snapshot(&snap, &["search", "x", "--entity", "dorm"]),
        "UNKNOWN_ENTITY",
    );
    data_error(
        &with_snapshot(&snap, &["run", "cf_courses"]),
        "UNBOUND_PARAM",
    );
    data_error(
        &with_snapshot(&snap, &["run", "cf_courses", "--param", "target=abc"]),
        "PARAM_TYPE",
    );
    data_error(
        &with_snapshot(&snap, &["run", "cf_courses", "--param", "student=1"]),
        "UNKNOWN_PARAM",
    );
    data_error(&with_snapshot(&snap, &["run", "nope"]), "UNKNOWN_WORKFLOW");
    data_error(
        &with_snapshot(
            &snap,
            &[
                "compile",
                "cf_courses",
                "--param",
                "target=1",
                "--emit",
                "sql",
                "--dialect",
                "tsql",
            ],
        ),
        "UNSUPPORTED_DIALECT",
    );
}

#[test]
fn load_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.snap");
    let out = cli(&["--snapshot", missing.to_str().unwrap(), "search", "x"]);
    assert_eq!(out.status.code(), Some(2));

    let fixture = flexcloud_oracles::fixtures::fixture_dir();
    let out = cli(&[
        "ingest",
        "--schema",
        fixture.join("schema.json").to_str().unwrap(),
        "--data",
        dir.path().to_str().unwrap(),
        "--out",
        dir.path().join("x.snap").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.frx");
    std::fs::write(&bad, "workflow broken(:\n").unwrap();
    let snap = ingest(dir.path());
    let out = cli(&[
        "--snapshot",
        snap.to_str().unwrap(),
        "run",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.frx:1:"), "{}", stderr(&out));
}
