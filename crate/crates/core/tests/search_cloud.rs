mod common;

use std::collections::BTreeSet;

use flexcloud::cloud::{compute_cloud, refine};
use flexcloud::relstore::{ingest_csv, load_schema, Store, Value};
use flexcloud::search::{parse_query, EntitySpec, FieldSpec, QueryTerm, SearchError, SearchIndex};

fn ids(values: Vec<&Value>) -> Vec<i64> {
    values
        .into_iter()
        .map(|v| match v {
            Value::Int(i) => *i,
            other => panic!("{other:?}"),
        })
        .collect()
}

fn word(w: &str) -> QueryTerm {
    QueryTerm::Word(w.into())
}

#[test]
fn postings_list_the_courses_mentioning_a_word() {
    let index = common::index();
    assert_eq!(index.entity_count(), 5);
    assert_eq!(ids(index.postings(&word("programming"))), [1, 2]);
    // "programmers" is a different token.
    assert_eq!(ids(index.postings(&word("programmers"))), [1]);
}

#[test]
fn american_hits_with_weighted_counts() {
    // Title 3, Description 2, comment text 1 per occurrence.
    //   course 3: title 1, description 1, comments 1 + 2 + 1 = 3 + 2 + 4
    //   course 4: title 1, description 1, comments 1 + 1     = 3 + 2 + 2
    //   course 5: one comment                                 = 1
    let result = common::index().search(&[word("american")], None).unwrap();
    let got: Vec<(i64, f64)> = result
        .hits
        .iter()
        .map(|h| (ids(vec![&h.id])[0], h.score))
        .collect();
    assert_eq!(got, [(3, 9.0), (4, 7.0), (5, 1.0)]);
    assert_eq!(result.total, 3);
    assert_eq!(
        result.hits[0].fields,
        ["Title", "Description", "Comments.Text"]
    );
    assert_eq!(result.hits[2].fields, ["Comments.Text"]);
}

#[test]
fn absent_term_has_no_hits() {
    let result = common::index()
        .search(&[word("quantum")], Some(20))
        .unwrap();
    assert_eq!(result.total, 0);
    assert!(result.hits.is_empty());
    assert_eq!(
        common::index().search(&[], None),
        Err(SearchError::EmptyQuery)
    );
}

fn two_course_store(first: (&str, &str), second: (&str, &str)) -> Store {
    let schema = load_schema(
        r#"{"relations":[
          {"name":"Courses","primary_key":"CourseID","columns":[
            {"name":"CourseID","type":"int"},{"name":"Title","type":"text"},{"name":"Description","type":"text"}]},
          {"name":"Comments","primary_key":"CommentID","columns":[
            {"name":"CommentID","type":"int"},{"name":"CourseID","type":"int"},{"name":"Text","type":"text"}]}]}"#,
    )
    .unwrap();
    let courses = format!(
        "CourseID,Title,Description\n1,{},\n2,{},\n",
        first.0, second.0
    );
    let comments = format!(
        "CommentID,CourseID,Text\n1,1,{}\n2,2,{}\n",
        first.1, second.1
    );
    Store::new(vec![
        ingest_csv(&schema, "Courses", courses.as_bytes()).unwrap(),
        ingest_csv(&schema, "Comments", comments.as_bytes()).unwrap(),
    ])
    .unwrap()
}

#[test]
fn title_match_outranks_comment_match() {
    // Course 2 has java in its title, course 1 only in a comment.
    let store = two_course_store(("Systems", "lots of java"), ("Java Systems", "lots of fun"));
    let index = SearchIndex::build(&store, &EntitySpec::default_course()).unwrap();
    let result = index.search(&[word("java")], None).unwrap();
    assert_eq!(ids(result.ids()), [2, 1]);
    assert_eq!(result.hits[0].score, 3.0);
    assert_eq!(result.hits[1].score, 1.0);
}

#[test]
fn raising_the_matching_field_weight_raises_the_score() {
    let store = two_course_store(("Systems", "lots of java"), ("Design", "fun"));
    let mut last = 0.0;
    for weight in [0.5, 1.0, 2.5, 7.0] {
        let mut spec = EntitySpec::default_course();
        spec.parts[0].fields = vec![FieldSpec::new("Text", weight)];
        let index = SearchIndex::build(&store, &spec).unwrap();
        let score = index.search(&[word("java")], None).unwrap().hits[0].score;
        assert!(score > last);
        last = score;
    }
}

#[test]
fn programming_cloud_weights() {
    // N = 5; "languages" occurs twice and "advanced" three times, all in
    // course 2, so both have df = 1.
    let index = common::index();
    let result = index.search(&[word("programming")], None).unwrap();
    let cloud = compute_cloud(&index, &result, 30);
    let weight = |t: &str| {
        cloud
            .terms
            .iter()
            .find(|c| c.term.key() == t)
            .map(|c| (c.weight, c.doc_count))
    };
    assert_eq!(weight("languages"), Some((2.0 * 6f64.ln(), 1)));
    assert_eq!(weight("advanced"), Some((3.0 * 6f64.ln(), 1)));
    assert!(weight("programming").is_none());
}

#[test]
fn american_cloud_keeps_bigrams_and_refines_to_the_phrase() {
    let index = common::index();
    let query = vec![word("american")];
    let before = index.search(&query, None).unwrap();
    let cloud = compute_cloud(&index, &before, 30);
    let keys: Vec<String> = cloud.terms.iter().map(|t| t.term.key()).collect();
    assert!(keys.contains(&"latin american".to_string()), "{keys:?}");
    assert!(keys.contains(&"african american".to_string()), "{keys:?}");
    assert!(!keys.contains(&"american".to_string()));

    let phrase = QueryTerm::Phrase("african".into(), "american".into());
    let (after, next) = refine(&index, &query, &phrase, 30, None).unwrap();
    // Only course 3 mentions the phrase, in title, description and comments.
    assert_eq!(ids(after.ids()), [3]);
    assert_eq!(next.query, [word("american"), phrase]);
}

#[test]
fn every_cloud_term_narrows_to_a_nonempty_subset() {
    let index = common::index();
    for q in [
        "american",
        "programming",
        "java",
        "great",
        "\"latin american\"",
    ] {
        let query = parse_query(q).unwrap();
        let before = index.search(&query, None).unwrap();
        let old: BTreeSet<i64> = ids(before.ids()).into_iter().collect();
        for term in compute_cloud(&index, &before, 30).terms {
            let (after, _) = refine(&index, &query, &term.term, 30, None).unwrap();
            let new: BTreeSet<i64> = ids(after.ids()).into_iter().collect();
            assert!(
                !new.is_empty() && new.is_subset(&old),
                "{q} + {}",
                term.term
            );
            assert_eq!(new.len(), term.doc_count);
        }
    }
}

#[test]
fn stale_term_is_rejected() {
    let index = common::index();
    let err = refine(&index, &[word("american")], &word("java"), 30, None).unwrap_err();
    assert_eq!(err, SearchError::StaleTerm("java".into()));
}

#[test]
fn smaller_clouds_are_prefixes() {
    let index = common::index();
    for q in ["american", "programming", "great", "the"] {
        let result = index.search(&parse_query(q).unwrap(), None).unwrap();
        let big = compute_cloud(&index, &result, 30).terms;
        let small = compute_cloud(&index, &result, 10).terms;
        assert_eq!(small[..], big[..small.len()]);
        assert!(small.len() == 10 || small.len() == big.len());
    }
}

#[test]
fn results_serialize_identically() {
    let a = common::index();
    let b = common::index();
    let query = parse_query("american").unwrap();
    let ra = a.search(&query, Some(2)).unwrap();
    let rb = b.search(&query, Some(2)).unwrap();
    assert_eq!(
        serde_json::to_string(&ra).unwrap(),
        serde_json::to_string(&rb).unwrap()
    );
    assert_eq!(
        serde_json::to_string(&compute_cloud(&a, &ra, 30)).unwrap(),
        serde_json::to_string(&compute_cloud(&b, &rb, 30)).unwrap()
    );
    assert_eq!(ra.total, 3);
}

#[test]
fn empty_result_has_empty_cloud() {
    let index = common::index();
    let result = index.search(&[word("quantum")], None).unwrap();
    assert!(compute_cloud(&index, &result, 30).terms.is_empty());
}
