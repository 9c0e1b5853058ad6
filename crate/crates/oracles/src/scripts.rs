//! The two fixture workflows written out by hand as loops over the store.
//! Each returns `(CourseID, score)` in output order.

use std::collections::BTreeMap;

use flexcloud::relstore::{Store, Value};

use crate::sim::{naive_inv_euclidean, naive_jaccard, naive_tokenize};

fn rows<'a>(
    store: &'a Store,
    name: &str,
) -> (
    &'a flexcloud::relstore::Relation,
    impl Fn(&str) -> usize + 'a,
) {
    let rel = store.relation(name).expect("relation");
    (rel, move |c: &str| rel.column_index(c).expect("column"))
}

fn int(v: &Value) -> Option<i64> {
    match v {
        Value::Int(i) => Some(*i),
        _ => None,
    }
}

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

fn ratings_of(store: &Store, student: i64) -> BTreeMap<i64, f64> {
    let (comments, col) = rows(store, "Comments");
    let mut map = BTreeMap::new();
    for c in &comments.tuples {
        if int(&c[col("SuID")]) == Some(student) {
            if let (Some(course), Some(r)) = (int(&c[col("CourseID")]), num(&c[col("Rating")])) {
                map.insert(course, r);
            }
        }
    }
    map
}

fn rank(mut scored: Vec<(i64, f64)>, top: Option<usize>) -> Vec<(i64, f64)> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    if let Some(top) = top {
        scored.truncate(top);
    }
    scored
}

/// Courses liked by the 20 students whose ratings are closest to the
/// target's, scored by those students' mean rating.
pub fn collaborative_filtering(store: &Store, target: i64) -> Vec<(i64, f64)> {
    let (students, scol) = rows(store, "Students");
    let target_exists = students
        .tuples
        .iter()
        .any(|s| int(&s[scol("SuID")]) == Some(target));
    let mine = ratings_of(store, target);

    let mut similar = Vec::new();
    for s in &students.tuples {
        let id = int(&s[scol("SuID")]).unwrap();
        if id == target {
            continue;
        }
        let score = if target_exists {
            naive_inv_euclidean(&ratings_of(store, id), &mine)
        } else {
            0.0
        };
        similar.push((id, score));
    }
    let similar = rank(similar, Some(20));

    let (comments, ccol) = rows(store, "Comments");
    let (courses, kcol) = rows(store, "Courses");
    let mut scored = Vec::new();
    for course in &courses.tuples {
        let cid = int(&course[kcol("CourseID")]).unwrap();
        let mut total = 0.0;
        let mut n = 0;
        // Join order: similar students first, then their comments.
        for (sid, _) in &similar {
            for c in &comments.tuples {
                if int(&c[ccol("SuID")]) == Some(*sid) && int(&c[ccol("CourseID")]) == Some(cid) {
                    if let Some(r) = num(&c[ccol("Rating")]) {
                        total += r;
                        n += 1;
                    }
                }
            }
        }
        scored.push((cid, if n == 0 { 0.0 } else { total / n as f64 }));
    }
    rank(scored, Some(10))
}

/// Courses with a comment in `year`, scored by their best title Jaccard
/// against the courses titled exactly `title`.
pub fn similar_titles(store: &Store, title: &str, year: i64) -> Vec<(i64, f64)> {
    let (courses, kcol) = rows(store, "Courses");
    let (comments, ccol) = rows(store, "Comments");
    let reference: Vec<Vec<String>> = courses
        .tuples
        .iter()
        .filter(|c| c[kcol("Title")] == Value::Text(title.to_string()))
        .map(|c| naive_tokenize(c[kcol("Title")].as_text().unwrap()))
        .collect();
    let mut scored = Vec::new();
    for course in &courses.tuples {
        let cid = int(&course[kcol("CourseID")]).unwrap();
        let offered = comments
            .tuples
            .iter()
            .any(|c| int(&c[ccol("CourseID")]) == Some(cid) && int(&c[ccol("Year")]) == Some(year));
        if !offered {
            continue;
        }
        let mine = course[kcol("Title")]
            .as_text()
            .map(naive_tokenize)
            .unwrap_or_default();
        let best = reference
            .iter()
            .map(|r| naive_jaccard(&mine, r))
            .fold(None, |acc: Option<f64>, s| {
                Some(acc.map_or(s, |a| a.max(s)))
            })
            .unwrap_or(0.0);
        scored.push((cid, best));
    }
    rank(scored, None)
}
