use std::collections::HashMap;

use crate::relstore::{Store, Value};
use crate::textkit::{is_stopword, tokenize, TokenList};

use super::{EntitySpec, QueryTerm, SearchError, SearchHit, SearchResult};

/// One text field of an entity. Part fields hold one segment per joined
/// row so that phrases never straddle two rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityField {
    pub label: String,
    pub relation: String,
    pub weight: f64,
    pub segments: Vec<TokenList>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub id: Value,
    pub fields: Vec<EntityField>,
}

impl Entity {
    /// Occurrences of `term` in field `field`.
    pub fn term_frequency(&self, term: &QueryTerm, field: usize) -> u32 {
        let segments = &self.fields[field].segments;
        match term {
            QueryTerm::Word(w) => segments.iter().flatten().filter(|t| *t == w).count() as u32,
            QueryTerm::Phrase(a, b) => segments
                .iter()
                .flat_map(|s| s.windows(2))
                .filter(|pair| pair[0] == *a && pair[1] == *b)
                .count() as u32,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Posting {
    entity: u32,
    field: u16,
    tf: u32,
}

#[derive(Debug, Clone)]
struct TermInfo {
    term: QueryTerm,
    /// Eligible as a data-cloud term (no stopwords).
    cloud_candidate: bool,
    /// Postings sorted by (entity, field).
    postings: Vec<Posting>,
    doc_freq: u32,
}

/// Inverted index over the entities of one [`EntitySpec`].
///
/// Immutable once built; safe to share between concurrent searchers.
#[derive(Debug, Clone)]
pub struct SearchIndex {
    spec: EntitySpec,
    labels: Vec<String>,
    weights: Vec<f64>,
    entities: Vec<Entity>,
    terms: Vec<TermInfo>,
    dictionary: HashMap<QueryTerm, u32>,
    /// Per entity: (term id, total tf over all fields), sorted by term id.
    forward: Vec<Vec<(u32, u32)>>,
}

impl SearchIndex {
    pub fn build(store: &Store, spec: &EntitySpec) -> Result<Self, SearchError> {
        spec.validate(&store.schema())?;
        let root = store
            .relation(&spec.root)
            .ok_or_else(|| SearchError::Spec(format!("unknown relation {}", spec.root)))?;
        let pk = root
            .def
            .primary_key_index()
            .ok_or_else(|| SearchError::Spec(format!("{} has no primary key", spec.root)))?;

        // Group each part relation's rows by join key, preserving row order.
        struct PartRows<'a> {
            root_col: usize,
            by_key: HashMap<String, Vec<&'a Vec<Value>>>,
            columns: Vec<usize>,
        }
        let mut parts = Vec::with_capacity(spec.parts.len());
        for part in &spec.parts {
            let rel = store.relation(&part.relation).expect("validated");
            let part_col = rel.column_index(&part.join.1).expect("validated");
            let mut by_key: HashMap<String, Vec<&Vec<Value>>> = HashMap::new();
            for tuple in &rel.tuples {
                if let Some(k) = join_key(&tuple[part_col]) {
                    by_key.entry(k).or_default().push(tuple);
                }
            }
            parts.push(PartRows {
                root_col: root.column_index(&part.join.0).expect("validated"),
                by_key,
                columns: part
                    .fields
                    .iter()
                    .map(|f| rel.column_index(&f.column).expect("validated"))
                    .collect(),
            });
        }

        let labels = spec.field_labels();
        let mut weights: Vec<f64> = spec.root_fields.iter().map(|f| f.weight).collect();
        let mut relations: Vec<&str> = vec![spec.root.as_str(); spec.root_fields.len()];
        for part in &spec.parts {
            for f in &part.fields {
                weights.push(f.weight);
                relations.push(part.relation.as_str());
            }
        }
        let root_columns: Vec<usize> = spec
            .root_fields
            .iter()
            .map(|f| root.column_index(&f.column).expect("validated"))
            .collect();

        let mut entities = Vec::with_capacity(root.tuples.len());
        for tuple in &root.tuples {
            let mut segments: Vec<Vec<TokenList>> = root_columns
                .iter()
                .map(|&c| vec![text_tokens(&tuple[c])])
                .collect();
            for part in &parts {
                let rows = join_key(&tuple[part.root_col])
                    .and_then(|k| part.by_key.get(&k))
                    .map(Vec::as_slice)
                    .unwrap_or_default();
                for &c in &part.columns {
                    segments.push(rows.iter().map(|r| text_tokens(&r[c])).collect());
                }
            }
            let fields = segments
                .into_iter()
                .enumerate()
                .map(|(i, segments)| EntityField {
                    label: labels[i].clone(),
                    relation: relations[i].to_string(),
                    weight: weights[i],
                    segments,
                })
                .collect();
            entities.push(Entity {
                id: tuple[pk].clone(),
                fields,
            });
        }

        let mut dictionary: HashMap<QueryTerm, u32> = HashMap::new();
        let mut terms: Vec<TermInfo> = Vec::new();
        let mut forward = Vec::with_capacity(entities.len());
        for (e, entity) in entities.iter().enumerate() {
            let mut totals: HashMap<u32, u32> = HashMap::new();
            for (f, field) in entity.fields.iter().enumerate() {
                let mut counts: HashMap<QueryTerm, u32> = HashMap::new();
                for seg in &field.segments {
                    for (i, tok) in seg.iter().enumerate() {
                        *counts.entry(QueryTerm::Word(tok.clone())).or_default() += 1;
                        if let Some(next) = seg.get(i + 1) {
                            *counts
                                .entry(QueryTerm::Phrase(tok.clone(), next.clone()))
                                .or_default() += 1;
                        }
                    }
                }
                for (term, tf) in counts {
                    let id = *dictionary.entry(term.clone()).or_insert_with(|| {
                        terms.push(TermInfo {
                            cloud_candidate: match &term {
                                QueryTerm::Word(w) => !is_stopword(w),
                                QueryTerm::Phrase(a, b) => !is_stopword(a) && !is_stopword(b),
                            },
                            term,
                            postings: Vec::new(),
                            doc_freq: 0,
                        });
                        (terms.len() - 1) as u32
                    });
                    terms[id as usize].postings.push(Posting {
                        entity: e as u32,
                        field: f as u16,
                        tf,
                    });
                    *totals.entry(id).or_default() += tf;
                }
            }
            for &id in totals.keys() {
                terms[id as usize].doc_freq += 1;
            }
            let mut totals: Vec<(u32, u32)> = totals.into_iter().collect();
            totals.sort_unstable();
            forward.push(totals);
        }
        for info in &mut terms {
            info.postings.sort_unstable_by_key(|p| (p.entity, p.field));
        }

        Ok(Self {
            spec: spec.clone(),
            labels,
            weights,
            entities,
            terms,
            dictionary,
            forward,
        })
    }

    pub fn spec(&self) -> &EntitySpec {
        &self.spec
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn field_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    /// Number of entities containing `term` anywhere.
    pub fn doc_freq(&self, term: &QueryTerm) -> usize {
        self.dictionary
            .get(term)
            .map_or(0, |&id| self.terms[id as usize].doc_freq as usize)
    }

    /// Entity ids whose postings contain `term`, ascending by position.
    pub fn postings(&self, term: &QueryTerm) -> Vec<&Value> {
        let Some(&id) = self.dictionary.get(term) else {
            return Vec::new();
        };
        let mut out: Vec<&Value> = Vec::new();
        let mut last = None;
        for p in &self.terms[id as usize].postings {
            if last != Some(p.entity) {
                out.push(&self.entities[p.entity as usize].id);
                last = Some(p.entity);
            }
        }
        out
    }

    /// Positions of entities matching every term, ascending.
    pub(crate) fn matching(&self, query: &[QueryTerm]) -> Vec<u32> {
        let mut lists: Vec<&[Posting]> = Vec::with_capacity(query.len());
        for term in query {
            match self.dictionary.get(term) {
                Some(&id) => lists.push(&self.terms[id as usize].postings),
                None => return Vec::new(),
            }
        }
        lists.sort_by_key(|l| l.len());
        let Some((first, rest)) = lists.split_first() else {
            return Vec::new();
        };
        let mut result: Vec<u32> = first.iter().map(|p| p.entity).collect();
        result.dedup();
        for list in rest {
            let mut j = 0;
            result.retain(|&e| {
                while j < list.len() && list[j].entity < e {
                    j += 1;
                }
                j < list.len() && list[j].entity == e
            });
        }
        result
    }

    /// Conjunctive search. Hits are ordered by score descending, then id
    /// ascending; `limit` truncates hits but not `total`.
    pub fn search(
        &self,
        query: &[QueryTerm],
        limit: Option<usize>,
    ) -> Result<SearchResult, SearchError> {
        if query.is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        let matches = self.matching(query);
        let postings: Vec<&[Posting]> = query
            .iter()
            .map(|t| {
                self.dictionary
                    .get(t)
                    .map_or(&[][..], |&id| &self.terms[id as usize].postings[..])
            })
            .collect();

        let mut hits: Vec<SearchHit> = Vec::with_capacity(matches.len());
        for &e in &matches {
            let mut score = 0.0;
            let mut matched = vec![false; self.labels.len()];
            for list in &postings {
                let start = list.partition_point(|p| p.entity < e);
                for p in list[start..].iter().take_while(|p| p.entity == e) {
                    score += self.weights[p.field as usize] * p.tf as f64;
                    matched[p.field as usize] = true;
                }
            }
            hits.push(SearchHit {
                fields: self
                    .labels
                    .iter()
                    .zip(&matched)
                    .filter(|(_, m)| **m)
                    .map(|(l, _)| l.clone())
                    .collect(),
                id: self.entities[e as usize].id.clone(),
                score,
            });
        }
        hits.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.id.sort_cmp(&b.id))
        });
        let total = hits.len();
        if let Some(limit) = limit {
            hits.truncate(limit);
        }
        Ok(SearchResult {
            hits,
            query: query.to_vec(),
            total,
        })
    }

    /// Calls `visit(term, tf, doc_freq, cloud_candidate)` for every term of
    /// entity `e`.
    pub(crate) fn for_each_term<'s>(
        &'s self,
        e: u32,
        mut visit: impl FnMut(&'s QueryTerm, u32, usize, bool),
    ) {
        for &(id, tf) in &self.forward[e as usize] {
            let info = &self.terms[id as usize];
            visit(&info.term, tf, info.doc_freq as usize, info.cloud_candidate);
        }
    }
}

fn text_tokens(v: &Value) -> TokenList {
    v.as_text().map(tokenize).unwrap_or_default()
}

fn join_key(v: &Value) -> Option<String> {
    match v {
        Value::Int(i) => Some(format!("i{i}")),
        Value::Text(s) => Some(format!("t{s}")),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relstore::{ingest_csv, load_schema};
    use crate::search::{parse_query, FieldSpec, PartSpec};

    fn store(courses: &str, comments: &str) -> Store {
        let schema = load_schema(
            r#"{"relations":[
              {"name":"Courses","primary_key":"CourseID","columns":[
                {"name":"CourseID","type":"int"},{"name":"Title","type":"text"},
                {"name":"Description","type":"text"}]},
              {"name":"Comments","primary_key":"CommentID","columns":[
                {"name":"CommentID","type":"int"},{"name":"CourseID","type":"int"},
                {"name":"Text","type":"text"}]}]}"#,
        )
        .unwrap();
        Store::new(vec![
            ingest_csv(&schema, "Courses", courses.as_bytes()).unwrap(),
            ingest_csv(&schema, "Comments", comments.as_bytes()).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn empty_root() {
        let s = store("CourseID,Title,Description\n", "CommentID,CourseID,Text\n");
        let idx = SearchIndex::build(&s, &EntitySpec::default_course()).unwrap();
        assert_eq!(idx.entity_count(), 0);
        let r = idx.search(&parse_query("java").unwrap(), None).unwrap();
        assert_eq!(r.total, 0);
    }

    #[test]
    fn title_outranks_comment() {
        let s = store(
            "CourseID,Title,Description\n1,Intro,x\n2,Java Intro,x\n",
            "CommentID,CourseID,Text\n1,1,java\n",
        );
        let idx = SearchIndex::build(&s, &EntitySpec::default_course()).unwrap();
        let r = idx.search(&parse_query("java").unwrap(), None).unwrap();
        assert_eq!(r.ids(), vec![&Value::Int(2), &Value::Int(1)]);
        assert_eq!(r.hits[0].score, 3.0);
        assert_eq!(r.hits[1].score, 1.0);
        assert_eq!(r.hits[1].fields, vec!["Comments.Text".to_string()]);
    }

    #[test]
    fn phrases_do_not_cross_rows() {
        let s = store(
            "CourseID,Title,Description\n1,a,b\n",
            "CommentID,CourseID,Text\n1,1,latin\n2,1,american\n",
        );
        let idx = SearchIndex::build(&s, &EntitySpec::default_course()).unwrap();
        let r = idx
            .search(&parse_query("\"latin american\"").unwrap(), None)
            .unwrap();
        assert_eq!(r.total, 0);
        let r = idx
            .search(&parse_query("latin american").unwrap(), None)
            .unwrap();
        assert_eq!(r.total, 1);
    }

    #[test]
    fn limit_keeps_total() {
        let s = store(
            "CourseID,Title,Description\n1,java,x\n2,java,x\n3,java java,x\n",
            "CommentID,CourseID,Text\n",
        );
        let idx = SearchIndex::build(&s, &EntitySpec::default_course()).unwrap();
        let r = idx.search(&parse_query("java").unwrap(), Some(1)).unwrap();
        assert_eq!(r.total, 3);
        assert_eq!(r.ids(), vec![&Value::Int(3)]);
        assert!(matches!(
            idx.search(&[], None),
            Err(SearchError::EmptyQuery)
        ));
    }

    #[test]
    fn bad_specs() {
        let s = store("CourseID,Title,Description\n", "CommentID,CourseID,Text\n");
        let mut spec = EntitySpec::default_course();
        spec.root_fields[0].column = "Titel".into();
        assert!(matches!(
            SearchIndex::build(&s, &spec),
            Err(SearchError::Spec(_))
        ));
        let mut spec = EntitySpec::default_course();
        spec.root_fields[0].weight = 0.0;
        assert!(matches!(
            SearchIndex::build(&s, &spec),
            Err(SearchError::Spec(_))
        ));
        let mut spec = EntitySpec::default_course();
        spec.parts.push(PartSpec {
            relation: "Comments".into(),
            join: ("CourseID".into(), "CourseID".into()),
            fields: vec![FieldSpec::new("Text", 1.0)],
        });
        assert!(matches!(
            SearchIndex::build(&s, &spec),
            Err(SearchError::Spec(_))
        ));
        let mut spec = EntitySpec::default_course();
        spec.parts[0].join.1 = "CommentID".into();
        spec.parts[0].fields[0].column = "CourseID".into();
        assert!(matches!(
            SearchIndex::build(&s, &spec),
            Err(SearchError::Spec(_))
        ));
    }
}
