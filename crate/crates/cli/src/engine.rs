//! The loaded service state and every request it answers. Responses are
//! rendered to JSON text here so the CLI and the HTTP service emit the same
//! bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use flexcloud::algebra::{eval_workflow, validate, Args, Literal, ParamType, WorkflowAst};
use flexcloud::cloud::{compute_cloud, refine, DataCloud, DEFAULT_CLOUD_SIZE};
use flexcloud::json::to_json;
use flexcloud::relstore::{snapshot_load, RelationDef, Store};
use flexcloud::search::{parse_query, EntitySpec, QueryTerm, SearchIndex, SearchResult};
use flexcloud::sql::{compile, Dialect};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::api::ApiError;

pub struct Workflow {
    pub ast: WorkflowAst,
    pub output: RelationDef,
    pub source: PathBuf,
}

pub struct Engine {
    store: Store,
    indexes: Vec<(String, SearchIndex)>,
    workflows: BTreeMap<String, Workflow>,
}

/// A failure while loading the snapshot, entity specs or workflows.
#[derive(Debug)]
pub struct LoadError(pub String);

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for LoadError {}

fn load_err(path: &Path, e: impl std::fmt::Display) -> LoadError {
    LoadError(format!("{}: {e}", path.display()))
}

pub fn load_snapshot(path: &Path) -> Result<Store, LoadError> {
    let file = File::open(path).map_err(|e| load_err(path, e))?;
    snapshot_load(BufReader::new(file)).map_err(|e| load_err(path, e))
}

/// Parses a workflow file, rendering diagnostics as `path:line:col: ...`.
pub fn load_workflow(path: &Path) -> Result<WorkflowAst, LoadError> {
    let bytes = std::fs::read(path).map_err(|e| load_err(path, e))?;
    flexcloud::dsl::parse_bytes(&bytes).map_err(|diags| {
        let lines: Vec<String> = diags
            .iter()
            .map(|d| format!("{}:{d}", path.display()))
            .collect();
        LoadError(lines.join("\n"))
    })
}

/// What a search request asks for.
#[derive(Debug, Clone, Default)]
pub struct SearchRequest {
    pub q: String,
    pub entity: Option<String>,
    pub limit: Option<usize>,
    /// A clicked cloud term to add to the query.
    pub refine: Option<String>,
    pub k: Option<usize>,
}

#[derive(Serialize)]
struct HitBody<'a> {
    fields: &'a [String],
    #[serde(serialize_with = "flexcloud::json::serialize_value")]
    id: &'a flexcloud::relstore::Value,
    score: f64,
}

#[derive(Serialize)]
struct TermBody {
    count: usize,
    term: String,
    weight: Box<RawValue>,
}

#[derive(Serialize)]
struct CloudBody {
    query: Vec<String>,
    terms: Vec<TermBody>,
}

#[derive(Serialize)]
struct SearchBody<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    cloud: Option<CloudBody>,
    hits: Vec<HitBody<'a>>,
    query: Vec<String>,
    total: usize,
}

#[derive(Serialize)]
struct ColumnBody<'a> {
    name: &'a str,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Serialize)]
struct RunBody<'a> {
    columns: Vec<&'a str>,
    rows: Vec<BTreeMap<&'a str, serde_json::Value>>,
    workflow: &'a str,
}

#[derive(Serialize)]
struct SqlBody<'a> {
    required_udfs: &'a [String],
    sql: String,
    statements: &'a [String],
    temp_objects: &'a [String],
}

#[derive(Serialize)]
struct WorkflowInfo<'a> {
    name: &'a str,
    output: Vec<ColumnBody<'a>>,
    params: Vec<ColumnBody<'a>>,
}

#[derive(Serialize)]
struct WorkflowList<'a> {
    workflows: Vec<WorkflowInfo<'a>>,
}

/// JSON text of `value` followed by a newline.
pub fn render<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string(value).expect("response bodies serialize");
    out.push('\n');
    out
}

fn weight_text(w: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{w:.2}")).expect("fixed-point numbers are valid JSON")
}

fn cloud_body(cloud: &DataCloud) -> CloudBody {
    CloudBody {
        query: cloud.query.iter().map(QueryTerm::key).collect(),
        terms: cloud
            .terms
            .iter()
            .map(|t| TermBody {
                count: t.doc_count,
                term: t.term.key(),
                weight: weight_text(t.weight),
            })
            .collect(),
    }
}

impl Engine {
    /// Builds one index per entity spec (the default course entity when
    /// none is given) and validates every workflow against the snapshot.
    pub fn new(
        store: Store,
        specs: Vec<EntitySpec>,
        workflows: Vec<(PathBuf, WorkflowAst)>,
    ) -> Result<Self, LoadError> {
        let specs = if specs.is_empty() {
            vec![EntitySpec::default_course()]
        } else {
            specs
        };
        let mut indexes: Vec<(String, SearchIndex)> = Vec::new();
        for spec in specs {
            if indexes.iter().any(|(n, _)| *n == spec.name) {
                return Err(LoadError(format!("entity {} declared twice", spec.name)));
            }
            let index = SearchIndex::build(&store, &spec).map_err(|e| LoadError(e.to_string()))?;
            indexes.push((spec.name.clone(), index));
        }
        let schema = store.schema();
        let mut loaded = BTreeMap::new();
        for (source, ast) in workflows {
            let checked = validate(&ast, &schema).map_err(|e| load_err(&source, e))?;
            if let Some(prev) = loaded.get(&ast.name) {
                let prev: &Workflow = prev;
                return Err(LoadError(format!(
                    "workflow {} defined in both {} and {}",
                    ast.name,
                    prev.source.display(),
                    source.display()
                )));
            }
            let output = checked.output().clone();
            loaded.insert(
                ast.name.clone(),
                Workflow {
                    ast,
                    output,
                    source,
                },
            );
        }
        Ok(Engine {
            store,
            indexes,
            workflows: loaded,
        })
    }

    /// Loads from files: a snapshot, entity spec JSON files, and `.frx`
    /// workflows from a directory plus any listed individually.
    pub fn load(
        snapshot: &Path,
        entities: &[PathBuf],
        workflow_dir: Option<&Path>,
        extra: &[PathBuf],
    ) -> Result<Self, LoadError> {
        let store = load_snapshot(snapshot)?;
        let mut specs = Vec::new();
        for path in entities {
            let text = std::fs::read_to_string(path).map_err(|e| load_err(path, e))?;
            specs.push(EntitySpec::from_json(&text).map_err(|e| load_err(path, e))?);
        }
        let mut files: Vec<PathBuf> = Vec::new();
        if let Some(dir) = workflow_dir {
            let entries = std::fs::read_dir(dir).map_err(|e| load_err(dir, e))?;
            for entry in entries {
                let path = entry.map_err(|e| load_err(dir, e))?.path();
                if path.extension().is_some_and(|x| x == "frx") {
                    files.push(path);
                }
            }
            files.sort();
        }
        for path in extra {
            if !files.contains(path) {
                files.push(path.clone());
            }
        }
        let mut workflows = Vec::new();
        for path in files {
            let ast = load_workflow(&path)?;
            workflows.push((path, ast));
        }
        Self::new(store, specs, workflows)
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn entity_names(&self) -> Vec<&str> {
        self.indexes.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn workflow_count(&self) -> usize {
        self.workflows.len()
    }

    pub fn workflow(&self, name: &str) -> Result<&Workflow, ApiError> {
        self.workflows.get(name).ok_or_else(|| {
            ApiError::new(
                404,
                "UNKNOWN_WORKFLOW",
                format!("no workflow named {name:?}"),
            )
        })
    }

    fn index(&self, entity: Option<&str>) -> Result<&SearchIndex, ApiError> {
        match entity {
            None => Ok(&self.indexes[0].1),
            Some(name) => self
                .indexes
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, i)| i)
                .ok_or_else(|| {
                    ApiError::new(404, "UNKNOWN_ENTITY", format!("no entity named {name:?}"))
                }),
        }
    }

    fn result(
        &self,
        req: &SearchRequest,
    ) -> Result<(&SearchIndex, SearchResult, DataCloud), ApiError> {
        let index = self.index(req.entity.as_deref())?;
        let query = parse_query(&req.q)?;
        let k = req.k.unwrap_or(DEFAULT_CLOUD_SIZE);
        match &req.refine {
            Some(term) => {
                let clicked = QueryTerm::parse(term)?;
                let (result, cloud) = refine(index, &query, &clicked, k, req.limit)?;
                Ok((index, result, cloud))
            }
            None => {
                let result = index.search(&query, req.limit)?;
                let cloud = compute_cloud(index, &result, k);
                Ok((index, result, cloud))
            }
        }
    }

    /// `{hits, query, total}`, plus `cloud` when asked for.
    pub fn search(&self, req: &SearchRequest, with_cloud: bool) -> Result<String, ApiError> {
        let (_, result, cloud) = self.result(req)?;
        Ok(render(&SearchBody {
            cloud: with_cloud.then(|| cloud_body(&cloud)),
            hits: result
                .hits
                .iter()
                .map(|h| HitBody {
                    fields: &h.fields,
                    id: &h.id,
                    score: h.score,
                })
                .collect(),
            query: result.query.iter().map(QueryTerm::key).collect(),
            total: result.total,
        }))
    }

    pub fn cloud(&self, req: &SearchRequest) -> Result<String, ApiError> {
        let (_, _, cloud) = self.result(req)?;
        Ok(render(&cloud_body(&cloud)))
    }

    pub fn list_workflows(&self) -> String {
        fn columns(def: &RelationDef) -> Vec<ColumnBody<'_>> {
            def.columns
                .iter()
                .map(|c| ColumnBody {
                    name: &c.name,
                    ty: c.ty.to_string(),
                })
                .collect()
        }
        render(&WorkflowList {
            workflows: self
                .workflows
                .values()
                .map(|w| WorkflowInfo {
                    name: &w.ast.name,
                    output: columns(&w.output),
                    params: w
                        .ast
                        .params
                        .iter()
                        .map(|p| ColumnBody {
                            name: &p.name,
                            ty: p.ty.to_string(),
                        })
                        .collect(),
                })
                .collect(),
        })
    }

    pub fn run(&self, name: &str, args: &Args, top: Option<usize>) -> Result<String, ApiError> {
        let wf = self.workflow(name)?;
        let mut out = eval_workflow(&self.store, &wf.ast, args)?;
        if let Some(top) = top {
            out.tuples.truncate(top);
        }
        let names: Vec<&str> = out.def.columns.iter().map(|c| c.name.as_str()).collect();
        let rows = out
            .tuples
            .iter()
            .map(|t| names.iter().copied().zip(t.iter().map(to_json)).collect())
            .collect();
        Ok(render(&RunBody {
            columns: names.clone(),
            rows,
            workflow: &wf.ast.name,
        }))
    }

    pub fn sql(
        &self,
        name: &str,
        args: &Args,
        dialect: Dialect,
    ) -> Result<(String, String), ApiError> {
        let wf = self.workflow(name)?;
        let script = compile(&wf.ast, &self.store.schema(), args, dialect)?;
        let text = script.to_sql_text();
        let body = render(&SqlBody {
            required_udfs: &script.required_udfs,
            sql: text.clone(),
            statements: &script.statements,
            temp_objects: &script.temp_objects,
        });
        Ok((text, body))
    }
}

fn check_known(ast: &WorkflowAst, name: &str) -> Result<ParamType, ApiError> {
    ast.param(name).map(|p| p.ty).ok_or_else(|| {
        ApiError::new(
            400,
            "UNKNOWN_PARAM",
            format!("workflow {} has no parameter {name}", ast.name),
        )
    })
}

/// Arguments from `name=value` strings, typed by the declared parameters.
pub fn args_from_strings(ast: &WorkflowAst, pairs: &[(String, String)]) -> Result<Args, ApiError> {
    let mut args = Args::new();
    for (name, text) in pairs {
        let ty = check_known(ast, name)?;
        let bad = || {
            ApiError::new(
                400,
                "PARAM_TYPE",
                format!("parameter ${name} expects {ty}, got {text:?}"),
            )
        };
        let value = match ty {
            ParamType::Int => Literal::Int(text.trim().parse().map_err(|_| bad())?),
            ParamType::Float => {
                let f: f64 = text.trim().parse().map_err(|_| bad())?;
                if !f.is_finite() {
                    return Err(bad());
                }
                Literal::Float(f)
            }
            ParamType::Text => Literal::Text(text.clone()),
        };
        if args.insert(name.clone(), value).is_some() {
            return Err(ApiError::bad_request(format!(
                "parameter {name} given twice"
            )));
        }
    }
    Ok(args)
}

/// Arguments from a JSON object. Type checking against the declaration
/// happens at evaluation.
pub fn args_from_json(
    ast: &WorkflowAst,
    params: &serde_json::Map<String, serde_json::Value>,
) -> Result<Args, ApiError> {
    let mut args = Args::new();
    for (name, value) in params {
        let ty = check_known(ast, name)?;
        let literal = match value {
            serde_json::Value::Number(n) => match (n.as_i64(), n.as_f64()) {
                (Some(i), _) => Literal::Int(i),
                (None, Some(f)) => Literal::Float(f),
                _ => {
                    return Err(ApiError::new(
                        400,
                        "PARAM_TYPE",
                        format!("parameter ${name}: {n} is out of range"),
                    ))
                }
            },
            serde_json::Value::String(s) => Literal::Text(s.clone()),
            other => {
                return Err(ApiError::new(
                    400,
                    "PARAM_TYPE",
                    format!("parameter ${name} expects {ty}, got {other}"),
                ))
            }
        };
        args.insert(name.clone(), literal);
    }
    Ok(args)
}
