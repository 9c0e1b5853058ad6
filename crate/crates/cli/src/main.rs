use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use flexcloud::relstore::{load_schema, snapshot_save, Store};
use flexcloud::sql::Dialect;
use flexcloud_cli::api::ApiError;
use flexcloud_cli::engine::{args_from_strings, load_workflow, Engine, LoadError, SearchRequest};

/// Keyword search with data clouds, and recommendation workflows, over a
/// snapshot of a relational database.
#[derive(Parser)]
#[command(name = "flexcloud", version)]
struct Cli {
    /// Snapshot written by `ingest`.
    #[arg(long, global = true, env = "FLEXCLOUD_SNAPSHOT")]
    snapshot: Option<PathBuf>,
    /// Entity spec JSON file; repeatable. Defaults to the course entity.
    #[arg(long = "entities", global = true)]
    entities: Vec<PathBuf>,
    /// Directory of `.frx` workflow files.
    #[arg(long, global = true, env = "FLEXCLOUD_WORKFLOWS")]
    workflows: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load CSV files (one per relation, named `<Relation>.csv`) into a snapshot.
    Ingest {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keyword search. Quote phrases: `'american "latin american"'`.
    Search {
        query: String,
        #[arg(long)]
        entity: Option<String>,
        /// Also compute the data cloud of the result.
        #[arg(long)]
        cloud: bool,
        /// Cloud size.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        limit: Option<usize>,
        /// A clicked cloud term to add to the query.
        #[arg(long)]
        refine: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Run a workflow, by name or `.frx` path.
    Run {
        workflow: String,
        /// `name=value`; repeatable.
        #[arg(long = "param", value_parser = key_value)]
        params: Vec<(String, String)>,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Compile a workflow to SQL.
    Compile {
        workflow: String,
        #[arg(long = "param", value_parser = key_value)]
        params: Vec<(String, String)>,
        #[arg(long, value_enum)]
        emit: Emit,
        #[arg(long, default_value = "ansi")]
        dialect: String,
        /// Write the script here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "FLEXCLOUD_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Sql,
}

fn key_value(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected name=value, got {s:?}"))
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        Failure::Data(format!("error[{}]: {}", e.code, e.message))
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::Data(format!("error: {e}"))
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(format!("error: {e:#}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn is_path(workflow: &str) -> bool {
    workflow.ends_with(".frx") || workflow.contains(std::path::MAIN_SEPARATOR)
}

/// Loads the engine; a workflow given as a path is loaded alongside the
/// directory and referred to by its declared name.
fn engine(cli: &Cli, workflow: Option<&str>) -> Result<(Engine, Option<String>), Failure> {
    let snapshot = cli
        .snapshot
        .as_deref()
        .ok_or_else(|| Failure::Usage("--snapshot is required".into()))?;
    let (extra, name) = match workflow {
        Some(w) if is_path(w) => {
            let path = PathBuf::from(w);
            let ast = load_workflow(&path)?;
            (vec![path], Some(ast.name))
        }
        Some(w) => (Vec::new(), Some(w.to_string())),
        None => (Vec::new(), None),
    };
    let engine = Engine::load(snapshot, &cli.entities, cli.workflows.as_deref(), &extra)?;
    Ok((engine, name))
}

fn out(text: &str) -> Result<(), Failure> {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .context("writing output")
        .map_err(Failure::from)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Ingest {
            schema,
            data,
            out: target,
        } => ingest(schema, data, target),
        Command::Search {
            query,
            entity,
            cloud,
            k,
            limit,
            refine,
            json,
        } => {
            let (engine, _) = engine(&cli, None)?;
            let req = SearchRequest {
                q: query.clone(),
                entity: entity.clone(),
                limit: *limit,
                refine: refine.clone(),
                k: *k,
            };
            let body = engine.search(&req, *cloud)?;
            if *json {
                out(&body)
            } else {
                out(&search_text(&body))
            }
        }
        Command::Run {
            workflow,
            params,
            top,
            json,
        } => {
            let (engine, name) = engine(&cli, Some(workflow))?;
            let name = name.expect("workflow name");
            let args = args_from_strings(&engine.workflow(&name)?.ast, params)?;
            let body = engine.run(&name, &args, *top)?;
            if *json {
                out(&body)
            } else {
                out(&rows_text(&engine, &name, &body))
            }
        }
        Command::Compile {
            workflow,
            params,
            emit: Emit::Sql,
            dialect,
            out: target,
        } => {
            let dialect: Dialect = dialect.parse().map_err(ApiError::from)?;
            let (engine, name) = engine(&cli, Some(workflow))?;
            let name = name.expect("workflow name");
            let args = args_from_strings(&engine.workflow(&name)?.ast, params)?;
            let (text, _) = engine.sql(&name, &args, dialect)?;
            match target {
                Some(path) => std::fs::write(path, text)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(Failure::from),
                None => out(&text),
            }
        }
        Command::Serve { port, host } => {
            let (engine, _) = engine(&cli, None)?;
            serve(engine, SocketAddr::new(*host, *port)).map_err(Failure::from)
        }
    }
}

fn ingest(schema: &Path, data: &Path, target: &Path) -> Result<(), Failure> {
    let text =
        std::fs::read_to_string(schema).with_context(|| format!("reading {}", schema.display()))?;
    let schema = load_schema(&text).map_err(|e| Failure::Data(format!("error: {e}")))?;
    let store =
        Store::ingest_dir(&schema, data).map_err(|e| Failure::Data(format!("error: {e}")))?;
    let mut bytes = Vec::new();
    snapshot_save(&store, &mut bytes).context("encoding snapshot")?;
    std::fs::write(target, bytes).with_context(|| format!("writing {}", target.display()))?;
    for rel in store.relations() {
        eprintln!("{}: {} rows", rel.def.name, rel.tuples.len());
    }
    Ok(())
}

fn search_text(body: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(body).expect("engine JSON");
    let mut s = format!("{} results\n", v["total"]);
    for hit in v["hits"].as_array().into_iter().flatten() {
        let fields: Vec<&str> = hit["fields"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|f| f.as_str())
            .collect();
        s += &format!(
            "{:>8}  {}  [{}]\n",
            hit["score"],
            hit["id"],
            fields.join(", ")
        );
    }
    if let Some(terms) = v["cloud"]["terms"].as_array() {
        s += "cloud:\n";
        for t in terms {
            s += &format!(
                "{:>8}  {} ({})\n",
                t["weight"],
                t["term"].as_str().unwrap_or_default(),
                t["count"]
            );
        }
    }
    s
}

fn rows_text(engine: &Engine, name: &str, body: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(body).expect("engine JSON");
    let wf = engine.workflow(name).expect("workflow");
    let columns: Vec<&str> = wf.output.columns.iter().map(|c| c.name.as_str()).collect();
    let mut s = columns.join("\t") + "\n";
    for row in v["rows"].as_array().into_iter().flatten() {
        let cells: Vec<String> = columns
            .iter()
            .map(|c| match &row[*c] {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(t) => t.clone(),
                other => other.to_string(),
            })
            .collect();
        s += &(cells.join("\t") + "\n");
    }
    s
}

fn serve(engine: Engine, addr: SocketAddr) -> anyhow::Result<()> {
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        let local = listener.local_addr()?;
        println!("listening on http://{local}");
        std::io::stdout().flush()?;
        let app = flexcloud_cli::server::router(Arc::new(engine));
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .context("serving")
    })
}
