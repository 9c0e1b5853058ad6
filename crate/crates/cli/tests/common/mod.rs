#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use flexcloud_cli::engine::Engine;
use flexcloud_oracles::fixtures::fixture_dir;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_flexcloud")
}

pub fn workflow_dir() -> PathBuf {
    fixture_dir().join("workflows")
}

pub fn cli(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawn flexcloud")
}

pub fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

/// Ingests the fixture into `dir` and returns the snapshot path.
pub fn ingest(dir: &Path) -> PathBuf {
    let snap = dir.join("fixture.snap");
    let fixture = fixture_dir();
    let out = cli(&[
        "ingest",
        "--schema",
        fixture.join("schema.json").to_str().unwrap(),
        "--data",
        fixture.to_str().unwrap(),
        "--out",
        snap.to_str().unwrap(),
    ]);
    stdout(&out);
    snap
}

/// Runs a subcommand against a snapshot and the fixture workflows.
pub fn with_snapshot(snap: &Path, args: &[&str]) -> Output {
    let wf = workflow_dir();
    let mut full = vec![
        "--snapshot",
        snap.to_str().unwrap(),
        "--workflows",
        wf.to_str().unwrap(),
    ];
    full.extend_from_slice(args);
    cli(&full)
}

pub fn engine(snap: &Path) -> Engine {
    Engine::load(snap, &[], Some(&workflow_dir()), &[]).expect("engine loads")
}

pub struct Response {
    pub status: u16,
    pub body: String,
}

/// A `serve` process on an ephemeral port, killed on drop.
pub struct Server {
    child: Child,
    pub base: String,
    runtime: tokio::runtime::Runtime,
    client: reqwest::Client,
}

impl Server {
    pub fn start(snap: &Path) -> Server {
        let wf = workflow_dir();
        let mut child = Command::new(bin())
            .args([
                "--snapshot",
                snap.to_str().unwrap(),
                "--workflows",
                wf.to_str().unwrap(),
            ])
            .args(["serve", "--port", "0"])
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .expect("spawn server");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .expect("read banner");
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
            .to_string();
        Server {
            child,
            base,
            runtime: tokio::runtime::Runtime::new().unwrap(),
            client: reqwest::Client::new(),
        }
    }

    fn send(&self, req: reqwest::RequestBuilder) -> Response {
        self.runtime.block_on(async {
            let resp = req.send().await.expect("request");
            let status = resp.status().as_u16();
            let body = resp.text().await.expect("body");
            Response { status, body }
        })
    }

    pub fn get(&self, path: &str) -> Response {
        self.send(self.client.get(format!("{}{path}", self.base)))
    }

    pub fn post(&self, path: &str, body: &str) -> Response {
        self.send(
            self.client
                .post(format!("{}{path}", self.base))
                .header("content-type", "application/json")
                .body(body.to_string()),
        )
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
