//! Command-line and HTTP front ends for `flexcloud`. Both answer requests
//! through [`engine::Engine`], which renders every response body, so a
//! `--json` run of the CLI prints exactly what the service would send.

pub mod api;
pub mod engine;
pub mod server;
