//! Compilation of workflows into a sequence of SQL statements.
//!
//! Every operator becomes one `CREATE TEMPORARY TABLE ... AS SELECT`; the
//! last statement selects the workflow output. Relational operators and
//! aggregate-mode recommend compile to plain SQL. Similarity-mode recommend
//! calls scalar functions the host engine registers:
//!
//! | function | arguments | result |
//! |---|---|---|
//! | `sim_jaccard(a, b)` | two texts, tokenized inside the function | Jaccard of the token sets |
//! | `sim_pearson(a, b)` | two rating maps in map text | Pearson over common keys |
//! | `sim_inv_euclidean(a, b)` | two rating maps in map text | `1 / (1 + d)` over common keys |
//!
//! `NULL` arguments are treated as empty text or an empty map.
//!
//! Row order is explicit: every base table must carry an `_ord` integer
//! column holding the row's position, and every temporary table gets one
//! that reproduces the reference executor's order.
//!
//! Extend renders map values with `printf('%!.17g', v)`. SQLite's renderer
//! is exact for magnitudes between roughly 1e-80 and 1e117; values outside
//! that range may come back one ulp off.

mod compile;
mod maptext;

use thiserror::Error;

use crate::algebra::AlgebraError;

pub use compile::{compile, Dialect, SqlScript, ORDER_COLUMN};
pub use maptext::{canonical_map_text, format_float, parse_map_text};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SqlError {
    #[error("unsupported SQL dialect {0:?}")]
    UnsupportedDialect(String),
    #[error(transparent)]
    Validation(#[from] AlgebraError),
    #[error("malformed map text: {0}")]
    MapText(String),
}
