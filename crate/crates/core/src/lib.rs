//! Search and recommendation over a small relational database.
//!
//! * [`relstore`]: typed in-memory relations loaded from CSV, with snapshots.
//! * [`textkit`]: tokenizer and the similarity library (Jaccard, Pearson,
//!   inverse Euclidean).
//! * [`search`]: keyword search over entities spanning several relations.
//! * [`cloud`]: data clouds summarizing a result set, and click-to-refine.
//! * [`algebra`]: recommendation workflows and their reference executor.
//! * [`dsl`]: the textual workflow language.
//! * [`sql`]: compilation of workflows to a sequence of SQL statements.

pub mod algebra;
pub mod cloud;
pub mod dsl;
pub mod json;
pub mod relstore;
pub mod search;
pub mod sql;
pub mod textkit;
