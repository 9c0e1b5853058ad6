//! Independent reference implementations used to check `flexcloud`:
//! naive similarity functions, an exhaustive search and cloud scan, a
//! nested-loop workflow interpreter, hand-written scripts for the fixture
//! workflows, a SQLite host for compiled scripts, seeded generators and
//! fixture loading. [`checks`] bundles them into one check per acceptance
//! criterion.

pub mod checks;
pub mod fixtures;
pub mod gen;
pub mod naive;
pub mod scan;
pub mod scripts;
pub mod sim;
pub mod sqlhost;
