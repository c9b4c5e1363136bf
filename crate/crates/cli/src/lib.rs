//! Library half of the `tbprim` command-line tool: report types, the
//! subcommands and the fixture generators.

pub mod commands;
pub mod fixtures;
pub mod report;
