//! Batch front end: workspace files, queries and reports.

pub mod query;
pub mod report;
pub mod workspace;

pub use query::{Command, Query};
pub use report::{run_all, run_query, Report, Status};
pub use workspace::{parse_workspace, parse_workspace_str, LoadError, Workspace};

/// Process exit code for a finished batch.
pub fn exit_code(reports: &[Report], strict: bool) -> u8 {
    if reports.iter().any(|r| r.status == Status::Error) {
        2
    } else if strict && reports.iter().any(|r| r.status == Status::Inconclusive) {
        3
    } else {
        0
    }
}
