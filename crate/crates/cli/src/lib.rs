//! Files, reports and the command line for `repset-core`.

pub mod document;
pub mod parallel;
pub mod render;
pub mod run;

pub use document::{Workspace, WorkspaceDocument};
pub use run::{execute, exit_code, Cli, Output, Status};
