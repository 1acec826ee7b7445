//! Command implementations behind the `fairfront` binary.
//!
//! Each command reads its inputs, runs the library pipeline and writes its
//! outputs into a directory. They return summaries so callers (and tests)
//! can inspect results without re-reading files.

pub mod commands;

pub use commands::{
    cmd_audit, cmd_frontier, cmd_path, cmd_plot, cmd_synth, load_config, parse_override,
    FrontierOutcome, PathOutcome,
};
