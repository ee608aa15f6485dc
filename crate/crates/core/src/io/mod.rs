//! Configuration documents and run output.

pub mod config;
pub mod output;
pub mod profile;

pub use config::{parse_config, parse_document, RunConfig, SpeciesSpec};
pub use output::{
    recompute_diagnostics, write_error_log, write_failure, write_run, RunManifest, TOOL_VERSION,
};
pub use profile::{EdgeProfile, EdgeSet, EdgeTerm, FieldProfile, FieldTerm};
