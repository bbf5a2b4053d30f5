//! Config-driven runs of the `oamvortex-core` numerics: TOML experiment files,
//! CSV/JSON artifacts and the `oamvortex` command line.

pub mod config;
pub mod quantity;
pub mod run;

pub use config::{build, parse_raw, Config, Experiment, Format, Overrides};
pub use run::{execute, load, write_artifacts, AppError, Artifact, RunOutput};
