//! Command-line front end for the `buqo` library.

pub mod commands;
pub mod config;
pub mod output;

use buqo::engine::{PipelineError, Stage};
use buqo::BuqoError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(#[from] BuqoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration and input problems, 3 to 6 for the MAP, region,
    /// structure-set and engine stages, 1 for output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Pipeline(p) => match p.stage {
                Stage::Map => 3,
                Stage::Region => 4,
                Stage::Set => 5,
                Stage::Engine => 6,
            },
            CliError::Io(_) => 1,
        }
    }
}
