use std::io;

use thiserror::Error;

/// Everything that can stop a run before a verdict is reached.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration. `key` names the config entry at fault, when known,
    /// so the message can be anchored to its line.
    #[error("{}{message}", location.as_deref().map(|l| format!("{l}: ")).unwrap_or_default())]
    Config {
        message: String,
        key: Option<String>,
        location: Option<String>,
    },
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Resource(String),
    #[error("{0}")]
    Tolerance(String),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn config(key: Option<&str>, message: impl Into<String>) -> Self {
        CliError::Config {
            message: message.into(),
            key: key.map(str::to_owned),
            location: None,
        }
    }

    /// Process exit status: 2 config/data, 3 resource guard, 4 numerics or I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Data(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Tolerance(_) | CliError::Io(_) => 4,
        }
    }
}

impl From<dfvote_core::Error> for CliError {
    fn from(e: dfvote_core::Error) -> Self {
        use dfvote_core::Error as E;
        match e {
            E::Config(m) => CliError::config(None, m),
            E::Data(m) => CliError::Data(m),
            E::Resource(m) => CliError::Resource(m),
            E::Tolerance(m) => CliError::Tolerance(m),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}
