use std::path::{Path, PathBuf};

pub type Result<T, E = IoError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unexpected packet csv header `{0}` (expected ts,size,dir,src,dst,sport,dport,proto[,label])")]
    Header(String),
    #[error("line {line}: {msg}")]
    Row { line: u64, msg: String },
    #[error("config line {line}: {msg}")]
    ConfigSyntax { line: usize, msg: String },
    #[error("config key `{key}`: {msg}")]
    ConfigValue { key: String, msg: String },
    #[error(transparent)]
    Core(#[from] echoflow_core::Error),
}

impl IoError {
    pub fn open(path: &Path, source: std::io::Error) -> Self {
        IoError::Open {
            path: path.to_path_buf(),
            source,
        }
    }
}
