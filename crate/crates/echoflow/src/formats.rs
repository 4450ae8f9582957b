//! JSON documents: datasets, binnings, models, reports.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use echoflow_core::LabeledDataset;

use crate::error::{IoError, Result};

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, &to_json_bytes(value)?)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(|e| IoError::open(path, e))?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| IoError::open(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Reads a flow dataset and checks its labels against its class list.
pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let ds: LabeledDataset = read_json(path)?;
    ds.validate()?;
    Ok(ds)
}
