//! Command-line front end: configuration files, CSV reports and charts.

pub mod config_file;
pub mod csv;
pub mod error;
pub mod report;
pub mod svg;

use std::path::{Path, PathBuf};

use ehwake::SimConfig;

pub use config_file::{parse_config, serialize_config};
pub use error::CliError;

/// Reads and parses a configuration file; no file means the defaults.
pub fn load_config(path: Option<&Path>) -> Result<SimConfig, CliError> {
    match path {
        None => parse_config(""),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            parse_config(&text)
        }
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// `dir/name.csv` becomes `dir/name.<suffix>.csv`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}
