pub mod chsh;
pub mod estimate;
pub mod simulate;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use lgaxis_core::{RateMap, ScanMap};

use crate::args::OutputFormat;
use crate::CliError;

/// Reads a scan map, as JSON when the extension is `.json` and CSV otherwise.
pub fn read_scan_map(path: &Path) -> Result<ScanMap, CliError> {
    let map = if OutputFormat::from_extension(path) == Some(OutputFormat::Json) {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        ScanMap::from_json(&text)
    } else {
        ScanMap::read_csv(BufReader::new(
            File::open(path).map_err(|e| io_error(path, e))?,
        ))
    };
    map.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn write_scan_map(map: &ScanMap, path: &Path, format: OutputFormat) -> Result<(), CliError> {
    match format {
        OutputFormat::Csv => map.write_csv(create(path)?)?,
        OutputFormat::Json => write_text(path, &map.to_json()?)?,
    }
    Ok(())
}

pub fn write_rate_map(map: &RateMap, path: &Path, format: OutputFormat) -> Result<(), CliError> {
    match format {
        OutputFormat::Csv => map.write_csv(create(path)?)?,
        OutputFormat::Json => write_text(path, &map.to_json()?)?,
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())
        .map_err(|e| io_error(path, e))?;
    if !text.ends_with('\n') {
        out.write_all(b"\n").map_err(|e| io_error(path, e))?;
    }
    out.flush().map_err(|e| io_error(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

/// `dir/name.ext` → `dir/name{suffix}.ext`.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Computation(format!("cannot serialize report: {e}")))
}
