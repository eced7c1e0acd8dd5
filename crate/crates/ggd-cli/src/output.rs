//! Atomic file output and small CSV helpers.

use std::fs;
use std::path::Path;

use ggd_core::Result;

/// Write via a temp file in the same directory, then rename over the
/// target, so readers never observe a partial file and inputs are never
/// half-overwritten.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = match path.extension() {
        Some(ext) => path.with_extension(format!("{}.tmp", ext.to_string_lossy())),
        None => path.with_extension("tmp"),
    };
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV cells are plain here (no commas/quotes in the data we emit), but
/// quote defensively when one sneaks in via a dataset or generator id.
pub fn csv_cell(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

pub struct CsvBuilder {
    text: String,
}

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        CsvBuilder { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        let line: Vec<String> = cells.iter().map(|c| csv_cell(c)).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
