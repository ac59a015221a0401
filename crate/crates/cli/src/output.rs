//! CSV files: header row, `.` decimal point, 17 significant digits.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{CliError, Result};

/// `v` with 17 significant digits, which round-trips every `f64`.
pub fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Writes one header and the rows to `path`, or to standard output when
/// `path` is `None`.
pub fn write_csv(path: Option<&Path>, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            Box::new(File::create(p).map_err(|e| CliError::io(p, e))?)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    let name = path.map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string());
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header).map_err(|e| CliError::csv(&name, e))?;
    for row in rows {
        w.write_record(row.into_iter().map(format_value)).map_err(|e| CliError::csv(&name, e))?;
    }
    w.flush().map_err(|e| CliError::io(&name, e))
}

/// A CSV of numbers: the header and the columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| CliError::csv(path, e))?.iter().map(str::to_string).collect();
    let mut columns = vec![Vec::new(); header.len()];
    for record in r.records() {
        let record = record.map_err(|e| CliError::csv(path, e))?;
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let v = field
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{}: {field:?} is not a number", path.display())))?;
            col.push(v);
        }
    }
    Ok(Table { header, columns })
}
