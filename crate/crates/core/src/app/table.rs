//! Header-first CSV tables whose first column is an opaque row label.

use std::io::Read;
use std::path::Path;

use super::AppError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    /// Raw cells, row-major, without the header row.
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read_path(path: &Path) -> Result<Self, AppError> {
        let file = std::fs::File::open(path).map_err(|e| AppError::Data(format!("cannot open {}: {e}", path.display())))?;
        Self::read(file)
    }

    pub fn read<R: Read>(reader: R) -> Result<Self, AppError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| AppError::Data(format!("line 1: cannot read header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(AppError::Data("line 1: empty header".into()));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                match e.kind() {
                    csv::ErrorKind::UnequalLengths { expected_len, len, .. } => AppError::Data(format!(
                        "line {line}: malformed row with {len} fields, expected {expected_len}"
                    )),
                    _ => AppError::Data(format!("line {line}: {e}")),
                }
            })?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize, AppError> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            AppError::Data(format!("missing column '{name}' (available: {})", self.headers.join(", ")))
        })
    }

    /// Numeric column; line numbers in errors count the header as line 1.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>, AppError> {
        let j = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let cell = &r[j];
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(AppError::Data(format!("line {}: non-numeric cell '{cell}' in column '{name}'", i + 2))),
                }
            })
            .collect()
    }

    /// First-column labels.
    pub fn labels(&self) -> Vec<String> {
        self.rows.iter().map(|r| r[0].clone()).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), AppError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.headers).map_err(AppError::io)?;
        for r in &self.rows {
            wr.write_record(r).map_err(AppError::io)?;
        }
        wr.flush().map_err(AppError::io)
    }
}
