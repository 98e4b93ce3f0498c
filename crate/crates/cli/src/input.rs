use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use crate::error::{CliError, CliResult};

pub struct Table {
    headers: Option<Vec<String>>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read(path: &Path, has_header: bool) -> CliResult<Self> {
        let source: Box<dyn Read> = if path == Path::new("-") {
            Box::new(io::stdin())
        } else {
            Box::new(
                File::open(path)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
            )
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        let headers = if has_header {
            let h = reader
                .headers()
                .map_err(|e| CliError::Input(e.to_string()))?;
            Some(h.iter().map(str::to_string).collect())
        } else {
            None
        };
        let rows = reader
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Input(e.to_string()))?;
        Ok(Self { headers, rows })
    }

    /// Resolves a selector: a header name when headers are present,
    /// otherwise (or failing that) a zero-based index.
    fn index_of(&self, selector: &str) -> CliResult<usize> {
        if let Some(i) = self
            .headers
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == selector))
        {
            return Ok(i);
        }
        selector
            .parse()
            .map_err(|_| CliError::Config(format!("no column `{selector}`")))
    }

    pub fn column(&self, selector: &str) -> CliResult<Vec<f64>> {
        let idx = self.index_of(selector)?;
        let offset = if self.headers.is_some() { 2 } else { 1 };
        let mut out = Vec::with_capacity(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            let line = i + offset;
            let cell = row
                .get(idx)
                .ok_or_else(|| CliError::Input(format!("line {line}: no column {idx}")))?;
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Input(format!(
                    "line {line}, column {idx}: `{cell}` is not a number"
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "line {line}, column {idx}: non-finite value"
                )));
            }
            out.push(v);
        }
        if out.is_empty() {
            return Err(CliError::Input("no data rows".into()));
        }
        Ok(out)
    }
}
