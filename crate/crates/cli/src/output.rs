use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "elgof/1";

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn to_json<T: Serialize>(body: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(&Envelope {
        schema: SCHEMA,
        body,
    })
    .map_err(|e| CliError::Compute(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| CliError::Compute(e.to_string()))?;
    for row in rows {
        w.write_record(row)
            .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Compute(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Compute(e.to_string()))
}

/// Writes the finished document to `out`, or to standard output. Files are
/// written to a sibling temporary and renamed, so a failure leaves nothing.
pub fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    let Some(path) = out else {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(text.as_bytes())?;
        return Ok(stdout.flush()?);
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let result = std::fs::write(&tmp, text).and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(CliError::Input(format!("{}: {e}", path.display())));
    }
    Ok(())
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        "nan".into()
    }
}
