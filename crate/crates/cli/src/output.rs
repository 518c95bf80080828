use std::io::Write;
use std::path::Path;

use crate::CliError;

/// 12 significant digits; infinities and NaN spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.11e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// JSON number, or a string for values JSON cannot hold.
pub fn json_num(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::json!(num(x))
    }
}

pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Input(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Input(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn json_string(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

/// Writes the artifact to `out` and the summary to stdout, or, without
/// `out`, the artifact to stdout and the summary to stderr.
pub fn emit(out: Option<&Path>, artifact: &str, summary: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, artifact)
                .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
            println!("{summary}");
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(artifact.as_bytes())
                .map_err(|e| CliError::Input(format!("stdout: {e}")))?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}
