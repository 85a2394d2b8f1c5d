use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::CliError;

/// Per-capita margins read from a CSV, with the duplicates that were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub points: Vec<(u64, f64)>,
    pub warnings: Vec<String>,
}

/// Reads `population,abs_margin` (raw counts) or
/// `population,margin_per_capita` and returns `(n, margin / n)` pairs.
pub fn ingest_margins(path: &Path) -> Result<Ingested, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("{}: cannot open: {e}", path.display())))?;
    read_margins(file, &path.display().to_string())
}

pub fn read_margins<R: Read>(input: R, name: &str) -> Result<Ingested, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{name}: unreadable header: {e}")))?
        .clone();
    if headers.iter().all(str::is_empty) {
        return Err(CliError::Data(format!("{name}: file is empty")));
    }
    let column = |h: &str| headers.iter().position(|c| c == h);
    let pop = column("population").ok_or_else(|| {
        CliError::Data(format!("{name}:1: header needs a `population` column"))
    })?;
    let (value, raw) = match (column("abs_margin"), column("margin_per_capita")) {
        (Some(i), None) => (i, true),
        (None, Some(i)) => (i, false),
        _ => {
            return Err(CliError::Data(format!(
                "{name}:1: header needs exactly one of `abs_margin` or `margin_per_capita`"
            )))
        }
    };

    let mut points = Vec::new();
    let mut warnings = Vec::new();
    let mut problems = Vec::new();
    let mut seen: HashMap<(u64, u64), u64> = HashMap::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                problems.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let n = match record.get(pop).map(str::parse::<i64>) {
            Some(Ok(n)) if n > 0 => n as u64,
            Some(Ok(n)) => {
                problems.push(format!("line {line}: population must be positive, got {n}"));
                continue;
            }
            _ => {
                problems.push(format!("line {line}: population is not an integer"));
                continue;
            }
        };
        let v = match record.get(value).map(str::parse::<f64>) {
            Some(Ok(v)) if v.is_finite() && v >= 0.0 => v,
            Some(Ok(v)) => {
                problems.push(format!("line {line}: margin must be finite and nonnegative, got {v}"));
                continue;
            }
            _ => {
                problems.push(format!("line {line}: margin is not a number"));
                continue;
            }
        };
        if let Some(first) = seen.insert((n, v.to_bits()), line) {
            warnings.push(format!("{name}: line {line} duplicates line {first}; dropped"));
            seen.insert((n, v.to_bits()), first);
            continue;
        }
        points.push((n, if raw { v / n as f64 } else { v }));
    }
    if !problems.is_empty() {
        return Err(CliError::Data(format!("{name}: malformed rows: {}", problems.join("; "))));
    }
    if points.is_empty() {
        return Err(CliError::Data(format!("{name}: no data rows")));
    }
    Ok(Ingested { points, warnings })
}
