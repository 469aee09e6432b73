//! Sample-file formats.
//!
//! CSV: one sample per row, optional single header row (detected by a
//! non-numeric first row), `#` lines are comments. JSON: an object
//! `{"dim": d, "samples": [[...], ...]}`; extra keys are ignored.
//!
//! Numbers are written with 17 significant digits so that every `f64`
//! survives a write/read cycle bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::SampleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    Csv,
    Json,
}

impl SampleFormat {
    /// `.json` means JSON; anything else is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => SampleFormat::Json,
            _ => SampleFormat::Csv,
        }
    }
}

/// 17 significant digits, exponent form.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn parse_csv(text: &str) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut width: Option<usize> = None;
    let mut n = 0;
    let mut data = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Format {
            line: e.position().map_or(0, |p| p.line() as usize),
            column: None,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if first {
            first = false;
            if record.iter().any(|c| parse_cell(c).is_none()) {
                // header row
                width = Some(record.len());
                continue;
            }
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(Error::Format {
                    line,
                    column: None,
                    message: format!("expected {w} fields, found {}", record.len()),
                });
            }
            _ => width = Some(record.len()),
        }
        for (c, cell) in record.iter().enumerate() {
            let v = parse_cell(cell).ok_or_else(|| Error::Format {
                line,
                column: Some(c + 1),
                message: format!("not a finite number: {cell:?}"),
            })?;
            data.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid("sample file contains no samples"));
    }
    SampleSet::new(n, width.unwrap_or(0), data)
}

#[derive(Deserialize)]
struct JsonSamples {
    dim: usize,
    samples: Vec<Vec<f64>>,
}

pub fn parse_json(text: &str) -> Result<SampleSet> {
    let parsed: JsonSamples = serde_json::from_str(text).map_err(|e| Error::Format {
        line: e.line(),
        column: Some(e.column()),
        message: e.to_string(),
    })?;
    if parsed.samples.is_empty() {
        return Err(Error::invalid("sample file contains no samples"));
    }
    if let Some(i) = parsed.samples.iter().position(|r| r.len() != parsed.dim) {
        return Err(Error::invalid(format!(
            "sample {i} has {} values but dim is {}",
            parsed.samples[i].len(),
            parsed.dim
        )));
    }
    SampleSet::from_rows(&parsed.samples)
}

pub fn parse_samples(text: &str, format: SampleFormat) -> Result<SampleSet> {
    match format {
        SampleFormat::Csv => parse_csv(text),
        SampleFormat::Json => parse_json(text),
    }
}

pub fn read_samples(path: &Path, format: SampleFormat) -> Result<SampleSet> {
    let text = fs::read_to_string(path)?;
    parse_samples(&text, format)
}

/// CSV body; `comments` become leading `# ` lines.
pub fn samples_to_csv(samples: &SampleSet, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    for row in samples.rows() {
        let cells: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// JSON document; `meta` is stored under a `"meta"` key when given.
pub fn samples_to_json(samples: &SampleSet, meta: Option<&serde_json::Value>) -> String {
    // serde_json would print the shortest representation; write numbers by hand
    let rows: Vec<String> = samples
        .rows()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|&v| format_f64(v)).collect();
            format!("[{}]", cells.join(","))
        })
        .collect();
    let mut out = format!("{{\"dim\":{},", samples.d());
    if let Some(m) = meta {
        out.push_str(&format!("\"meta\":{m},"));
    }
    out.push_str(&format!("\"samples\":[\n{}\n]}}\n", rows.join(",\n")));
    out
}

pub fn write_samples(path: &Path, samples: &SampleSet, format: SampleFormat) -> Result<()> {
    let text = match format {
        SampleFormat::Csv => samples_to_csv(samples, &[]),
        SampleFormat::Json => samples_to_json(samples, None),
    };
    fs::write(path, text)?;
    Ok(())
}
