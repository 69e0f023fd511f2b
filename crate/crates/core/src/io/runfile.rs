use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{file_error, invalid, Error, Result};
use crate::record::RunRecord;

const REQUIRED: [&str; 3] = ["n_params", "d_tokens", "loss"];
const META: [&str; 3] = ["gbz", "gpus", "mbz"];

/// Unit of the `n_params` and `d_tokens` columns as written in the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Raw,
    /// Counts were written in billions and scaled by 1e9 on read.
    Billions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSet {
    pub records: Vec<RunRecord>,
    pub units: Units,
}

fn parse_error(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Reads the leading `# key: value` lines. Only `units` is understood.
fn directives(text: &str) -> Result<Units> {
    let mut units = Units::Raw;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some(body) = line.strip_prefix('#') else { break };
        let Some((key, value)) = body.split_once(':') else {
            continue;
        };
        if key.trim() == "units" {
            units = match value.trim() {
                "billions" => Units::Billions,
                "raw" | "counts" => Units::Raw,
                other => return Err(parse_error(i + 1, "units", format!("unknown unit `{other}`"))),
            };
        }
    }
    Ok(units)
}

fn count(raw: &str, units: Units, row: usize, column: &str) -> Result<u64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| parse_error(row, column, format!("`{raw}` is not a number")))?;
    let v = match units {
        Units::Raw => v,
        Units::Billions => v * 1e9,
    };
    if !(v.is_finite() && v > 0.0) {
        return Err(parse_error(row, column, format!("`{raw}` must be positive")));
    }
    let rounded = v.round();
    if rounded < 1.0 || rounded > u64::MAX as f64 {
        return Err(parse_error(
            row,
            column,
            format!("`{raw}` is not a representable count"),
        ));
    }
    Ok(rounded as u64)
}

/// Parses run records from CSV text. Rows are numbered by file line.
pub fn parse_runfile(text: &str) -> Result<RunSet> {
    let units = directives(text)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_error(1, "header", e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(parse_error(1, "header", "missing header row"));
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 3];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = col(name).ok_or_else(|| parse_error(1, name, "required column missing"))?;
    }
    let mixture = col("mixture");
    let meta: Vec<(&str, usize)> = META.iter().filter_map(|m| col(m).map(|i| (*m, i))).collect();

    let mut records = Vec::new();
    for result in reader.records() {
        let rec = result.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            parse_error(row, "-", format!("malformed row: {e}"))
        })?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| rec.get(i).ok_or_else(|| parse_error(row, name, "missing value"));
        let n = count(field(idx[0], "n_params")?, units, row, "n_params")?;
        let d = count(field(idx[1], "d_tokens")?, units, row, "d_tokens")?;
        let raw_loss = field(idx[2], "loss")?;
        let loss: f64 = raw_loss
            .parse()
            .map_err(|_| parse_error(row, "loss", format!("`{raw_loss}` is not a number")))?;
        if !(loss.is_finite() && loss > 0.0) {
            return Err(parse_error(row, "loss", format!("`{raw_loss}` must be positive")));
        }
        let mut record = RunRecord::new(n, d, loss).map_err(|e| parse_error(row, "-", e.to_string()))?;
        if let Some(i) = mixture {
            let m = field(i, "mixture")?;
            if !m.is_empty() {
                record.mixture = Some(m.to_string());
            }
        }
        for &(name, i) in &meta {
            let v = field(i, name)?;
            if v.is_empty() {
                continue;
            }
            match v.parse::<u64>() {
                Ok(x) if x > 0 => record.meta.insert(name.to_string(), v.to_string()),
                _ => return Err(parse_error(row, name, format!("`{v}` must be a positive integer"))),
            };
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(parse_error(2, "-", "no data rows"));
    }
    Ok(RunSet { records, units })
}

pub fn ingest(path: &Path) -> Result<RunSet> {
    parse_runfile(&fs::read_to_string(path).map_err(file_error(path))?)
}

/// Renders records in raw counts. Losses use the shortest round-trip representation.
pub fn render_runfile(records: &[RunRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(invalid("no records to write"));
    }
    let has_mixture = records.iter().any(|r| r.mixture.is_some());
    let meta: Vec<&str> = META
        .iter()
        .copied()
        .filter(|m| records.iter().any(|r| r.meta.contains_key(*m)))
        .collect();
    let mut header: Vec<&str> = REQUIRED.to_vec();
    if has_mixture {
        header.push("mixture");
    }
    header.extend(&meta);

    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let io = |e: csv::Error| invalid(e.to_string());
    w.write_record(&header).map_err(io)?;
    for r in records {
        let mut row = vec![r.n_params.to_string(), r.d_tokens.to_string(), String::new()];
        write!(row[2], "{}", r.loss).expect("writing to a String");
        if has_mixture {
            row.push(r.mixture.clone().unwrap_or_default());
        }
        for m in &meta {
            row.push(r.meta.get(*m).cloned().unwrap_or_default());
        }
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_runfile(records: &[RunRecord], path: &Path) -> Result<()> {
    fs::write(path, render_runfile(records)?).map_err(file_error(path))?;
    Ok(())
}
