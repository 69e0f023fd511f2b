use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use codescale::io::{format_number, render_series, Cell, SeriesFormat, Table};
use codescale::{Allocation, Method, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

pub fn fmt(v: f64) -> String {
    format_number(v)
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Num(v) => fmt(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

/// Aligned columns, right-justified, two spaces apart.
fn text_table(t: &Table) -> String {
    let cells: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(cell_text).collect()).collect();
    let widths: Vec<usize> = (0..t.columns.len())
        .map(|j| {
            cells
                .iter()
                .map(|r| r[j].len())
                .chain([t.columns[j].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |row: Vec<&str>| -> String {
        let padded: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(t.columns.iter().map(String::as_str).collect());
    for r in &cells {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub struct Emitter {
    format: Format,
    out: Option<PathBuf>,
}

impl Emitter {
    pub fn new(format: Format, out: Option<PathBuf>) -> Self {
        Emitter { format, out }
    }

    fn write(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|source| codescale::Error::File {
                path: path.clone(),
                source,
            })?,
            None => print!("{text}"),
        }
        Ok(())
    }

    fn series(&self, t: &Table) -> Option<Result<String>> {
        match self.format {
            Format::Text => None,
            Format::Csv => Some(render_series(t, SeriesFormat::Csv)),
            Format::Json => Some(render_series(t, SeriesFormat::Json)),
        }
    }

    pub fn table(&self, t: &Table) -> Result<()> {
        self.table_with_footer(t, &[])
    }

    /// Text output appends `key: value` summary lines; CSV and JSON carry only the rows.
    pub fn table_with_footer(&self, t: &Table, footer: &[(String, String)]) -> Result<()> {
        if let Some(text) = self.series(t) {
            return self.write(&text?);
        }
        if t.is_empty() {
            return Err(codescale::Error::InvalidArgument("nothing to print".into()));
        }
        let mut text = text_table(t);
        for (k, v) in footer {
            text.push_str(&format!("{k}: {v}\n"));
        }
        self.write(&text)
    }

    /// Single-row tables print as `key: value` lines in text mode.
    pub fn record(&self, t: &Table) -> Result<()> {
        if let Some(text) = self.series(t) {
            return self.write(&text?);
        }
        let mut text = String::new();
        for row in &t.rows {
            for (k, c) in t.columns.iter().zip(row) {
                text.push_str(&format!("{k}: {}\n", cell_text(c)));
            }
        }
        self.write(&text)
    }
}

pub fn allocation_table(allocs: &[Allocation]) -> Result<Table> {
    let mut t = Table::new([
        "compute",
        "n_opt",
        "d_opt",
        "dn_ratio",
        "predicted_loss",
        "method",
        "on_boundary",
        "flat_basin",
        "convention",
    ]);
    for a in allocs {
        let method = match a.method {
            Method::ClosedForm => "closed_form",
            Method::Numeric => "numeric",
        };
        t.push(vec![
            Cell::Num(a.compute),
            Cell::Num(a.n_opt),
            Cell::Num(a.d_opt),
            Cell::Num(a.dn_ratio),
            Cell::Num(a.predicted_loss),
            method.into(),
            a.on_boundary.to_string().into(),
            a.flat_basin.to_string().into(),
            a.convention.to_string().into(),
        ])?;
    }
    Ok(t)
}
