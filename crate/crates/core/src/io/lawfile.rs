use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{file_error, Error, Result};
use crate::law::{ChinchillaLaw, Family, FarseerLaw, Law, LawHandle, Provenance};

pub const LAW_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct Out<'a, C: Serialize> {
    format_version: u32,
    family: Family,
    coefficients: &'a C,
    provenance: &'a Provenance,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    format_version: u32,
    family: Family,
    coefficients: serde_json::Value,
    provenance: Provenance,
}

fn law_error(e: impl std::fmt::Display) -> Error {
    Error::LawFile(e.to_string())
}

/// Canonical form: pretty JSON, fixed key order, trailing newline.
pub fn emit_law(handle: &LawHandle) -> Result<String> {
    let p = &handle.provenance;
    let mut text = match &handle.law {
        Law::Chinchilla(c) => serde_json::to_string_pretty(&Out {
            format_version: LAW_FORMAT_VERSION,
            family: Family::Chinchilla,
            coefficients: c,
            provenance: p,
        }),
        Law::Farseer(f) => serde_json::to_string_pretty(&Out {
            format_version: LAW_FORMAT_VERSION,
            family: Family::Farseer,
            coefficients: f,
            provenance: p,
        }),
    }
    .map_err(law_error)?;
    text.push('\n');
    Ok(text)
}

pub fn parse_law(text: &str) -> Result<LawHandle> {
    let raw: Raw = serde_json::from_str(text).map_err(law_error)?;
    if raw.format_version != LAW_FORMAT_VERSION {
        return Err(Error::LawFile(format!(
            "unsupported format_version {} (expected {LAW_FORMAT_VERSION})",
            raw.format_version
        )));
    }
    let law: Law = match raw.family {
        Family::Chinchilla => serde_json::from_value::<ChinchillaLaw>(raw.coefficients)
            .map_err(|e| Error::LawFile(format!("coefficients: {e}")))?
            .into(),
        Family::Farseer => serde_json::from_value::<FarseerLaw>(raw.coefficients)
            .map_err(|e| Error::LawFile(format!("coefficients: {e}")))?
            .into(),
    };
    let values: Vec<f64> = match &law {
        Law::Chinchilla(c) => vec![c.e_irr, c.coef_a, c.exp_a, c.coef_b, c.exp_b],
        Law::Farseer(f) => vec![
            f.t1_coef,
            f.t1_exp,
            f.t1_offset,
            f.t2_coef,
            f.t2_exp,
            f.t2_offset,
            f.ex_coef,
            f.ex_exp,
            f.ex_offset,
        ],
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::LawFile("coefficients must be finite".into()));
    }
    Ok(LawHandle::new(law, raw.provenance))
}

pub fn read_law(path: &Path) -> Result<LawHandle> {
    let text = fs::read_to_string(path).map_err(file_error(path))?;
    parse_law(&text).map_err(|e| match e {
        Error::LawFile(m) => Error::LawFile(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_law(handle: &LawHandle, path: &Path) -> Result<()> {
    fs::write(path, emit_law(handle)?).map_err(file_error(path))?;
    Ok(())
}
