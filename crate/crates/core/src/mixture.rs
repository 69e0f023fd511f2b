//! Comparing loss surfaces fitted on different data mixtures.
//!
//! All comparisons hold `N` fixed and sweep the ratio `r = D/N`, where `D` counts only the
//! in-domain (code) tokens of a mixture.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::law::LawHandle;
use crate::search::{bisect, check_increasing, log_space};

/// Scan resolution for sign changes.
pub const SCAN_POINTS: usize = 512;
const ROOT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverScan {
    /// Ratios where `L_a - L_b` changes sign, ascending.
    pub roots: Vec<f64>,
    /// Ratios where `|L_a - L_b|` dips below `tol` without changing sign.
    pub touches: Vec<f64>,
    /// `|L_a - L_b| <= tol` over the whole range.
    pub identical: bool,
}

pub fn crossover_dn(a: &LawHandle, b: &LawHandle, n: f64, dn_range: (f64, f64), tol: f64) -> Result<CrossoverScan> {
    crossover_dn_with(a, b, n, dn_range, tol, SCAN_POINTS)
}

/// [`crossover_dn`] with an explicit scan resolution.
pub fn crossover_dn_with(
    a: &LawHandle,
    b: &LawHandle,
    n: f64,
    dn_range: (f64, f64),
    tol: f64,
    points: usize,
) -> Result<CrossoverScan> {
    let (lo, hi) = dn_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid(format!(
            "D/N range must be positive and ordered, got [{lo}, {hi}]"
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid("tolerance must be positive"));
    }
    if points < 2 {
        return Err(invalid("scan needs at least 2 points"));
    }
    let diff = |ln_r: f64| -> Result<f64> {
        let d = ln_r.exp() * n;
        Ok(a.eval(n, d)? - b.eval(n, d)?)
    };
    let grid: Vec<f64> = log_space(lo, hi, points)?.into_iter().map(f64::ln).collect();
    let f = grid.iter().map(|&x| diff(x)).collect::<Result<Vec<f64>>>()?;

    if f.iter().all(|v| v.abs() <= tol) {
        return Ok(CrossoverScan {
            roots: Vec::new(),
            touches: Vec::new(),
            identical: true,
        });
    }

    let mut roots = Vec::new();
    for i in 0..grid.len() {
        if f[i] == 0.0 {
            // Exact zero on the grid counts once, and only if the sign actually changes across it.
            let left = (0..i).rev().map(|k| f[k]).find(|v| *v != 0.0);
            let right = (i + 1..grid.len()).map(|k| f[k]).find(|v| *v != 0.0);
            if let (Some(l), Some(r)) = (left, right) {
                if (l < 0.0) != (r < 0.0) && (i == 0 || f[i - 1] != 0.0) {
                    roots.push(grid[i].exp());
                }
            }
            continue;
        }
        if i + 1 < grid.len() && f[i + 1] != 0.0 && (f[i] < 0.0) != (f[i + 1] < 0.0) {
            let x = bisect(diff, grid[i], grid[i + 1], f[i], ROOT_REL_TOL)?;
            roots.push(x.exp());
        }
    }

    let mut touches = Vec::new();
    for i in 1..grid.len() - 1 {
        let m = f[i].abs();
        let same_sign = (f[i - 1] < 0.0) == (f[i] < 0.0) && (f[i + 1] < 0.0) == (f[i] < 0.0);
        if f[i] != 0.0 && m < tol && same_sign && m <= f[i - 1].abs() && m <= f[i + 1].abs() {
            touches.push(grid[i].exp());
        }
    }

    Ok(CrossoverScan {
        roots,
        touches,
        identical: false,
    })
}

/// Labelled laws, one of which is the reference.
#[derive(Debug, Clone)]
pub struct LawSet {
    entries: Vec<(String, LawHandle)>,
    reference: String,
}

impl LawSet {
    pub fn new(entries: Vec<(String, LawHandle)>, reference: impl Into<String>) -> Result<Self> {
        let reference = reference.into();
        if entries.is_empty() {
            return Err(invalid("law set is empty"));
        }
        for (i, (label, _)) in entries.iter().enumerate() {
            if label.is_empty() {
                return Err(invalid("labels must be non-empty"));
            }
            if entries[..i].iter().any(|(l, _)| l == label) {
                return Err(invalid(format!("duplicate label `{label}`")));
            }
        }
        if !entries.iter().any(|(l, _)| *l == reference) {
            return Err(invalid(format!("reference label `{reference}` not in set")));
        }
        Ok(LawSet { entries, reference })
    }

    pub fn entries(&self) -> &[(String, LawHandle)] {
        &self.entries
    }

    pub fn reference_label(&self) -> &str {
        &self.reference
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Label(String),
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossover {
    pub n: f64,
    pub dn: f64,
    pub labels: (String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub n_grid: Vec<f64>,
    pub dn_grid: Vec<f64>,
    /// `winners[i][j]` is the best law at `(n_grid[i], dn_grid[j] * n_grid[i])`.
    pub winners: Vec<Vec<Winner>>,
    pub crossovers: Vec<Crossover>,
}

pub fn dominance_map(set: &LawSet, n_grid: &[f64], dn_grid: &[f64], tol: f64) -> Result<DominanceReport> {
    check_increasing(n_grid, 1, "n grid")?;
    check_increasing(dn_grid, 2, "D/N grid")?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid("tolerance must be positive"));
    }
    let entries = set.entries();
    let range = (dn_grid[0], dn_grid[dn_grid.len() - 1]);

    let rows = n_grid
        .par_iter()
        .map(|&n| -> Result<(Vec<Winner>, Vec<Crossover>)> {
            let mut winners = Vec::with_capacity(dn_grid.len());
            for &r in dn_grid {
                let d = r * n;
                let mut losses = entries
                    .iter()
                    .map(|(label, law)| Ok((law.eval(n, d)?, label)))
                    .collect::<Result<Vec<_>>>()?;
                losses.sort_by(|x, y| x.0.total_cmp(&y.0));
                let w = match losses.get(1) {
                    Some(second) if second.0 - losses[0].0 < tol => Winner::Tie,
                    _ => Winner::Label(losses[0].1.clone()),
                };
                winners.push(w);
            }
            let mut crossings = Vec::new();
            for i in 0..entries.len() {
                for j in i + 1..entries.len() {
                    let scan = crossover_dn(&entries[i].1, &entries[j].1, n, range, tol)?;
                    crossings.extend(scan.roots.into_iter().map(|dn| Crossover {
                        n,
                        dn,
                        labels: (entries[i].0.clone(), entries[j].0.clone()),
                    }));
                }
            }
            Ok((winners, crossings))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut winners = Vec::with_capacity(rows.len());
    let mut crossovers = Vec::new();
    for (w, c) in rows {
        winners.push(w);
        crossovers.extend(c);
    }
    Ok(DominanceReport {
        n_grid: n_grid.to_vec(),
        dn_grid: dn_grid.to_vec(),
        winners,
        crossovers,
    })
}
