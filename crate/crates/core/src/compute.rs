//! FLOP accounting and compute-optimal `(N, D)` allocation.

use rayon::prelude::*;
use serde::Serialize;

use crate::arch::estimated_n_with_emb;
use crate::error::{invalid, Error, Result};
use crate::law::{ChinchillaLaw, Law};
use crate::search::{check_increasing, golden_section, log_space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "basis")]
pub enum ParamBasis {
    NonEmbedding,
    /// Parameter count includes untied input and output embeddings of `vocab` rows.
    WithEmbedding {
        vocab: u64,
    },
}

/// `C = multiplier * N_basis * D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlopConvention {
    pub multiplier: f64,
    pub basis: ParamBasis,
}

impl Default for FlopConvention {
    fn default() -> Self {
        FlopConvention {
            multiplier: 6.0,
            basis: ParamBasis::NonEmbedding,
        }
    }
}

impl FlopConvention {
    pub fn with_embedding(vocab: u64) -> Self {
        FlopConvention {
            multiplier: 6.0,
            basis: ParamBasis::WithEmbedding { vocab },
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.multiplier.is_finite() && self.multiplier > 0.0) {
            return Err(invalid("FLOP multiplier must be positive"));
        }
        Ok(())
    }

    /// Parameters that FLOPs are charged against for a non-embedding size `n`.
    pub fn charged_params(&self, n: f64) -> f64 {
        match self.basis {
            ParamBasis::NonEmbedding => n,
            ParamBasis::WithEmbedding { vocab } => estimated_n_with_emb(n, vocab),
        }
    }

    /// Tokens affordable at budget `compute` for a non-embedding size `n`.
    pub fn tokens_for(&self, n: f64, compute: f64) -> f64 {
        compute / (self.multiplier * self.charged_params(n))
    }
}

impl std::fmt::Display for FlopConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.basis {
            ParamBasis::NonEmbedding => write!(f, "C = {}*N*D (non-embedding N)", self.multiplier),
            ParamBasis::WithEmbedding { vocab } => {
                write!(f, "C = {}*N*D (N with embeddings, vocab {vocab})", self.multiplier)
            }
        }
    }
}

/// FLOPs of a run. Under the with-embedding basis the caller must supply the
/// embedding-inclusive count.
pub fn flops(n: f64, d: f64, conv: &FlopConvention, n_with_emb: Option<f64>) -> Result<f64> {
    conv.validate()?;
    if !(n >= 1.0 && d >= 1.0 && n.is_finite() && d.is_finite()) {
        return Err(invalid("n and d must be finite counts >= 1"));
    }
    let charged = match (conv.basis, n_with_emb) {
        (ParamBasis::NonEmbedding, _) => n,
        (ParamBasis::WithEmbedding { .. }, Some(total)) if total >= n => total,
        (ParamBasis::WithEmbedding { .. }, Some(total)) => {
            return Err(invalid(format!("embedding-inclusive count {total} is below n {n}")))
        }
        (ParamBasis::WithEmbedding { .. }, None) => {
            return Err(invalid(
                "with-embedding basis needs the embedding-inclusive parameter count",
            ))
        }
    };
    Ok(conv.multiplier * charged * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Allocation {
    pub compute: f64,
    pub n_opt: f64,
    pub d_opt: f64,
    pub dn_ratio: f64,
    pub predicted_loss: f64,
    pub method: Method,
    /// The minimizer sits on the search bracket edge (no interior minimum was found).
    pub on_boundary: bool,
    /// Loss changes by less than 1e-5 (relative) across +-20% of `n_opt`.
    pub flat_basin: bool,
    pub convention: FlopConvention,
}

fn flat_basin(law: &Law, n_opt: f64, loss: f64, compute: f64, conv: &FlopConvention) -> bool {
    [0.8, 1.2].iter().all(|k| {
        let n = n_opt * k;
        match law.eval(n, conv.tokens_for(n, compute)) {
            Ok(v) => ((v - loss) / loss).abs() < 1e-5,
            Err(_) => false,
        }
    })
}

/// Closed-form optimum of a Chinchilla law on the iso-FLOP line `C = m N D`.
pub fn chinchilla_optimal(law: &ChinchillaLaw, compute: f64, conv: &FlopConvention) -> Result<Allocation> {
    conv.validate()?;
    if !(law.coef_a > 0.0 && law.coef_b > 0.0 && law.exp_a > 0.0 && law.exp_b > 0.0) {
        return Err(Error::UnsupportedLaw(
            "closed-form allocation needs positive coefficients and exponents".into(),
        ));
    }
    if conv.basis != ParamBasis::NonEmbedding {
        return Err(Error::UnsupportedLaw(
            "closed-form allocation only exists for the non-embedding basis".into(),
        ));
    }
    if !(compute.is_finite() && compute > 0.0) {
        return Err(invalid("compute must be positive"));
    }
    let (a, b) = (law.exp_a, law.exp_b);
    let g = (a * law.coef_a / (b * law.coef_b)).powf(1.0 / (a + b));
    let n_opt = g * (compute / conv.multiplier).powf(b / (a + b));
    let d_opt = compute / (conv.multiplier * n_opt);
    let l = Law::Chinchilla(*law);
    let predicted_loss = l.eval(n_opt.max(1.0), d_opt.max(1.0))?;
    Ok(Allocation {
        compute,
        n_opt,
        d_opt,
        dn_ratio: d_opt / n_opt,
        predicted_loss,
        method: Method::ClosedForm,
        on_boundary: false,
        flat_basin: flat_basin(&l, n_opt, predicted_loss, compute, conv),
        convention: *conv,
    })
}

/// Search range in `n` for numeric optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub n_min: f64,
    pub n_max: f64,
    /// Coarse grid size.
    pub points: usize,
}

impl Default for Bracket {
    fn default() -> Self {
        Bracket {
            n_min: 1e7,
            n_max: 1e12,
            points: 400,
        }
    }
}

impl Bracket {
    pub fn new(n_min: f64, n_max: f64) -> Self {
        Bracket {
            n_min,
            n_max,
            ..Default::default()
        }
    }
}

const GOLDEN_TOL: f64 = 1e-6;

/// Minimizes `L(n, C / (m n))` over `log n`: a coarse grid selects the lowest interior local
/// minimum, then golden-section search refines it to relative `1e-6` in `n`. When no grid
/// point is lower than both neighbours, the lowest edge point is returned and flagged.
pub fn numeric_optimal(law: &Law, compute: f64, conv: &FlopConvention, bracket: &Bracket) -> Result<Allocation> {
    conv.validate()?;
    if !(compute.is_finite() && compute > 0.0) {
        return Err(invalid("compute must be positive"));
    }
    if !(bracket.n_min >= 1.0 && bracket.n_max / bracket.n_min >= 1e3) {
        return Err(invalid(
            "bracket must start at n >= 1 and span at least 3 orders of magnitude",
        ));
    }
    if bracket.points < 200 {
        return Err(invalid("coarse grid needs at least 200 points"));
    }
    let loss_at = |ln_n: f64| -> Result<f64> {
        let n = ln_n.exp();
        let d = conv.tokens_for(n, compute);
        law.eval(n, d).map_err(|_| Error::Eval {
            term: "iso-FLOP loss",
            n,
            d,
        })
    };

    let grid: Vec<f64> = log_space(bracket.n_min, bracket.n_max, bracket.points)?
        .into_iter()
        .map(f64::ln)
        .collect();
    let losses = grid.iter().map(|&x| loss_at(x)).collect::<Result<Vec<f64>>>()?;

    let interior = (1..grid.len() - 1)
        .filter(|&i| losses[i] < losses[i - 1] && losses[i] <= losses[i + 1])
        .min_by(|&i, &j| losses[i].total_cmp(&losses[j]));

    let (ln_n, loss, on_boundary) = match interior {
        Some(i) => {
            let (x, fx) = golden_section(loss_at, grid[i - 1], grid[i + 1], GOLDEN_TOL)?;
            (x, fx, false)
        }
        None => {
            let last = grid.len() - 1;
            let i = if losses[0] <= losses[last] { 0 } else { last };
            (grid[i], losses[i], true)
        }
    };
    let n_opt = ln_n.exp();
    let d_opt = conv.tokens_for(n_opt, compute);
    Ok(Allocation {
        compute,
        n_opt,
        d_opt,
        dn_ratio: d_opt / n_opt,
        predicted_loss: loss,
        method: Method::Numeric,
        on_boundary,
        flat_basin: flat_basin(law, n_opt, loss, compute, conv),
        convention: *conv,
    })
}

/// Uses the closed form when it applies and the numeric search otherwise.
pub fn optimal(law: &Law, compute: f64, conv: &FlopConvention, bracket: &Bracket) -> Result<Allocation> {
    match law {
        Law::Chinchilla(c)
            if conv.basis == ParamBasis::NonEmbedding
                && c.coef_a > 0.0
                && c.coef_b > 0.0
                && c.exp_a > 0.0
                && c.exp_b > 0.0 =>
        {
            chinchilla_optimal(c, compute, conv)
        }
        _ => numeric_optimal(law, compute, conv, bracket),
    }
}

/// Compute-optimal allocation at every budget of a strictly increasing grid, in budget order.
pub fn optimal_dn_curve(
    law: &Law,
    compute_grid: &[f64],
    conv: &FlopConvention,
    bracket: &Bracket,
) -> Result<Vec<Allocation>> {
    check_increasing(compute_grid, 2, "compute grid")?;
    compute_grid
        .par_iter()
        .map(|&c| optimal(law, c, conv, bracket))
        .collect()
}
