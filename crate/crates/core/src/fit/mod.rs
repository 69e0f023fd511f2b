//! Multi-start fitting of law coefficients to run records, and fit-quality scoring.

mod lm;
mod model;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::law::{Family, Law, LawHandle, Provenance};
use crate::record::RunRecord;

use lm::Problem;
use model::{ChinchillaParams, FarseerParams, Parameterization, Sample};

pub use model::N_REF as FARSEER_REFERENCE_N;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Huber loss on `ln(predicted) - ln(actual)`.
    HuberLog,
    /// Mean of `|predicted / actual - 1|`.
    MeanRelativeError,
}

/// Closed interval for one named coefficient.
///
/// Chinchilla bounds use the natural coefficients (`e_irr`, `coef_a`, `exp_a`, `coef_b`,
/// `exp_b`). Farseer bounds use the serialized names; for the three `coef * N^exp`
/// coefficients (`t1_s`, `t2_B`, `ex_A`) the bound applies to the value at
/// [`FARSEER_REFERENCE_N`], i.e. `coef * N_ref^exp`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamBound {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitConfig {
    pub family: Family,
    pub objective: Objective,
    pub huber_delta: f64,
    pub n_starts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Overrides of the default box; coefficients not listed keep their defaults.
    pub bounds: Vec<ParamBound>,
}

impl FitConfig {
    pub fn new(family: Family) -> Self {
        FitConfig {
            family,
            objective: Objective::HuberLog,
            huber_delta: 1e-3,
            n_starts: 64,
            max_iters: 2000,
            seed: 0,
            bounds: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_starts < 1 {
            return Err(invalid("n_starts must be >= 1"));
        }
        if self.max_iters < 1 {
            return Err(invalid("max_iters must be >= 1"));
        }
        if !(self.huber_delta.is_finite() && self.huber_delta > 0.0) {
            return Err(invalid("huber_delta must be positive"));
        }
        let names = param_names(self.family);
        let mut seen = Vec::new();
        for b in &self.bounds {
            if !names.contains(&b.name.as_str()) {
                return Err(invalid(format!("unknown {} coefficient `{}`", self.family, b.name)));
            }
            if seen.contains(&b.name) {
                return Err(invalid(format!("duplicate bound for `{}`", b.name)));
            }
            seen.push(b.name.clone());
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo <= b.hi) {
                return Err(invalid(format!("bound for `{}` must be finite and ordered", b.name)));
            }
        }
        Ok(())
    }

    /// Short stable digest of the configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("fit config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}

pub fn param_names(family: Family) -> &'static [&'static str] {
    match family {
        Family::Chinchilla => &model::CHINCHILLA_NAMES,
        Family::Farseer => &model::FARSEER_NAMES,
    }
}

/// Minimum number of distinct `(n, d)` points needed to fit a family.
pub fn min_points(family: Family) -> usize {
    match family {
        Family::Chinchilla => 6,
        Family::Farseer => 12,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub n: u64,
    pub d: u64,
    pub predicted: f64,
    pub actual: f64,
    pub re_permille: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchSummary {
    pub n_starts: usize,
    pub starts_converged: usize,
    pub best_start_index: usize,
    pub best_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub law: LawHandle,
    /// Mean relative error over the records the report was built from, in permille.
    pub mre_permille: f64,
    /// One entry per input record, in input order.
    pub residuals: Vec<Residual>,
    pub objective_value: f64,
    /// Present when the report comes from a fit rather than from scoring a given law.
    pub search: Option<SearchSummary>,
}

/// Result of a single start, kept when no start converges.
#[derive(Debug, Clone, PartialEq)]
pub struct FitCandidate {
    pub start_index: usize,
    pub law: Law,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `1000 * |predicted - actual| / actual`.
pub fn relative_error(predicted: f64, actual: f64) -> Result<f64> {
    if !(actual.is_finite() && actual > 0.0) {
        return Err(invalid(format!("actual loss must be positive, got {actual}")));
    }
    if !predicted.is_finite() {
        return Err(invalid(format!("predicted loss must be finite, got {predicted}")));
    }
    Ok(1000.0 * (predicted - actual).abs() / actual)
}

fn residuals(law: &Law, records: &[RunRecord]) -> Result<Vec<Residual>> {
    records
        .iter()
        .map(|r| {
            let predicted = law.eval(r.n_params as f64, r.d_tokens as f64)?;
            Ok(Residual {
                n: r.n_params,
                d: r.d_tokens,
                predicted,
                actual: r.loss,
                re_permille: relative_error(predicted, r.loss)?,
            })
        })
        .collect()
}

fn mean_re(res: &[Residual]) -> f64 {
    res.iter().map(|r| r.re_permille).sum::<f64>() / res.len() as f64
}

fn huber_log_mean(res: &[Residual], delta: f64) -> f64 {
    res.iter()
        .map(|r| {
            let x = (r.predicted.ln() - r.actual.ln()).abs();
            if x <= delta {
                0.5 * x * x
            } else {
                delta * (x - 0.5 * delta)
            }
        })
        .sum::<f64>()
        / res.len() as f64
}

/// Evaluates `law` on every record without refitting. The objective value is the mean
/// Huber-log loss with the default delta.
pub fn score(law: &LawHandle, records: &[RunRecord]) -> Result<FitReport> {
    if records.is_empty() {
        return Err(invalid("cannot score an empty record set"));
    }
    let res = residuals(&law.law, records)?;
    Ok(FitReport {
        law: law.clone(),
        mre_permille: mean_re(&res),
        objective_value: huber_log_mean(&res, FitConfig::new(law.family()).huber_delta),
        residuals: res,
        search: None,
    })
}

/// Sorts by `(n, d)` and merges exact duplicates by averaging their log-loss.
fn prepare_samples(records: &[RunRecord]) -> Vec<Sample> {
    let mut groups: BTreeMap<(u64, u64), (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = groups.entry((r.n_params, r.d_tokens)).or_insert((0.0, 0));
        e.0 += r.loss.ln();
        e.1 += 1;
    }
    groups
        .into_iter()
        .map(|((n, d), (sum, k))| Sample {
            ln_n: (n as f64).ln(),
            ln_d: (d as f64).ln(),
            loss: (sum / k as f64).exp(),
        })
        .collect()
}

fn check_records(records: &[RunRecord], family: Family) -> Result<()> {
    let mut defects = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if let Err(e) = r.validate() {
            defects.push(format!("record {i}: {e}"));
        }
    }
    let distinct = |f: fn(&RunRecord) -> u64| {
        let mut v: Vec<u64> = records.iter().map(f).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    let points = {
        let mut v: Vec<(u64, u64)> = records.iter().map(|r| (r.n_params, r.d_tokens)).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    if points < min_points(family) {
        defects.push(format!(
            "{family} needs at least {} distinct (n, d) points, got {points}",
            min_points(family)
        ));
    }
    if distinct(|r| r.n_params) < 2 {
        defects.push("records need at least 2 distinct n values".into());
    }
    if distinct(|r| r.d_tokens) < 2 {
        defects.push("records need at least 2 distinct d values".into());
    }
    if defects.is_empty() {
        Ok(())
    } else {
        Err(invalid(defects.join("; ")))
    }
}

fn fit_with<P: Parameterization>(param: &P, samples: &[Sample], config: &FitConfig) -> Result<Vec<FitCandidate>> {
    let mut bounds = param.default_bounds();
    for b in &config.bounds {
        let i = param.names().iter().position(|n| *n == b.name).expect("validated name");
        bounds[i] = param.bound_to_fit(i, b.lo, b.hi);
    }
    let problem = Problem {
        param,
        samples,
        objective: config.objective,
        delta: config.huber_delta,
        lo: bounds.iter().map(|b| b.0).collect(),
        hi: bounds.iter().map(|b| b.1).collect(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let starts: Vec<Vec<f64>> = (0..config.n_starts).map(|i| param.start(i, &mut rng)).collect();

    Ok(starts
        .into_par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let out = problem.minimize(x0, config.max_iters);
            FitCandidate {
                start_index: i,
                law: param.to_law(&out.x),
                objective: out.objective,
                converged: out.converged,
                iterations: out.iterations,
            }
        })
        .collect())
}

/// Fits `config.family` to `records`, returning the best start by objective value (ties go
/// to the lower start index).
pub fn fit(records: &[RunRecord], config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    check_records(records, config.family)?;
    let samples = prepare_samples(records);

    let mut candidates = match config.family {
        Family::Chinchilla => fit_with(&ChinchillaParams, &samples, config)?,
        Family::Farseer => fit_with(&FarseerParams, &samples, config)?,
    };
    // A law must stay finite and positive over the fitting grid.
    for c in candidates.iter_mut() {
        let ok = samples
            .iter()
            .all(|s| matches!(c.law.eval(s.ln_n.exp(), s.ln_d.exp()), Ok(v) if v > 0.0));
        if !ok {
            c.objective = f64::INFINITY;
            c.converged = false;
        }
    }

    let best =
        candidates
            .iter()
            .filter(|c| c.objective.is_finite())
            .fold(None::<&FitCandidate>, |best, c| match best {
                Some(b) if b.objective <= c.objective => Some(b),
                _ => Some(c),
            });
    let converged = candidates.iter().filter(|c| c.converged).count();
    let Some(best) = best else {
        return Err(Error::FitFailure(Box::new(candidates.swap_remove(0))));
    };
    if converged == 0 {
        return Err(Error::FitFailure(Box::new(best.clone())));
    }

    let res = residuals(&best.law, records)?;
    let mre = mean_re(&res);
    let provenance = Provenance {
        source: "fit".into(),
        fit_config_digest: Some(config.digest()),
        record_count: Some(records.len() as u64),
        mre_permille: Some(mre),
    };
    Ok(FitReport {
        law: LawHandle::new(best.law, provenance),
        mre_permille: mre,
        residuals: res,
        objective_value: best.objective,
        search: Some(SearchSummary {
            n_starts: config.n_starts,
            starts_converged: converged,
            best_start_index: best.start_index,
            best_iterations: best.iterations,
        }),
    })
}

/// Runs every start and returns all candidates, in start order. Exposed for diagnostics.
pub fn fit_candidates(records: &[RunRecord], config: &FitConfig) -> Result<Vec<FitCandidate>> {
    config.validate()?;
    check_records(records, config.family)?;
    let samples = prepare_samples(records);
    match config.family {
        Family::Chinchilla => fit_with(&ChinchillaParams, &samples, config),
        Family::Farseer => fit_with(&FarseerParams, &samples, config),
    }
}
