//! Parametric loss surfaces `L(N, D)` and their asymptotic limits.
//!
//! Two families are supported:
//!
//! * [`ChinchillaLaw`]: `L = E + A / N^a + B / D^b`
//! * [`FarseerLaw`]: `L = exp(s N^q + S) + exp(B N^b + Q) * D^(-exp(A N^a + E))`
//!
//! The second family reuses the symbols of the first with different meanings, so its
//! Rust fields are named by role (`t1_*` for the model-size term, `t2_*` for the data-term
//! prefactor, `ex_*` for the data exponent). The serialized names are the short symbolic ones.
//!
//! `N` and `D` are raw counts (parameters and tokens), never billions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Chinchilla,
    Farseer,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Chinchilla => "chinchilla",
            Family::Farseer => "farseer",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chinchilla" => Ok(Family::Chinchilla),
            "farseer" => Ok(Family::Farseer),
            other => Err(invalid(format!("unknown law family `{other}`"))),
        }
    }
}

/// `L = e_irr + coef_a / N^exp_a + coef_b / D^exp_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChinchillaLaw {
    pub e_irr: f64,
    pub coef_a: f64,
    pub exp_a: f64,
    pub coef_b: f64,
    pub exp_b: f64,
}

/// `L = exp(t1_s N^t1_q + t1_S) + exp(t2_B N^t2_b + t2_Q) * D^(-exp(ex_A N^ex_a + ex_E))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarseerLaw {
    #[serde(rename = "t1_s")]
    pub t1_coef: f64,
    #[serde(rename = "t1_q")]
    pub t1_exp: f64,
    #[serde(rename = "t1_S")]
    pub t1_offset: f64,
    #[serde(rename = "t2_B")]
    pub t2_coef: f64,
    #[serde(rename = "t2_b")]
    pub t2_exp: f64,
    #[serde(rename = "t2_Q")]
    pub t2_offset: f64,
    #[serde(rename = "ex_A")]
    pub ex_coef: f64,
    #[serde(rename = "ex_a")]
    pub ex_exp: f64,
    #[serde(rename = "ex_E")]
    pub ex_offset: f64,
}

fn check_counts(n: f64, d: f64) -> Result<()> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(invalid(format!("n must be a finite count >= 1, got {n}")));
    }
    if !(d.is_finite() && d >= 1.0) {
        return Err(invalid(format!("d must be a finite count >= 1, got {d}")));
    }
    Ok(())
}

fn finite(term: &'static str, value: f64, n: f64, d: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Eval { term, n, d })
    }
}

impl ChinchillaLaw {
    pub fn eval(&self, n: f64, d: f64) -> Result<f64> {
        check_counts(n, d)?;
        let model = finite(
            "model term coef_a/n^exp_a",
            self.coef_a * (-self.exp_a * n.ln()).exp(),
            n,
            d,
        )?;
        let data = finite(
            "data term coef_b/d^exp_b",
            self.coef_b * (-self.exp_b * d.ln()).exp(),
            n,
            d,
        )?;
        finite("loss", self.e_irr + model + data, n, d)
    }
}

/// `coef * n^exp + offset`, evaluated from `ln n`.
#[inline]
fn n_power(coef: f64, exp: f64, offset: f64, ln_n: f64) -> f64 {
    if coef == 0.0 {
        offset
    } else {
        coef * (exp * ln_n).exp() + offset
    }
}

impl FarseerLaw {
    /// Model-size term `exp(t1_s N^t1_q + t1_S)`.
    pub fn model_term(&self, n: f64) -> f64 {
        n_power(self.t1_coef, self.t1_exp, self.t1_offset, n.ln()).exp()
    }

    /// Data-term prefactor `exp(t2_B N^t2_b + t2_Q)`.
    pub fn data_prefactor(&self, n: f64) -> f64 {
        n_power(self.t2_coef, self.t2_exp, self.t2_offset, n.ln()).exp()
    }

    /// Data exponent `exp(ex_A N^ex_a + ex_E)`.
    pub fn data_exponent(&self, n: f64) -> f64 {
        n_power(self.ex_coef, self.ex_exp, self.ex_offset, n.ln()).exp()
    }

    /// Evaluates the surface with the data term folded into a single exponential, so that
    /// large prefactors and tiny `D` powers never meet as separate floating-point values.
    pub fn eval(&self, n: f64, d: f64) -> Result<f64> {
        check_counts(n, d)?;
        let ln_n = n.ln();
        let t1 = finite(
            "model term",
            n_power(self.t1_coef, self.t1_exp, self.t1_offset, ln_n).exp(),
            n,
            d,
        )?;
        let exponent = finite(
            "data exponent",
            n_power(self.ex_coef, self.ex_exp, self.ex_offset, ln_n).exp(),
            n,
            d,
        )?;
        let log_t2 = n_power(self.t2_coef, self.t2_exp, self.t2_offset, ln_n) - exponent * d.ln();
        let t2 = finite("data term", log_t2.exp(), n, d)?;
        finite("loss", t1 + t2, n, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Chinchilla(ChinchillaLaw),
    Farseer(FarseerLaw),
}

impl Law {
    pub fn family(&self) -> Family {
        match self {
            Law::Chinchilla(_) => Family::Chinchilla,
            Law::Farseer(_) => Family::Farseer,
        }
    }

    pub fn eval(&self, n: f64, d: f64) -> Result<f64> {
        match self {
            Law::Chinchilla(l) => l.eval(n, d),
            Law::Farseer(l) => l.eval(n, d),
        }
    }
}

impl From<ChinchillaLaw> for Law {
    fn from(l: ChinchillaLaw) -> Self {
        Law::Chinchilla(l)
    }
}

impl From<FarseerLaw> for Law {
    fn from(l: FarseerLaw) -> Self {
        Law::Farseer(l)
    }
}

/// Where a law came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_config_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mre_permille: Option<f64>,
}

impl Provenance {
    pub fn source(source: impl Into<String>) -> Self {
        Provenance {
            source: source.into(),
            ..Default::default()
        }
    }
}

/// A law together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LawHandle {
    pub law: Law,
    pub provenance: Provenance,
}

impl LawHandle {
    pub fn new(law: impl Into<Law>, provenance: Provenance) -> Self {
        LawHandle {
            law: law.into(),
            provenance,
        }
    }

    pub fn family(&self) -> Family {
        self.law.family()
    }

    pub fn eval(&self, n: f64, d: f64) -> Result<f64> {
        self.law.eval(n, d)
    }
}

/// Value of `L` as `N, D -> infinity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Finite(f64),
    Zero,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tends {
    PlusInf,
    MinusInf,
    To(f64),
}

/// Limit of `coef * n^exp + offset` as `n -> infinity`.
fn n_power_limit(coef: f64, exp: f64, offset: f64) -> Tends {
    if coef == 0.0 {
        return Tends::To(offset);
    }
    if exp > 0.0 {
        if coef > 0.0 {
            Tends::PlusInf
        } else {
            Tends::MinusInf
        }
    } else if exp == 0.0 {
        Tends::To(coef + offset)
    } else {
        Tends::To(offset)
    }
}

/// `exp` of a tendency: `None` means it diverges to +infinity.
fn exp_limit(t: Tends) -> Option<f64> {
    match t {
        Tends::PlusInf => None,
        Tends::MinusInf => Some(0.0),
        Tends::To(v) => Some(v.exp()),
    }
}

fn classify(sum: f64) -> Limit {
    if sum == 0.0 {
        Limit::Zero
    } else if sum.is_finite() {
        Limit::Finite(sum)
    } else {
        Limit::Divergent
    }
}

/// Limit of `coef / x^exp` as `x -> infinity`, as an extended real.
fn power_term_limit(coef: f64, exp: f64) -> f64 {
    if coef == 0.0 || exp > 0.0 {
        0.0
    } else if exp == 0.0 {
        coef
    } else if coef > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

pub fn asymptotic_limit(law: &Law) -> Result<Limit> {
    match law {
        Law::Chinchilla(l) => {
            let model = power_term_limit(l.coef_a, l.exp_a);
            let data = power_term_limit(l.coef_b, l.exp_b);
            if model.is_infinite() && data.is_infinite() && model.signum() != data.signum() {
                return Err(Error::PathDependentLimit(
                    "model and data terms diverge with opposite signs".into(),
                ));
            }
            Ok(classify(l.e_irr + model + data))
        }
        Law::Farseer(l) => {
            let t1 = exp_limit(n_power_limit(l.t1_coef, l.t1_exp, l.t1_offset));
            let prefactor = exp_limit(n_power_limit(l.t2_coef, l.t2_exp, l.t2_offset));
            // Data exponent h: None = +inf, Some(0) = vanishes, Some(v>0) = positive constant.
            let exponent = exp_limit(n_power_limit(l.ex_coef, l.ex_exp, l.ex_offset));

            let Some(t1) = t1 else {
                return Ok(Limit::Divergent);
            };
            let t2 = match (prefactor, exponent) {
                // Prefactor finite, D^-h -> 1 when h vanishes.
                (Some(p), Some(0.0)) => p,
                // Prefactor finite, D^-h -> 0 for any positive or unbounded h.
                (Some(_), _) => 0.0,
                (None, Some(0.0)) => return Ok(Limit::Divergent),
                (None, _) => {
                    return Err(Error::PathDependentLimit(
                        "data-term prefactor diverges in N while the D exponent stays positive; \
                         the value depends on the joint (N, D) path"
                            .into(),
                    ))
                }
            };
            Ok(classify(t1 + t2))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{code_chinchilla, code_farseer};

    fn naive_farseer(l: &FarseerLaw, n: f64, d: f64) -> f64 {
        (l.t1_coef * n.powf(l.t1_exp) + l.t1_offset).exp()
            + (l.t2_coef * n.powf(l.t2_exp) + l.t2_offset).exp()
                * d.powf(-(l.ex_coef * n.powf(l.ex_exp) + l.ex_offset).exp())
    }

    #[test]
    fn constant_chinchilla_surface() {
        let law = ChinchillaLaw {
            e_irr: 0.5,
            coef_a: 0.0,
            exp_a: 0.3,
            coef_b: 0.0,
            exp_b: 0.3,
        };
        for (n, d) in [(1.0, 1.0), (1e9, 1e12), (37.0, 5e3)] {
            assert_eq!(law.eval(n, d).unwrap(), 0.5);
        }
    }

    #[test]
    fn degenerate_farseer_is_hand_computable() {
        let law = FarseerLaw {
            t1_coef: 0.0,
            t1_exp: 0.3,
            t1_offset: 0.3f64.ln(),
            t2_coef: 0.0,
            t2_exp: 0.1,
            t2_offset: 0.0,
            ex_coef: 0.0,
            ex_exp: 0.2,
            ex_offset: 0.0,
        };
        let v = law.eval(1e6, 4.0).unwrap();
        assert!((v - 0.55).abs() < 1e-15, "{v}");
    }

    #[test]
    fn rejects_sub_unit_counts() {
        let l = code_chinchilla();
        assert!(l.eval(0.5, 10.0).is_err());
        assert!(l.eval(10.0, f64::NAN).is_err());
        assert!(code_farseer().eval(10.0, 0.0).is_err());
    }

    #[test]
    fn overflow_names_the_term() {
        let l = ChinchillaLaw {
            e_irr: 0.0,
            coef_a: 1e300,
            exp_a: -100.0,
            coef_b: 1.0,
            exp_b: 0.1,
        };
        match l.eval(1e9, 1e9) {
            Err(Error::Eval { term, .. }) => assert!(term.contains("model")),
            other => panic!("{other:?}"),
        }
        let f = FarseerLaw {
            t1_coef: 1.0,
            t1_exp: 1.0,
            ..code_farseer()
        };
        assert!(matches!(f.eval(1e9, 1e9), Err(Error::Eval { term: "model term", .. })));
    }

    #[test]
    fn log_space_matches_naive_form() {
        let law = code_farseer();
        let grid = |lo: f64, hi: f64, k: usize| -> Vec<f64> {
            (0..k)
                .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (k - 1) as f64).exp())
                .collect()
        };
        for n in grid(1e6, 1e13, 25) {
            for d in grid(1e6, 1e15, 25) {
                let naive = naive_farseer(&law, n, d);
                if !naive.is_finite() {
                    continue;
                }
                let fast = law.eval(n, d).unwrap();
                assert!(((fast - naive) / naive).abs() < 1e-12, "n={n} d={d} {fast} {naive}");
            }
        }
    }

    #[test]
    fn reference_limits() {
        assert_eq!(
            asymptotic_limit(&code_chinchilla().into()).unwrap(),
            Limit::Finite(0.2193)
        );
        match asymptotic_limit(&code_farseer().into()).unwrap() {
            Limit::Finite(v) => assert!((v / (-14.0414f64).exp() - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn farseer_limit_cases() {
        let base = code_farseer();
        let growing = FarseerLaw {
            t1_coef: 0.1,
            t1_exp: 0.2,
            ..base
        };
        assert_eq!(asymptotic_limit(&growing.into()).unwrap(), Limit::Divergent);

        // q = 0: total exponent at the limit is s + S.
        let flat = FarseerLaw { t1_exp: 0.0, ..base };
        let Limit::Finite(v) = asymptotic_limit(&flat.into()).unwrap() else {
            panic!()
        };
        let expect = (base.t1_coef + base.t1_offset).exp() + base.t2_offset.exp();
        assert!((v - expect).abs() < 1e-15);

        // Prefactor with b = 0 tends to exp(B + Q).
        let pre_const = FarseerLaw {
            t2_exp: 0.0,
            t2_coef: 1.0,
            t2_offset: -3.0,
            ..base
        };
        let Limit::Finite(v) = asymptotic_limit(&pre_const.into()).unwrap() else {
            panic!()
        };
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);

        // Positive limiting D exponent kills the data term.
        let positive_exponent = FarseerLaw { ex_coef: 0.0, ..base };
        assert_eq!(asymptotic_limit(&positive_exponent.into()).unwrap(), Limit::Zero);

        // Diverging prefactor with a positive exponent needs a joint path.
        let ambiguous = FarseerLaw {
            t2_coef: 1.0,
            t2_exp: 0.1,
            ex_coef: 0.0,
            ..base
        };
        assert!(matches!(
            asymptotic_limit(&ambiguous.into()),
            Err(Error::PathDependentLimit(_))
        ));

        // Diverging prefactor with a vanishing exponent diverges.
        let blowup = FarseerLaw {
            t2_coef: 1.0,
            t2_exp: 0.1,
            ..base
        };
        assert_eq!(asymptotic_limit(&blowup.into()).unwrap(), Limit::Divergent);
    }

    #[test]
    fn chinchilla_limit_cases() {
        let base = code_chinchilla();
        let zero = ChinchillaLaw { e_irr: 0.0, ..base };
        assert_eq!(asymptotic_limit(&zero.into()).unwrap(), Limit::Zero);
        let growing = ChinchillaLaw { exp_a: -0.1, ..base };
        assert_eq!(asymptotic_limit(&growing.into()).unwrap(), Limit::Divergent);
        let opposite = ChinchillaLaw {
            exp_a: -0.1,
            coef_b: -1.0,
            exp_b: -0.1,
            ..base
        };
        assert!(asymptotic_limit(&opposite.into()).is_err());
    }

    #[test]
    fn farseer_limit_consistency_far_out() {
        let law = code_farseer();
        // Letting D exponent vanish: L(n, d) is close to model term + prefactor at large n.
        let (n, d) = (1e14, 1e16);
        let v = law.eval(n, d).unwrap();
        let partial = law.model_term(n) + law.data_prefactor(n);
        assert!(v <= partial && v * 10.0 >= partial, "{v} {partial}");
        // Much further out the surface approaches exp(t2_Q).
        let Limit::Finite(lim) = asymptotic_limit(&law.into()).unwrap() else {
            panic!()
        };
        let far = law.eval(1e30, 1e40).unwrap();
        assert!(far > lim && far < 10.0 * lim, "{far} {lim}");
    }

    #[test]
    fn family_round_trips_through_str() {
        for f in [Family::Chinchilla, Family::Farseer] {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert!("kaplan".parse::<Family>().is_err());
    }
}
