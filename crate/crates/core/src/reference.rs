//! Published coefficient sets and validation rows for code pretraining.
//!
//! The coefficients are printed to four or five significant digits, so predictions made
//! from them differ from the published predicted losses by up to ~1.4e-3.

use crate::law::{ChinchillaLaw, FarseerLaw, LawHandle, Provenance};

pub const PUBLISHED_SOURCE: &str = "published coefficients (rounded)";

/// Chinchilla fit on 117 pure-code runs.
pub fn code_chinchilla() -> ChinchillaLaw {
    ChinchillaLaw {
        e_irr: 0.2193,
        coef_a: 534.374,
        exp_a: 0.4853,
        coef_b: 76.0743,
        exp_b: 0.2983,
    }
}

/// Farseer fit on 117 pure-code runs.
pub fn code_farseer() -> FarseerLaw {
    FarseerLaw {
        t1_coef: -0.0047,
        t1_exp: 0.239,
        t1_offset: -0.8188,
        t2_coef: 62.8936,
        t2_exp: -0.0614,
        t2_offset: -14.0414,
        ex_coef: -0.0209,
        ex_exp: 0.1943,
        ex_offset: -0.1826,
    }
}

pub fn code_chinchilla_handle() -> LawHandle {
    LawHandle::new(code_chinchilla(), Provenance::source(PUBLISHED_SOURCE))
}

pub fn code_farseer_handle() -> LawHandle {
    LawHandle::new(code_farseer(), Provenance::source(PUBLISHED_SOURCE))
}

/// A large-budget validation run with both published predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationRow {
    pub dn_label: u32,
    pub n_params: f64,
    pub d_tokens: f64,
    pub gbz: u64,
    pub gpus: u64,
    pub mbz: u64,
    pub predicted_farseer: f64,
    pub predicted_chinchilla: f64,
    pub loss: f64,
    pub re_farseer_permille: f64,
    pub re_chinchilla_permille: f64,
}

pub const VALIDATION_ROWS: [ValidationRow; 3] = [
    ValidationRow {
        dn_label: 20,
        n_params: 6.37e9,
        d_tokens: 127e9,
        gbz: 640,
        gpus: 160,
        mbz: 2,
        predicted_farseer: 0.259271,
        predicted_chinchilla: 0.265707,
        loss: 0.256833,
        re_farseer_permille: 9.49,
        re_chinchilla_permille: 34.55,
    },
    ValidationRow {
        dn_label: 150,
        n_params: 2.27e9,
        d_tokens: 341e9,
        gbz: 1080,
        gpus: 120,
        mbz: 9,
        predicted_farseer: 0.253488,
        predicted_chinchilla: 0.262330,
        loss: 0.253786,
        re_farseer_permille: 1.17,
        re_chinchilla_permille: 33.67,
    },
    ValidationRow {
        dn_label: 424,
        n_params: 1.34e9,
        d_tokens: 567e9,
        gbz: 1456,
        gpus: 112,
        mbz: 13,
        predicted_farseer: 0.255846,
        predicted_chinchilla: 0.262939,
        loss: 0.258546,
        re_farseer_permille: 10.44,
        re_chinchilla_permille: 16.99,
    },
];

/// Compute budget of the validation runs, in FLOPs.
pub const VALIDATION_COMPUTE: f64 = 5.36e21;

/// Irreducible loss quoted for the Farseer fit, `exp(-14.0414)`.
pub const FARSEER_LIMIT_QUOTED: f64 = 8.00e-7;
