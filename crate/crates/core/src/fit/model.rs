//! Fitting parameterizations of the two law families.
//!
//! Chinchilla is optimized over `[ln E, ln A, a, ln B, b]` so the three scale coefficients
//! stay positive. Farseer is optimized with each `coef * N^exp` prefactor re-expressed at the
//! reference size [`N_REF`], i.e. `coef * N_REF^exp`, which decouples the exponent from the
//! prefactor when `N` is of order 1e9.

use rand::Rng;

use crate::law::{ChinchillaLaw, FarseerLaw, Law};

pub const N_REF: f64 = 1e9;

/// One deduplicated observation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample {
    pub ln_n: f64,
    pub ln_d: f64,
    pub loss: f64,
}

pub(crate) trait Parameterization: Sync {
    fn names(&self) -> &'static [&'static str];

    /// Prediction at one sample; fills `grad` with d(prediction)/d(params) when given.
    fn predict(&self, x: &[f64], s: &Sample, grad: Option<&mut [f64]>) -> f64;

    fn to_law(&self, x: &[f64]) -> Law;

    /// Default box, in fitting coordinates.
    fn default_bounds(&self) -> Vec<(f64, f64)>;

    /// Maps a natural-coordinate bound for parameter `i` into fitting coordinates.
    fn bound_to_fit(&self, i: usize, lo: f64, hi: f64) -> (f64, f64);

    fn start(&self, index: usize, rng: &mut impl Rng) -> Vec<f64>;
}

pub(crate) struct ChinchillaParams;

pub(crate) const CHINCHILLA_NAMES: [&str; 5] = ["e_irr", "coef_a", "exp_a", "coef_b", "exp_b"];

impl Parameterization for ChinchillaParams {
    fn names(&self) -> &'static [&'static str] {
        &CHINCHILLA_NAMES
    }

    fn predict(&self, x: &[f64], s: &Sample, grad: Option<&mut [f64]>) -> f64 {
        let e = x[0].exp();
        let model = (x[1] - x[2] * s.ln_n).exp();
        let data = (x[3] - x[4] * s.ln_d).exp();
        if let Some(g) = grad {
            g[0] = e;
            g[1] = model;
            g[2] = -s.ln_n * model;
            g[3] = data;
            g[4] = -s.ln_d * data;
        }
        e + model + data
    }

    fn to_law(&self, x: &[f64]) -> Law {
        Law::Chinchilla(ChinchillaLaw {
            e_irr: x[0].exp(),
            coef_a: x[1].exp(),
            exp_a: x[2],
            coef_b: x[3].exp(),
            exp_b: x[4],
        })
    }

    fn default_bounds(&self) -> Vec<(f64, f64)> {
        vec![
            (1e-6f64.ln(), 10f64.ln()),
            (1e-3f64.ln(), 1e9f64.ln()),
            (0.01, 2.0),
            (1e-3f64.ln(), 1e9f64.ln()),
            (0.01, 2.0),
        ]
    }

    fn bound_to_fit(&self, i: usize, lo: f64, hi: f64) -> (f64, f64) {
        match i {
            0 | 1 | 3 => (lo.max(f64::MIN_POSITIVE).ln(), hi.ln()),
            _ => (lo, hi),
        }
    }

    fn start(&self, index: usize, rng: &mut impl Rng) -> Vec<f64> {
        // Log-uniform box: E in [1e-3, 1], A, B in [1, 1e4], a, b in [0.05, 1].
        let boxes = [(1e-3f64, 1.0f64), (1.0, 1e4), (0.05, 1.0), (1.0, 1e4), (0.05, 1.0)];
        let draw: Vec<f64> = boxes
            .iter()
            .map(|&(lo, hi)| {
                let t = if index == 0 { 0.5 } else { rng.random::<f64>() };
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            })
            .collect();
        vec![draw[0].ln(), draw[1].ln(), draw[2], draw[3].ln(), draw[4]]
    }
}

pub(crate) struct FarseerParams;

pub(crate) const FARSEER_NAMES: [&str; 9] = ["t1_s", "t1_q", "t1_S", "t2_B", "t2_b", "t2_Q", "ex_A", "ex_a", "ex_E"];

impl Parameterization for FarseerParams {
    fn names(&self) -> &'static [&'static str] {
        &FARSEER_NAMES
    }

    fn predict(&self, x: &[f64], s: &Sample, grad: Option<&mut [f64]>) -> f64 {
        let u = s.ln_n - N_REF.ln();
        let eq = (x[1] * u).exp();
        let t1 = (x[0] * eq + x[2]).exp();
        let eb = (x[4] * u).exp();
        let ea = (x[7] * u).exp();
        let h = (x[6] * ea + x[8]).exp();
        let t2 = (x[3] * eb + x[5] - h * s.ln_d).exp();
        if let Some(g) = grad {
            let dh = -t2 * s.ln_d * h;
            g[0] = t1 * eq;
            g[1] = t1 * x[0] * u * eq;
            g[2] = t1;
            g[3] = t2 * eb;
            g[4] = t2 * x[3] * u * eb;
            g[5] = t2;
            g[6] = dh * ea;
            g[7] = dh * x[6] * u * ea;
            g[8] = dh;
        }
        t1 + t2
    }

    fn to_law(&self, x: &[f64]) -> Law {
        let ln_ref = N_REF.ln();
        Law::Farseer(FarseerLaw {
            t1_coef: x[0] * (-x[1] * ln_ref).exp(),
            t1_exp: x[1],
            t1_offset: x[2],
            t2_coef: x[3] * (-x[4] * ln_ref).exp(),
            t2_exp: x[4],
            t2_offset: x[5],
            ex_coef: x[6] * (-x[7] * ln_ref).exp(),
            ex_exp: x[7],
            ex_offset: x[8],
        })
    }

    fn default_bounds(&self) -> Vec<(f64, f64)> {
        vec![
            (-100.0, 100.0),
            (-2.0, 2.0),
            (-50.0, 50.0),
            (-500.0, 500.0),
            (-2.0, 2.0),
            (-100.0, 100.0),
            (-50.0, 50.0),
            (-2.0, 2.0),
            (-20.0, 20.0),
        ]
    }

    fn bound_to_fit(&self, _i: usize, lo: f64, hi: f64) -> (f64, f64) {
        (lo, hi)
    }

    fn start(&self, index: usize, rng: &mut impl Rng) -> Vec<f64> {
        // Sign pattern: shrinking model term, positive data prefactor that decays with N,
        // data exponent shrinking with N.
        const CENTER: [f64; 9] = [-0.5, 0.25, -1.0, 10.0, -0.1, -8.0, -1.0, 0.2, 0.0];
        const SPREAD: [f64; 9] = [0.3, 0.1, 0.5, 5.0, 0.05, 4.0, 0.5, 0.1, 0.3];
        let mut x = CENTER.to_vec();
        if index > 0 {
            for (xi, s) in x.iter_mut().zip(SPREAD) {
                *xi += s * (2.0 * rng.random::<f64>() - 1.0) * 1.5;
            }
        }
        x[0] = -x[0].abs();
        x[3] = x[3].abs();
        x[4] = -x[4].abs();
        x[6] = -x[6].abs();
        x
    }
}
