//! Decoder-only transformer shapes (SwiGLU MLP, rotary positions, RMSNorm, untied
//! embeddings) and their parameter counts.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Vocabulary implied by the canonical family's embedding counts.
pub const DEFAULT_VOCAB: u64 = 65_797;

/// Head dimension shared by every canonical shape.
pub const HEAD_DIM: u64 = 64;

pub const TARGET_MIN: f64 = 1e8;
pub const TARGET_MAX: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ArchConfig {
    pub d_model: u64,
    pub d_ff: u64,
    pub n_head: u64,
    pub n_layer: u64,
    /// Non-embedding parameters.
    pub n_params: u64,
    /// All parameters including input and output embeddings.
    pub n_with_emb: u64,
    pub vocab: u64,
}

impl ArchConfig {
    pub fn new(d_model: u64, d_ff: u64, n_head: u64, n_layer: u64, vocab: u64) -> Result<Self> {
        if d_model == 0 || d_ff == 0 || n_head == 0 || n_layer == 0 || vocab == 0 {
            return Err(invalid("architecture dimensions must all be positive"));
        }
        if !d_model.is_multiple_of(n_head) {
            return Err(invalid(format!(
                "d_model {d_model} is not divisible by n_head {n_head}"
            )));
        }
        let (n_params, n_with_emb) = count(d_model, d_ff, n_layer, vocab);
        Ok(ArchConfig {
            d_model,
            d_ff,
            n_head,
            n_layer,
            n_params,
            n_with_emb,
            vocab,
        })
    }

    pub fn with_vocab(&self, vocab: u64) -> Result<Self> {
        ArchConfig::new(self.d_model, self.d_ff, self.n_head, self.n_layer, vocab)
    }

    pub fn head_dim(&self) -> u64 {
        self.d_model / self.n_head
    }
}

fn count(d_model: u64, d_ff: u64, n_layer: u64, vocab: u64) -> (u64, u64) {
    // Attention q/k/v/o: 4 d^2. SwiGLU gate/up/down: 3 d d_ff.
    // RMSNorm gains: two per layer plus the final norm. No biases.
    let per_layer = 4 * d_model * d_model + 3 * d_model * d_ff;
    let norms = (2 * n_layer + 1) * d_model;
    let n_params = n_layer * per_layer + norms;
    (n_params, n_params + 2 * vocab * d_model)
}

/// `(n_params, n_with_emb)` for a shape.
pub fn count_params(arch: &ArchConfig) -> (u64, u64) {
    count(arch.d_model, arch.d_ff, arch.n_layer, arch.vocab)
}

/// A row of the canonical size family together with its published parameter counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalShape {
    pub d_model: u64,
    pub d_ff: u64,
    pub n_head: u64,
    pub n_layer: u64,
    pub listed_n: f64,
    pub listed_n_with_emb: f64,
    /// Token range the shape was trained over.
    pub d_range: (f64, f64),
}

pub const CANONICAL_FAMILY: [CanonicalShape; 9] = [
    CanonicalShape {
        d_model: 1024,
        d_ff: 2728,
        n_head: 16,
        n_layer: 16,
        listed_n: 201e6,
        listed_n_with_emb: 335e6,
        d_range: (2e9, 128e9),
    },
    CanonicalShape {
        d_model: 1152,
        d_ff: 3032,
        n_head: 18,
        n_layer: 18,
        listed_n: 284e6,
        listed_n_with_emb: 435e6,
        d_range: (2e9, 128e9),
    },
    CanonicalShape {
        d_model: 1280,
        d_ff: 3472,
        n_head: 20,
        n_layer: 20,
        listed_n: 398e6,
        listed_n_with_emb: 566e6,
        d_range: (2e9, 128e9),
    },
    CanonicalShape {
        d_model: 1472,
        d_ff: 3888,
        n_head: 23,
        n_layer: 22,
        listed_n: 568e6,
        listed_n_with_emb: 761e6,
        d_range: (2e9, 128e9),
    },
    CanonicalShape {
        d_model: 1600,
        d_ff: 4264,
        n_head: 25,
        n_layer: 26,
        listed_n: 798e6,
        listed_n_with_emb: 1.01e9,
        d_range: (2e9, 91e9),
    },
    CanonicalShape {
        d_model: 1792,
        d_ff: 4832,
        n_head: 28,
        n_layer: 29,
        listed_n: 1.13e9,
        listed_n_with_emb: 1.36e9,
        d_range: (2e9, 128e9),
    },
    CanonicalShape {
        d_model: 2048,
        d_ff: 5448,
        n_head: 32,
        n_layer: 32,
        listed_n: 1.61e9,
        listed_n_with_emb: 1.88e9,
        d_range: (2e9, 128e9),
    },
    CanonicalShape {
        d_model: 2304,
        d_ff: 6064,
        n_head: 36,
        n_layer: 36,
        listed_n: 2.27e9,
        listed_n_with_emb: 2.58e9,
        d_range: (2e9, 128e9),
    },
    CanonicalShape {
        d_model: 2560,
        d_ff: 6952,
        n_head: 40,
        n_layer: 40,
        listed_n: 3.18e9,
        listed_n_with_emb: 3.52e9,
        d_range: (4e9, 128e9),
    },
];

impl CanonicalShape {
    pub fn arch(&self, vocab: u64) -> ArchConfig {
        ArchConfig::new(self.d_model, self.d_ff, self.n_head, self.n_layer, vocab).expect("canonical shapes are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LayerFit {
    /// Use the nearest canonical shape unchanged.
    #[default]
    Nearest,
    /// Keep the nearest shape's widths and pick the layer count closest to the target.
    Rescale,
}

/// Picks the canonical shape nearest to `target_n` in log distance.
pub fn derive_arch(target_n: f64, fit: LayerFit, vocab: u64) -> Result<ArchConfig> {
    if !(target_n.is_finite() && (TARGET_MIN..=TARGET_MAX).contains(&target_n)) {
        return Err(Error::OutOfRange {
            target: target_n,
            min: TARGET_MIN,
            max: TARGET_MAX,
        });
    }
    let family: Vec<ArchConfig> = CANONICAL_FAMILY.iter().map(|s| s.arch(vocab)).collect();
    let nearest = family
        .iter()
        .min_by(|a, b| {
            let da = ((a.n_params as f64).ln() - target_n.ln()).abs();
            let db = ((b.n_params as f64).ln() - target_n.ln()).abs();
            da.total_cmp(&db)
        })
        .copied()
        .expect("family is non-empty");
    match fit {
        LayerFit::Nearest => Ok(nearest),
        LayerFit::Rescale => {
            let per_layer = 4 * nearest.d_model * nearest.d_model + 3 * nearest.d_model * nearest.d_ff;
            let layers = (target_n / per_layer as f64).round().max(1.0) as u64;
            ArchConfig::new(nearest.d_model, nearest.d_ff, nearest.n_head, layers, vocab)
        }
    }
}

/// Mean of `n_params / d_model^3` across the canonical family.
fn cube_coefficient() -> f64 {
    let sum: f64 = CANONICAL_FAMILY
        .iter()
        .map(|s| {
            let n = s.arch(DEFAULT_VOCAB).n_params as f64;
            n / (s.d_model as f64).powi(3)
        })
        .sum();
    sum / CANONICAL_FAMILY.len() as f64
}

/// Smooth estimate of `d_model` for a non-embedding size, following the family's
/// proportions (layers ~ d_model / 64, d_ff ~ 2.67 d_model, so `N ~ k d_model^3`).
pub fn estimated_d_model(n: f64) -> f64 {
    (n / cube_coefficient()).cbrt()
}

/// Smooth estimate of the embedding-inclusive size for a non-embedding size.
pub fn estimated_n_with_emb(n: f64, vocab: u64) -> f64 {
    n + 2.0 * vocab as f64 * estimated_d_model(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_rows_hold_shape_invariants() {
        for s in CANONICAL_FAMILY {
            let a = s.arch(DEFAULT_VOCAB);
            assert_eq!(a.n_head, a.d_model / HEAD_DIM);
            let ratio = a.d_ff as f64 / a.d_model as f64;
            assert!((2.5..=2.8).contains(&ratio), "{ratio}");
            assert!(a.n_with_emb > a.n_params);
        }
    }

    #[test]
    fn model7_count_matches_hand_formula() {
        let a = CANONICAL_FAMILY[6].arch(DEFAULT_VOCAB);
        let bulk = 32 * (4 * 2048 * 2048 + 3 * 2048 * 5448);
        assert_eq!(bulk, 1_607_991_296);
        assert_eq!(a.n_params, bulk + 65 * 2048);
        assert!((a.n_params as f64 / 1.61e9 - 1.0).abs() < 0.01);
    }

    #[test]
    fn derive_published_targets() {
        let a = derive_arch(1.61e9, LayerFit::Nearest, DEFAULT_VOCAB).unwrap();
        assert_eq!((a.d_model, a.d_ff, a.n_head, a.n_layer), (2048, 5448, 32, 32));
        let a = derive_arch(2.27e9, LayerFit::Nearest, DEFAULT_VOCAB).unwrap();
        assert_eq!((a.d_model, a.d_ff, a.n_head, a.n_layer), (2304, 6064, 36, 36));
        let a = derive_arch(2.0e8, LayerFit::Nearest, DEFAULT_VOCAB).unwrap();
        assert_eq!((a.d_model, a.d_ff, a.n_head, a.n_layer), (1024, 2728, 16, 16));
        for s in CANONICAL_FAMILY {
            let a = derive_arch(s.listed_n, LayerFit::Rescale, DEFAULT_VOCAB).unwrap();
            assert_eq!(a.n_layer, s.n_layer);
        }
    }

    #[test]
    fn rescale_moves_layers_only() {
        let a = derive_arch(2.6e9, LayerFit::Rescale, DEFAULT_VOCAB).unwrap();
        assert_eq!(a.d_model, 2304);
        assert!(a.n_layer > 36);
        assert!((a.n_params as f64 / 2.6e9 - 1.0).abs() < 0.03);
    }

    #[test]
    fn out_of_range_targets() {
        assert!(matches!(
            derive_arch(5e7, LayerFit::Nearest, DEFAULT_VOCAB),
            Err(Error::OutOfRange { .. })
        ));
        assert!(derive_arch(2e10, LayerFit::Nearest, DEFAULT_VOCAB).is_err());
        assert!(derive_arch(f64::NAN, LayerFit::Nearest, DEFAULT_VOCAB).is_err());
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(ArchConfig::new(1024, 2728, 16, 0, DEFAULT_VOCAB).is_err());
        assert!(ArchConfig::new(1000, 2728, 16, 4, DEFAULT_VOCAB).is_err());
        assert!(ArchConfig::new(1024, 2728, 16, 4, 0).is_err());
    }

    #[test]
    fn smooth_width_estimate_tracks_family() {
        for s in CANONICAL_FAMILY {
            let est = estimated_d_model(s.listed_n);
            assert!((est / s.d_model as f64 - 1.0).abs() < 0.05, "{} vs {est}", s.d_model);
        }
    }
}
