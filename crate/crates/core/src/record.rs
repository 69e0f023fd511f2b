use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One observed training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Non-embedding parameter count.
    pub n_params: u64,
    /// Training tokens.
    pub d_tokens: u64,
    pub loss: f64,
    pub mixture: Option<String>,
    /// Free-form run metadata (`gbz`, `gpus`, `mbz`).
    pub meta: BTreeMap<String, String>,
}

impl RunRecord {
    pub fn new(n_params: u64, d_tokens: u64, loss: f64) -> Result<Self> {
        let record = RunRecord {
            n_params,
            d_tokens,
            loss,
            mixture: None,
            meta: BTreeMap::new(),
        };
        record.validate()?;
        Ok(record)
    }

    pub fn with_mixture(mut self, label: impl Into<String>) -> Result<Self> {
        self.mixture = Some(label.into());
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_params < 1 {
            return Err(invalid("n_params must be >= 1"));
        }
        if self.d_tokens < 1 {
            return Err(invalid("d_tokens must be >= 1"));
        }
        if !(self.loss.is_finite() && self.loss > 0.0) {
            return Err(invalid(format!("loss must be positive, got {}", self.loss)));
        }
        if matches!(&self.mixture, Some(m) if m.is_empty()) {
            return Err(invalid("mixture label must be non-empty"));
        }
        Ok(())
    }

    pub fn dn_ratio(&self) -> f64 {
        self.d_tokens as f64 / self.n_params as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        assert!(RunRecord::new(0, 10, 0.3).is_err());
        assert!(RunRecord::new(10, 0, 0.3).is_err());
        assert!(RunRecord::new(10, 10, 0.0).is_err());
        assert!(RunRecord::new(10, 10, f64::NAN).is_err());
        assert!(RunRecord::new(10, 10, 0.3).unwrap().with_mixture("").is_err());
        let r = RunRecord::new(10, 200, 0.3).unwrap().with_mixture("baseline").unwrap();
        assert_eq!(r.dn_ratio(), 20.0);
    }
}
