//! Splitting a global batch across devices without changing its size.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GpuPlan {
    /// Sequences per optimizer step.
    pub gbz: u64,
    /// Sequences per device per micro step.
    pub mbz: u64,
    pub gpus: u64,
    /// Gradient-accumulation steps.
    pub accum: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GpuLimits {
    pub mbz_max: u64,
    /// Node granularity; the device count must be a multiple of it.
    pub gpu_step: u64,
    pub max_gpus: Option<u64>,
}

impl GpuLimits {
    pub fn new(mbz_max: u64, gpu_step: u64) -> Self {
        GpuLimits {
            mbz_max,
            gpu_step,
            max_gpus: None,
        }
    }
}

fn search(gbz: u64, lim: &GpuLimits) -> Option<GpuPlan> {
    for accum in (1..=gbz).filter(|a| gbz.is_multiple_of(*a)) {
        let per_step = gbz / accum;
        for mbz in (1..=lim.mbz_max.min(per_step)).rev() {
            if !per_step.is_multiple_of(mbz) {
                continue;
            }
            let gpus = per_step / mbz;
            if gpus.is_multiple_of(lim.gpu_step) && lim.max_gpus.is_none_or(|m| gpus <= m) {
                return Some(GpuPlan { gbz, mbz, gpus, accum });
            }
        }
    }
    None
}

/// Chooses `(gpus, mbz, accum)` with `gpus * mbz * accum == gbz`, preferring the fewest
/// accumulation steps, then the largest micro batch (which also gives the fewest devices).
pub fn plan_gpus(gbz: u64, limits: &GpuLimits) -> Result<GpuPlan> {
    if gbz == 0 || limits.mbz_max == 0 || limits.gpu_step == 0 {
        return Err(invalid("gbz, mbz_max and gpu_step must be >= 1"));
    }
    if limits.max_gpus == Some(0) {
        return Err(invalid("max_gpus must be >= 1"));
    }
    if let Some(plan) = search(gbz, limits) {
        return Ok(plan);
    }
    let below = (1..gbz).rev().find(|&g| search(g, limits).is_some());
    let above = (gbz + 1..=gbz.saturating_mul(2)).find(|&g| search(g, limits).is_some());
    Err(Error::Infeasible { gbz, below, above })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rows_without_cap() {
        let p = plan_gpus(1080, &GpuLimits::new(9, 8)).unwrap();
        assert_eq!((p.gpus, p.mbz, p.accum), (120, 9, 1));
        let p = plan_gpus(1456, &GpuLimits::new(13, 8)).unwrap();
        assert_eq!((p.gpus, p.mbz, p.accum), (112, 13, 1));
    }

    #[test]
    fn cap_forces_accumulation() {
        let p = plan_gpus(640, &GpuLimits::new(2, 32)).unwrap();
        assert_eq!((p.gpus, p.mbz, p.accum), (320, 2, 1));
        let capped = GpuLimits {
            max_gpus: Some(160),
            ..GpuLimits::new(2, 32)
        };
        let p = plan_gpus(640, &capped).unwrap();
        assert_eq!((p.gpus, p.mbz, p.accum), (160, 2, 2));
    }

    #[test]
    fn infeasible_suggests_neighbours() {
        // 1001 = 7 * 11 * 13 has no multiple-of-8 device count.
        match plan_gpus(1001, &GpuLimits::new(16, 8)) {
            Err(Error::Infeasible { below, above, .. }) => {
                assert_eq!(below, Some(1000));
                assert_eq!(above, Some(1008));
            }
            other => panic!("{other:?}"),
        }
        assert!(plan_gpus(0, &GpuLimits::new(1, 8)).is_err());
    }
}
