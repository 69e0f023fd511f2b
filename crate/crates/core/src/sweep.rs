//! Log-uniform `(N, D)` experiment grids.

use serde::Serialize;

use crate::arch::CANONICAL_FAMILY;
use crate::error::{invalid, Error, Result};
use crate::search::log_space;

/// Token points per model size in the canonical campaign.
pub const CANONICAL_D_COUNT: usize = 13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Axis {
    Explicit(Vec<f64>),
    LogSpaced { min: f64, max: f64, count: usize },
}

impl Axis {
    pub fn log(min: f64, max: f64, count: usize) -> Self {
        Axis::LogSpaced { min, max, count }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Axis::Explicit(v) => {
                if v.is_empty() {
                    return Err(invalid("explicit axis is empty"));
                }
                if v.iter().any(|x| !(x.is_finite() && *x >= 1.0)) {
                    return Err(invalid("axis values must be counts >= 1"));
                }
                Ok(v.clone())
            }
            Axis::LogSpaced { min, max, count } => {
                if !(*min > 0.0 && (min < max || (*count == 1 && min == max))) {
                    return Err(invalid(format!(
                        "axis bounds must satisfy 0 < min < max, got [{min}, {max}]"
                    )));
                }
                log_space(*min, *max, *count)
            }
        }
    }
}

/// Replaces the token axis for one model size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DOverride {
    pub n: f64,
    pub d: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub n_values: Axis,
    pub d_values: Axis,
    /// Inclusive `(min, max)` D/N ratio; points outside are pruned.
    pub dn_bounds: (f64, f64),
    pub d_overrides: Vec<DOverride>,
    /// When set, the plan must contain exactly this many points.
    pub target_total: Option<usize>,
}

impl SweepSpec {
    pub fn new(n_values: Axis, d_values: Axis, dn_bounds: (f64, f64)) -> Self {
        SweepSpec {
            n_values,
            d_values,
            dn_bounds,
            d_overrides: Vec::new(),
            target_total: None,
        }
    }
}

/// The nine canonical sizes, 13 log-spaced token counts each over that size's own range,
/// 117 points in total.
pub fn canonical_sweep() -> SweepSpec {
    let common = (2e9, 128e9);
    let mut spec = SweepSpec::new(
        Axis::Explicit(CANONICAL_FAMILY.iter().map(|s| s.listed_n).collect()),
        Axis::log(common.0, common.1, CANONICAL_D_COUNT),
        (0.5, 650.0),
    );
    spec.d_overrides = CANONICAL_FAMILY
        .iter()
        .filter(|s| s.d_range != common)
        .map(|s| DOverride {
            n: s.listed_n,
            d: Axis::log(s.d_range.0, s.d_range.1, CANONICAL_D_COUNT),
        })
        .collect();
    spec.target_total = Some(CANONICAL_FAMILY.len() * CANONICAL_D_COUNT);
    spec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SweepPoint {
    pub n: u64,
    pub d: u64,
}

impl SweepPoint {
    pub fn dn_ratio(&self) -> f64 {
        self.d as f64 / self.n as f64
    }
}

/// Cartesian product of the axes, pruned to `dn_bounds`, ordered by `n` then `d`.
/// Counts are rounded to integers; duplicates after rounding are dropped.
pub fn plan_sweep(spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    let (lo, hi) = spec.dn_bounds;
    if !(lo > 0.0 && lo < hi) {
        return Err(invalid(format!(
            "D/N bounds must satisfy 0 < min < max, got ({lo}, {hi})"
        )));
    }
    let ns = spec.n_values.values()?;
    let default_d = spec.d_values.values()?;
    for o in &spec.d_overrides {
        if !ns.iter().any(|n| n.round() == o.n.round()) {
            return Err(invalid(format!("D override for n={} matches no model size", o.n)));
        }
    }

    let mut plan = Vec::new();
    for &n in &ns {
        let ds = match spec.d_overrides.iter().find(|o| o.n.round() == n.round()) {
            Some(o) => o.d.values()?,
            None => default_d.clone(),
        };
        let n = n.round() as u64;
        for d in ds {
            let p = SweepPoint { n, d: d.round() as u64 };
            let r = p.dn_ratio();
            if r >= lo && r <= hi {
                plan.push(p);
            }
        }
    }
    plan.sort_unstable();
    plan.dedup();
    if plan.is_empty() {
        return Err(Error::EmptyPlan { min: lo, max: hi });
    }
    if let Some(t) = spec.target_total {
        if plan.len() != t {
            return Err(invalid(format!("plan has {} points, target is {t}", plan.len())));
        }
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_plan() {
        let spec = SweepSpec::new(Axis::Explicit(vec![1e9]), Axis::Explicit(vec![2e10]), (1.0, 100.0));
        assert_eq!(
            plan_sweep(&spec).unwrap(),
            vec![SweepPoint {
                n: 1_000_000_000,
                d: 20_000_000_000
            }]
        );
    }

    #[test]
    fn canonical_campaign_has_117_points() {
        let plan = plan_sweep(&canonical_sweep()).unwrap();
        assert_eq!(plan.len(), 117);
        for s in CANONICAL_FAMILY {
            let ds: Vec<u64> = plan.iter().filter(|p| p.n as f64 == s.listed_n).map(|p| p.d).collect();
            assert_eq!(ds.len(), 13);
            assert_eq!(ds[0] as f64, s.d_range.0);
            assert_eq!(ds[12] as f64, s.d_range.1);
        }
    }

    #[test]
    fn pruning_everything_is_an_error() {
        let spec = SweepSpec::new(Axis::log(2e8, 3.8e9, 9), Axis::log(2e9, 128e9, 13), (1e6, 2e6));
        assert!(matches!(plan_sweep(&spec), Err(Error::EmptyPlan { .. })));
    }

    #[test]
    fn pruned_plan_is_ordered_subset() {
        let spec = SweepSpec::new(Axis::log(2e8, 3.8e9, 9), Axis::log(2e9, 128e9, 13), (2.0, 200.0));
        let plan = plan_sweep(&spec).unwrap();
        assert!(plan.len() < 117);
        assert!(plan.windows(2).all(|w| w[0] < w[1]));
        assert!(plan.iter().all(|p| (2.0..=200.0).contains(&p.dn_ratio())));
    }

    #[test]
    fn target_total_is_checked() {
        let mut spec = SweepSpec::new(Axis::log(1e8, 1e9, 3), Axis::log(1e9, 1e10, 3), (0.1, 1000.0));
        spec.target_total = Some(9);
        assert_eq!(plan_sweep(&spec).unwrap().len(), 9);
        spec.target_total = Some(10);
        assert!(plan_sweep(&spec).is_err());
    }

    #[test]
    fn bad_specs() {
        assert!(plan_sweep(&SweepSpec::new(
            Axis::log(1e9, 1e8, 3),
            Axis::log(1e9, 1e10, 3),
            (0.1, 10.0)
        ))
        .is_err());
        assert!(plan_sweep(&SweepSpec::new(
            Axis::log(1e8, 1e9, 3),
            Axis::log(1e9, 1e10, 3),
            (10.0, 1.0)
        ))
        .is_err());
        assert!(plan_sweep(&SweepSpec::new(
            Axis::Explicit(vec![]),
            Axis::log(1e9, 1e10, 3),
            (0.1, 10.0)
        ))
        .is_err());
        let mut spec = SweepSpec::new(Axis::log(1e8, 1e9, 3), Axis::log(1e9, 1e10, 3), (0.1, 1000.0));
        spec.d_overrides.push(DOverride {
            n: 5e8,
            d: Axis::log(1e9, 2e9, 2),
        });
        assert!(plan_sweep(&spec).is_err());
    }
}
