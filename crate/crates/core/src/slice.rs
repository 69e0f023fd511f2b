use serde::Serialize;

use crate::error::Result;
use crate::law::Law;
use crate::search::check_increasing;

/// Which coordinate is held fixed while the other sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceAxis {
    /// Fixed model size; the sweep runs over D/N ratios.
    FixedN(f64),
    /// Fixed token count; the sweep runs over model sizes.
    FixedD(f64),
    /// Fixed D/N ratio; the sweep runs over model sizes.
    FixedDn(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlicePoint {
    /// The swept coordinate.
    pub x: f64,
    pub n: f64,
    pub d: f64,
    pub loss: f64,
}

/// Restricts a surface to one dimension. Token counts derived from a ratio are rounded to
/// the nearest integer.
pub fn eval_slice(law: &Law, axis: SliceAxis, sweep: &[f64]) -> Result<Vec<SlicePoint>> {
    check_increasing(sweep, 2, "slice grid")?;
    sweep
        .iter()
        .map(|&x| {
            let (n, d) = match axis {
                SliceAxis::FixedN(n) => (n, (x * n).round()),
                SliceAxis::FixedD(d) => (x, d),
                SliceAxis::FixedDn(r) => (x, (r * x).round()),
            };
            Ok(SlicePoint {
                x,
                n,
                d,
                loss: law.eval(n, d)?,
            })
        })
        .collect()
}
