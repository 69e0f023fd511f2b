//! Inputs shared by the benchmarks.

use codescale::{canonical_sweep, plan_sweep, Law, RunRecord};

/// Noiseless records of `law` on the canonical 117-point campaign.
pub fn campaign(law: &Law) -> Vec<RunRecord> {
    plan_sweep(&canonical_sweep())
        .expect("canonical sweep is valid")
        .into_iter()
        .map(|p| {
            let loss = law.eval(p.n as f64, p.d as f64).expect("finite on the campaign grid");
            RunRecord::new(p.n, p.d, loss).expect("valid record")
        })
        .collect()
}
