//! Loss-surface laws for language-model pretraining: evaluation, fitting, compute-optimal
//! allocation, mixture comparison and experiment planning.
//!
//! All parameter and token counts are raw counts.

pub mod arch;
pub mod compute;
pub mod error;
pub mod fit;
pub mod gpu;
pub mod io;
pub mod law;
pub mod mixture;
pub mod record;
pub mod reference;
pub mod search;
pub mod slice;
pub mod sweep;

pub use arch::{count_params, derive_arch, ArchConfig, LayerFit, CANONICAL_FAMILY, DEFAULT_VOCAB};
pub use compute::{
    chinchilla_optimal, flops, numeric_optimal, optimal, optimal_dn_curve, Allocation, Bracket, FlopConvention, Method,
    ParamBasis,
};
pub use error::{Error, ExitClass, Result};
pub use fit::{fit, score, FitConfig, FitReport, Objective};
pub use gpu::{plan_gpus, GpuLimits, GpuPlan};
pub use law::{asymptotic_limit, ChinchillaLaw, Family, FarseerLaw, Law, LawHandle, Limit, Provenance};
pub use mixture::{crossover_dn, dominance_map, CrossoverScan, DominanceReport, LawSet, Winner};
pub use record::RunRecord;
pub use slice::{eval_slice, SliceAxis, SlicePoint};
pub use sweep::{canonical_sweep, plan_sweep, Axis, DOverride, SweepPoint, SweepSpec};
