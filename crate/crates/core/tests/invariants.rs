use codescale::fit::relative_error;
use codescale::mixture::crossover_dn_with;
use codescale::reference::{code_chinchilla, code_farseer};
use codescale::search::log_space;
use codescale::{
    asymptotic_limit, chinchilla_optimal, crossover_dn, plan_gpus, plan_sweep, Axis, ChinchillaLaw, Error,
    FlopConvention, GpuLimits, Law, LawHandle, Limit, Provenance, SweepSpec,
};
use proptest::prelude::*;

fn chinchilla() -> impl Strategy<Value = ChinchillaLaw> {
    (0.0..1.0f64, 1.0..1e4f64, 0.05..1.0f64, 1.0..1e4f64, 0.05..1.0f64).prop_map(|(e, a, ea, b, eb)| ChinchillaLaw {
        e_irr: e,
        coef_a: a,
        exp_a: ea,
        coef_b: b,
        exp_b: eb,
    })
}

fn handle(l: ChinchillaLaw) -> LawHandle {
    LawHandle::new(l, Provenance::source("test"))
}

proptest! {
    #[test]
    fn relative_error_is_scale_invariant(p in 0.01..10.0f64, a in 0.01..10.0f64, k in 1e-3..1e3f64) {
        let base = relative_error(p, a).unwrap();
        let scaled = relative_error(k * p, k * a).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn gpu_plans_are_exact(gbz in 1u64..4000, mbz_max in 1u64..32, step in prop::sample::select(vec![1u64, 2, 4, 8, 16, 32])) {
        let lim = GpuLimits::new(mbz_max, step);
        match plan_gpus(gbz, &lim) {
            Ok(p) => {
                prop_assert_eq!(p.gpus * p.mbz * p.accum, gbz);
                prop_assert!(p.mbz <= mbz_max && p.gpus % step == 0);
            }
            Err(Error::Infeasible { below, above, .. }) => {
                for g in below.into_iter().chain(above) {
                    let p = plan_gpus(g, &lim).unwrap();
                    prop_assert_eq!(p.gpus * p.mbz * p.accum, g);
                }
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn closed_form_beats_brute_force(law in chinchilla(), log_c in 19.0..23.0f64) {
        let c = 10f64.powf(log_c);
        let conv = FlopConvention::default();
        let a = chinchilla_optimal(&law, c, &conv).unwrap();
        prop_assert!((6.0 * a.n_opt * a.d_opt / c - 1.0).abs() < 1e-9);
        let scan = log_space(1e7, 1e12, 2000).unwrap().into_iter()
            .map(|n| law.eval(n, c / (6.0 * n)).unwrap())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(scan >= a.predicted_loss * (1.0 - 1e-6));
    }

    #[test]
    fn chinchilla_stays_above_its_limit(law in chinchilla(), ln_n in 0.0..60.0f64, ln_d in 0.0..60.0f64) {
        let v = law.eval(ln_n.exp(), ln_d.exp()).unwrap();
        match asymptotic_limit(&law.into()).unwrap() {
            Limit::Finite(e) => prop_assert!(v > e),
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn crossovers_are_antisymmetric_and_refinement_keeps_roots(
        a in chinchilla(), b in chinchilla(), ln_n in 18.0..23.0f64,
    ) {
        let (a, b) = (handle(a), handle(b));
        let n = ln_n.exp();
        let tol = 1e-9;
        let ab = crossover_dn(&a, &b, n, (0.5, 1e3), tol).unwrap();
        let ba = crossover_dn(&b, &a, n, (0.5, 1e3), tol).unwrap();
        prop_assert_eq!(ab.roots.len(), ba.roots.len());
        for (x, y) in ab.roots.iter().zip(&ba.roots) {
            prop_assert!((x / y - 1.0).abs() < 1e-8);
        }
        for r in &ab.roots {
            let gap = (a.eval(n, r * n).unwrap() - b.eval(n, r * n).unwrap()).abs();
            prop_assert!(gap <= tol.max(1e-9 * a.eval(n, r * n).unwrap()) * 10.0);
        }
        let fine = crossover_dn_with(&a, &b, n, (0.5, 1e3), tol, 4096).unwrap();
        for r in &ab.roots {
            prop_assert!(fine.roots.iter().any(|f| (f / r - 1.0).abs() < 1e-7), "lost {r}");
        }
    }

    #[test]
    fn sweep_is_a_pruned_subset(lo in 0.1..50.0f64, width in 1.5..1e3f64, nc in 1usize..12, dc in 1usize..15) {
        let n_axis = if nc == 1 { Axis::Explicit(vec![1e9]) } else { Axis::log(1e8, 4e9, nc) };
        let d_axis = if dc == 1 { Axis::Explicit(vec![2e10]) } else { Axis::log(1e9, 2e11, dc) };
        let spec = SweepSpec::new(n_axis.clone(), d_axis.clone(), (lo, lo * width));
        let ns: Vec<u64> = n_axis.values().unwrap().iter().map(|v| v.round() as u64).collect();
        let ds: Vec<u64> = d_axis.values().unwrap().iter().map(|v| v.round() as u64).collect();
        match plan_sweep(&spec) {
            Ok(plan) => {
                prop_assert_eq!(&plan, &plan_sweep(&spec).unwrap());
                for p in &plan {
                    prop_assert!(ns.contains(&p.n) && ds.contains(&p.d));
                    prop_assert!(p.dn_ratio() >= lo && p.dn_ratio() <= lo * width);
                }
                prop_assert!(plan.windows(2).all(|w| w[0] < w[1]));
            }
            Err(Error::EmptyPlan { .. }) => {
                for &n in &ns {
                    for &d in &ds {
                        let r = d as f64 / n as f64;
                        prop_assert!(r < lo || r > lo * width);
                    }
                }
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}

#[test]
fn fixture_surfaces_decrease_in_both_counts() {
    let ns = log_space(1e8, 1e11, 20).unwrap();
    let ds = log_space(1e9, 1e13, 20).unwrap();
    for law in [Law::from(code_chinchilla()), Law::from(code_farseer())] {
        for i in 0..20 {
            for j in 0..20 {
                let v = law.eval(ns[i], ds[j]).unwrap();
                if i + 1 < 20 {
                    assert!(law.eval(ns[i + 1], ds[j]).unwrap() < v);
                }
                if j + 1 < 20 {
                    assert!(law.eval(ns[i], ds[j + 1]).unwrap() < v);
                }
            }
        }
    }
}
