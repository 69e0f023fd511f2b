//! Box-projected Levenberg-Marquardt on a robust objective.
//!
//! Each iteration reweights residuals (iteratively reweighted least squares) so that the
//! Gauss-Newton model matches the robust loss, then takes a damped step clamped to the box.
//! Steps are accepted only if the true objective strictly decreases, so the objective is
//! non-increasing over iterations.

use nalgebra::{DMatrix, DVector};

use super::model::{Parameterization, Sample};
use super::Objective;

const STEP_TOL: f64 = 1e-10;
const STALL_TOL: f64 = 1e-15;
const LAMBDA_MAX: f64 = 1e16;

pub(crate) struct Problem<'a, P> {
    pub param: &'a P,
    pub samples: &'a [Sample],
    pub objective: Objective,
    pub delta: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl<P: Parameterization> Problem<'_, P> {
    fn residual(&self, pred: f64, s: &Sample) -> f64 {
        match self.objective {
            Objective::HuberLog => pred.ln() - s.loss.ln(),
            Objective::MeanRelativeError => pred / s.loss - 1.0,
        }
    }

    fn rho(&self, r: f64) -> f64 {
        match self.objective {
            Objective::HuberLog => {
                let a = r.abs();
                if a <= self.delta {
                    0.5 * r * r
                } else {
                    self.delta * (a - 0.5 * self.delta)
                }
            }
            Objective::MeanRelativeError => r.abs(),
        }
    }

    /// IRLS weight `psi(r) / r`.
    fn weight(&self, r: f64) -> f64 {
        match self.objective {
            Objective::HuberLog => {
                let a = r.abs();
                if a <= self.delta {
                    1.0
                } else {
                    self.delta / a
                }
            }
            Objective::MeanRelativeError => 1.0 / r.abs().max(1e-12),
        }
    }

    /// Mean robust loss; infinite when any prediction is non-finite or non-positive.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for s in self.samples {
            let pred = self.param.predict(x, s, None);
            if !(pred.is_finite() && pred > 0.0) {
                return f64::INFINITY;
            }
            total += self.rho(self.residual(pred, s));
        }
        let v = total / self.samples.len() as f64;
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    /// Weighted normal-equation pieces `(J^T W J, J^T W r)`.
    fn normal_equations(&self, x: &[f64]) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let dim = x.len();
        let mut jtj = DMatrix::<f64>::zeros(dim, dim);
        let mut jtr = DVector::<f64>::zeros(dim);
        let mut g = vec![0.0; dim];
        for s in self.samples {
            let pred = self.param.predict(x, s, Some(&mut g));
            if !(pred.is_finite() && pred > 0.0) {
                return None;
            }
            let r = self.residual(pred, s);
            let w = self.weight(r);
            let dr = match self.objective {
                Objective::HuberLog => 1.0 / pred,
                Objective::MeanRelativeError => 1.0 / s.loss,
            };
            for i in 0..dim {
                let ji = g[i] * dr;
                if !ji.is_finite() {
                    return None;
                }
                jtr[i] += w * ji * r;
                for k in 0..=i {
                    jtj[(i, k)] += w * ji * g[k] * dr;
                }
            }
        }
        for i in 0..dim {
            for k in 0..i {
                jtj[(k, i)] = jtj[(i, k)];
            }
        }
        Some((jtj, jtr))
    }

    fn clamp(&self, x: &mut [f64]) {
        for ((xi, lo), hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *xi = xi.clamp(*lo, *hi);
        }
    }

    pub fn minimize(&self, start: Vec<f64>, max_iters: usize) -> Outcome {
        let mut x = start;
        self.clamp(&mut x);
        let mut f = self.value(&x);
        let mut lambda = 1e-3;
        let outcome = |x: Vec<f64>, objective, converged, iterations| Outcome {
            x,
            objective,
            converged,
            iterations,
        };
        if !f.is_finite() {
            return outcome(x, f, false, 0);
        }

        for iter in 0..max_iters {
            if f == 0.0 {
                return outcome(x, f, true, iter);
            }
            let Some((jtj, jtr)) = self.normal_equations(&x) else {
                return outcome(x, f, false, iter);
            };
            let diag: Vec<f64> = (0..x.len()).map(|i| jtj[(i, i)].max(1e-12)).collect();
            loop {
                let mut damped = jtj.clone();
                for (i, d) in diag.iter().enumerate() {
                    damped[(i, i)] += lambda * d;
                }
                let step = match damped.cholesky() {
                    Some(ch) => ch.solve(&(-&jtr)),
                    None => {
                        lambda *= 4.0;
                        if lambda > LAMBDA_MAX {
                            return outcome(x, f, true, iter);
                        }
                        continue;
                    }
                };
                let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                self.clamp(&mut trial);
                let moved: f64 = trial.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let size: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if moved <= STEP_TOL * (size + STEP_TOL) {
                    return outcome(x, f, true, iter);
                }
                let f_trial = self.value(&trial);
                if f_trial < f {
                    let stalled = f - f_trial <= STALL_TOL * f;
                    x = trial;
                    f = f_trial;
                    lambda = (lambda / 3.0).max(1e-12);
                    if stalled {
                        return outcome(x, f, true, iter + 1);
                    }
                    break;
                }
                lambda *= 4.0;
                if lambda > LAMBDA_MAX {
                    return outcome(x, f, true, iter);
                }
            }
        }
        outcome(x, f, false, max_iters)
    }
}
