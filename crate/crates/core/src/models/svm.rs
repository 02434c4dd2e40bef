use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{prepare, ModelParams, TrainedModel};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: f64,
    pub platt_folds: usize,
    /// Stopping tolerance on the maximal KKT violation of the dual.
    pub tol: f64,
    /// The solver gives up after `max_passes * n` pair updates.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 107.0, gamma: 0.001, platt_folds: 5, tol: 1e-3, max_passes: 1000 }
    }
}

impl SvmConfig {
    /// The default with `c = 1e7`, the reading of the published constant
    /// with a dropped exponent.
    pub fn c_1e7() -> Self {
        SvmConfig { c: 1e7, ..SvmConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.c > 0.0
            && self.c.is_finite()
            && self.gamma > 0.0
            && self.gamma.is_finite()
            && self.platt_folds >= 2
            && self.tol > 0.0
            && self.max_passes >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!("invalid SVM configuration {self:?}")))
        }
    }
}

/// Sigmoid `P(stress | f) = 1 / (1 + exp(a f + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattCoefficients {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub gamma: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub coef: Vec<f64>,
    pub rho: f64,
    pub platt: PlattCoefficients,
}

impl SvmParams {
    /// `sum_i coef_i K(sv_i, z) - rho` for a standardized row `z`.
    pub fn decision_value(&self, z: &[f64]) -> f64 {
        let mut f = 0.0;
        for (sv, c) in self.support_vectors.iter().zip(&self.coef) {
            f += c * rbf_kernel(sv, z, self.gamma);
        }
        f - self.rho
    }
}

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    libm::exp(-gamma * d2)
}

fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf_kernel(&x[i], &x[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Dual solution of the soft-margin SVM.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    /// Maximal violating-pair gap at termination.
    pub gap: f64,
}

/// Sequential minimal optimization with second-order working-set selection
/// for `min 1/2 a'Qa - e'a` s.t. `0 <= a <= c`, `y'a = 0`, where
/// `Q_ij = y_i y_j K_ij` and `kernel` is the row-major `n x n` Gram matrix.
pub fn smo_solve(kernel: &[f64], y: &[f64], c: f64, tol: f64, max_iter: usize) -> Result<DualSolution> {
    let n = y.len();
    debug_assert_eq!(kernel.len(), n * n);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let k = |i: usize, j: usize| kernel[i * n + j];
    let up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let gap = loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        if i_sel != usize::MAX {
            let i = i_sel;
            for t in 0..n {
                if !low(alpha[t], y[t]) {
                    continue;
                }
                let yg = y[t] * grad[t];
                if yg >= gmax2 {
                    gmax2 = yg;
                }
                let diff = gmax + yg;
                if diff > 0.0 {
                    let mut a = k(i, i) + k(t, t) - 2.0 * k(i, t);
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -diff * diff / a;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = t;
                    }
                }
            }
        }
        let gap = gmax + gmax2;
        if j_sel == usize::MAX || gap < tol {
            break if gap.is_finite() { gap.max(0.0) } else { 0.0 };
        }
        if iterations >= max_iter {
            return Err(Error::DidNotConverge { residual: gap, iterations });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * k(i, j);
        if y[i] != y[j] {
            let mut quad = k(i, i) + k(j, j) + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k(i, i) + k(j, j) - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(i, t) * di + y[j] * k(j, t) * dj);
        }
    };

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
    Ok(DualSolution { alpha, rho, iterations, gap })
}

pub fn platt_probability(decision: f64, p: &PlattCoefficients) -> f64 {
    let f = decision * p.a + p.b;
    if f >= 0.0 {
        let e = libm::exp(-f);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(f))
    }
}

/// Fits the Platt sigmoid to decision values by regularized maximum
/// likelihood (Newton's method with backtracking and smoothed targets).
pub fn sigmoid_train(decisions: &[f64], labels: &[u8]) -> PlattCoefficients {
    let prior1 = labels.iter().filter(|&&l| l == 1).count() as f64;
    let prior0 = labels.len() as f64 - prior1;
    let (max_iter, min_step, sigma, eps) = (100, 1e-10, 1e-12, 1e-5);
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let target: Vec<f64> = labels.iter().map(|&l| if l == 1 { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&target)
            .map(|(d, t)| {
                let f = d * a + b;
                if f >= 0.0 {
                    t * f + libm::log1p(libm::exp(-f))
                } else {
                    (t - 1.0) * f + libm::log1p(libm::exp(f))
                }
            })
            .sum()
    };
    let mut a = 0.0;
    let mut b = libm::log((prior0 + 1.0) / (prior1 + 1.0));
    let mut fval = objective(a, b);
    for _ in 0..max_iter {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (d, t) in decisions.iter().zip(&target) {
            let f = d * a + b;
            let (p, q) = if f >= 0.0 {
                let e = libm::exp(-f);
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = libm::exp(f);
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += d * d * d2;
            h22 += d2;
            h21 += d * d2;
            let d1 = t - p;
            g1 += d * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    PlattCoefficients { a, b }
}

fn signs(labels: &[u8]) -> Vec<f64> {
    labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect()
}

fn sub_kernel(kernel: &[f64], n: usize, idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * idx.len());
    for &i in idx {
        out.extend(idx.iter().map(|&j| kernel[i * n + j]));
    }
    out
}

/// Cross-validated decision values: class-stratified round-robin folds in
/// row order, each scored by an SVM trained on the remaining folds.
fn cv_decisions(kernel: &[f64], labels: &[u8], config: &SvmConfig) -> Result<Vec<f64>> {
    let n = labels.len();
    let folds = config.platt_folds;
    let mut fold_of = vec![0usize; n];
    let mut seen = [0usize; 2];
    for (t, &l) in labels.iter().enumerate() {
        fold_of[t] = seen[l as usize] % folds;
        seen[l as usize] += 1;
    }
    let mut out = vec![0.0; n];
    for f in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&t| fold_of[t] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&t| fold_of[t] == f).collect();
        if test.is_empty() {
            continue;
        }
        let ty: Vec<u8> = train.iter().map(|&t| labels[t]).collect();
        let pos = ty.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == ty.len() {
            let v = if pos == 0 { -1.0 } else { 1.0 };
            for &t in &test {
                out[t] = v;
            }
            continue;
        }
        let y = signs(&ty);
        let sol = smo_solve(&sub_kernel(kernel, n, &train), &y, config.c, config.tol, config.max_passes * train.len())?;
        for &t in &test {
            let mut d = -sol.rho;
            for (r, &s) in train.iter().enumerate() {
                if sol.alpha[r] > 0.0 {
                    d += sol.alpha[r] * y[r] * kernel[t * n + s];
                }
            }
            out[t] = d;
        }
    }
    Ok(out)
}

/// Trains an RBF SVM on standardized rows and calibrates it with Platt
/// scaling on cross-validated decision values.
pub fn svm_fit(matrix: &FeatureMatrix, config: &SvmConfig) -> Result<TrainedModel> {
    config.validate()?;
    let (x, labels, standardizer, meta) = prepare(matrix)?;
    let kernel = kernel_matrix(&x, config.gamma);
    let y = signs(&labels);
    let sol = smo_solve(&kernel, &y, config.c, config.tol, config.max_passes * x.len())?;
    let platt = sigmoid_train(&cv_decisions(&kernel, &labels, config)?, &labels);
    let mut support_vectors = Vec::new();
    let mut coef = Vec::new();
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(x[t].clone());
            coef.push(a * y[t]);
        }
    }
    let params = SvmParams { gamma: config.gamma, support_vectors, coef, rho: sol.rho, platt };
    Ok(TrainedModel {
        schema: matrix.schema.clone(),
        norm_stats: standardizer,
        params: ModelParams::SvmRbf(params),
        training_meta: meta,
    })
}
