use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::irf::{sample_kernel, ConvolutionOperator};
use super::spline::TonicBasis;
use crate::error::{Error, Result};
use crate::linalg::{dot, BandCholesky, BandMatrix, Cholesky, DenseMatrix};
use crate::qp::{self, BoundedQuadratic, SolverOptions};
use crate::signal::{SignalKind, TimeSeries};

/// Model and solver parameters of the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvxEdaConfig {
    /// Slow time constant of the impulse response (s).
    pub tau0: f64,
    /// Fast time constant of the impulse response (s).
    pub tau1: f64,
    pub knot_spacing_s: f64,
    /// Weight of the L1 penalty on the driver.
    pub alpha: f64,
    /// Weight of the ridge penalty on the spline coefficients.
    pub gamma_l: f64,
    pub irf_truncation_s: f64,
    /// Bound on the infinity norm of the KKT residual.
    pub solver_tol: f64,
    pub max_iters: usize,
    /// Grid used when the input must be resampled.
    pub resample_hz: f64,
}

impl Default for CvxEdaConfig {
    fn default() -> Self {
        CvxEdaConfig {
            tau0: 2.0,
            tau1: 0.7,
            knot_spacing_s: 10.0,
            alpha: 8e-4,
            gamma_l: 1e-2,
            irf_truncation_s: 10.0,
            solver_tol: 1e-6,
            max_iters: 500,
            resample_hz: 4.0,
        }
    }
}

impl CvxEdaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.tau1 > 0.0 && self.tau0 > self.tau1) {
            return bad("require tau0 > tau1 > 0");
        }
        if !(self.knot_spacing_s > 0.0) {
            return bad("knot_spacing_s must be positive");
        }
        if !(self.alpha > 0.0 && self.gamma_l > 0.0 && self.solver_tol > 0.0) {
            return bad("alpha, gamma_l and solver_tol must be positive");
        }
        if !(self.irf_truncation_s >= 5.0 * self.tau0) {
            return bad("irf_truncation_s must be at least 5 * tau0");
        }
        if !(self.resample_hz > 0.0) {
            return bad("resample_hz must be positive");
        }
        Ok(())
    }
}

/// Tonic, phasic, driver and residual series on the decomposition grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EdaDecomposition {
    pub tonic: TimeSeries,
    pub phasic: TimeSeries,
    pub driver: TimeSeries,
    pub residual: TimeSeries,
    pub info: SolveInfo,
}

impl EdaDecomposition {
    /// `tonic + phasic + residual`, i.e. the signal that was decomposed.
    pub fn reconstruction(&self) -> TimeSeries {
        let v = (0..self.tonic.len())
            .map(|i| self.tonic.values()[i] + self.phasic.values()[i] + self.residual.values()[i])
            .collect();
        self.tonic.with_values(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// The decomposition objective over `x = [q (n), l (splines), d (2)]`.
#[derive(Debug, Clone)]
pub struct CvxEdaProblem {
    y: Vec<f64>,
    conv: ConvolutionOperator,
    tonic: TonicBasis,
    alpha: f64,
    gamma: f64,
    gram: BandMatrix,
    /// `Mᵀ [B C]`, row-major `n × n_columns`.
    mt_basis: Vec<f64>,
    /// `[B C]ᵀ[B C] + diag(gamma on splines)`.
    basis_gram: DenseMatrix,
    /// Per column of `Mᵀ[B C]`: half-open range of rows that may be non-zero.
    column_rows: Vec<(usize, usize)>,
}

impl CvxEdaProblem {
    pub fn new(timestamps: &[f64], y: &[f64], config: &CvxEdaConfig) -> Result<Self> {
        config.validate()?;
        let n = y.len();
        let tonic = TonicBasis::new(timestamps, config.knot_spacing_s)?;
        let dt = (timestamps[n - 1] - timestamps[0]) / (n - 1) as f64;
        let conv = ConvolutionOperator::new(sample_kernel(config.tau0, config.tau1, dt, config.irf_truncation_s), n);
        let gram = conv.gram();
        let na = tonic.n_columns();
        let mut mt_basis = vec![0.0; n * na];
        let mut column_rows = Vec::with_capacity(na);
        for c in 0..na {
            let col = conv.apply_transpose(&tonic.column(c));
            let lo = col.iter().position(|v| *v != 0.0).unwrap_or(0);
            let hi = col.iter().rposition(|v| *v != 0.0).map_or(0, |p| p + 1);
            column_rows.push((lo, hi.max(lo)));
            for (r, v) in col.into_iter().enumerate() {
                mt_basis[r * na + c] = v;
            }
        }
        let mut basis_gram = DenseMatrix::zeros(na);
        // B has four non-zeros per row; accumulate row outer products
        for r in 0..n {
            let (first, vals) = tonic.row_splines(r);
            let t = tonic.entry(r, tonic.n_splines() + 1);
            let nz = [
                (first, vals[0]),
                (first + 1, vals[1]),
                (first + 2, vals[2]),
                (first + 3, vals[3]),
                (tonic.n_splines(), 1.0),
                (tonic.n_splines() + 1, t),
            ];
            for (ca, va) in nz {
                for (cb, vb) in nz {
                    basis_gram.add(ca, cb, va * vb);
                }
            }
        }
        for c in 0..tonic.n_splines() {
            basis_gram.add(c, c, config.gamma_l);
        }
        Ok(CvxEdaProblem {
            y: y.to_vec(),
            conv,
            tonic,
            alpha: config.alpha,
            gamma: config.gamma_l,
            gram,
            mt_basis,
            basis_gram,
            column_rows,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn convolution(&self) -> &ConvolutionOperator {
        &self.conv
    }

    pub fn tonic_basis(&self) -> &TonicBasis {
        &self.tonic
    }

    /// Splits `x` into (driver, phasic, tonic).
    pub fn components(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.n_samples();
        let q = x[..n].to_vec();
        let phasic = self.conv.apply(&q);
        let tonic = self.tonic.apply(&x[n..]);
        (q, phasic, tonic)
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let (_, phasic, tonic) = self.components(x);
        self.y.iter().zip(phasic).zip(tonic).map(|((y, p), t)| y - p - t).collect()
    }

    /// Starting point: zero driver, best tonic fit of the raw signal.
    pub fn initial_point(&self) -> Result<Vec<f64>> {
        let n = self.n_samples();
        let mut x = vec![0.0; n + self.tonic.n_columns()];
        let mut rhs = self.tonic.apply_transpose(&self.y);
        Cholesky::factor(&self.basis_gram)?.solve_in_place(&mut rhs);
        x[n..].copy_from_slice(&rhs);
        Ok(x)
    }
}

impl BoundedQuadratic for CvxEdaProblem {
    fn dim(&self) -> usize {
        self.n_samples() + self.tonic.n_columns()
    }

    fn is_bounded(&self, i: usize) -> bool {
        i < self.n_samples()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let n = self.n_samples();
        let r = self.residual(x);
        let l = &x[n..n + self.tonic.n_splines()];
        0.5 * dot(&r, &r) + self.alpha * x[..n].iter().sum::<f64>() + 0.5 * self.gamma * dot(l, l)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n_samples();
        let r = self.residual(x);
        let gq = self.conv.apply_transpose(&r);
        for i in 0..n {
            out[i] = self.alpha - gq[i];
        }
        let ga = self.tonic.apply_transpose(&r);
        for (c, g) in ga.iter().enumerate() {
            out[n + c] = -g;
        }
        for c in 0..self.tonic.n_splines() {
            out[n + c] += self.gamma * x[n + c];
        }
    }

    fn hessian_diagonal(&self) -> Vec<f64> {
        let n = self.n_samples();
        let na = self.tonic.n_columns();
        (0..n).map(|i| self.gram.get(i, i)).chain((0..na).map(|c| self.basis_gram.get(c, c))).collect()
    }

    fn hessian_mul(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n_samples();
        let phasic = self.conv.apply(&v[..n]);
        let tonic = self.tonic.apply(&v[n..]);
        let r: Vec<f64> = phasic.iter().zip(&tonic).map(|(a, b)| a + b).collect();
        let mut out = self.conv.apply_transpose(&r);
        let mut ta = self.tonic.apply_transpose(&r);
        for c in 0..self.tonic.n_splines() {
            ta[c] += self.gamma * v[n + c];
        }
        out.extend(ta);
        out
    }

    fn solve_free(&self, free: &[bool], rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_samples();
        let na = self.tonic.n_columns();
        let f: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
        let m = f.len();
        let mut out = vec![0.0; self.dim()];

        let ra: Vec<f64> = rhs[n..].to_vec();
        if m == 0 {
            let mut da = ra;
            Cholesky::factor(&self.basis_gram)?.solve_in_place(&mut da);
            out[n..].copy_from_slice(&da);
            return Ok(out);
        }

        // driver block restricted to the free set stays banded in free order
        let reach = self.gram.bandwidth();
        let mut bw = 0;
        let mut hi = 0;
        for a in 0..m {
            hi = hi.max(a);
            while hi + 1 < m && f[hi + 1] - f[a] <= reach {
                hi += 1;
            }
            bw = bw.max(hi - a);
        }
        let mut k = BandMatrix::zeros(m, bw);
        for a in 0..m {
            for b in a.saturating_sub(bw)..=a {
                k.set(a, b, self.gram.get(f[a], f[b]));
            }
        }
        let chol = match BandCholesky::factor(&k) {
            Ok(c) => c,
            Err(_) => {
                let scale = (0..m).map(|a| k.get(a, a)).fold(1.0, f64::max);
                k.add_diagonal(1e-12 * scale);
                BandCholesky::factor(&k)?
            }
        };

        // X = K⁻¹ U with U = (Mᵀ[B C])[F, :], stored column-major; column c
        // of U vanishes outside the free rows in `support[c]`
        let support: Vec<(usize, usize)> = self
            .column_rows
            .iter()
            .map(|&(lo, hi)| (f.partition_point(|&i| i < lo), f.partition_point(|&i| i < hi)))
            .collect();
        let mut x_cols = vec![0.0; na * m];
        for c in 0..na {
            let col = &mut x_cols[c * m..(c + 1) * m];
            let (lo, hi) = support[c];
            for a in lo..hi {
                col[a] = self.mt_basis[f[a] * na + c];
            }
            chol.solve_in_place_from(col, lo);
        }
        // Schur complement S = R - Uᵀ X
        let mut s = self.basis_gram.clone();
        for c1 in 0..na {
            let (lo, hi) = support[c1];
            for c2 in 0..na {
                let col = &x_cols[c2 * m..(c2 + 1) * m];
                let mut acc = 0.0;
                for a in lo..hi {
                    acc += self.mt_basis[f[a] * na + c1] * col[a];
                }
                s.add(c1, c2, -acc);
            }
        }
        // symmetrize round-off
        for c1 in 0..na {
            for c2 in 0..c1 {
                let v = 0.5 * (s.get(c1, c2) + s.get(c2, c1));
                s.set(c1, c2, v);
                s.set(c2, c1, v);
            }
        }
        let mut t: Vec<f64> = f.iter().map(|&i| rhs[i]).collect();
        chol.solve_in_place(&mut t);
        let mut da = ra;
        for c in 0..na {
            let mut acc = 0.0;
            for (a, &i) in f.iter().enumerate() {
                acc += self.mt_basis[i * na + c] * t[a];
            }
            da[c] -= acc;
        }
        Cholesky::factor(&s)?.solve_in_place(&mut da);
        for (a, &i) in f.iter().enumerate() {
            let mut v = t[a];
            for c in 0..na {
                v -= x_cols[c * m + a] * da[c];
            }
            out[i] = v;
        }
        out[n..].copy_from_slice(&da);
        Ok(out)
    }
}

/// Decomposes a uniformly sampled, min-max normalized EDA series.
pub fn solve_decomposition(eda: &TimeSeries, config: &CvxEdaConfig) -> Result<EdaDecomposition> {
    config.validate()?;
    if !eda.is_uniform(1e-6) {
        return Err(Error::NonUniformSampling);
    }
    let ts = eda.timestamps();
    let problem = CvxEdaProblem::new(ts, eda.values(), config)?;
    let x0 = problem.initial_point()?;
    let sol = qp::solve(&problem, &x0, &SolverOptions { tol: config.solver_tol, max_iters: config.max_iters })?;
    let (driver, phasic, tonic) = problem.components(&sol.x);
    let residual: Vec<f64> =
        eda.values().iter().zip(&tonic).zip(&phasic).map(|((y, t), p)| y - t - p).collect();
    let mk = |v: Vec<f64>| eda.with_values(v).with_kind(SignalKind::Eda);
    Ok(EdaDecomposition {
        tonic: mk(tonic),
        phasic: mk(phasic),
        driver: mk(driver),
        residual: mk(residual),
        info: SolveInfo { objective: sol.objective, kkt_residual: sol.kkt_residual, iterations: sol.iterations },
    })
}

/// Resamples onto a uniform grid when needed, then decomposes.
pub fn decompose_eda(eda: &TimeSeries, config: &CvxEdaConfig) -> Result<EdaDecomposition> {
    if eda.is_uniform(1e-6) {
        solve_decomposition(eda, config)
    } else {
        solve_decomposition(&eda.resample_uniform(config.resample_hz), config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(values: Vec<f64>) -> TimeSeries {
        TimeSeries::uniform(SignalKind::Eda, 0.0, 4.0, values).unwrap()
    }

    #[test]
    fn zero_signal_gives_zero_components() {
        let d = solve_decomposition(&uniform(vec![0.0; 240]), &CvxEdaConfig::default()).unwrap();
        for s in [&d.tonic, &d.phasic, &d.driver, &d.residual] {
            assert!(s.values().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn constant_signal_is_all_tonic() {
        let d = solve_decomposition(&uniform(vec![0.4; 320]), &CvxEdaConfig::default()).unwrap();
        assert!(d.driver.values().iter().all(|v| v.abs() <= 1e-6));
        assert!(d.tonic.values().iter().all(|v| (v - 0.4).abs() < 1e-6));
    }

    #[test]
    fn rejects_nonuniform_and_short() {
        let s = TimeSeries::new(SignalKind::Eda, vec![0.0, 1.0, 3.0], vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(solve_decomposition(&s, &CvxEdaConfig::default()).unwrap_err(), Error::NonUniformSampling);
        let short = uniform(vec![0.3; 40]);
        assert!(matches!(
            solve_decomposition(&short, &CvxEdaConfig::default()),
            Err(Error::SessionTooShort { .. })
        ));
        let bad = CvxEdaConfig { tau0: 0.5, ..CvxEdaConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn solve_free_matches_dense_hessian() {
        let n = 90;
        let ts: Vec<f64> = (0..n).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = (0..n).map(|i| 0.3 + 0.1 * ((i as f64) * 0.2).sin()).collect();
        let p = CvxEdaProblem::new(&ts, &y, &CvxEdaConfig::default()).unwrap();
        let dim = p.dim();
        // dense Hessian by differencing gradients of the quadratic
        let mut g0 = vec![0.0; dim];
        p.gradient(&vec![0.0; dim], &mut g0);
        let mut h = DenseMatrix::zeros(dim);
        for j in 0..dim {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            let mut gj = vec![0.0; dim];
            p.gradient(&e, &mut gj);
            for i in 0..dim {
                h.set(i, j, gj[i] - g0[i]);
            }
        }
        let free: Vec<bool> = (0..dim).map(|i| i >= n || (i % 3 != 0 && i < n - 1)).collect();
        let rhs: Vec<f64> = (0..dim).map(|i| ((i * 13 % 7) as f64) - 3.0).collect();
        let d = p.solve_free(&free, &rhs).unwrap();
        let hd = h.mul_vec(&d);
        for i in 0..dim {
            if free[i] {
                assert!((hd[i] - rhs[i]).abs() < 1e-7, "row {i}: {} vs {}", hd[i], rhs[i]);
            } else {
                assert_eq!(d[i], 0.0);
            }
        }
    }
}
