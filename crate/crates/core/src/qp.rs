//! Convex quadratic programs with non-negativity bounds on a subset of the
//! variables.
//!
//! [`solve`] is a projected Newton method with active-set prediction. Each
//! iteration first tries a face step: bounded coordinates whose scaled
//! gradient step would cross the bound are predicted active and set to
//! zero, the rest are minimized exactly, and the projected result is taken
//! if it lowers the objective. Otherwise a Bertsekas-style step is made:
//! coordinates at the bound with a positive gradient are held (scaled
//! gradient), the others take a Newton step, and the projection arc is
//! backtracked until an Armijo condition holds. The objective never
//! increases between iterates, and once the optimal face is predicted the
//! face step lands on the minimizer.
//!
//! The problem structure is abstracted by [`BoundedQuadratic`] so the same
//! iteration drives both small dense problems ([`DenseQp`]) and the banded
//! EDA deconvolution program.
//!
//! [`oracle`] solves small dense problems by exhaustive enumeration of
//! active sets and is used to certify the main solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, DenseMatrix};

/// A convex quadratic `J(x)` where some coordinates are constrained to be
/// non-negative.
pub trait BoundedQuadratic {
    fn dim(&self) -> usize;

    /// Whether coordinate `i` carries the bound `x_i >= 0`.
    fn is_bounded(&self, i: usize) -> bool;

    fn objective(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// Diagonal of the Hessian, used to scale steps on binding coordinates.
    fn hessian_diagonal(&self) -> Vec<f64>;

    /// `H v`.
    fn hessian_mul(&self, v: &[f64]) -> Vec<f64>;

    /// Solves `H[F, F] d_F = rhs_F` for the coordinates flagged in `free`.
    /// Entries of the result outside `F` must be zero.
    fn solve_free(&self, free: &[bool], rhs: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for [`kkt_residual`].
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-6, max_iters: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Objective value after every accepted iterate, starting with `x0`.
    pub objective_trace: Vec<f64>,
}

/// Infinity norm of the natural KKT residual: `min(x_i, g_i)` on bounded
/// coordinates, `g_i` elsewhere. Zero exactly at a KKT point.
pub fn kkt_residual<P: BoundedQuadratic + ?Sized>(problem: &P, x: &[f64], grad: &[f64]) -> f64 {
    let mut r = 0.0f64;
    for i in 0..x.len() {
        let ri = if problem.is_bounded(i) { x[i].min(grad[i]) } else { grad[i] };
        r = r.max(libm::fabs(ri));
    }
    r
}

const ARMIJO_SIGMA: f64 = 1e-4;
const ACTIVE_EPS: f64 = 1e-3;
const MAX_BACKTRACKS: usize = 60;
const MAX_PDAS_FAILURES: usize = 12;
const PDAS_RESTART: usize = 3;

/// Minimizes the problem starting from `x0` (projected onto the bounds).
pub fn solve<P: BoundedQuadratic + ?Sized>(problem: &P, x0: &[f64], opts: &SolverOptions) -> Result<Solution> {
    let n = problem.dim();
    assert_eq!(x0.len(), n);
    let mut x: Vec<f64> = (0..n).map(|i| if problem.is_bounded(i) { x0[i].max(0.0) } else { x0[i] }).collect();
    let diag = problem.hessian_diagonal();
    let mut grad = vec![0.0; n];
    let mut f = problem.objective(&x);
    let mut trace = vec![f];
    let mut free = vec![true; n];
    let mut trial = vec![0.0; n];
    let mut xp = vec![0.0; n];
    let mut grad_p = vec![0.0; n];
    let mut active = vec![false; n];
    let mut pdas_valid = false;
    let mut pdas_failures = 0;

    for iter in 0..=opts.max_iters {
        problem.gradient(&x, &mut grad);
        let res = kkt_residual(problem, &x, &grad);
        if res <= opts.tol {
            return Ok(Solution { x, objective: f, kkt_residual: res, iterations: iter, objective_trace: trace });
        }
        if iter == opts.max_iters {
            return Err(Error::DidNotConverge { residual: res, iterations: iter });
        }

        // Primal-dual active-set candidate. The sequence (xp, active) runs
        // its own, possibly infeasible, iteration; its projection is taken
        // whenever it lowers the objective.
        if pdas_failures < MAX_PDAS_FAILURES {
            if !pdas_valid {
                xp.copy_from_slice(&x);
                grad_p.copy_from_slice(&grad);
                for i in 0..n {
                    let scale = if diag[i] > 0.0 { diag[i] } else { 1.0 };
                    active[i] = problem.is_bounded(i) && x[i] - grad[i] / scale <= 0.0;
                }
                pdas_valid = true;
            } else {
                problem.gradient(&xp, &mut grad_p);
                for i in 0..n {
                    active[i] = problem.is_bounded(i) && if active[i] { grad_p[i] > 0.0 } else { xp[i] < 0.0 };
                }
            }
            let mut fixed_x = vec![0.0; n];
            for i in 0..n {
                free[i] = !active[i];
                if active[i] {
                    fixed_x[i] = xp[i];
                }
            }
            let coupling = problem.hessian_mul(&fixed_x);
            let rhs: Vec<f64> = (0..n).map(|i| if free[i] { coupling[i] - grad_p[i] } else { 0.0 }).collect();
            let face = problem.solve_free(&free, &rhs)?;
            for i in 0..n {
                xp[i] = if free[i] { xp[i] + face[i] } else { 0.0 };
                trial[i] = if problem.is_bounded(i) { xp[i].max(0.0) } else { xp[i] };
            }
            let ft = problem.objective(&trial);
            if ft < f {
                core::mem::swap(&mut x, &mut trial);
                f = ft;
                trace.push(f);
                pdas_failures = 0;
                continue;
            }
            pdas_failures += 1;
            if pdas_failures % PDAS_RESTART == 0 {
                pdas_valid = false;
            }
        }

        let eps = ACTIVE_EPS.min(res);
        for i in 0..n {
            free[i] = !(problem.is_bounded(i) && x[i] <= eps && grad[i] > 0.0);
        }
        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut dir = problem.solve_free(&free, &neg_grad)?;
        for i in 0..n {
            if !free[i] {
                dir[i] = -grad[i] / if diag[i] > 0.0 { diag[i] } else { 1.0 };
            }
        }
        // A Newton direction that fails to descend on the free set (possible
        // only through round-off on a nearly singular face) is replaced by
        // the scaled gradient.
        let slope: f64 = (0..n).filter(|&i| free[i]).map(|i| grad[i] * dir[i]).sum();
        if !(slope < 0.0) {
            for i in 0..n {
                if free[i] {
                    dir[i] = -grad[i] / if diag[i] > 0.0 { diag[i] } else { 1.0 };
                }
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut predicted = 0.0;
            for i in 0..n {
                let mut t = x[i] + step * dir[i];
                if problem.is_bounded(i) && t < 0.0 {
                    t = 0.0;
                }
                trial[i] = t;
                predicted += if free[i] { -step * grad[i] * dir[i] } else { grad[i] * (x[i] - t) };
            }
            let ft = problem.objective(&trial);
            if f - ft >= ARMIJO_SIGMA * predicted && ft <= f {
                accepted = Some(ft);
                break;
            }
            step *= 0.5;
        }
        let Some(ft) = accepted else {
            // no representable decrease remains along this arc
            return Err(Error::DidNotConverge { residual: res, iterations: iter });
        };
        debug_assert!(ft <= f, "objective increased: {f} -> {ft}");
        core::mem::swap(&mut x, &mut trial);
        f = ft;
        trace.push(f);
    }
    unreachable!()
}

/// Dense problem `½ xᵀHx + gᵀx` with `x_i >= 0` where `mask[i]`.
#[derive(Debug, Clone)]
pub struct DenseQp {
    pub h: DenseMatrix,
    pub g: Vec<f64>,
    pub mask: Vec<bool>,
}

impl DenseQp {
    pub fn new(h: DenseMatrix, g: Vec<f64>, mask: Vec<bool>) -> Self {
        assert_eq!(h.dim(), g.len());
        assert_eq!(g.len(), mask.len());
        DenseQp { h, g, mask }
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<Solution> {
        solve(self, &vec![0.0; self.g.len()], opts)
    }
}

impl BoundedQuadratic for DenseQp {
    fn dim(&self) -> usize {
        self.g.len()
    }

    fn is_bounded(&self, i: usize) -> bool {
        self.mask[i]
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let hx = self.h.mul_vec(x);
        x.iter().zip(&hx).zip(&self.g).map(|((xi, hi), gi)| 0.5 * xi * hi + gi * xi).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let hx = self.h.mul_vec(x);
        for i in 0..x.len() {
            out[i] = hx[i] + self.g[i];
        }
    }

    fn hessian_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.h.get(i, i)).collect()
    }

    fn hessian_mul(&self, v: &[f64]) -> Vec<f64> {
        self.h.mul_vec(v)
    }

    fn solve_free(&self, free: &[bool], rhs: &[f64]) -> Result<Vec<f64>> {
        let idx: Vec<usize> = (0..self.dim()).filter(|&i| free[i]).collect();
        let m = idx.len();
        let mut out = vec![0.0; self.dim()];
        if m == 0 {
            return Ok(out);
        }
        let mut sub = DenseMatrix::zeros(m);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                sub.set(a, b, self.h.get(i, j));
            }
        }
        let chol = match Cholesky::factor(&sub) {
            Ok(c) => c,
            Err(_) => {
                // semidefinite face: a tiny ridge keeps the step well defined
                let scale = (0..m).map(|a| sub.get(a, a)).fold(0.0, f64::max).max(1.0);
                for a in 0..m {
                    sub.add(a, a, 1e-12 * scale);
                }
                Cholesky::factor(&sub)?
            }
        };
        let mut b: Vec<f64> = idx.iter().map(|&i| rhs[i]).collect();
        chol.solve_in_place(&mut b);
        for (a, &i) in idx.iter().enumerate() {
            out[i] = b[a];
        }
        Ok(out)
    }
}

/// Largest problem dimension the oracle accepts.
pub const ORACLE_MAX_DIM: usize = 60;
/// Largest number of bounded coordinates the oracle enumerates over.
pub const ORACLE_MAX_BOUNDED: usize = 24;

/// Exhaustive active-set oracle for `min ½ xᵀHx + gᵀx, x_i >= 0 (mask)`.
///
/// For every subset of bounded coordinates held at zero, solves the
/// equality-constrained stationarity system on the rest by Gaussian
/// elimination, keeps the candidates that are primal feasible and satisfy
/// the dual sign conditions, and returns the one with the lowest objective.
pub fn oracle(h: &DenseMatrix, g: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    let n = g.len();
    if n > ORACLE_MAX_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    let bounded: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    if bounded.len() > ORACLE_MAX_BOUNDED {
        return Err(Error::DimensionTooLarge(bounded.len()));
    }
    let scale = g.iter().fold(1.0f64, |m, v| m.max(libm::fabs(*v)));
    let feas_tol = 1e-10 * scale;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for active in 0u64..(1u64 << bounded.len()) {
        let mut fixed = vec![false; n];
        for (b, &i) in bounded.iter().enumerate() {
            fixed[i] = active & (1 << b) != 0;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
        let mut x = vec![0.0; n];
        if !free.is_empty() {
            let m = free.len();
            let mut a = vec![0.0; m * (m + 1)];
            for (r, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    a[r * (m + 1) + c] = h.get(i, j);
                }
                a[r * (m + 1) + m] = -g[i];
            }
            let Some(sol) = gauss_solve(&mut a, m) else { continue };
            for (r, &i) in free.iter().enumerate() {
                x[i] = sol[r];
            }
        }
        if (0..n).any(|i| mask[i] && !fixed[i] && x[i] < -feas_tol) {
            continue;
        }
        let hx = h.mul_vec(&x);
        let dual_ok = (0..n).filter(|&i| fixed[i]).all(|i| hx[i] + g[i] >= -feas_tol);
        if !dual_ok {
            continue;
        }
        for i in 0..n {
            if mask[i] && x[i] < 0.0 {
                x[i] = 0.0;
            }
        }
        let obj: f64 = (0..n).map(|i| 0.5 * x[i] * hx[i] + g[i] * x[i]).sum();
        if best.as_ref().map_or(true, |(b, _)| obj < *b) {
            best = Some((obj, x));
        }
    }
    best.map(|(_, x)| x).ok_or(Error::NotPositiveDefinite)
}

/// Gaussian elimination with partial pivoting on an augmented `m × (m+1)`
/// system. `None` when the matrix is numerically singular.
fn gauss_solve(a: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let w = m + 1;
    let norm = a.iter().fold(0.0f64, |acc, v| acc.max(libm::fabs(*v)));
    for col in 0..m {
        let piv = (col..m).max_by(|&r1, &r2| libm::fabs(a[r1 * w + col]).total_cmp(&libm::fabs(a[r2 * w + col])))?;
        if libm::fabs(a[piv * w + col]) <= 1e-13 * norm.max(1e-300) {
            return None;
        }
        if piv != col {
            for c in 0..w {
                a.swap(col * w + c, piv * w + c);
            }
        }
        for r in col + 1..m {
            let factor = a[r * w + col] / a[col * w + col];
            if factor != 0.0 {
                for c in col..w {
                    a[r * w + c] -= factor * a[col * w + c];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let mut s = a[r * w + m];
        for c in r + 1..m {
            s -= a[r * w + c] * x[c];
        }
        x[r] = s / a[r * w + r];
    }
    Some(x)
}
