//! Small dense and banded Cholesky factorizations.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        DenseMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.dim();
        let mut l = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite);
                    }
                    l.set(i, i, libm::sqrt(s));
                } else {
                    l.set(i, j, s / l.get(j, j));
                }
            }
        }
        Ok(Cholesky { l })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.l.dim();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l.get(i, k) * b[k];
            }
            b[i] = s / self.l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l.get(k, i) * b[k];
            }
            b[i] = s / self.l.get(i, i);
        }
    }
}

/// Symmetric matrix with half-bandwidth `bw` (entries with `|i - j| > bw`
/// are zero), storing the lower band row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix { n, bw, band: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.band[self.idx(i, j)]
        }
    }

    /// Sets `(i, j)` and its mirror. Panics outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry outside band");
        let k = self.idx(i, j);
        self.band[k] = v;
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.band[k] += v;
        }
    }
}

/// Cholesky factor of a [`BandMatrix`]; the factor keeps the bandwidth.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    pub fn factor(a: &BandMatrix) -> Result<Self> {
        let (n, p) = (a.n, a.bw);
        let mut l = BandMatrix::zeros(n, p);
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(p));
                let mut s = a.band[a.idx(i, j)];
                let (ri, rj) = (i * (p + 1) + p - i, j * (p + 1) + p - j);
                for k in k0..j {
                    s -= l.band[ri + k] * l.band[rj + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite);
                    }
                    l.band[ri + i] = libm::sqrt(s);
                } else {
                    l.band[ri + j] = s / l.band[rj + j];
                }
            }
        }
        Ok(BandCholesky { l })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.solve_in_place_from(b, 0);
    }

    /// As [`solve_in_place`](Self::solve_in_place) for a right-hand side
    /// whose first `start` entries are zero.
    pub fn solve_in_place_from(&self, b: &mut [f64], start: usize) {
        let (n, p) = (self.l.n, self.l.bw);
        let band = &self.l.band;
        debug_assert!(b[..start.min(n)].iter().all(|v| *v == 0.0));
        for i in start..n {
            let ri = i * (p + 1) + p - i;
            let mut s = b[i];
            for k in i.saturating_sub(p)..i {
                s -= band[ri + k] * b[k];
            }
            b[i] = s / band[ri + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + p + 1).min(n) {
                s -= band[k * (p + 1) + p - k + i] * b[k];
            }
            b[i] = s / band[i * (p + 1) + p];
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
