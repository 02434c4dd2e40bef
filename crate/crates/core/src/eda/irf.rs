use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::BandMatrix;

/// Samples `exp(-t/tau0) - exp(-t/tau1)` at `k·dt` for `k = 0..=L`,
/// `L = floor(truncation_s / dt)`, scaled so the largest tap is exactly 1.
pub fn sample_kernel(tau0: f64, tau1: f64, dt: f64, truncation_s: f64) -> Vec<f64> {
    let taps = libm::floor(truncation_s / dt + 1e-9) as usize;
    let mut h: Vec<f64> = (0..=taps)
        .map(|k| {
            let t = k as f64 * dt;
            libm::exp(-t / tau0) - libm::exp(-t / tau1)
        })
        .collect();
    let peak = h.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        for v in &mut h {
            *v /= peak;
        }
    }
    h
}

/// Lower-triangular banded Toeplitz convolution `phasic = M · driver`,
/// truncated at the end of the signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionOperator {
    kernel: Vec<f64>,
    n: usize,
}

impl ConvolutionOperator {
    pub fn new(kernel: Vec<f64>, n: usize) -> Self {
        ConvolutionOperator { kernel, n }
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Index of the last non-zero tap.
    pub fn reach(&self) -> usize {
        self.kernel.len().saturating_sub(1)
    }

    /// `(M q)_t = Σ_k h_k q_{t-k}`.
    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, &qj) in q.iter().enumerate() {
            if qj == 0.0 {
                continue;
            }
            let end = (j + self.kernel.len()).min(self.n);
            for (o, h) in out[j..end].iter_mut().zip(&self.kernel) {
                *o += h * qj;
            }
        }
        out
    }

    /// `(Mᵀ r)_j = Σ_k h_k r_{j+k}`.
    pub fn apply_transpose(&self, r: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| {
                let end = (j + self.kernel.len()).min(self.n);
                r[j..end].iter().zip(&self.kernel).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Entry `(i, j)` of the dense operator.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i < j || i - j >= self.kernel.len() {
            0.0
        } else {
            self.kernel[i - j]
        }
    }

    /// `MᵀM` as a band matrix, including the truncation at the signal end.
    pub fn gram(&self) -> BandMatrix {
        let bw = self.reach();
        let mut g = BandMatrix::zeros(self.n, bw);
        let h = &self.kernel;
        for i in 0..self.n {
            let last = bw.min(self.n - 1 - i);
            for delta in 0..=bw.min(self.n - 1 - i) {
                // Σ_{m=delta}^{last} h[m] h[m - delta]
                let mut s = 0.0;
                for m in delta..=last {
                    s += h[m] * h[m - delta];
                }
                g.set(i + delta, i, s);
            }
        }
        g
    }
}
