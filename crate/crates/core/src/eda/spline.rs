use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Cubic B-spline basis with (approximately) uniform knots plus a two
/// column drift block `[1, t_normalized]`.
///
/// Breakpoints sit at `0, s, 2s, …, (m-1)s, D` relative to the first sample,
/// where `m = floor(D / s)` and `D` is the session duration, so the last
/// interval absorbs the remainder. With clamped (open-uniform) end knots
/// this gives `m + 3` spline columns that sum to one everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct TonicBasis {
    knots: Vec<f64>,
    n_splines: usize,
    /// For each sample: first non-zero column and the four basis values.
    rows: Vec<(usize, [f64; 4])>,
    drift: Vec<f64>,
}

impl TonicBasis {
    pub fn new(timestamps: &[f64], knot_spacing_s: f64) -> Result<Self> {
        let duration = match (timestamps.first(), timestamps.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        };
        if !(knot_spacing_s > 0.0) || duration < 2.0 * knot_spacing_s {
            return Err(Error::SessionTooShort { duration_s: duration, required_s: 2.0 * knot_spacing_s });
        }
        let t0 = timestamps[0];
        let m = libm::floor(duration / knot_spacing_s + 1e-9) as usize;
        let mut knots = Vec::with_capacity(m + 7);
        knots.extend_from_slice(&[0.0; 3]);
        for i in 0..m {
            knots.push(i as f64 * knot_spacing_s);
        }
        knots.extend_from_slice(&[duration; 4]);
        let rows = timestamps.iter().map(|&t| basis_row(&knots, m, (t - t0).clamp(0.0, duration))).collect();
        let drift = timestamps.iter().map(|&t| (t - t0) / duration).collect();
        Ok(TonicBasis { knots, n_splines: m + 3, rows, drift })
    }

    pub fn n_splines(&self) -> usize {
        self.n_splines
    }

    /// Spline columns plus the two drift columns.
    pub fn n_columns(&self) -> usize {
        self.n_splines + 2
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// First non-zero spline column of `row` and the four values from there.
    pub fn row_splines(&self, row: usize) -> (usize, [f64; 4]) {
        self.rows[row]
    }

    /// Entry of the full `[B C]` matrix.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if col == self.n_splines {
            return 1.0;
        }
        if col == self.n_splines + 1 {
            return self.drift[row];
        }
        let (first, vals) = &self.rows[row];
        if col >= *first && col < first + 4 {
            vals[col - first]
        } else {
            0.0
        }
    }

    /// `[B C] · coef`.
    pub fn apply(&self, coef: &[f64]) -> Vec<f64> {
        let (ds, dd) = (coef[self.n_splines], coef[self.n_splines + 1]);
        self.rows
            .iter()
            .zip(&self.drift)
            .map(|((first, vals), t)| {
                let spline: f64 = vals.iter().zip(&coef[*first..first + 4]).map(|(a, b)| a * b).sum();
                spline + ds + dd * t
            })
            .collect()
    }

    /// `[B C]ᵀ · r`.
    pub fn apply_transpose(&self, r: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.n_columns()];
        for (((first, vals), t), ri) in self.rows.iter().zip(&self.drift).zip(r) {
            for k in 0..4 {
                out[first + k] += vals[k] * ri;
            }
            out[self.n_splines] += ri;
            out[self.n_splines + 1] += t * ri;
        }
        out
    }

    /// Dense column `col` of `[B C]`.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows.len()).map(|r| self.entry(r, col)).collect()
    }
}

/// Non-zero cubic basis values at `t` (de Boor / Cox recursion in its
/// triangular form).
fn basis_row(knots: &[f64], m: usize, t: f64) -> (usize, [f64; 4]) {
    // span k with knots[k] <= t < knots[k+1], k in 3..=m+2
    let mut k = 3;
    while k < m + 2 && knots[k + 1] <= t {
        k += 1;
    }
    let mut n = [0.0; 4];
    let mut left = [0.0; 4];
    let mut right = [0.0; 4];
    n[0] = 1.0;
    for j in 1..=3 {
        left[j] = t - knots[k + 1 - j];
        right[j] = knots[k + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    (k - 3, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Textbook Cox–de Boor recursion, evaluated column by column.
    fn cox_de_boor(knots: &[f64], i: usize, p: usize, t: f64, last: f64) -> f64 {
        if p == 0 {
            let inside = knots[i] <= t && t < knots[i + 1];
            // close the final non-empty interval on the right
            let at_end = t == last && knots[i + 1] == last && knots[i] < last;
            return if inside || at_end { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = knots[i + p] - knots[i];
        if d1 > 0.0 {
            v += (t - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, t, last);
        }
        let d2 = knots[i + p + 1] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + p + 1] - t) / d2 * cox_de_boor(knots, i + 1, p - 1, t, last);
        }
        v
    }

    fn grid(duration: f64, rate: f64) -> Vec<f64> {
        let n = (duration * rate) as usize + 1;
        (0..n).map(|i| 5.0 + i as f64 / rate).collect()
    }

    #[test]
    fn column_count_and_recursion_agree() {
        for &duration in &[20.0, 37.5, 60.0, 95.25] {
            let ts = grid(duration, 4.0);
            let b = TonicBasis::new(&ts, 10.0).unwrap();
            let m = libm::floor(duration / 10.0) as usize;
            assert_eq!(b.n_splines(), m + 3);
            for (r, &t) in ts.iter().enumerate() {
                let rel = t - ts[0];
                for c in 0..b.n_splines() {
                    let want = cox_de_boor(b.knots(), c, 3, rel, duration);
                    assert!((b.entry(r, c) - want).abs() < 1e-12, "d={duration} r={r} c={c}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_local_support() {
        let ts = grid(120.0, 4.0);
        let b = TonicBasis::new(&ts, 10.0).unwrap();
        for r in 0..ts.len() {
            let s: f64 = (0..b.n_splines()).map(|c| b.entry(r, c)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        for c in 0..b.n_splines() {
            let col = b.column(c);
            assert!(col.iter().sum::<f64>() > 0.0);
            let nz = col.iter().filter(|v| **v != 0.0).count();
            assert!(nz <= 4 * 10 * 4 + 1, "column {c} support {nz}");
        }
    }

    #[test]
    fn constant_is_representable() {
        let ts = grid(60.0, 4.0);
        let b = TonicBasis::new(&ts, 10.0).unwrap();
        let mut coef = vec![0.0; b.n_columns()];
        coef[b.n_splines()] = 0.37;
        assert!(b.apply(&coef).iter().all(|v| (v - 0.37).abs() < 1e-15));
        let mut coef = vec![0.37; b.n_splines()];
        coef.extend_from_slice(&[0.0, 0.0]);
        assert!(b.apply(&coef).iter().all(|v| (v - 0.37).abs() < 1e-12));
    }

    #[test]
    fn transpose_matches_dense() {
        let ts = grid(33.0, 2.0);
        let b = TonicBasis::new(&ts, 10.0).unwrap();
        let r: Vec<f64> = (0..ts.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let bt = b.apply_transpose(&r);
        for c in 0..b.n_columns() {
            let dense: f64 = b.column(c).iter().zip(&r).map(|(a, b)| a * b).sum();
            assert!((dense - bt[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn too_short() {
        let ts = grid(19.0, 4.0);
        assert!(matches!(TonicBasis::new(&ts, 10.0), Err(Error::SessionTooShort { .. })));
    }
}
