use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stressdetect_core::linalg::DenseMatrix;
use stressdetect_core::qp::{oracle, solve, BoundedQuadratic, DenseQp, SolverOptions};

/// `H = AᵀA / k + ridge I` with `A` of shape `k x n`.
fn random_psd(rng: &mut ChaCha8Rng, n: usize, ridge: f64) -> DenseMatrix {
    let k = rng.random_range(1..=2 * n);
    let a: Vec<f64> = (0..k * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut h = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..k).map(|r| a[r * n + i] * a[r * n + j]).sum::<f64>() / k as f64;
            h.set(i, j, v + if i == j { ridge } else { 0.0 });
        }
    }
    h
}

fn random_problem(seed: u64) -> DenseQp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=20);
    let h = random_psd(&mut rng, n, 1e-3);
    let g = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mask = (0..n).map(|_| rng.random_bool(0.8)).collect();
    DenseQp::new(h, g, mask)
}

#[test]
fn solver_matches_exhaustive_oracle() {
    let opts = SolverOptions::default();
    for seed in 0..50 {
        let p = random_problem(seed);
        let sol = p.solve(&opts).unwrap();
        let reference = oracle(&p.h, &p.g, &p.mask).unwrap();
        let f_ref = p.objective(&reference);
        assert!((sol.objective - f_ref).abs() <= 1e-8 * (1.0 + f_ref.abs()), "seed {seed}: {} vs {f_ref}", sol.objective);
        assert!(sol.kkt_residual <= 1e-6, "seed {seed}: kkt {}", sol.kkt_residual);
        assert!(sol.x.iter().zip(&p.mask).all(|(x, &b)| !b || *x >= 0.0));
    }
}

#[test]
fn unbounded_problem_reduces_to_linear_solve() {
    let h = DenseMatrix::from_row_major(2, vec![2.0, 1.0, 1.0, 2.0]);
    let p = DenseQp::new(h, vec![-3.0, -3.0], vec![false, false]);
    let sol = p.solve(&SolverOptions::default()).unwrap();
    assert!((sol.x[0] - 1.0).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_trace_is_monotone_and_kkt_holds(seed in any::<u64>()) {
        let p = random_problem(seed);
        let start: Vec<f64> = (0..p.g.len()).map(|i| if p.mask[i] { 1.0 } else { -0.5 }).collect();
        let sol = solve(&p, &start, &SolverOptions::default()).unwrap();
        prop_assert!(sol.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs())));
        prop_assert!(sol.kkt_residual <= 1e-6);
    }
}
