use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use stressdetect_core::eval::auroc;
use stressdetect_core::features::{FeatureMatrix, FeatureSchema, FeatureSource, FeatureVector, Scenario};
use stressdetect_core::models::{
    platt_probability, rbf_kernel, rf_fit, smo_solve, svm_fit, Forest, ModelParams, RfConfig, SvmConfig, Tree,
    TreeNode,
};
use stressdetect_core::{DeviceKind, Error};

fn matrix(rows: &[Vec<f64>], labels: &[u8]) -> FeatureMatrix {
    let p = rows[0].len();
    let schema = FeatureSchema::new((0..p).map(|j| (format!("f{j}"), FeatureSource::HeartRate)).collect()).unwrap();
    FeatureMatrix {
        schema,
        rows: rows
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (r, &l))| FeatureVector {
                subject_id: "S01".into(),
                window_start_s: i as f64,
                window_end_s: i as f64 + 60.0,
                values: r.clone(),
                label: l,
            })
            .collect(),
        scenario: Scenario::AllStressors,
        device: DeviceKind::PolarH10,
    }
}

/// Two Gaussian blobs centered at (-2,-2) and (2,2) with unit spread.
fn blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let l = (i % 2) as u8;
        let c = if l == 1 { 2.0 } else { -2.0 };
        let mut r = || -> f64 { StandardNormal.sample(&mut rng) };
        rows.push(vec![c + 0.5 * r(), c + 0.5 * r()]);
        labels.push(l);
    }
    (rows, labels)
}

fn decisions(m: &stressdetect_core::models::TrainedModel, rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().map(|r| m.decision_value(r).unwrap()).collect()
}

#[test]
fn svm_separates_blobs() {
    let (rows, labels) = blobs(40, 1);
    let model = svm_fit(&matrix(&rows, &labels), &SvmConfig::default()).unwrap();
    let d = decisions(&model, &rows);
    let correct = d.iter().zip(&labels).filter(|(d, &l)| (**d > 0.0) == (l == 1)).count();
    assert_eq!(correct, 40);
    let p = model.predict_proba_rows(&rows).unwrap();
    assert_eq!(auroc(&p, &labels).unwrap(), 1.0);
    assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    // a point deep inside class 1
    assert!(model.predict_proba_row(&[3.0, 3.0]).unwrap() > 0.5);
}

#[test]
fn svm_rejects_single_class() {
    let (rows, _) = blobs(10, 2);
    assert_eq!(svm_fit(&matrix(&rows, &[1; 10]), &SvmConfig::default()).unwrap_err(), Error::SingleClassTraining);
}

#[test]
fn duplicated_rows_with_halved_c_give_the_same_decision_function() {
    let (rows, labels) = blobs(40, 3);
    let tight = SvmConfig { tol: 1e-12, c: 2.0, gamma: 0.5, ..SvmConfig::default() };
    let once = svm_fit(&matrix(&rows, &labels), &tight).unwrap();
    let (mut rows2, mut labels2) = (rows.clone(), labels.clone());
    rows2.extend(rows.iter().cloned());
    labels2.extend(labels.iter().copied());
    let twice = svm_fit(&matrix(&rows2, &labels2), &SvmConfig { c: 1.0, ..tight }).unwrap();
    let grid: Vec<Vec<f64>> =
        (0..11).flat_map(|i| (0..11).map(move |j| vec![-3.0 + 0.6 * i as f64, -3.0 + 0.6 * j as f64])).collect();
    for (a, b) in decisions(&once, &grid).iter().zip(decisions(&twice, &grid)) {
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }
}

#[test]
fn calibration_is_monotone_and_centered() {
    let (rows, labels) = blobs(60, 4);
    let model = svm_fit(&matrix(&rows, &labels), &SvmConfig { gamma: 0.1, ..SvmConfig::default() }).unwrap();
    let ModelParams::SvmRbf(params) = &model.params else { panic!("svm expected") };
    assert!(params.platt.a < 0.0);
    let mut pairs: Vec<(f64, f64)> =
        rows.iter().map(|r| (model.decision_value(r).unwrap(), model.predict_proba_row(r).unwrap())).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    let at_zero = platt_probability(0.0, &params.platt);
    assert_eq!(at_zero, 1.0 / (1.0 + params.platt.b.exp()));
    assert!((at_zero - 0.5).abs() < 0.2, "{at_zero}");
}

#[test]
fn dual_solution_is_feasible() {
    let (rows, labels) = blobs(50, 5);
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let n = rows.len();
    let k: Vec<f64> = (0..n * n).map(|ij| rbf_kernel(&rows[ij / n], &rows[ij % n], 0.3)).collect();
    let c = 0.7;
    let sol = smo_solve(&k, &y, c, 1e-6, 100_000).unwrap();
    assert!(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
    let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
    assert!(balance.abs() <= 1e-6, "{balance}");
    assert!(sol.gap < 1e-6);
}

#[test]
fn rbf_kernel_matrix_is_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pts: Vec<Vec<f64>> = (0..40).map(|_| (0..5).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let k = DMatrix::from_fn(40, 40, |i, j| rbf_kernel(&pts[i], &pts[j], 0.2));
    assert_eq!(k, k.transpose());
    let eig = k.symmetric_eigen();
    assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-8));
}

#[test]
fn stored_standardization_is_applied_at_predict_time() {
    let (rows, labels) = blobs(30, 7);
    let shifted: Vec<Vec<f64>> = rows.iter().map(|r| vec![100.0 + 10.0 * r[0], -5.0 + 0.1 * r[1]]).collect();
    let model = svm_fit(&matrix(&shifted, &labels), &SvmConfig::default()).unwrap();
    let ModelParams::SvmRbf(params) = &model.params else { panic!("svm expected") };
    for r in &shifted {
        let z = model.norm_stats.apply(r);
        assert_eq!(model.decision_value(r).unwrap(), params.decision_value(&z));
    }
}

#[test]
fn schema_mismatch_is_reported() {
    let (rows, labels) = blobs(20, 8);
    let model = svm_fit(&matrix(&rows, &labels), &SvmConfig::default()).unwrap();
    assert!(matches!(model.predict_proba_row(&[0.0, 0.0, 0.0]), Err(Error::SchemaMismatch(_))));
    let wider: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0], r[1], 0.0]).collect();
    assert!(matches!(model.predict_proba(&matrix(&wider, &labels)), Err(Error::SchemaMismatch(_))));
}

#[test]
fn forest_fits_threshold_data_per_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<Vec<f64>> =
        (0..60).map(|i| vec![if i % 2 == 0 { rng.random_range(0.0..1.0) } else { rng.random_range(2.0..3.0) }]).collect();
    let labels: Vec<u8> = (0..60).map(|i| (i % 2) as u8).collect();
    let model = rf_fit(&matrix(&rows, &labels), &RfConfig { n_trees: 25, ..RfConfig::default() }).unwrap();
    let ModelParams::RandomForest(forest) = &model.params else { panic!("forest expected") };
    for tree in &forest.trees {
        for (r, &l) in rows.iter().zip(&labels) {
            let p = tree.leaf_fraction(&model.norm_stats.apply(r));
            assert_eq!(p, l as f64);
        }
    }
}

#[test]
fn forest_is_seed_deterministic() {
    let (rows, labels) = blobs(60, 10);
    let m = matrix(&rows, &labels);
    let cfg = RfConfig { n_trees: 10, seed: 3, ..RfConfig::default() };
    assert_eq!(rf_fit(&m, &cfg).unwrap(), rf_fit(&m, &cfg).unwrap());
    assert_ne!(rf_fit(&m, &cfg).unwrap(), rf_fit(&m, &RfConfig { seed: 4, ..cfg }).unwrap());
}

#[test]
fn forest_mean_ignores_tree_order() {
    let (rows, labels) = blobs(80, 11);
    let model = rf_fit(&matrix(&rows, &labels), &RfConfig { n_trees: 30, ..RfConfig::default() }).unwrap();
    let ModelParams::RandomForest(forest) = &model.params else { panic!("forest expected") };
    let mut shuffled = forest.clone();
    shuffled.trees.reverse();
    shuffled.trees.swap(0, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let z = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        assert_eq!(forest.predict_proba(&z), shuffled.predict_proba(&z));
    }
}

#[test]
fn forest_probability_is_mean_of_leaf_fractions() {
    let tree = |p: f64| Tree { nodes: vec![TreeNode::Leaf(p)] };
    assert_eq!(Forest { trees: vec![tree(0.2), tree(0.6)] }.predict_proba(&[0.0]), 0.4);
    assert_eq!(Forest { trees: vec![tree(1.0); 5] }.predict_proba(&[0.0]), 1.0);
    let split = Tree {
        nodes: vec![
            TreeNode::Split { feature: 0, threshold: 0.5, left: 1, right: 2 },
            TreeNode::Leaf(0.25),
            TreeNode::Leaf(0.75),
        ],
    };
    let same = Forest { trees: vec![split.clone(); 4] };
    assert_eq!(same.predict_proba(&[0.1]), split.leaf_fraction(&[0.1]));
    assert_eq!(same.predict_proba(&[0.9]), 0.75);
}

/// Exhaustive CART: at every node try every feature and every midpoint,
/// keep the split with the lowest weighted Gini (ties to the lower feature,
/// then the lower threshold), and recurse until pure.
fn reference_cart(rows: &[Vec<f64>], labels: &[u8], idx: &[usize], x: &[f64]) -> f64 {
    let pos = idx.iter().filter(|&&i| labels[i] == 1).count();
    if pos == 0 || pos == idx.len() {
        return pos as f64 / idx.len() as f64;
    }
    let gini = |set: &[usize]| {
        let n = set.len() as f64;
        let p1 = set.iter().filter(|&&i| labels[i] == 1).count() as f64 / n;
        n * (1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1))
    };
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..rows[0].len() {
        let mut vals: Vec<f64> = idx.iter().map(|&i| rows[i][f]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let thr = w[0] + (w[1] - w[0]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][f] <= thr);
            let score = gini(&l) + gini(&r);
            if best.is_none_or(|(s, _, _)| score < s - 1e-12) {
                best = Some((score, f, thr));
            }
        }
    }
    let (_, f, thr) = best.expect("impure node with distinct rows has a split");
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][f] <= thr);
    if x[f] <= thr {
        reference_cart(rows, labels, &l, x)
    } else {
        reference_cart(rows, labels, &r, x)
    }
}

#[test]
fn single_tree_matches_reference_cart() {
    for seed in 0..20 {
        single_tree_fixture(seed);
    }
}

fn single_tree_fixture(seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < 20 {
        let r: Vec<f64> = (0..3).map(|_| rng.random_range(0..10) as f64).collect();
        if !rows.contains(&r) {
            rows.push(r);
        }
    }
    let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + 2.0 * r[1] - r[2] > 8.0 + rng.random_range(-2.0..2.0))).collect();
    let cfg = RfConfig { n_trees: 1, bootstrap: false, features_per_split: Some(3), ..RfConfig::default() };
    let model = rf_fit(&matrix(&rows, &labels), &cfg).unwrap();
    let z: Vec<Vec<f64>> = rows.iter().map(|r| model.norm_stats.apply(r)).collect();
    let all: Vec<usize> = (0..20).collect();
    let probes: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| rng.random_range(-0.5..9.5)).collect()).collect();
    for p in probes.iter().chain(&rows) {
        let expected = reference_cart(&z, &labels, &all, &model.norm_stats.apply(p));
        assert_eq!(model.predict_proba_row(p).unwrap(), expected, "seed {seed} probe {p:?}");
    }
}
