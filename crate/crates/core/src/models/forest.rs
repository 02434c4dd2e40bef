use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{prepare, ModelParams, TrainedModel};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// `None` means `floor(sqrt(n_features))`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
    /// Draw a bootstrap sample per tree; disabling it trains every tree on
    /// the full training set.
    pub bootstrap: bool,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig { n_trees: 100, max_depth: None, min_leaf: 1, features_per_split: None, seed: 0, bootstrap: true }
    }
}

impl RfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.min_leaf == 0 || self.features_per_split == Some(0) {
            return Err(Error::InvalidConfig(alloc::format!("invalid random forest configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Fraction of class-1 training samples reaching the leaf.
    Leaf(f64),
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Binary decision tree stored as a node array rooted at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf_fraction(&self, z: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf(p) => return p,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if z[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Mean over trees of the class-1 fraction at the row's leaf. Fractions
    /// are summed in sorted order so the result ignores tree order exactly.
    pub fn predict_proba(&self, z: &[f64]) -> f64 {
        let mut leaves: Vec<f64> = self.trees.iter().map(|t| t.leaf_fraction(z)).collect();
        leaves.sort_by(f64::total_cmp);
        leaves.iter().sum::<f64>() / leaves.len() as f64
    }
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    mtry: usize,
    min_leaf: usize,
    max_depth: Option<usize>,
    nodes: Vec<TreeNode>,
    order: Vec<usize>,
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl BestSplit {
    fn improves_on(&self, other: &Option<BestSplit>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.score > o.score
                    || (self.score == o.score
                        && (self.feature, self.threshold).partial_cmp(&(o.feature, o.threshold))
                            == Some(core::cmp::Ordering::Less))
            }
        }
    }
}

/// `c0^2/n + c1^2/n` summed over both children; maximizing it minimizes the
/// sample-weighted Gini impurity of the split.
pub(crate) fn split_score(left: [usize; 2], right: [usize; 2]) -> f64 {
    let side = |c: [usize; 2]| {
        let (a, b) = (c[0] as f64, c[1] as f64);
        (a * a + b * b) / (a + b)
    };
    side(left) + side(right)
}

impl Grower<'_> {
    fn leaf(&mut self, samples: &[usize]) -> usize {
        let pos = samples.iter().filter(|&&s| self.y[s] == 1).count();
        self.nodes.push(TreeNode::Leaf(pos as f64 / samples.len() as f64));
        self.nodes.len() - 1
    }

    fn best_split_on(&mut self, samples: &mut [usize], feature: usize, totals: [usize; 2]) -> (bool, Option<BestSplit>) {
        let x = self.x;
        samples.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
        let first = x[samples[0]][feature];
        let last = x[samples[samples.len() - 1]][feature];
        if first == last {
            return (false, None);
        }
        let mut left = [0usize; 2];
        let mut best: Option<BestSplit> = None;
        let n = samples.len();
        for k in 0..n - 1 {
            left[self.y[samples[k]] as usize] += 1;
            let (v, next) = (x[samples[k]][feature], x[samples[k + 1]][feature]);
            if v == next || k + 1 < self.min_leaf || n - k - 1 < self.min_leaf {
                continue;
            }
            let right = [totals[0] - left[0], totals[1] - left[1]];
            let mut threshold = v + (next - v) / 2.0;
            if threshold >= next {
                threshold = v;
            }
            let cand = BestSplit { score: split_score(left, right), feature, threshold };
            if cand.improves_on(&best) {
                best = Some(cand);
            }
        }
        (true, best)
    }

    fn grow(&mut self, samples: &mut [usize], depth: usize, rng: &mut ChaCha20Rng) -> usize {
        let mut totals = [0usize; 2];
        for &s in samples.iter() {
            totals[self.y[s] as usize] += 1;
        }
        let n = samples.len();
        let depth_capped = self.max_depth.is_some_and(|d| depth >= d);
        if totals[0] == 0 || totals[1] == 0 || n < 2 * self.min_leaf || depth_capped {
            return self.leaf(samples);
        }
        // Partial Fisher-Yates over feature indices: keep drawing until
        // `mtry` non-constant features have been examined or none remain.
        let p = self.order.len();
        let mut best: Option<BestSplit> = None;
        let mut informative = 0;
        for drawn in 0..p {
            if informative >= self.mtry {
                break;
            }
            let pick = rng.random_range(drawn..p);
            self.order.swap(drawn, pick);
            let feature = self.order[drawn];
            let (varies, cand) = self.best_split_on(samples, feature, totals);
            if varies {
                informative += 1;
            }
            if let Some(c) = cand {
                if c.improves_on(&best) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best else { return self.leaf(samples) };
        let x = self.x;
        samples.sort_by(|&a, &b| x[a][best.feature].total_cmp(&x[b][best.feature]).then(a.cmp(&b)));
        let cut = samples.partition_point(|&s| x[s][best.feature] <= best.threshold);
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf(0.0));
        let (l, r) = samples.split_at_mut(cut);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[at] = TreeNode::Split { feature: best.feature, threshold: best.threshold, left, right };
        at
    }
}

fn grow_tree(x: &[Vec<f64>], y: &[u8], config: &RfConfig, mtry: usize, tree_index: u64) -> Tree {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(tree_index);
    let n = x.len();
    let mut samples: Vec<usize> =
        if config.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
    let p = x[0].len();
    let mut g = Grower {
        x,
        y,
        mtry,
        min_leaf: config.min_leaf,
        max_depth: config.max_depth,
        nodes: Vec::new(),
        order: (0..p).collect(),
    };
    g.grow(&mut samples, 0, &mut rng);
    Tree { nodes: g.nodes }
}

/// Trains a random forest of CART trees with Gini splits on per-tree
/// bootstrap samples; tree `t` draws from ChaCha stream `t` of the seed.
pub fn rf_fit(matrix: &FeatureMatrix, config: &RfConfig) -> Result<TrainedModel> {
    config.validate()?;
    let (x, y, standardizer, meta) = prepare(matrix)?;
    let p = x[0].len();
    let mtry = config.features_per_split.unwrap_or_else(|| (libm::floor(libm::sqrt(p as f64)) as usize).max(1)).min(p);
    let trees = (0..config.n_trees).map(|t| grow_tree(&x, &y, config, mtry, t as u64)).collect();
    Ok(TrainedModel {
        schema: matrix.schema.clone(),
        norm_stats: standardizer,
        params: ModelParams::RandomForest(Forest { trees }),
        training_meta: meta,
    })
}
