//! CART trees over presorted feature orders.
//!
//! Rows carry integer weights (bootstrap multiplicities), so a bootstrap
//! sample never materialises duplicated rows. Each node owns the same
//! `[start, end)` window in every per-feature order; splitting stably
//! partitions every window, which keeps the orders sorted without re-sorting.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features drawn per node; `None` means all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

/// Training targets for a tree.
#[derive(Debug, Clone, Copy)]
pub enum TreeTarget<'a> {
    Regression(&'a [f64]),
    Classification { labels: &'a [u32], n_classes: usize },
}

impl TreeTarget<'_> {
    fn len(&self) -> usize {
        match self {
            TreeTarget::Regression(y) => y.len(),
            TreeTarget::Classification { labels, .. } => labels.len(),
        }
    }

    fn n_classes(&self) -> usize {
        match self {
            TreeTarget::Regression(_) => 0,
            TreeTarget::Classification { n_classes, .. } => *n_classes,
        }
    }
}

/// Column-major copy of a design matrix plus each column's row order.
/// Built once and shared by every tree fitted on the same rows.
#[derive(Debug, Clone)]
pub struct ColumnStore {
    n_rows: usize,
    columns: Vec<Vec<f64>>,
    orders: Vec<Vec<u32>>,
}

impl ColumnStore {
    pub fn new(x: &Matrix) -> Self {
        let n = x.nrows();
        let columns: Vec<Vec<f64>> = (0..x.ncols()).map(|j| x.column(j)).collect();
        let orders = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        ColumnStore {
            n_rows: n,
            columns,
            orders,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }
}

/// Relative margin below which two split proxies count as equal.
const TIE_TOLERANCE: f64 = 1e-12;

/// Compact node: `feature == LEAF` marks a leaf whose `index` is its leaf
/// ordinal and `value` its output; otherwise `value` is the split threshold
/// and `index` the left child (the right child is `index + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Node {
    feature: u32,
    index: u32,
    value: f64,
}

/// Borrowed view of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode<'a> {
    Internal {
        feature: usize,
        split_threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Mean target (regression) or majority class (classification).
        value: f64,
        /// Weighted number of training samples in the leaf.
        samples: u32,
        /// Weighted per-class counts; empty for regression.
        class_counts: &'a [u32],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    n_features: usize,
    n_classes: usize,
    leaf_samples: Vec<u32>,
    leaf_class_counts: Vec<u32>,
}

impl Tree {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_samples.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            let n = t.nodes[i];
            if n.feature == LEAF {
                0
            } else {
                1 + walk(t, n.index as usize).max(walk(t, n.index as usize + 1))
            }
        }
        walk(self, 0)
    }

    pub fn node(&self, id: usize) -> TreeNode<'_> {
        let n = self.nodes[id];
        if n.feature == LEAF {
            let leaf = n.index as usize;
            let k = self.n_classes;
            TreeNode::Leaf {
                value: n.value,
                samples: self.leaf_samples[leaf],
                class_counts: &self.leaf_class_counts[leaf * k..(leaf + 1) * k],
            }
        } else {
            TreeNode::Internal {
                feature: n.feature as usize,
                split_threshold: n.value,
                left: n.index as usize,
                right: n.index as usize + 1,
            }
        }
    }

    #[inline]
    fn leaf_node(&self, row: &[f64]) -> Node {
        let mut n = self.nodes[0];
        while n.feature != LEAF {
            let next = if row[n.feature as usize] <= n.value {
                n.index
            } else {
                n.index + 1
            };
            n = self.nodes[next as usize];
        }
        n
    }

    /// Leaf output for one row: mean target or majority class.
    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.leaf_node(row).value
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_width(self.n_features)?;
        Ok(x.rows_iter().map(|r| self.predict_row(r)).collect())
    }
}

/// Fits a single tree on all rows of `x` with unit weights.
pub fn fit_tree(x: &Matrix, target: TreeTarget<'_>, params: &TreeParams, seed: u64) -> Result<Tree> {
    check_inputs(x, &target)?;
    let store = ColumnStore::new(x);
    let weights = vec![1u32; x.nrows()];
    Ok(grow(&store, target, &weights, params, &mut crate::seed::rng(seed)))
}

pub(crate) fn check_inputs(x: &Matrix, target: &TreeTarget<'_>) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::EmptyDataset("no training rows".into()));
    }
    if target.len() != x.nrows() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: target.len(),
        });
    }
    if let TreeTarget::Classification { labels, n_classes } = target {
        if *n_classes < 2 {
            return Err(Error::InvalidArgument("need at least two classes".into()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= *n_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} outside 0..{n_classes}"
            )));
        }
    }
    Ok(())
}

/// Running statistics of one side of a candidate split.
#[derive(Clone)]
struct Acc {
    weight: f64,
    sum: f64,
    counts: Vec<f64>,
}

impl Acc {
    fn new(n_classes: usize) -> Self {
        Acc {
            weight: 0.0,
            sum: 0.0,
            counts: vec![0.0; n_classes],
        }
    }

    fn clear(&mut self) {
        self.weight = 0.0;
        self.sum = 0.0;
        self.counts.iter_mut().for_each(|c| *c = 0.0);
    }

    #[inline]
    fn add(&mut self, target: &TreeTarget<'_>, row: usize, w: f64) {
        self.weight += w;
        match target {
            TreeTarget::Regression(y) => self.sum += w * y[row],
            TreeTarget::Classification { labels, .. } => self.counts[labels[row] as usize] += w,
        }
    }

    fn sub_from(&self, total: &Acc, out: &mut Acc) {
        out.weight = total.weight - self.weight;
        out.sum = total.sum - self.sum;
        for (o, (t, s)) in out.counts.iter_mut().zip(total.counts.iter().zip(&self.counts)) {
            *o = t - s;
        }
    }

    /// Split proxy: larger is better. Regression: `sum²/w` (SSE reduction);
    /// classification: `Σ c²/w` (weighted Gini reduction).
    #[inline]
    fn proxy(&self, regression: bool) -> f64 {
        if regression {
            self.sum * self.sum / self.weight
        } else {
            self.counts.iter().map(|c| c * c).sum::<f64>() / self.weight
        }
    }
}

struct Builder<'a> {
    store: &'a ColumnStore,
    target: TreeTarget<'a>,
    weights: &'a [u32],
    params: &'a TreeParams,
    orders: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    feature_pool: Vec<usize>,
    nodes: Vec<Node>,
    leaf_samples: Vec<u32>,
    leaf_class_counts: Vec<u32>,
}

struct Split {
    feature: usize,
    threshold: f64,
    proxy: f64,
}

/// Grows a tree over the rows with positive weight.
pub(crate) fn grow(
    store: &ColumnStore,
    target: TreeTarget<'_>,
    weights: &[u32],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let d = store.n_features();
    let orders: Vec<Vec<u32>> = store
        .orders
        .iter()
        .map(|o| o.iter().copied().filter(|&r| weights[r as usize] > 0).collect())
        .collect();
    let m = orders.first().map_or_else(
        || weights.iter().filter(|&&w| w > 0).count(),
        Vec::len,
    );
    let mut b = Builder {
        store,
        target,
        weights,
        params,
        orders,
        goes_left: vec![false; store.n_rows()],
        scratch: Vec::with_capacity(m),
        feature_pool: (0..d).collect(),
        nodes: vec![Node {
            feature: LEAF,
            index: 0,
            value: 0.0,
        }],
        leaf_samples: Vec::new(),
        leaf_class_counts: Vec::new(),
    };
    // zero features: every row lands in the root leaf
    let root_rows: Vec<u32> = if d == 0 {
        (0..store.n_rows() as u32)
            .filter(|&r| weights[r as usize] > 0)
            .collect()
    } else {
        Vec::new()
    };
    let mut stack = vec![(0usize, 0usize, m, 0usize)];
    while let Some((id, start, end, depth)) = stack.pop() {
        let rows: &[u32] = if d == 0 {
            &root_rows
        } else {
            &b.orders[0][start..end]
        };
        let mut total = Acc::new(target.n_classes());
        for &r in rows {
            total.add(&target, r as usize, f64::from(weights[r as usize]));
        }
        let pure = is_pure(&target, rows, &total);
        let can_split = !pure
            && total.weight >= 2.0 * params.min_samples_leaf as f64
            && params.max_depth.is_none_or(|md| depth < md);
        let split = if can_split {
            b.find_split(start, end, &total, rng)
        } else {
            None
        };
        match split {
            Some(split) => {
                let mid = b.partition(start, end, &split);
                let left = b.nodes.len();
                b.nodes.push(Node { feature: LEAF, index: 0, value: 0.0 });
                b.nodes.push(Node { feature: LEAF, index: 0, value: 0.0 });
                b.nodes[id] = Node {
                    feature: split.feature as u32,
                    index: left as u32,
                    value: split.threshold,
                };
                // right first so the left subtree is laid out first
                stack.push((left + 1, mid, end, depth + 1));
                stack.push((left, start, mid, depth + 1));
            }
            None => b.make_leaf(id, &total),
        }
    }
    Tree {
        nodes: b.nodes,
        n_features: d,
        n_classes: target.n_classes(),
        leaf_samples: b.leaf_samples,
        leaf_class_counts: b.leaf_class_counts,
    }
}

fn is_pure(target: &TreeTarget<'_>, rows: &[u32], total: &Acc) -> bool {
    match target {
        TreeTarget::Regression(y) => {
            let first = y[rows[0] as usize];
            rows.iter().all(|&r| y[r as usize] == first)
        }
        TreeTarget::Classification { .. } => total.counts.contains(&total.weight),
    }
}

impl Builder<'_> {
    fn make_leaf(&mut self, id: usize, total: &Acc) {
        let leaf = self.leaf_samples.len() as u32;
        let value = match self.target {
            TreeTarget::Regression(_) => total.sum / total.weight,
            TreeTarget::Classification { .. } => {
                // ties go to the lowest class index
                let mut best = 0;
                for (k, &c) in total.counts.iter().enumerate() {
                    if c > total.counts[best] {
                        best = k;
                    }
                }
                best as f64
            }
        };
        self.leaf_samples.push(total.weight as u32);
        self.leaf_class_counts
            .extend(total.counts.iter().map(|&c| c as u32));
        self.nodes[id] = Node {
            feature: LEAF,
            index: leaf,
            value,
        };
    }

    fn find_split(&mut self, start: usize, end: usize, total: &Acc, rng: &mut ChaCha8Rng) -> Option<Split> {
        let d = self.store.n_features();
        if d == 0 {
            return None;
        }
        let quota = self.params.max_features.unwrap_or(d).clamp(1, d);
        let regression = matches!(self.target, TreeTarget::Regression(_));
        let min_leaf = self.params.min_samples_leaf.max(1) as f64;
        let mut best: Option<Split> = None;
        let mut left = Acc::new(total.counts.len());
        let mut right = Acc::new(total.counts.len());

        // Partial Fisher-Yates over the feature pool. Constant features do not
        // use up the quota, and drawing continues past the quota until some
        // valid split exists.
        let mut visited = 0;
        let mut drawn = 0;
        while drawn < d && (visited < quota || best.is_none()) {
            let pick = if quota >= d { drawn } else { rng.gen_range(drawn..d) };
            self.feature_pool.swap(drawn, pick);
            let f = self.feature_pool[drawn];
            drawn += 1;

            let order = &self.orders[f][start..end];
            let col = &self.store.columns[f];
            if col[order[0] as usize] == col[order[order.len() - 1] as usize] {
                continue;
            }
            visited += 1;
            left.clear();
            for i in 0..order.len() - 1 {
                let r = order[i] as usize;
                left.add(&self.target, r, f64::from(self.weights[r]));
                let v = col[r];
                let next = col[order[i + 1] as usize];
                if v == next || left.weight < min_leaf {
                    continue;
                }
                if total.weight - left.weight < min_leaf {
                    break;
                }
                left.sub_from(total, &mut right);
                let proxy = left.proxy(regression) + right.proxy(regression);
                // proxies equal up to rounding count as ties, so the first
                // candidate in scan order wins
                if best.as_ref().is_none_or(|b| proxy > b.proxy + TIE_TOLERANCE * b.proxy.abs()) {
                    let mut threshold = 0.5 * (v + next);
                    if threshold == next || !threshold.is_finite() {
                        threshold = v;
                    }
                    best = Some(Split {
                        feature: f,
                        threshold,
                        proxy,
                    });
                }
            }
        }
        // restore the pool so feature draws depend only on the rng stream
        if quota < d {
            self.feature_pool.sort_unstable();
        }
        best
    }

    /// Stable partition of every feature window; returns the boundary.
    fn partition(&mut self, start: usize, end: usize, split: &Split) -> usize {
        let col = &self.store.columns[split.feature];
        for &r in &self.orders[split.feature][start..end] {
            self.goes_left[r as usize] = col[r as usize] <= split.threshold;
        }
        let mut mid = start;
        for order in &mut self.orders {
            let window = &mut order[start..end];
            self.scratch.clear();
            let mut w = 0;
            for i in 0..window.len() {
                let r = window[i];
                if self.goes_left[r as usize] {
                    window[w] = r;
                    w += 1;
                } else {
                    self.scratch.push(r);
                }
            }
            window[w..].copy_from_slice(&self.scratch);
            mid = start + w;
        }
        mid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn reg(x: &Matrix, y: &[f64], params: &TreeParams) -> Tree {
        fit_tree(x, TreeTarget::Regression(y), params, 0).unwrap()
    }

    #[test]
    fn separable_pair_splits_at_midpoint() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let t = fit_tree(
            &x,
            TreeTarget::Classification { labels: &[0, 1], n_classes: 2 },
            &TreeParams::default(),
            0,
        )
        .unwrap();
        assert_eq!(t.n_nodes(), 3);
        assert_eq!(
            t.node(0),
            TreeNode::Internal { feature: 0, split_threshold: 0.5, left: 1, right: 2 }
        );
        assert!(matches!(t.node(1), TreeNode::Leaf { value, class_counts: [1, 0], .. } if value == 0.0));
        assert!(matches!(t.node(2), TreeNode::Leaf { value, class_counts: [0, 1], .. } if value == 1.0));
    }

    #[test]
    fn constant_target_gives_single_leaf() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [5.0]]).unwrap();
        let t = reg(&x, &[2.5, 2.5, 2.5], &TreeParams::default());
        assert_eq!(t.n_nodes(), 1);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict(&x).unwrap(), vec![2.5; 3]);
    }

    #[test]
    fn staircase_is_fitted_exactly() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let y: Vec<f64> = xs.iter().map(|&v| f64::from(u8::from(v > 0.3))).collect();
        let x = Matrix::column_vector(&xs);
        let t = reg(&x, &y, &TreeParams::default());
        let pred = t.predict(&x).unwrap();
        let mse: f64 = pred.iter().zip(&y).map(|(p, v)| (p - v).powi(2)).sum::<f64>() / 100.0;
        assert_eq!(mse, 0.0);
        // a single split suffices, and it sits between the last 0 and first 1
        assert_eq!(t.n_nodes(), 3);
        let TreeNode::Internal { split_threshold, .. } = t.node(0) else { panic!() };
        let last_zero = xs.iter().copied().filter(|&v| v <= 0.3).fold(0.0, f64::max);
        let first_one = xs.iter().copied().filter(|&v| v > 0.3).fold(1.0, f64::min);
        assert_eq!(split_threshold, 0.5 * (last_zero + first_one));
    }

    #[test]
    fn depth_and_leaf_limits_hold() {
        let mut rng = crate::seed::rng(9);
        let rows: Vec<[f64; 3]> = (0..300).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 3.0 + r[1].sin() + rng.gen::<f64>()).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let params = TreeParams { max_depth: Some(4), min_samples_leaf: 7, max_features: None };
        let t = reg(&x, &y, &params);
        assert!(t.depth() <= 4);
        for id in 0..t.n_nodes() {
            if let TreeNode::Leaf { samples, .. } = t.node(id) {
                assert!(samples >= 7);
            }
        }
    }

    #[test]
    fn classification_leaf_counts_respect_min_leaf() {
        let mut rng = crate::seed::rng(2);
        let rows: Vec<[f64; 2]> = (0..200).map(|_| [rng.gen(), rng.gen()]).collect();
        let labels: Vec<u32> = rows.iter().map(|r| u32::from(r[0] + 0.3 * r[1] > 0.6)).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let params = TreeParams { max_depth: None, min_samples_leaf: 5, max_features: Some(1) };
        let t = fit_tree(&x, TreeTarget::Classification { labels: &labels, n_classes: 2 }, &params, 4).unwrap();
        for id in 0..t.n_nodes() {
            if let TreeNode::Leaf { class_counts, samples, .. } = t.node(id) {
                assert!(class_counts.iter().sum::<u32>() >= 5);
                assert_eq!(class_counts.iter().sum::<u32>(), samples);
            }
        }
    }

    #[test]
    fn leaf_tie_votes_class_zero() {
        // identical features, one of each class: no split possible
        let x = Matrix::from_rows(&[[1.0], [1.0]]).unwrap();
        let t = fit_tree(
            &x,
            TreeTarget::Classification { labels: &[1, 0], n_classes: 2 },
            &TreeParams::default(),
            0,
        )
        .unwrap();
        assert_eq!(t.predict_row(&[1.0]), 0.0);
    }

    #[test]
    fn zero_feature_matrix_predicts_mean() {
        let x = Matrix::zeros(4, 0);
        let t = reg(&x, &[1.0, 2.0, 3.0, 6.0], &TreeParams::default());
        assert_eq!(t.predict(&x).unwrap(), vec![3.0; 4]);
    }

    #[test]
    fn invalid_labels_rejected() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let r = fit_tree(&x, TreeTarget::Classification { labels: &[0, 2], n_classes: 2 }, &TreeParams::default(), 0);
        assert!(r.is_err());
    }

    #[test]
    fn width_mismatch_on_predict() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let t = reg(&x, &[0.0, 1.0], &TreeParams::default());
        assert!(t.predict(&Matrix::zeros(1, 2)).is_err());
    }
}
