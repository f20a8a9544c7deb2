//! Depth-limited regression trees fitted by exact greedy search.
//!
//! Splits maximise the L2-regularised squared-error gain
//! `G_L²/(n_L+λ) + G_R²/(n_R+λ) − G²/(n+λ)` over every midpoint between
//! consecutive distinct feature values; with `λ = 0` this is plain variance
//! reduction. Leaves hold `Σ residual / (n + λ)`.

use serde::{Deserialize, Serialize};

/// Column-major feature storage shared by all boosting rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    columns: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    /// Every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n_features = rows.first().map_or(0, |r| r.as_ref().len());
        let mut columns = vec![Vec::with_capacity(rows.len()); n_features];
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), n_features, "ragged feature rows");
            for (c, &v) in columns.iter_mut().zip(r) {
                c.push(v);
            }
        }
        FeatureMatrix { n_rows: rows.len(), columns }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature][row]
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    /// Row indices of each column in ascending value order (ties by row).
    pub fn sorted_orders(&self) -> Vec<Vec<u32>> {
        self.columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..self.n_rows as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    /// Rows with `x[feature] < threshold` go left.
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    /// Leaf output; on internal nodes the output the node would have as a leaf.
    pub value: f64,
    /// Training rows that reached this node.
    pub cover: f64,
}

impl TreeNode {
    pub fn leaf(value: f64, cover: f64) -> Self {
        TreeNode { split: None, value, cover }
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

/// Binary tree in a flat array; node 0 is the root and children always sit
/// after their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

/// Best split found at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

impl RegressionTree {
    pub fn constant(value: f64, cover: f64) -> Self {
        RegressionTree { nodes: vec![TreeNode::leaf(value, cover)] }
    }

    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        while let Some(s) = self.nodes[i].split {
            i = if x[s.feature] < s.threshold { s.left } else { s.right };
        }
        i
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.nodes[self.leaf_index(x)].value
    }

    pub fn depth(&self) -> usize {
        fn go(t: &RegressionTree, i: usize) -> usize {
            match t.nodes[i].split {
                None => 0,
                Some(s) => 1 + go(t, s.left).max(go(t, s.right)),
            }
        }
        go(self, 0)
    }

    /// Features used by at least one split.
    pub fn used_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| n.split.map(|s| s.feature))
    }

    /// Structural checks applied to trees loaded from disk.
    pub fn validate(&self, n_features: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        let mut parents = vec![0usize; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if !n.value.is_finite() || !n.cover.is_finite() || n.cover < 0.0 {
                return Err(format!("node {i}: non-finite value or invalid cover"));
            }
            if let Some(s) = n.split {
                if s.feature >= n_features || !s.threshold.is_finite() {
                    return Err(format!("node {i}: bad split feature or threshold"));
                }
                for c in [s.left, s.right] {
                    if c <= i || c >= self.nodes.len() {
                        return Err(format!("node {i}: child {c} out of order"));
                    }
                    parents[c] += 1;
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&p| p != 1) {
            return Err("nodes do not form a single binary tree".into());
        }
        Ok(())
    }

    /// Fit to `residuals` using precomputed per-feature sort orders.
    /// Returns the tree and the leaf each training row landed in.
    pub fn fit_presorted(
        x: &FeatureMatrix,
        sorted: &[Vec<u32>],
        residuals: &[f64],
        params: &TreeParams,
    ) -> (Self, Vec<u32>) {
        let n = x.n_rows();
        assert_eq!(residuals.len(), n);
        let mut builder =
            Builder { x, residuals, params, nodes: Vec::new(), row_leaf: vec![0; n], go_left: vec![false; n] };
        builder.grow(sorted.to_vec(), 0);
        (RegressionTree { nodes: builder.nodes }, builder.row_leaf)
    }

    pub fn fit(x: &FeatureMatrix, residuals: &[f64], params: &TreeParams) -> Self {
        Self::fit_presorted(x, &x.sorted_orders(), residuals, params).0
    }
}

/// Highest-gain split over `rows` (given per feature in ascending order).
/// Ties keep the lowest feature index, then the lowest threshold.
pub fn best_split(
    x: &FeatureMatrix,
    sorted_rows: &[Vec<u32>],
    residuals: &[f64],
    params: &TreeParams,
) -> Option<SplitCandidate> {
    let n = sorted_rows.first().map_or(0, Vec::len);
    if n < 2 * params.min_samples_leaf.max(1) {
        return None;
    }
    let lambda = params.l2;
    let g_total: f64 = sorted_rows[0].iter().map(|&r| residuals[r as usize]).sum();
    let parent_score = g_total * g_total / (n as f64 + lambda);
    // Gains closer than this count as tied; equal sums in a different order
    // must not let a later candidate win on rounding alone.
    let tie = 1e-12 * (1.0 + parent_score.abs());
    let mut best: Option<SplitCandidate> = None;
    for (f, rows) in sorted_rows.iter().enumerate() {
        let col = x.column(f);
        let mut g_left = 0.0;
        for i in 0..n - 1 {
            let r = rows[i] as usize;
            g_left += residuals[r];
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < params.min_samples_leaf || n_right < params.min_samples_leaf {
                continue;
            }
            let (v, v_next) = (col[r], col[rows[i + 1] as usize]);
            if v >= v_next {
                continue;
            }
            let g_right = g_total - g_left;
            let gain = g_left * g_left / (n_left as f64 + lambda) + g_right * g_right / (n_right as f64 + lambda)
                - parent_score;
            if best.is_none_or(|b| gain > b.gain + tie) {
                let mid = 0.5 * (v + v_next);
                let threshold = if mid > v { mid } else { v_next };
                best = Some(SplitCandidate { feature: f, threshold, gain });
            }
        }
    }
    best.filter(|b| b.gain > tie)
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    residuals: &'a [f64],
    params: &'a TreeParams,
    nodes: Vec<TreeNode>,
    row_leaf: Vec<u32>,
    go_left: Vec<bool>,
}

impl Builder<'_> {
    fn grow(&mut self, sorted_rows: Vec<Vec<u32>>, depth: usize) -> usize {
        let rows = &sorted_rows[0];
        let n = rows.len();
        let g: f64 = rows.iter().map(|&r| self.residuals[r as usize]).sum();
        let value = g / (n as f64 + self.params.l2);
        let index = self.nodes.len();
        self.nodes.push(TreeNode::leaf(value, n as f64));

        let split = if depth < self.params.max_depth {
            best_split(self.x, &sorted_rows, self.residuals, self.params)
        } else {
            None
        };
        let Some(split) = split else {
            for &r in rows {
                self.row_leaf[r as usize] = index as u32;
            }
            return index;
        };

        let col = self.x.column(split.feature);
        for &r in rows {
            self.go_left[r as usize] = col[r as usize] < split.threshold;
        }
        let (mut left, mut right) = (Vec::with_capacity(sorted_rows.len()), Vec::with_capacity(sorted_rows.len()));
        for list in &sorted_rows {
            let (l, r): (Vec<u32>, Vec<u32>) = list.iter().partition(|&&r| self.go_left[r as usize]);
            left.push(l);
            right.push(r);
        }
        drop(sorted_rows);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[index].split = Some(Split { feature: split.feature, threshold: split.threshold, left: l, right: r });
        index
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(depth: usize, min_leaf: usize, l2: f64) -> TreeParams {
        TreeParams { max_depth: depth, min_samples_leaf: min_leaf, l2 }
    }

    #[test]
    fn stump_on_separable_rows() {
        let x = FeatureMatrix::from_rows(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [4.0, 5.0]]);
        let y = [0.0, 0.0, 10.0, 10.0];
        let t = RegressionTree::fit(&x, &y, &params(1, 1, 0.0));
        assert_eq!(t.nodes.len(), 3);
        let s = t.nodes[0].split.unwrap();
        assert_eq!((s.feature, s.threshold), (0, 2.5));
        assert_eq!(t.predict(&[1.5, 0.0]), 0.0);
        assert_eq!(t.predict(&[3.5, 0.0]), 10.0);
        assert_eq!(t.nodes[0].cover, t.nodes[s.left].cover + t.nodes[s.right].cover);
    }

    #[test]
    fn constant_residuals_give_single_leaf() {
        let x = FeatureMatrix::from_rows(&[[1.0], [2.0], [3.0]]);
        let t = RegressionTree::fit(&x, &[0.0; 3], &params(4, 1, 1.0));
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].value, 0.0);
    }

    #[test]
    fn l2_shrinks_leaves() {
        let x = FeatureMatrix::from_rows(&[[1.0], [1.0]]);
        let t = RegressionTree::fit(&x, &[3.0, 5.0], &params(2, 1, 2.0));
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].value, 2.0);
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let rows: Vec<[f64; 1]> = (0..10).map(|i| [i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i == 0 { 100.0 } else { 0.0 }).collect();
        let x = FeatureMatrix::from_rows(&rows);
        let t = RegressionTree::fit(&x, &y, &params(3, 3, 0.0));
        for n in t.nodes.iter().filter(|n| n.is_leaf()) {
            assert!(n.cover >= 3.0);
        }
        t.validate(1).unwrap();
    }

    #[test]
    fn exact_fit_with_deep_tree() {
        let rows = [[0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [2.0, 3.0], [5.0, 2.0], [7.0, 7.0]];
        let y = [3.0, -1.0, 4.0, 1.5, 9.0, -2.6];
        let x = FeatureMatrix::from_rows(&rows);
        let t = RegressionTree::fit(&x, &y, &params(8, 1, 0.0));
        for (r, &target) in rows.iter().zip(&y) {
            assert_eq!(t.predict(r), target);
        }
    }

    #[test]
    fn validate_catches_bad_structure() {
        let mut t = RegressionTree::constant(1.0, 1.0);
        t.nodes[0].split = Some(Split { feature: 0, threshold: 0.0, left: 0, right: 0 });
        assert!(t.validate(1).is_err());
        let t = RegressionTree {
            nodes: vec![
                TreeNode {
                    split: Some(Split { feature: 2, threshold: 0.0, left: 1, right: 2 }),
                    value: 0.0,
                    cover: 2.0,
                },
                TreeNode::leaf(0.0, 1.0),
                TreeNode::leaf(0.0, 1.0),
            ],
        };
        assert!(t.validate(2).is_err());
        assert!(t.validate(3).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let rows = [[0.1, 1.0], [1.3, 0.0], [1.7, 1.0], [2.9, 3.0]];
        let x = FeatureMatrix::from_rows(&rows);
        let t = RegressionTree::fit(&x, &[0.3, 1.0 / 3.0, 2.0, 7.1], &params(3, 1, 0.7));
        let back: RegressionTree = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(t, back);
    }
}
