//! Feature attributions for fitted fusion models.
//!
//! [`shap_values`] runs the polynomial-time path-dependent tree algorithm,
//! where an absent feature is integrated out by following both children
//! weighted by their training cover. [`brute_force_shap`] evaluates the same
//! game by enumerating every feature subset and exists to check the fast
//! path on small trees.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fusion::{r2_score, FusionModel, RegressionTree, Target};
use crate::ingest::{FeatureVector, FusionDataset, FEATURE_NAMES, N_FEATURES, TAG_OFFSET};

#[derive(Debug, Error)]
pub enum AttributionError {
    #[error("tree {tree} node {node}: cover metadata missing or inconsistent")]
    MissingCover { tree: usize, node: usize },
    #[error("no rows to explain")]
    EmptyRows,
    #[error("validation partition is empty")]
    EmptyValidation,
    #[error("validation R² undefined (zero-variance target)")]
    UndefinedR2,
    #[error("repeats must be positive")]
    ZeroRepeats,
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Additive explanation of one raw (unclamped) prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionVector {
    /// Expected raw score under the training cover distribution.
    pub base_value: f64,
    pub contributions: Vec<f64>,
}

impl AttributionVector {
    pub fn prediction(&self) -> f64 {
        self.base_value + self.contributions.iter().sum::<f64>()
    }
}

/// Positive covers, with each split's children summing to the parent.
pub fn check_covers(tree: &RegressionTree) -> Result<(), usize> {
    for (i, n) in tree.nodes.iter().enumerate() {
        if !(n.cover > 0.0 && n.cover.is_finite()) {
            return Err(i);
        }
        if let Some(s) = n.split {
            let children = tree.nodes[s.left].cover + tree.nodes[s.right].cover;
            if (children - n.cover).abs() > 1e-9 * n.cover {
                return Err(i);
            }
        }
    }
    Ok(())
}

fn check_model(model: &FusionModel, target: Target) -> Result<(), AttributionError> {
    for (t, tree) in model.target(target).trees.iter().enumerate() {
        check_covers(tree).map_err(|node| AttributionError::MissingCover { tree: t, node })?;
    }
    Ok(())
}

/// Cover-weighted mean output of a tree.
pub fn tree_expectation(tree: &RegressionTree) -> f64 {
    fn go(t: &RegressionTree, i: usize) -> f64 {
        let n = &t.nodes[i];
        match n.split {
            None => n.value,
            Some(s) => (t.nodes[s.left].cover * go(t, s.left) + t.nodes[s.right].cover * go(t, s.right)) / n.cover,
        }
    }
    go(tree, 0)
}

#[derive(Debug, Clone, Copy, Default)]
struct PathElement {
    feature: usize,
    zero_fraction: f64,
    one_fraction: f64,
    pweight: f64,
}

fn extend_path(path: &mut [PathElement], depth: usize, zero_fraction: f64, one_fraction: f64, feature: usize) {
    path[depth] = PathElement { feature, zero_fraction, one_fraction, pweight: if depth == 0 { 1.0 } else { 0.0 } };
    let d1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) as f64 / d1;
        path[i].pweight = zero_fraction * path[i].pweight * (depth - i) as f64 / d1;
    }
}

fn unwind_path(path: &mut [PathElement], depth: usize, index: usize) {
    let PathElement { zero_fraction, one_fraction, .. } = path[index];
    let d1 = (depth + 1) as f64;
    let mut next_one = path[depth].pweight;
    for i in (0..depth).rev() {
        if one_fraction != 0.0 {
            let tmp = path[i].pweight;
            path[i].pweight = next_one * d1 / ((i + 1) as f64 * one_fraction);
            next_one = tmp - path[i].pweight * zero_fraction * (depth - i) as f64 / d1;
        } else {
            path[i].pweight = path[i].pweight * d1 / (zero_fraction * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

fn unwound_path_sum(path: &[PathElement], depth: usize, index: usize) -> f64 {
    let PathElement { zero_fraction, one_fraction, .. } = path[index];
    let d1 = (depth + 1) as f64;
    let mut next_one = path[depth].pweight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one_fraction != 0.0 {
            let tmp = next_one * d1 / ((i + 1) as f64 * one_fraction);
            total += tmp;
            next_one = path[i].pweight - tmp * zero_fraction * (depth - i) as f64 / d1;
        } else if zero_fraction != 0.0 {
            total += path[i].pweight / zero_fraction / ((depth - i) as f64 / d1);
        }
    }
    total
}

struct Walker<'a> {
    tree: &'a RegressionTree,
    x: &'a [f64],
    phi: &'a mut [f64],
    scale: f64,
    /// Arena of per-level paths; a call at `start` owns `paths[start..]`
    /// until it returns.
    paths: Vec<PathElement>,
}

impl Walker<'_> {
    fn recurse(
        &mut self,
        node: usize,
        start: usize,
        mut depth: usize,
        zero_fraction: f64,
        one_fraction: f64,
        feature: usize,
    ) {
        extend_path(&mut self.paths[start..], depth, zero_fraction, one_fraction, feature);
        let n = &self.tree.nodes[node];
        let Some(split) = n.split else {
            let path = &self.paths[start..];
            for i in 1..=depth {
                let w = unwound_path_sum(path, depth, i);
                let el = path[i];
                self.phi[el.feature] += self.scale * w * (el.one_fraction - el.zero_fraction) * n.value;
            }
            return;
        };
        let (hot, cold) =
            if self.x[split.feature] < split.threshold { (split.left, split.right) } else { (split.right, split.left) };
        let (mut incoming_zero, mut incoming_one) = (1.0, 1.0);
        if let Some(k) = (1..=depth).find(|&k| self.paths[start + k].feature == split.feature) {
            incoming_zero = self.paths[start + k].zero_fraction;
            incoming_one = self.paths[start + k].one_fraction;
            unwind_path(&mut self.paths[start..], depth, k);
            depth -= 1;
        }
        let hot_zero = self.tree.nodes[hot].cover / n.cover;
        let cold_zero = self.tree.nodes[cold].cover / n.cover;
        let child = start + depth + 1;
        for (next, zero, one) in [(hot, hot_zero * incoming_zero, incoming_one), (cold, cold_zero * incoming_zero, 0.0)]
        {
            self.paths.copy_within(start..child, child);
            self.recurse(next, child, depth + 1, zero, one, split.feature);
        }
    }
}

/// Add `scale` times the tree's path-dependent Shapley values at `x` to `phi`.
fn accumulate_tree_shap(tree: &RegressionTree, x: &[f64], scale: f64, phi: &mut [f64], paths: &mut Vec<PathElement>) {
    let d = tree.depth() + 2;
    paths.clear();
    paths.resize(d * (d + 1) / 2 + 1, PathElement::default());
    let mut w = Walker { tree, x, phi, scale, paths: std::mem::take(paths) };
    // The root entry is a placeholder with no feature; its index is never read.
    w.recurse(0, 0, 0, 1.0, 1.0, usize::MAX);
    *paths = w.paths;
}

/// Path-dependent Shapley values of one tree at `x`. Covers must satisfy
/// [`check_covers`].
pub fn tree_shap(tree: &RegressionTree, x: &[f64]) -> Vec<f64> {
    let mut phi = vec![0.0; x.len()];
    accumulate_tree_shap(tree, x, 1.0, &mut phi, &mut Vec::new());
    phi
}

/// Cover-weighted conditional expectation of the tree output given only the
/// features in `known` (bitmask) take their values from `x`.
pub fn conditional_expectation(tree: &RegressionTree, x: &[f64], known: u64) -> f64 {
    fn go(t: &RegressionTree, i: usize, x: &[f64], known: u64) -> f64 {
        let n = &t.nodes[i];
        match n.split {
            None => n.value,
            Some(s) if known & (1 << s.feature) != 0 => {
                go(t, if x[s.feature] < s.threshold { s.left } else { s.right }, x, known)
            }
            Some(s) => {
                (t.nodes[s.left].cover * go(t, s.left, x, known) + t.nodes[s.right].cover * go(t, s.right, x, known))
                    / n.cover
            }
        }
    }
    go(tree, 0, x, known)
}

/// Shapley values by explicit enumeration of all `2^n` subsets.
pub fn brute_force_tree_shap(tree: &RegressionTree, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n < 20, "exhaustive enumeration only for small feature counts");
    let values: Vec<f64> = (0..1u64 << n).map(|s| conditional_expectation(tree, x, s)).collect();
    let mut factorial = vec![1.0f64; n + 1];
    for k in 1..=n {
        factorial[k] = factorial[k - 1] * k as f64;
    }
    (0..n)
        .map(|i| {
            let bit = 1u64 << i;
            (0..1u64 << n)
                .filter(|s| s & bit == 0)
                .map(|s| {
                    let k = s.count_ones() as usize;
                    factorial[k] * factorial[n - k - 1] / factorial[n]
                        * (values[(s | bit) as usize] - values[s as usize])
                })
                .sum()
        })
        .collect()
}

enum PerTree {
    Path,
    Exhaustive,
}

fn ensemble_attribution(model: &FusionModel, target: Target, x: &[f64], method: PerTree) -> AttributionVector {
    let m = model.target(target);
    let lr = model.hyperparams.learning_rate;
    let mut contributions = vec![0.0; x.len()];
    let mut paths = Vec::new();
    let mut expectation = 0.0;
    for tree in &m.trees {
        match method {
            PerTree::Path => accumulate_tree_shap(tree, x, 1.0, &mut contributions, &mut paths),
            PerTree::Exhaustive => {
                for (c, p) in contributions.iter_mut().zip(brute_force_tree_shap(tree, x)) {
                    *c += p;
                }
            }
        }
        expectation += tree_expectation(tree);
    }
    contributions.iter_mut().for_each(|c| *c *= lr);
    AttributionVector { base_value: m.base_score + lr * expectation, contributions }
}

/// Attribution of the raw score of `target` at `x`.
pub fn shap_values(
    model: &FusionModel,
    target: Target,
    x: &FeatureVector,
) -> Result<AttributionVector, AttributionError> {
    check_model(model, target)?;
    Ok(ensemble_attribution(model, target, &x.to_array(), PerTree::Path))
}

/// Exhaustive-subset counterpart of [`shap_values`].
pub fn brute_force_shap(
    model: &FusionModel,
    target: Target,
    x: &FeatureVector,
) -> Result<AttributionVector, AttributionError> {
    check_model(model, target)?;
    Ok(ensemble_attribution(model, target, &x.to_array(), PerTree::Exhaustive))
}

/// Mean absolute attribution per feature and the resulting ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalImportance {
    pub features: Vec<String>,
    pub mean_abs: Vec<f64>,
    /// Feature indices, most important first; ties keep feature order.
    pub ranking: Vec<usize>,
}

impl GlobalImportance {
    fn from_values(features: Vec<String>, mean_abs: Vec<f64>) -> Self {
        let mut ranking: Vec<usize> = (0..features.len()).collect();
        ranking.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]).then(a.cmp(&b)));
        GlobalImportance { features, mean_abs, ranking }
    }

    pub fn get(&self, feature: &str) -> Option<f64> {
        self.features.iter().position(|f| f == feature).map(|i| self.mean_abs[i])
    }

    /// 1-based rank of a feature.
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        let i = self.features.iter().position(|f| f == feature)?;
        self.ranking.iter().position(|&r| r == i).map(|p| p + 1)
    }

    /// One-hot road tag columns summed into a single `tagValue` feature.
    pub fn grouped(&self) -> GlobalImportance {
        let mut features: Vec<String> = self.features[..TAG_OFFSET].to_vec();
        let mut mean_abs: Vec<f64> = self.mean_abs[..TAG_OFFSET].to_vec();
        features.push("tagValue".to_string());
        mean_abs.push(self.mean_abs[TAG_OFFSET..].iter().sum());
        GlobalImportance::from_values(features, mean_abs)
    }

    pub fn write(&self, out: impl Write) -> Result<(), AttributionError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "mean_abs_shap", "rank"])?;
        for (rank, &i) in self.ranking.iter().enumerate() {
            w.write_record([self.features[i].clone(), format!("{}", self.mean_abs[i]), (rank + 1).to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), AttributionError> {
        self.write(create(path.as_ref())?)
    }
}

fn create(path: &Path) -> Result<std::fs::File, AttributionError> {
    std::fs::File::create(path).map_err(|source| AttributionError::Io { path: path.display().to_string(), source })
}

/// Attributions for many rows at once.
pub fn shap_matrix(
    model: &FusionModel,
    target: Target,
    rows: &[FeatureVector],
) -> Result<Vec<AttributionVector>, AttributionError> {
    use rayon::prelude::*;
    check_model(model, target)?;
    Ok(rows.par_iter().map(|x| ensemble_attribution(model, target, &x.to_array(), PerTree::Path)).collect())
}

pub fn global_importance(
    model: &FusionModel,
    target: Target,
    rows: &[FeatureVector],
) -> Result<GlobalImportance, AttributionError> {
    if rows.is_empty() {
        return Err(AttributionError::EmptyRows);
    }
    let attributions = shap_matrix(model, target, rows)?;
    Ok(importance_from(&attributions))
}

pub fn importance_from(attributions: &[AttributionVector]) -> GlobalImportance {
    let mut mean_abs = vec![0.0; N_FEATURES];
    for a in attributions {
        for (m, c) in mean_abs.iter_mut().zip(&a.contributions) {
            *m += c.abs();
        }
    }
    mean_abs.iter_mut().for_each(|m| *m /= attributions.len() as f64);
    GlobalImportance::from_values(FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), mean_abs)
}

/// Per-row attributions: one column per feature plus `base_value`.
pub fn write_shap_rows(out: impl Write, attributions: &[AttributionVector]) -> Result<(), AttributionError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.push("base_value");
    w.write_record(&header)?;
    for a in attributions {
        let mut rec: Vec<String> = a.contributions.iter().map(|c| format!("{c}")).collect();
        rec.push(format!("{}", a.base_value));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_shap_rows_csv(path: impl AsRef<Path>, attributions: &[AttributionVector]) -> Result<(), AttributionError> {
    write_shap_rows(create(path.as_ref())?, attributions)
}

/// Mean drop in validation R² when one feature column is shuffled, per
/// feature in [`FEATURE_NAMES`] order.
pub fn permutation_importance(
    model: &FusionModel,
    target: Target,
    dataset: &FusionDataset,
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>, AttributionError> {
    if repeats == 0 {
        return Err(AttributionError::ZeroRepeats);
    }
    let valid = dataset.valid();
    if valid.is_empty() {
        return Err(AttributionError::EmptyValidation);
    }
    let xs: Vec<[f64; N_FEATURES]> = valid.iter().map(|r| r.features.to_array()).collect();
    let truth: Vec<f64> = valid.iter().map(|r| target.value(&r.target)).collect();
    let score = |rows: &[[f64; N_FEATURES]]| -> Result<f64, AttributionError> {
        let pred: Vec<f64> = rows.iter().map(|x| model.raw_score_array(target, x).max(0.0)).collect();
        r2_score(&pred, &truth).ok_or(AttributionError::UndefinedR2)
    };
    let reference = score(&xs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drops = vec![0.0; N_FEATURES];
    let mut perm: Vec<usize> = (0..xs.len()).collect();
    for (f, drop) in drops.iter_mut().enumerate() {
        let mut total = 0.0;
        for _ in 0..repeats {
            perm.shuffle(&mut rng);
            let mut shuffled = xs.clone();
            for (row, &src) in shuffled.iter_mut().zip(&perm) {
                row[f] = xs[src][f];
            }
            total += reference - score(&shuffled)?;
        }
        *drop = total / repeats as f64;
    }
    Ok(drops)
}

pub fn write_permutation_csv(path: impl AsRef<Path>, drops: &[f64]) -> Result<(), AttributionError> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    w.write_record(["feature", "r2_drop"])?;
    for (name, d) in FEATURE_NAMES.iter().zip(drops) {
        w.write_record([name.to_string(), format!("{d}")])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{GbtHyperparams, Split, TargetModel, TreeNode, MODEL_FORMAT_VERSION};
    use crate::model::{HourKey, RoadTag};

    fn stump(feature: usize, threshold: f64, left: f64, right: f64, cl: f64, cr: f64) -> RegressionTree {
        RegressionTree {
            nodes: vec![
                TreeNode { split: Some(Split { feature, threshold, left: 1, right: 2 }), value: 0.0, cover: cl + cr },
                TreeNode::leaf(left, cl),
                TreeNode::leaf(right, cr),
            ],
        }
    }

    fn model_with(trees: Vec<RegressionTree>, base: f64, lr: f64) -> FusionModel {
        FusionModel {
            format_version: MODEL_FORMAT_VERSION,
            hyperparams: GbtHyperparams { learning_rate: lr, ..Default::default() },
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            targets: Target::ALL
                .iter()
                .map(|&t| TargetModel { target: t, base_score: base, trees: trees.clone() })
                .collect(),
        }
    }

    fn x(pf: f64) -> FeatureVector {
        FeatureVector::new(pf, &HourKey::parse("2023-11-06T08:00").unwrap(), RoadTag::Trunk)
    }

    #[test]
    fn constant_model_attributes_nothing() {
        let m = model_with(vec![RegressionTree::constant(2.0, 10.0)], 7.0, 0.5);
        let a = shap_values(&m, Target::Total, &x(100.0)).unwrap();
        assert!(a.contributions.iter().all(|&c| c == 0.0));
        assert_eq!(a.base_value, 8.0);
        let g = global_importance(&m, Target::Total, &[x(1.0), x(2.0)]).unwrap();
        assert!(g.mean_abs.iter().all(|&v| v == 0.0));
        assert_eq!(g.ranking, (0..N_FEATURES).collect::<Vec<_>>());
    }

    #[test]
    fn single_split_goes_to_people_flow() {
        let m = model_with(vec![stump(0, 50.0, 10.0, 30.0, 3.0, 1.0)], 0.0, 1.0);
        let a = shap_values(&m, Target::Total, &x(80.0)).unwrap();
        // E = (3*10 + 1*30)/4 = 15, prediction 30
        assert_eq!(a.base_value, 15.0);
        assert!((a.contributions[0] - 15.0).abs() < 1e-12);
        assert!(a.contributions[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn symmetric_features_share_credit() {
        // f = 10 * [x0 >= 1 and x1 >= 1], both features split identically
        let t = RegressionTree {
            nodes: vec![
                TreeNode {
                    split: Some(Split { feature: 0, threshold: 1.0, left: 1, right: 2 }),
                    value: 0.0,
                    cover: 4.0,
                },
                TreeNode::leaf(0.0, 2.0),
                TreeNode {
                    split: Some(Split { feature: 1, threshold: 1.0, left: 3, right: 4 }),
                    value: 0.0,
                    cover: 2.0,
                },
                TreeNode::leaf(0.0, 1.0),
                TreeNode::leaf(10.0, 1.0),
            ],
        };
        let phi = tree_shap(&t, &[1.0, 1.0]);
        // conditional covers are not symmetric here; the oracle decides
        let oracle = brute_force_tree_shap(&t, &[1.0, 1.0]);
        for (a, b) in phi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        let t2 = RegressionTree {
            nodes: vec![
                TreeNode {
                    split: Some(Split { feature: 0, threshold: 1.0, left: 1, right: 2 }),
                    value: 0.0,
                    cover: 4.0,
                },
                TreeNode {
                    split: Some(Split { feature: 1, threshold: 1.0, left: 3, right: 4 }),
                    value: 0.0,
                    cover: 2.0,
                },
                TreeNode {
                    split: Some(Split { feature: 1, threshold: 1.0, left: 5, right: 6 }),
                    value: 0.0,
                    cover: 2.0,
                },
                TreeNode::leaf(0.0, 1.0),
                TreeNode::leaf(5.0, 1.0),
                TreeNode::leaf(5.0, 1.0),
                TreeNode::leaf(10.0, 1.0),
            ],
        };
        let phi = tree_shap(&t2, &[1.0, 1.0]);
        assert!((phi[0] - phi[1]).abs() < 1e-12);
        assert!((phi[0] + phi[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn missing_cover_is_rejected() {
        let m = model_with(vec![stump(0, 50.0, 10.0, 30.0, 0.0, 1.0)], 0.0, 1.0);
        assert!(matches!(shap_values(&m, Target::Total, &x(1.0)), Err(AttributionError::MissingCover { .. })));
        let mut t = stump(0, 50.0, 10.0, 30.0, 2.0, 2.0);
        t.nodes[0].cover = 7.0;
        assert_eq!(check_covers(&t), Err(0));
    }

    #[test]
    fn repeated_feature_on_path() {
        let t = RegressionTree {
            nodes: vec![
                TreeNode {
                    split: Some(Split { feature: 0, threshold: 5.0, left: 1, right: 2 }),
                    value: 0.0,
                    cover: 10.0,
                },
                TreeNode {
                    split: Some(Split { feature: 0, threshold: 2.0, left: 3, right: 4 }),
                    value: 0.0,
                    cover: 6.0,
                },
                TreeNode {
                    split: Some(Split { feature: 2, threshold: 0.5, left: 5, right: 6 }),
                    value: 0.0,
                    cover: 4.0,
                },
                TreeNode::leaf(-1.0, 2.0),
                TreeNode::leaf(3.0, 4.0),
                TreeNode::leaf(7.0, 1.0),
                TreeNode::leaf(2.5, 3.0),
            ],
        };
        for xv in [[1.0, 0.0, 0.0], [3.0, 9.0, 1.0], [6.0, 1.0, 0.0], [6.0, 1.0, 1.0]] {
            let fast = tree_shap(&t, &xv);
            let slow = brute_force_tree_shap(&t, &xv);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12, "{fast:?} vs {slow:?}");
            }
            let total: f64 = fast.iter().sum::<f64>() + tree_expectation(&t);
            assert!((total - t.predict(&xv)).abs() < 1e-12);
        }
    }

    #[test]
    fn importance_grouping_and_ranking() {
        let g = GlobalImportance::from_values(
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            vec![5.0, 2.0, 0.1, 0.0, 1.0, 1.5, 0.5],
        );
        assert_eq!(g.ranking, vec![0, 1, 5, 4, 6, 2, 3]);
        assert_eq!(g.rank_of("people_flow"), Some(1));
        let grouped = g.grouped();
        assert_eq!(grouped.get("tagValue"), Some(3.0));
        assert_eq!(grouped.rank_of("tagValue"), Some(2));
        let mut buf = Vec::new();
        grouped.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("feature,mean_abs_shap,rank\npeople_flow,5,1\ntagValue,3,2\n"));
    }
}
