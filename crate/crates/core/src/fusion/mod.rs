//! Gradient-boosted regression trees mapping routing-report features to
//! tollbooth vehicle counts: one independent squared-loss ensemble for the
//! total and one per length band.

mod metrics;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ingest::{DatasetRow, FeatureVector, FusionDataset, FEATURE_NAMES, N_FEATURES};
use crate::model::{CountsByCategory, VehicleCategory};

pub use metrics::{
    evaluate, r2_score, residual_table, rmse, write_metrics, write_metrics_csv, write_residuals_csv, MetricsReport,
    PartitionMetrics, ResidualRow, TargetMetrics,
};
pub use tree::{best_split, FeatureMatrix, RegressionTree, Split, SplitCandidate, TreeNode, TreeParams};

/// Version written into persisted models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("training partition is empty")]
    EmptyTraining,
    #[error("validation partition is empty")]
    EmptyValidation,
    #[error("non-finite value in row {row}, feature `{feature}`")]
    NonFinite { row: usize, feature: &'static str },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtHyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub l2_leaf_regularization: f64,
    /// Recorded for reproducibility; exact greedy fitting draws no random numbers.
    pub seed: u64,
}

impl Default for GbtHyperparams {
    fn default() -> Self {
        GbtHyperparams {
            n_trees: 300,
            max_depth: 6,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            l2_leaf_regularization: 1.0,
            seed: 0,
        }
    }
}

impl GbtHyperparams {
    pub fn validate(&self) -> Result<(), FusionError> {
        let bad = |m: &str| Err(FusionError::InvalidHyperparams(m.to_string()));
        if self.n_trees == 0 {
            return bad("n_trees must be positive");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        if !(self.l2_leaf_regularization >= 0.0 && self.l2_leaf_regularization.is_finite()) {
            return bad("l2_leaf_regularization must be non-negative");
        }
        Ok(())
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            l2: self.l2_leaf_regularization,
        }
    }
}

/// Quantity a target model predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Total,
    Category(VehicleCategory),
}

impl Target {
    pub const ALL: [Target; 7] = [
        Target::Total,
        Target::Category(VehicleCategory::Under5_6),
        Target::Category(VehicleCategory::L5_6to7_6),
        Target::Category(VehicleCategory::L7_6to12_5),
        Target::Category(VehicleCategory::L12_5to16_0),
        Target::Category(VehicleCategory::L16_0to24_0),
        Target::Category(VehicleCategory::Over24_0),
    ];

    pub fn value(&self, counts: &CountsByCategory) -> f64 {
        match self {
            Target::Total => counts.total,
            Target::Category(c) => counts.get(*c),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Target::Total => "total",
            Target::Category(c) => c.column(),
        }
    }

    /// Row label in the metrics table.
    pub fn label(&self) -> &'static str {
        match self {
            Target::Total => "Total Traffic Volume",
            Target::Category(c) => c.label(),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Target::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| format!("unknown target `{s}`"))
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// One boosted ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetModel {
    pub target: Target,
    pub base_score: f64,
    pub trees: Vec<RegressionTree>,
}

impl TargetModel {
    /// Unclamped score using the first `n_trees` trees.
    pub fn raw_score_truncated(&self, x: &[f64], n_trees: usize, learning_rate: f64) -> f64 {
        let sum: f64 = self.trees.iter().take(n_trees).map(|t| t.predict(x)).sum();
        self.base_score + learning_rate * sum
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionModel {
    pub format_version: u32,
    pub hyperparams: GbtHyperparams,
    pub feature_names: Vec<String>,
    pub targets: Vec<TargetModel>,
}

impl FusionModel {
    pub fn target(&self, target: Target) -> &TargetModel {
        self.targets.iter().find(|t| t.target == target).expect("validated model holds every target")
    }

    /// Score before clamping.
    pub fn raw_score(&self, target: Target, x: &FeatureVector) -> f64 {
        self.raw_score_array(target, &x.to_array())
    }

    pub fn raw_score_array(&self, target: Target, x: &[f64]) -> f64 {
        let m = self.target(target);
        m.raw_score_truncated(x, m.trees.len(), self.hyperparams.learning_rate)
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        let bad = |m: String| Err(FusionError::InvalidModel(m));
        if self.format_version != MODEL_FORMAT_VERSION {
            return bad(format!("unsupported format_version {}", self.format_version));
        }
        if self.feature_names.iter().map(String::as_str).ne(FEATURE_NAMES) {
            return bad(format!("feature names {:?} do not match {:?}", self.feature_names, FEATURE_NAMES));
        }
        self.hyperparams.validate()?;
        for t in Target::ALL {
            let n = self.targets.iter().filter(|m| m.target == t).count();
            if n != 1 {
                return bad(format!("target {t} appears {n} times"));
            }
        }
        for m in &self.targets {
            if !m.base_score.is_finite() {
                return bad(format!("target {}: non-finite base score", m.target));
            }
            for (i, tree) in m.trees.iter().enumerate() {
                tree.validate(N_FEATURES)
                    .map_err(|e| FusionError::InvalidModel(format!("{} tree {i}: {e}", m.target)))?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, FusionError> {
        let model: FusionModel = serde_json::from_str(json).map_err(|e| FusionError::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FusionError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json())
            .map_err(|source| FusionError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FusionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| FusionError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}

/// Clamped per-band counts; the total comes from the Total model.
pub fn predict(model: &FusionModel, x: &FeatureVector) -> CountsByCategory {
    let arr = x.to_array();
    let mut counts = [0.0; VehicleCategory::COUNT];
    for c in VehicleCategory::ALL {
        counts[c.index()] = model.raw_score_array(Target::Category(c), &arr).max(0.0);
    }
    CountsByCategory::with_reported_total(counts, model.raw_score_array(Target::Total, &arr).max(0.0))
}

pub(crate) fn check_finite(rows: &[DatasetRow]) -> Result<Vec<[f64; N_FEATURES]>, FusionError> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let x = r.features.to_array();
            match x.iter().position(|v| !v.is_finite()) {
                Some(f) => Err(FusionError::NonFinite { row: i, feature: FEATURE_NAMES[f] }),
                None => Ok(x),
            }
        })
        .collect()
}

/// Boost one target on a fixed feature matrix.
pub fn fit_target(
    x: &FeatureMatrix,
    sorted: &[Vec<u32>],
    y: &[f64],
    target: Target,
    hp: &GbtHyperparams,
) -> TargetModel {
    let base_score = y.iter().sum::<f64>() / y.len() as f64;
    let mut pred = vec![base_score; y.len()];
    let mut residuals = vec![0.0; y.len()];
    let params = hp.tree_params();
    let mut trees = Vec::with_capacity(hp.n_trees);
    for _ in 0..hp.n_trees {
        for ((r, &yi), &p) in residuals.iter_mut().zip(y).zip(&pred) {
            *r = yi - p;
        }
        let (tree, row_leaf) = RegressionTree::fit_presorted(x, sorted, &residuals, &params);
        for (p, &leaf) in pred.iter_mut().zip(&row_leaf) {
            *p += hp.learning_rate * tree.nodes[leaf as usize].value;
        }
        trees.push(tree);
    }
    TargetModel { target, base_score, trees }
}

/// Train all seven target models on the training partition.
pub fn train(dataset: &FusionDataset, hp: &GbtHyperparams) -> Result<FusionModel, FusionError> {
    hp.validate()?;
    let rows = dataset.train();
    if rows.is_empty() {
        return Err(FusionError::EmptyTraining);
    }
    let features = check_finite(rows)?;
    let x = FeatureMatrix::from_rows(&features);
    let sorted = x.sorted_orders();
    let targets: Vec<TargetModel> = Target::ALL
        .par_iter()
        .map(|&target| {
            let y: Vec<f64> = rows.iter().map(|r| target.value(&r.target)).collect();
            fit_target(&x, &sorted, &y, target, hp)
        })
        .collect();
    Ok(FusionModel {
        format_version: MODEL_FORMAT_VERSION,
        hyperparams: *hp,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        targets,
    })
}
