use std::io::Write;
use std::path::Path;

use crate::ingest::{fmt_num, DatasetRow, FusionDataset};

use super::{check_finite, FusionError, FusionModel, Target};

pub fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    let n = truth.len() as f64;
    (pred.iter().zip(truth).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / n).sqrt()
}

/// Coefficient of determination about the mean of `truth`; `None` when
/// `truth` has zero variance.
pub fn r2_score(pred: &[f64], truth: &[f64]) -> Option<f64> {
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return None;
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, y)| (p - y).powi(2)).sum();
    Some(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionMetrics {
    pub rmse: f64,
    pub r2: Option<f64>,
}

impl PartitionMetrics {
    fn of(pred: &[f64], truth: &[f64]) -> Option<Self> {
        if truth.is_empty() {
            return None;
        }
        Some(PartitionMetrics { rmse: rmse(pred, truth), r2: r2_score(pred, truth) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetMetrics {
    /// `None` when the training partition is empty.
    pub train: Option<PartitionMetrics>,
    pub valid: PartitionMetrics,
}

/// Per-target train/validation scores plus the raw people_flow baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub targets: Vec<(Target, TargetMetrics)>,
    /// people_flow used as-is as the prediction of the total.
    pub baseline: TargetMetrics,
    /// people_flow after a least-squares affine fit on the training rows.
    pub baseline_rescaled: TargetMetrics,
}

impl MetricsReport {
    pub fn get(&self, target: Target) -> &TargetMetrics {
        &self.targets.iter().find(|(t, _)| *t == target).expect("all targets evaluated").1
    }
}

fn model_predictions(model: &FusionModel, rows: &[DatasetRow], target: Target) -> Result<Vec<f64>, FusionError> {
    Ok(check_finite(rows)?.iter().map(|x| model.raw_score_array(target, x).max(0.0)).collect())
}

fn truths(rows: &[DatasetRow], target: Target) -> Vec<f64> {
    rows.iter().map(|r| target.value(&r.target)).collect()
}

fn affine_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Score every target model and the baselines on both partitions.
pub fn evaluate(model: &FusionModel, dataset: &FusionDataset) -> Result<MetricsReport, FusionError> {
    let (train, valid) = (dataset.train(), dataset.valid());
    if valid.is_empty() {
        return Err(FusionError::EmptyValidation);
    }
    let mut targets = Vec::with_capacity(Target::ALL.len());
    for t in Target::ALL {
        let valid_m = PartitionMetrics::of(&model_predictions(model, valid, t)?, &truths(valid, t))
            .expect("validation partition is non-empty");
        let train_m = PartitionMetrics::of(&model_predictions(model, train, t)?, &truths(train, t));
        targets.push((t, TargetMetrics { train: train_m, valid: valid_m }));
    }

    let flow = |rows: &[DatasetRow]| rows.iter().map(|r| r.features.people_flow).collect::<Vec<_>>();
    let (train_flow, valid_flow) = (flow(train), flow(valid));
    let (train_total, valid_total) = (truths(train, Target::Total), truths(valid, Target::Total));
    let baseline = TargetMetrics {
        train: PartitionMetrics::of(&train_flow, &train_total),
        valid: PartitionMetrics::of(&valid_flow, &valid_total).expect("non-empty"),
    };
    let (a, b) = if train.is_empty() { (0.0, 1.0) } else { affine_fit(&train_flow, &train_total) };
    let rescale = |xs: &[f64]| xs.iter().map(|x| a + b * x).collect::<Vec<_>>();
    let baseline_rescaled = TargetMetrics {
        train: PartitionMetrics::of(&rescale(&train_flow), &train_total),
        valid: PartitionMetrics::of(&rescale(&valid_flow), &valid_total).expect("non-empty"),
    };
    Ok(MetricsReport { targets, baseline, baseline_rescaled })
}

fn fmt_r2(r2: Option<f64>) -> String {
    r2.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

fn metric_cells(m: &TargetMetrics) -> [String; 4] {
    let (tr, tr2) = m.train.map_or(("NA".to_string(), "NA".to_string()), |p| (format!("{:.4}", p.rmse), fmt_r2(p.r2)));
    [tr, tr2, format!("{:.4}", m.valid.rmse), fmt_r2(m.valid.r2)]
}

/// Table with a baseline row, the total row and one row per length band.
pub fn write_metrics(out: impl Write, report: &MetricsReport) -> Result<(), FusionError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["target", "train_rmse", "train_r2", "valid_rmse", "valid_r2"])?;
    let mut row = |label: &str, m: &TargetMetrics| -> Result<(), csv::Error> {
        let cells = metric_cells(m);
        w.write_record([label, &cells[0], &cells[1], &cells[2], &cells[3]])
    };
    row("peopleFlow", &report.baseline)?;
    for (t, m) in &report.targets {
        row(t.label(), m)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_metrics_csv(path: impl AsRef<Path>, report: &MetricsReport) -> Result<(), FusionError> {
    let path = path.as_ref();
    let f =
        std::fs::File::create(path).map_err(|source| FusionError::Io { path: path.display().to_string(), source })?;
    write_metrics(f, report)
}

/// Validation row residuals, `prediction - truth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub y_total: f64,
    pub predicted_total: f64,
    pub residual_model: f64,
    pub residual_baseline: f64,
}

/// Model and raw-baseline residuals of the total over the validation rows,
/// ordered by true total.
pub fn residual_table(model: &FusionModel, dataset: &FusionDataset) -> Result<Vec<ResidualRow>, FusionError> {
    let valid = dataset.valid();
    if valid.is_empty() {
        return Err(FusionError::EmptyValidation);
    }
    let preds = model_predictions(model, valid, Target::Total)?;
    let mut rows: Vec<ResidualRow> = valid
        .iter()
        .zip(preds)
        .map(|(r, p)| ResidualRow {
            y_total: r.target.total,
            predicted_total: p,
            residual_model: p - r.target.total,
            residual_baseline: r.features.people_flow - r.target.total,
        })
        .collect();
    rows.sort_by(|a, b| a.y_total.total_cmp(&b.y_total));
    Ok(rows)
}

pub fn write_residuals_csv(path: impl AsRef<Path>, rows: &[ResidualRow]) -> Result<(), FusionError> {
    let path = path.as_ref();
    let f =
        std::fs::File::create(path).map_err(|source| FusionError::Io { path: path.display().to_string(), source })?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["y_total", "predicted_total", "residual_model", "residual_baseline"])?;
    for r in rows {
        w.write_record([
            fmt_num(r.y_total),
            format!("{}", r.predicted_total),
            format!("{}", r.residual_model),
            fmt_num(r.residual_baseline),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
