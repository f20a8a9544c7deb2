//! Temporal-pattern comparison between two observation periods.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use crate::model::RoutingReportObservation;

/// Default additive smoothing for [`sym_kl`].
pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum StabilityError {
    #[error("{0} profile undefined: no rows or zero total flow")]
    EmptyProfile(ProfileKind),
    #[error("profile kinds differ: {0} vs {1}")]
    KindMismatch(ProfileKind, ProfileKind),
    #[error("smoothing epsilon must be positive and finite, got {0}")]
    Epsilon(f64),
    #[error("cannot write `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProfileKind {
    Diurnal,
    Weekly,
}

impl ProfileKind {
    pub fn bins(&self) -> usize {
        match self {
            ProfileKind::Diurnal => 24,
            ProfileKind::Weekly => 7,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileKind::Diurnal => "diurnal",
            ProfileKind::Weekly => "weekly",
        }
    }
}

impl std::fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Share of total flow falling in each hour-of-day or day-of-week bin.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalProfile {
    pub kind: ProfileKind,
    pub mass: Vec<f64>,
}

impl TemporalProfile {
    /// Normalize arbitrary non-negative bin weights.
    pub fn from_weights(kind: ProfileKind, weights: &[f64]) -> Result<Self, StabilityError> {
        assert_eq!(weights.len(), kind.bins(), "bin count must match the profile kind");
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(StabilityError::EmptyProfile(kind));
        }
        Ok(TemporalProfile { kind, mass: weights.iter().map(|w| w / total).collect() })
    }
}

pub fn build_profile(rows: &[RoutingReportObservation], kind: ProfileKind) -> Result<TemporalProfile, StabilityError> {
    let mut bins = vec![0.0; kind.bins()];
    for r in rows {
        let b = match kind {
            ProfileKind::Diurnal => r.hour.hour_of_day(),
            ProfileKind::Weekly => r.hour.day_of_week(),
        };
        bins[b as usize] += r.people_flow;
    }
    TemporalProfile::from_weights(kind, &bins)
}

fn same_kind(p: &TemporalProfile, q: &TemporalProfile) -> Result<(), StabilityError> {
    if p.kind != q.kind {
        return Err(StabilityError::KindMismatch(p.kind, q.kind));
    }
    Ok(())
}

/// Sample Pearson correlation across bins; `None` if either profile is flat.
pub fn pearson(p: &TemporalProfile, q: &TemporalProfile) -> Result<Option<f64>, StabilityError> {
    same_kind(p, q)?;
    let flat = |m: &[f64]| m.iter().all(|v| *v == m[0]);
    if flat(&p.mass) || flat(&q.mass) {
        return Ok(None);
    }
    let n = p.mass.len() as f64;
    let (mp, mq) = (p.mass.iter().sum::<f64>() / n, q.mass.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in p.mass.iter().zip(&q.mass) {
        let (dx, dy) = (a - mp, b - mq);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    // sqrt(x·x) == x exactly, so a profile against itself gives exactly 1.
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

fn smooth(mass: &[f64], epsilon: f64) -> Vec<f64> {
    let total: f64 = mass.iter().map(|m| m + epsilon).sum();
    mass.iter().map(|m| (m + epsilon) / total).collect()
}

/// Jeffreys divergence `KL(p‖q) + KL(q‖p)` in nats after adding `epsilon`
/// to every bin of both profiles and renormalizing.
pub fn sym_kl(p: &TemporalProfile, q: &TemporalProfile, epsilon: f64) -> Result<f64, StabilityError> {
    same_kind(p, q)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(StabilityError::Epsilon(epsilon));
    }
    let (ps, qs) = (smooth(&p.mass, epsilon), smooth(&q.mass, epsilon));
    // (a - b) ln(a / b) is the per-bin sum of both directions.
    let j: f64 = ps.iter().zip(&qs).map(|(a, b)| (a - b) * (a / b).ln()).sum();
    Ok(j.max(0.0))
}

/// `Σ(p−q)² / Σpq`; `None` when the profiles have disjoint support.
pub fn nmse(p: &TemporalProfile, q: &TemporalProfile) -> Result<Option<f64>, StabilityError> {
    same_kind(p, q)?;
    let num: f64 = p.mass.iter().zip(&q.mass).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = p.mass.iter().zip(&q.mass).map(|(a, b)| a * b).sum();
    Ok((den > 0.0).then(|| num / den))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    /// Node compared, or `None` for the pooled comparison.
    pub node: Option<String>,
    pub kind: ProfileKind,
    pub pearson: Option<f64>,
    pub sym_kl: f64,
    pub nmse: Option<f64>,
}

pub fn compare(
    node: Option<String>,
    period_a: &[RoutingReportObservation],
    period_b: &[RoutingReportObservation],
    kind: ProfileKind,
    epsilon: f64,
) -> Result<StabilityRow, StabilityError> {
    let (p, q) = (build_profile(period_a, kind)?, build_profile(period_b, kind)?);
    Ok(StabilityRow { node, kind, pearson: pearson(&p, &q)?, sym_kl: sym_kl(&p, &q, epsilon)?, nmse: nmse(&p, &q)? })
}

/// Pooled diurnal and weekly comparison followed by one pair of rows per node
/// present in both periods with non-zero flow.
pub fn stability_report(
    period_a: &[RoutingReportObservation],
    period_b: &[RoutingReportObservation],
    epsilon: f64,
) -> Result<Vec<StabilityRow>, StabilityError> {
    let kinds = [ProfileKind::Diurnal, ProfileKind::Weekly];
    let mut rows = Vec::new();
    for kind in kinds {
        rows.push(compare(None, period_a, period_b, kind, epsilon)?);
    }
    let nodes_a: BTreeSet<&str> = period_a.iter().map(|r| r.node.as_str()).collect();
    let nodes_b: BTreeSet<&str> = period_b.iter().map(|r| r.node.as_str()).collect();
    for node in nodes_a.intersection(&nodes_b) {
        let (a, b): (Vec<_>, Vec<_>) = (
            period_a.iter().filter(|r| r.node == *node).cloned().collect(),
            period_b.iter().filter(|r| r.node == *node).cloned().collect(),
        );
        for kind in kinds {
            match compare(Some(node.to_string()), &a, &b, kind, epsilon) {
                Ok(row) => rows.push(row),
                Err(StabilityError::EmptyProfile(_)) => log::warn!("node {node}: no flow in one period, skipped"),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(rows)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.10}"))
}

fn create(path: &Path) -> Result<std::fs::File, StabilityError> {
    std::fs::File::create(path).map_err(|source| StabilityError::Io { path: path.display().to_string(), source })
}

/// Pooled rows only, `profile_kind,pearson,sym_kl_nats,nmse`.
pub fn write_report(out: impl Write, rows: &[StabilityRow]) -> Result<(), StabilityError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["profile_kind", "pearson", "sym_kl_nats", "nmse"])?;
    for r in rows.iter().filter(|r| r.node.is_none()) {
        w.write_record([r.kind.as_str().to_string(), cell(r.pearson), cell(Some(r.sym_kl)), cell(r.nmse)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_report_csv(path: impl AsRef<Path>, rows: &[StabilityRow]) -> Result<(), StabilityError> {
    write_report(create(path.as_ref())?, rows)
}

/// Per-node rows with a leading `node` column.
pub fn write_node_report_csv(path: impl AsRef<Path>, rows: &[StabilityRow]) -> Result<(), StabilityError> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    w.write_record(["node", "profile_kind", "pearson", "sym_kl_nats", "nmse"])?;
    for r in rows {
        if let Some(node) = &r.node {
            w.write_record([
                node.clone(),
                r.kind.as_str().into(),
                cell(r.pearson),
                cell(Some(r.sym_kl)),
                cell(r.nmse),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
