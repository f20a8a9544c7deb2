//! Reading tollbooth and routing-report files, joining them into a
//! model-ready dataset, and generating synthetic data with a controllable
//! bias structure.

mod csv_io;
mod synthetic;

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::model::{CountsByCategory, HourKey, RoadTag, RoutingReportObservation, TollboothObservation};

pub(crate) use csv_io::fmt_num;
pub use csv_io::{
    parse_routing_csv, parse_tollbooth_csv, read_routing_csv, read_routing_csv_with, read_tollbooth_csv, write_routing,
    write_routing_csv, write_tollbooth, write_tollbooth_csv, DEFAULT_CENSOR_SENTINEL, ROUTING_HEADER, TOLLBOOTH_HEADER,
};
pub use synthetic::{
    generate_synthetic, generate_synthetic_from, BiasProfile, LatentRecord, SyntheticData, TagValues,
    DEFAULT_SYNTHETIC_START,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("{message} at row {row} (field `{field}`)")]
    Field { row: usize, field: String, message: String },
    #[error("no overlapping (node, hour) pairs between tollbooth and routing data")]
    NoOverlap,
    #[error("valid_fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("invalid synthetic parameters: {0}")]
    InvalidSynthetic(String),
}

/// Number of model input columns.
pub const N_FEATURES: usize = 7;

/// Column names in [`FeatureVector::to_array`] order.
pub const FEATURE_NAMES: [&str; N_FEATURES] =
    ["people_flow", "hour_of_day", "day_of_week", "is_weekend", "tag_primary", "tag_trunk", "tag_secondary"];

pub const PEOPLE_FLOW: usize = 0;
pub const HOUR_OF_DAY: usize = 1;
pub const DAY_OF_WEEK: usize = 2;
pub const IS_WEEKEND: usize = 3;
/// First of the three one-hot road tag columns.
pub const TAG_OFFSET: usize = 4;

/// Model inputs for one (node, hour): the raw flow, calendar features and
/// the road tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub people_flow: f64,
    pub hour_of_day: u8,
    pub day_of_week: u8,
    pub is_weekend: bool,
    pub road_tag: RoadTag,
}

impl FeatureVector {
    pub fn new(people_flow: f64, hour: &HourKey, road_tag: RoadTag) -> Self {
        FeatureVector {
            people_flow,
            hour_of_day: hour.hour_of_day(),
            day_of_week: hour.day_of_week(),
            is_weekend: hour.is_weekend(),
            road_tag,
        }
    }

    pub fn from_observation(obs: &RoutingReportObservation) -> Self {
        Self::new(obs.people_flow, &obs.hour, obs.road_tag)
    }

    /// Dense encoding with the road tag one-hot.
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        let mut x = [
            self.people_flow,
            f64::from(self.hour_of_day),
            f64::from(self.day_of_week),
            if self.is_weekend { 1.0 } else { 0.0 },
            0.0,
            0.0,
            0.0,
        ];
        x[TAG_OFFSET + self.road_tag.index()] = 1.0;
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub features: FeatureVector,
    pub target: CountsByCategory,
    pub node: String,
    pub hour: HourKey,
}

/// Joined rows in chronological order; rows before `split_index` train,
/// the rest validate.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionDataset {
    pub rows: Vec<DatasetRow>,
    pub split_index: usize,
}

impl FusionDataset {
    pub fn train(&self) -> &[DatasetRow] {
        &self.rows[..self.split_index]
    }

    pub fn valid(&self) -> &[DatasetRow] {
        &self.rows[self.split_index..]
    }
}

/// Inner join on (node key, hour), sorted by (timestamp, node) and split so
/// the final `valid_fraction` of distinct hours is held out. Censored
/// routing rows never enter the dataset.
pub fn build_dataset(
    tollbooth: &[TollboothObservation],
    routing: &[RoutingReportObservation],
    valid_fraction: f64,
) -> Result<FusionDataset, IngestError> {
    if !(valid_fraction > 0.0 && valid_fraction < 1.0) {
        return Err(IngestError::InvalidFraction(valid_fraction));
    }
    let rows = join(tollbooth, routing);
    if rows.is_empty() {
        return Err(IngestError::NoOverlap);
    }
    let split_index = chronological_split(&rows, valid_fraction);
    Ok(FusionDataset { rows, split_index })
}

fn join(tollbooth: &[TollboothObservation], routing: &[RoutingReportObservation]) -> Vec<DatasetRow> {
    let by_key: HashMap<(&str, HourKey), &RoutingReportObservation> =
        routing.iter().filter(|r| !r.censored).map(|r| ((r.node.as_str(), r.hour), r)).collect();
    let mut rows: Vec<DatasetRow> = tollbooth
        .iter()
        .filter_map(|t| {
            let key = t.node_key();
            let r = *by_key.get(&(key.as_str(), t.hour))?;
            Some(DatasetRow { features: FeatureVector::from_observation(r), target: t.counts, node: key, hour: t.hour })
        })
        .collect();
    rows.sort_by(|a, b| (a.hour, &a.node).cmp(&(b.hour, &b.node)));
    rows.dedup_by(|a, b| a.hour == b.hour && a.node == b.node);
    rows
}

fn chronological_split(rows: &[DatasetRow], valid_fraction: f64) -> usize {
    let n = rows.len();
    if n < 2 {
        return n;
    }
    let mut hours: Vec<HourKey> = rows.iter().map(|r| r.hour).collect();
    hours.dedup();
    if hours.len() < 2 {
        return ((n as f64 * (1.0 - valid_fraction)).round() as usize).clamp(1, n - 1);
    }
    let n_train_hours = ((hours.len() as f64 * (1.0 - valid_fraction)).round() as usize).clamp(1, hours.len() - 1);
    let boundary = hours[n_train_hours];
    rows.partition_point(|r| r.hour < boundary)
}

/// Mean of (tollbooth total - people_flow) per node and hour of day over the
/// joined rows. Cells without data are absent.
pub fn difference_series(
    tollbooth: &[TollboothObservation],
    routing: &[RoutingReportObservation],
) -> BTreeMap<(String, u8), f64> {
    let mut acc: BTreeMap<(String, u8), (f64, usize)> = BTreeMap::new();
    for row in join(tollbooth, routing) {
        let cell = acc.entry((row.node, row.hour.hour_of_day())).or_insert((0.0, 0));
        cell.0 += row.target.total - row.features.people_flow;
        cell.1 += 1;
    }
    acc.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect()
}

pub fn write_difference_table(out: impl Write, table: &BTreeMap<(String, u8), f64>) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "hour_of_day", "mean_diff"])?;
    for ((node, hour), diff) in table {
        w.write_record([node.clone(), hour.to_string(), format!("{diff}")])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_difference_csv(path: impl AsRef<Path>, table: &BTreeMap<(String, u8), f64>) -> Result<(), IngestError> {
    let path = path.as_ref();
    let file =
        std::fs::File::create(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    write_difference_table(file, table)
}
