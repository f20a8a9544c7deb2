//! Domain vocabulary shared by every stage of the pipeline: hour keys,
//! road tags, vehicle length bands, node identities and the observation
//! records read from tollbooth and routing-report files.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Timestamp format used in every CSV this crate reads or writes.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid timestamp `{0}`: expected an hour-resolution ISO-8601 value like 2023-11-06T08:00")]
    InvalidTimestamp(String),
    #[error("vehicle length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("unknown road tag `{0}` (allowed: Primary, Trunk, Secondary)")]
    UnknownRoadTag(String),
    #[error("unknown direction `{0}` (allowed: Inbound, Outbound, Undirected)")]
    UnknownDirection(String),
}

/// Calendar hour with the temporal features derived from it.
///
/// The derived fields are private so they can never disagree with the
/// timestamp; build one with [`make_hour_key`] or [`HourKey::parse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HourKey {
    timestamp: NaiveDateTime,
    hour_of_day: u8,
    day_of_week: u8,
    is_weekend: bool,
}

/// Build an [`HourKey`] from a naive local timestamp. Minutes, seconds and
/// sub-second parts must be zero.
pub fn make_hour_key(timestamp: NaiveDateTime) -> Result<HourKey, ModelError> {
    if timestamp.minute() != 0 || timestamp.second() != 0 || timestamp.nanosecond() != 0 {
        return Err(ModelError::InvalidTimestamp(timestamp.to_string()));
    }
    let day_of_week = timestamp.weekday().num_days_from_monday() as u8;
    Ok(HourKey { timestamp, hour_of_day: timestamp.hour() as u8, day_of_week, is_weekend: day_of_week >= 5 })
}

impl HourKey {
    pub fn parse(s: &str) -> Result<Self, ModelError> {
        let ts = NaiveDateTime::parse_from_str(s.trim(), TIMESTAMP_FORMAT)
            .map_err(|_| ModelError::InvalidTimestamp(s.to_string()))?;
        make_hour_key(ts)
    }

    pub fn timestamp(&self) -> NaiveDateTime {
        self.timestamp
    }

    pub fn hour_of_day(&self) -> u8 {
        self.hour_of_day
    }

    /// 0 = Monday .. 6 = Sunday.
    pub fn day_of_week(&self) -> u8 {
        self.day_of_week
    }

    pub fn is_weekend(&self) -> bool {
        self.is_weekend
    }

    /// The key `n` hours later.
    pub fn plus_hours(&self, n: i64) -> Self {
        make_hour_key(self.timestamp + chrono::Duration::hours(n)).expect("whole-hour offsets preserve hour resolution")
    }
}

impl fmt::Display for HourKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.timestamp.format(TIMESTAMP_FORMAT))
    }
}

impl FromStr for HourKey {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for HourKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HourKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        HourKey::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Road hierarchy tag carried by routing reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RoadTag {
    Primary,
    Trunk,
    Secondary,
}

impl RoadTag {
    pub const ALL: [RoadTag; 3] = [RoadTag::Primary, RoadTag::Trunk, RoadTag::Secondary];

    pub fn as_str(&self) -> &'static str {
        match self {
            RoadTag::Primary => "Primary",
            RoadTag::Trunk => "Trunk",
            RoadTag::Secondary => "Secondary",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for RoadTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoadTag {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Primary" => Ok(RoadTag::Primary),
            "Trunk" => Ok(RoadTag::Trunk),
            "Secondary" => Ok(RoadTag::Secondary),
            other => Err(ModelError::UnknownRoadTag(other.to_string())),
        }
    }
}

/// Vehicle length band used by the tollbooth classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VehicleCategory {
    Under5_6,
    L5_6to7_6,
    L7_6to12_5,
    L12_5to16_0,
    L16_0to24_0,
    Over24_0,
}

/// Simulation vehicle type each length band maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VehicleType {
    PassengerVehicle,
    LightCommercial,
    BusMediumTruck,
    HeavyRigidShortArticulated,
    ArticulatedHGV,
    ExtraLong,
}

impl VehicleType {
    pub fn as_str(&self) -> &'static str {
        match self {
            VehicleType::PassengerVehicle => "PassengerVehicle",
            VehicleType::LightCommercial => "LightCommercial",
            VehicleType::BusMediumTruck => "BusMediumTruck",
            VehicleType::HeavyRigidShortArticulated => "HeavyRigidShortArticulated",
            VehicleType::ArticulatedHGV => "ArticulatedHGV",
            VehicleType::ExtraLong => "ExtraLong",
        }
    }
}

impl fmt::Display for VehicleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl VehicleCategory {
    pub const COUNT: usize = 6;
    pub const ALL: [VehicleCategory; 6] = [
        VehicleCategory::Under5_6,
        VehicleCategory::L5_6to7_6,
        VehicleCategory::L7_6to12_5,
        VehicleCategory::L12_5to16_0,
        VehicleCategory::L16_0to24_0,
        VehicleCategory::Over24_0,
    ];

    pub fn index(&self) -> usize {
        *self as usize
    }

    /// Closed-lower, open-upper length bounds in metres.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            VehicleCategory::Under5_6 => (0.0, 5.6),
            VehicleCategory::L5_6to7_6 => (5.6, 7.6),
            VehicleCategory::L7_6to12_5 => (7.6, 12.5),
            VehicleCategory::L12_5to16_0 => (12.5, 16.0),
            VehicleCategory::L16_0to24_0 => (16.0, 24.0),
            VehicleCategory::Over24_0 => (24.0, f64::INFINITY),
        }
    }

    /// Column name in the tollbooth CSV.
    pub fn column(&self) -> &'static str {
        match self {
            VehicleCategory::Under5_6 => "c_under5_6",
            VehicleCategory::L5_6to7_6 => "c_5_6_7_6",
            VehicleCategory::L7_6to12_5 => "c_7_6_12_5",
            VehicleCategory::L12_5to16_0 => "c_12_5_16_0",
            VehicleCategory::L16_0to24_0 => "c_16_0_24_0",
            VehicleCategory::Over24_0 => "c_over24_0",
        }
    }

    /// Human-readable band label, e.g. `5.6-7.6 m`.
    pub fn label(&self) -> &'static str {
        match self {
            VehicleCategory::Under5_6 => "<5.6 m",
            VehicleCategory::L5_6to7_6 => "5.6-7.6 m",
            VehicleCategory::L7_6to12_5 => "7.6-12.5 m",
            VehicleCategory::L12_5to16_0 => "12.5-16.0 m",
            VehicleCategory::L16_0to24_0 => "16.0-24.0 m",
            VehicleCategory::Over24_0 => ">=24.0 m",
        }
    }

    pub fn vehicle_type(&self) -> VehicleType {
        map_vehicle_type(*self)
    }
}

impl fmt::Display for VehicleCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// Band containing `length_m`. Boundaries belong to the upper band.
pub fn category_of_length(length_m: f64) -> Result<VehicleCategory, ModelError> {
    if !(length_m > 0.0) || !length_m.is_finite() {
        return Err(ModelError::InvalidLength(length_m));
    }
    Ok(VehicleCategory::ALL.into_iter().rev().find(|c| length_m >= c.bounds().0).expect("lowest band starts at zero"))
}

pub fn map_vehicle_type(category: VehicleCategory) -> VehicleType {
    match category {
        VehicleCategory::Under5_6 => VehicleType::PassengerVehicle,
        VehicleCategory::L5_6to7_6 => VehicleType::LightCommercial,
        VehicleCategory::L7_6to12_5 => VehicleType::BusMediumTruck,
        VehicleCategory::L12_5to16_0 => VehicleType::HeavyRigidShortArticulated,
        VehicleCategory::L16_0to24_0 => VehicleType::ArticulatedHGV,
        VehicleCategory::Over24_0 => VehicleType::ExtraLong,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    MainTollbooth,
    CountyTollbooth,
    InferredDestination,
}

impl NodeKind {
    pub fn is_tollbooth(&self) -> bool {
        matches!(self, NodeKind::MainTollbooth | NodeKind::CountyTollbooth)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub name: String,
    pub kind: NodeKind,
}

impl NodeId {
    pub fn new(name: impl Into<String>, kind: NodeKind) -> Self {
        NodeId { name: name.into(), kind }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Inbound,
    Outbound,
    Undirected,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Inbound => "Inbound",
            Direction::Outbound => "Outbound",
            Direction::Undirected => "Undirected",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Inbound" => Ok(Direction::Inbound),
            "Outbound" => Ok(Direction::Outbound),
            "Undirected" | "" => Ok(Direction::Undirected),
            other => Err(ModelError::UnknownDirection(other.to_string())),
        }
    }
}

/// Node key under which a tollbooth station/direction joins routing
/// reports: the bare station name when undirected, `station:Direction`
/// otherwise.
pub fn node_key(station: &str, direction: Direction) -> String {
    match direction {
        Direction::Undirected => station.to_string(),
        d => format!("{station}:{d}"),
    }
}

/// Allowed relative gap between a reported total and the category sum.
pub const TOTAL_AGREEMENT: f64 = 0.01;

/// Vehicles per hour in each length band, plus a total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CountsByCategory {
    pub counts: [f64; VehicleCategory::COUNT],
    pub total: f64,
}

impl CountsByCategory {
    pub fn from_categories(counts: [f64; VehicleCategory::COUNT]) -> Self {
        CountsByCategory { counts, total: counts.iter().sum() }
    }

    /// Counts with an independently reported total.
    pub fn with_reported_total(counts: [f64; VehicleCategory::COUNT], total: f64) -> Self {
        CountsByCategory { counts, total }
    }

    pub fn get(&self, category: VehicleCategory) -> f64 {
        self.counts[category.index()]
    }

    pub fn category_sum(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Whether the total agrees with the category sum: within 1e-6 absolute,
    /// or within 1% of the total for independently reported totals.
    pub fn total_consistent(&self) -> bool {
        let gap = (self.total - self.category_sum()).abs();
        gap <= 1e-6 || gap <= TOTAL_AGREEMENT * self.total
    }
}

impl Add for CountsByCategory {
    type Output = CountsByCategory;
    fn add(self, rhs: Self) -> Self::Output {
        let mut counts = self.counts;
        for (c, r) in counts.iter_mut().zip(rhs.counts) {
            *c += r;
        }
        CountsByCategory { counts, total: self.total + rhs.total }
    }
}

/// One hourly ground-truth count at a tollbooth.
#[derive(Debug, Clone, PartialEq)]
pub struct TollboothObservation {
    pub station: String,
    pub direction: Direction,
    pub hour: HourKey,
    pub counts: CountsByCategory,
    /// Reported total disagrees with the category sum by more than 1%.
    pub flagged: bool,
}

impl TollboothObservation {
    pub fn node_key(&self) -> String {
        node_key(&self.station, self.direction)
    }
}

/// One hourly aggregated mobility record from a routing report.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingReportObservation {
    pub node: String,
    pub hour: HourKey,
    pub people_flow: f64,
    pub road_tag: RoadTag,
    /// Value suppressed below the privacy threshold; `people_flow` is then 0.
    pub censored: bool,
}
