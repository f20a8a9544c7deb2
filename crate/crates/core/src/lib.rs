//! Fuse hourly tollbooth counts with cellular mobility flows and turn the
//! corrected flows into hourly origin-destination matrices by vehicle type.
//!
//! The pipeline, one module per stage:
//!
//! - [`ingest`]: CSV parsing, the feature/target join, the chronological
//!   split and a seeded synthetic generator with a known bias structure.
//! - [`fusion`]: multi-target gradient-boosted regression trees.
//! - [`attribution`]: exact tree Shapley values and permutation importance.
//! - [`routing`]: hourly flow decisions and largest-remainder apportionment
//!   into OD cells.
//! - [`stability`]: diurnal/weekly profile comparison between two periods.
//! - [`pipeline`]: the config-driven commands behind the `odfusion` binary.

// `!(x > 0.0)` is deliberate: NaN has to fail these checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attribution;
pub mod fixtures;
pub mod fusion;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod routing;
pub mod stability;

pub use model::{
    CountsByCategory, Direction, HourKey, NodeId, NodeKind, RoadTag, RoutingReportObservation, TollboothObservation,
    VehicleCategory, VehicleType,
};
