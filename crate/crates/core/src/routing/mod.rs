//! Hourly routing: flow decisions from tollbooth counts, destination and
//! vehicle-category apportionment from model predictions, OD assembly.

mod apportion;
mod flows;
pub mod network;
mod od;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use apportion::{largest_remainder, WEIGHT_SUM_TOLERANCE};
pub use flows::{decide_flows, FlowDecision, NodeLedger, PhaseLedger};
pub use network::{NetworkConfig, NodeSpec, PassthroughPair, Ramps};
pub use od::{
    build_od_matrix, distribute, infer_joint_distribution, marginals, subset_shares, write_conservation,
    write_conservation_csv, write_ledger, write_ledger_csv, write_od, write_od_csv, ConservationRow, JointDistribution,
    Marginals, ODEntry, ODMatrix, OdRun,
};

pub use crate::model::map_vehicle_type;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    Internal,
    LocalInflow,
    LocalOutflow,
    PassthroughNet,
    PassthroughBypass,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Internal,
        Scenario::LocalInflow,
        Scenario::LocalOutflow,
        Scenario::PassthroughNet,
        Scenario::PassthroughBypass,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Internal => "Internal",
            Scenario::LocalInflow => "LocalInflow",
            Scenario::LocalOutflow => "LocalOutflow",
            Scenario::PassthroughNet => "PassthroughNet",
            Scenario::PassthroughBypass => "PassthroughBypass",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RoutingError {
    #[error("network config: {0}")]
    Config(String),
    #[error("invalid apportionment weights: {0}")]
    Weights(String),
    #[error("hour {hour}: missing tollbooth counts for {}", nodes.join(", "))]
    MissingCounts { hour: String, nodes: Vec<String> },
    #[error("hour {hour}: negative residual after phase subtraction; ledger:{ledger}")]
    NegativeResidual { hour: String, ledger: String },
    #[error("hour {0}: no routing rows at inferred destinations")]
    NoDestinationRows(String),
    #[error("hour {hour}: eligible destinations not in the joint distribution: {}", missing.join(", "))]
    NotSubset { hour: String, missing: Vec<String> },
    #[error("hour {hour}: conservation violated: {detail}")]
    Conservation { hour: String, detail: String },
    #[error("cannot write `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
