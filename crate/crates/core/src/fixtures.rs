//! Shipped networks and the small hand-checkable routing case.
//!
//! The Trondheim network lists the study-area tollbooths, the three county
//! tollbooths (training only) and the eight inferred destinations. How the
//! destinations split into the two sub-regions either side of Østre Rosten
//! is not published; the `west`/`east` grouping here is an assumption.

use std::collections::BTreeMap;

use crate::fusion::{FusionModel, GbtHyperparams, RegressionTree, Split, Target, TargetModel, MODEL_FORMAT_VERSION};
use crate::ingest::{FEATURE_NAMES, PEOPLE_FLOW};
use crate::model::{
    CountsByCategory, Direction, HourKey, NodeKind, RoadTag, RoutingReportObservation, TollboothObservation,
    VehicleCategory,
};
use crate::routing::{NetworkConfig, NodeSpec};

pub const TRONDHEIM_JSON: &str = include_str!("../fixtures/trondheim.json");
pub const WORKED_EXAMPLE_NETWORK_JSON: &str = include_str!("../fixtures/worked_example/network.json");

pub fn trondheim_network() -> NetworkConfig {
    NetworkConfig::from_json(TRONDHEIM_JSON).expect("shipped fixture is valid")
}

/// The Trondheim stations without directional splits and without routing
/// roles: eight undirected tollbooths plus the destinations.
pub fn undirected_stations() -> NetworkConfig {
    let full = trondheim_network();
    let mut stations: BTreeMap<String, NodeSpec> = BTreeMap::new();
    let mut order = Vec::new();
    for n in full.tollbooths() {
        let (station, _) = n.station_direction();
        match stations.get_mut(&station) {
            Some(s) => s.mean_volume += n.mean_volume,
            None => {
                order.push(station.clone());
                stations.insert(station.clone(), NodeSpec { name: station, training_only: false, ..n.clone() });
            }
        }
    }
    let mut nodes: Vec<NodeSpec> = order.iter().map(|s| stations[s].clone()).collect();
    nodes.extend(full.destinations().cloned());
    let cfg = NetworkConfig {
        name: "trondheim-stations".into(),
        nodes,
        passthrough_pairs: Vec::new(),
        ramp_nodes: None,
        boundary_tollbooth: None,
        destination_groups: full.destination_groups.clone(),
        scenario_subsets: full.scenario_subsets.clone(),
    };
    cfg.validate().expect("derived fixture is valid");
    cfg
}

/// The 500/400 passthrough hour with four destinations.
#[derive(Debug, Clone)]
pub struct WorkedExample {
    pub network: NetworkConfig,
    pub model: FusionModel,
    pub hour: HourKey,
    pub tollbooth: Vec<TollboothObservation>,
    pub routing: Vec<RoutingReportObservation>,
}

pub const WORKED_EXAMPLE_HOUR: &str = "2023-11-06T08:00";

/// Destination, people_flow reported there, predicted band counts
/// (passenger, light commercial, bus/medium truck).
const DESTINATIONS: [(&str, f64, [f64; 3]); 4] = [
    ("Heimsdalvegen", 200.0, [16.0, 2.0, 2.0]),
    ("Kattemskogen", 250.0, [20.0, 3.0, 2.0]),
    ("Heggstadmoen", 260.0, [21.0, 2.0, 2.0]),
    ("Brøttemsvegen", 300.0, [22.0, 5.0, 3.0]),
];

/// Chain of people_flow splits sending each destination's flow to its own
/// leaf. Thresholds sit between the flows listed in `DESTINATIONS`.
fn chain_tree(values: [f64; 4]) -> RegressionTree {
    use crate::fusion::TreeNode;
    let split = |threshold, left, right| Some(Split { feature: PEOPLE_FLOW, threshold, left, right });
    RegressionTree {
        nodes: vec![
            TreeNode { split: split(225.0, 1, 2), value: 0.0, cover: 4.0 },
            TreeNode { split: None, value: values[0], cover: 1.0 },
            TreeNode { split: split(255.0, 3, 4), value: 0.0, cover: 3.0 },
            TreeNode { split: None, value: values[1], cover: 1.0 },
            TreeNode { split: split(280.0, 5, 6), value: 0.0, cover: 2.0 },
            TreeNode { split: None, value: values[2], cover: 1.0 },
            TreeNode { split: None, value: values[3], cover: 1.0 },
        ],
    }
}

/// One tree per target, learning rate 1, zero base score.
pub fn worked_example_model() -> FusionModel {
    let band = |k: usize| {
        let mut v = [0.0; 4];
        if k < 3 {
            for (i, d) in DESTINATIONS.iter().enumerate() {
                v[i] = d.2[k];
            }
        }
        v
    };
    let targets = Target::ALL
        .into_iter()
        .map(|t| {
            let values = match t {
                Target::Total => DESTINATIONS.map(|d| d.2.iter().sum()),
                Target::Category(c) => band(c.index()),
            };
            TargetModel { target: t, base_score: 0.0, trees: vec![chain_tree(values)] }
        })
        .collect();
    let model = FusionModel {
        format_version: MODEL_FORMAT_VERSION,
        hyperparams: GbtHyperparams { n_trees: 1, max_depth: 3, learning_rate: 1.0, ..GbtHyperparams::default() },
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        targets,
    };
    model.validate().expect("handcrafted model is valid");
    model
}

pub fn worked_example() -> WorkedExample {
    let hour = HourKey::parse(WORKED_EXAMPLE_HOUR).expect("valid hour");
    let toll = |station: &str, direction, counts: [f64; VehicleCategory::COUNT]| TollboothObservation {
        station: station.into(),
        direction,
        hour,
        counts: CountsByCategory::from_categories(counts),
        flagged: false,
    };
    let tollbooth = vec![
        toll("E6-Klett", Direction::Undirected, [450.0, 30.0, 20.0, 0.0, 0.0, 0.0]),
        toll("Storlersbakken", Direction::Outbound, [355.0, 28.0, 17.0, 0.0, 0.0, 0.0]),
    ];
    let routing = DESTINATIONS
        .iter()
        .map(|(name, flow, _)| RoutingReportObservation {
            node: name.to_string(),
            hour,
            people_flow: *flow,
            road_tag: RoadTag::Secondary,
            censored: false,
        })
        .collect();
    let network = NetworkConfig::from_json(WORKED_EXAMPLE_NETWORK_JSON).expect("shipped fixture is valid");
    debug_assert!(network.destinations().all(|d| d.kind == NodeKind::InferredDestination));
    WorkedExample { network, model: worked_example_model(), hour, tollbooth, routing }
}
