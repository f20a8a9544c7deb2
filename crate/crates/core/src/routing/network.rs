use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{node_key, Direction, NodeId, NodeKind, RoadTag};

use super::{RoutingError, Scenario};

fn default_mean_volume() -> f64 {
    500.0
}

/// A node of the study network with the attributes the generator and the
/// router need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    /// Node key; `station:Inbound` / `station:Outbound` for directional
    /// tollbooth splits.
    pub name: String,
    pub kind: NodeKind,
    pub road_tag: RoadTag,
    /// Typical peak-hour vehicle volume, used only by the synthetic generator.
    #[serde(default = "default_mean_volume")]
    pub mean_volume: f64,
    /// Tollbooth used for model training but not at routing time.
    #[serde(default)]
    pub training_only: bool,
}

impl NodeSpec {
    pub fn id(&self) -> NodeId {
        NodeId::new(self.name.clone(), self.kind)
    }

    /// Tollbooth station and direction encoded in the node key.
    pub fn station_direction(&self) -> (String, Direction) {
        split_node_key(&self.name)
    }
}

/// Inverse of [`crate::model::node_key`].
pub fn split_node_key(key: &str) -> (String, Direction) {
    if let Some((station, dir)) = key.rsplit_once(':') {
        match dir {
            "Inbound" => return (station.to_string(), Direction::Inbound),
            "Outbound" => return (station.to_string(), Direction::Outbound),
            _ => {}
        }
    }
    (key.to_string(), Direction::Undirected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassthroughPair {
    pub upstream: String,
    pub downstream: String,
    pub axis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ramps {
    pub onramp: String,
    pub offramp: String,
}

/// Study-area topology: tollbooths, inferred destinations, the roles
/// tollbooths play in the routing phases, and which destination groups each
/// scenario may reach.
///
/// `scenario_subsets[Internal]` must name exactly two groups `[a, b]`: a
/// positive ramp imbalance routes internal flow from `a` into `b`, a negative
/// one from `b` into `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(default)]
    pub name: String,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub passthrough_pairs: Vec<PassthroughPair>,
    pub ramp_nodes: Option<Ramps>,
    pub boundary_tollbooth: Option<String>,
    pub destination_groups: BTreeMap<String, Vec<String>>,
    pub scenario_subsets: BTreeMap<Scenario, Vec<String>>,
}

impl NetworkConfig {
    pub fn from_json(json: &str) -> Result<Self, RoutingError> {
        let cfg: NetworkConfig =
            serde_json::from_str(json).map_err(|e| RoutingError::Config(format!("network JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RoutingError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| RoutingError::Config(format!("cannot read `{}`: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network config serializes")
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn tollbooths(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(|n| n.kind.is_tollbooth())
    }

    pub fn destinations(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::InferredDestination)
    }

    /// Destination names reachable in `scenario`, in config order and without
    /// duplicates.
    pub fn eligible(&self, scenario: Scenario) -> Vec<String> {
        self.groups_members(self.scenario_subsets.get(&scenario).map(Vec::as_slice).unwrap_or(&[]))
    }

    pub(crate) fn groups_members(&self, groups: &[String]) -> Vec<String> {
        let wanted: BTreeSet<&str> =
            groups.iter().filter_map(|g| self.destination_groups.get(g)).flatten().map(String::as_str).collect();
        self.destinations().filter(|d| wanted.contains(d.name.as_str())).map(|d| d.name.clone()).collect()
    }

    /// Tollbooth nodes whose counts the router reads each hour.
    pub fn routing_tollbooths(&self) -> Vec<String> {
        let mut names = Vec::new();
        if let Some(b) = &self.boundary_tollbooth {
            names.push(b.clone());
        }
        if let Some(r) = &self.ramp_nodes {
            names.push(r.onramp.clone());
            names.push(r.offramp.clone());
        }
        for p in &self.passthrough_pairs {
            names.push(p.upstream.clone());
            names.push(p.downstream.clone());
        }
        let mut seen = BTreeSet::new();
        names.retain(|n| seen.insert(n.clone()));
        names
    }

    pub fn validate(&self) -> Result<(), RoutingError> {
        let fail = |msg: String| Err(RoutingError::Config(msg));
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if n.name.trim().is_empty() {
                return fail("node with empty name".into());
            }
            if !seen.insert(n.name.as_str()) {
                return fail(format!("duplicate node name `{}`", n.name));
            }
            if !(n.mean_volume >= 0.0 && n.mean_volume.is_finite()) {
                return fail(format!("node `{}`: mean_volume must be non-negative", n.name));
            }
            if n.kind.is_tollbooth() {
                let (station, dir) = n.station_direction();
                if node_key(&station, dir) != n.name {
                    return fail(format!("node `{}`: malformed tollbooth key", n.name));
                }
            }
        }
        let need_kind = |name: &str, role: &str, ok: &dyn Fn(NodeKind) -> bool| -> Result<(), RoutingError> {
            match self.node(name) {
                None => Err(RoutingError::Config(format!("{role} references unknown node `{name}`"))),
                Some(n) if !ok(n.kind) => {
                    Err(RoutingError::Config(format!("{role} node `{name}` has kind {:?}", n.kind)))
                }
                Some(n) if n.training_only => {
                    Err(RoutingError::Config(format!("{role} node `{name}` is marked training_only")))
                }
                Some(_) => Ok(()),
            }
        };
        let main = |k: NodeKind| k == NodeKind::MainTollbooth;
        for p in &self.passthrough_pairs {
            need_kind(&p.upstream, "passthrough pair", &main)?;
            need_kind(&p.downstream, "passthrough pair", &main)?;
            if p.upstream == p.downstream {
                return fail(format!("passthrough pair on axis `{}` pairs a node with itself", p.axis));
            }
        }
        if let Some(r) = &self.ramp_nodes {
            need_kind(&r.onramp, "onramp", &main)?;
            need_kind(&r.offramp, "offramp", &main)?;
        }
        if let Some(b) = &self.boundary_tollbooth {
            need_kind(b, "boundary tollbooth", &|k: NodeKind| k.is_tollbooth())?;
            if self.ramp_nodes.is_none() {
                return fail("boundary tollbooth requires ramp nodes".into());
            }
        }
        let mut grouped = BTreeSet::new();
        for (label, members) in &self.destination_groups {
            for m in members {
                match self.node(m) {
                    Some(n) if n.kind == NodeKind::InferredDestination => {
                        grouped.insert(m.as_str());
                    }
                    Some(_) => return fail(format!("group `{label}` member `{m}` is not an inferred destination")),
                    None => return fail(format!("group `{label}` references unknown node `{m}`")),
                }
            }
        }
        if let Some(d) = self.destinations().find(|d| !grouped.contains(d.name.as_str())) {
            return fail(format!("destination `{}` belongs to no group", d.name));
        }
        for (scenario, groups) in &self.scenario_subsets {
            if *scenario == Scenario::PassthroughBypass {
                return fail("PassthroughBypass has no destination subset".into());
            }
            if let Some(g) = groups.iter().find(|g| !self.destination_groups.contains_key(*g)) {
                return fail(format!("scenario {scenario} references unknown group `{g}`"));
            }
        }
        let required: &[Scenario] = match (&self.boundary_tollbooth, &self.ramp_nodes) {
            (Some(_), Some(_)) => &[Scenario::Internal, Scenario::LocalInflow, Scenario::LocalOutflow],
            (None, Some(_)) => &[Scenario::LocalInflow, Scenario::LocalOutflow],
            _ => &[],
        };
        for s in required.iter().chain(if self.passthrough_pairs.is_empty() {
            [].iter()
        } else {
            [Scenario::PassthroughNet].iter()
        }) {
            if self.scenario_subsets.get(s).is_none_or(Vec::is_empty) {
                return fail(format!("scenario {s} needs at least one destination group"));
            }
        }
        if self.boundary_tollbooth.is_some() && self.scenario_subsets.get(&Scenario::Internal).map(Vec::len) != Some(2)
        {
            return fail("scenario Internal must name exactly two groups [from, to]".into());
        }
        Ok(())
    }
}
