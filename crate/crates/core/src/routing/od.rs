use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::fusion::{predict, FusionModel};
use crate::ingest::FeatureVector;
use crate::model::{
    map_vehicle_type, HourKey, NodeKind, RoutingReportObservation, TollboothObservation, VehicleCategory, VehicleType,
};

use super::{decide_flows, largest_remainder, FlowDecision, NetworkConfig, PhaseLedger, RoutingError, Scenario};

const NC: usize = VehicleCategory::COUNT;

/// Hourly probability mass over (destination, vehicle category).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub hour: HourKey,
    /// Sorted by destination name.
    pub destinations: Vec<String>,
    /// `mass[i][c]` for destination `i`, category index `c`.
    pub mass: Vec<[f64; NC]>,
    /// The table had no mass and was replaced by the uniform distribution.
    pub uniform_fallback: bool,
}

impl JointDistribution {
    /// Normalize a non-negative table; duplicate destinations are summed. An
    /// all-zero table becomes uniform with the fallback flag set.
    pub fn from_table(hour: HourKey, table: impl IntoIterator<Item = (String, [f64; NC])>) -> Self {
        let mut merged: BTreeMap<String, [f64; NC]> = BTreeMap::new();
        for (d, row) in table {
            let acc = merged.entry(d).or_insert([0.0; NC]);
            for c in 0..NC {
                acc[c] += row[c].max(0.0);
            }
        }
        let total: f64 = merged.values().flatten().sum();
        let n = (merged.len() * NC) as f64;
        let uniform_fallback = !(total > 0.0);
        let (destinations, mass) = merged
            .into_iter()
            .map(|(d, row)| (d, if uniform_fallback { [1.0 / n; NC] } else { row.map(|m| m / total) }))
            .unzip();
        JointDistribution { hour, destinations, mass, uniform_fallback }
    }

    pub fn get(&self, destination: &str, category: VehicleCategory) -> f64 {
        self.destinations.iter().position(|d| d == destination).map_or(0.0, |i| self.mass[i][category.index()])
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().flatten().sum()
    }

    /// Mass of each category summed over destinations.
    pub fn category_marginal(&self) -> [f64; NC] {
        let mut out = [0.0; NC];
        for row in &self.mass {
            for c in 0..NC {
                out[c] += row[c];
            }
        }
        out
    }
}

/// Predict every destination's band counts for `hour` and normalize them.
/// Censored rows carry no information and contribute zero mass.
pub fn infer_joint_distribution(
    model: &FusionModel,
    rows: &[RoutingReportObservation],
    hour: HourKey,
) -> Result<JointDistribution, RoutingError> {
    let rows: Vec<_> = rows.iter().filter(|r| r.hour == hour).collect();
    if rows.is_empty() {
        return Err(RoutingError::NoDestinationRows(hour.to_string()));
    }
    let table = rows.into_iter().map(|r| {
        let counts = if r.censored { [0.0; NC] } else { predict(model, &FeatureVector::from_observation(r)).counts };
        (r.node.clone(), counts)
    });
    let joint = JointDistribution::from_table(hour, table);
    if joint.uniform_fallback {
        log::debug!("hour {hour}: no predicted destination mass, using the uniform distribution");
    }
    Ok(joint)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    /// Destination probabilities, in the joint's destination order.
    pub global: Vec<(String, f64)>,
    /// Category distribution conditional on each destination.
    pub per_destination: Vec<(String, [f64; NC])>,
    /// Destinations with zero marginal that got the uniform category split.
    pub uniform_destinations: Vec<String>,
}

impl Marginals {
    pub fn global_of(&self, destination: &str) -> Option<f64> {
        self.global.iter().find(|(d, _)| d == destination).map(|(_, p)| *p)
    }

    pub fn categories_of(&self, destination: &str) -> Option<&[f64; NC]> {
        self.per_destination.iter().find(|(d, _)| d == destination).map(|(_, p)| p)
    }
}

pub fn marginals(joint: &JointDistribution) -> Marginals {
    let mut global = Vec::with_capacity(joint.destinations.len());
    let mut per_destination = Vec::with_capacity(joint.destinations.len());
    let mut uniform_destinations = Vec::new();
    for (d, row) in joint.destinations.iter().zip(&joint.mass) {
        let m: f64 = row.iter().sum();
        global.push((d.clone(), m));
        let cats = if m > 0.0 {
            row.map(|v| v / m)
        } else {
            uniform_destinations.push(d.clone());
            [1.0 / NC as f64; NC]
        };
        per_destination.push((d.clone(), cats));
    }
    Marginals { global, per_destination, uniform_destinations }
}

/// One OD matrix cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ODEntry {
    pub hour: HourKey,
    pub scenario: Scenario,
    pub origin: String,
    pub destination: String,
    pub vehicle_type: VehicleType,
    pub count: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ODMatrix {
    pub entries: Vec<ODEntry>,
}

impl ODMatrix {
    /// Sort into the published row order and merge duplicate cells.
    fn canonicalize(&mut self) {
        let mut merged: BTreeMap<(String, &'static str, String, String, &'static str), ODEntry> = BTreeMap::new();
        for e in self.entries.drain(..) {
            let key = (
                e.hour.to_string(),
                e.scenario.as_str(),
                e.origin.clone(),
                e.destination.clone(),
                e.vehicle_type.as_str(),
            );
            merged.entry(key).and_modify(|m| m.count += e.count).or_insert(e);
        }
        self.entries = merged.into_values().filter(|e| e.count > 0).collect();
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn sum_where(&self, pred: impl Fn(&ODEntry) -> bool) -> u64 {
        self.entries.iter().filter(|e| pred(e)).map(|e| e.count).sum()
    }
}

fn entry(d: &FlowDecision, dest: &str, category: VehicleCategory, count: u64) -> ODEntry {
    let (origin, destination) =
        if d.reversed { (dest.to_string(), d.origin.clone()) } else { (d.origin.clone(), dest.to_string()) };
    ODEntry { hour: d.hour, scenario: d.scenario, origin, destination, vehicle_type: map_vehicle_type(category), count }
}

fn split_categories(
    d: &FlowDecision,
    dest: &str,
    volume: u64,
    shares: &[f64; NC],
    out: &mut Vec<ODEntry>,
) -> Result<(), RoutingError> {
    let counts = largest_remainder(volume, shares)?;
    for (c, n) in VehicleCategory::ALL.into_iter().zip(counts) {
        if n > 0 {
            out.push(entry(d, dest, c, n));
        }
    }
    Ok(())
}

fn normalized_or_uniform(w: &[f64]) -> (Vec<f64>, bool) {
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        (w.iter().map(|x| x / s).collect(), false)
    } else {
        (vec![1.0 / w.len() as f64; w.len()], true)
    }
}

/// Global destination marginal renormalized over `eligible`; uniform (and
/// flagged) when the subset carries no mass. Unknown names count as zero.
pub fn subset_shares(m: &Marginals, eligible: &[String]) -> (Vec<f64>, bool) {
    let raw: Vec<f64> = eligible.iter().map(|d| m.global_of(d).unwrap_or(0.0)).collect();
    normalized_or_uniform(&raw)
}

/// Split a routed decision over its eligible destinations, then each
/// destination's share over vehicle categories. Returns the entries and
/// whether a uniform fallback was used.
///
/// Bypass decisions are not distributed here; see [`build_od_matrix`].
pub fn distribute(decision: &FlowDecision, joint: &JointDistribution) -> Result<(Vec<ODEntry>, bool), RoutingError> {
    if decision.scenario == Scenario::PassthroughBypass || decision.volume == 0 {
        return Ok((Vec::new(), false));
    }
    let m = marginals(joint);
    let missing: Vec<String> =
        decision.eligible_destinations.iter().filter(|d| m.global_of(d).is_none()).cloned().collect();
    if !missing.is_empty() || decision.eligible_destinations.is_empty() {
        return Err(RoutingError::NotSubset { hour: decision.hour.to_string(), missing });
    }
    let (weights, mut flagged) = subset_shares(&m, &decision.eligible_destinations);
    if flagged {
        log::debug!("hour {}: {} subset has no mass, splitting uniformly", decision.hour, decision.scenario);
    }
    let per_dest = largest_remainder(decision.volume, &weights)?;
    let mut out = Vec::new();
    for (dest, n) in decision.eligible_destinations.iter().zip(per_dest) {
        if n == 0 {
            continue;
        }
        flagged |= m.uniform_destinations.contains(dest);
        split_categories(decision, dest, n, m.categories_of(dest).expect("checked above"), &mut out)?;
    }
    Ok((out, flagged))
}

/// Decided versus distributed volume for one hour and scenario decision.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationRow {
    pub hour: HourKey,
    pub scenario: Scenario,
    pub direction: String,
    pub origin: String,
    pub decided: u64,
    pub distributed: u64,
    pub flagged: bool,
}

/// Everything the router produced for a run of hours.
#[derive(Debug, Clone, PartialEq)]
pub struct OdRun {
    pub matrix: ODMatrix,
    pub decisions: Vec<FlowDecision>,
    pub ledgers: Vec<PhaseLedger>,
    pub conservation: Vec<ConservationRow>,
}

struct HourOutput {
    entries: Vec<ODEntry>,
    decisions: Vec<FlowDecision>,
    ledger: PhaseLedger,
    conservation: Vec<ConservationRow>,
}

fn route_hour(
    network: &NetworkConfig,
    model: &FusionModel,
    toll: &BTreeMap<String, &TollboothObservation>,
    dest_rows: &[RoutingReportObservation],
    hour: HourKey,
) -> Result<HourOutput, RoutingError> {
    let joint = infer_joint_distribution(model, dest_rows, hour)?;
    let totals: BTreeMap<String, u64> =
        toll.iter().map(|(k, o)| (k.clone(), o.counts.total.max(0.0).round() as u64)).collect();
    let (decisions, ledger) = decide_flows(network, &totals, hour)?;

    let mut entries = Vec::new();
    let mut conservation = Vec::with_capacity(decisions.len());
    for d in &decisions {
        let (es, flagged) = if d.scenario == Scenario::PassthroughBypass {
            bypass_entries(d, toll, &joint)?
        } else {
            distribute(d, &joint)?
        };
        let distributed = es.iter().map(|e| e.count).sum();
        if distributed != d.volume {
            return Err(RoutingError::Conservation {
                hour: hour.to_string(),
                detail: format!("{} decided {} but distributed {distributed}", d.scenario, d.volume),
            });
        }
        conservation.push(ConservationRow {
            hour,
            scenario: d.scenario,
            direction: d.direction.clone(),
            origin: d.origin.clone(),
            decided: d.volume,
            distributed,
            flagged: flagged || joint.uniform_fallback,
        });
        entries.extend(es);
    }
    Ok(HourOutput { entries, decisions, ledger, conservation })
}

/// Bypass vehicles keep the upstream tollbooth's measured composition; if it
/// has none the joint's category marginal is used.
fn bypass_entries(
    d: &FlowDecision,
    toll: &BTreeMap<String, &TollboothObservation>,
    joint: &JointDistribution,
) -> Result<(Vec<ODEntry>, bool), RoutingError> {
    let mut out = Vec::new();
    if d.volume == 0 {
        return Ok((out, false));
    }
    let dest = d.bypass_destination.as_deref().expect("bypass decisions name the paired tollbooth");
    let measured = toll.get(&d.origin).map_or([0.0; NC], |o| o.counts.counts.map(|v| v.max(0.0)));
    let (mut shares, mut flagged) = normalized_or_uniform(&measured);
    if flagged {
        let (fallback, uniform) = normalized_or_uniform(&joint.category_marginal());
        shares = fallback;
        flagged = uniform || joint.uniform_fallback;
    }
    let shares: [f64; NC] = shares.try_into().expect("six categories");
    split_categories(d, dest, d.volume, &shares, &mut out)?;
    Ok((out, flagged))
}

/// Route every hour: joint inference, flow decisions, apportionment.
///
/// Hours are independent and evaluated in parallel; the matrix is returned in
/// canonical row order, so the output does not depend on scheduling.
pub fn build_od_matrix(
    network: &NetworkConfig,
    model: &FusionModel,
    tollbooth: &[TollboothObservation],
    routing: &[RoutingReportObservation],
    hours: &[HourKey],
) -> Result<OdRun, RoutingError> {
    let needed: BTreeSet<String> = network.routing_tollbooths().into_iter().collect();
    let destinations: BTreeSet<&str> =
        network.nodes.iter().filter(|n| n.kind == NodeKind::InferredDestination).map(|n| n.name.as_str()).collect();

    let mut toll_by_hour: BTreeMap<HourKey, BTreeMap<String, &TollboothObservation>> = BTreeMap::new();
    for o in tollbooth {
        let key = o.node_key();
        if needed.contains(&key) {
            toll_by_hour.entry(o.hour).or_default().insert(key, o);
        }
    }
    let mut dest_by_hour: BTreeMap<HourKey, Vec<RoutingReportObservation>> = BTreeMap::new();
    for r in routing.iter().filter(|r| destinations.contains(r.node.as_str())) {
        dest_by_hour.entry(r.hour).or_default().push(r.clone());
    }

    let empty_toll = BTreeMap::new();
    let outputs: Vec<HourOutput> = hours
        .par_iter()
        .map(|h| {
            let toll = toll_by_hour.get(h).unwrap_or(&empty_toll);
            let rows = dest_by_hour.get(h).map(Vec::as_slice).unwrap_or(&[]);
            route_hour(network, model, toll, rows, *h)
        })
        .collect::<Result<_, _>>()?;

    let mut run =
        OdRun { matrix: ODMatrix::default(), decisions: Vec::new(), ledgers: Vec::new(), conservation: Vec::new() };
    for o in outputs {
        run.matrix.entries.extend(o.entries);
        run.decisions.extend(o.decisions);
        run.ledgers.push(o.ledger);
        run.conservation.extend(o.conservation);
    }
    run.matrix.canonicalize();
    Ok(run)
}

fn create(path: &Path) -> Result<std::fs::File, RoutingError> {
    std::fs::File::create(path).map_err(|source| RoutingError::Io { path: path.display().to_string(), source })
}

pub fn write_od(out: impl Write, matrix: &ODMatrix) -> Result<(), RoutingError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "origin", "destination", "vehicle_type", "count", "scenario"])?;
    for e in &matrix.entries {
        w.write_record([
            e.hour.to_string().as_str(),
            &e.origin,
            &e.destination,
            e.vehicle_type.as_str(),
            &e.count.to_string(),
            e.scenario.as_str(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_od_csv(path: impl AsRef<Path>, matrix: &ODMatrix) -> Result<(), RoutingError> {
    write_od(create(path.as_ref())?, matrix)
}

/// Per-decision audit: decided volume against the OD cells it produced.
pub fn write_conservation(out: impl Write, rows: &[ConservationRow]) -> Result<(), RoutingError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "scenario", "direction", "origin", "decided_volume", "od_count", "fallback"])?;
    for r in rows {
        w.write_record([
            r.hour.to_string().as_str(),
            r.scenario.as_str(),
            &r.direction,
            &r.origin,
            &r.decided.to_string(),
            &r.distributed.to_string(),
            if r.flagged { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_conservation_csv(path: impl AsRef<Path>, rows: &[ConservationRow]) -> Result<(), RoutingError> {
    write_conservation(create(path.as_ref())?, rows)
}

/// Per-hour, per-tollbooth phase accounting.
pub fn write_ledger(out: impl Write, ledgers: &[PhaseLedger]) -> Result<(), RoutingError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "node", "raw", "internal", "local", "passthrough", "residual"])?;
    for l in ledgers {
        for n in &l.nodes {
            w.write_record([
                l.hour.to_string(),
                n.node.clone(),
                n.raw.to_string(),
                n.internal.to_string(),
                n.local.to_string(),
                n.passthrough.to_string(),
                n.residual().to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_ledger_csv(path: impl AsRef<Path>, ledgers: &[PhaseLedger]) -> Result<(), RoutingError> {
    write_ledger(create(path.as_ref())?, ledgers)
}
