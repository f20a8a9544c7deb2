//! Seeded generator for paired tollbooth / routing-report data.
//!
//! Each (node, hour) gets a latent vehicle count from a diurnal x weekly
//! template scaled by the node's `mean_volume`. Tollbooth nodes report that
//! count split into length bands; every node reports a people_flow equal to
//! the count times a road-tag gain (optionally modulated by hour of day),
//! plus relative Gaussian noise, suppressed below the censor threshold.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::model::{
    CountsByCategory, HourKey, RoadTag, RoutingReportObservation, TollboothObservation, VehicleCategory,
};
use crate::routing::NetworkConfig;

use super::IngestError;

/// First hour of generated data unless another start is given.
pub const DEFAULT_SYNTHETIC_START: &str = "2023-11-01T00:00";

/// One value per road tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagValues {
    pub primary: f64,
    pub trunk: f64,
    pub secondary: f64,
}

impl TagValues {
    pub fn uniform(v: f64) -> Self {
        TagValues { primary: v, trunk: v, secondary: v }
    }

    pub fn get(&self, tag: RoadTag) -> f64 {
        match tag {
            RoadTag::Primary => self.primary,
            RoadTag::Trunk => self.trunk,
            RoadTag::Secondary => self.secondary,
        }
    }
}

/// How the synthetic mobility signal distorts the true vehicle count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasProfile {
    /// Multiplicative gain of people_flow over the vehicle count.
    pub gains: TagValues,
    /// Standard deviation of the additive noise, relative to the biased flow.
    pub noise: TagValues,
    /// Amplitude of an hour-of-day modulation of the gain (peak 14:00,
    /// trough 02:00). Zero disables it.
    #[serde(default)]
    pub diurnal_bias: f64,
    /// Flows strictly below this value are reported as censored.
    pub censor_threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

impl BiasProfile {
    /// people_flow equals the tollbooth total exactly.
    pub fn identity(seed: u64) -> Self {
        BiasProfile {
            gains: TagValues::uniform(1.0),
            noise: TagValues::uniform(0.0),
            diurnal_bias: 0.0,
            censor_threshold: 0.0,
            seed,
        }
    }

    /// Highways over-represented, smaller roads under-represented, 10% noise,
    /// a time-of-day distortion and privacy censoring.
    pub fn biased(seed: u64) -> Self {
        BiasProfile {
            gains: TagValues { primary: 1.4, trunk: 1.0, secondary: 0.7 },
            noise: TagValues::uniform(0.1),
            diurnal_bias: 0.3,
            censor_threshold: 20.0,
            seed,
        }
    }

    fn validate(&self) -> Result<(), IngestError> {
        for tag in RoadTag::ALL {
            let (g, n) = (self.gains.get(tag), self.noise.get(tag));
            if !(g > 0.0 && g.is_finite()) {
                return Err(IngestError::InvalidSynthetic(format!("gain for {tag} must be positive, got {g}")));
            }
            if !(n >= 0.0 && n.is_finite()) {
                return Err(IngestError::InvalidSynthetic(format!("noise for {tag} must be non-negative, got {n}")));
            }
        }
        if !(self.diurnal_bias >= 0.0 && self.diurnal_bias < 1.0) {
            return Err(IngestError::InvalidSynthetic(format!(
                "diurnal_bias must lie in [0, 1), got {}",
                self.diurnal_bias
            )));
        }
        if !(self.censor_threshold >= 0.0 && self.censor_threshold.is_finite()) {
            return Err(IngestError::InvalidSynthetic(format!(
                "censor_threshold must be non-negative, got {}",
                self.censor_threshold
            )));
        }
        Ok(())
    }

    /// Effective gain for a road tag at an hour of day.
    pub fn gain_at(&self, tag: RoadTag, hour_of_day: u8) -> f64 {
        let phase = 2.0 * PI * (f64::from(hour_of_day) - 14.0) / 24.0;
        self.gains.get(tag) * (1.0 + self.diurnal_bias * phase.cos())
    }
}

/// Generator-side record of the latent state behind one (node, hour).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentRecord {
    pub node: String,
    pub hour: HourKey,
    pub expected_total: f64,
    pub total: f64,
    pub gain: f64,
    /// people_flow before censoring.
    pub flow: f64,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub tollbooth: Vec<TollboothObservation>,
    pub routing: Vec<RoutingReportObservation>,
    pub latent: Vec<LatentRecord>,
}

/// Relative traffic level by hour; weekday double peak, flatter weekend.
pub fn diurnal_template(hour_of_day: u8, weekend: bool) -> f64 {
    let h = f64::from(hour_of_day);
    let bump = |centre: f64, width: f64| (-0.5 * ((h - centre) / width).powi(2)).exp();
    if weekend {
        0.08 + 0.6 * bump(13.0, 3.5)
    } else {
        0.06 + 1.0 * bump(7.5, 1.3) + 0.45 * bump(12.0, 3.0) + 0.9 * bump(16.0, 1.8)
    }
}

/// Relative traffic level by day of week (0 = Monday).
pub fn weekly_template(day_of_week: u8) -> f64 {
    [1.0, 1.0, 1.02, 1.04, 1.08, 0.8, 0.65][usize::from(day_of_week)]
}

fn base_composition(tag: RoadTag) -> [f64; VehicleCategory::COUNT] {
    match tag {
        RoadTag::Primary => [0.82, 0.07, 0.045, 0.025, 0.033, 0.007],
        RoadTag::Trunk => [0.79, 0.08, 0.055, 0.03, 0.037, 0.008],
        RoadTag::Secondary => [0.88, 0.06, 0.04, 0.01, 0.008, 0.002],
    }
}

fn split_categories(total: u64, shares: &[f64; VehicleCategory::COUNT], rng: &mut ChaCha8Rng) -> [f64; 6] {
    let mut out = [0.0; VehicleCategory::COUNT];
    let mut remaining = total;
    let mut mass_left = 1.0;
    for k in 0..VehicleCategory::COUNT - 1 {
        let p = if mass_left > 0.0 { (shares[k] / mass_left).clamp(0.0, 1.0) } else { 0.0 };
        let n = if remaining == 0 || p == 0.0 {
            0
        } else {
            Binomial::new(remaining, p).expect("probability in [0, 1]").sample(rng)
        };
        out[k] = n as f64;
        remaining -= n;
        mass_left -= shares[k];
    }
    out[VehicleCategory::COUNT - 1] = remaining as f64;
    out
}

/// [`generate_synthetic_from`] starting at [`DEFAULT_SYNTHETIC_START`].
pub fn generate_synthetic(
    network: &NetworkConfig,
    days: u32,
    profile: &BiasProfile,
) -> Result<SyntheticData, IngestError> {
    let start = HourKey::parse(DEFAULT_SYNTHETIC_START).expect("valid default start");
    generate_synthetic_from(network, start, days, profile)
}

pub fn generate_synthetic_from(
    network: &NetworkConfig,
    start: HourKey,
    days: u32,
    profile: &BiasProfile,
) -> Result<SyntheticData, IngestError> {
    if days == 0 {
        return Err(IngestError::InvalidSynthetic("days must be at least 1".into()));
    }
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);

    let compositions: Vec<[f64; VehicleCategory::COUNT]> = network
        .nodes
        .iter()
        .map(|n| {
            let mut c = base_composition(n.road_tag);
            for s in c.iter_mut() {
                *s *= rng.gen_range(0.8..1.2);
            }
            let sum: f64 = c.iter().sum();
            c.map(|s| s / sum)
        })
        .collect();

    let hours = i64::from(days) * 24;
    let mut data = SyntheticData { tollbooth: Vec::new(), routing: Vec::new(), latent: Vec::new() };
    for h in 0..hours {
        let hour = start.plus_hours(h);
        let level = diurnal_template(hour.hour_of_day(), hour.is_weekend()) * weekly_template(hour.day_of_week());
        for (node, composition) in network.nodes.iter().zip(&compositions) {
            let expected_total = node.mean_volume * level;
            let total = if expected_total > 0.0 {
                Poisson::new(expected_total).expect("positive rate").sample(&mut rng)
            } else {
                0.0
            };
            let counts = split_categories(total as u64, composition, &mut rng);
            let gain = profile.gain_at(node.road_tag, hour.hour_of_day());
            let biased = gain * total;
            let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(&mut rng);
            let flow = (biased + z * profile.noise.get(node.road_tag) * biased).round().max(0.0);
            let censored = flow < profile.censor_threshold;

            if node.kind.is_tollbooth() {
                let (station, direction) = node.station_direction();
                data.tollbooth.push(TollboothObservation {
                    station,
                    direction,
                    hour,
                    counts: CountsByCategory::from_categories(counts),
                    flagged: false,
                });
            }
            data.routing.push(RoutingReportObservation {
                node: node.name.clone(),
                hour,
                people_flow: if censored { 0.0 } else { flow },
                road_tag: node.road_tag,
                censored,
            });
            data.latent.push(LatentRecord {
                node: node.name.clone(),
                hour,
                expected_total,
                total,
                gain,
                flow,
                censored,
            });
        }
    }
    Ok(data)
}
