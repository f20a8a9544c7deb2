//! Config-driven commands: synth, train, eval, explain, stability, route.
//!
//! A run is described by one JSON [`RunConfig`]. Every command reads the
//! artifacts of the commands before it from `out_dir` and writes its own
//! there; rerunning a command overwrites its outputs with identical bytes.
//!
//! Relative data, network and reference paths in a config file are resolved
//! against the file's directory; `out_dir` is relative to the working
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attribution::{
    global_importance, permutation_importance, shap_matrix, write_permutation_csv, write_shap_rows_csv,
    AttributionError,
};
use crate::fixtures::trondheim_network;
use crate::fusion::{
    evaluate, residual_table, train, write_metrics_csv, write_residuals_csv, FusionError, FusionModel, GbtHyperparams,
    Target,
};
use crate::ingest::{
    build_dataset, difference_series, generate_synthetic_from, read_routing_csv, read_tollbooth_csv,
    write_difference_csv, write_routing_csv, write_tollbooth_csv, BiasProfile, FusionDataset, IngestError,
    DEFAULT_SYNTHETIC_START,
};
use crate::model::{HourKey, RoutingReportObservation, TollboothObservation};
use crate::routing::{
    build_od_matrix, write_conservation_csv, write_ledger_csv, write_od_csv, NetworkConfig, RoutingError,
};
use crate::stability::{stability_report, write_node_report_csv, write_report_csv, StabilityError, DEFAULT_EPSILON};

pub const TOLLBOOTH_FILE: &str = "tollbooth.csv";
pub const ROUTING_FILE: &str = "routing.csv";
pub const MODEL_FILE: &str = "model.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const RESIDUALS_FILE: &str = "residuals.csv";
pub const DIFFERENCE_FILE: &str = "difference.csv";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const IMPORTANCE_GROUPED_FILE: &str = "importance_grouped.csv";
pub const SHAP_FILE: &str = "shap_values.csv";
pub const PERMUTATION_FILE: &str = "permutation_importance.csv";
pub const STABILITY_FILE: &str = "stability.csv";
pub const STABILITY_NODES_FILE: &str = "stability_nodes.csv";
pub const OD_FILE: &str = "od_matrix.csv";
pub const LEDGER_FILE: &str = "ledger.csv";
pub const CONSERVATION_FILE: &str = "conservation.csv";

/// Failure of a command, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    /// Bad flags, config or parameters (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Missing, unreadable or unusable input data (exit 2).
    #[error("{0}")]
    Data(String),
    /// An internal consistency check failed (exit 3).
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Usage(_) => 1,
            PipelineError::Data(_) => 2,
            PipelineError::Invariant(_) => 3,
        }
    }
}

impl From<IngestError> for PipelineError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidSynthetic(_) | IngestError::InvalidFraction(_) => PipelineError::Usage(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<FusionError> for PipelineError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::InvalidHyperparams(_) => PipelineError::Usage(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<AttributionError> for PipelineError {
    fn from(e: AttributionError) -> Self {
        match e {
            AttributionError::MissingCover { .. } => PipelineError::Invariant(e.to_string()),
            AttributionError::ZeroRepeats => PipelineError::Usage(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<RoutingError> for PipelineError {
    fn from(e: RoutingError) -> Self {
        match e {
            RoutingError::Config(_) => PipelineError::Usage(e.to_string()),
            RoutingError::NegativeResidual { .. } | RoutingError::Conservation { .. } | RoutingError::Weights(_) => {
                PipelineError::Invariant(e.to_string())
            }
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<StabilityError> for PipelineError {
    fn from(e: StabilityError) -> Self {
        match e {
            StabilityError::Epsilon(_) => PipelineError::Usage(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub days: u32,
    #[serde(default = "default_start")]
    pub start: HourKey,
    /// Defaults to [`BiasProfile::biased`]. Its seed is replaced by the run seed.
    #[serde(default)]
    pub bias: Option<BiasProfile>,
}

fn default_start() -> HourKey {
    HourKey::parse(DEFAULT_SYNTHETIC_START).expect("valid default start")
}

/// Where observations come from: exactly one variant per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Files { tollbooth: PathBuf, routing: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSpec {
    pub target: Target,
    pub permutation_repeats: usize,
}

impl Default for ExplainSpec {
    fn default() -> Self {
        ExplainSpec { target: Target::Total, permutation_repeats: 5 }
    }
}

/// Hours to route; by default every hour covered by the tollbooth data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouteSpec {
    pub start: Option<HourKey>,
    pub hours: Option<u32>,
}

/// Periods to compare. Without a reference file the run's own routing data
/// is split into its earlier and later halves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySpec {
    pub reference_routing: Option<PathBuf>,
    pub epsilon: f64,
}

impl Default for StabilitySpec {
    fn default() -> Self {
        StabilitySpec { reference_routing: None, epsilon: DEFAULT_EPSILON }
    }
}

fn default_valid_fraction() -> f64 {
    0.2
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    /// Network JSON; the built-in Trondheim network when absent.
    #[serde(default)]
    pub network: Option<PathBuf>,
    /// Model read by eval, explain and route instead of `out_dir/model.json`.
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub hyperparams: GbtHyperparams,
    #[serde(default = "default_valid_fraction")]
    pub valid_fraction: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub explain: ExplainSpec,
    #[serde(default)]
    pub route: RouteSpec,
    #[serde(default)]
    pub stability: StabilitySpec,
}

impl Default for RunConfig {
    /// 30 synthetic days on the Trondheim network with the biased profile.
    fn default() -> Self {
        RunConfig {
            data: DataSource::Synthetic(SyntheticSpec { days: 30, start: default_start(), bias: None }),
            network: None,
            model: None,
            hyperparams: GbtHyperparams::default(),
            valid_fraction: default_valid_fraction(),
            out_dir: default_out_dir(),
            seed: 0,
            explain: ExplainSpec::default(),
            route: RouteSpec::default(),
            stability: StabilitySpec::default(),
        }
    }
}

impl RunConfig {
    /// Parse a config; errors name the offending field path.
    pub fn from_json(json: &str) -> Result<Self, PipelineError> {
        let de = &mut serde_json::Deserializer::from_str(json);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            PipelineError::Usage(format!("config field `{path}`: {}", e.into_inner()))
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Usage(format!("cannot read config `{}`: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DataSource::Files { tollbooth, routing } = &mut cfg.data {
            resolve(tollbooth);
            resolve(routing);
        }
        for p in [&mut cfg.network, &mut cfg.model].into_iter().flatten() {
            resolve(p);
        }
        if let Some(r) = &mut cfg.stability.reference_routing {
            resolve(r);
        }
        Ok(cfg)
    }

    /// Hex SHA-256 of the effective config, logged by every command.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn out(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }

    fn bias(&self, spec: &SyntheticSpec) -> BiasProfile {
        BiasProfile { seed: self.seed, ..spec.bias.unwrap_or_else(|| BiasProfile::biased(self.seed)) }
    }

    fn hyperparams(&self) -> GbtHyperparams {
        GbtHyperparams { seed: self.seed, ..self.hyperparams }
    }

    pub fn network(&self) -> Result<NetworkConfig, PipelineError> {
        match &self.network {
            Some(p) => Ok(NetworkConfig::load(p)?),
            None => Ok(trondheim_network()),
        }
    }

    fn data_paths(&self) -> (PathBuf, PathBuf, &'static str) {
        match &self.data {
            DataSource::Synthetic(_) => (self.out(TOLLBOOTH_FILE), self.out(ROUTING_FILE), "synth"),
            DataSource::Files { tollbooth, routing } => (tollbooth.clone(), routing.clone(), ""),
        }
    }
}

fn begin(cmd: &str, cfg: &RunConfig) -> Result<(), PipelineError> {
    log::info!("{cmd}: config sha256 {}", cfg.hash());
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| PipelineError::Data(format!("cannot create `{}`: {e}", cfg.out_dir.display())))
}

/// Fail with a data error naming `path` when an upstream artifact is absent.
fn require(path: &Path, producer: &str) -> Result<(), PipelineError> {
    if path.exists() {
        return Ok(());
    }
    let hint = if producer.is_empty() { String::new() } else { format!("; run `{producer}` first") };
    Err(PipelineError::Data(format!("missing input `{}`{hint}", path.display())))
}

fn load_observations(
    cfg: &RunConfig,
) -> Result<(Vec<TollboothObservation>, Vec<RoutingReportObservation>), PipelineError> {
    let (toll, routing, producer) = cfg.data_paths();
    require(&toll, producer)?;
    require(&routing, producer)?;
    Ok((read_tollbooth_csv(&toll)?, read_routing_csv(&routing)?))
}

fn load_dataset(cfg: &RunConfig) -> Result<FusionDataset, PipelineError> {
    let (toll, routing) = load_observations(cfg)?;
    let ds = build_dataset(&toll, &routing, cfg.valid_fraction)?;
    log::info!("dataset: {} rows, {} for training", ds.rows.len(), ds.train().len());
    Ok(ds)
}

fn load_model(cfg: &RunConfig) -> Result<FusionModel, PipelineError> {
    let path = cfg.model.clone().unwrap_or_else(|| cfg.out(MODEL_FILE));
    require(&path, "train")?;
    Ok(FusionModel::load(&path)?)
}

/// Generate synthetic tollbooth and routing CSVs.
pub fn cmd_synth(cfg: &RunConfig) -> Result<(), PipelineError> {
    let DataSource::Synthetic(spec) = &cfg.data else {
        return Err(PipelineError::Usage("synth needs a `data.synthetic` section in the config".into()));
    };
    if spec.days == 0 {
        return Err(PipelineError::Usage("--days must be at least 1".into()));
    }
    begin("synth", cfg)?;
    let network = cfg.network()?;
    let data = generate_synthetic_from(&network, spec.start, spec.days, &cfg.bias(spec))?;
    write_tollbooth_csv(cfg.out(TOLLBOOTH_FILE), &data.tollbooth)?;
    write_routing_csv(cfg.out(ROUTING_FILE), &data.routing)?;
    log::info!("synth: {} tollbooth rows, {} routing rows", data.tollbooth.len(), data.routing.len());
    Ok(())
}

/// Fit the multi-target model and write `model.json`.
pub fn cmd_train(cfg: &RunConfig) -> Result<(), PipelineError> {
    begin("train", cfg)?;
    let ds = load_dataset(cfg)?;
    let model = train(&ds, &cfg.hyperparams())?;
    model.save(cfg.out(MODEL_FILE))?;
    Ok(())
}

/// Metrics table, residuals and the mean flow/count difference table.
pub fn cmd_eval(cfg: &RunConfig) -> Result<(), PipelineError> {
    begin("eval", cfg)?;
    let model = load_model(cfg)?;
    let (toll, routing) = load_observations(cfg)?;
    let ds = build_dataset(&toll, &routing, cfg.valid_fraction)?;
    let report = evaluate(&model, &ds)?;
    write_metrics_csv(cfg.out(METRICS_FILE), &report)?;
    write_residuals_csv(cfg.out(RESIDUALS_FILE), &residual_table(&model, &ds)?)?;
    write_difference_csv(cfg.out(DIFFERENCE_FILE), &difference_series(&toll, &routing))?;
    let r2 = |m: &crate::fusion::TargetMetrics| m.valid.r2.map_or("NA".into(), |v| format!("{v:.4}"));
    log::info!(
        "eval: valid R² total {} | people_flow {} | people_flow rescaled {}",
        r2(report.get(Target::Total)),
        r2(&report.baseline),
        r2(&report.baseline_rescaled)
    );
    Ok(())
}

/// Shapley and permutation importance over the validation rows.
pub fn cmd_explain(cfg: &RunConfig) -> Result<(), PipelineError> {
    begin("explain", cfg)?;
    let model = load_model(cfg)?;
    let ds = load_dataset(cfg)?;
    let target = cfg.explain.target;
    let rows: Vec<_> = ds.valid().iter().map(|r| r.features).collect();
    let attributions = shap_matrix(&model, target, &rows)?;
    for (x, a) in rows.iter().zip(&attributions) {
        let raw = model.raw_score(target, x);
        if (a.prediction() - raw).abs() > 1e-6 {
            return Err(PipelineError::Invariant(format!(
                "attribution sum {} differs from prediction {raw}",
                a.prediction()
            )));
        }
    }
    let importance = global_importance(&model, target, &rows)?;
    importance.write_csv(cfg.out(IMPORTANCE_FILE))?;
    importance.grouped().write_csv(cfg.out(IMPORTANCE_GROUPED_FILE))?;
    write_shap_rows_csv(cfg.out(SHAP_FILE), &attributions)?;
    let drops = permutation_importance(&model, target, &ds, cfg.explain.permutation_repeats, cfg.seed)?;
    write_permutation_csv(cfg.out(PERMUTATION_FILE), &drops)?;
    Ok(())
}

/// Diurnal and weekly profile comparison between two periods.
pub fn cmd_stability(cfg: &RunConfig) -> Result<(), PipelineError> {
    begin("stability", cfg)?;
    let (_, routing_path, producer) = cfg.data_paths();
    require(&routing_path, producer)?;
    let current: Vec<_> = read_routing_csv(&routing_path)?.into_iter().filter(|r| !r.censored).collect();
    let (a, b) = match &cfg.stability.reference_routing {
        Some(reference) => {
            require(reference, "")?;
            let earlier: Vec<_> = read_routing_csv(reference)?.into_iter().filter(|r| !r.censored).collect();
            (earlier, current)
        }
        None => {
            let mut hours: Vec<HourKey> = current.iter().map(|r| r.hour).collect();
            hours.sort();
            hours.dedup();
            if hours.len() < 2 {
                return Err(PipelineError::Data("stability needs at least two distinct hours".into()));
            }
            let cut = hours[hours.len() / 2];
            current.into_iter().partition(|r| r.hour < cut)
        }
    };
    let rows = stability_report(&a, &b, cfg.stability.epsilon)?;
    write_report_csv(cfg.out(STABILITY_FILE), &rows)?;
    write_node_report_csv(cfg.out(STABILITY_NODES_FILE), &rows)?;
    Ok(())
}

/// Hourly OD matrix plus the phase ledger and per-decision conservation audit.
pub fn cmd_route(cfg: &RunConfig) -> Result<(), PipelineError> {
    begin("route", cfg)?;
    let model = load_model(cfg)?;
    let network = cfg.network()?;
    let (toll, routing) = load_observations(cfg)?;
    let (Some(first), Some(last)) = (toll.iter().map(|t| t.hour).min(), toll.iter().map(|t| t.hour).max()) else {
        return Err(PipelineError::Data("no tollbooth observations to route".into()));
    };
    let start = cfg.route.start.unwrap_or(first);
    let span = (last.timestamp() - start.timestamp()).num_hours() + 1;
    let n = cfg.route.hours.map_or(span, i64::from);
    if n <= 0 {
        return Err(PipelineError::Usage(format!("route window starting {start} contains no hours")));
    }
    let hours: Vec<HourKey> = (0..n).map(|i| start.plus_hours(i)).collect();
    let run = build_od_matrix(&network, &model, &toll, &routing, &hours)?;
    if let Some(c) = run.conservation.iter().find(|c| c.decided != c.distributed) {
        return Err(PipelineError::Invariant(format!("hour {}: {} not conserved", c.hour, c.scenario)));
    }
    write_od_csv(cfg.out(OD_FILE), &run.matrix)?;
    write_ledger_csv(cfg.out(LEDGER_FILE), &run.ledgers)?;
    write_conservation_csv(cfg.out(CONSERVATION_FILE), &run.conservation)?;
    let fallbacks = run.conservation.iter().filter(|c| c.flagged).count();
    if fallbacks > 0 {
        log::warn!("route: {fallbacks} decisions used a uniform fallback split (see {CONSERVATION_FILE})");
    }
    log::info!("route: {} hours, {} OD rows, {} vehicles", hours.len(), run.matrix.entries.len(), run.matrix.total());
    Ok(())
}

/// synth (for synthetic runs), train, eval, explain, stability, route.
pub fn run_all(cfg: &RunConfig) -> Result<(), PipelineError> {
    if matches!(cfg.data, DataSource::Synthetic(_)) {
        cmd_synth(cfg)?;
    }
    cmd_train(cfg)?;
    cmd_eval(cfg)?;
    cmd_explain(cfg)?;
    cmd_stability(cfg)?;
    cmd_route(cfg)
}
