//! Full run on three synthetic days: generate, train, evaluate, explain,
//! compare periods and route, writing every artifact to a directory.
//!
//! `cargo run --release --example od_pipeline -- [out_dir]`

use odfusion::fusion::GbtHyperparams;
use odfusion::pipeline::{run_all, DataSource, RunConfig, SyntheticSpec, OD_FILE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/od_pipeline".into());
    let defaults = RunConfig::default();
    let DataSource::Synthetic(spec) = defaults.data.clone() else { unreachable!() };
    let cfg = RunConfig {
        data: DataSource::Synthetic(SyntheticSpec { days: 3, ..spec }),
        hyperparams: GbtHyperparams { n_trees: 80, max_depth: 4, ..GbtHyperparams::default() },
        out_dir: out.into(),
        seed: 7,
        ..defaults
    };
    run_all(&cfg)?;

    let od = std::fs::read_to_string(cfg.out(OD_FILE))?;
    println!("{}", od.lines().take(12).collect::<Vec<_>>().join("\n"));
    println!("... {} OD rows in {}", od.lines().count() - 1, cfg.out_dir.display());
    Ok(())
}
