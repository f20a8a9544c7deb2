//! Compare the diurnal and weekly people_flow profiles of two synthetic
//! periods four years apart.

use odfusion::fixtures::trondheim_network;
use odfusion::ingest::{generate_synthetic_from, BiasProfile};
use odfusion::stability::{stability_report, DEFAULT_EPSILON};
use odfusion::HourKey;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let network = trondheim_network();
    let period = |start: &str, seed| -> Result<_, Box<dyn std::error::Error>> {
        let data = generate_synthetic_from(&network, HourKey::parse(start)?, 28, &BiasProfile::biased(seed))?;
        Ok(data.routing.into_iter().filter(|r| !r.censored).collect::<Vec<_>>())
    };
    let (early, late) = (period("2019-11-04T00:00", 19)?, period("2023-11-06T00:00", 23)?);
    let rows = stability_report(&early, &late, DEFAULT_EPSILON)?;

    let show = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.5}"));
    println!("{:<24} {:<8} {:>9} {:>11} {:>9}", "node", "profile", "pearson", "sym_kl", "nmse");
    for r in &rows {
        println!(
            "{:<24} {:<8} {:>9} {:>11.3e} {:>9}",
            r.node.as_deref().unwrap_or("(pooled)"),
            r.kind.as_str(),
            show(r.pearson),
            r.sym_kl,
            show(r.nmse)
        );
    }
    Ok(())
}
