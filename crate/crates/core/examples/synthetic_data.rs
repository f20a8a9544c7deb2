//! Generate a week of synthetic tollbooth and mobility data and show how the
//! people_flow signal distorts the true counts on each road class.

use std::collections::BTreeMap;

use odfusion::fixtures::trondheim_network;
use odfusion::ingest::{build_dataset, generate_synthetic, BiasProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let network = trondheim_network();
    let data = generate_synthetic(&network, 7, &BiasProfile::biased(42))?;
    let censored = data.routing.iter().filter(|r| r.censored).count();
    println!("{} tollbooth rows, {} routing rows ({censored} censored)", data.tollbooth.len(), data.routing.len());

    let ds = build_dataset(&data.tollbooth, &data.routing, 0.2)?;
    let mut by_tag: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for r in &ds.rows {
        let e = by_tag.entry(r.features.road_tag.as_str()).or_default();
        e.0 += r.features.people_flow;
        e.1 += r.target.total;
    }
    for (tag, (flow, count)) in by_tag {
        println!("{tag:<10} people_flow / count = {:.2}", flow / count);
    }
    Ok(())
}
