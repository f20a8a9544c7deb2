//! Train the seven target models on 30 synthetic days and compare them with
//! using people_flow directly.

use odfusion::fixtures::trondheim_network;
use odfusion::fusion::{evaluate, train, GbtHyperparams, Target};
use odfusion::ingest::{build_dataset, generate_synthetic, BiasProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_synthetic(&trondheim_network(), 30, &BiasProfile::biased(1))?;
    let ds = build_dataset(&data.tollbooth, &data.routing, 0.2)?;
    let model = train(&ds, &GbtHyperparams::default())?;
    let report = evaluate(&model, &ds)?;

    let r2 = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.3}"));
    println!("{:<22} {:>8} {:>8}", "target", "rmse", "R²");
    println!("{:<22} {:>8.2} {:>8}", "peopleFlow", report.baseline.valid.rmse, r2(report.baseline.valid.r2));
    for t in Target::ALL {
        let m = report.get(t).valid;
        println!("{:<22} {:>8.2} {:>8}", t.label(), m.rmse, r2(m.r2));
    }
    Ok(())
}
