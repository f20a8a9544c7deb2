//! Shapley attributions for a trained total-count model: global ranking,
//! grouped road-tag importance and one explained prediction.

use odfusion::attribution::{global_importance, shap_values};
use odfusion::fixtures::trondheim_network;
use odfusion::fusion::{train, GbtHyperparams, Target};
use odfusion::ingest::{build_dataset, generate_synthetic, BiasProfile, FEATURE_NAMES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_synthetic(&trondheim_network(), 14, &BiasProfile::biased(3))?;
    let ds = build_dataset(&data.tollbooth, &data.routing, 0.2)?;
    let hp = GbtHyperparams { n_trees: 100, ..GbtHyperparams::default() };
    let model = train(&ds, &hp)?;
    let rows: Vec<_> = ds.valid().iter().map(|r| r.features).collect();

    let importance = global_importance(&model, Target::Total, &rows)?;
    let grouped = importance.grouped();
    for (title, imp) in [("feature", &importance), ("grouped", &grouped)] {
        println!("mean |SHAP| by {title}:");
        for &i in &imp.ranking {
            println!("  {:<16} {:8.2}", imp.features[i], imp.mean_abs[i]);
        }
    }

    let row = &ds.valid()[0];
    let a = shap_values(&model, Target::Total, &row.features)?;
    println!("\n{} at {}: base {:.1}", row.node, row.hour, a.base_value);
    for (name, c) in FEATURE_NAMES.iter().zip(&a.contributions) {
        println!("  {name:<16} {c:+8.2}");
    }
    println!(
        "  = {:.2} (model {:.2}, truth {})",
        a.prediction(),
        model.raw_score(Target::Total, &row.features),
        row.target.total
    );
    Ok(())
}
