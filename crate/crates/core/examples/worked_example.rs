//! The 500/400 passthrough hour: 400 vehicles bypass, the net 100 is split
//! over four destinations and each share over vehicle types.

use odfusion::fixtures::worked_example;
use odfusion::routing::{build_od_matrix, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ex = worked_example();
    let run = build_od_matrix(&ex.network, &ex.model, &ex.tollbooth, &ex.routing, &[ex.hour])?;

    for d in &run.decisions {
        println!("{:<18} {:<28} {:>4}  at {}", d.scenario.as_str(), d.direction, d.volume, d.origin);
    }
    println!();
    for e in &run.matrix.entries {
        let arrow = if e.scenario == Scenario::PassthroughBypass { "=>" } else { "->" };
        println!("{} {arrow} {:<24} {:<18} {:>4}", e.origin, e.destination, e.vehicle_type.as_str(), e.count);
    }
    for l in &run.ledgers {
        for n in &l.nodes {
            println!("ledger {:<24} raw {:>4} residual {}", n.node, n.raw, n.residual());
        }
    }
    Ok(())
}
