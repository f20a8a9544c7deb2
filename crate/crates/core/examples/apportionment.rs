//! Largest-remainder apportionment keeps integer totals exact.

use odfusion::routing::largest_remainder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("50 x [0.6, 0.4]        -> {:?}", largest_remainder(50, &[0.6, 0.4])?);
    println!("10 x [1/3, 1/3, 1/3]   -> {:?}", largest_remainder(10, &[1.0 / 3.0; 3])?);

    let weights = [0.45, 0.30, 0.15, 0.07, 0.03];
    for total in [7, 30, 101] {
        let naive: Vec<u64> = weights.iter().map(|w| (total as f64 * w).round() as u64).collect();
        let lr = largest_remainder(total, &weights)?;
        println!(
            "{total:>3}: rounding {naive:?} (sum {}), largest remainder {lr:?} (sum {})",
            naive.iter().sum::<u64>(),
            lr.iter().sum::<u64>()
        );
    }
    Ok(())
}
