use super::RoutingError;

/// Tolerance on `Σ weights = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Split `total` integer units in proportion to `weights` (largest remainder
/// method).
///
/// Each share gets the floor of its quota `total * w_i`; the units left over
/// go to the largest fractional remainders, ties broken by larger weight and
/// then lower index. The result always sums to `total` and every share is
/// the floor or ceiling of its quota.
pub fn largest_remainder(total: u64, weights: &[f64]) -> Result<Vec<u64>, RoutingError> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(RoutingError::Weights(format!("weights must be finite and non-negative: {weights:?}")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(RoutingError::Weights(format!("weights sum to {sum}, not 1")));
    }
    // Normalising removes the residual rounding in Σw so that Σ quotas is total.
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * (w / sum)).collect();
    let mut shares: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = shares.iter().sum();

    let mut order: Vec<usize> = (0..weights.len()).collect();
    let remainder = |i: usize| quotas[i] - quotas[i].floor();
    order.sort_by(|&a, &b| {
        remainder(b).total_cmp(&remainder(a)).then(weights[b].total_cmp(&weights[a])).then(a.cmp(&b))
    });
    if assigned <= total {
        let mut left = total - assigned;
        // Only shares with positive weight may round up.
        for &i in order.iter().filter(|&&i| weights[i] > 0.0).cycle() {
            if left == 0 {
                break;
            }
            shares[i] += 1;
            left -= 1;
        }
    } else {
        let mut excess = assigned - total;
        for &i in order.iter().rev().cycle() {
            if excess == 0 {
                break;
            }
            if shares[i] > 0 {
                shares[i] -= 1;
                excess -= 1;
            }
        }
    }
    Ok(shares)
}
