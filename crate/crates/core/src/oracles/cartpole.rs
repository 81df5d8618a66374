/// Discounted return of a full-length episode, `Σ_{k=0}^{horizon−1} γᵏ`,
/// in closed form.
pub fn cartpole_optimal_start_value(gamma: f64, horizon: u32) -> f64 {
    if gamma == 1.0 {
        horizon as f64
    } else {
        (1.0 - gamma.powi(horizon as i32)) / (1.0 - gamma)
    }
}

/// The same sum accumulated term by term.
pub fn cartpole_optimal_start_value_by_summation(gamma: f64, horizon: u32) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for _ in 0..horizon {
        total += discount;
        discount *= gamma;
    }
    total
}
