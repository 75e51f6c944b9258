//! Shared inputs for the benchmarks.

use daeindex::generator::{self, ScfSpec, Variant, DEFAULT_CONDITION_BOUND};
use daeindex::DaeProblem;

/// Transformed pair with index `mu`: θ = (2, 1, …, 1, 0), one differential
/// component.
pub fn pair_with_index(mu: usize, seed: u64) -> DaeProblem {
    let mut thetas = vec![1; mu.saturating_sub(1)];
    if let Some(first) = thetas.first_mut() {
        *first = 2;
    }
    if mu > 0 {
        thetas.push(0);
    }
    let spec = ScfSpec::new(1, thetas, Variant::FullColumn, seed);
    generator::generate(&spec, Some(1), DEFAULT_CONDITION_BOUND).expect("generated pair").problem
}
