#![allow(dead_code)]

use jacobi_gl::recovery::forward_data;
use jacobi_gl::{Grid, InversionProblem, JacobiOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded target with `v ∈ [-1, 1]`, `u ∈ [-0.1, 0.1]`.
pub fn random_target(seed: u64, n: usize) -> JacobiOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let u = (0..n - 1).map(|_| rng.random_range(-0.1..=0.1)).collect();
    JacobiOperator::new(Grid::new(n).unwrap(), v, u, 0.0).unwrap()
}

/// Inversion of `target`'s forward data against the free well.
pub fn free_problem(target: &JacobiOperator) -> InversionProblem {
    let free = JacobiOperator::free(target.len()).unwrap();
    InversionProblem::from_reference(free, forward_data(target).unwrap()).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
