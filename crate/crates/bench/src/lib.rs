//! Deterministic inputs shared by the kernel benchmarks.

use ldg_core::fields::{boundary_near_constant, GridSpec, TiltPattern};
use ldg_core::geometry::sampling::random_qtensor;
use ldg_core::{MaterialParams, QTensor, TensorField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn unit_params(l: f64) -> MaterialParams {
    MaterialParams::unit(l).expect("unit parameters are valid")
}

/// `n` random traceless tensors with entries bounded by `bound`.
pub fn random_tensors(n: usize, bound: f64, seed: u64) -> Vec<QTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_qtensor(&mut rng, bound)).collect()
}

/// Near-constant boundary data on an `n`³ interior grid over [-4, 4]³.
pub fn tilted_field(n: usize) -> TensorField {
    let g = GridSpec::cube(n, 4.0).expect("valid grid");
    boundary_near_constant(&g, &unit_params(1.0), 0.2, TiltPattern::Tilt).expect("valid eps")
}
