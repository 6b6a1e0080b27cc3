//! Seeded inputs shared by the benchmarks in `benches/`.

use formctl_core::{Configuration, Digraph, SampleKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Weakly connected digraph on `vertices` vertices, fixed by `seed`.
pub fn graph(vertices: usize, density: f64, seed: u64) -> Digraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Digraph::random_weakly_connected(vertices, density, &mut rng)
}

/// Uniform configuration of `agents` points in dimension `dim`.
pub fn configuration(dim: usize, agents: usize, seed: u64) -> Configuration {
    Configuration::sample(dim, agents, SampleKind::Uniform, seed).expect("valid sizes")
}
