//! Benchmark fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subgsp::generate::generate_connected;
use subgsp::{Graph, GraphKind};

/// Connected three-community graph with mean degree near 5.6.
pub fn gm(n: usize) -> Graph {
    generate_connected(&GraphKind::GmCommunity { n, communities: 3, p_in: 0.12, p_out: 0.012 }, 1, 1000).unwrap()
}

/// Each vertex with probability 0.4.
pub fn subset(n: usize, seed: u64) -> Vec<usize> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).filter(|_| r.gen_bool(0.4)).collect()
}

pub fn complete(n: usize) -> Graph {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    Graph::undirected(n, &edges).unwrap()
}
