//! Synthetic graph generators.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, ShiftKind};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Cycle { n: usize, #[serde(default)] directed: bool },
    Path { n: usize },
    Complete { n: usize },
    Lattice { rows: usize, cols: usize },
    /// Planted partition: equal blocks, intra-probability `p_in`, inter-probability `p_out`.
    GmCommunity { n: usize, communities: usize, p_in: f64, p_out: f64 },
    Er { n: usize, q: f64 },
    /// Each vertex joined to its `k` nearest neighbours, symmetrized.
    Knn { coords: Vec<[f64; 2]>, k: usize },
    /// k-NN on points drawn uniformly from the unit square.
    RandomKnn { n: usize, k: usize },
    /// Watts–Strogatz ring with `k` neighbours per vertex and rewiring probability `rewire`.
    SmallWorld { n: usize, k: usize, rewire: f64 },
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} = {p} is not a probability")))
    }
}

/// Generates a graph with the Laplacian shift; deterministic given `seed`.
pub fn generate(kind: &GraphKind, seed: u64) -> Result<Graph> {
    let mut r = rng::from_seed(seed);
    let unit = |n: usize, pairs: Vec<(usize, usize)>| {
        Graph::new(n, false, pairs.into_iter().map(|(u, v)| Edge::new(u, v, 1.0)).collect(), ShiftKind::Laplacian)
    };
    match kind {
        GraphKind::Cycle { n, directed } => {
            if *n < 3 {
                return Err(Error::InvalidParams("cycle needs n ≥ 3".into()));
            }
            let edges = (0..*n).map(|i| Edge::new(i, (i + 1) % n, 1.0)).collect();
            Graph::new(*n, *directed, edges, ShiftKind::Laplacian)
        }
        GraphKind::Path { n } => unit(*n, (1..*n).map(|i| (i - 1, i)).collect()),
        GraphKind::Complete { n } => {
            unit(*n, (0..*n).flat_map(|u| (u + 1..*n).map(move |v| (u, v))).collect())
        }
        GraphKind::Lattice { rows, cols } => {
            let id = |r: usize, c: usize| r * cols + c;
            let mut pairs = Vec::new();
            for rr in 0..*rows {
                for c in 0..*cols {
                    if c + 1 < *cols {
                        pairs.push((id(rr, c), id(rr, c + 1)));
                    }
                    if rr + 1 < *rows {
                        pairs.push((id(rr, c), id(rr + 1, c)));
                    }
                }
            }
            unit(rows * cols, pairs)
        }
        GraphKind::GmCommunity { n, communities, p_in, p_out } => {
            check_prob("p_in", *p_in)?;
            check_prob("p_out", *p_out)?;
            if *communities == 0 || *communities > *n {
                return Err(Error::InvalidParams("communities must be in 1..=n".into()));
            }
            let block = |v: usize| v * communities / n;
            let mut pairs = Vec::new();
            for u in 0..*n {
                for v in u + 1..*n {
                    let p = if block(u) == block(v) { *p_in } else { *p_out };
                    if r.gen::<f64>() < p {
                        pairs.push((u, v));
                    }
                }
            }
            unit(*n, pairs)
        }
        GraphKind::Er { n, q } => {
            check_prob("q", *q)?;
            let mut pairs = Vec::new();
            for u in 0..*n {
                for v in u + 1..*n {
                    if r.gen::<f64>() < *q {
                        pairs.push((u, v));
                    }
                }
            }
            unit(*n, pairs)
        }
        GraphKind::Knn { coords, k } => knn(coords, *k),
        GraphKind::RandomKnn { n, k } => {
            let coords: Vec<[f64; 2]> = (0..*n).map(|_| [r.gen(), r.gen()]).collect();
            knn(&coords, *k)
        }
        GraphKind::SmallWorld { n, k, rewire } => {
            check_prob("rewire", *rewire)?;
            if k % 2 != 0 || *k >= *n {
                return Err(Error::InvalidParams("small-world k must be even and < n".into()));
            }
            let key = |u: usize, v: usize| (u.min(v), u.max(v));
            let mut ring = Vec::new();
            for j in 1..=k / 2 {
                for u in 0..*n {
                    ring.push((u, (u + j) % n));
                }
            }
            let mut present: HashSet<(usize, usize)> = ring.iter().map(|&(u, v)| key(u, v)).collect();
            let mut pairs = Vec::with_capacity(ring.len());
            for (u, v) in ring {
                if r.gen::<f64>() < *rewire {
                    let candidates: Vec<usize> =
                        (0..*n).filter(|&w| w != u && !present.contains(&key(u, w))).collect();
                    if let Some(&w) = candidates.choose(&mut r) {
                        present.remove(&key(u, v));
                        present.insert(key(u, w));
                        pairs.push((u, w));
                        continue;
                    }
                }
                pairs.push((u, v));
            }
            unit(*n, pairs)
        }
    }
}

fn knn(coords: &[[f64; 2]], k: usize) -> Result<Graph> {
    let n = coords.len();
    if k >= n.max(1) {
        return Err(Error::InvalidParams(format!("k = {k} must be < n = {n}")));
    }
    let mut set = HashSet::new();
    for u in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&v| v != u)
            .map(|v| {
                let dx = coords[u][0] - coords[v][0];
                let dy = coords[u][1] - coords[v][1];
                (dx * dx + dy * dy, v)
            })
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, v) in others.iter().take(k) {
            set.insert((u.min(v), u.max(v)));
        }
    }
    let mut pairs: Vec<_> = set.into_iter().collect();
    pairs.sort_unstable();
    Graph::undirected(n, &pairs)
}

/// Lattice vertex id for (row, col).
pub fn lattice_id(cols: usize, row: usize, col: usize) -> usize {
    row * cols + col
}

/// Generates graphs from consecutive seeds until one is connected.
pub fn generate_connected(kind: &GraphKind, seed: u64, max_attempts: usize) -> Result<Graph> {
    for a in 0..max_attempts as u64 {
        let g = generate(kind, seed.wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15)))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::DisconnectedGraph)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_edge_count() {
        let g = generate(&GraphKind::Lattice { rows: 5, cols: 5 }, 0).unwrap();
        assert_eq!(g.n(), 25);
        assert_eq!(g.edge_count(), 40);
    }

    #[test]
    fn directed_cycle_edges() {
        let g = generate(&GraphKind::Cycle { n: 8, directed: true }, 0).unwrap();
        assert_eq!(g.edge_count(), 8);
        for e in g.edges() {
            assert_eq!(e.dst, (e.src + 1) % 8);
        }
    }

    #[test]
    fn gm_is_seeded() {
        let k = GraphKind::GmCommunity { n: 60, communities: 3, p_in: 0.2, p_out: 0.02 };
        assert_eq!(generate(&k, 5).unwrap(), generate(&k, 5).unwrap());
        assert!(generate(&GraphKind::Er { n: 5, q: 1.5 }, 0).is_err());
    }

    #[test]
    fn small_world_keeps_edge_count() {
        let g = generate(&GraphKind::SmallWorld { n: 50, k: 6, rewire: 0.3 }, 1).unwrap();
        assert_eq!(g.edge_count(), 150);
    }

    #[test]
    fn knn_is_symmetric_and_covers() {
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]];
        let g = generate(&GraphKind::Knn { coords, k: 1 }, 0).unwrap();
        assert!(g.edges().iter().all(|e| e.src < e.dst));
        assert!(g.neighbors(3).len() >= 1);
    }
}
