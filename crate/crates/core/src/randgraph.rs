//! Largest-component statistics of random vertex and edge subsamples.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

/// Component sizes of a sampled subgraph, `sizes` in descending order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub largest_size: usize,
    pub num_components: usize,
    pub sizes: Vec<usize>,
}

impl ComponentStats {
    fn from_sizes(mut sizes: Vec<usize>) -> Self {
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Self { largest_size: sizes.first().copied().unwrap_or(0), num_components: sizes.len(), sizes }
    }

    pub fn surviving(&self) -> usize {
        self.sizes.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Keep each vertex with probability q, take the induced subgraph.
    Vertex,
    /// Keep each edge with probability q; every original vertex survives.
    Edge,
}

struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

fn stats_of(g: &Graph, vertex_alive: &[bool], edge_alive: &[bool]) -> ComponentStats {
    let mut d = Dsu::new(g.n());
    for (e, &alive) in g.edges().iter().zip(edge_alive) {
        if alive && vertex_alive[e.src] && vertex_alive[e.dst] {
            d.union(e.src, e.dst);
        }
    }
    let roots: Vec<usize> = (0..g.n()).filter(|&v| vertex_alive[v] && d.find(v) == v).collect();
    let sizes = roots.into_iter().map(|v| d.size[v]).collect();
    ComponentStats::from_sizes(sizes)
}

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParams(format!("q = {q} must lie in [0, 1]")));
    }
    Ok(())
}

fn draw_vertices(g: &Graph, q: f64, r: &mut rng::Rng) -> Vec<bool> {
    (0..g.n()).map(|_| r.gen::<f64>() < q).collect()
}

fn draw_edges(g: &Graph, q: f64, r: &mut rng::Rng) -> Vec<bool> {
    (0..g.edge_count()).map(|_| r.gen::<f64>() < q).collect()
}

/// Subset kept by the vertex model and the components of its induced subgraph.
pub fn sample_vertex_model(g: &Graph, q: f64, seed: u64) -> Result<(Vec<usize>, ComponentStats)> {
    check_q(q)?;
    let alive = draw_vertices(g, q, &mut rng::from_seed(seed));
    let stats = stats_of(g, &alive, &vec![true; g.edge_count()]);
    Ok(((0..g.n()).filter(|&v| alive[v]).collect(), stats))
}

/// Surviving graph of the edge model; isolated vertices count as size-1 components.
pub fn sample_edge_model(g: &Graph, q: f64, seed: u64) -> Result<(Graph, ComponentStats)> {
    check_q(q)?;
    let alive = draw_edges(g, q, &mut rng::from_seed(seed));
    let stats = stats_of(g, &vec![true; g.n()], &alive);
    let edges = g.edges().iter().zip(&alive).filter(|(_, &a)| a).map(|(e, _)| *e).collect();
    Ok((Graph::new(g.n(), g.is_directed(), edges, g.shift_kind())?, stats))
}

fn sample(g: &Graph, model: Model, q: f64, r: &mut rng::Rng) -> ComponentStats {
    match model {
        Model::Vertex => stats_of(g, &draw_vertices(g, q, r), &vec![true; g.edge_count()]),
        Model::Edge => stats_of(g, &vec![true; g.n()], &draw_edges(g, q, r)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub model: Model,
    pub q: f64,
    pub trials: usize,
    pub mean_largest: f64,
    pub mean_components: f64,
    pub mean_surviving: f64,
    pub stderr_components: f64,
    /// `largest_hist[k]` = number of trials whose largest component has size k.
    pub largest_hist: Vec<usize>,
    /// `components_hist[c]` = number of trials with c components.
    pub components_hist: Vec<usize>,
}

impl McSummary {
    /// Empirical P(C = k).
    pub fn frequency(&self, k: usize) -> f64 {
        self.largest_hist.get(k).copied().unwrap_or(0) as f64 / self.trials as f64
    }
}

/// Per-trial statistics aggregated over `trials` independent streams.
pub fn monte_carlo_stats(g: &Graph, model: Model, q: f64, trials: usize, seed: u64) -> Result<McSummary> {
    check_q(q)?;
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be ≥ 1".into()));
    }
    let runs: Vec<ComponentStats> =
        (0..trials).into_par_iter().map(|t| sample(g, model, q, &mut rng::stream(seed, t as u64))).collect();
    let n = g.n();
    let mut largest_hist = vec![0; n + 1];
    let mut components_hist = vec![0; n + 1];
    for s in &runs {
        largest_hist[s.largest_size] += 1;
        components_hist[s.num_components] += 1;
    }
    let tf = trials as f64;
    let mean = |f: &dyn Fn(&ComponentStats) -> f64| runs.iter().map(f).sum::<f64>() / tf;
    let mean_components = mean(&|s| s.num_components as f64);
    let var = if trials > 1 {
        runs.iter().map(|s| (s.num_components as f64 - mean_components).powi(2)).sum::<f64>() / (tf - 1.0)
    } else {
        0.0
    };
    Ok(McSummary {
        model,
        q,
        trials,
        mean_largest: mean(&|s| s.largest_size as f64),
        mean_components,
        mean_surviving: mean(&|s| s.surviving() as f64),
        stderr_components: (var / tf).sqrt(),
        largest_hist,
        components_hist,
    })
}

/// Exact P(C = k) for every k in 0..=n by enumerating all inclusion patterns.
pub fn exact_distribution(g: &Graph, model: Model, q: f64) -> Result<Vec<f64>> {
    check_q(q)?;
    let bits = match model {
        Model::Vertex => g.n(),
        Model::Edge => g.edge_count(),
    };
    if bits > 22 {
        return Err(Error::TooLarge(bits));
    }
    let mut dist = vec![0.0; g.n() + 1];
    let all_v = vec![true; g.n()];
    let all_e = vec![true; g.edge_count()];
    let mut mask = vec![false; bits];
    for pattern in 0u32..(1u32 << bits) {
        let mut kept = 0;
        for (b, slot) in mask.iter_mut().enumerate() {
            *slot = pattern >> b & 1 == 1;
            kept += *slot as i32;
        }
        let prob = q.powi(kept) * (1.0 - q).powi(bits as i32 - kept);
        if prob == 0.0 {
            continue;
        }
        let s = match model {
            Model::Vertex => stats_of(g, &mask, &all_e),
            Model::Edge => stats_of(g, &all_v, &mask),
        };
        dist[s.largest_size] += prob;
    }
    Ok(dist)
}

/// Exact P(C = k).
pub fn exact_component_distribution(g: &Graph, model: Model, q: f64, k: usize) -> Result<f64> {
    Ok(exact_distribution(g, model, q)?.get(k).copied().unwrap_or(0.0))
}

/// P(C ≥ k) from a distribution indexed by k.
pub fn tail(dist: &[f64], k: usize) -> f64 {
    dist.iter().skip(k).sum()
}
