use proptest::prelude::*;

use subgsp::randgraph::{
    exact_component_distribution, exact_distribution, monte_carlo_stats, sample_edge_model, sample_vertex_model, tail,
    Model,
};
use subgsp::rng;
use subgsp::{generate, Error, Graph, GraphKind};

use rand::Rng;

fn grid3() -> Graph {
    generate(&GraphKind::Lattice { rows: 3, cols: 3 }, 0).unwrap()
}

fn gm3(seed: u64) -> Graph {
    generate(&GraphKind::GmCommunity { n: 120, communities: 3, p_in: 0.12, p_out: 0.012 }, seed).unwrap()
}

#[test]
fn extreme_probabilities() {
    let g = grid3();
    let (kept, s) = sample_vertex_model(&g, 1.0, 4).unwrap();
    assert_eq!((kept.len(), s.largest_size, s.num_components), (9, 9, 1));
    let (kept, s) = sample_vertex_model(&g, 0.0, 4).unwrap();
    assert!(kept.is_empty());
    assert_eq!((s.largest_size, s.num_components, s.sizes.len()), (0, 0, 0));
    let (h, s) = sample_edge_model(&g, 0.0, 4).unwrap();
    assert_eq!((h.edge_count(), s.largest_size, s.num_components), (0, 1, 9));
    assert!(sample_edge_model(&g, 1.5, 4).is_err());

    let mc = monte_carlo_stats(&g, Model::Vertex, 1.0, 50, 1).unwrap();
    assert_eq!(mc.frequency(9), 1.0);
    assert_eq!(mc.components_hist[1], 50);
}

#[test]
fn single_edge_distribution() {
    let g = Graph::undirected(2, &[(0, 1)]).unwrap();
    for q in [0.0, 0.3, 0.75, 1.0] {
        assert!((exact_component_distribution(&g, Model::Edge, q, 2).unwrap() - q).abs() < 1e-15);
        assert!((exact_component_distribution(&g, Model::Edge, q, 1).unwrap() - (1.0 - q)).abs() < 1e-15);
    }
}

#[test]
fn vertex_model_on_a_path_by_hand() {
    // path 0-1-2: C = 3 iff all kept; C = 0 iff none kept; C = 2 iff an edge's ends kept but not all
    let g = generate(&GraphKind::Path { n: 3 }, 0).unwrap();
    let q = 0.3f64;
    let d = exact_distribution(&g, Model::Vertex, q).unwrap();
    let p3 = q.powi(3);
    let p2 = 2.0 * q * q * (1.0 - q);
    let p0 = (1.0 - q).powi(3);
    assert!((d[3] - p3).abs() < 1e-15 && (d[2] - p2).abs() < 1e-15 && (d[0] - p0).abs() < 1e-15);
    assert!((d[1] - (1.0 - p3 - p2 - p0)).abs() < 1e-15);
    assert!((tail(&d, 2) - (p2 + p3)).abs() < 1e-15);
}

#[test]
fn grid_edge_vs_vertex_comparison() {
    let g = grid3();
    let e = exact_distribution(&g, Model::Edge, 0.6).unwrap();
    let v = exact_distribution(&g, Model::Vertex, 0.6).unwrap();
    for d in [&e, &v] {
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    // keeping edges never loses vertices, so large components are likelier than under vertex sampling
    for k in 1..=9 {
        assert!(tail(&e, k) >= tail(&v, k) - 1e-12, "k = {k}");
    }
}

#[test]
fn too_large_is_rejected() {
    let g = generate(&GraphKind::Lattice { rows: 5, cols: 5 }, 0).unwrap();
    assert!(matches!(exact_distribution(&g, Model::Vertex, 0.5), Err(Error::TooLarge(25))));
    assert!(matches!(exact_distribution(&g, Model::Edge, 0.5), Err(Error::TooLarge(40))));
}

#[test]
fn monte_carlo_matches_exact_on_grid() {
    let g = grid3();
    let trials = 10_000;
    for model in [Model::Vertex, Model::Edge] {
        for q in [0.3, 0.6] {
            let exact = exact_distribution(&g, model, q).unwrap();
            let mc = monte_carlo_stats(&g, model, q, trials, 17).unwrap();
            for (k, &p) in exact.iter().enumerate() {
                let se = (p * (1.0 - p) / trials as f64).sqrt();
                assert!((mc.frequency(k) - p).abs() <= 3.0 * se + 1e-12, "{model:?} q={q} k={k}");
            }
        }
    }
}

#[test]
fn lattice_half_sample_is_typical() {
    let g = generate(&GraphKind::Lattice { rows: 5, cols: 5 }, 0).unwrap();
    let mc = monte_carlo_stats(&g, Model::Vertex, 0.5, 4000, 3).unwrap();
    // an instance with largest component 6 and six components is not a rare event
    assert!(mc.frequency(6) > 0.05);
    assert!(mc.components_hist[6] as f64 / 4000.0 > 0.05);
}

#[test]
fn vertex_model_statistics() {
    let g = gm3(0);
    let q = 0.4;
    let trials = 2000;
    let mc = monte_carlo_stats(&g, Model::Vertex, q, trials, 5).unwrap();
    let n = g.n() as f64;
    let se = (n * q * (1.0 - q) / trials as f64).sqrt();
    assert!((mc.mean_surviving - q * n).abs() <= 3.0 * se);

    let mut kept_edges = 0usize;
    for t in 0..trials as u64 {
        let (kept, _) = sample_vertex_model(&g, q, rng::stream(9, t).gen()).unwrap();
        let mut alive = vec![false; g.n()];
        kept.iter().for_each(|&v| alive[v] = true);
        kept_edges += g.edges().iter().filter(|e| alive[e.src] && alive[e.dst]).count();
    }
    let m = (g.edge_count() * trials) as f64;
    let freq = kept_edges as f64 / m;
    // edges share endpoints, so this standard error is only indicative; use a wide band
    assert!((freq - q * q).abs() <= 3.0 * (q * q * (1.0 - q * q) / m).sqrt() * 4.0, "{freq}");
}

#[test]
fn gm_vertex_model_component_count() {
    let means: Vec<f64> =
        (0..20).map(|s| monte_carlo_stats(&gm3(s), Model::Vertex, 0.4, 200, s).unwrap().mean_components).collect();
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    assert!((mean - 7.7).abs() <= 1.5, "mean components {mean}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn stats_are_consistent(seed in any::<u64>(), q in 0.0f64..=1.0, edge in any::<bool>()) {
        let g = generate(&GraphKind::Er { n: 30, q: 0.1 }, seed).unwrap();
        let s = if edge {
            let (h, s) = sample_edge_model(&g, q, seed).unwrap();
            prop_assert_eq!(s.surviving(), 30);
            prop_assert_eq!(s.num_components, h.components().len());
            s
        } else {
            let (kept, s) = sample_vertex_model(&g, q, seed).unwrap();
            prop_assert_eq!(s.surviving(), kept.len());
            s
        };
        prop_assert_eq!(s.largest_size, s.sizes.iter().copied().max().unwrap_or(0));
        prop_assert!(s.sizes.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn exact_distributions_sum_to_one(seed in any::<u64>(), q in 0.0f64..=1.0) {
        let g = generate(&GraphKind::Er { n: 8, q: 0.4 }, seed).unwrap();
        let v = exact_distribution(&g, Model::Vertex, q).unwrap();
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        if g.edge_count() <= 16 {
            let e = exact_distribution(&g, Model::Edge, q).unwrap();
            prop_assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_is_deterministic(seed in any::<u64>()) {
        let g = grid3();
        let a = monte_carlo_stats(&g, Model::Edge, 0.5, 64, seed).unwrap();
        let b = monte_carlo_stats(&g, Model::Edge, 0.5, 64, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
