use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subgsp::generate::generate_connected;
use subgsp::linalg::sym_eigen;
use subgsp::operators::{induced_laplacian, ParamLayout};
use subgsp::{generate, kron_reduce, Edge, Embedding, Family, Graph, GraphKind, OrderedEigenbasis, ShiftKind, SubgraphOperator};

fn weighted(n: usize, edges: &[(usize, usize, f64)]) -> Graph {
    Graph::new(n, false, edges.iter().map(|&(u, v, w)| Edge::new(u, v, w)).collect(), ShiftKind::Laplacian).unwrap()
}

fn random_v0(n: usize, r: &mut ChaCha8Rng) -> Vec<usize> {
    loop {
        let v0: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.4)).collect();
        if !v0.is_empty() && v0.len() < n {
            return v0;
        }
    }
}

#[test]
fn param_counts() {
    let h0 = Graph::undirected(4, &[(0, 1), (1, 2)]).unwrap();
    assert_eq!(ParamLayout::new(Family::Extension, &h0).len(), 6 - 2);
    assert_eq!(ParamLayout::new(Family::AnyLaplacian, &h0).len(), 6);
    assert_eq!(ParamLayout::new(Family::SymZeroRow, &h0).len(), 6);
    assert_eq!(ParamLayout::new(Family::DirectedAdjacency, &h0).len(), 12);
}

#[test]
fn extension_keeps_h0_edges() {
    let h0 = weighted(3, &[(0, 1, 2.0)]);
    let op = SubgraphOperator::from_params(Family::Extension, &h0, &[3, 5, 9], &[0.5, 1.0]).unwrap();
    op.validate().unwrap();
    assert_eq!(op.matrix[(0, 1)], -2.0);
    assert_eq!(op.matrix[(0, 2)], -0.5);
    assert_eq!(op.matrix[(1, 2)], -1.0);
    assert_eq!(op.v0, vec![3, 5, 9]);
}

#[test]
fn complete_h0_extension_is_fixed() {
    let h0 = generate(&GraphKind::Complete { n: 5 }, 0).unwrap();
    let op = SubgraphOperator::from_params(Family::Extension, &h0, &[0, 1, 2, 3, 4], &[]).unwrap();
    assert_eq!(op.matrix, h0.laplacian());
}

#[test]
fn triangle_spectrum() {
    let h0 = Graph::undirected(3, &[]).unwrap();
    let op = SubgraphOperator::from_params(Family::AnyLaplacian, &h0, &[0, 1, 2], &[1.0, 1.0, 1.0]).unwrap();
    let (vals, _) = sym_eigen(&op.matrix);
    assert!((vals - DVector::from_vec(vec![0.0, 3.0, 3.0])).amax() < 1e-12);
    let zero = SubgraphOperator::from_params(Family::SymZeroRow, &h0, &[0, 1, 2], &[0.0; 3]).unwrap();
    assert_eq!(zero.matrix, DMatrix::zeros(3, 3));
}

#[test]
fn kron_of_even_cycle() {
    let g = generate(&GraphKind::Cycle { n: 8, directed: false }, 0).unwrap();
    let k = kron_reduce(&g, &[0, 2, 4, 6]).unwrap();
    // Schur oracle: eliminating each odd vertex joins its two neighbours in series (1·1/(1+1)).
    let mut want = DMatrix::zeros(4, 4);
    for i in 0..4 {
        let j = (i + 1) % 4;
        want[(i, j)] = -0.5;
        want[(j, i)] = -0.5;
        want[(i, i)] = 1.0;
    }
    assert!((&k.matrix - want).amax() < 1e-12);
    k.validate().unwrap();
}

#[test]
fn kron_tree_series_and_leaf() {
    // path 0 -2- 1 -3- 2 -1- 3
    let g = weighted(4, &[(0, 1, 2.0), (1, 2, 3.0), (2, 3, 1.0)]);
    let no_leaf = kron_reduce(&g, &[0, 1, 2]).unwrap();
    let want = weighted(3, &[(0, 1, 2.0), (1, 2, 3.0)]).laplacian();
    assert!((no_leaf.matrix - want).amax() < 1e-12);
    let series = kron_reduce(&g, &[0, 2, 3]).unwrap();
    let w = 2.0 * 3.0 / 5.0;
    let want = weighted(3, &[(0, 1, w), (1, 2, 1.0)]).laplacian();
    assert!((series.matrix - want).amax() < 1e-12);
}

#[test]
fn kron_full_set_is_laplacian_and_directed_rejected() {
    let g = generate(&GraphKind::Lattice { rows: 2, cols: 3 }, 0).unwrap();
    let all: Vec<usize> = (0..6).collect();
    assert_eq!(kron_reduce(&g, &all).unwrap().matrix, g.laplacian());
    let d = generate(&GraphKind::Cycle { n: 5, directed: true }, 0).unwrap();
    assert!(kron_reduce(&d, &[0, 2]).is_err());
}

#[test]
fn kron_disconnected_interior_component_is_singular() {
    // vertex 2 is isolated from V0 = {0, 1}, so its Laplacian block is zero
    let g = Graph::undirected(3, &[(0, 1)]).unwrap();
    assert!(kron_reduce(&g, &[0, 1]).is_err());
}

#[test]
fn induced_laplacian_matches_subgraph() {
    let g = generate(&GraphKind::Lattice { rows: 3, cols: 3 }, 0).unwrap();
    let e = Embedding::new(&g, &[0, 1, 2, 4]).unwrap();
    let op = induced_laplacian(&g, &e);
    assert_eq!(op.matrix, g.induced_subgraph(&[0, 1, 2, 4]).0.laplacian());
    assert_eq!(op.v0, vec![0, 1, 2, 4]);
}

#[test]
fn magnitude_ordering_examples() {
    let g = generate(&GraphKind::Lattice { rows: 3, cols: 3 }, 0).unwrap();
    let b = OrderedEigenbasis::of_symmetric(&g.laplacian());
    let (vals, _) = sym_eigen(&g.laplacian());
    assert!((&b.values - vals).amax() < 1e-12);

    let q = DMatrix::from_row_slice(3, 3, &[0.0, 0.6, 0.8, 1.0, 0.0, 0.0, 0.0, 0.8, -0.6]);
    let m = &q * DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -2.0, 1.0])) * q.transpose();
    let b = OrderedEigenbasis::of_symmetric(&m);
    assert!((&b.values - DVector::from_vec(vec![1.0, -2.0, 3.0])).amax() < 1e-12);
    let rec = &b.vectors * DMatrix::from_diagonal(&b.values) * b.vectors.transpose();
    assert!((rec - m).amax() < 1e-9);
}

#[test]
fn directed_family_has_no_symmetric_basis() {
    let h0 = Graph::undirected(2, &[]).unwrap();
    let op = SubgraphOperator::from_params(Family::DirectedAdjacency, &h0, &[0, 1], &[1.0, 0.0]).unwrap();
    assert!(op.eigenbasis_magnitude_ordered().is_err());
}

/// Pairs joined directly or through a path whose interior avoids V0.
fn kron_support_oracle(g: &Graph, v0: &[usize]) -> Vec<Vec<bool>> {
    let inside: Vec<bool> = (0..g.n()).map(|v| v0.contains(&v)).collect();
    v0.iter()
        .map(|&s| {
            let mut reach = vec![false; g.n()];
            let mut seen = vec![false; g.n()];
            let mut q = VecDeque::from([s]);
            seen[s] = true;
            while let Some(u) = q.pop_front() {
                for &(w, _) in g.neighbors(u) {
                    if inside[w] {
                        reach[w] = true;
                    } else if !seen[w] {
                        seen[w] = true;
                        q.push_back(w);
                    }
                }
            }
            v0.iter().map(|&t| t != s && reach[t]).collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn kron_rows_sum_to_zero_and_interlace(seed in any::<u64>(), n in 5usize..30) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = generate_connected(&GraphKind::Er { n, q: 0.3 }, seed, 1000).unwrap()
            .with_random_weights(0.5, 2.0, &mut r);
        let v0 = random_v0(n, &mut r);
        let k = kron_reduce(&g, &v0).unwrap();
        for i in 0..k.dim() {
            prop_assert!(k.matrix.row(i).sum().abs() < 1e-9);
        }
        let (mu, _) = sym_eigen(&k.matrix);
        let (lam, _) = sym_eigen(&g.laplacian());
        let shift = n - v0.len();
        for j in 0..v0.len() {
            prop_assert!(mu[j] >= lam[j] - 1e-8);
            prop_assert!(mu[j] <= lam[j + shift] + 1e-8);
        }
    }

    #[test]
    fn kron_support_matches_paths(seed in any::<u64>(), n in 5usize..30) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = generate_connected(&GraphKind::RandomKnn { n, k: 2 }, seed, 1000).unwrap();
        let v0 = random_v0(n, &mut r);
        let k = kron_reduce(&g, &v0).unwrap();
        let oracle = kron_support_oracle(&g, &v0);
        for a in 0..v0.len() {
            for b in 0..v0.len() {
                if a != b {
                    prop_assert_eq!(k.matrix[(a, b)] < -1e-10, oracle[a][b]);
                }
            }
        }
    }

    #[test]
    fn params_round_trip(seed in any::<u64>(), m in 2usize..9) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let h0 = Graph::undirected(m, &[]).unwrap();
        let v0: Vec<usize> = (0..m).collect();
        let len = m * (m - 1) / 2;
        let signed: Vec<f64> = (0..len).map(|_| r.gen_range(-1.0..1.0)).collect();
        let op = SubgraphOperator::from_params(Family::SymZeroRow, &h0, &v0, &signed).unwrap();
        op.validate().unwrap();
        prop_assert_eq!(op.to_params(), signed);
        let positive: Vec<f64> = (0..len).map(|_| r.gen_range(0.01..1.0)).collect();
        let op = SubgraphOperator::from_params(Family::AnyLaplacian, &h0, &v0, &positive).unwrap();
        op.validate().unwrap();
        prop_assert_eq!(op.to_params(), positive);
    }
}
