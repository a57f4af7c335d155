use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subgsp::embedding::{family_columns, family_dimension, genericity_check, refine_default};
use subgsp::generate::{generate_connected, lattice_id};
use subgsp::graph::UNREACHABLE;
use subgsp::{generate, Embedding, Graph, GraphKind, SubsetTuple};

fn generic_graph(n: usize, seed: u64) -> Graph {
    let g = generate_connected(&GraphKind::Er { n, q: 0.3 }, seed, 1000).unwrap();
    g.with_random_weights(0.5, 1.5, &mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed))
}

fn span_residual(cols: &[DVector<f64>], target: &DVector<f64>) -> f64 {
    let a = DMatrix::from_columns(cols);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(target, 1e-10).unwrap();
    (&a * x - target).norm() / target.norm().max(1e-300)
}

#[test]
fn project_examples() {
    let g = generate(&GraphKind::Path { n: 4 }, 0).unwrap();
    let e = Embedding::new(&g, &[0, 2]).unwrap();
    let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
    assert_eq!(e.project(&y).unwrap(), DVector::from_vec(vec![1.0, 3.0]));
    let full = Embedding::new(&g, &[0, 1, 2, 3]).unwrap();
    assert_eq!(full.project(&y).unwrap(), y);
}

#[test]
fn extend_examples() {
    let g = generate(&GraphKind::Path { n: 4 }, 0).unwrap();
    let e = Embedding::new(&g, &[2, 0]).unwrap();
    assert_eq!(e.vertices(), &[0, 2]);
    let x = DVector::from_vec(vec![1.0, 3.0]);
    assert_eq!(e.extend_by_zero(&x).unwrap(), DVector::from_vec(vec![1.0, 0.0, 3.0, 0.0]));
    assert_eq!(e.extend_by_zero(&DVector::zeros(2)).unwrap(), DVector::zeros(4));
}

#[test]
fn invalid_subsets() {
    let g = generate(&GraphKind::Path { n: 4 }, 0).unwrap();
    assert!(Embedding::new(&g, &[]).is_err());
    assert!(Embedding::new(&g, &[4]).is_err());
}

#[test]
fn hop_class_one_iff_subset_neighbour() {
    let g = generate(&GraphKind::Lattice { rows: 4, cols: 4 }, 0).unwrap();
    let v0 = [0, 1, 5, 10, 15];
    let e = Embedding::new(&g, &v0).unwrap();
    for (j, &v) in e.vertices().iter().enumerate() {
        let has = g.neighbors(v).iter().any(|(u, _)| v0.contains(u));
        assert_eq!(e.hop_class(j) == 1, has);
    }
}

#[test]
fn cvd_opposite_cycle_vertices() {
    let g = generate(&GraphKind::Cycle { n: 8, directed: false }, 0).unwrap();
    let e = Embedding::new(&g, &[0, 4]).unwrap();
    for r in 0..3 {
        let c = e.build_cvd(&g, r).unwrap();
        assert_eq!(c.tuple.sets, vec![vec![0, 4]]);
        assert_eq!(c.tuple.degrees, vec![4 + r]);
    }
}

#[test]
fn cvd_clique_subset() {
    let g = generate(&GraphKind::Lattice { rows: 3, cols: 3 }, 0).unwrap();
    // 0-1 and 0-3 adjacent, 1-4, 3-4: a connected 4-cycle in the grid
    let e = Embedding::new(&g, &[0, 1, 3, 4]).unwrap();
    let c = e.build_cvd(&g, 2).unwrap();
    assert_eq!(c.tuple.sets, vec![vec![0, 1, 3, 4]]);
    assert_eq!(c.tuple.degrees, vec![3]);
    let k = generate(&GraphKind::Complete { n: 6 }, 0).unwrap();
    let c = Embedding::new(&k, &[1, 2, 5]).unwrap().build_cvd(&k, 1).unwrap();
    assert_eq!((c.tuple.sets, c.tuple.degrees), (vec![vec![1, 2, 5]], vec![2]));
}

/// 5×9 grid: two full columns plus alternate rows of column 2, and a sparse block of
/// alternating columns further right.
#[test]
fn cvd_two_level_lattice() {
    let g = generate(&GraphKind::Lattice { rows: 5, cols: 9 }, 0).unwrap();
    let mut v0 = Vec::new();
    for r in 0..5 {
        v0.push(lattice_id(9, r, 0));
        v0.push(lattice_id(9, r, 1));
    }
    for r in [0, 2, 4] {
        v0.push(lattice_id(9, r, 2));
        for c in [4, 6, 8] {
            v0.push(lattice_id(9, r, c));
        }
    }
    assert_eq!(v0.len(), 22);
    let c = Embedding::new(&g, &v0).unwrap().build_cvd(&g, 1).unwrap();
    let sizes: Vec<usize> = c.tuple.sets.iter().map(Vec::len).collect();
    assert_eq!(sizes, vec![13, 12]);
    assert_eq!(c.tuple.degrees, vec![2, 3]);
    assert!(c.unattached.is_empty());
}

#[test]
fn cvd_needs_connected_graph() {
    let g = Graph::undirected(4, &[(0, 1), (2, 3)]).unwrap();
    assert!(Embedding::new(&g, &[0, 2]).unwrap().build_cvd(&g, 0).is_err());
}

#[test]
fn unattached_vertex_has_infinite_class() {
    let g = Graph::undirected(4, &[(0, 1), (2, 3)]).unwrap();
    let e = Embedding::new(&g, &[0, 1, 2]).unwrap();
    assert_eq!(e.hop_classes(), &[1, 1, UNREACHABLE]);
}

#[test]
fn refine_disjoint_sets_keeps_them() {
    let t = SubsetTuple::new(vec![vec![0, 1], vec![2, 3]], vec![1, 2]).unwrap();
    let r = refine_default(&t);
    assert_eq!(r, t);
}

#[test]
fn refine_nested_adds_difference() {
    let t = SubsetTuple::new(vec![vec![0, 1, 2, 3], vec![2, 3]], vec![1, 2]).unwrap();
    let r = refine_default(&t);
    assert_eq!(r.sets, vec![vec![0, 1, 2, 3], vec![2, 3], vec![0, 1]]);
    assert_eq!(r.degrees, vec![1, 2, 1]);
}

#[test]
fn refine_keeps_family_span() {
    let g = generic_graph(14, 3);
    let t = SubsetTuple::new(vec![vec![0, 1, 2, 3, 4], vec![3, 4, 5, 6]], vec![2, 1]).unwrap();
    let r = refine_default(&t);
    assert!(family_dimension(&g, &r) >= family_dimension(&g, &t));
    let fine = family_columns(&g, &r);
    for col in family_columns(&g, &t) {
        assert!(span_residual(&fine, &col) < 1e-8);
    }
}

#[test]
fn essential_examples() {
    let disjoint = SubsetTuple::new(vec![vec![0, 1], vec![2]], vec![1, 1]).unwrap();
    assert!(disjoint.is_essential());
    let dup = SubsetTuple::new(vec![vec![0, 1], vec![0, 1]], vec![1, 2]).unwrap();
    assert!(!dup.is_essential());
    // four sets with pairwise overlaps where the third owns nothing privately
    let overlap =
        SubsetTuple::new(vec![vec![0, 1, 2], vec![2, 3, 4], vec![1, 2, 3], vec![4, 5]], vec![1; 4]).unwrap();
    assert!(!overlap.is_essential());
    let owned =
        SubsetTuple::new(vec![vec![0, 1, 2], vec![2, 3, 4, 7], vec![1, 3, 6], vec![4, 5]], vec![1; 4]).unwrap();
    assert!(owned.is_essential());
}

#[test]
fn refinement_examples() {
    let coarse = SubsetTuple::new(vec![vec![0, 1, 2, 3], vec![3, 4, 5]], vec![1, 1]).unwrap();
    let partition = SubsetTuple::new(vec![vec![0, 1], vec![2, 3], vec![4, 5]], vec![1; 3]).unwrap();
    assert!(partition.is_refinement_of(&coarse));
    // a set straddling both coarse sets lies in neither
    let straddle = SubsetTuple::new(vec![vec![0, 1], vec![2, 3, 4], vec![5]], vec![1; 3]).unwrap();
    assert!(!straddle.is_refinement_of(&coarse));
    // two overlapping pieces inside the same coarse set
    let overlapping = SubsetTuple::new(vec![vec![0, 1, 2], vec![3, 4, 5], vec![2, 3]], vec![1; 3]).unwrap();
    assert!(!overlapping.is_refinement_of(&coarse));
}

#[test]
fn dimension_examples() {
    let g = generic_graph(12, 1);
    assert!(genericity_check(&g).unwrap().generic);
    for d in 0..5 {
        assert_eq!(family_dimension(&g, &SubsetTuple::single(vec![4], d).unwrap()), d + 1);
    }
    let all: Vec<usize> = (0..12).collect();
    assert_eq!(family_dimension(&g, &SubsetTuple::single(all, 11).unwrap()), 12);
    let t = SubsetTuple::new(vec![vec![0, 1, 2], vec![2, 3], vec![5, 6, 7]], vec![2, 1, 3]).unwrap();
    assert!(t.is_essential());
    assert_eq!(family_dimension(&g, &t), 2 + 1 + 3 + 3);
}

#[test]
fn tuple_validation() {
    assert!(SubsetTuple::new(vec![vec![0]], vec![]).is_err());
    assert!(SubsetTuple::new(vec![vec![]], vec![1]).is_err());
    let t = SubsetTuple::single(vec![0, 1], 5).unwrap();
    assert!(t.check_range(4).is_err());
    assert_eq!(t.clamp_degrees(4).degrees, vec![3]);
}

/// Random essential tuple: each set gets a private vertex plus random shared ones.
fn random_essential(n: usize, k: usize, r: &mut ChaCha8Rng) -> SubsetTuple {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(r);
    let (private, shared) = ids.split_at(k);
    let sets = (0..k)
        .map(|i| {
            let mut s = vec![private[i]];
            s.extend(shared.iter().copied().filter(|_| r.gen_bool(0.25)));
            s
        })
        .collect();
    let degrees = (0..k).map(|_| r.gen_range(0..=3)).collect();
    SubsetTuple::new(sets, degrees).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn project_extend_retraction(n in 2usize..30, seed in any::<u64>()) {
        let g = generate(&GraphKind::Path { n }, 0).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let v0: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.5)).collect();
        prop_assume!(!v0.is_empty());
        let e = Embedding::new(&g, &v0).unwrap();
        let x = DVector::from_fn(e.len(), |_, _| r.gen_range(-1.0..1.0));
        let y = e.extend_by_zero(&x).unwrap();
        prop_assert_eq!(e.project(&y).unwrap(), x.clone());
        prop_assert!((y.norm() - x.norm()).abs() < 1e-12);
    }

    #[test]
    fn cvd_covers_attached_vertices(seed in any::<u64>(), p in 0.1f64..0.7, r in 0usize..3) {
        let g = generate_connected(&GraphKind::RandomKnn { n: 40, k: 3 }, seed, 1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v0: Vec<usize> = (0..40).filter(|_| rng.gen_bool(p)).collect();
        prop_assume!(v0.len() >= 2);
        let e = Embedding::new(&g, &v0).unwrap();
        let c = e.build_cvd(&g, r).unwrap();
        let union: Vec<usize> = c.tuple.union().into_iter().collect();
        prop_assert_eq!(union, e.vertices().to_vec());
        for (set, &d) in c.tuple.sets.iter().zip(&c.tuple.degrees) {
            prop_assert!(!set.is_empty());
            prop_assert!(d < g.n());
        }
    }

    #[test]
    fn dimension_is_monotone(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = generic_graph(16, seed);
        let k = r.gen_range(1..4);
        let t = random_essential(16, k, &mut r);
        let base = family_dimension(&g, &t);
        let mut bumped = t.clone();
        let i = r.gen_range(0..k);
        bumped.degrees[i] += 1;
        prop_assert!(family_dimension(&g, &bumped) >= base);
        let mut grown = t.clone();
        grown.sets.push((0..16).filter(|_| r.gen_bool(0.3)).chain([0]).collect::<std::collections::BTreeSet<_>>().into_iter().collect());
        grown.degrees.push(r.gen_range(0..3));
        prop_assert!(family_dimension(&g, &grown) >= base);
    }

    #[test]
    fn essential_dimension_formula(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = generic_graph(r.gen_range(12..=30), seed);
        let k = r.gen_range(1..5);
        let t = random_essential(g.n(), k, &mut r);
        prop_assert!(t.is_essential());
        let want: usize = t.degrees.iter().sum::<usize>() + k;
        prop_assert_eq!(family_dimension(&g, &t), want);
    }

    #[test]
    fn partition_refinement_spans_coarse_family(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = generic_graph(15, seed);
        let mut ids: Vec<usize> = (0..15).collect();
        ids.shuffle(&mut r);
        let coarse = SubsetTuple::new(vec![ids[..6].to_vec(), ids[6..11].to_vec()], vec![2, 1]).unwrap();
        let mut sets = Vec::new();
        let mut degrees = Vec::new();
        for (set, &d) in coarse.sets.iter().zip(&coarse.degrees) {
            let cut = r.gen_range(1..set.len());
            sets.push(set[..cut].to_vec());
            sets.push(set[cut..].to_vec());
            degrees.extend([d, d]);
        }
        let fine = SubsetTuple::new(sets, degrees).unwrap();
        prop_assert!(fine.is_refinement_of(&coarse));
        let l = g.laplacian();
        let cols = family_columns(&g, &fine);
        for (set, &d) in coarse.sets.iter().zip(&coarse.degrees) {
            let mut p = DMatrix::identity(15, 15);
            for _ in 0..=d {
                let mut m = DMatrix::zeros(15, 15);
                for &v in set {
                    m.set_row(v, &p.row(v));
                }
                let target = DVector::from_column_slice(m.as_slice());
                prop_assert!(span_residual(&cols, &target) < 1e-8);
                p = &p * &l;
            }
        }
    }
}
