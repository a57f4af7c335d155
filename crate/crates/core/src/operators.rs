//! Candidate operators F0 on V0: parametrized families, the induced Laplacian and Kron reduction.

use std::collections::HashSet;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// L_{H0} plus nonnegative weights on pairs outside E0.
    Extension,
    /// Any weighted Laplacian on V0.
    AnyLaplacian,
    /// Symmetric matrices with zero row sums, sign unconstrained.
    SymZeroRow,
    /// Nonnegative weighted directed adjacency with zero diagonal.
    DirectedAdjacency,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Extension => "extension",
            Family::AnyLaplacian => "any_laplacian",
            Family::SymZeroRow => "sym_zero_row",
            Family::DirectedAdjacency => "directed_adjacency",
        }
    }

    /// Parameters constrained to be ≥ 0.
    pub fn nonnegative(&self) -> bool {
        !matches!(self, Family::SymZeroRow)
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Family::DirectedAdjacency)
    }
}

/// Basis matrix multiplying one parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Element {
    /// (e_u − e_v)(e_u − e_v)ᵀ: weight on an undirected pair.
    Pair(usize, usize),
    /// e_u e_vᵀ: a single directed entry.
    Entry(usize, usize),
}

impl Element {
    /// m += w · E.
    pub fn add_to(&self, m: &mut DMatrix<f64>, w: f64) {
        match *self {
            Element::Pair(u, v) => {
                m[(u, u)] += w;
                m[(v, v)] += w;
                m[(u, v)] -= w;
                m[(v, u)] -= w;
            }
            Element::Entry(u, v) => m[(u, v)] += w,
        }
    }

    /// ⟨E, C⟩ = tr(Eᵀ C).
    pub fn inner(&self, c: &DMatrix<f64>) -> f64 {
        match *self {
            Element::Pair(u, v) => c[(u, u)] + c[(v, v)] - c[(u, v)] - c[(v, u)],
            Element::Entry(u, v) => c[(u, v)],
        }
    }

    /// ⟨E_a X, E_b X⟩ = tr(E_aᵀ E_b G) with G = X Xᵀ.
    pub fn gram(a: &Element, b: &Element, g: &DMatrix<f64>) -> f64 {
        match (*a, *b) {
            (Element::Pair(u, v), Element::Pair(s, t)) => {
                // (b_aᵀ b_b)(b_bᵀ G b_a)
                let dot = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
                let bb = dot(u, s) - dot(u, t) - dot(v, s) + dot(v, t);
                if bb == 0.0 {
                    return 0.0;
                }
                bb * (g[(s, u)] - g[(s, v)] - g[(t, u)] + g[(t, v)])
            }
            (Element::Entry(u, v), Element::Entry(s, t)) => {
                if u == s {
                    g[(t, v)]
                } else {
                    0.0
                }
            }
            (x, y) => {
                let m = g.nrows();
                let mut ea = DMatrix::zeros(m, m);
                let mut eb = DMatrix::zeros(m, m);
                x.add_to(&mut ea, 1.0);
                y.add_to(&mut eb, 1.0);
                linalg::frob_inner(&ea, &(eb * g))
            }
        }
    }
}

/// F0(p) = base + Σ_k p_k E_k.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamLayout {
    pub family: Family,
    pub base: DMatrix<f64>,
    pub elements: Vec<Element>,
}

impl ParamLayout {
    /// `h0` is the induced subgraph on V0 (vertices relabelled 0..|V0|).
    pub fn new(family: Family, h0: &Graph) -> Self {
        let m = h0.n();
        let pairs = (0..m).flat_map(|u| (u + 1..m).map(move |v| (u, v)));
        match family {
            Family::Extension => {
                let e0: HashSet<(usize, usize)> =
                    h0.edges().iter().map(|e| (e.src.min(e.dst), e.src.max(e.dst))).collect();
                let elements = pairs.filter(|p| !e0.contains(p)).map(|(u, v)| Element::Pair(u, v)).collect();
                Self { family, base: h0.laplacian(), elements }
            }
            Family::AnyLaplacian | Family::SymZeroRow => {
                Self { family, base: DMatrix::zeros(m, m), elements: pairs.map(|(u, v)| Element::Pair(u, v)).collect() }
            }
            Family::DirectedAdjacency => {
                let elements = (0..m)
                    .flat_map(|u| (0..m).filter(move |&v| v != u).map(move |v| Element::Entry(u, v)))
                    .collect();
                Self { family, base: DMatrix::zeros(m, m), elements }
            }
        }
    }

    /// Restricts the free parameters to the listed indices.
    pub fn restricted(&self, keep: &[usize]) -> Self {
        Self { family: self.family, base: self.base.clone(), elements: keep.iter().map(|&k| self.elements[k]).collect() }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    /// Matrix for the given parameters, without clamping.
    pub fn matrix(&self, params: &[f64]) -> DMatrix<f64> {
        let mut m = self.base.clone();
        for (e, &p) in self.elements.iter().zip(params) {
            e.add_to(&mut m, p);
        }
        m
    }

    /// Parameters reproducing `m` on this layout's support.
    pub fn params_of(&self, m: &DMatrix<f64>) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| match *e {
                Element::Pair(u, v) => -(m[(u, v)] - self.base[(u, v)]),
                Element::Entry(u, v) => m[(u, v)] - self.base[(u, v)],
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgraphOperator {
    pub family: Family,
    /// Original ids of the rows/columns.
    pub v0: Vec<usize>,
    #[serde(with = "crate::linalg::serde_matrix")]
    pub matrix: DMatrix<f64>,
    /// Matrix entry (u, v) governed by each free parameter.
    pub param_index: Vec<(usize, usize)>,
}

impl SubgraphOperator {
    /// Builds a family member; Laplacian-type families clamp parameters at zero.
    pub fn from_params(family: Family, h0: &Graph, v0: &[usize], params: &[f64]) -> Result<Self> {
        let layout = ParamLayout::new(family, h0);
        if params.len() != layout.len() {
            return Err(Error::BadParamCount { expected: layout.len(), got: params.len() });
        }
        let clamped: Vec<f64> =
            params.iter().map(|&p| if family.nonnegative() { p.max(0.0) } else { p }).collect();
        Ok(Self::from_layout(&layout, v0, &clamped))
    }

    pub fn from_layout(layout: &ParamLayout, v0: &[usize], params: &[f64]) -> Self {
        Self {
            family: layout.family,
            v0: v0.to_vec(),
            matrix: layout.matrix(params),
            param_index: layout
                .elements
                .iter()
                .map(|e| match *e {
                    Element::Pair(u, v) | Element::Entry(u, v) => (u, v),
                })
                .collect(),
        }
    }

    pub fn from_matrix(family: Family, v0: &[usize], matrix: DMatrix<f64>) -> Self {
        let m = matrix.nrows();
        let param_index = match family {
            Family::DirectedAdjacency => {
                (0..m).flat_map(|u| (0..m).filter(move |&v| v != u).map(move |v| (u, v))).collect()
            }
            _ => (0..m).flat_map(|u| (u + 1..m).map(move |v| (u, v))).collect(),
        };
        Self { family, v0: v0.to_vec(), matrix, param_index }
    }

    /// Free parameters (negated off-diagonals for symmetric families, entries otherwise).
    pub fn to_params(&self) -> Vec<f64> {
        self.param_index
            .iter()
            .map(|&(u, v)| if self.family.is_symmetric() { -self.matrix[(u, v)] } else { self.matrix[(u, v)] })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of nonzero off-diagonal pairs.
    pub fn nonzero_params(&self) -> usize {
        self.to_params().iter().filter(|p| p.abs() > 1e-12).count()
    }

    /// Checks the family invariants.
    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        let scale = m.amax().max(1.0);
        let bad = |msg: &str| Err(Error::InvalidParams(format!("{} operator: {msg}", self.family.name())));
        if self.family.is_symmetric() {
            if (m - m.transpose()).amax() > 1e-12 * scale {
                return bad("not symmetric");
            }
            if (m * DVector::from_element(m.ncols(), 1.0)).amax() > 1e-10 * scale {
                return bad("rows do not sum to zero");
            }
        }
        if matches!(self.family, Family::Extension | Family::AnyLaplacian) {
            for u in 0..m.nrows() {
                for v in 0..m.ncols() {
                    if u != v && m[(u, v)] > 1e-12 * scale {
                        return bad("positive off-diagonal");
                    }
                }
            }
        }
        Ok(())
    }

    /// Orthonormal eigenbasis ordered by |μ|, ties by signed value.
    pub fn eigenbasis_magnitude_ordered(&self) -> Result<OrderedEigenbasis> {
        if !self.family.is_symmetric() {
            return Err(Error::FamilyUnsupported(self.family.name().into()));
        }
        Ok(OrderedEigenbasis::of_symmetric(&self.matrix))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderedEigenbasis {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl OrderedEigenbasis {
    pub fn of_symmetric(m: &DMatrix<f64>) -> Self {
        let (vals, vecs) = linalg::sym_eigen(m);
        let scale = vals.amax().max(1e-300);
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (vals[a], vals[b]);
            let mag = if (x.abs() - y.abs()).abs() <= 1e-12 * scale {
                std::cmp::Ordering::Equal
            } else {
                x.abs().total_cmp(&y.abs())
            };
            mag.then(x.total_cmp(&y)).then(a.cmp(&b))
        });
        let (values, vectors) = linalg::reorder(&vals, &vecs, &order);
        Self { values, vectors }
    }
}

/// L_{H0}, the Laplacian of the induced subgraph.
pub fn induced_laplacian(g: &Graph, e: &Embedding) -> SubgraphOperator {
    let (h0, ids) = g.induced_subgraph(e.vertices());
    SubgraphOperator::from_matrix(Family::AnyLaplacian, &ids, h0.laplacian())
}

/// Schur complement of the Laplacian onto V0.
pub fn kron_reduce(g: &Graph, v0: &[usize]) -> Result<SubgraphOperator> {
    if g.is_directed() {
        return Err(Error::InvalidGraph("Kron reduction needs an undirected graph".into()));
    }
    let mut ids = v0.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let inside: HashSet<usize> = ids.iter().copied().collect();
    let interior: Vec<usize> = (0..g.n()).filter(|v| !inside.contains(v)).collect();
    let l = g.laplacian();
    let sub = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| l[(r[i], c[j])]);
    let l00 = sub(&ids, &ids);
    if interior.is_empty() {
        return Ok(SubgraphOperator::from_matrix(Family::AnyLaplacian, &ids, l00));
    }
    let l11 = sub(&interior, &interior);
    let l01 = sub(&ids, &interior);
    let (vals, _) = linalg::sym_eigen(&l11);
    let cond = if vals.min() > 0.0 { vals.max() / vals.min() } else { f64::INFINITY };
    if cond > 1e12 {
        return Err(Error::SingularInterior(cond));
    }
    let chol = Cholesky::new(l11).ok_or(Error::SingularInterior(cond))?;
    let k = &l00 - &l01 * chol.solve(&l01.transpose());
    Ok(SubgraphOperator::from_matrix(Family::AnyLaplacian, &ids, linalg::symmetrize(&k)))
}
