//! Subgraph signal processing.
//!
//! Signals live on a graph G but are observed only on a vertex subset V0. The crate fits a
//! pair (F, F0) — a semi-shift-invariant filter F on G and an operator F0 on V0 with
//! P∘F ≈ F0∘P — and uses F0's eigenbasis as a Fourier basis on V0 for compression, anomaly
//! detection, denoising and filter learning.

pub mod applications;
pub mod embedding;
pub mod error;
pub mod experiments;
pub mod filter;
pub mod generate;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod randgraph;
pub mod rng;
pub mod solvers;
pub mod sparsify;

pub use embedding::{CvdTuple, Embedding, SubsetTuple};
pub use error::{Error, Result};
pub use filter::{main_spectral_set, spectral_profile, MainSpectralSet, SemiFilter, SpectralProfile};
pub use generate::{generate, GraphKind};
pub use graph::{ComplexSpectrum, Edge, Graph, GraphSpectrum, ShiftKind, Spectrum};
pub use operators::{kron_reduce, Family, OrderedEigenbasis, SubgraphOperator};
pub use solvers::{FitResult, FixedCoeff, OmegaSet, SolverInfo};

pub use nalgebra;
