//! Experiment configuration and the trial runners behind each CLI subcommand.
//!
//! Every trial draws from its own RNG streams (`rng::trial_stream`), so results do not depend
//! on scheduling or on how many trials run.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::applications::{self, FourierBasis, TaskConfig};
use crate::embedding::{refine_default, Embedding, SubsetTuple};
use crate::error::{Error, Result};
use crate::filter::{main_spectral_set, spectral_profile};
use crate::generate::{generate_connected, GraphKind};
use crate::graph::{Graph, GraphSpectrum, ShiftKind};
use crate::io::{self, SummaryRow};
use crate::operators::{induced_laplacian, kron_reduce, Family, SubgraphOperator};
use crate::randgraph::{self, Model};
use crate::rng;
use crate::solvers::{
    build_omega_with, default_fixed, solve_filter_learning, solve_least_squares, solve_operator_difference, FitResult,
    FixedCoeff, SubgradientOptions,
};
use crate::sparsify::{self, SparsifyConfig};

/// Operator labels used in every output table.
pub const FITTED: &str = "F0*";
pub const INDUCED: &str = "L_H0";
pub const KRON: &str = "K";

const GRAPH: u8 = 0;
const SUBSET: u8 = 1;
const SIGNAL: u8 = 2;
const NOISE: u8 = 3;
const TARGET: u8 = 4;
const TEST: u8 = 5;
const SOLVER: u8 = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    Generate(GraphKind),
    /// Edge-list CSV with optional JSON sidecar.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V0Source {
    Explicit(Vec<usize>),
    File { path: PathBuf },
    /// Each vertex independently with probability p (redrawn until at least two are kept).
    Random { p: f64 },
}

impl Default for V0Source {
    fn default() -> Self {
        V0Source::Random { p: 0.4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    #[default]
    LeastSquares,
    OperatorDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Degree offset of the hop-class tuple.
    pub r: usize,
    pub refine: bool,
    /// Explicit tuple; overrides the hop-class construction.
    pub tuple: Option<SubsetTuple>,
    pub family: Family,
    pub problem: ProblemKind,
    pub delta: f64,
    pub fixed: Vec<FixedCoeff>,
    pub options: SubgradientOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            r: 2,
            refine: true,
            tuple: None,
            family: Family::SymZeroRow,
            problem: ProblemKind::LeastSquares,
            delta: 0.6,
            fixed: default_fixed(),
            options: SubgradientOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalConfig {
    /// Number of low-frequency eigenvectors mixed into bandlimited signals.
    pub bandwidth: usize,
    pub si_rate: f64,
    /// Test signals per trial (compress, detect, denoise).
    pub per_trial: usize,
    /// Training pairs T for filter learning.
    pub train: usize,
    /// Held-out pairs for filter learning.
    pub test: usize,
    /// Polynomial degree of the learned target filter.
    pub target_degree: usize,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self { bandwidth: 10, si_rate: 0.3, per_trial: 1, train: 10, test: 50, target_degree: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub models: Vec<Model>,
    pub q: Vec<f64>,
    /// Also enumerate exactly (small graphs only).
    pub exact: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { models: vec![Model::Vertex, Model::Edge], q: vec![0.3, 0.5, 0.7], exact: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    #[serde(default)]
    pub shift: Option<ShiftKind>,
    /// Replace edge weights by U(lo, hi) draws.
    #[serde(default)]
    pub random_weights: Option<[f64; 2]>,
    #[serde(default)]
    pub v0: V0Source,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub task: TaskConfig,
    #[serde(default)]
    pub signal: SignalConfig,
    /// Sweep values (θ_c, p, SNR or β depending on the task); empty means the task default.
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default)]
    pub sparsify: SparsifyConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default = "one")]
    pub trials: usize,
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(graph: GraphSource, seed: u64) -> Self {
        Self {
            graph,
            shift: None,
            random_weights: None,
            v0: V0Source::default(),
            fit: FitConfig::default(),
            task: TaskConfig::default(),
            signal: SignalConfig::default(),
            params: Vec::new(),
            sparsify: SparsifyConfig::default(),
            simulate: SimulateConfig::default(),
            trials: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let exists = |p: &PathBuf| {
            if p.exists() {
                Ok(())
            } else {
                Err(Error::Config(format!("{} does not exist", p.display())))
            }
        };
        if let GraphSource::File { path } = &self.graph {
            exists(path)?;
        }
        match &self.v0 {
            V0Source::File { path } => exists(path)?,
            V0Source::Random { p } if !(*p > 0.0 && *p <= 1.0) => {
                return Err(Error::Config(format!("v0 probability {p} outside (0, 1]")))
            }
            _ => {}
        }
        if let Some([lo, hi]) = self.random_weights {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::Config("random_weights needs 0 < lo ≤ hi".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.fit.delta) {
            return Err(Error::Config(format!("delta = {} outside [0, 1]", self.fit.delta)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be ≥ 1".into()));
        }
        if !(self.signal.si_rate > 0.0 && self.signal.si_rate <= 1.0) || self.signal.per_trial == 0 {
            return Err(Error::Config("signal settings out of range".into()));
        }
        if self.simulate.q.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::Config("simulate.q values must lie in [0, 1]".into()));
        }
        self.task.validate()?;
        self.sparsify.validate()
    }

    fn sweep(&self, default: Vec<f64>) -> Vec<f64> {
        if self.params.is_empty() {
            default
        } else {
            self.params.clone()
        }
    }
}

fn derived_seed(seed: u64, trial: usize, purpose: u8) -> u64 {
    rng::trial_stream(seed, trial as u64, purpose).gen()
}

/// Graph for `trial` (random generators draw a fresh instance per trial).
pub fn load_graph(cfg: &ExperimentConfig, trial: usize) -> Result<Graph> {
    let mut g = match &cfg.graph {
        GraphSource::Generate(kind) => generate_connected(kind, derived_seed(cfg.seed, trial, GRAPH), 1000)?,
        GraphSource::File { path } => io::read_edge_list(path)?,
    };
    if let Some(kind) = cfg.shift {
        g = g.with_shift(kind);
    }
    if let Some([lo, hi]) = cfg.random_weights {
        let mut r = rng::trial_stream(cfg.seed, trial as u64, GRAPH);
        r.set_word_pos(1 << 20);
        g = g.with_random_weights(lo, hi, &mut r);
    }
    Ok(g)
}

pub fn choose_v0(cfg: &ExperimentConfig, g: &Graph, trial: usize) -> Result<Vec<usize>> {
    match &cfg.v0 {
        V0Source::Explicit(ids) => Ok(ids.clone()),
        V0Source::File { path } => io::read_subset(path),
        V0Source::Random { p } => {
            let mut r = rng::trial_stream(cfg.seed, trial as u64, SUBSET);
            for _ in 0..10_000 {
                let v0: Vec<usize> = (0..g.n()).filter(|_| r.gen::<f64>() < *p).collect();
                if v0.len() >= 2 {
                    return Ok(v0);
                }
            }
            Err(Error::Config(format!("could not draw a subset with p = {p}")))
        }
    }
}

/// Graph, spectrum, subset and tuple of one trial.
#[derive(Clone, Debug)]
pub struct Setup {
    pub trial: usize,
    pub graph: Graph,
    pub spectrum: GraphSpectrum,
    pub embedding: Embedding,
    pub tuple: SubsetTuple,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig, trial: usize) -> Result<Self> {
        let graph = load_graph(cfg, trial)?;
        let v0 = choose_v0(cfg, &graph, trial)?;
        let embedding = Embedding::new(&graph, &v0)?;
        let tuple = match &cfg.fit.tuple {
            Some(t) => {
                t.check_range(graph.n())?;
                t.clone()
            }
            None => {
                let t = embedding.build_cvd(&graph, cfg.fit.r)?.tuple;
                if cfg.fit.refine {
                    refine_default(&t)
                } else {
                    t
                }
            }
        };
        let spectrum = graph.eigendecompose()?;
        Ok(Self { trial, graph, spectrum, embedding, tuple })
    }

    /// Fits (F*, F0*) with the configured problem.
    pub fn fit(&self, cfg: &ExperimentConfig) -> Result<FitResult> {
        let f = &cfg.fit;
        match f.problem {
            ProblemKind::LeastSquares => {
                let omega = build_omega_with(&self.spectrum, &self.embedding, f.delta)?;
                solve_least_squares(&self.graph, &self.embedding, &self.tuple, f.family, &omega, &f.fixed)
            }
            ProblemKind::OperatorDifference => {
                let mut opts = f.options.clone();
                opts.seed = derived_seed(cfg.seed, self.trial, SOLVER) ^ opts.seed;
                solve_operator_difference(&self.graph, &self.embedding, &self.tuple, f.family, &f.fixed, &opts)
            }
        }
    }

    pub fn induced(&self) -> SubgraphOperator {
        induced_laplacian(&self.graph, &self.embedding)
    }

    pub fn kron(&self) -> Result<SubgraphOperator> {
        kron_reduce(&self.graph, self.embedding.vertices())
    }

    /// F0*, L_H0 and K in that order.
    pub fn operators(&self, fit: &FitResult) -> Result<Vec<(&'static str, SubgraphOperator)>> {
        Ok(vec![(FITTED, fit.operator.clone()), (INDUCED, self.induced()), (KRON, self.kron()?)])
    }

    fn bases(&self, fit: &FitResult) -> Result<Vec<(&'static str, FourierBasis)>> {
        self.operators(fit)?.into_iter().map(|(l, op)| Ok((l, FourierBasis::new(&op)?))).collect()
    }

    fn real_spectrum(&self) -> Result<&crate::graph::Spectrum> {
        self.spectrum.as_real().ok_or_else(|| Error::InvalidGraph("task needs a symmetric shift".into()))
    }
}

/// One measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub operator: String,
    pub param: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub rows: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutput {
    fn from_rows(rows: Vec<TrialRow>, operators: &[&str], params: &[f64]) -> Self {
        let summary = params
            .iter()
            .flat_map(|&p| {
                let rows = &rows;
                operators.iter().map(move |&op| {
                    let vals: Vec<f64> =
                        rows.iter().filter(|r| r.operator == op && r.param == p).map(|r| r.value).collect();
                    SummaryRow::from_values(op, p, &vals)
                })
            })
            .collect();
        Self { rows, summary }
    }

    pub fn get(&self, operator: &str, param: f64) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.operator == operator && s.param == param)
    }
}

fn run_trials<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<TrialRow>>
where
    F: Fn(usize) -> Result<Vec<TrialRow>> + Sync,
{
    let per: Vec<Vec<TrialRow>> = (0..cfg.trials).into_par_iter().map(&f).collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

fn row(trial: usize, operator: &str, param: f64, value: f64) -> TrialRow {
    TrialRow { trial, operator: operator.into(), param, value }
}

const OPERATORS: [&str; 3] = [FITTED, INDUCED, KRON];

/// Relative compression error of bandlimited signals; sweep over θ_c.
pub fn run_compress(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let thetas = cfg.sweep(vec![cfg.task.theta_c]);
    let rows = run_trials(cfg, |t| {
        let s = Setup::new(cfg, t)?;
        let fit = s.fit(cfg)?;
        let bases = s.bases(&fit)?;
        let spec = s.real_spectrum()?;
        let mut r = rng::trial_stream(cfg.seed, t as u64, SIGNAL);
        let mut out = Vec::new();
        for _ in 0..cfg.signal.per_trial {
            let x = s.embedding.project(&applications::bandlimited(spec, cfg.signal.bandwidth, &mut r)?)?;
            for (label, b) in &bases {
                let c = b.gft(&x)?;
                for &theta in &thetas {
                    out.push(row(t, label, theta, b.compress(&c, theta)?.1));
                }
            }
        }
        Ok(out)
    })?;
    Ok(ExperimentOutput::from_rows(rows, &OPERATORS, &thetas))
}

/// Detection indicator (0/1) for a single-vertex perturbation of size p; sweep over p. The
/// perturbed vertex and sign are shared across p within a signal.
pub fn run_detect(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let ps = cfg.sweep(vec![cfg.task.p]);
    let rows = run_trials(cfg, |t| {
        let s = Setup::new(cfg, t)?;
        let fit = s.fit(cfg)?;
        let bases = s.bases(&fit)?;
        let spec = s.real_spectrum()?;
        let mut r = rng::trial_stream(cfg.seed, t as u64, SIGNAL);
        let mut pr = rng::trial_stream(cfg.seed, t as u64, NOISE);
        let mut out = Vec::new();
        for _ in 0..cfg.signal.per_trial {
            let x = s.embedding.project(&applications::bandlimited(spec, cfg.signal.bandwidth, &mut r)?)?;
            let pseed: u64 = pr.gen();
            for &p in &ps {
                let (xa, _) = applications::perturb_one(&x, p, &mut rng::from_seed(pseed));
                for (label, b) in &bases {
                    let m_ref = applications::anomaly_score(&b.gft(&x)?, cfg.task.theta_a)?;
                    let m_test = applications::anomaly_score(&b.gft(&xa)?, cfg.task.theta_a)?;
                    let hit = applications::detect(m_ref, m_test, cfg.task.tau)?;
                    out.push(row(t, label, p, if hit { 1.0 } else { 0.0 }));
                }
            }
        }
        Ok(out)
    })?;
    Ok(ExperimentOutput::from_rows(rows, &OPERATORS, &ps))
}

/// Error ratio r_e of spectral shrinkage on noisy SI timestamps; sweep over SNR (dB).
pub fn run_denoise(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let snrs = cfg.sweep(vec![cfg.task.snr_db]);
    let rows = run_trials(cfg, |t| {
        let s = Setup::new(cfg, t)?;
        let fit = s.fit(cfg)?;
        let bases = s.bases(&fit)?;
        let mut r = rng::trial_stream(cfg.seed, t as u64, SIGNAL);
        let mut nr = rng::trial_stream(cfg.seed, t as u64, NOISE);
        let mut out = Vec::new();
        for _ in 0..cfg.signal.per_trial {
            let x = s.embedding.project(&applications::si_timestamps(&s.graph, cfg.signal.si_rate, &mut r)?)?;
            let nseed: u64 = nr.gen();
            for &snr in &snrs {
                let noisy = applications::add_noise_snr(&x, snr, &mut rng::from_seed(nseed))?;
                for (label, b) in &bases {
                    let den = b.denoise(&noisy, cfg.task.theta_d, cfg.task.s_d)?;
                    out.push(row(t, label, snr, applications::error_ratio(&x, &noisy, &den)?));
                }
            }
        }
        Ok(out)
    })?;
    Ok(ExperimentOutput::from_rows(rows, &OPERATORS, &snrs))
}

/// Least-squares polynomial Σ_k b_k B^k fitted to the training pairs.
fn polynomial_regression(b: &DMatrix<f64>, data: &[(DVector<f64>, DVector<f64>)], degree: usize) -> DMatrix<f64> {
    let m = b.nrows();
    let mut powers = vec![DMatrix::identity(m, m)];
    for k in 1..=degree {
        let next = &powers[k - 1] * b;
        powers.push(next);
    }
    let rows = data.len() * m;
    let design = DMatrix::from_fn(rows, degree + 1, |i, k| (&powers[k] * &data[i / m].0)[i % m]);
    let target = DVector::from_fn(rows, |i, _| data[i / m].1[i % m]);
    let coef = design.svd(true, true).solve(&target, 1e-12).expect("SVD computed with both factors");
    powers.iter().zip(coef.iter()).fold(DMatrix::zeros(m, m), |acc, (p, c)| acc + p * *c)
}

/// Mean held-out recovery error ‖P z − F0 P y‖ of filter learning; sweep over β. Baselines
/// L_H0 and K are degree-matched polynomials in those operators fitted to the same data.
pub fn run_learn(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let betas = cfg.sweep(vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
    let deg = cfg.signal.target_degree;
    let rows = run_trials(cfg, |t| {
        let s = Setup::new(cfg, t)?;
        let spec = s.real_spectrum()?;
        let n = s.graph.n();
        let shift = s.graph.shift_matrix();
        let mut ar = rng::trial_stream(cfg.seed, t as u64, TARGET);
        let mut target = DMatrix::zeros(n, n);
        let mut power = DMatrix::identity(n, n);
        for _ in 0..=deg {
            target += &power * ar.gen::<f64>();
            power = &power * &shift;
        }
        let pairs = |count: usize, purpose: u8| -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
            let mut r = rng::trial_stream(cfg.seed, t as u64, purpose);
            (0..count)
                .map(|_| {
                    let y = applications::bandlimited(spec, n, &mut r)?;
                    Ok((s.embedding.project(&y)?, s.embedding.project(&(&target * &y))?))
                })
                .collect()
        };
        let train = pairs(cfg.signal.train, SIGNAL)?;
        let test = pairs(cfg.signal.test, TEST)?;
        let err = |f0: &DMatrix<f64>| {
            test.iter().map(|(x, z)| (z - f0 * x).norm()).sum::<f64>() / test.len().max(1) as f64
        };
        let omega = build_omega_with(&s.spectrum, &s.embedding, cfg.fit.delta)?;
        let e_ind = err(&polynomial_regression(&s.induced().matrix, &train, deg));
        let e_kron = err(&polynomial_regression(&s.kron()?.matrix, &train, deg));
        let mut out = Vec::new();
        for &beta in &betas {
            let fit = solve_filter_learning(
                &s.graph,
                &s.embedding,
                &s.tuple,
                cfg.fit.family,
                &train,
                beta,
                &omega,
                &cfg.fit.fixed,
            )?;
            out.push(row(t, FITTED, beta, err(&fit.operator.matrix)));
            out.push(row(t, INDUCED, beta, e_ind));
            out.push(row(t, KRON, beta, e_kron));
        }
        Ok(out)
    })?;
    Ok(ExperimentOutput::from_rows(rows, &OPERATORS, &betas))
}

/// Eigenvalues of F0* beside the main spectral set of F*, both ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub f0_eigenvalue: f64,
    pub main_re: f64,
    pub main_im: f64,
}

/// Per-trial structure statistics: components of H0 and the main component of F*.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureRow {
    pub trial: usize,
    pub mean_degree: f64,
    pub v0_size: usize,
    pub h0_components: usize,
    pub main_component_size: usize,
    pub main_component_fraction: f64,
    pub groups: usize,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumOutput {
    /// From trial 0.
    pub spectrum: Vec<SpectrumRow>,
    pub structure: Vec<StructureRow>,
    pub summary: Vec<SummaryRow>,
}

pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<SpectrumOutput> {
    cfg.validate()?;
    let per: Vec<(Option<Vec<SpectrumRow>>, StructureRow)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let s = Setup::new(cfg, t)?;
            let fit = s.fit(cfg)?;
            let main = main_spectral_set(&spectral_profile(&fit.filter, &s.spectrum), None);
            let (h0, _) = s.graph.induced_subgraph(s.embedding.vertices());
            let m = s.embedding.len();
            let st = StructureRow {
                trial: t,
                mean_degree: s.graph.mean_degree(),
                v0_size: m,
                h0_components: h0.components().len(),
                main_component_size: main.component.len(),
                main_component_fraction: main.component.len() as f64 / m as f64,
                groups: main.groups,
                loss: fit.loss,
            };
            let rows = (t == 0).then(|| {
                let (mu, _) = crate::linalg::sym_eigen(&crate::linalg::symmetrize(&fit.operator.matrix));
                let mut lam = main.values.clone();
                lam.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
                (0..mu.len().max(lam.len()))
                    .map(|i| SpectrumRow {
                        index: i,
                        f0_eigenvalue: mu.get(i).copied().unwrap_or(f64::NAN),
                        main_re: lam.get(i).map_or(f64::NAN, |z| z.re),
                        main_im: lam.get(i).map_or(f64::NAN, |z| z.im),
                    })
                    .collect()
            });
            Ok((rows, st))
        })
        .collect::<Result<_>>()?;
    let spectrum = per.iter().find_map(|(r, _)| r.clone()).unwrap_or_default();
    let structure: Vec<StructureRow> = per.into_iter().map(|(_, s)| s).collect();
    let col = |f: &dyn Fn(&StructureRow) -> f64| structure.iter().map(f).collect::<Vec<_>>();
    let summary = vec![
        SummaryRow::from_values("mean_degree", 0.0, &col(&|s| s.mean_degree)),
        SummaryRow::from_values("v0_size", 0.0, &col(&|s| s.v0_size as f64)),
        SummaryRow::from_values("h0_components", 0.0, &col(&|s| s.h0_components as f64)),
        SummaryRow::from_values("main_component_fraction", 0.0, &col(&|s| s.main_component_fraction)),
    ];
    Ok(SpectrumOutput { spectrum, structure, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsifyReport {
    pub epsilon: f64,
    pub family: Family,
    pub nonzero_before: usize,
    pub nonzero_after: usize,
    /// ε-approximation of the sparsified part(s).
    pub eps_check: bool,
    /// Largest row L¹ norm of F0*.
    pub r_max: f64,
    pub loss_before: f64,
}

/// Fits trial 0 and sparsifies F0*.
pub fn run_sparsify(cfg: &ExperimentConfig) -> Result<(SubgraphOperator, SparsifyReport)> {
    cfg.validate()?;
    let s = Setup::new(cfg, 0)?;
    let fit = s.fit(cfg)?;
    let (h0, _) = s.graph.induced_subgraph(s.embedding.vertices());
    let eps = cfg.sparsify.epsilon;
    let seed = derived_seed(cfg.seed, 0, NOISE);
    let sparse = sparsify::sparsify_operator(&fit.operator, &h0, eps, seed)?;
    let report = SparsifyReport {
        epsilon: eps,
        family: fit.operator.family,
        nonzero_before: fit.operator.nonzero_params(),
        nonzero_after: sparse.nonzero_params(),
        eps_check: sparsified_parts_check(&fit.operator, &sparse, &h0, eps)?,
        r_max: row_l1_max(&fit.operator.matrix),
        loss_before: fit.loss,
    };
    Ok((sparse, report))
}

/// ε-check on the part that was sparsified (both signed parts at ε/2 for sym_zero_row).
pub fn sparsified_parts_check(
    before: &SubgraphOperator,
    after: &SubgraphOperator,
    h0: &Graph,
    eps: f64,
) -> Result<bool> {
    match before.family {
        Family::Extension => {
            let base = h0.laplacian();
            sparsify::eps_approx_check(&(&before.matrix - &base), &(&after.matrix - &base), eps)
        }
        Family::AnyLaplacian => sparsify::eps_approx_check(&before.matrix, &after.matrix, eps),
        Family::SymZeroRow => {
            let (bp, bn) = sparsify::split_signed(&before.matrix);
            let (ap, an) = sparsify::split_signed(&after.matrix);
            Ok(sparsify::eps_approx_check(&bp, &ap, eps / 2.0)? && sparsify::eps_approx_check(&bn, &an, eps / 2.0)?)
        }
        Family::DirectedAdjacency => Err(Error::FamilyUnsupported(before.family.name().into())),
    }
}

pub fn row_l1_max(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest-component histogram entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub model: Model,
    pub q: f64,
    pub k: usize,
    pub frequency: f64,
    pub tail_frequency: f64,
    pub probability: Option<f64>,
    pub tail_probability: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateOutput {
    pub histogram: Vec<HistogramRow>,
    pub summary: Vec<SummaryRow>,
}

/// Monte Carlo (and optionally exact) largest-component distributions on the configured graph.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulateOutput> {
    cfg.validate()?;
    let g = load_graph(cfg, 0)?;
    let mut histogram = Vec::new();
    let mut summary = Vec::new();
    for (mi, &model) in cfg.simulate.models.iter().enumerate() {
        for (qi, &q) in cfg.simulate.q.iter().enumerate() {
            let seed = rng::stream(cfg.seed, ((mi as u64) << 32) | qi as u64).gen();
            let mc = randgraph::monte_carlo_stats(&g, model, q, cfg.trials, seed)?;
            let exact = if cfg.simulate.exact { Some(randgraph::exact_distribution(&g, model, q)?) } else { None };
            let freq: Vec<f64> = (0..=g.n()).map(|k| mc.frequency(k)).collect();
            for k in 0..=g.n() {
                histogram.push(HistogramRow {
                    model,
                    q,
                    k,
                    frequency: freq[k],
                    tail_frequency: randgraph::tail(&freq, k),
                    probability: exact.as_ref().map(|d| d[k]),
                    tail_probability: exact.as_ref().map(|d| randgraph::tail(d, k)),
                });
            }
            let name = match model {
                Model::Vertex => "vertex",
                Model::Edge => "edge",
            };
            let se = |mean: f64, hist: &[usize]| {
                let var = hist.iter().enumerate().map(|(k, &c)| c as f64 * (k as f64 - mean).powi(2)).sum::<f64>()
                    / (mc.trials.max(2) - 1) as f64;
                (var / mc.trials as f64).sqrt()
            };
            summary.push(SummaryRow {
                operator: format!("{name}_largest"),
                param: q,
                mean: mc.mean_largest,
                stderr: se(mc.mean_largest, &mc.largest_hist),
                trials: mc.trials,
            });
            summary.push(SummaryRow {
                operator: format!("{name}_components"),
                param: q,
                mean: mc.mean_components,
                stderr: mc.stderr_components,
                trials: mc.trials,
            });
        }
    }
    Ok(SimulateOutput { histogram, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub tuple: SubsetTuple,
    pub essential: bool,
    pub dimension: usize,
    /// Σ d_i + k, the value for an essential tuple on a generic graph.
    pub essential_formula: usize,
    pub generic: bool,
}

pub fn run_dim(cfg: &ExperimentConfig) -> Result<DimensionReport> {
    cfg.validate()?;
    let s = Setup::new(cfg, 0)?;
    let t = s.tuple.clone().clamp_degrees(s.graph.n());
    Ok(DimensionReport {
        essential: t.is_essential(),
        dimension: crate::embedding::family_dimension(&s.graph, &t),
        essential_formula: t.degrees.iter().sum::<usize>() + t.len(),
        generic: crate::embedding::genericity_check(&s.graph)?.generic,
        tuple: t,
    })
}
